//! Criterion benchmarks for the optimizer blocks live under `benches/`.
