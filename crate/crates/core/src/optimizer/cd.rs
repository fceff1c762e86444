use std::f64::consts::PI;

use num_complex::Complex64;

use crate::channel::codebook_phasor;
use crate::numerics::{quartic_roots, unit_circle_roots, QuarticCoefficients};
use crate::objective::{CdCoefficients, PortContributions};

/// Distance from the unit circle within which a quartic root counts as unimodular.
const UNIT_ROOT_TOL: f64 = 1e-6;
/// Above this codebook size only the projected and current values are compared.
const FULL_CODEBOOK_LIMIT: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct CdOutcome {
    pub phase_idx: Vec<usize>,
    /// Leakage after each full sweep.
    pub sweep_leakage: Vec<f64>,
    /// Codebook projection of the continuous minimizer at each step, if any.
    pub projected: Vec<Option<usize>>,
}

/// Angle on `[0, 2π)` minimizing `Re{αu + βu²}` over the unit circle, found among the
/// unimodular roots of the stationarity quartic. `None` when `α = β = 0`.
pub fn continuous_minimizer(alpha: Complex64, beta: Complex64) -> Option<f64> {
    let roots = quartic_roots(&QuarticCoefficients::stationarity(alpha, beta)).ok()?;
    let mut candidates = unit_circle_roots(&roots, UNIT_ROOT_TOL);
    if candidates.is_empty() {
        // severe round-off only; the closest-to-circle roots are still stationary points
        candidates = roots.iter().filter(|u| u.norm() > 0.0).map(|u| u / u.norm()).collect();
    }
    let psi = |u: Complex64| (alpha * u + beta * u * u).re;
    candidates
        .into_iter()
        .min_by(|a, b| psi(*a).total_cmp(&psi(*b)))
        .map(|u| u.arg().rem_euclid(2.0 * PI))
}

/// Nearest codebook index to `theta`.
pub fn project_to_codebook(theta: f64, size: usize) -> usize {
    let k = (size as f64 * theta.rem_euclid(2.0 * PI) / (2.0 * PI)).round() as usize;
    k % size
}

/// Coordinate descent over the discrete phases of the selected ports.
///
/// Each accepted value is the exact scalar-objective argmin over the projected
/// continuous minimizer, the current value and (for small codebooks) every
/// codebook entry, so no step increases the leakage.
pub fn cd_refine_phases(
    pc: &PortContributions,
    ports: &[usize],
    phase_init: &[usize],
    codebook_size: usize,
    sweeps: usize,
) -> CdOutcome {
    let mut phase_idx = phase_init.to_vec();
    let mut sweep_leakage = Vec::with_capacity(sweeps);
    let mut projected = Vec::with_capacity(sweeps * ports.len());
    for _ in 0..sweeps {
        let phasors: Vec<Complex64> = phase_idx.iter().map(|&k| codebook_phasor(k, codebook_size)).collect();
        let mut g = pc.aligned_gain(ports, &phasors);
        for (l, &p) in ports.iter().enumerate() {
            let a = pc.columns.column(p);
            let current = codebook_phasor(phase_idx[l], codebook_size);
            let y_minus = &g - a * current;
            let coef = CdCoefficients::from_parts(&y_minus, &a.into_owned(), pc.kappa);
            if coef.is_zero() {
                projected.push(None);
                continue;
            }
            let proj = continuous_minimizer(coef.alpha, coef.beta).map(|t| project_to_codebook(t, codebook_size));
            projected.push(proj);

            let mut best = phase_idx[l];
            let mut best_value = coef.eval(current);
            let mut consider = |k: usize| {
                let v = coef.eval(codebook_phasor(k, codebook_size));
                if v < best_value {
                    best = k;
                    best_value = v;
                }
            };
            if let Some(k) = proj {
                consider(k);
            }
            if codebook_size <= FULL_CODEBOOK_LIMIT {
                (0..codebook_size).for_each(&mut consider);
            }
            if best != phase_idx[l] {
                phase_idx[l] = best;
                g = y_minus + a * codebook_phasor(best, codebook_size);
            }
        }
        let phasors: Vec<Complex64> = phase_idx.iter().map(|&k| codebook_phasor(k, codebook_size)).collect();
        sweep_leakage.push(pc.leakage(ports, &phasors));
    }
    CdOutcome { phase_idx, sweep_leakage, projected }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::ComplexVector;
    use crate::numerics::ComplexMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn hand_solved_minimizers() {
        let t = continuous_minimizer(c(1.0, 0.0), c(0.0, 0.0)).unwrap();
        assert!((t - PI).abs() < 1e-9);
        assert_eq!(project_to_codebook(t, 4), 2);
        let t = continuous_minimizer(c(0.0, 0.0), c(1.0, 0.0)).unwrap();
        assert!((t - PI / 2.0).abs() < 1e-9 || (t - 1.5 * PI).abs() < 1e-9, "{t}");
        assert!(continuous_minimizer(c(0.0, 0.0), c(0.0, 0.0)).is_none());
    }

    #[test]
    fn projection_wraps() {
        assert_eq!(project_to_codebook(2.0 * PI - 1e-9, 8), 0);
        assert_eq!(project_to_codebook(-PI / 4.0, 8), 7);
        assert_eq!(project_to_codebook(PI / 8.0 + 1e-12, 8), 1);
    }

    #[test]
    fn minimizer_matches_dense_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let grid = 1_000_000;
        for _ in 0..5 {
            let alpha = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let beta = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let psi = |t: f64| (alpha * Complex64::from_polar(1.0, t) + beta * Complex64::from_polar(1.0, 2.0 * t)).re;
            let t = continuous_minimizer(alpha, beta).unwrap();
            let (gt, gv) = (0..grid)
                .map(|k| 2.0 * PI * k as f64 / grid as f64)
                .map(|t| (t, psi(t)))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap();
            let gap = (t - gt).abs().min(2.0 * PI - (t - gt).abs());
            assert!(gap <= 1e-3 || psi(t) <= gv + 1e-8, "{t} vs {gt}");
        }
    }

    fn random_contributions(rng: &mut ChaCha8Rng, kappa: Complex64) -> PortContributions {
        let (n_r, n) = (6, 8);
        PortContributions {
            base: ComplexVector::from_fn(n_r, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))),
            columns: ComplexMatrix::from_fn(n_r, n, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))),
            kappa,
        }
    }

    #[test]
    fn sweeps_never_increase_and_reach_coordinate_optimum() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for trial in 0..200 {
            let kappa = if trial % 2 == 0 { c(0.0, 0.0) } else { c(1.0, 0.0) };
            let pc = random_contributions(&mut rng, kappa);
            let ports = [1, 4, 6];
            let init = [rng.gen_range(0..8), rng.gen_range(0..8), rng.gen_range(0..8)];
            let start = pc.leakage(&ports, &init.map(|k| codebook_phasor(k, 8)));
            let out = cd_refine_phases(&pc, &ports, &init, 8, 20);
            let mut prev = start;
            for &v in &out.sweep_leakage {
                assert!(v <= prev + 1e-12 * prev.max(1.0));
                prev = v;
            }
            let leak = |idx: &[usize]| {
                pc.leakage(&ports, &idx.iter().map(|&k| codebook_phasor(k, 8)).collect::<Vec<_>>())
            };
            let fixed = leak(&out.phase_idx);
            for l in 0..3 {
                for k in 0..8 {
                    let mut moved = out.phase_idx.clone();
                    moved[l] = k;
                    assert!(leak(&moved) >= fixed - 1e-12 * fixed.max(1.0));
                }
            }
        }
    }

    #[test]
    fn dead_coordinate_keeps_its_phase() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let mut pc = random_contributions(&mut rng, c(1.0, 0.0));
        pc.columns.column_mut(2).fill(c(0.0, 0.0));
        let out = cd_refine_phases(&pc, &[2, 5], &[3, 0], 8, 2);
        assert_eq!(out.phase_idx[0], 3);
        assert_eq!(out.projected[0], None);
    }
}
