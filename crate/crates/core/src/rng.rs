//! Deterministic random streams.
//!
//! Every Monte-Carlo trial owns independent streams derived purely from
//! `(master_seed, trial, purpose)`, so trial order and worker count never
//! change results.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Stream purposes within one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Channel = 1,
    OptimizerFris = 2,
    OptimizerRis = 3,
    Symbols = 4,
    Validation = 5,
}

pub fn stream(master_seed: u64, trial: u64, purpose: Purpose) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream((trial << 8) | purpose as u64);
    rng
}
