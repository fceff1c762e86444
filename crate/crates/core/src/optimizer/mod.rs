//! Alternating optimization of beamformer, port selection and discrete phases.

mod ao;
mod beamformer;
mod cd;
mod cem;
mod exhaustive;

use thiserror::Error;

use crate::channel::ChannelError;
use crate::numerics::NumericsError;

pub use ao::{ao_solve, AoConfig, AoReport, Stage, TraceRecord};
pub use beamformer::{update_beamformer, widely_linear_matrix, BeamformerUpdate};
pub use cd::{continuous_minimizer, cd_refine_phases, project_to_codebook, CdOutcome};
pub use cem::{cem_select_ports, gumbel_top_k, pmf_update, top_k_indices, CemConfig, CemOutcome, PMF_FLOOR};
pub use exhaustive::{
    enumeration_size, exhaustive_config_search, ExhaustiveResult, MAX_ENUMERATION,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OptimizerError {
    #[error("enumeration of {count} configurations exceeds the limit of {limit}")]
    TooLarge { count: f64, limit: f64 },
    #[error("invalid optimizer setting: {0}")]
    Invalid(String),
    #[error("mode `{0}` is not an alternating-optimization mode")]
    UnsupportedMode(&'static str),
    #[error("equivalent channel is identically zero")]
    ZeroChannel,
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
}
