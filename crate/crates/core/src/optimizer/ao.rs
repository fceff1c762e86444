use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use super::cd::cd_refine_phases;
use super::cem::{cem_select_ports, CemConfig};
use super::{update_beamformer, OptimizerError};
use crate::channel::{codebook_phasor, equivalent_channel_with, ChannelSet, FrisState, Geometry};
use crate::config::{Mode, StopRule, SystemConfig};
use crate::numerics::ComplexVector;
use crate::objective::{alignment, leakage_of_aligned, PortContributions, SymbolModel};

#[derive(Debug, Clone, PartialEq)]
pub struct AoConfig {
    pub power: f64,
    pub cem: CemConfig,
    pub t_theta: usize,
    pub eps: f64,
    pub stop: StopRule,
    pub max_iters: usize,
    pub m_o: usize,
    pub m_p: usize,
    /// Pseudo-variance used by the objective.
    pub kappa: Complex64,
    /// Frozen port set of the fixed-RIS baseline.
    pub fixed_ports: Vec<usize>,
}

impl AoConfig {
    pub fn from_config(cfg: &SystemConfig) -> Result<Self, OptimizerError> {
        let geometry = Geometry::from_config(cfg)?;
        Ok(Self {
            power: cfg.power_p,
            cem: CemConfig {
                samples: cfg.cem_k,
                iterations: cfg.cem_iters,
                elite_ratio: cfg.cem_rho,
                smoothing: cfg.cem_alpha,
            },
            t_theta: cfg.t_theta,
            eps: cfg.ao_eps,
            stop: cfg.ao_stop,
            max_iters: cfg.ao_max_iters,
            m_o: cfg.m_o,
            m_p: cfg.m_p,
            kappa: cfg.kappa_override.unwrap_or_else(|| SymbolModel::new(cfg.modulation).kappa),
            fixed_ports: geometry.center_ports(cfg.m_o),
        })
    }

    fn converged(&self, previous: f64, current: f64) -> bool {
        let change = (previous - current).abs();
        match self.stop {
            StopRule::Absolute => change < self.eps,
            StopRule::Relative => change < self.eps * previous.abs() || (previous == 0.0 && current == 0.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Init,
    W,
    Gamma,
    Theta,
    Cd,
}

impl Stage {
    pub fn as_str(&self) -> &'static str {
        match self {
            Stage::Init => "init",
            Stage::W => "w",
            Stage::Gamma => "gamma",
            Stage::Theta => "theta",
            Stage::Cd => "cd",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRecord {
    pub iter: usize,
    pub stage: Stage,
    pub leakage: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AoReport {
    /// Leakage after initialization and after every block of every outer iteration.
    pub trace: Vec<TraceRecord>,
    /// Leakage after every coordinate-descent sweep, numbered cumulatively.
    pub cd_trace: Vec<TraceRecord>,
    pub state: FrisState,
    pub w: ComplexVector,
    pub leakage: f64,
    /// Outer iteration at which the stopping rule fired, if it did.
    pub converged_at: Option<usize>,
    pub iterations: usize,
}

impl AoReport {
    /// Outer-iteration leakage values `L(0), L(1), ...`.
    pub fn outer_values(&self) -> Vec<f64> {
        let mut values = vec![self.trace[0].leakage];
        for t in 1..=self.iterations {
            if let Some(last) = self.trace.iter().rev().find(|r| r.iter == t) {
                values.push(last.leakage);
            }
        }
        values
    }
}

fn phasors_of(ports: &[usize], memory: &[usize], m_p: usize) -> Vec<Complex64> {
    ports.iter().map(|&p| codebook_phasor(memory[p], m_p)).collect()
}

/// Alternating minimization of the leakage over beamformer, ports and phases.
///
/// Every block proposal is accepted only if it does not increase the leakage.
/// Phases are remembered per port, so a port that leaves and re-enters the
/// selection keeps its last phase.
pub fn ao_solve<R: Rng + ?Sized>(
    cs: &ChannelSet,
    cfg: &AoConfig,
    mode: Mode,
    rng: &mut R,
) -> Result<AoReport, OptimizerError> {
    let n = cs.n_ports();
    if cfg.m_o == 0 || cfg.m_o > n {
        return Err(OptimizerError::Invalid(format!("m_o = {} with {n} ports", cfg.m_o)));
    }
    if cfg.m_p == 0 {
        return Err(OptimizerError::Invalid("codebook size must be positive".into()));
    }
    let mut ports: Vec<usize> = match mode {
        Mode::Fris => (0..cfg.m_o).collect(),
        Mode::RisFixed => {
            let mut fixed = cfg.fixed_ports.clone();
            fixed.sort_unstable();
            FrisState::new(fixed.clone(), vec![0; fixed.len()], cfg.m_p, n)?;
            fixed
        }
        Mode::Exhaustive => return Err(OptimizerError::UnsupportedMode("exhaustive")),
    };
    if mode == Mode::Fris {
        cfg.cem.check()?;
    }
    let d_r = alignment(&cs.r);
    let kappa = cfg.kappa;
    let mut memory = vec![0usize; n];
    let n_t = cs.n_t();
    let mut w = ComplexVector::from_element(n_t, Complex64::new((cfg.power / n_t as f64).sqrt(), 0.0));

    let evaluate = |ports: &[usize], memory: &[usize], w: &ComplexVector| {
        let h = equivalent_channel_with(cs, ports, &phasors_of(ports, memory, cfg.m_p));
        leakage_of_aligned(&(h * w).component_mul(&d_r), kappa)
    };

    let mut current = evaluate(&ports, &memory, &w);
    let mut trace = vec![TraceRecord { iter: 0, stage: Stage::Init, leakage: current }];
    let mut cd_trace = Vec::new();
    let mut converged_at = None;
    let mut iterations = 0;

    for t in 1..=cfg.max_iters {
        iterations = t;
        let previous = current;

        let h = equivalent_channel_with(cs, &ports, &phasors_of(&ports, &memory, cfg.m_p));
        let bf = update_beamformer(&h, &d_r, kappa, cfg.power)?;
        let candidate = evaluate(&ports, &memory, &bf.w);
        if candidate <= current {
            w = bf.w;
            current = candidate;
        }
        trace.push(TraceRecord { iter: t, stage: Stage::W, leakage: current });

        if mode == Mode::Fris {
            let pc = PortContributions::new(cs, &w, &d_r, kappa);
            let outcome = cem_select_ports(
                |subset| pc.leakage(subset, &phasors_of(subset, &memory, cfg.m_p)),
                n,
                cfg.m_o,
                &cfg.cem,
                rng,
            )?;
            let candidate = evaluate(&outcome.ports, &memory, &w);
            if candidate <= current {
                ports = outcome.ports;
                current = candidate;
            }
            trace.push(TraceRecord { iter: t, stage: Stage::Gamma, leakage: current });
        }

        let pc = PortContributions::new(cs, &w, &d_r, kappa);
        let start: Vec<usize> = ports.iter().map(|&p| memory[p]).collect();
        let cd = cd_refine_phases(&pc, &ports, &start, cfg.m_p, cfg.t_theta);
        for v in &cd.sweep_leakage {
            cd_trace.push(TraceRecord { iter: cd_trace.len() + 1, stage: Stage::Cd, leakage: *v });
        }
        let mut proposal = memory.clone();
        for (&p, &k) in ports.iter().zip(&cd.phase_idx) {
            proposal[p] = k;
        }
        let candidate = evaluate(&ports, &proposal, &w);
        if candidate <= current {
            memory = proposal;
            current = candidate;
        }
        trace.push(TraceRecord { iter: t, stage: Stage::Theta, leakage: current });

        if cfg.converged(previous, current) {
            converged_at = Some(t);
            break;
        }
    }

    let phase_idx = ports.iter().map(|&p| memory[p]).collect();
    Ok(AoReport {
        trace,
        cd_trace,
        state: FrisState { ports, phase_idx, codebook_size: cfg.m_p },
        w,
        leakage: current,
        converged_at,
        iterations,
    })
}
