use num_complex::Complex64;

use super::{update_beamformer, OptimizerError};
use crate::channel::{codebook_phasor, equivalent_channel_with, ChannelSet, FrisState};
use crate::numerics::ComplexVector;
use crate::objective::{alignment, leakage_of_aligned};

/// Largest number of configurations the global search will enumerate.
pub const MAX_ENUMERATION: f64 = 1e6;

#[derive(Debug, Clone, PartialEq)]
pub struct ExhaustiveResult {
    pub state: FrisState,
    pub w: ComplexVector,
    pub leakage: f64,
    pub configurations: usize,
    /// Smallest leakage among configurations with a different port set or phase vector.
    pub runner_up: Option<f64>,
}

/// `C(n, m_o) · m_p^{m_o}` as a float.
pub fn enumeration_size(n: usize, m_o: usize, m_p: usize) -> f64 {
    if m_o > n {
        return 0.0;
    }
    let mut binom = 1.0;
    for i in 0..m_o {
        binom = binom * (n - i) as f64 / (i + 1) as f64;
    }
    binom.round() * (m_p as f64).powi(m_o as i32)
}

fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    for i in (0..k).rev() {
        if c[i] < n - k + i {
            c[i] += 1;
            for j in i + 1..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

fn next_digits(d: &mut [usize], base: usize) -> bool {
    for i in (0..d.len()).rev() {
        d[i] += 1;
        if d[i] < base {
            return true;
        }
        d[i] = 0;
    }
    false
}

/// Global minimum over every port subset and phase vector, with the closed-form
/// beamformer for each configuration. Ties keep the first in lexicographic order.
pub fn exhaustive_config_search(
    cs: &ChannelSet,
    m_o: usize,
    m_p: usize,
    kappa: Complex64,
    power: f64,
) -> Result<ExhaustiveResult, OptimizerError> {
    let n = cs.n_ports();
    if m_o == 0 || m_o > n || m_p == 0 {
        return Err(OptimizerError::Invalid(format!("m_o = {m_o}, m_p = {m_p} with {n} ports")));
    }
    let count = enumeration_size(n, m_o, m_p);
    if count > MAX_ENUMERATION {
        return Err(OptimizerError::TooLarge { count, limit: MAX_ENUMERATION });
    }
    let d_r = alignment(&cs.r);
    let mut ports: Vec<usize> = (0..m_o).collect();
    let mut best: Option<ExhaustiveResult> = None;
    let mut runner_up: Option<f64> = None;
    let mut configurations = 0;
    loop {
        let mut digits = vec![0usize; m_o];
        loop {
            let phasors: Vec<Complex64> = digits.iter().map(|&k| codebook_phasor(k, m_p)).collect();
            let h = equivalent_channel_with(cs, &ports, &phasors);
            let bf = update_beamformer(&h, &d_r, kappa, power)?;
            let value = leakage_of_aligned(&(h * &bf.w).component_mul(&d_r), kappa);
            configurations += 1;
            match &mut best {
                Some(b) if value >= b.leakage => {
                    runner_up = Some(runner_up.map_or(value, |r: f64| r.min(value)));
                }
                slot => {
                    if let Some(old) = slot.as_ref() {
                        runner_up = Some(runner_up.map_or(old.leakage, |r: f64| r.min(old.leakage)));
                    }
                    *slot = Some(ExhaustiveResult {
                        state: FrisState { ports: ports.clone(), phase_idx: digits.clone(), codebook_size: m_p },
                        w: bf.w,
                        leakage: value,
                        configurations: 0,
                        runner_up: None,
                    });
                }
            }
            if !next_digits(&mut digits, m_p) {
                break;
            }
        }
        if !next_combination(&mut ports, n) {
            break;
        }
    }
    let mut result = best.expect("at least one configuration");
    result.configurations = configurations;
    result.runner_up = runner_up;
    Ok(result)
}
