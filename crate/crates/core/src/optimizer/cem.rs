use rand::Rng;

use super::OptimizerError;

/// Lower bound applied to every port probability after smoothing.
pub const PMF_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CemConfig {
    /// Samples per iteration.
    pub samples: usize,
    pub iterations: usize,
    pub elite_ratio: f64,
    pub smoothing: f64,
}

impl CemConfig {
    pub fn elite_count(&self) -> usize {
        ((self.elite_ratio * self.samples as f64).ceil() as usize).clamp(1, self.samples.max(1))
    }

    pub fn check(&self) -> Result<(), OptimizerError> {
        if self.samples == 0 || self.iterations == 0 {
            return Err(OptimizerError::Invalid("CEM needs at least one sample and iteration".into()));
        }
        if !(self.elite_ratio > 0.0 && self.elite_ratio < 1.0) {
            return Err(OptimizerError::Invalid(format!("elite ratio {} not in (0,1)", self.elite_ratio)));
        }
        if !(self.smoothing > 0.0 && self.smoothing <= 1.0) {
            return Err(OptimizerError::Invalid(format!("smoothing {} not in (0,1]", self.smoothing)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CemOutcome {
    /// Selected ports, sorted ascending.
    pub ports: Vec<usize>,
    pub value: f64,
    pub pmf: Vec<f64>,
    /// Whether the result came from the best sample rather than the final PMF.
    pub from_best_sample: bool,
}

/// Indices of the `k` largest values, ties to the lowest index, returned sorted ascending.
pub fn top_k_indices(values: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    let mut top: Vec<usize> = order.into_iter().take(k).collect();
    top.sort_unstable();
    top
}

/// Size-`k` subset drawn without replacement with Gumbel-perturbed log-probabilities.
pub fn gumbel_top_k<R: Rng + ?Sized>(pmf: &[f64], k: usize, rng: &mut R) -> Vec<usize> {
    let keys: Vec<f64> = pmf
        .iter()
        .map(|&p| {
            let u: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
            p.ln() - (-u.ln()).ln()
        })
        .collect();
    top_k_indices(&keys, k)
}

/// Smoothed PMF update from elite subsets.
///
/// Elite membership frequencies sum to `m_o`, so they are divided by `m_o` before
/// mixing; the result is floored at [`PMF_FLOOR`] and renormalized.
pub fn pmf_update(pmf: &[f64], elites: &[&[usize]], m_o: usize, smoothing: f64) -> Vec<f64> {
    let freq = elite_frequencies(pmf.len(), elites);
    let mut next: Vec<f64> = pmf
        .iter()
        .zip(&freq)
        .map(|(&p, &f)| ((1.0 - smoothing) * p + smoothing * f / m_o as f64).max(PMF_FLOOR))
        .collect();
    let total: f64 = next.iter().sum();
    next.iter_mut().for_each(|p| *p /= total);
    next
}

/// Fraction of elite subsets containing each port.
pub fn elite_frequencies(n: usize, elites: &[&[usize]]) -> Vec<f64> {
    let mut counts = vec![0.0; n];
    for subset in elites {
        for &p in subset.iter() {
            counts[p] += 1.0;
        }
    }
    counts.iter_mut().for_each(|c| *c /= elites.len() as f64);
    counts
}

/// Cross-entropy search for the `m_o`-subset of `n` ports minimizing `objective`.
pub fn cem_select_ports<F, R>(
    mut objective: F,
    n: usize,
    m_o: usize,
    cfg: &CemConfig,
    rng: &mut R,
) -> Result<CemOutcome, OptimizerError>
where
    F: FnMut(&[usize]) -> f64,
    R: Rng + ?Sized,
{
    if m_o == 0 || m_o > n {
        return Err(OptimizerError::Invalid(format!("cannot select {m_o} of {n} ports")));
    }
    cfg.check()?;
    let uniform = vec![1.0 / n as f64; n];
    if m_o == n {
        let ports: Vec<usize> = (0..n).collect();
        let value = objective(&ports);
        return Ok(CemOutcome { ports, value, pmf: uniform, from_best_sample: false });
    }

    let elite_count = cfg.elite_count();
    let mut pmf = uniform;
    let mut best: Option<(Vec<usize>, f64)> = None;
    for _ in 0..cfg.iterations {
        let samples: Vec<Vec<usize>> = (0..cfg.samples).map(|_| gumbel_top_k(&pmf, m_o, rng)).collect();
        let values: Vec<f64> = samples.iter().map(|s| objective(s)).collect();
        let mut order: Vec<usize> = (0..samples.len()).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
        let top = order[0];
        if best.as_ref().map_or(true, |(_, v)| values[top] < *v) {
            best = Some((samples[top].clone(), values[top]));
        }
        let elites: Vec<&[usize]> = order[..elite_count].iter().map(|&i| samples[i].as_slice()).collect();
        pmf = pmf_update(&pmf, &elites, m_o, cfg.smoothing);
    }

    let ports = top_k_indices(&pmf, m_o);
    let value = objective(&ports);
    let (best_ports, best_value) = best.expect("at least one iteration ran");
    Ok(if best_value < value {
        CemOutcome { ports: best_ports, value: best_value, pmf, from_best_sample: true }
    } else {
        CemOutcome { ports, value, pmf, from_best_sample: false }
    })
}
