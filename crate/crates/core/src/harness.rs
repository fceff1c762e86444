//! Monte-Carlo experiments: BER sweeps, convergence traces and block timing.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::channel::{equivalent_channel, ChannelError, ChannelModel, ChannelSet, FrisState};
use crate::config::{ConfigError, DetectorKind, Mode, Scheme, SweepAxis, SystemConfig};
use crate::detection::{
    detect_exhaustive_ls_gain, detect_scalar_ls, detect_wl_ls, detect_zf_known_phase, DetectionError,
    DetectorInput,
};
use crate::measurement::{calibrate, magnitude_readout, standard_noise, MeasurementError};
use crate::numerics::ComplexVector;
use crate::objective::{alignment, PortContributions, SymbolModel};
use crate::optimizer::{
    ao_solve, cd_refine_phases, cem_select_ports, update_beamformer, AoConfig, AoReport, OptimizerError,
};
use crate::rng::{stream, Purpose};

pub const BER_HEADER: &str = "scheme,axis,axis_value,trials,bit_errors,total_bits,ber,seed";
pub const TRIAL_HEADER: &str = "scheme,axis_value,trial,bit_errors,total_bits,leakage";
pub const CONVERGENCE_HEADER: &str = "trial,iter,stage,leakage";
pub const TIMING_HEADER: &str = "block,param,value,mean_ms,std_ms";

/// Fraction of failed trials above which a run is reported as failed.
pub const MAX_FAILURE_RATE: f64 = 0.01;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Optimizer(#[from] OptimizerError),
    #[error(transparent)]
    Measurement(#[from] MeasurementError),
    #[error(transparent)]
    Detection(#[from] DetectionError),
    #[error("{failed} of {trials} trials failed (limit {limit:.0}%): first error: {first}")]
    TooManyFailures { failed: usize, trials: usize, limit: f64, first: String },
    #[error("worker pool: {0}")]
    Pool(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

/// A set of Monte-Carlo runs over one sweep axis.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub base: SystemConfig,
    pub axis: SweepAxis,
    pub values: Vec<String>,
    pub trials: usize,
    pub seed: u64,
    pub schemes: Vec<Scheme>,
    pub workers: usize,
}

impl ExperimentSpec {
    /// The configured sweep.
    pub fn sweep(cfg: &SystemConfig) -> Self {
        Self {
            base: cfg.clone(),
            axis: cfg.sweep_axis,
            values: cfg.sweep_values.clone(),
            trials: cfg.trials,
            seed: cfg.init_seed,
            schemes: cfg.schemes.clone(),
            workers: cfg.workers,
        }
    }

    /// The single operating point of the configuration, labelled by its SNR.
    pub fn single_point(cfg: &SystemConfig) -> Self {
        Self {
            axis: SweepAxis::SnrDb,
            values: vec![format_value(cfg.snr_db)],
            ..Self::sweep(cfg)
        }
    }

    fn check(&self) -> Result<(), HarnessError> {
        if self.trials == 0 {
            return Err(ConfigError::invalid("trials", "must be at least 1").into());
        }
        if self.values.is_empty() {
            return Err(ConfigError::invalid("sweep_values", "at least one value is required").into());
        }
        if self.schemes.is_empty() {
            return Err(ConfigError::invalid("schemes", "at least one scheme is required").into());
        }
        for v in &self.values {
            self.base.with_axis(self.axis, v)?;
        }
        Ok(())
    }

    fn point_configs(&self) -> Result<Vec<SystemConfig>, HarnessError> {
        Ok(self
            .values
            .iter()
            .map(|v| self.base.with_axis(self.axis, v))
            .collect::<Result<_, _>>()?)
    }
}

fn format_value(v: f64) -> String {
    format!("{v}")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BerRecord {
    pub scheme: Scheme,
    pub axis: SweepAxis,
    pub axis_value: String,
    pub trials: usize,
    pub bit_errors: u64,
    pub total_bits: u64,
    pub ber: f64,
    pub seed: u64,
    pub wallclock_s: f64,
}

impl BerRecord {
    /// Binomial standard error of the BER estimate.
    pub fn std_error(&self) -> f64 {
        if self.total_bits == 0 {
            return 0.0;
        }
        (self.ber * (1.0 - self.ber) / self.total_bits as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub scheme: Scheme,
    pub axis_value: String,
    pub trial: usize,
    pub bit_errors: u64,
    pub total_bits: u64,
    /// Leakage of the designed link (0 for schemes without a design of their own).
    pub leakage: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BerOutcome {
    pub records: Vec<BerRecord>,
    pub trials: Vec<TrialRecord>,
    pub failed_trials: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Design {
    Fris,
    RisFixed,
}

fn design_of(scheme: Scheme) -> Design {
    match scheme {
        Scheme::RisFixed => Design::RisFixed,
        Scheme::FrisAo | Scheme::ExhaustiveLs | Scheme::ZfKnown | Scheme::FrisAoWl => Design::Fris,
    }
}

fn detector_of(scheme: Scheme, configured: DetectorKind) -> DetectorKind {
    match scheme {
        Scheme::FrisAo | Scheme::RisFixed => configured,
        Scheme::ExhaustiveLs => DetectorKind::ExhaustiveLs,
        Scheme::ZfKnown => DetectorKind::ZfKnown,
        Scheme::FrisAoWl => DetectorKind::WlLs,
    }
}

/// Optimized link of one realization.
#[derive(Debug, Clone)]
struct LinkDesign {
    state: FrisState,
    w: ComplexVector,
    leakage: f64,
}

fn design_link(
    cs: &ChannelSet,
    cfg: &SystemConfig,
    design: Design,
    seed: u64,
    trial: usize,
) -> Result<LinkDesign, HarnessError> {
    let ao = AoConfig::from_config(cfg)?;
    let (mode, purpose) = match design {
        Design::Fris => (Mode::Fris, Purpose::OptimizerFris),
        Design::RisFixed => (Mode::RisFixed, Purpose::OptimizerRis),
    };
    let report = ao_solve(cs, &ao, mode, &mut stream(seed, trial as u64, purpose))?;
    Ok(LinkDesign { state: report.state, w: report.w, leakage: report.leakage })
}

/// Counts bit errors for one scheme over the trial's symbol stream.
fn transmit(
    cs: &ChannelSet,
    link: &LinkDesign,
    cfg: &SystemConfig,
    detector: DetectorKind,
    seed: u64,
    trial: usize,
) -> Result<(u64, u64), HarnessError> {
    let model = SymbolModel::new(cfg.modulation);
    let h_eq = equivalent_channel(cs, &link.state)?;
    let cal = calibrate(&h_eq, &link.w, &cs.r, cfg.snr_db, cfg.rsr_db)?;
    let r = cal.scaled_reference(&cs.r);
    let sigma = cal.sigma();
    let h = &h_eq * &link.w;
    let g_star = h.component_mul(&alignment(&r));
    // symbols and unit noise are common to every scheme of the trial
    let mut rng = stream(seed, trial as u64, Purpose::Symbols);
    let mut errors = 0u64;
    for _ in 0..cfg.symbols_per_trial {
        let label = rand::Rng::gen_range(&mut rng, 0..model.order());
        let noise = standard_noise(h.len(), &mut rng);
        let signal = &h * model.points[label];
        let detected = match detector {
            DetectorKind::ZfKnown => {
                let y = signal + noise * Complex64::new(sigma, 0.0);
                detect_zf_known_phase(&y, &h, &model)?
            }
            _ => {
                let y = magnitude_readout(&signal, &r, &noise, sigma);
                let input = DetectorInput { y: &y, r: &r, g_star: &g_star, model: &model };
                match detector {
                    DetectorKind::ScalarLs => detect_scalar_ls(&input)?,
                    DetectorKind::WlLs => detect_wl_ls(&input)?,
                    _ => detect_exhaustive_ls_gain(&y, &h, &r, &model),
                }
            }
        };
        errors += model.bit_errors(label, detected) as u64;
    }
    Ok((errors, (cfg.symbols_per_trial * model.bits_per_symbol) as u64))
}

fn run_trial(
    spec: &ExperimentSpec,
    points: &[SystemConfig],
    models: &[ChannelModel],
    trial: usize,
) -> Result<Vec<TrialRecord>, HarnessError> {
    let mut out = Vec::with_capacity(points.len() * spec.schemes.len());
    let mut shared: Option<(ChannelSet, Vec<(Design, LinkDesign)>)> = None;
    for (idx, (cfg, model)) in points.iter().zip(models).enumerate() {
        if !spec.axis.measurement_only() || shared.is_none() {
            let cs = model.sample(&mut stream(spec.seed, trial as u64, Purpose::Channel));
            let mut designs: Vec<(Design, LinkDesign)> = Vec::new();
            for &scheme in &spec.schemes {
                let d = design_of(scheme);
                if !designs.iter().any(|(k, _)| *k == d) {
                    designs.push((d, design_link(&cs, cfg, d, spec.seed, trial)?));
                }
            }
            shared = Some((cs, designs));
        }
        let (cs, designs) = shared.as_ref().expect("designed above");
        for &scheme in &spec.schemes {
            let link = &designs.iter().find(|(k, _)| *k == design_of(scheme)).expect("designed").1;
            let (bit_errors, total_bits) =
                transmit(cs, link, cfg, detector_of(scheme, cfg.detector), spec.seed, trial)?;
            out.push(TrialRecord {
                scheme,
                axis_value: spec.values[idx].clone(),
                trial,
                bit_errors,
                total_bits,
                leakage: link.leakage,
            });
        }
    }
    Ok(out)
}

fn pool(workers: usize) -> Result<rayon::ThreadPool, HarnessError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| HarnessError::Pool(e.to_string()))
}

/// Runs every trial at every axis value for every scheme and aggregates bit errors.
///
/// Each trial uses streams derived only from `(seed, trial)`, so results do not
/// depend on the worker count. A trial that fails at any point is skipped entirely.
pub fn run_ber(spec: &ExperimentSpec) -> Result<BerOutcome, HarnessError> {
    spec.check()?;
    let started = Instant::now();
    let points = spec.point_configs()?;
    let models = points
        .iter()
        .map(ChannelModel::from_config)
        .collect::<Result<Vec<_>, _>>()?;
    let results: Vec<Result<Vec<TrialRecord>, HarnessError>> = pool(spec.workers)?.install(|| {
        (0..spec.trials)
            .into_par_iter()
            .map(|t| run_trial(spec, &points, &models, t))
            .collect()
    });

    let mut trials = Vec::new();
    let mut failed = 0;
    let mut first_error = None;
    for r in results {
        match r {
            Ok(records) => trials.extend(records),
            Err(e) => {
                failed += 1;
                first_error.get_or_insert_with(|| e.to_string());
            }
        }
    }
    if failed as f64 > MAX_FAILURE_RATE * spec.trials as f64 {
        return Err(HarnessError::TooManyFailures {
            failed,
            trials: spec.trials,
            limit: MAX_FAILURE_RATE * 100.0,
            first: first_error.unwrap_or_default(),
        });
    }

    let wallclock_s = started.elapsed().as_secs_f64();
    let mut records = Vec::new();
    for value in &spec.values {
        for &scheme in &spec.schemes {
            let (mut errors, mut bits, mut count) = (0u64, 0u64, 0usize);
            for t in trials.iter().filter(|t| t.scheme == scheme && &t.axis_value == value) {
                errors += t.bit_errors;
                bits += t.total_bits;
                count += 1;
            }
            records.push(BerRecord {
                scheme,
                axis: spec.axis,
                axis_value: value.clone(),
                trials: count,
                bit_errors: errors,
                total_bits: bits,
                ber: if bits == 0 { 0.0 } else { errors as f64 / bits as f64 },
                seed: spec.seed,
                wallclock_s,
            });
        }
    }
    Ok(BerOutcome { records, trials, failed_trials: failed })
}

pub fn ber_csv(records: &[BerRecord]) -> String {
    let mut s = String::from(BER_HEADER);
    s.push('\n');
    for r in records {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            r.scheme, r.axis, r.axis_value, r.trials, r.bit_errors, r.total_bits, r.ber, r.seed
        );
    }
    s
}

pub fn trial_csv(trials: &[TrialRecord]) -> String {
    let mut s = String::from(TRIAL_HEADER);
    s.push('\n');
    for t in trials {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            t.scheme, t.axis_value, t.trial, t.bit_errors, t.total_bits, t.leakage
        );
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRecord {
    pub trial: usize,
    pub iter: usize,
    pub stage: &'static str,
    pub leakage: f64,
}

/// Trace rows of one optimization run: outer records, then the inner sweeps.
pub fn convergence_rows(trial: usize, report: &AoReport) -> Vec<ConvergenceRecord> {
    report
        .trace
        .iter()
        .chain(&report.cd_trace)
        .map(|r| ConvergenceRecord { trial, iter: r.iter, stage: r.stage.as_str(), leakage: r.leakage })
        .collect()
}

/// Full AO reports for `spec.trials` realizations of the base configuration.
pub fn run_ao_trials(spec: &ExperimentSpec, mode: Mode) -> Result<Vec<AoReport>, HarnessError> {
    if spec.trials == 0 {
        return Err(ConfigError::invalid("trials", "must be at least 1").into());
    }
    let model = ChannelModel::from_config(&spec.base)?;
    let ao = AoConfig::from_config(&spec.base)?;
    let purpose = if mode == Mode::RisFixed { Purpose::OptimizerRis } else { Purpose::OptimizerFris };
    let results: Vec<Result<AoReport, OptimizerError>> = pool(spec.workers)?.install(|| {
        (0..spec.trials)
            .into_par_iter()
            .map(|t| {
                let cs = model.sample(&mut stream(spec.seed, t as u64, Purpose::Channel));
                ao_solve(&cs, &ao, mode, &mut stream(spec.seed, t as u64, purpose))
            })
            .collect()
    });
    Ok(results.into_iter().collect::<Result<_, _>>()?)
}

pub fn run_convergence(spec: &ExperimentSpec, mode: Mode) -> Result<Vec<ConvergenceRecord>, HarnessError> {
    let reports = run_ao_trials(spec, mode)?;
    Ok(reports.iter().enumerate().flat_map(|(t, r)| convergence_rows(t, r)).collect())
}

pub fn convergence_csv(rows: &[ConvergenceRecord]) -> String {
    let mut s = String::from(CONVERGENCE_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(s, "{},{},{},{}", r.trial, r.iter, r.stage, r.leakage);
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimingRow {
    pub block: &'static str,
    pub param: String,
    pub value: String,
    pub mean_ms: f64,
    pub std_ms: f64,
}

fn mean_std(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = if samples.len() > 1 {
        samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

/// Wallclock of the beamformer, port-selection and phase blocks across problem sizes.
///
/// Informative only; values depend on the machine.
pub fn timing_report(base: &SystemConfig) -> Result<Vec<TimingRow>, HarnessError> {
    let mut rows = Vec::new();
    for value in &base.timing_values {
        let mut cfg = base.clone();
        cfg.set(&base.timing_param, value)?;
        cfg.validate()?;
        let model = ChannelModel::from_config(&cfg)?;
        let ao = AoConfig::from_config(&cfg)?;
        let cs = model.sample(&mut stream(cfg.init_seed, 0, Purpose::Channel));
        let d_r = alignment(&cs.r);
        let ports: Vec<usize> = (0..cfg.m_o).collect();
        let state = FrisState { ports: ports.clone(), phase_idx: vec![0; cfg.m_o], codebook_size: cfg.m_p };
        let h = equivalent_channel(&cs, &state)?;
        let w = update_beamformer(&h, &d_r, ao.kappa, ao.power)?.w;
        let pc = PortContributions::new(&cs, &w, &d_r, ao.kappa);
        let phasors = vec![Complex64::new(1.0, 0.0); cs.n_ports()];

        let (mut tw, mut tg, mut tt) = (Vec::new(), Vec::new(), Vec::new());
        for rep in 0..cfg.timing_reps {
            let t0 = Instant::now();
            update_beamformer(&h, &d_r, ao.kappa, ao.power)?;
            tw.push(t0.elapsed().as_secs_f64() * 1e3);

            let mut rng = stream(cfg.init_seed, rep as u64, Purpose::OptimizerFris);
            let t0 = Instant::now();
            cem_select_ports(|s| pc.leakage(s, &phasors[..s.len()]), cs.n_ports(), cfg.m_o, &ao.cem, &mut rng)?;
            tg.push(t0.elapsed().as_secs_f64() * 1e3);

            let t0 = Instant::now();
            cd_refine_phases(&pc, &ports, &state.phase_idx, cfg.m_p, cfg.t_theta);
            tt.push(t0.elapsed().as_secs_f64() * 1e3);
        }
        for (block, samples) in [("w", &tw), ("gamma", &tg), ("theta", &tt)] {
            let (mean_ms, std_ms) = mean_std(samples);
            rows.push(TimingRow {
                block,
                param: base.timing_param.clone(),
                value: value.clone(),
                mean_ms,
                std_ms,
            });
        }
    }
    Ok(rows)
}

pub fn timing_csv(rows: &[TimingRow]) -> String {
    let mut s = String::from(TIMING_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(s, "{},{},{},{:.6},{:.6}", r.block, r.param, r.value, r.mean_ms, r.std_ms);
    }
    s
}

/// Resolved configuration and provenance written next to every output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub artifact: &'static str,
    pub version: &'static str,
    pub command: String,
    pub seed: u64,
    pub config: std::collections::BTreeMap<String, String>,
}

impl RunManifest {
    pub fn new(command: &str, cfg: &SystemConfig) -> Self {
        let config = cfg
            .to_text()
            .lines()
            .filter_map(|l| l.split_once('='))
            .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
            .collect();
        Self {
            artifact: "fris-lab",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            seed: cfg.init_seed,
            config,
        }
    }

    pub fn write(&self, path: &Path) -> Result<(), HarnessError> {
        let json = serde_json::to_string_pretty(self).map_err(std::io::Error::other)?;
        std::fs::write(path, json + "\n")?;
        Ok(())
    }
}
