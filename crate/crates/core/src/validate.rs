//! Self-checks comparing the fast paths against independent brute-force oracles.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::channel::{build_correlation, codebook_phasor, j0, ChannelModel, FrisState, Geometry};
use crate::config::{Mode, SystemConfig};
use crate::measurement::{calibrate, standard_noise};
use crate::numerics::{quartic_roots, unit_circle_roots, ComplexMatrix, ComplexVector, QuarticCoefficients};
use crate::objective::{
    alignment, leakage_of_aligned, CdCoefficients, LeakageContext, PortContributions, SymbolModel,
};
use crate::optimizer::{
    ao_solve, cd_refine_phases, cem_select_ports, continuous_minimizer, exhaustive_config_search,
    update_beamformer, widely_linear_matrix, AoConfig, CemConfig,
};
use crate::rng::{stream, Purpose};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Coefficient builder under test: `(y₋, a, κ) ↦ (α, β, C)`.
pub type CoefficientFn = fn(&ComplexVector, &ComplexVector, Complex64) -> CdCoefficients;

/// Deliberately broken coefficients (sign of `α` flipped) for mutation testing.
pub fn mutated_coefficients(y: &ComplexVector, a: &ComplexVector, kappa: Complex64) -> CdCoefficients {
    let c = CdCoefficients::from_parts(y, a, kappa);
    CdCoefficients { alpha: -c.alpha, ..c }
}

pub struct Validator {
    pub seed: u64,
    pub coefficients: CoefficientFn,
}

impl Default for Validator {
    fn default() -> Self {
        Self { seed: 1, coefficients: CdCoefficients::from_parts }
    }
}

type Check = fn(&Validator, &mut ChaCha8Rng) -> Result<String, String>;

const CHECKS: &[(&str, Check)] = &[
    ("correlation_kernel", check_correlation),
    ("leakage_dense", check_leakage_dense),
    ("leakage_monte_carlo", check_leakage_monte_carlo),
    ("beamformer_embedding", check_beamformer_embedding),
    ("beamformer_grid", check_beamformer_grid),
    ("quartic_roots", check_quartic_roots),
    ("quartic_grid", check_quartic_grid),
    ("cd_consistency", check_cd_consistency),
    ("cd_monotone", check_cd_monotone),
    ("cem_exhaustive", check_cem_exhaustive),
    ("exhaustive_nested", check_exhaustive_nested),
    ("ao_monotone", check_ao_monotone),
    ("calibration_snr", check_calibration),
];

pub fn check_names() -> Vec<&'static str> {
    CHECKS.iter().map(|(n, _)| *n).collect()
}

impl Validator {
    /// Runs every check whose name contains `filter` (all when `None`).
    pub fn run(&self, filter: Option<&str>) -> Vec<CheckResult> {
        CHECKS
            .iter()
            .enumerate()
            .filter(|(_, (name, _))| filter.map_or(true, |f| name.contains(f)))
            .map(|(i, (name, check))| {
                let mut rng = stream(self.seed, i as u64, Purpose::Validation);
                let (passed, detail) = match check(self, &mut rng) {
                    Ok(d) => (true, d),
                    Err(d) => (false, d),
                };
                CheckResult { name, passed, detail }
            })
            .collect()
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn rand_c(rng: &mut ChaCha8Rng) -> Complex64 {
    c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

fn rand_vec(n: usize, rng: &mut ChaCha8Rng) -> ComplexVector {
    ComplexVector::from_fn(n, |_, _| rand_c(rng))
}

fn rand_context(rng: &mut ChaCha8Rng, n_r: usize, n_t: usize, kappa: Complex64) -> LeakageContext {
    LeakageContext {
        d_r: ComplexVector::from_fn(n_r, |_, _| Complex64::from_polar(1.0, rng.gen_range(0.0..2.0 * PI))),
        h_eq: ComplexMatrix::from_fn(n_r, n_t, |_, _| rand_c(rng)),
        w: rand_vec(n_t, rng),
        kappa,
    }
}

fn ensure(ok: bool, detail: String) -> Result<String, String> {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn check_correlation(_: &Validator, _: &mut ChaCha8Rng) -> Result<String, String> {
    let g = Geometry::from_config(&SystemConfig::default()).map_err(|e| e.to_string())?;
    let corr = build_correlation(&g).map_err(|e| e.to_string())?;
    let x = 2.0 * PI / 3.0;
    let expected = x.sin() / x;
    let err = (corr.r_f[(0, 1)] - expected).abs().max((j0(PI)).abs());
    ensure(err < 1e-12, format!("neighbour correlation {:.6}, error {err:.1e}", corr.r_f[(0, 1)]))
}

fn check_leakage_dense(_: &Validator, rng: &mut ChaCha8Rng) -> Result<String, String> {
    let mut worst: f64 = 0.0;
    for kappa in [c(0.0, 0.0), c(1.0, 0.0), c(0.5, 0.2)] {
        for _ in 0..50 {
            let ctx = rand_context(rng, 6, 4, kappa);
            let dense = ctx.leakage_dense();
            worst = worst.max((ctx.leakage() - dense).abs() / dense);
        }
    }
    ensure(worst <= 1e-10, format!("max relative gap {worst:.1e}"))
}

fn check_leakage_monte_carlo(_: &Validator, rng: &mut ChaCha8Rng) -> Result<String, String> {
    let mut worst: f64 = 0.0;
    for m in [crate::config::Modulation::Bpsk, crate::config::Modulation::Qam4] {
        let model = SymbolModel::new(m);
        let ctx = rand_context(rng, 4, 3, model.kappa);
        let g = ctx.aligned_gain();
        let draws = 200_000;
        let mut acc = 0.0;
        for _ in 0..draws {
            let s = model.points[rng.gen_range(0..model.order())];
            acc += g.iter().map(|v| (v * s).im.powi(2)).sum::<f64>();
        }
        let closed = ctx.leakage();
        worst = worst.max((acc / draws as f64 - closed).abs() / closed);
    }
    ensure(worst <= 2e-2, format!("max relative error {worst:.2e}"))
}

fn check_beamformer_embedding(_: &Validator, rng: &mut ChaCha8Rng) -> Result<String, String> {
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let ctx = rand_context(rng, 5, 3, c(0.0, 0.0));
        let g = widely_linear_matrix(&ctx.h_eq, &ctx.d_r, ctx.kappa);
        let mut ge: Vec<f64> = g.symmetric_eigen().eigenvalues.iter().copied().collect();
        ge.sort_by(f64::total_cmp);
        let mut re: Vec<f64> =
            (ctx.h_eq.adjoint() * &ctx.h_eq).symmetric_eigen().eigenvalues.iter().copied().collect();
        re.sort_by(f64::total_cmp);
        for (k, l) in re.iter().enumerate() {
            worst = worst.max((ge[2 * k] - l).abs()).max((ge[2 * k + 1] - l).abs());
        }
    }
    ensure(worst <= 1e-10, format!("max eigenvalue mismatch {worst:.1e}"))
}

fn check_beamformer_grid(_: &Validator, rng: &mut ChaCha8Rng) -> Result<String, String> {
    let kappa = c(1.0, 0.0);
    let ctx = rand_context(rng, 4, 1, kappa);
    let bf = update_beamformer(&ctx.h_eq, &ctx.d_r, kappa, 1.0).map_err(|e| e.to_string())?;
    let value = |w: Complex64| LeakageContext { w: ComplexVector::from_element(1, w), ..ctx.clone() }.leakage();
    let closed = value(bf.w[0]);
    let grid = 200_000;
    let best = (0..grid)
        .map(|k| value(Complex64::from_polar(1.0, 2.0 * PI * k as f64 / grid as f64)))
        .fold(f64::INFINITY, f64::min);
    ensure(closed <= best + 1e-8, format!("closed form {closed:.6e}, grid {best:.6e}"))
}

fn check_quartic_roots(_: &Validator, rng: &mut ChaCha8Rng) -> Result<String, String> {
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let q = QuarticCoefficients::stationarity(rand_c(rng), rand_c(rng));
        let roots = quartic_roots(&q).map_err(|e| e.to_string())?;
        for u in &roots {
            worst = worst.max(q.eval(*u).norm() / q.residual_scale());
        }
        if unit_circle_roots(&roots, 1e-6).is_empty() {
            return Err(format!("no unit-modulus root for {q:?}"));
        }
    }
    ensure(worst <= 1e-8, format!("max scaled residual {worst:.1e}"))
}

fn check_quartic_grid(_: &Validator, rng: &mut ChaCha8Rng) -> Result<String, String> {
    let grid = 100_000;
    for _ in 0..50 {
        let (alpha, beta) = (rand_c(rng), rand_c(rng));
        let psi = |t: f64| (alpha * Complex64::from_polar(1.0, t) + beta * Complex64::from_polar(1.0, 2.0 * t)).re;
        let t = continuous_minimizer(alpha, beta).ok_or("no minimizer")?;
        let best = (0..grid).map(|k| psi(2.0 * PI * k as f64 / grid as f64)).fold(f64::INFINITY, f64::min);
        if psi(t) > best + 1e-8 {
            return Err(format!("minimizer {t:.6} worse than grid by {:.1e}", psi(t) - best));
        }
    }
    Ok("50 instances within grid resolution".into())
}

fn check_cd_consistency(v: &Validator, rng: &mut ChaCha8Rng) -> Result<String, String> {
    let mut worst: f64 = 0.0;
    for kappa in [c(0.0, 0.0), c(1.0, 0.0), c(0.5, 0.2)] {
        for _ in 0..50 {
            let y = rand_vec(6, rng);
            let a = rand_vec(6, rng);
            let coef = (v.coefficients)(&y, &a, kappa);
            for _ in 0..8 {
                let phi = Complex64::from_polar(1.0, rng.gen_range(0.0..2.0 * PI));
                let direct = leakage_of_aligned(&(&y + &a * phi), kappa);
                worst = worst.max((coef.eval(phi) - direct).abs() / (coef.constant.abs() + 1.0));
            }
        }
    }
    ensure(worst <= 1e-9, format!("max normalized gap {worst:.1e}"))
}

fn check_cd_monotone(_: &Validator, rng: &mut ChaCha8Rng) -> Result<String, String> {
    for _ in 0..100 {
        let pc = PortContributions {
            base: rand_vec(5, rng),
            columns: ComplexMatrix::from_fn(5, 8, |_, _| rand_c(rng)),
            kappa: c(1.0, 0.0),
        };
        let ports = [0, 3, 6];
        let start = [rng.gen_range(0..8), rng.gen_range(0..8), rng.gen_range(0..8)];
        let mut prev = pc.leakage(&ports, &start.map(|k| codebook_phasor(k, 8)));
        for v in cd_refine_phases(&pc, &ports, &start, 8, 10).sweep_leakage {
            if v > prev + 1e-12 * prev.max(1.0) {
                return Err(format!("sweep increased leakage from {prev:e} to {v:e}"));
            }
            prev = v;
        }
    }
    Ok("100 runs non-increasing".into())
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    (k - 1..n)
        .flat_map(|last| {
            combinations(last, k - 1).into_iter().map(move |mut c| {
                c.push(last);
                c
            })
        })
        .collect()
}

fn check_cem_exhaustive(v: &Validator, rng: &mut ChaCha8Rng) -> Result<String, String> {
    let cfg = CemConfig { samples: 200, iterations: 20, elite_ratio: 0.1, smoothing: 0.7 };
    let runs = 10;
    let mut hits = 0;
    for run in 0..runs {
        let pc = PortContributions {
            base: rand_vec(6, rng),
            columns: ComplexMatrix::from_fn(6, 10, |_, _| rand_c(rng)),
            kappa: c(0.0, 0.0),
        };
        let phasors = [c(1.0, 0.0); 3];
        let f = |s: &[usize]| pc.leakage(s, &phasors);
        let optimum = combinations(10, 3).iter().map(|s| f(s)).fold(f64::INFINITY, f64::min);
        let out = cem_select_ports(f, 10, 3, &cfg, &mut stream(v.seed, run, Purpose::OptimizerFris))
            .map_err(|e| e.to_string())?;
        if out.value <= optimum * (1.0 + 1e-12) {
            hits += 1;
        }
    }
    ensure(hits >= 9, format!("{hits}/{runs} runs reached the optimum"))
}

fn desk_config() -> SystemConfig {
    let mut cfg = SystemConfig::default();
    for (k, val) in [("n_x", "4"), ("n_y", "2"), ("m_o", "2"), ("m_p", "4"), ("n_t", "2"), ("n_r", "4")] {
        cfg.set(k, val).expect("valid desk setting");
    }
    cfg
}

fn check_exhaustive_nested(v: &Validator, _: &mut ChaCha8Rng) -> Result<String, String> {
    let mut cfg = desk_config();
    cfg.set("n_x", "2").map_err(|e| e.to_string())?;
    cfg.set("n_y", "2").map_err(|e| e.to_string())?;
    let model = ChannelModel::from_config(&cfg).map_err(|e| e.to_string())?;
    let cs = model.sample(&mut stream(v.seed, 0, Purpose::Channel));
    let kappa = c(1.0, 0.0);
    let res = exhaustive_config_search(&cs, 1, 2, kappa, 1.0).map_err(|e| e.to_string())?;
    let d = alignment(&cs.r);
    let mut best = f64::INFINITY;
    for port in 0..4 {
        for k in 0..2 {
            let fs = FrisState { ports: vec![port], phase_idx: vec![k], codebook_size: 2 };
            let h = crate::channel::equivalent_channel(&cs, &fs).map_err(|e| e.to_string())?;
            let bf = update_beamformer(&h, &d, kappa, 1.0).map_err(|e| e.to_string())?;
            best = best.min(leakage_of_aligned(&(h * &bf.w).component_mul(&d), kappa));
        }
    }
    ensure(
        res.configurations == 8 && (res.leakage - best).abs() <= 1e-12 * best.max(1e-300),
        format!("{} configurations, search {:.6e}, brute force {best:.6e}", res.configurations, res.leakage),
    )
}

fn check_ao_monotone(v: &Validator, _: &mut ChaCha8Rng) -> Result<String, String> {
    let mut cfg = desk_config();
    cfg.set("modulation", "bpsk").map_err(|e| e.to_string())?;
    let model = ChannelModel::from_config(&cfg).map_err(|e| e.to_string())?;
    let ao = AoConfig::from_config(&cfg).map_err(|e| e.to_string())?;
    for trial in 0..50 {
        let cs = model.sample(&mut stream(v.seed, trial, Purpose::Channel));
        let mode = if trial % 2 == 0 { Mode::Fris } else { Mode::RisFixed };
        let report = ao_solve(&cs, &ao, mode, &mut stream(v.seed, trial, Purpose::OptimizerFris))
            .map_err(|e| e.to_string())?;
        for pair in report.trace.windows(2) {
            if pair[1].leakage > pair[0].leakage * (1.0 + 1e-12) {
                return Err(format!("trial {trial}: {:?} -> {:?}", pair[0], pair[1]));
            }
        }
    }
    Ok("50 traces non-increasing".into())
}

fn check_calibration(_: &Validator, rng: &mut ChaCha8Rng) -> Result<String, String> {
    let h = ComplexMatrix::from_fn(8, 4, |_, _| rand_c(rng));
    let w = rand_vec(4, rng);
    let r = rand_vec(8, rng);
    let link = calibrate(&h, &w, &r, 7.0, 10.0).map_err(|e| e.to_string())?;
    let draws = 20_000;
    let noise: f64 = (0..draws).map(|_| standard_noise(8, rng).norm_squared()).sum::<f64>() * link.sigma2;
    let snr = 10.0 * ((h * w).norm_squared() * draws as f64 / noise).log10();
    ensure((snr - 7.0).abs() <= 0.1, format!("empirical SNR {snr:.3} dB"))
}
