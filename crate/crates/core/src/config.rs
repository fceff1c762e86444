//! Flat `key = value` configuration shared by every module.
//!
//! Defaults reproduce the reference operating point (N_r = 36, N_t = 16,
//! N = 36 ports with M_o = 9 active, W_x = 2, SNR 7 dB, RSR 10 dB, Rician K = 2, 4-QAM).
//! Lines starting with `#` are comments; unknown keys are rejected with the key name.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config key `{key}`: {message}")]
    Invalid { key: String, message: String },
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("cannot read config file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl ConfigError {
    pub fn invalid(key: &str, message: impl Into<String>) -> Self {
        ConfigError::Invalid {
            key: key.to_string(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modulation {
    Bpsk,
    Qam4,
    Qam16,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Full three-block optimization including port selection.
    Fris,
    /// Frozen center port set; beamformer and phases still optimized.
    RisFixed,
    /// Desk-scale global enumeration.
    Exhaustive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectorKind {
    ScalarLs,
    ExhaustiveLs,
    ZfKnown,
    WlLs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopRule {
    /// `|L(t) - L(t+1)| < eps`
    Absolute,
    /// `|L(t) - L(t+1)| < eps * |L(t)|`
    Relative,
}

/// A transmit/receive pipeline evaluated by the BER harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// FRIS optimization followed by the configured `detector`.
    FrisAo,
    /// Fixed-port RIS baseline followed by the configured `detector`.
    RisFixed,
    /// FRIS optimization followed by magnitude-domain exhaustive detection.
    ExhaustiveLs,
    /// FRIS optimization with an idealized coherent (known-phase) receiver.
    ZfKnown,
    /// FRIS optimization followed by the two-column widely-linear detector.
    FrisAoWl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    SnrDb,
    RsrDb,
    MO,
    NT,
    Modulation,
}

macro_rules! string_enum {
    ($ty:ty, $key:literal, { $($name:literal => $variant:expr),+ $(,)? }) => {
        impl FromStr for $ty {
            type Err = ConfigError;
            fn from_str(s: &str) -> Result<Self, ConfigError> {
                match s.trim() {
                    $($name => Ok($variant),)+
                    other => Err(ConfigError::invalid(
                        $key,
                        format!("`{other}` is not one of {}", [$($name),+].join("|")),
                    )),
                }
            }
        }

        impl $ty {
            pub fn as_str(&self) -> &'static str {
                $(if *self == $variant { return $name; })+
                unreachable!()
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }
    };
}

string_enum!(Modulation, "modulation", {
    "bpsk" => Modulation::Bpsk,
    "qam4" => Modulation::Qam4,
    "qam16" => Modulation::Qam16,
});
string_enum!(Mode, "mode", {
    "fris" => Mode::Fris,
    "ris_fixed" => Mode::RisFixed,
    "exhaustive" => Mode::Exhaustive,
});
string_enum!(DetectorKind, "detector", {
    "scalar_ls" => DetectorKind::ScalarLs,
    "exhaustive_ls" => DetectorKind::ExhaustiveLs,
    "zf_known" => DetectorKind::ZfKnown,
    "wl_ls" => DetectorKind::WlLs,
});
string_enum!(StopRule, "ao_stop", {
    "abs" => StopRule::Absolute,
    "rel" => StopRule::Relative,
});
string_enum!(Scheme, "schemes", {
    "fris_ao" => Scheme::FrisAo,
    "ris_fixed" => Scheme::RisFixed,
    "exhaustive_ls" => Scheme::ExhaustiveLs,
    "zf_known" => Scheme::ZfKnown,
    "fris_ao_wl" => Scheme::FrisAoWl,
});
string_enum!(SweepAxis, "sweep_axis", {
    "snr_db" => SweepAxis::SnrDb,
    "rsr_db" => SweepAxis::RsrDb,
    "m_o" => SweepAxis::MO,
    "n_t" => SweepAxis::NT,
    "modulation" => SweepAxis::Modulation,
});

impl SweepAxis {
    /// Axes that only change the measurement stage; optimized designs can be reused across values.
    pub fn measurement_only(&self) -> bool {
        matches!(self, SweepAxis::SnrDb | SweepAxis::RsrDb)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    // channel
    pub n_x: usize,
    pub n_y: usize,
    pub w_x: f64,
    pub n_t: usize,
    pub n_r: usize,
    pub m_o: usize,
    pub m_p: usize,
    pub f_carrier_hz: f64,
    pub d_ur_m: f64,
    pub d_rv_m: f64,
    pub d_uv_m: f64,
    pub rician_k: f64,
    pub paths_per_link: usize,
    pub scatter_gain_db: f64,
    pub shape_rv: bool,
    // measurement
    pub snr_db: f64,
    pub rsr_db: f64,
    pub lambda_c_m: f64,
    pub lambda_p_m: f64,
    // objective
    pub modulation: Modulation,
    pub kappa_override: Option<Complex64>,
    // optimizer
    pub power_p: f64,
    pub cem_k: usize,
    pub cem_iters: usize,
    pub cem_rho: f64,
    pub cem_alpha: f64,
    pub t_theta: usize,
    pub ao_eps: f64,
    pub ao_stop: StopRule,
    pub ao_max_iters: usize,
    pub mode: Mode,
    pub init_seed: u64,
    // detection
    pub detector: DetectorKind,
    // harness
    pub trials: usize,
    pub symbols_per_trial: usize,
    pub workers: usize,
    pub schemes: Vec<Scheme>,
    pub sweep_axis: SweepAxis,
    pub sweep_values: Vec<String>,
    pub timing_param: String,
    pub timing_values: Vec<String>,
    pub timing_reps: usize,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            n_x: 6,
            n_y: 6,
            w_x: 2.0,
            n_t: 16,
            n_r: 36,
            m_o: 9,
            m_p: 8,
            f_carrier_hz: 5e9,
            d_ur_m: 16.0,
            d_rv_m: 12.0,
            d_uv_m: 20.0,
            rician_k: 2.0,
            paths_per_link: 2,
            scatter_gain_db: -10.0,
            shape_rv: true,
            snr_db: 7.0,
            rsr_db: 10.0,
            lambda_c_m: 480e-9,
            lambda_p_m: 780e-9,
            modulation: Modulation::Qam4,
            kappa_override: None,
            power_p: 1.0,
            cem_k: 200,
            cem_iters: 20,
            cem_rho: 0.1,
            cem_alpha: 0.7,
            t_theta: 5,
            ao_eps: 1e-8,
            ao_stop: StopRule::Relative,
            ao_max_iters: 50,
            mode: Mode::Fris,
            init_seed: 1,
            detector: DetectorKind::ScalarLs,
            trials: 1000,
            symbols_per_trial: 1000,
            workers: default_workers(),
            schemes: vec![
                Scheme::FrisAo,
                Scheme::RisFixed,
                Scheme::ExhaustiveLs,
                Scheme::ZfKnown,
            ],
            sweep_axis: SweepAxis::SnrDb,
            sweep_values: ["3", "5", "7", "9", "11"].map(String::from).to_vec(),
            timing_param: "n_t".to_string(),
            timing_values: ["4", "8", "16"].map(String::from).to_vec(),
            timing_reps: 5,
        }
    }
}

/// Worker default: `FRIS_LAB_WORKERS`, else the available parallelism.
pub fn default_workers() -> usize {
    std::env::var("FRIS_LAB_WORKERS")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .filter(|&n: &usize| n >= 1)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value
        .trim()
        .parse()
        .map_err(|_| ConfigError::invalid(key, format!("cannot parse `{}`", value.trim())))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value.trim() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        other => Err(ConfigError::invalid(key, format!("`{other}` is not a boolean"))),
    }
}

fn parse_list(value: &str) -> Vec<String> {
    value
        .split(',')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect()
}

/// Parses `a`, `a+bj`, `a-bj`, `bj`, or `(a,b)`.
pub fn parse_complex(text: &str) -> Option<Complex64> {
    let t: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if let Some(inner) = t.strip_prefix('(').and_then(|s| s.strip_suffix(')')) {
        let (re, im) = inner.split_once(',')?;
        return Some(Complex64::new(re.parse().ok()?, im.parse().ok()?));
    }
    let Some(body) = t.strip_suffix(['j', 'i']) else {
        return t.parse().ok().map(|re| Complex64::new(re, 0.0));
    };
    // split at the last sign that is not part of an exponent or the leading sign
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&i| (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E'));
    match split {
        Some(i) => {
            let re: f64 = body[..i].parse().ok()?;
            let im_text = &body[i..];
            let im: f64 = match im_text {
                "+" => 1.0,
                "-" => -1.0,
                s => s.parse().ok()?,
            };
            Some(Complex64::new(re, im))
        }
        None => {
            let im = match body {
                "" | "+" => 1.0,
                "-" => -1.0,
                s => s.parse().ok()?,
            };
            Some(Complex64::new(0.0, im))
        }
    }
}

impl SystemConfig {
    /// Every key accepted by [`SystemConfig::set`], in documentation order.
    pub const KEYS: &'static [&'static str] = &[
        "n_x", "n_y", "w_x", "n_t", "n_r", "m_o", "m_p", "f_carrier_hz", "d_ur_m", "d_rv_m",
        "d_uv_m", "rician_k", "paths_per_link", "scatter_gain_db", "shape_rv", "snr_db", "rsr_db",
        "lambda_c_m", "lambda_p_m", "modulation", "kappa_override", "power_p", "cem_k",
        "cem_iters", "cem_rho", "cem_alpha", "t_theta", "ao_eps", "ao_stop", "ao_max_iters",
        "mode", "init_seed", "detector", "trials", "symbols_per_trial", "workers", "schemes",
        "sweep_axis", "sweep_values", "timing_param", "timing_values", "timing_reps",
    ];

    pub fn n_ports(&self) -> usize {
        self.n_x * self.n_y
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let v = value.trim();
        match key.trim() {
            "n_x" => {
                // square grid unless n_y is set explicitly afterwards
                self.n_x = parse_num(key, v)?;
                self.n_y = self.n_x;
            }
            "n_y" => self.n_y = parse_num(key, v)?,
            "w_x" => self.w_x = parse_num(key, v)?,
            "n_t" => self.n_t = parse_num(key, v)?,
            "n_r" => self.n_r = parse_num(key, v)?,
            "m_o" => self.m_o = parse_num(key, v)?,
            "m_p" => self.m_p = parse_num(key, v)?,
            "f_carrier_hz" => self.f_carrier_hz = parse_num(key, v)?,
            "d_ur_m" => self.d_ur_m = parse_num(key, v)?,
            "d_rv_m" => self.d_rv_m = parse_num(key, v)?,
            "d_uv_m" => self.d_uv_m = parse_num(key, v)?,
            "rician_k" => self.rician_k = parse_num(key, v)?,
            "paths_per_link" => self.paths_per_link = parse_num(key, v)?,
            "scatter_gain_db" => self.scatter_gain_db = parse_num(key, v)?,
            "shape_rv" => self.shape_rv = parse_bool(key, v)?,
            "snr_db" => self.snr_db = parse_num(key, v)?,
            "rsr_db" => self.rsr_db = parse_num(key, v)?,
            "lambda_c_m" => self.lambda_c_m = parse_num(key, v)?,
            "lambda_p_m" => self.lambda_p_m = parse_num(key, v)?,
            "modulation" => self.modulation = v.parse()?,
            "kappa_override" => {
                self.kappa_override = match v {
                    "" | "none" => None,
                    s => Some(parse_complex(s).ok_or_else(|| {
                        ConfigError::invalid(key, format!("`{s}` is not a complex number"))
                    })?),
                }
            }
            "power_p" => self.power_p = parse_num(key, v)?,
            "cem_k" => self.cem_k = parse_num(key, v)?,
            "cem_iters" => self.cem_iters = parse_num(key, v)?,
            "cem_rho" => self.cem_rho = parse_num(key, v)?,
            "cem_alpha" => self.cem_alpha = parse_num(key, v)?,
            "t_theta" => self.t_theta = parse_num(key, v)?,
            "ao_eps" => self.ao_eps = parse_num(key, v)?,
            "ao_stop" => self.ao_stop = v.parse()?,
            "ao_max_iters" => self.ao_max_iters = parse_num(key, v)?,
            "mode" => self.mode = v.parse()?,
            "init_seed" => self.init_seed = parse_num(key, v)?,
            "detector" => self.detector = v.parse()?,
            "trials" => self.trials = parse_num(key, v)?,
            "symbols_per_trial" => self.symbols_per_trial = parse_num(key, v)?,
            "workers" => self.workers = parse_num(key, v)?,
            "schemes" => {
                self.schemes = parse_list(v)
                    .iter()
                    .map(|s| s.parse())
                    .collect::<Result<_, _>>()?
            }
            "sweep_axis" => self.sweep_axis = v.parse()?,
            "sweep_values" => self.sweep_values = parse_list(v),
            "timing_param" => self.timing_param = v.to_string(),
            "timing_values" => self.timing_values = parse_list(v),
            "timing_reps" => self.timing_reps = parse_num(key, v)?,
            other => return Err(ConfigError::UnknownKey(other.to_string())),
        }
        Ok(())
    }

    /// Applies a `key=value` override (as given to `--set`).
    pub fn apply_override(&mut self, assignment: &str) -> Result<(), ConfigError> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| ConfigError::Syntax {
                line: 0,
                text: assignment.to_string(),
            })?;
        self.set(k, v)
    }

    /// Parses config text on top of the defaults, then validates.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        cfg.merge_text(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn merge_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: i + 1,
                text: raw.to_string(),
            })?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Renders the configuration back into the flat text format.
    pub fn to_text(&self) -> String {
        let kappa = self
            .kappa_override
            .map_or_else(|| "none".to_string(), |k| format!("({},{})", k.re, k.im));
        let join = |v: &[String]| v.join(",");
        let schemes: Vec<String> = self.schemes.iter().map(|s| s.to_string()).collect();
        let pairs: Vec<(&str, String)> = vec![
            ("n_x", self.n_x.to_string()),
            ("n_y", self.n_y.to_string()),
            ("w_x", self.w_x.to_string()),
            ("n_t", self.n_t.to_string()),
            ("n_r", self.n_r.to_string()),
            ("m_o", self.m_o.to_string()),
            ("m_p", self.m_p.to_string()),
            ("f_carrier_hz", self.f_carrier_hz.to_string()),
            ("d_ur_m", self.d_ur_m.to_string()),
            ("d_rv_m", self.d_rv_m.to_string()),
            ("d_uv_m", self.d_uv_m.to_string()),
            ("rician_k", self.rician_k.to_string()),
            ("paths_per_link", self.paths_per_link.to_string()),
            ("scatter_gain_db", self.scatter_gain_db.to_string()),
            ("shape_rv", self.shape_rv.to_string()),
            ("snr_db", self.snr_db.to_string()),
            ("rsr_db", self.rsr_db.to_string()),
            ("lambda_c_m", self.lambda_c_m.to_string()),
            ("lambda_p_m", self.lambda_p_m.to_string()),
            ("modulation", self.modulation.to_string()),
            ("kappa_override", kappa),
            ("power_p", self.power_p.to_string()),
            ("cem_k", self.cem_k.to_string()),
            ("cem_iters", self.cem_iters.to_string()),
            ("cem_rho", self.cem_rho.to_string()),
            ("cem_alpha", self.cem_alpha.to_string()),
            ("t_theta", self.t_theta.to_string()),
            ("ao_eps", self.ao_eps.to_string()),
            ("ao_stop", self.ao_stop.to_string()),
            ("ao_max_iters", self.ao_max_iters.to_string()),
            ("mode", self.mode.to_string()),
            ("init_seed", self.init_seed.to_string()),
            ("detector", self.detector.to_string()),
            ("trials", self.trials.to_string()),
            ("symbols_per_trial", self.symbols_per_trial.to_string()),
            ("workers", self.workers.to_string()),
            ("schemes", schemes.join(",")),
            ("sweep_axis", self.sweep_axis.to_string()),
            ("sweep_values", join(&self.sweep_values)),
            ("timing_param", self.timing_param.clone()),
            ("timing_values", join(&self.timing_values)),
            ("timing_reps", self.timing_reps.to_string()),
        ];
        // n_y must follow n_x because setting n_x resets it
        pairs.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = |key: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(ConfigError::invalid(key, format!("must be positive and finite, got {v}")))
            }
        };
        let at_least_one = |key: &str, v: usize| {
            if v >= 1 {
                Ok(())
            } else {
                Err(ConfigError::invalid(key, "must be at least 1"))
            }
        };
        at_least_one("n_x", self.n_x)?;
        at_least_one("n_y", self.n_y)?;
        at_least_one("n_t", self.n_t)?;
        at_least_one("n_r", self.n_r)?;
        at_least_one("m_o", self.m_o)?;
        at_least_one("m_p", self.m_p)?;
        at_least_one("paths_per_link", self.paths_per_link)?;
        at_least_one("cem_k", self.cem_k)?;
        at_least_one("cem_iters", self.cem_iters)?;
        at_least_one("t_theta", self.t_theta)?;
        at_least_one("ao_max_iters", self.ao_max_iters)?;
        at_least_one("trials", self.trials)?;
        at_least_one("symbols_per_trial", self.symbols_per_trial)?;
        at_least_one("workers", self.workers)?;
        at_least_one("timing_reps", self.timing_reps)?;
        if self.m_o > self.n_ports() {
            return Err(ConfigError::invalid(
                "m_o",
                format!("cannot exceed the port count {}", self.n_ports()),
            ));
        }
        positive("w_x", self.w_x)?;
        positive("f_carrier_hz", self.f_carrier_hz)?;
        positive("d_ur_m", self.d_ur_m)?;
        positive("d_rv_m", self.d_rv_m)?;
        positive("d_uv_m", self.d_uv_m)?;
        positive("lambda_c_m", self.lambda_c_m)?;
        positive("lambda_p_m", self.lambda_p_m)?;
        positive("power_p", self.power_p)?;
        if !(self.rician_k >= 0.0) {
            return Err(ConfigError::invalid("rician_k", "must be non-negative"));
        }
        if !self.scatter_gain_db.is_finite() {
            return Err(ConfigError::invalid("scatter_gain_db", "must be finite"));
        }
        if !self.snr_db.is_finite() {
            return Err(ConfigError::invalid("snr_db", "must be finite"));
        }
        if !self.rsr_db.is_finite() {
            return Err(ConfigError::invalid("rsr_db", "must be finite"));
        }
        if !(self.cem_rho > 0.0 && self.cem_rho < 1.0) {
            return Err(ConfigError::invalid("cem_rho", "must lie in (0, 1)"));
        }
        if self.cem_rho * (self.cem_k as f64) < 1.0 {
            return Err(ConfigError::invalid("cem_rho", "cem_rho * cem_k must be at least 1"));
        }
        if !(self.cem_alpha > 0.0 && self.cem_alpha <= 1.0) {
            return Err(ConfigError::invalid("cem_alpha", "must lie in (0, 1]"));
        }
        if !(self.ao_eps > 0.0) {
            return Err(ConfigError::invalid("ao_eps", "must be positive (inf allowed)"));
        }
        if self.schemes.is_empty() {
            return Err(ConfigError::invalid("schemes", "at least one scheme is required"));
        }
        Ok(())
    }

    /// Returns a copy with a sweep axis set to `value`.
    pub fn with_axis(&self, axis: SweepAxis, value: &str) -> Result<Self, ConfigError> {
        let mut cfg = self.clone();
        let key = match axis {
            SweepAxis::SnrDb => "snr_db",
            SweepAxis::RsrDb => "rsr_db",
            SweepAxis::MO => "m_o",
            SweepAxis::NT => "n_t",
            SweepAxis::Modulation => "modulation",
        };
        cfg.set(key, value)?;
        cfg.validate()?;
        Ok(cfg)
    }
}
