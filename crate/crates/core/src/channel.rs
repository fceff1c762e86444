//! Channel synthesis for one FRIS-assisted atomic link realization.
//!
//! Port correlation follows the isotropic-scattering `j0` kernel on a uniform
//! grid; the BS→FRIS link is Rician, while the FRIS→receiver and direct links
//! use the atomic path-sum model (dipole projection onto random polarizations).

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::config::SystemConfig;
use crate::numerics::{psd_sqrt, ComplexMatrix, ComplexVector, NumericsError};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const HBAR: f64 = 1.054_571_817e-34;
pub const ELEMENTARY_CHARGE: f64 = 1.602e-19;
pub const BOHR_RADIUS: f64 = 5.292e-11;
/// RF transition dipole of the 52D5/2 -> 53P3/2 pair, in units of q·a0.
pub const DIPOLE_ATOMIC_UNITS: f64 = 1785.916;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChannelError {
    #[error("port index {index} out of range for {ports} ports")]
    IndexOutOfRange { index: usize, ports: usize },
    #[error("port {0} selected more than once")]
    DuplicatePort(usize),
    #[error("expected {expected} phases for the selected ports, got {got}")]
    PhaseCount { expected: usize, got: usize },
    #[error("phase index {index} outside codebook of size {size}")]
    PhaseOutOfCodebook { index: usize, size: usize },
    #[error("LO power must be positive, got {0}")]
    NonPositivePower(f64),
    #[error("invalid geometry: {0}")]
    Geometry(&'static str),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    pub d_ur: f64,
    pub d_rv: f64,
    pub d_uv: f64,
    pub carrier_frequency: f64,
    pub n_x: usize,
    pub n_y: usize,
    pub w_x: f64,
}

impl Geometry {
    pub fn from_config(cfg: &SystemConfig) -> Result<Self, ChannelError> {
        let g = Self {
            d_ur: cfg.d_ur_m,
            d_rv: cfg.d_rv_m,
            d_uv: cfg.d_uv_m,
            carrier_frequency: cfg.f_carrier_hz,
            n_x: cfg.n_x,
            n_y: cfg.n_y,
            w_x: cfg.w_x,
        };
        g.check()?;
        Ok(g)
    }

    fn check(&self) -> Result<(), ChannelError> {
        if !(self.d_ur > 0.0 && self.d_rv > 0.0 && self.d_uv > 0.0) {
            return Err(ChannelError::Geometry("distances must be positive"));
        }
        if !(self.carrier_frequency > 0.0) || !(self.w_x > 0.0) {
            return Err(ChannelError::Geometry("frequency and aperture must be positive"));
        }
        if self.n_x == 0 || self.n_y == 0 {
            return Err(ChannelError::Geometry("grid must have at least one port"));
        }
        Ok(())
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_frequency
    }

    /// Inter-port spacing `W_x λ / N_x`, shared by both grid directions.
    pub fn spacing(&self) -> f64 {
        self.w_x * self.wavelength() / self.n_x as f64
    }

    pub fn n_ports(&self) -> usize {
        self.n_x * self.n_y
    }

    /// Row-major port position `(x, y)` in meters; index = row * n_x + col.
    pub fn port_position(&self, index: usize) -> (f64, f64) {
        let d = self.spacing();
        ((index % self.n_x) as f64 * d, (index / self.n_x) as f64 * d)
    }

    pub fn port_distance(&self, m: usize, n: usize) -> f64 {
        let (xm, ym) = self.port_position(m);
        let (xn, yn) = self.port_position(n);
        (xm - xn).hypot(ym - yn)
    }

    /// The `count` ports closest to the grid center, ties broken by lowest index.
    pub fn center_ports(&self, count: usize) -> Vec<usize> {
        let cx = (self.n_x as f64 - 1.0) / 2.0;
        let cy = (self.n_y as f64 - 1.0) / 2.0;
        let mut order: Vec<(f64, usize)> = (0..self.n_ports())
            .map(|i| {
                let dx = (i % self.n_x) as f64 - cx;
                let dy = (i / self.n_x) as f64 - cy;
                (dx * dx + dy * dy, i)
            })
            .collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut ports: Vec<usize> = order.into_iter().take(count).map(|(_, i)| i).collect();
        ports.sort_unstable();
        ports
    }
}

/// Spherical Bessel function of order zero, `sin(x)/x`.
pub fn j0(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

#[derive(Debug, Clone)]
pub struct PortCorrelation {
    pub r_f: DMatrix<f64>,
    pub r_sqrt: DMatrix<f64>,
}

pub fn build_correlation(geometry: &Geometry) -> Result<PortCorrelation, ChannelError> {
    geometry.check()?;
    let n = geometry.n_ports();
    let k = 2.0 * PI / geometry.wavelength();
    let r_f = DMatrix::from_fn(n, n, |m, q| j0(k * geometry.port_distance(m, q)));
    let r_sqrt = psd_sqrt(&r_f)?;
    Ok(PortCorrelation { r_f, r_sqrt })
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

fn random_phasor<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    Complex64::from_polar(1.0, rng.gen_range(0.0..2.0 * PI))
}

/// Rician matrix with unit average entry power.
///
/// The LOS part is the rank-one outer product of two random-phase unit-modulus vectors.
pub fn sample_rician<R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    k_factor: f64,
    rng: &mut R,
) -> ComplexMatrix {
    let a: Vec<Complex64> = (0..rows).map(|_| random_phasor(rng)).collect();
    let b: Vec<Complex64> = (0..cols).map(|_| random_phasor(rng)).collect();
    let los_gain = if k_factor.is_infinite() { 1.0 } else { (k_factor / (k_factor + 1.0)).sqrt() };
    let nlos_gain = if k_factor.is_infinite() { 0.0 } else { (1.0 / (k_factor + 1.0)).sqrt() };
    let mut h = ComplexMatrix::zeros(rows, cols);
    // column-major fill keeps the draw order stable
    for j in 0..cols {
        for i in 0..rows {
            let los = a[i] * b[j].conj();
            h[(i, j)] = los * los_gain + complex_gaussian(rng) * nlos_gain;
        }
    }
    h
}

/// Parameters of the atomic path-sum model.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomicPathParams {
    /// RF transition dipole moment, C·m.
    pub dipole: [f64; 3],
    pub hbar: f64,
    pub paths_per_link: usize,
    /// Gain of every path after the first, relative to free space.
    pub scatter_gain_db: f64,
    pub wavelength: f64,
}

impl AtomicPathParams {
    pub fn from_config(cfg: &SystemConfig) -> Self {
        Self {
            dipole: [0.0, DIPOLE_ATOMIC_UNITS * ELEMENTARY_CHARGE * BOHR_RADIUS, 0.0],
            hbar: HBAR,
            paths_per_link: cfg.paths_per_link,
            scatter_gain_db: cfg.scatter_gain_db,
            wavelength: SPEED_OF_LIGHT / cfg.f_carrier_hz,
        }
    }

    pub fn dipole_norm(&self) -> f64 {
        dot(&self.dipole, &self.dipole).sqrt()
    }

    /// `[λ/(4πd), λ/(4πd)·g, ...]` with `g` the scatter amplitude gain.
    pub fn path_amplitudes(&self, distance: f64) -> Vec<f64> {
        let free_space = self.wavelength / (4.0 * PI * distance);
        let scatter = 10f64.powf(self.scatter_gain_db / 20.0);
        (0..self.paths_per_link)
            .map(|l| if l == 0 { free_space } else { free_space * scatter })
            .collect()
    }
}

/// One propagation path of the path-sum model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtomicPath {
    pub polarization: [f64; 3],
    pub amplitude: f64,
    pub phase: f64,
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn normalized(v: [f64; 3]) -> [f64; 3] {
    let n = dot(&v, &v).sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}

/// Uniform direction on the sphere and a polarization uniform on the unit
/// circle orthogonal to it. Returns `(direction, polarization)`.
pub fn sample_polarization<R: Rng + ?Sized>(rng: &mut R) -> ([f64; 3], [f64; 3]) {
    let direction = loop {
        let v: [f64; 3] = [
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        ];
        if dot(&v, &v) > 1e-12 {
            break normalized(v);
        }
    };
    let helper = if direction[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let e1 = normalized(cross(&direction, &helper));
    let e2 = cross(&direction, &e1);
    let psi = rng.gen_range(0.0..2.0 * PI);
    let (s, c) = psi.sin_cos();
    let eps = [c * e1[0] + s * e2[0], c * e1[1] + s * e2[1], c * e1[2] + s * e2[2]];
    (direction, eps)
}

/// `Σ_l (1/ħ) μᵀ ε_l ρ_l e^{jφ_l}`.
pub fn atomic_entry(params: &AtomicPathParams, paths: &[AtomicPath]) -> Complex64 {
    paths
        .iter()
        .map(|p| {
            Complex64::from_polar(dot(&params.dipole, &p.polarization) / params.hbar * p.amplitude, p.phase)
        })
        .sum()
}

pub fn sample_atomic_channel<R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    distance: f64,
    params: &AtomicPathParams,
    rng: &mut R,
) -> ComplexMatrix {
    let amplitudes = params.path_amplitudes(distance);
    let mut paths = Vec::with_capacity(amplitudes.len());
    let mut h = ComplexMatrix::zeros(rows, cols);
    for j in 0..cols {
        for i in 0..rows {
            paths.clear();
            for &amplitude in &amplitudes {
                let (_, polarization) = sample_polarization(rng);
                let phase = rng.gen_range(0.0..2.0 * PI);
                paths.push(AtomicPath { polarization, amplitude, phase });
            }
            h[(i, j)] = atomic_entry(params, &paths);
        }
    }
    h
}

/// LO reference vector with unit reference symbol and unit common amplitude;
/// all LO scaling lives in `lo_power`.
///
/// The LO sits next to the vapor cells and is polarized along the transition
/// dipole, so every entry has magnitude `|μ| √P_b / ħ` and only the phases vary.
pub fn sample_reference<R: Rng + ?Sized>(
    n_r: usize,
    lo_power: f64,
    params: &AtomicPathParams,
    rng: &mut R,
) -> Result<ComplexVector, ChannelError> {
    if !(lo_power > 0.0) {
        return Err(ChannelError::NonPositivePower(lo_power));
    }
    let amplitude = params.dipole_norm() / params.hbar * lo_power.sqrt();
    Ok(ComplexVector::from_iterator(
        n_r,
        (0..n_r).map(|_| Complex64::from_polar(amplitude, rng.gen_range(0.0..2.0 * PI))),
    ))
}

/// Channels and LO reference of one realization.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    /// BS → FRIS, `N × N_t`.
    pub h_ur: ComplexMatrix,
    /// FRIS → receiver, `N_r × N`.
    pub h_rv: ComplexMatrix,
    /// BS → receiver direct link, `N_r × N_t`.
    pub h_uv: ComplexMatrix,
    /// LO reference before power calibration.
    pub r: ComplexVector,
}

impl ChannelSet {
    pub fn n_ports(&self) -> usize {
        self.h_ur.nrows()
    }
    pub fn n_t(&self) -> usize {
        self.h_ur.ncols()
    }
    pub fn n_r(&self) -> usize {
        self.h_rv.nrows()
    }

    /// Multiplies every channel and the reference by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let c = Complex64::new(factor, 0.0);
        Self {
            h_ur: &self.h_ur * c,
            h_rv: &self.h_rv * c,
            h_uv: &self.h_uv * c,
            r: &self.r * c,
        }
    }
}

/// Geometry-dependent pieces computed once and reused for every realization.
#[derive(Debug, Clone)]
pub struct ChannelModel {
    pub geometry: Geometry,
    pub correlation: PortCorrelation,
    pub atomic: AtomicPathParams,
    pub n_t: usize,
    pub n_r: usize,
    pub rician_k: f64,
    pub shape_rv: bool,
}

impl ChannelModel {
    pub fn from_config(cfg: &SystemConfig) -> Result<Self, ChannelError> {
        let geometry = Geometry::from_config(cfg)?;
        let correlation = build_correlation(&geometry)?;
        Ok(Self {
            geometry,
            correlation,
            atomic: AtomicPathParams::from_config(cfg),
            n_t: cfg.n_t,
            n_r: cfg.n_r,
            rician_k: cfg.rician_k,
            shape_rv: cfg.shape_rv,
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ChannelSet {
        let n = self.geometry.n_ports();
        let r_sqrt = self.correlation.r_sqrt.map(|v| Complex64::new(v, 0.0));
        let h_ur_bar = sample_rician(n, self.n_t, self.rician_k, rng);
        let h_rv_bar = sample_atomic_channel(self.n_r, n, self.geometry.d_rv, &self.atomic, rng);
        let h_uv = sample_atomic_channel(self.n_r, self.n_t, self.geometry.d_uv, &self.atomic, rng);
        let r = sample_reference(self.n_r, 1.0, &self.atomic, rng)
            .expect("unit LO power is positive");
        let h_rv = if self.shape_rv { h_rv_bar * &r_sqrt } else { h_rv_bar };
        ChannelSet {
            h_ur: &r_sqrt * h_ur_bar,
            h_rv,
            h_uv,
            r,
        }
    }
}

/// Selected ports and their codebook phases.
///
/// Phases are stored as codebook indices `k`, i.e. `θ = 2πk / M_p`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrisState {
    pub ports: Vec<usize>,
    pub phase_idx: Vec<usize>,
    pub codebook_size: usize,
}

impl FrisState {
    pub fn new(
        ports: Vec<usize>,
        phase_idx: Vec<usize>,
        codebook_size: usize,
        n_ports: usize,
    ) -> Result<Self, ChannelError> {
        let state = Self { ports, phase_idx, codebook_size };
        state.check(n_ports)?;
        Ok(state)
    }

    pub fn check(&self, n_ports: usize) -> Result<(), ChannelError> {
        if self.phase_idx.len() != self.ports.len() {
            return Err(ChannelError::PhaseCount {
                expected: self.ports.len(),
                got: self.phase_idx.len(),
            });
        }
        let mut seen = vec![false; n_ports];
        for &p in &self.ports {
            if p >= n_ports {
                return Err(ChannelError::IndexOutOfRange { index: p, ports: n_ports });
            }
            if std::mem::replace(&mut seen[p], true) {
                return Err(ChannelError::DuplicatePort(p));
            }
        }
        if let Some(&k) = self.phase_idx.iter().find(|&&k| k >= self.codebook_size) {
            return Err(ChannelError::PhaseOutOfCodebook { index: k, size: self.codebook_size });
        }
        Ok(())
    }

    pub fn phases(&self) -> Vec<f64> {
        self.phase_idx
            .iter()
            .map(|&k| codebook_phase(k, self.codebook_size))
            .collect()
    }

    pub fn phasors(&self) -> Vec<Complex64> {
        self.phase_idx
            .iter()
            .map(|&k| codebook_phasor(k, self.codebook_size))
            .collect()
    }
}

pub fn codebook_phase(k: usize, size: usize) -> f64 {
    2.0 * PI * k as f64 / size as f64
}

pub fn codebook_phasor(k: usize, size: usize) -> Complex64 {
    Complex64::from_polar(1.0, codebook_phase(k, size))
}

/// `H_RV S_Γ Φ S_Γᵀ H_UR + H_UV`, built from the selected columns/rows only.
pub fn equivalent_channel(cs: &ChannelSet, fs: &FrisState) -> Result<ComplexMatrix, ChannelError> {
    fs.check(cs.n_ports())?;
    Ok(equivalent_channel_with(cs, &fs.ports, &fs.phasors()))
}

/// Unchecked variant taking explicit phasors for the selected ports.
pub(crate) fn equivalent_channel_with(
    cs: &ChannelSet,
    ports: &[usize],
    phasors: &[Complex64],
) -> ComplexMatrix {
    let mut h = cs.h_uv.clone();
    for (&p, &phi) in ports.iter().zip(phasors) {
        let col = cs.h_rv.column(p) * phi;
        let row = cs.h_ur.row(p);
        h.ger(Complex64::new(1.0, 0.0), &col, &row.transpose(), Complex64::new(1.0, 0.0));
    }
    h
}
