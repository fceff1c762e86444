//! Quadrature-leakage objective and its per-coordinate scalar form.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;

use crate::channel::{ChannelSet, FrisState};
use crate::config::Modulation;
use crate::numerics::{ComplexMatrix, ComplexVector};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Constellation indexed by Gray label: the bits of a label are the transmitted bits.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolModel {
    pub modulation: Modulation,
    pub points: Vec<Complex64>,
    pub bits_per_symbol: usize,
    /// Pseudo-variance `E[s²]` under a uniform prior.
    pub kappa: Complex64,
}

/// Per-axis Gray map for 4-PAM: 00→−3, 01→−1, 11→1, 10→3.
fn pam4_level(gray: usize) -> f64 {
    match gray {
        0b00 => -3.0,
        0b01 => -1.0,
        0b11 => 1.0,
        _ => 3.0,
    }
}

impl SymbolModel {
    pub fn new(modulation: Modulation) -> Self {
        let points: Vec<Complex64> = match modulation {
            Modulation::Bpsk => vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)],
            Modulation::Qam4 => (0..4)
                .map(|label| {
                    let i = if label & 0b10 == 0 { 1.0 } else { -1.0 };
                    let q = if label & 0b01 == 0 { 1.0 } else { -1.0 };
                    Complex64::new(i, q) * FRAC_1_SQRT_2
                })
                .collect(),
            Modulation::Qam16 => (0..16)
                .map(|label| {
                    Complex64::new(pam4_level(label >> 2), pam4_level(label & 0b11)) / 10f64.sqrt()
                })
                .collect(),
        };
        let kappa = points.iter().map(|s| s * s).sum::<Complex64>() / points.len() as f64;
        // exact zero for proper constellations keeps the pseudo terms out of the κ = 0 path
        let kappa = Complex64::new(clean(kappa.re), clean(kappa.im));
        let bits_per_symbol = points.len().trailing_zeros() as usize;
        Self { modulation, points, bits_per_symbol, kappa }
    }

    pub fn order(&self) -> usize {
        self.points.len()
    }

    pub fn mean_energy(&self) -> f64 {
        self.points.iter().map(|s| s.norm_sqr()).sum::<f64>() / self.points.len() as f64
    }

    /// Number of differing bits between two labels.
    pub fn bit_errors(&self, a: usize, b: usize) -> u32 {
        (a ^ b).count_ones()
    }

    /// Nearest constellation point to `z`, ties to the lowest label.
    pub fn slice(&self, z: Complex64) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (k, s) in self.points.iter().enumerate() {
            let d = (z - s).norm_sqr();
            if d < best_d {
                best = k;
                best_d = d;
            }
        }
        best
    }
}

fn clean(v: f64) -> f64 {
    if v.abs() < 1e-14 {
        0.0
    } else {
        v
    }
}

/// `e^{−j∠r}` entrywise; zero entries map to 1.
pub fn alignment(r: &ComplexVector) -> ComplexVector {
    r.map(|v| {
        let n = v.norm();
        if n > 0.0 {
            v.conj() / n
        } else {
            Complex64::new(1.0, 0.0)
        }
    })
}

/// Leakage of an already-aligned effective gain `g = D_r H w`:
/// `½(‖g‖² − Re{κ Σ g_m²})`.
pub fn leakage_of_aligned(g: &ComplexVector, kappa: Complex64) -> f64 {
    let energy = g.norm_squared();
    if kappa == ZERO {
        return 0.5 * energy;
    }
    let pseudo: Complex64 = g.iter().map(|v| v * v).sum();
    0.5 * (energy - (kappa * pseudo).re)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeakageContext {
    /// Diagonal of `D_r`.
    pub d_r: ComplexVector,
    pub h_eq: ComplexMatrix,
    pub w: ComplexVector,
    pub kappa: Complex64,
}

impl LeakageContext {
    pub fn aligned_gain(&self) -> ComplexVector {
        (&self.h_eq * &self.w).component_mul(&self.d_r)
    }

    pub fn leakage(&self) -> f64 {
        leakage_of_aligned(&self.aligned_gain(), self.kappa)
    }

    /// Trace form with full `Q = wwᴴ` and `P = κwwᵀ`; reference path for tests.
    pub fn leakage_dense(&self) -> f64 {
        let q = &self.w * self.w.adjoint();
        let p = &self.w * self.w.transpose() * self.kappa;
        let d2 = ComplexMatrix::from_diagonal(&self.d_r.map(|v| v * v));
        let h = &self.h_eq;
        let energy = (h * q * h.adjoint()).trace();
        let pseudo = (h * p * h.transpose() * d2).trace();
        0.5 * (energy.re - pseudo.re)
    }
}

/// Leakage of the equivalent channel defined by a FRIS state.
pub fn leakage(
    cs: &ChannelSet,
    fs: &FrisState,
    w: &ComplexVector,
    d_r: &ComplexVector,
    kappa: Complex64,
) -> f64 {
    let h = crate::channel::equivalent_channel_with(cs, &fs.ports, &fs.phasors());
    leakage_of_aligned(&(h * w).component_mul(d_r), kappa)
}

/// `L(φ) = C + Re{αφ} + Re{βφ²}` for one coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CdCoefficients {
    pub alpha: Complex64,
    pub beta: Complex64,
    pub constant: f64,
}

impl CdCoefficients {
    /// From the aligned gain without the coordinate (`y₋`) and its aligned contribution `a`.
    pub fn from_parts(y_minus: &ComplexVector, a: &ComplexVector, kappa: Complex64) -> Self {
        let ya: Complex64 = y_minus.dotc(a);
        let (cross, aa, yy) = if kappa == ZERO {
            (ZERO, ZERO, ZERO)
        } else {
            (
                y_minus.iter().zip(a.iter()).map(|(y, a)| y * a).sum(),
                a.iter().map(|v| v * v).sum(),
                y_minus.iter().map(|v| v * v).sum::<Complex64>(),
            )
        };
        Self {
            alpha: ya - kappa * cross,
            beta: -0.5 * kappa * aa,
            constant: 0.5 * (y_minus.norm_squared() + a.norm_squared() - (kappa * yy).re),
        }
    }

    pub fn eval(&self, phi: Complex64) -> f64 {
        self.constant + (self.alpha * phi).re + (self.beta * phi * phi).re
    }

    pub fn is_zero(&self) -> bool {
        self.alpha == ZERO && self.beta == ZERO
    }
}

/// Coefficients for coordinate `l` computed from scratch.
pub fn cd_coefficients(
    l: usize,
    cs: &ChannelSet,
    fs: &FrisState,
    w: &ComplexVector,
    d_r: &ComplexVector,
    kappa: Complex64,
) -> CdCoefficients {
    let mut phasors = fs.phasors();
    phasors[l] = ZERO;
    let h_minus = crate::channel::equivalent_channel_with(cs, &fs.ports, &phasors);
    let y_minus = (h_minus * w).component_mul(d_r);
    let p = fs.ports[l];
    let a = (cs.h_rv.column(p) * (cs.h_ur.row(p) * w)[0]).component_mul(d_r);
    CdCoefficients::from_parts(&y_minus, &a, kappa)
}

/// Aligned per-port contributions for a fixed beamformer.
///
/// With `c_n = D_r H_RV[:,n] (H_UR[n,:] w)` and `b = D_r H_UV w`, the aligned gain
/// of any state is `b + Σ_{n∈Γ} φ_n c_n`, so one evaluation costs `O(M_o N_r)`.
#[derive(Debug, Clone)]
pub struct PortContributions {
    pub base: ComplexVector,
    /// Column `n` is `c_n`.
    pub columns: ComplexMatrix,
    pub kappa: Complex64,
}

impl PortContributions {
    pub fn new(cs: &ChannelSet, w: &ComplexVector, d_r: &ComplexVector, kappa: Complex64) -> Self {
        let u = &cs.h_ur * w;
        let mut columns = cs.h_rv.clone();
        for (n, mut col) in columns.column_iter_mut().enumerate() {
            for (m, v) in col.iter_mut().enumerate() {
                *v *= u[n] * d_r[m];
            }
        }
        Self { base: (&cs.h_uv * w).component_mul(d_r), columns, kappa }
    }

    pub fn aligned_gain(&self, ports: &[usize], phasors: &[Complex64]) -> ComplexVector {
        let mut g = self.base.clone();
        for (&p, &phi) in ports.iter().zip(phasors) {
            g.axpy(phi, &self.columns.column(p), Complex64::new(1.0, 0.0));
        }
        g
    }

    pub fn leakage(&self, ports: &[usize], phasors: &[Complex64]) -> f64 {
        leakage_of_aligned(&self.aligned_gain(ports, phasors), self.kappa)
    }

    pub fn contribution(&self, port: usize) -> ComplexVector {
        self.columns.column(port).into_owned()
    }
}
