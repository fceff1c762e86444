//! Symbol detectors for the magnitude readout, plus an idealized coherent baseline.

use nalgebra::{DVector, Matrix2, Vector2};
use num_complex::Complex64;
use thiserror::Error;

use crate::numerics::{ComplexMatrix, ComplexVector};
use crate::objective::SymbolModel;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum DetectionError {
    #[error("effective gain is zero")]
    ZeroGain,
    #[error("dimension mismatch: {0} vs {1}")]
    Dimension(usize, usize),
}

/// Readout together with the reference and aligned gain `g* = D_r H w`.
#[derive(Debug, Clone, Copy)]
pub struct DetectorInput<'a> {
    pub y: &'a DVector<f64>,
    pub r: &'a ComplexVector,
    pub g_star: &'a ComplexVector,
    pub model: &'a SymbolModel,
}

impl DetectorInput<'_> {
    fn check(&self) -> Result<(), DetectionError> {
        if self.y.len() != self.r.len() {
            return Err(DetectionError::Dimension(self.y.len(), self.r.len()));
        }
        if self.g_star.len() != self.y.len() {
            return Err(DetectionError::Dimension(self.y.len(), self.g_star.len()));
        }
        Ok(())
    }
}

/// Unconstrained scalar estimate `Re{g}ᵀ(y − |r|) / ‖Re{g}‖²`.
pub fn scalar_ls_statistic(input: &DetectorInput<'_>) -> Result<f64, DetectionError> {
    input.check()?;
    let mut num = 0.0;
    let mut den = 0.0;
    for m in 0..input.y.len() {
        let g = input.g_star[m].re;
        num += g * (input.y[m] - input.r[m].norm());
        den += g * g;
    }
    if !(den > 0.0) {
        return Err(DetectionError::ZeroGain);
    }
    Ok(num / den)
}

/// Scalar LS on the real part of the aligned gain followed by nearest-point slicing.
pub fn detect_scalar_ls(input: &DetectorInput<'_>) -> Result<usize, DetectionError> {
    let s = scalar_ls_statistic(input)?;
    Ok(input.model.slice(Complex64::new(s, 0.0)))
}

/// Two-column real LS on `[Re g, −Im g]`, recovering both quadratures of `s`.
pub fn detect_wl_ls(input: &DetectorInput<'_>) -> Result<usize, DetectionError> {
    input.check()?;
    let (mut a11, mut a12, mut a22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for m in 0..input.y.len() {
        let (p, q) = (input.g_star[m].re, -input.g_star[m].im);
        let e = input.y[m] - input.r[m].norm();
        a11 += p * p;
        a12 += p * q;
        a22 += q * q;
        b1 += p * e;
        b2 += q * e;
    }
    if !(a11 + a22 > 0.0) {
        return Err(DetectionError::ZeroGain);
    }
    let normal = Matrix2::new(a11, a12, a12, a22);
    // pseudo-inverse handles the rank-one case (gain confined to one quadrature)
    let pinv = normal
        .pseudo_inverse(1e-12 * (a11 + a22))
        .map_err(|_| DetectionError::ZeroGain)?;
    let x = pinv * Vector2::new(b1, b2);
    Ok(input.model.slice(Complex64::new(x[0], x[1])))
}

/// `argmin_s ‖y − |h s + r|‖²` over the constellation, with `h = H w`.
pub fn detect_exhaustive_ls_gain(
    y: &DVector<f64>,
    h: &ComplexVector,
    r: &ComplexVector,
    model: &SymbolModel,
) -> usize {
    let mut best = 0;
    let mut best_cost = f64::INFINITY;
    for (k, s) in model.points.iter().enumerate() {
        let cost: f64 = (0..y.len()).map(|m| (y[m] - (h[m] * s + r[m]).norm()).powi(2)).sum();
        if cost < best_cost {
            best = k;
            best_cost = cost;
        }
    }
    best
}

pub fn detect_exhaustive_ls(
    y: &DVector<f64>,
    h_eq: &ComplexMatrix,
    w: &ComplexVector,
    r: &ComplexVector,
    model: &SymbolModel,
) -> usize {
    detect_exhaustive_ls_gain(y, &(h_eq * w), r, model)
}

/// Coherent matched-filter estimate `hᴴ y / ‖h‖²` with known phase, then slicing.
pub fn detect_zf_known_phase(
    y_complex: &ComplexVector,
    h: &ComplexVector,
    model: &SymbolModel,
) -> Result<usize, DetectionError> {
    let energy = h.norm_squared();
    if !(energy > 0.0) {
        return Err(DetectionError::ZeroGain);
    }
    Ok(model.slice(h.dotc(y_complex) / energy))
}
