use nalgebra::DMatrix;
use num_complex::Complex64;

use super::OptimizerError;
use crate::numerics::{min_eigenpair, ComplexMatrix, ComplexVector};

/// Closed-form beamformer together with the smallest eigenvalue of the real form.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformerUpdate {
    pub w: ComplexVector,
    /// `λ_min(G)`; the optimal value of `w̃ᵀ G w̃` is `P λ_min`, i.e. twice the leakage.
    pub lambda_min: f64,
}

/// Real `2N_t × 2N_t` matrix `G` with `w̃ᵀ G w̃ = wᴴRw − Re{κ wᵀBw}` for `w̃ = [Re w; Im w]`.
pub fn widely_linear_matrix(h_eq: &ComplexMatrix, d_r: &ComplexVector, kappa: Complex64) -> DMatrix<f64> {
    let n = h_eq.ncols();
    let r = h_eq.adjoint() * h_eq;
    let mut g = DMatrix::zeros(2 * n, 2 * n);
    let c = if kappa == Complex64::new(0.0, 0.0) {
        ComplexMatrix::zeros(n, n)
    } else {
        let d2h = ComplexMatrix::from_fn(h_eq.nrows(), n, |m, k| d_r[m] * d_r[m] * h_eq[(m, k)]);
        h_eq.transpose() * d2h * kappa
    };
    for i in 0..n {
        for j in 0..n {
            let (rr, ri) = (r[(i, j)].re, r[(i, j)].im);
            let (cr, ci) = (c[(i, j)].re, c[(i, j)].im);
            g[(i, j)] = rr - cr;
            g[(i, n + j)] = -ri + ci;
            g[(n + i, j)] = ri + ci;
            g[(n + i, n + j)] = rr + cr;
        }
    }
    g
}

pub fn update_beamformer(
    h_eq: &ComplexMatrix,
    d_r: &ComplexVector,
    kappa: Complex64,
    power: f64,
) -> Result<BeamformerUpdate, OptimizerError> {
    if h_eq.iter().all(|v| v.norm_sqr() == 0.0) {
        return Err(OptimizerError::ZeroChannel);
    }
    if !(power > 0.0) {
        return Err(OptimizerError::Invalid(format!("power must be positive, got {power}")));
    }
    let n = h_eq.ncols();
    let g = widely_linear_matrix(h_eq, d_r, kappa);
    let (lambda_min, v) = min_eigenpair(&g)?;
    let scale = power.sqrt();
    let w = ComplexVector::from_fn(n, |i, _| Complex64::new(v[i], v[n + i]) * scale);
    Ok(BeamformerUpdate { w, lambda_min })
}
