//! Dense numerical kernels: symmetric eigen-solves, PSD square roots and the
//! quartic root solver used by the phase refinement.
//!
//! Eigen-decompositions are delegated to `nalgebra`; this module owns the
//! contracts around them (symmetry checks, clamping, residual guarantees).

use nalgebra::{DMatrix, DVector, Schur};
use num_complex::Complex64;
use thiserror::Error;

/// Generic complex matrix used for every channel and equivalent-channel quantity.
pub type ComplexMatrix = DMatrix<Complex64>;
/// Generic complex column vector.
pub type ComplexVector = DVector<Complex64>;

/// Relative asymmetry accepted before a matrix is rejected.
pub const SYMMETRY_TOL: f64 = 1e-10;
/// Eigenvalues below `-INDEFINITE_TOL * max|λ|` are treated as an upstream bug.
pub const INDEFINITE_TOL: f64 = 1e-6;
/// Leading-coefficient ratio under which the quartic is solved as a cubic.
pub const QUARTIC_DEGENERATE_RATIO: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericsError {
    #[error("matrix must be square and non-empty (got {rows}x{cols})")]
    Shape { rows: usize, cols: usize },
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("matrix is not symmetric: max asymmetry {asymmetry:.3e} exceeds tolerance")]
    NonSymmetric { asymmetry: f64 },
    #[error("matrix is strongly indefinite: min eigenvalue {min:.3e} vs max |eigenvalue| {max_abs:.3e}")]
    StronglyIndefinite { min: f64, max_abs: f64 },
    #[error("all polynomial coefficients are zero")]
    AllZero,
    #[error("root iteration failed to converge")]
    NoConvergence,
}

/// Checks symmetry relative to the largest entry and returns the symmetrized copy.
pub fn symmetrize(m: &DMatrix<f64>) -> Result<DMatrix<f64>, NumericsError> {
    let (rows, cols) = m.shape();
    if rows == 0 || rows != cols {
        return Err(NumericsError::Shape { rows, cols });
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(NumericsError::NonFinite);
    }
    let scale = m.amax().max(f64::MIN_POSITIVE);
    let mut asymmetry = 0.0_f64;
    for i in 0..rows {
        for j in (i + 1)..cols {
            asymmetry = asymmetry.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    if asymmetry > SYMMETRY_TOL * scale {
        return Err(NumericsError::NonSymmetric { asymmetry });
    }
    Ok((m + m.transpose()) * 0.5)
}

/// Principal square root of a (numerically) positive-semidefinite symmetric matrix.
///
/// Small negative eigenvalues produced by round-off are clamped to zero; anything
/// more negative than `-1e-6 * max|λ|` is reported as [`NumericsError::StronglyIndefinite`].
pub fn psd_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>, NumericsError> {
    let sym = symmetrize(m)?;
    let eig = sym.symmetric_eigen();
    let max_abs = eig.eigenvalues.amax();
    let min = eig.eigenvalues.min();
    if min < -INDEFINITE_TOL * max_abs {
        return Err(NumericsError::StronglyIndefinite { min, max_abs });
    }
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    let v = &eig.eigenvectors;
    let s = v * DMatrix::from_diagonal(&roots) * v.transpose();
    Ok((&s + s.transpose()) * 0.5)
}

/// Smallest eigenvalue of a symmetric matrix with a unit-norm eigenvector.
pub fn min_eigenpair(m: &DMatrix<f64>) -> Result<(f64, DVector<f64>), NumericsError> {
    let sym = symmetrize(m)?;
    let eig = sym.symmetric_eigen();
    let idx = eig.eigenvalues.imin();
    let mut v = eig.eigenvectors.column(idx).into_owned();
    let norm = v.norm();
    v /= norm;
    Ok((eig.eigenvalues[idx], v))
}

/// Coefficients of `c4 u^4 + c3 u^3 + c1 u + c0` (no quadratic term).
///
/// The coordinate-descent stationarity condition has the structure
/// `c4 = 2β, c3 = α, c1 = -conj(α), c0 = -2 conj(β)`; see [`QuarticCoefficients::stationarity`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuarticCoefficients {
    pub c4: Complex64,
    pub c3: Complex64,
    pub c1: Complex64,
    pub c0: Complex64,
}

impl QuarticCoefficients {
    /// Stationarity quartic of `Re{α u + β u²}` on the unit circle.
    pub fn stationarity(alpha: Complex64, beta: Complex64) -> Self {
        Self {
            c4: 2.0 * beta,
            c3: alpha,
            c1: -alpha.conj(),
            c0: -2.0 * beta.conj(),
        }
    }

    pub fn eval(&self, u: Complex64) -> Complex64 {
        // Horner with the missing u^2 term.
        (((self.c4 * u + self.c3) * u) * u + self.c1) * u + self.c0
    }

    /// Scale used by the residual contract, `|c4| + |c3| + 1`.
    pub fn residual_scale(&self) -> f64 {
        self.c4.norm() + self.c3.norm() + 1.0
    }
}

/// Roots of the quartic via eigenvalues of its companion matrix, polished by Newton steps.
///
/// When `|c4| <= 1e-14 |c3|` the leading term is dropped and the cubic
/// `c3 u^3 + c1 u + c0` is solved instead; the zero root of the pure cubic
/// `α u³ − α* u` is discarded because it can never lie on the unit circle.
pub fn quartic_roots(q: &QuarticCoefficients) -> Result<Vec<Complex64>, NumericsError> {
    let coeffs = [q.c4, q.c3, Complex64::new(0.0, 0.0), q.c1, q.c0];
    let max_coeff = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if max_coeff == 0.0 {
        return Err(NumericsError::AllZero);
    }
    if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(NumericsError::NonFinite);
    }

    // Highest-first coefficient list with negligible leading terms removed.
    let mut poly: Vec<Complex64> = coeffs.to_vec();
    if q.c4.norm() <= QUARTIC_DEGENERATE_RATIO * q.c3.norm() {
        poly.remove(0);
    }
    while poly.len() > 1 && poly[0].norm() == 0.0 {
        poly.remove(0);
    }
    // Factor out roots at zero.
    while poly.len() > 1 && poly[poly.len() - 1].norm() == 0.0 {
        poly.pop();
    }
    let degree = poly.len() - 1;
    if degree == 0 {
        return Ok(Vec::new());
    }

    let lead = poly[0];
    let monic: Vec<Complex64> = poly.iter().map(|c| c / lead).collect();
    let mut companion = ComplexMatrix::zeros(degree, degree);
    for i in 1..degree {
        companion[(i, i - 1)] = Complex64::new(1.0, 0.0);
    }
    for i in 0..degree {
        // last column holds -a_0 .. -a_{n-1}
        companion[(i, degree - 1)] = -monic[degree - i];
    }
    let eigenvalues = if degree == 1 {
        vec![companion[(0, 0)]]
    } else {
        let schur = Schur::try_new(companion, f64::EPSILON, 10_000)
            .ok_or(NumericsError::NoConvergence)?;
        schur
            .eigenvalues()
            .ok_or(NumericsError::NoConvergence)?
            .iter()
            .copied()
            .collect()
    };

    let eval = |u: Complex64| monic.iter().fold(Complex64::new(0.0, 0.0), |acc, c| acc * u + c);
    let deriv = |u: Complex64| {
        let n = monic.len() - 1;
        monic[..n]
            .iter()
            .enumerate()
            .fold(Complex64::new(0.0, 0.0), |acc, (k, c)| acc * u + c * (n - k) as f64)
    };

    let mut roots = Vec::with_capacity(degree);
    for mut u in eigenvalues {
        for _ in 0..4 {
            let d = deriv(u);
            if d.norm() == 0.0 {
                break;
            }
            let step = eval(u) / d;
            let candidate = u - step;
            if !candidate.re.is_finite() || !candidate.im.is_finite() {
                break;
            }
            // Only keep Newton steps that actually reduce the residual.
            if eval(candidate).norm() <= eval(u).norm() {
                u = candidate;
            } else {
                break;
            }
        }
        roots.push(u);
    }
    Ok(roots)
}

/// Roots with `||u| - 1| <= tol`, each renormalized onto the unit circle.
pub fn unit_circle_roots(roots: &[Complex64], tol: f64) -> Vec<Complex64> {
    roots
        .iter()
        .filter(|u| (u.norm() - 1.0).abs() <= tol)
        .map(|u| u / u.norm())
        .collect()
}
