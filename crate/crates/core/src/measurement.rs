//! Magnitude-only heterodyne readout of the atomic receiver.

use std::f64::consts::PI;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::numerics::{ComplexMatrix, ComplexVector};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeasurementError {
    #[error("beamformed signal has zero power")]
    ZeroSignal,
    #[error("reference vector has zero power")]
    ZeroReference,
    #[error("wavelengths must be positive")]
    Wavelength,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementConfig {
    pub snr_db: f64,
    pub rsr_db: f64,
    pub lambda_c: f64,
    pub lambda_p: f64,
}

impl MeasurementConfig {
    pub fn from_config(cfg: &crate::config::SystemConfig) -> Self {
        Self {
            snr_db: cfg.snr_db,
            rsr_db: cfg.rsr_db,
            lambda_c: cfg.lambda_c_m,
            lambda_p: cfg.lambda_p_m,
        }
    }
}

/// Noise level and LO scaling fixed for one channel realization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibratedLink {
    /// Noise variance per complex entry.
    pub sigma2: f64,
    /// Power multiplier applied to the raw reference.
    pub p_b_scale: f64,
}

impl CalibratedLink {
    pub fn scaled_reference(&self, r_raw: &ComplexVector) -> ComplexVector {
        r_raw * Complex64::new(self.p_b_scale.sqrt(), 0.0)
    }

    pub fn sigma(&self) -> f64 {
        self.sigma2.sqrt()
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Sets the noise variance from the received SNR and the LO power from the RSR.
///
/// With unit-energy symbols the average received signal power is `‖H w‖²`.
pub fn calibrate(
    h_eq: &ComplexMatrix,
    w: &ComplexVector,
    r_raw: &ComplexVector,
    snr_db: f64,
    rsr_db: f64,
) -> Result<CalibratedLink, MeasurementError> {
    let signal = (h_eq * w).norm_squared();
    if !(signal > 0.0) {
        return Err(MeasurementError::ZeroSignal);
    }
    let r_power = r_raw.norm_squared();
    if !(r_power > 0.0) {
        return Err(MeasurementError::ZeroReference);
    }
    let n_r = h_eq.nrows() as f64;
    let sigma2 = signal / (n_r * db_to_linear(snr_db));
    let target = db_to_linear(rsr_db) * (signal + n_r * sigma2);
    Ok(CalibratedLink { sigma2, p_b_scale: target / r_power })
}

/// Circularly-symmetric complex Gaussian noise with unit variance per entry.
pub fn standard_noise<R: Rng + ?Sized>(len: usize, rng: &mut R) -> ComplexVector {
    ComplexVector::from_fn(len, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    })
}

/// `|signal + r + σ·n_std|` entrywise, for a pre-drawn unit-variance noise vector.
pub fn magnitude_readout(
    signal: &ComplexVector,
    r: &ComplexVector,
    noise_std: &ComplexVector,
    sigma: f64,
) -> DVector<f64> {
    DVector::from_fn(signal.len(), |m, _| (signal[m] + r[m] + noise_std[m] * sigma).norm())
}

/// `y = |H x + r + n|` with `n ~ CN(0, σ² I)`.
pub fn readout<R: Rng + ?Sized>(
    h_eq: &ComplexMatrix,
    x: &ComplexVector,
    r: &ComplexVector,
    sigma2: f64,
    rng: &mut R,
) -> DVector<f64> {
    let signal = h_eq * x;
    let noise = standard_noise(signal.len(), rng);
    magnitude_readout(&signal, r, &noise, sigma2.sqrt())
}

/// `y − |r|`, which approximates `Re{H x ∘ e^{−j∠r}}` plus real noise of variance σ²/2
/// when the reference dominates.
pub fn linearized_residual(y: &DVector<f64>, r: &ComplexVector) -> DVector<f64> {
    DVector::from_fn(y.len(), |m, _| y[m] - r[m].norm())
}

/// Autler-Townes splitting (Hz) to RF Rabi frequency (rad/s).
pub fn at_splitting_to_rabi(delta_f: f64, lambda_c: f64, lambda_p: f64) -> Result<f64, MeasurementError> {
    if !(lambda_c > 0.0 && lambda_p > 0.0) {
        return Err(MeasurementError::Wavelength);
    }
    Ok(2.0 * PI * delta_f * lambda_p / lambda_c)
}

pub fn rabi_to_at_splitting(omega: f64, lambda_c: f64, lambda_p: f64) -> Result<f64, MeasurementError> {
    if !(lambda_c > 0.0 && lambda_p > 0.0) {
        return Err(MeasurementError::Wavelength);
    }
    Ok(omega * lambda_c / (2.0 * PI * lambda_p))
}
