use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::prox::Objective;

/// Thin SVD of a dictionary, reusable for many measurements.
///
/// Applies the regularized pseudo-inverse `V diag(σ/(σ² + μ)) Uᴴ`.
#[derive(Debug, Clone)]
pub struct WienerEstimator {
    u: DMatrix<Complex64>,
    singular_values: DVector<f64>,
    v_adjoint: DMatrix<Complex64>,
}

impl WienerEstimator {
    pub fn new(dictionary: &DMatrix<Complex64>) -> Result<Self> {
        if dictionary.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Numerical("dictionary has non-finite entries".into()));
        }
        let svd = dictionary
            .clone()
            .try_svd(true, true, 1e-14, 10_000)
            .ok_or_else(|| Error::Numerical("SVD did not converge".into()))?;
        let u = svd.u.ok_or_else(|| Error::Numerical("SVD returned no left vectors".into()))?;
        let v_adjoint = svd.v_t.ok_or_else(|| Error::Numerical("SVD returned no right vectors".into()))?;
        Ok(WienerEstimator { u, singular_values: svd.singular_values, v_adjoint })
    }

    pub fn singular_values(&self) -> &DVector<f64> {
        &self.singular_values
    }

    pub fn apply(&self, measurement: &DVector<Complex64>, noise_power: f64) -> Result<DVector<Complex64>> {
        if !(noise_power.is_finite() && noise_power >= 0.0) {
            return Err(Error::Config(format!("noise_power must be finite and nonnegative, got {noise_power}")));
        }
        if measurement.len() != self.u.nrows() {
            return Err(Error::Dimension { expected: self.u.nrows(), found: measurement.len() });
        }
        let smax = self.singular_values.max();
        let mut coeffs = self.u.ad_mul(measurement);
        for (c, &s) in coeffs.iter_mut().zip(self.singular_values.iter()) {
            let denom = s * s + noise_power;
            // null-space directions carry no signal
            let gain = if s > 1e-13 * smax && denom > 0.0 { s / denom } else { 0.0 };
            *c *= gain;
        }
        Ok(self.v_adjoint.ad_mul(&coeffs))
    }
}

/// Wiener-regularized pseudo-inverse profile `V diag(σ/(σ²+μ)) Uᴴ g` with `μ = noise_power`.
pub fn svd_wiener_solve(obj: &Objective<'_>, noise_power: f64) -> Result<DVector<Complex64>> {
    WienerEstimator::new(obj.dictionary())?.apply(obj.measurement(), noise_power)
}
