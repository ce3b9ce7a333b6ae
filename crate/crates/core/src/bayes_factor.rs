//! Closed-form Bayes factors for one covariate under a `N(0, σ₀²)` prior.
//!
//! Everything is returned as a natural log; convert with [`to_log10`] only
//! when reporting.

use serde::{Deserialize, Serialize};

use crate::cox::UnivariateFit;
use crate::error::{invalid, Result};

/// Summary of a univariate fit plus the prior variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BayesFactorInputs {
    pub bhat: f64,
    pub se: f64,
    pub log_lr: f64,
    pub prior_variance: f64,
}

impl BayesFactorInputs {
    pub fn new(bhat: f64, se: f64, log_lr: f64, prior_variance: f64) -> Result<Self> {
        let inputs = Self { bhat, se, log_lr, prior_variance };
        inputs.validate()?;
        Ok(inputs)
    }

    pub fn from_fit(fit: &UnivariateFit, prior_variance: f64) -> Result<Self> {
        Self::new(fit.bhat, fit.se, fit.log_lr, prior_variance)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.bhat.is_finite() && self.log_lr.is_finite()) {
            return Err(invalid("b̂ and log likelihood ratio must be finite"));
        }
        if !(self.se.is_finite() && self.se > 0.0) {
            return Err(invalid(format!("standard error {} must be finite and positive", self.se)));
        }
        if !(self.prior_variance.is_finite() && self.prior_variance > 0.0) {
            return Err(invalid(format!(
                "prior variance {} must be finite and positive",
                self.prior_variance
            )));
        }
        Ok(())
    }

    pub fn z(&self) -> f64 {
        self.bhat / self.se
    }

    /// Posterior variance under the quadratic likelihood surrogate.
    pub fn posterior_variance(&self) -> f64 {
        posterior_variance(self.se, self.prior_variance)
    }

    /// Posterior mean under the quadratic likelihood surrogate.
    pub fn posterior_mean(&self) -> f64 {
        posterior_mean(self.bhat, self.se, self.prior_variance)
    }
}

/// `1 / (1/s² + 1/σ₀²)`.
pub fn posterior_variance(se: f64, prior_variance: f64) -> f64 {
    let s2 = se * se;
    // Equivalent to the harmonic form, but exact when either term is tiny.
    s2 * prior_variance / (s2 + prior_variance)
}

/// `(σ₁² / s²) · b̂`.
pub fn posterior_mean(bhat: f64, se: f64, prior_variance: f64) -> f64 {
    let s2 = se * se;
    prior_variance / (s2 + prior_variance) * bhat
}

/// Log asymptotic Bayes factor (Wakefield):
/// `½ log(s²/(σ₀²+s²)) + (z²/2)·σ₀²/(σ₀²+s²)`.
pub fn log_abf(inputs: &BayesFactorInputs) -> f64 {
    let s2 = inputs.se * inputs.se;
    let v = inputs.prior_variance;
    let z = inputs.z();
    let shrink = v / (v + s2);
    // log(s²/(σ₀²+s²)) = -log1p(σ₀²/s²), accurate when σ₀² ≪ s².
    -0.5 * (v / s2).ln_1p() + 0.5 * z * z * shrink
}

/// Log Laplace Bayes factor: `log ABF - z²/2 + log(ℓ(b̂)/ℓ(0))`.
pub fn log_laplace_bf(inputs: &BayesFactorInputs) -> f64 {
    let z = inputs.z();
    log_abf(inputs) - 0.5 * z * z + inputs.log_lr
}

pub fn to_log10(log_bf: f64) -> f64 {
    log_bf / std::f64::consts::LN_10
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inputs(bhat: f64, se: f64, log_lr: f64, v: f64) -> BayesFactorInputs {
        BayesFactorInputs::new(bhat, se, log_lr, v).unwrap()
    }

    #[test]
    fn null_data_gives_half_log_half() {
        let i = inputs(0.0, 1.0, 0.0, 1.0);
        assert!((log_abf(&i) - 0.5 * 0.5f64.ln()).abs() < 1e-15);
        assert!((log_laplace_bf(&i) - 0.5 * 0.5f64.ln()).abs() < 1e-15);
        assert!((log_abf(&i) + 0.346_573_590_279_972_6).abs() < 1e-12);
    }

    #[test]
    fn point_mass_prior_gives_unit_bf() {
        for z in [0.0, 2.0, 10.0] {
            let i = inputs(z * 0.3, 0.3, 0.7, 1e-14);
            assert!(log_abf(&i).abs() < 1e-10);
        }
    }

    #[test]
    fn abf_against_direct_evaluation() {
        // b̂=1, s=0.5, σ₀²=1: z=2, s²=0.25.
        // log ABF = ½ log(0.25/1.25) + 2·(1/1.25) = ½ log 0.2 + 1.6
        // ½ log 0.2 = -0.80471895621705018730... (high-precision value)
        let i = inputs(1.0, 0.5, 0.0, 1.0);
        let expected = -0.804_718_956_217_050_2 + 1.6;
        assert!((log_abf(&i) - expected).abs() < 1e-14);
    }

    #[test]
    fn gaussian_likelihood_makes_laplace_equal_abf() {
        let i = inputs(0.8, 0.2, 0.5 * 16.0, 0.5);
        assert!((log_laplace_bf(&i) - log_abf(&i)).abs() < 1e-12);
    }

    #[test]
    fn huge_z_stays_finite() {
        let i = inputs(100.0, 1.0, 5000.0, 1.0);
        assert!(log_abf(&i).is_finite());
        assert!(log_laplace_bf(&i).is_finite());
        assert!(log_abf(&i) > 2000.0);
    }

    #[test]
    fn rejects_invalid_inputs() {
        assert!(BayesFactorInputs::new(0.0, 0.0, 0.0, 1.0).is_err());
        assert!(BayesFactorInputs::new(0.0, 1.0, 0.0, 0.0).is_err());
        assert!(BayesFactorInputs::new(f64::NAN, 1.0, 0.0, 1.0).is_err());
        assert!(BayesFactorInputs::new(0.0, f64::INFINITY, 0.0, 1.0).is_err());
    }
}
