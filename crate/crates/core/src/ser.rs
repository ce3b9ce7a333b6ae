//! Single-effect regression on the Cox partial likelihood.
//!
//! Exactly one of the `p` columns carries a `N(0, σ₀²)` effect. Each column is
//! fitted once by Newton's method; the resulting `(b̂, s, log LR)` triples
//! determine the Laplace Bayes factors and the Gaussian posterior moments, and
//! they do not depend on `σ₀²`, so the EM loop over `σ₀²` reuses them.

use serde::{Deserialize, Serialize};

use crate::bayes_factor::{log_laplace_bf, posterior_mean, posterior_variance, BayesFactorInputs};
use crate::cox::{self, NewtonOptions, UnivariateFit};
use crate::data::{DesignMatrix, LinearPredictor, SurvivalOutcome};
use crate::error::{dimension, invalid, Result};
use crate::exec::{map_indexed, Execution};

/// Prior inclusion probabilities `π`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PriorWeights(Vec<f64>);

impl PriorWeights {
    pub fn uniform(p: usize) -> Self {
        Self(vec![1.0 / p as f64; p])
    }

    pub fn new(pi: Vec<f64>) -> Result<Self> {
        if pi.is_empty() {
            return Err(invalid("prior weights must be non-empty"));
        }
        if pi.iter().any(|&w| !(w.is_finite() && w >= 0.0)) {
            return Err(invalid("prior weights must be finite and non-negative"));
        }
        let total: f64 = pi.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(invalid(format!("prior weights sum to {total}, not 1")));
        }
        Ok(Self(pi))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Posterior of one single-effect regression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleEffectPosterior {
    pub alpha: Vec<f64>,
    pub mu1: Vec<f64>,
    pub sigma1_sq: Vec<f64>,
    pub log_bf: Vec<f64>,
    pub prior_variance: f64,
    /// `log Σ_j π_j BF_j`.
    pub log_bf_ser: f64,
    /// Columns whose univariate fit was degenerate or failed to converge.
    pub uninformative: usize,
    /// Every column was uninformative; `alpha == π` and `mu1 == 0`.
    pub all_uninformative: bool,
}

pub(crate) fn log_sum_exp(values: &[f64]) -> f64 {
    let m = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + values.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

/// Normalise `π_j · exp(log_bf_j)` into inclusion probabilities.
///
/// Returns `(α, log Σ π_j BF_j)`. The reduction runs in index order.
pub fn inclusion_probabilities(log_bf: &[f64], pi: &PriorWeights) -> Result<(Vec<f64>, f64)> {
    if log_bf.len() != pi.len() {
        return Err(dimension(format!("{} Bayes factors for {} prior weights", log_bf.len(), pi.len())));
    }
    let log_w: Vec<f64> = log_bf
        .iter()
        .zip(pi.as_slice())
        .map(|(&lbf, &p)| if p > 0.0 { p.ln() + lbf } else { f64::NEG_INFINITY })
        .collect();
    let total = log_sum_exp(&log_w);
    let alpha = log_w.iter().map(|&w| (w - total).exp()).collect();
    Ok((alpha, total))
}

/// Univariate Newton fits for every column of `X` against offsets `c`.
pub fn fit_columns(
    x: &DesignMatrix,
    outcome: &SurvivalOutcome,
    offsets: &LinearPredictor,
    exec: Execution,
) -> Result<Vec<UnivariateFit>> {
    if x.nrows() != outcome.len() {
        return Err(dimension(format!("X has {} rows, outcome has {}", x.nrows(), outcome.len())));
    }
    if offsets.len() != outcome.len() {
        return Err(dimension(format!("offset has {} entries, outcome has {}", offsets.len(), outcome.len())));
    }
    let c = offsets.as_slice();
    let opts = NewtonOptions::default();
    Ok(map_indexed(exec, x.ncols(), |j| cox::newton_unchecked(x.column(j), c, outcome, opts)))
}

/// Assemble the posterior from cached column fits at prior variance `σ₀²`.
pub fn ser_from_fits(fits: &[UnivariateFit], pi: &PriorWeights, sigma0_sq: f64) -> Result<SingleEffectPosterior> {
    if !(sigma0_sq.is_finite() && sigma0_sq > 0.0) {
        return Err(invalid(format!("prior variance {sigma0_sq} must be finite and positive")));
    }
    if fits.len() != pi.len() {
        return Err(dimension(format!("{} columns for {} prior weights", fits.len(), pi.len())));
    }
    let p = fits.len();
    let mut log_bf = Vec::with_capacity(p);
    let mut mu1 = Vec::with_capacity(p);
    let mut sigma1_sq = Vec::with_capacity(p);
    let mut uninformative = 0;
    for fit in fits {
        if fit.is_informative() {
            let inputs = BayesFactorInputs::from_fit(fit, sigma0_sq)?;
            log_bf.push(log_laplace_bf(&inputs));
            mu1.push(posterior_mean(fit.bhat, fit.se, sigma0_sq));
            sigma1_sq.push(posterior_variance(fit.se, sigma0_sq));
        } else {
            // s → ∞ limit: no evidence, posterior equals prior.
            uninformative += 1;
            log_bf.push(0.0);
            mu1.push(0.0);
            sigma1_sq.push(sigma0_sq);
        }
    }
    let (alpha, log_bf_ser) = inclusion_probabilities(&log_bf, pi)?;
    Ok(SingleEffectPosterior {
        alpha,
        mu1,
        sigma1_sq,
        log_bf,
        prior_variance: sigma0_sq,
        log_bf_ser,
        uninformative,
        all_uninformative: uninformative == p,
    })
}

fn check_prior(x: &DesignMatrix, pi: &PriorWeights) -> Result<()> {
    if x.ncols() != pi.len() {
        return Err(dimension(format!("X has {} columns but π has {} entries", x.ncols(), pi.len())));
    }
    Ok(())
}

/// One single-effect regression at fixed `σ₀²`.
pub fn fit_ser(
    x: &DesignMatrix,
    outcome: &SurvivalOutcome,
    offsets: &LinearPredictor,
    pi: &PriorWeights,
    sigma0_sq: f64,
) -> Result<SingleEffectPosterior> {
    fit_ser_with(x, outcome, offsets, pi, sigma0_sq, Execution::default())
}

pub fn fit_ser_with(
    x: &DesignMatrix,
    outcome: &SurvivalOutcome,
    offsets: &LinearPredictor,
    pi: &PriorWeights,
    sigma0_sq: f64,
    exec: Execution,
) -> Result<SingleEffectPosterior> {
    check_prior(x, pi)?;
    let fits = fit_columns(x, outcome, offsets, exec)?;
    ser_from_fits(&fits, pi, sigma0_sq)
}

/// `α ∘ μ₁`.
pub fn posterior_mean_effect(ser: &SingleEffectPosterior) -> Vec<f64> {
    ser.alpha.iter().zip(&ser.mu1).map(|(a, m)| a * m).collect()
}

/// M-step for the prior variance: `Σ_j α_j (μ₁ⱼ² + σ₁ⱼ²)`.
pub fn update_prior_variance(ser: &SingleEffectPosterior) -> f64 {
    ser.alpha
        .iter()
        .zip(&ser.mu1)
        .zip(&ser.sigma1_sq)
        .map(|((a, m), v)| a * (m * m + v))
        .sum()
}

/// `log ℓ̂_SER(σ₀²) - log ℓ(0)` under the quadratic likelihood surrogate.
pub fn surrogate_log_evidence(fits: &[UnivariateFit], pi: &PriorWeights, sigma0_sq: f64) -> Result<f64> {
    Ok(ser_from_fits(fits, pi, sigma0_sq)?.log_bf_ser)
}

/// Result of running the prior-variance EM to convergence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SerEmFit {
    pub posterior: SingleEffectPosterior,
    pub iterations: usize,
    pub converged: bool,
}

/// Alternate posterior computation and the `σ₀²` M-step until the relative
/// change in `σ₀²` drops below `tol`. Column fits are computed once.
#[allow(clippy::too_many_arguments)]
pub fn fit_ser_em(
    x: &DesignMatrix,
    outcome: &SurvivalOutcome,
    offsets: &LinearPredictor,
    pi: &PriorWeights,
    sigma0_init: f64,
    max_iter: usize,
    tol: f64,
    exec: Execution,
) -> Result<SerEmFit> {
    check_prior(x, pi)?;
    let fits = fit_columns(x, outcome, offsets, exec)?;
    let mut v = sigma0_init;
    let mut posterior = ser_from_fits(&fits, pi, v)?;
    for it in 1..=max_iter {
        let next = update_prior_variance(&posterior).max(f64::MIN_POSITIVE);
        let change = (next - v).abs() / v;
        v = next;
        posterior = ser_from_fits(&fits, pi, v)?;
        if change < tol {
            return Ok(SerEmFit { posterior, iterations: it, converged: true });
        }
    }
    Ok(SerEmFit { posterior, iterations: max_iter, converged: false })
}
