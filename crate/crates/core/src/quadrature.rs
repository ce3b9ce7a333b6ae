//! Gauss–Hermite reference Bayes factor.
//!
//! The numerator integral `∫ ℓ(t) φ(t; 0, σ₀²) dt` is rewritten against a
//! normal density centred on the approximate posterior `N(μ₁, σ₁²)`, so that
//! the remaining integrand is nearly constant and a modest rule suffices:
//!
//! ```text
//! ∫ g(t) dt = ∫ h(t) φ(t; μ₁, σ₁²) dt ≈ π^(-1/2) Σ wᵢ h(μ₁ + √2 σ₁ rᵢ)
//! ```
//!
//! with `(rᵢ, wᵢ)` the Hermite nodes and weights for the weight `exp(-r²)`.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::bayes_factor::{posterior_mean, posterior_variance, BayesFactorInputs};
use crate::cox::{self, NewtonOptions};
use crate::data::{LinearPredictor, SurvivalOutcome};
use crate::error::{invalid, Result};

pub const DEFAULT_NODES: usize = 32;
pub const MAX_NODES: usize = 200;

/// Nodes and weights of a Gauss–Hermite rule for `∫ f(r) exp(-r²) dr`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HermiteRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl HermiteRule {
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `E[f(T)]` for `T ~ N(mean, variance)`.
    pub fn expect_normal(&self, mean: f64, variance: f64, f: impl Fn(f64) -> f64) -> f64 {
        let scale = (2.0 * variance).sqrt();
        let total: f64 = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(&r, &w)| w * f(mean + scale * r))
            .sum();
        total / std::f64::consts::PI.sqrt()
    }
}

/// Physicists' Gauss–Hermite rule of order `k` by Golub–Welsch.
///
/// The Jacobi matrix of the monic recurrence `p_{j+1} = x p_j - (j/2) p_{j-1}`
/// is symmetric tridiagonal with zero diagonal and off-diagonal `√(j/2)`.
/// Its eigenvalues are the nodes; the squared first components of the
/// normalised eigenvectors times `√π` are the weights.
pub fn hermite_rule(k: usize) -> Result<HermiteRule> {
    if !(1..=MAX_NODES).contains(&k) {
        return Err(invalid(format!("quadrature order {k} outside 1..={MAX_NODES}")));
    }
    let mut jacobi = DMatrix::<f64>::zeros(k, k);
    for j in 1..k {
        let b = (j as f64 / 2.0).sqrt();
        jacobi[(j, j - 1)] = b;
        jacobi[(j - 1, j)] = b;
    }
    let eig = SymmetricEigen::new(jacobi);
    let mu0 = std::f64::consts::PI.sqrt();

    let mut pairs: Vec<(f64, f64)> = (0..k)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], mu0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));

    // Enforce the exact symmetry of the rule about zero.
    let mut nodes = vec![0.0; k];
    let mut weights = vec![0.0; k];
    for i in 0..k {
        let (a, wa) = pairs[i];
        let (b, wb) = pairs[k - 1 - i];
        nodes[i] = 0.5 * (a - b);
        weights[i] = 0.5 * (wa + wb);
    }
    if k % 2 == 1 {
        nodes[k / 2] = 0.0;
    }
    Ok(HermiteRule { nodes, weights })
}

fn log_normal_pdf(t: f64, mean: f64, variance: f64) -> f64 {
    let d = t - mean;
    -0.5 * (2.0 * std::f64::consts::PI * variance).ln() - d * d / (2.0 * variance)
}

fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if m.is_infinite() {
        return m;
    }
    m + values.map(|v| (v - m).exp()).sum::<f64>().ln()
}

/// Quadrature log Bayes factor for an arbitrary log-likelihood ratio
/// `t ↦ log ℓ(t) - log ℓ(0)`, centred on the quadratic-surrogate posterior
/// implied by `inputs`.
pub fn log_quadrature_bf_with<F>(log_lr_at: F, inputs: &BayesFactorInputs, rule: &HermiteRule) -> f64
where
    F: Fn(f64) -> f64,
{
    let v0 = inputs.prior_variance;
    let mean = posterior_mean(inputs.bhat, inputs.se, v0);
    let var = posterior_variance(inputs.se, v0);
    let scale = (2.0 * var).sqrt();

    let terms: Vec<f64> = rule
        .nodes
        .iter()
        .zip(&rule.weights)
        .map(|(&r, &w)| {
            let t = mean + scale * r;
            w.ln() + log_lr_at(t) + log_normal_pdf(t, 0.0, v0) - log_normal_pdf(t, mean, var)
        })
        .collect();
    log_sum_exp(terms.iter().copied()) - 0.5 * std::f64::consts::PI.ln()
}

/// A quadrature Bayes factor, or the `BF = 1` fallback when no usable
/// univariate fit exists.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureBf {
    pub log_bf: f64,
    /// Set when the maximum-likelihood fit failed or the covariate is
    /// degenerate; `log_bf` is then 0.
    pub fallback: bool,
}

/// Reference log Bayes factor for one covariate from a `k`-node rule.
pub fn log_quadrature_bf(
    x: &[f64],
    offsets: &LinearPredictor,
    outcome: &SurvivalOutcome,
    prior_variance: f64,
    k: usize,
) -> Result<QuadratureBf> {
    let rule = hermite_rule(k)?;
    log_quadrature_bf_rule(x, offsets, outcome, prior_variance, &rule)
}

pub fn log_quadrature_bf_rule(
    x: &[f64],
    offsets: &LinearPredictor,
    outcome: &SurvivalOutcome,
    prior_variance: f64,
    rule: &HermiteRule,
) -> Result<QuadratureBf> {
    if !(prior_variance.is_finite() && prior_variance > 0.0) {
        return Err(invalid(format!("prior variance {prior_variance} must be finite and positive")));
    }
    let fit = cox::fit_univariate_with(x, offsets, outcome, NewtonOptions::default())?;
    if !fit.is_informative() {
        return Ok(QuadratureBf { log_bf: 0.0, fallback: true });
    }
    let inputs = BayesFactorInputs::from_fit(&fit, prior_variance)?;
    let c = offsets.as_slice();
    let null = cox::derivatives_unchecked(0.0, x, c, outcome).loglik;
    let log_bf = log_quadrature_bf_with(
        |t| cox::derivatives_unchecked(t, x, c, outcome).loglik - null,
        &inputs,
        rule,
    );
    Ok(QuadratureBf { log_bf, fallback: false })
}
