//! Generalised iterative Bayesian stepwise selection.
//!
//! Each outer iteration sweeps the `L` single effects in order. For effect
//! `l` the current estimate `X·b̄_l` is removed from the offsets, a
//! single-effect regression is fitted against the remaining offsets, the
//! prior variance is updated from that fit, and the new `X·b̄_l` is added
//! back. The loop stops once the summed posterior-mean effect vector moves by
//! less than `tol` in every coordinate.

use serde::{Deserialize, Serialize};

use crate::credible::{credible_set, CredibleSet, DEFAULT_COVERAGE, DEFAULT_PURITY};
use crate::data::{DesignMatrix, LinearPredictor, SurvivalOutcome};
use crate::error::{dimension, invalid, Result};
use crate::exec::Execution;
use crate::ser::{fit_columns, posterior_mean_effect, ser_from_fits, update_prior_variance, PriorWeights, SingleEffectPosterior};

/// Effects whose prior variance falls below this are reported as inactive.
pub const INACTIVE_PRIOR_VARIANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SusieOptions {
    pub l: usize,
    /// Initial `σ₀²` per effect; empty means 1.0 for every effect.
    pub sigma0_init: Vec<f64>,
    pub max_iter: usize,
    pub tol: f64,
    pub rho: f64,
    pub purity_threshold: f64,
    pub execution: Execution,
}

impl Default for SusieOptions {
    fn default() -> Self {
        Self {
            l: 5,
            sigma0_init: Vec::new(),
            max_iter: 100,
            tol: 1e-4,
            rho: DEFAULT_COVERAGE,
            purity_threshold: DEFAULT_PURITY,
            execution: Execution::default(),
        }
    }
}

impl SusieOptions {
    pub fn with_l(l: usize) -> Self {
        Self { l, ..Self::default() }
    }

    fn initial_variances(&self) -> Result<Vec<f64>> {
        if self.l == 0 {
            return Err(invalid("L must be at least 1"));
        }
        if self.max_iter == 0 {
            return Err(invalid("max_iter must be at least 1"));
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(invalid(format!("coverage {} must lie in (0, 1)", self.rho)));
        }
        if !(self.tol.is_finite() && self.tol >= 0.0) {
            return Err(invalid("tolerance must be finite and non-negative"));
        }
        let v = if self.sigma0_init.is_empty() { vec![1.0; self.l] } else { self.sigma0_init.clone() };
        if v.len() != self.l {
            return Err(dimension(format!("{} initial prior variances for L = {}", v.len(), self.l)));
        }
        if v.iter().any(|&s| !(s.is_finite() && s > 0.0)) {
            return Err(invalid("initial prior variances must be finite and positive"));
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SusieFit {
    pub effects: Vec<SingleEffectPosterior>,
    /// `b̄_l = α_l ∘ μ_l`.
    pub posterior_means: Vec<Vec<f64>>,
    /// Prior variances after the last update.
    pub prior_variances: Vec<f64>,
    pub inactive: Vec<bool>,
    pub offsets: LinearPredictor,
    pub pips: Vec<f64>,
    pub credible_sets: Vec<CredibleSet>,
    pub iterations: usize,
    pub converged: bool,
    pub max_delta_history: Vec<f64>,
    /// Univariate Newton solves performed in each outer iteration.
    pub fits_per_iteration: Vec<usize>,
}

/// Snapshot handed to an observer after every single-effect update.
pub struct EffectUpdate<'a> {
    pub iteration: usize,
    pub effect: usize,
    pub offsets: &'a LinearPredictor,
    pub posterior_means: &'a [Vec<f64>],
    pub prior_variances: &'a [f64],
}

/// `PIP_j = 1 - Π_l (1 - α_lj)`.
pub fn compute_pips(effects: &[SingleEffectPosterior]) -> Vec<f64> {
    let p = effects.first().map_or(0, |e| e.alpha.len());
    // 1 - (1 - q)(1 - a) = q + a(1 - q), which keeps L = 1 exact.
    let mut pips = vec![0.0; p];
    for e in effects {
        for (q, a) in pips.iter_mut().zip(&e.alpha) {
            *q += a * (1.0 - *q);
        }
    }
    pips.into_iter().map(|q| q.clamp(0.0, 1.0)).collect()
}

/// Purity-filtered credible sets for the active effects. Sets with the same
/// membership as an earlier effect's set are reported once.
pub fn collect_credible_sets(
    effects: &[SingleEffectPosterior],
    inactive: &[bool],
    x: &DesignMatrix,
    rho: f64,
    purity_threshold: f64,
) -> Vec<CredibleSet> {
    let mut out: Vec<CredibleSet> = Vec::new();
    let mut seen: Vec<Vec<usize>> = Vec::new();
    for (l, e) in effects.iter().enumerate() {
        if inactive[l] {
            continue;
        }
        if let Some(cs) = credible_set(&e.alpha, rho, x, purity_threshold, l) {
            let mut key = cs.members.clone();
            key.sort_unstable();
            if !seen.contains(&key) {
                seen.push(key);
                out.push(cs);
            }
        }
    }
    out
}

pub fn fit_susie(
    x: &DesignMatrix,
    outcome: &SurvivalOutcome,
    pi: &PriorWeights,
    covariate_offset: Option<&LinearPredictor>,
    opts: &SusieOptions,
) -> Result<SusieFit> {
    fit_susie_observed(x, outcome, pi, covariate_offset, opts, |_| {})
}

pub fn fit_susie_observed<F>(
    x: &DesignMatrix,
    outcome: &SurvivalOutcome,
    pi: &PriorWeights,
    covariate_offset: Option<&LinearPredictor>,
    opts: &SusieOptions,
    mut observer: F,
) -> Result<SusieFit>
where
    F: FnMut(&EffectUpdate<'_>),
{
    let (n, p) = (x.nrows(), x.ncols());
    if n != outcome.len() {
        return Err(dimension(format!("X has {n} rows, outcome has {}", outcome.len())));
    }
    if p != pi.len() {
        return Err(dimension(format!("X has {p} columns but π has {} entries", pi.len())));
    }
    let mut variances = opts.initial_variances()?;
    let l_count = opts.l;

    let mut offsets = match covariate_offset {
        Some(c) if c.len() != n => {
            return Err(dimension(format!("covariate offset has {} entries, expected {n}", c.len())))
        }
        Some(c) => c.clone(),
        None => LinearPredictor::zeros(n),
    };
    let mut means = vec![vec![0.0; p]; l_count];
    let mut effects: Vec<Option<SingleEffectPosterior>> = vec![None; l_count];
    let mut total = vec![0.0; p];
    let mut history = Vec::new();
    let mut fits_per_iteration = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iter {
        iterations += 1;
        let mut fits_this_iter = 0;
        for l in 0..l_count {
            // c_l = c - X b̄_l
            x.gemv_acc(&means[l], -1.0, offsets.as_mut_slice());
            let fits = fit_columns(x, outcome, &offsets, opts.execution)?;
            fits_this_iter += fits.len();
            let ser = ser_from_fits(&fits, pi, variances[l])?;
            variances[l] = update_prior_variance(&ser).max(f64::MIN_POSITIVE);
            means[l] = posterior_mean_effect(&ser);
            // c = c_l + X b̄_l
            x.gemv_acc(&means[l], 1.0, offsets.as_mut_slice());
            effects[l] = Some(ser);
            observer(&EffectUpdate {
                iteration: iterations,
                effect: l,
                offsets: &offsets,
                posterior_means: &means,
                prior_variances: &variances,
            });
        }
        fits_per_iteration.push(fits_this_iter);

        let mut delta: f64 = 0.0;
        for (j, t) in total.iter_mut().enumerate() {
            let next: f64 = means.iter().map(|m| m[j]).sum();
            delta = delta.max((next - *t).abs());
            *t = next;
        }
        history.push(delta);
        if delta < opts.tol {
            converged = true;
            break;
        }
    }

    let effects: Vec<SingleEffectPosterior> = effects.into_iter().map(|e| e.expect("every effect fitted")).collect();
    let inactive: Vec<bool> = variances.iter().map(|&v| v < INACTIVE_PRIOR_VARIANCE).collect();
    let pips = compute_pips(&effects);
    let credible_sets = collect_credible_sets(&effects, &inactive, x, opts.rho, opts.purity_threshold);

    Ok(SusieFit {
        effects,
        posterior_means: means,
        prior_variances: variances,
        inactive,
        offsets,
        pips,
        credible_sets,
        iterations,
        converged,
        max_delta_history: history,
        fits_per_iteration,
    })
}
