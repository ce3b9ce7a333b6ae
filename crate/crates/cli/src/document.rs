//! JSON documents written by `fit` and `simulate` and read by `evaluate`.

use coxph_susie::credible::CredibleSet;
use coxph_susie::simulate::{SimulatedDataset, SimulationSpec};
use coxph_susie::SusieFit;
use serde::{Deserialize, Serialize};

use crate::settings::ModelSettings;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectDocument {
    pub index: usize,
    pub alpha: Vec<f64>,
    pub mu1: Vec<f64>,
    pub sigma1_sq: Vec<f64>,
    pub log_bf: Vec<f64>,
    /// Prior variance after the final update.
    pub prior_variance: f64,
    pub inactive: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitDocument {
    pub n: usize,
    pub p: usize,
    pub variables: Vec<String>,
    pub settings: ModelSettings,
    /// Coefficients of the covariate-only model used to seed the offsets.
    pub covariate_coefficients: Option<Vec<f64>>,
    pub effects: Vec<EffectDocument>,
    pub pips: Vec<f64>,
    pub credible_sets: Vec<CredibleSet>,
    pub iterations: usize,
    pub converged: bool,
    pub max_delta_history: Vec<f64>,
}

impl FitDocument {
    pub fn new(
        fit: &SusieFit,
        variables: Vec<String>,
        n: usize,
        settings: ModelSettings,
        covariate_coefficients: Option<Vec<f64>>,
    ) -> Self {
        let effects = fit
            .effects
            .iter()
            .enumerate()
            .map(|(l, e)| EffectDocument {
                index: l,
                alpha: e.alpha.clone(),
                mu1: e.mu1.clone(),
                sigma1_sq: e.sigma1_sq.clone(),
                log_bf: e.log_bf.clone(),
                prior_variance: fit.prior_variances[l],
                inactive: fit.inactive[l],
            })
            .collect();
        Self {
            n,
            p: fit.pips.len(),
            variables,
            settings,
            covariate_coefficients,
            effects,
            pips: fit.pips.clone(),
            credible_sets: fit.credible_sets.clone(),
            iterations: fit.iterations,
            converged: fit.converged,
            max_delta_history: fit.max_delta_history.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthDocument {
    pub spec: SimulationSpec,
    pub causal_indices: Vec<usize>,
    pub true_coefficients: Vec<f64>,
    pub realized_censoring_rate: f64,
    pub censoring_rate_param: f64,
}

impl TruthDocument {
    pub fn new(spec: &SimulationSpec, d: &SimulatedDataset) -> Self {
        Self {
            spec: spec.clone(),
            causal_indices: d.causal_indices.clone(),
            true_coefficients: d.true_coefficients.clone(),
            realized_censoring_rate: d.realized_censoring_rate,
            censoring_rate_param: d.censoring_rate_param,
        }
    }
}
