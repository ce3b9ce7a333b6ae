#![allow(dead_code)]

use coxph_susie::{LinearPredictor, SurvivalOutcome};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random Cox instance: exponential times whose rate depends on `x`, mixed
/// censoring and non-zero offsets.
pub struct Instance {
    pub x: Vec<f64>,
    pub offsets: LinearPredictor,
    pub outcome: SurvivalOutcome,
}

pub fn random_instance(seed: u64, n: usize, censor_prob: f64, offset_scale: f64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let x: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 2.0 - 0.5).collect();
        let c: Vec<f64> = (0..n).map(|_| offset_scale * (rng.random::<f64>() - 0.5)).collect();
        let beta = 0.8 * (rng.random::<f64>() - 0.5);
        let times: Vec<f64> = x
            .iter()
            .zip(&c)
            .map(|(xi, ci)| -(1.0 - rng.random::<f64>()).ln() / (beta * xi + ci).exp())
            .collect();
        let status: Vec<bool> = (0..n).map(|_| rng.random::<f64>() >= censor_prob).collect();
        if let Ok(outcome) = SurvivalOutcome::new(times, status) {
            if outcome.event_count() >= 2 {
                return Instance { x, offsets: LinearPredictor::new(c).unwrap(), outcome };
            }
        }
    }
}

/// O(n²) partial likelihood: for each event, sum over the explicit risk set
/// `{j : y_j >= y_i}`.
pub fn naive_partial_loglik(b: f64, x: &[f64], c: &[f64], outcome: &SurvivalOutcome) -> f64 {
    let y = outcome.times();
    let d = outcome.status();
    let mut ll = 0.0;
    for i in 0..y.len() {
        if !d[i] {
            continue;
        }
        let eta_i = b * x[i] + c[i];
        let denom: f64 = (0..y.len()).filter(|&j| y[j] >= y[i]).map(|j| (b * x[j] + c[j]).exp()).sum();
        ll += eta_i - denom.ln();
    }
    ll
}

/// Golden-section maximisation of a unimodal function on `[lo, hi]`.
pub fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - g * (hi - lo);
    let mut b = lo + g * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    while hi - lo > tol {
        if fa < fb {
            lo = a;
            a = b;
            fa = fb;
            b = lo + g * (hi - lo);
            fb = f(b);
        } else {
            hi = b;
            b = a;
            fb = fa;
            a = hi - g * (hi - lo);
            fa = f(a);
        }
    }
    0.5 * (lo + hi)
}

pub fn central_difference(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}
