//! Cox partial likelihood with fixed offsets.
//!
//! Risk sets are handled with the Breslow convention: all samples sharing an
//! event time share one denominator, and a sample censored at time `t` is
//! still at risk for events at `t`. With continuous times (no ties) this is
//! the exact partial likelihood. R's `survival::coxph` defaults to Efron's
//! method, so fits on heavily tied data can differ slightly from it.
//!
//! All routines walk the samples once in descending-time order and maintain
//! running sums of `exp(η)`, `x·exp(η)` and `x²·exp(η)`, so each evaluation is
//! `O(n)` after the one-time sort held by [`SurvivalOutcome`].

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::{DesignMatrix, LinearPredictor, SurvivalOutcome};
use crate::error::{dimension, invalid, Error, Result};

/// Log partial likelihood together with its first two derivatives in `b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartialDerivatives {
    pub loglik: f64,
    pub score: f64,
    pub hessian: f64,
}

/// Result of a single-covariate maximum partial-likelihood fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnivariateFit {
    pub bhat: f64,
    /// `(-H(b̂))^(-1/2)`; `f64::INFINITY` for a degenerate covariate.
    pub se: f64,
    /// `log ℓ(b̂) - log ℓ(0)`.
    pub log_lr: f64,
    pub converged: bool,
    pub iterations: usize,
    /// The covariate carries no information (constant over every risk set).
    pub degenerate: bool,
}

impl UnivariateFit {
    pub(crate) fn degenerate() -> Self {
        Self {
            bhat: 0.0,
            se: f64::INFINITY,
            log_lr: 0.0,
            converged: false,
            iterations: 0,
            degenerate: true,
        }
    }

    /// Usable for Bayes factors and posterior moments.
    pub fn is_informative(&self) -> bool {
        self.converged && !self.degenerate && self.se.is_finite() && self.se > 0.0
    }

    pub fn z(&self) -> f64 {
        self.bhat / self.se
    }
}

/// Newton–Raphson settings shared by the univariate and multivariate solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    /// Convergence when `|score| <= tol · max(1, |score(0)|)`.
    pub tol: f64,
    pub max_iter: usize,
    pub max_halvings: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 25, max_halvings: 10 }
    }
}

fn check_inputs(x: &[f64], offsets: &LinearPredictor, outcome: &SurvivalOutcome) -> Result<()> {
    let n = outcome.len();
    if x.len() != n {
        return Err(dimension(format!("covariate has {} entries, outcome has {n}", x.len())));
    }
    if offsets.len() != n {
        return Err(dimension(format!("offset has {} entries, outcome has {n}", offsets.len())));
    }
    if let Some(i) = x.iter().position(|v| !v.is_finite()) {
        return Err(invalid(format!("covariate entry {i} is not finite")));
    }
    Ok(())
}

/// Core risk-set pass. `x` is centred internally; the partial likelihood is
/// invariant to adding a constant to every linear predictor, so this changes
/// nothing but the rounding behaviour of the second moment.
pub(crate) fn derivatives_unchecked(
    b: f64,
    x: &[f64],
    offsets: &[f64],
    outcome: &SurvivalOutcome,
) -> PartialDerivatives {
    let n = x.len();
    let xbar = x.iter().sum::<f64>() / n as f64;
    let eta_max = x
        .iter()
        .zip(offsets)
        .map(|(&xi, &ci)| b * (xi - xbar) + ci)
        .fold(f64::NEG_INFINITY, f64::max);

    let order = outcome.order();
    let status = outcome.status();
    let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
    let (mut loglik, mut score, mut hessian) = (0.0, 0.0, 0.0);

    for g in outcome.groups() {
        let (mut ev_eta, mut ev_x) = (0.0, 0.0);
        for &i in &order[g.start..g.end] {
            let xc = x[i] - xbar;
            let eta = b * xc + offsets[i] - eta_max;
            let w = eta.exp();
            s0 += w;
            s1 += w * xc;
            s2 += w * xc * xc;
            if status[i] {
                ev_eta += eta;
                ev_x += xc;
            }
        }
        if g.events > 0 {
            let d = g.events as f64;
            let m1 = s1 / s0;
            loglik += ev_eta - d * s0.ln();
            score += ev_x - d * m1;
            hessian -= d * (s2 / s0 - m1 * m1).max(0.0);
        }
    }

    PartialDerivatives { loglik, score, hessian }
}

/// `log ℓ(b; x, c)`.
pub fn partial_loglik(b: f64, x: &[f64], offsets: &LinearPredictor, outcome: &SurvivalOutcome) -> Result<f64> {
    if !b.is_finite() {
        return Err(invalid("coefficient is not finite"));
    }
    check_inputs(x, offsets, outcome)?;
    Ok(derivatives_unchecked(b, x, offsets.as_slice(), outcome).loglik)
}

/// `(dℓ/db, d²ℓ/db²)` of the log partial likelihood.
pub fn partial_score_hessian(
    b: f64,
    x: &[f64],
    offsets: &LinearPredictor,
    outcome: &SurvivalOutcome,
) -> Result<(f64, f64)> {
    let d = partial_derivatives(b, x, offsets, outcome)?;
    Ok((d.score, d.hessian))
}

/// Log partial likelihood, score and Hessian from one pass.
pub fn partial_derivatives(
    b: f64,
    x: &[f64],
    offsets: &LinearPredictor,
    outcome: &SurvivalOutcome,
) -> Result<PartialDerivatives> {
    if !b.is_finite() {
        return Err(invalid("coefficient is not finite"));
    }
    check_inputs(x, offsets, outcome)?;
    Ok(derivatives_unchecked(b, x, offsets.as_slice(), outcome))
}

fn is_constant(x: &[f64]) -> bool {
    let (lo, hi) = x
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    hi - lo <= 1e-12 * hi.abs().max(lo.abs()).max(1.0)
}

/// Step-halving trigger. Decreases within rounding noise of the summed
/// log-likelihood are accepted, otherwise Newton stalls at the optimum.
fn worse(next: f64, cur: f64) -> bool {
    !next.is_finite() || next < cur - 1e-11 * cur.abs().max(1.0)
}

/// Maximum partial-likelihood fit of a single covariate with fixed offsets.
pub fn fit_univariate(x: &[f64], offsets: &LinearPredictor, outcome: &SurvivalOutcome) -> Result<UnivariateFit> {
    fit_univariate_with(x, offsets, outcome, NewtonOptions::default())
}

pub fn fit_univariate_with(
    x: &[f64],
    offsets: &LinearPredictor,
    outcome: &SurvivalOutcome,
    opts: NewtonOptions,
) -> Result<UnivariateFit> {
    check_inputs(x, offsets, outcome)?;
    Ok(newton_unchecked(x, offsets.as_slice(), outcome, opts))
}

pub(crate) fn newton_unchecked(
    x: &[f64],
    offsets: &[f64],
    outcome: &SurvivalOutcome,
    opts: NewtonOptions,
) -> UnivariateFit {
    if is_constant(x) {
        return UnivariateFit::degenerate();
    }
    let null = derivatives_unchecked(0.0, x, offsets, outcome);
    // Zero information at the origin means x is constant within every risk
    // set that contains an event.
    if null.hessian.is_nan() || -null.hessian <= 1e-300 {
        return UnivariateFit::degenerate();
    }
    let tol_abs = opts.tol * null.score.abs().max(1.0);

    let mut b = 0.0;
    let mut cur = null;
    let mut iterations = 0;
    while cur.score.abs() > tol_abs && iterations < opts.max_iter {
        if cur.hessian.is_nan() || cur.hessian >= 0.0 {
            break;
        }
        let mut step = -cur.score / cur.hessian;
        let mut next = derivatives_unchecked(b + step, x, offsets, outcome);
        let mut halvings = 0;
        while worse(next.loglik, cur.loglik) && halvings < opts.max_halvings {
            step *= 0.5;
            next = derivatives_unchecked(b + step, x, offsets, outcome);
            halvings += 1;
        }
        b += step;
        cur = next;
        iterations += 1;
    }

    let converged = cur.score.abs() <= tol_abs && cur.hessian < 0.0 && cur.loglik.is_finite();
    let se = if cur.hessian < 0.0 { (-cur.hessian).sqrt().recip() } else { f64::INFINITY };
    UnivariateFit {
        bhat: b,
        se,
        log_lr: cur.loglik - null.loglik,
        converged,
        iterations,
        degenerate: false,
    }
}

/// Multivariate partial-likelihood fit of fixed covariates `Z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultivariateFit {
    pub coefficients: Vec<f64>,
    /// `c_i = ŵᵀ z_i`, ready to seed the offsets of the selection loop.
    pub offsets: LinearPredictor,
    pub loglik: f64,
    pub gradient_norm: f64,
    pub converged: bool,
    pub iterations: usize,
}

struct MultiEval {
    loglik: f64,
    score: DVector<f64>,
    hessian: DMatrix<f64>,
}

fn multi_eval(w: &DVector<f64>, zc: &[Vec<f64>], outcome: &SurvivalOutcome) -> MultiEval {
    let m = zc.len();
    let n = outcome.len();
    let eta: Vec<f64> = (0..n).map(|i| (0..m).map(|k| w[k] * zc[k][i]).sum()).collect();
    let eta_max = eta.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let mut s0 = 0.0;
    let mut s1 = DVector::zeros(m);
    let mut s2 = DMatrix::zeros(m, m);
    let mut loglik = 0.0;
    let mut score = DVector::zeros(m);
    let mut hessian = DMatrix::zeros(m, m);
    let order = outcome.order();
    let status = outcome.status();
    let mut zi = DVector::zeros(m);

    for g in outcome.groups() {
        let mut ev_eta = 0.0;
        let mut ev_z = DVector::zeros(m);
        for &i in &order[g.start..g.end] {
            for k in 0..m {
                zi[k] = zc[k][i];
            }
            let e = eta[i] - eta_max;
            let wgt = e.exp();
            s0 += wgt;
            s1.axpy(wgt, &zi, 1.0);
            s2.ger(wgt, &zi, &zi, 1.0);
            if status[i] {
                ev_eta += e;
                ev_z += &zi;
            }
        }
        if g.events > 0 {
            let d = g.events as f64;
            let mean = &s1 / s0;
            loglik += ev_eta - d * s0.ln();
            score += ev_z - &mean * d;
            hessian -= (&s2 / s0 - &mean * mean.transpose()) * d;
        }
    }
    MultiEval { loglik, score, hessian }
}

/// Newton fit of `log ℓ(w; Z)` with zero offsets.
pub fn fit_multivariate(z: &DesignMatrix, outcome: &SurvivalOutcome) -> Result<MultivariateFit> {
    fit_multivariate_with(z, outcome, NewtonOptions::default())
}

pub fn fit_multivariate_with(
    z: &DesignMatrix,
    outcome: &SurvivalOutcome,
    opts: NewtonOptions,
) -> Result<MultivariateFit> {
    let (n, m) = (z.nrows(), z.ncols());
    if m == 0 {
        return Err(invalid("at least one covariate is required"));
    }
    if n != outcome.len() {
        return Err(dimension(format!("covariates have {n} rows, outcome has {}", outcome.len())));
    }

    let zc: Vec<Vec<f64>> = z
        .columns()
        .map(|col| {
            let mean = col.iter().sum::<f64>() / n as f64;
            col.iter().map(|v| v - mean).collect()
        })
        .collect();

    // The partial likelihood ignores intercepts, so rank is judged on the
    // centred columns.
    let centred = DMatrix::from_fn(n, m, |i, k| zc[k][i]);
    let sv = centred.singular_values();
    let (smax, smin) = (sv.max(), sv.min());
    if smax.is_nan() || smax <= 0.0 || smin <= 1e-10 * smax {
        return Err(Error::SingularDesign(format!(
            "covariate matrix is rank deficient (singular values {smin:.3e}..{smax:.3e})"
        )));
    }

    let mut w = DVector::zeros(m);
    let mut cur = multi_eval(&w, &zc, outcome);
    let tol_abs = opts.tol * cur.score.amax().max(1.0);
    let mut iterations = 0;
    while cur.score.amax() > tol_abs && iterations < opts.max_iter {
        let info = -&cur.hessian;
        let Some(chol) = info.cholesky() else {
            break;
        };
        let mut step = chol.solve(&cur.score);
        let mut next = multi_eval(&(&w + &step), &zc, outcome);
        let mut halvings = 0;
        while worse(next.loglik, cur.loglik) && halvings < opts.max_halvings {
            step *= 0.5;
            next = multi_eval(&(&w + &step), &zc, outcome);
            halvings += 1;
        }
        w += step;
        cur = next;
        iterations += 1;
    }

    let gradient_norm = cur.score.norm();
    let converged = cur.score.amax() <= tol_abs;
    let coefficients: Vec<f64> = w.iter().copied().collect();
    let offsets = LinearPredictor::new(z.mul_vec(&coefficients))?;
    Ok(MultivariateFit {
        coefficients,
        offsets,
        loglik: cur.loglik,
        gradient_norm,
        converged,
        iterations,
    })
}
