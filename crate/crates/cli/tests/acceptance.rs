//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion
//! and exits non-zero when any criterion fails.

use std::process::{Command, ExitCode};
use std::time::Instant;

use coxph_susie::bayes_factor::{log_laplace_bf, BayesFactorInputs};
use coxph_susie::cox::{fit_univariate, partial_loglik, partial_score_hessian};
use coxph_susie::exec::map_indexed;
use coxph_susie::gibss::fit_susie_observed;
use coxph_susie::metrics::{calibration_table, cs_summary, ReplicateResult};
use coxph_susie::quadrature::log_quadrature_bf;
use coxph_susie::ser::{fit_columns, ser_from_fits, surrogate_log_evidence, update_prior_variance};
use coxph_susie::simulate::{exponential_race_check, replicate_seed, rng_stream, simulate_dataset, Maf, SimulationSpec};
use coxph_susie::*;
use coxph_susie_cli::commands::{bf_compare_rows, BfGrid};
use coxph_susie_cli::table::{write_matrix, write_phenotypes};
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

struct Instance {
    x: Vec<f64>,
    offsets: LinearPredictor,
    outcome: SurvivalOutcome,
}

/// Exponential survival data with a covariate effect, independent random
/// censoring and non-zero offsets.
fn random_instance(seed: u64, n: usize, censor_prob: f64, offset_scale: f64) -> Instance {
    let mut rng = rng_stream(seed, 99);
    loop {
        let x: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 2.0 - 0.5).collect();
        let c: Vec<f64> = (0..n).map(|_| offset_scale * (rng.random::<f64>() - 0.5)).collect();
        let beta = 1.5 * (rng.random::<f64>() - 0.5);
        let times: Vec<f64> = x
            .iter()
            .zip(&c)
            .map(|(xi, ci)| -(1.0 - rng.random::<f64>()).ln() / (beta * xi + ci).exp())
            .collect();
        let status: Vec<bool> = (0..n).map(|_| rng.random::<f64>() >= censor_prob).collect();
        if let Ok(outcome) = SurvivalOutcome::new(times, status) {
            if outcome.event_count() >= 3 {
                return Instance { x, offsets: LinearPredictor::new(c).unwrap(), outcome };
            }
        }
    }
}

fn central_difference(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
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

fn laplace_accuracy() -> Outcome {
    let grid = BfGrid {
        mafs: vec![0.01, 0.1, 0.25],
        censoring: vec![0.2, 0.6, 0.9],
        replicates: 20,
        n: 10_000,
        effect: 0.1,
        sigma0: 1.0,
        nodes: 32,
        seed: 20_240_601,
    };
    let rows = bf_compare_rows(&grid).unwrap();
    let ok = rows
        .iter()
        .filter(|r| (r.log10_laplace - r.log10_quad).abs() <= 0.05 * r.log10_quad.abs().max(1.0))
        .count();
    let frac = ok as f64 / rows.len() as f64;
    let bias = rows.iter().map(|r| r.log10_abf - r.log10_quad).sum::<f64>() / rows.len() as f64;
    outcome(
        frac >= 0.95 && bias > 0.0,
        format!("{ok}/{} replicates within tolerance; mean log10 ABF - log10 quadrature = {bias:.4}", rows.len()),
    )
}

fn one_node_identity() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut worst_n = 0;
    let mut remainder_gap: f64 = 0.0;
    for seed in 0..100u64 {
        let n = 50 + (seed as usize * 37) % 451;
        let inst = random_instance(7000 + seed, n, 0.1 + 0.007 * seed as f64, 1.0);
        let v = 0.1 + 0.019 * seed as f64;
        let fit = fit_univariate(&inst.x, &inst.offsets, &inst.outcome).unwrap();
        let inputs = BayesFactorInputs::from_fit(&fit, v).unwrap();
        let q1 = log_quadrature_bf(&inst.x, &inst.offsets, &inst.outcome, v, 1).unwrap().log_bf;
        let gap = (q1 - log_laplace_bf(&inputs)).abs();
        if gap > worst {
            worst = gap;
            worst_n = n;
        }
        // Departure of the log-likelihood from its quadratic expansion at
        // the posterior mean; the two estimators differ by exactly this.
        let mu1 = inputs.posterior_mean();
        let ll = |b: f64| partial_loglik(b, &inst.x, &inst.offsets, &inst.outcome).unwrap();
        let quadratic = fit.log_lr - 0.5 * ((mu1 - fit.bhat) / fit.se).powi(2);
        let remainder = (ll(mu1) - ll(0.0)) - quadratic;
        remainder_gap = remainder_gap.max((gap - remainder.abs()).abs());
    }
    outcome(
        worst <= 1e-10,
        format!(
            "max |log Quad(1) - log Laplace| = {worst:.3e} (n = {worst_n}); it equals the cubic-and-higher \
             remainder of the log-likelihood at the posterior mean to {remainder_gap:.1e}"
        ),
    )
}

fn coverage_replicates() -> Vec<(f64, ReplicateResult)> {
    let levels = [0.0, 0.4];
    let reps = 100;
    map_indexed(Execution::Parallel, levels.len() * reps, |g| {
        let r = levels[g / reps];
        let spec = SimulationSpec {
            n: 2000,
            p: 200,
            p1: 2,
            effect_mean: 0.0,
            effect_variance: 1.0,
            censoring_level: r,
            maf: Maf::Uniform { low: 0.05, high: 0.5 },
            seed: replicate_seed(31_415, g as u64),
            ..Default::default()
        };
        let d = simulate_dataset(&spec, Execution::Sequential).unwrap();
        let opts = SusieOptions { execution: Execution::Sequential, ..SusieOptions::with_l(5) };
        let fit = fit_susie(&d.x, &d.outcome, &PriorWeights::uniform(200), None, &opts).unwrap();
        let result = ReplicateResult {
            replicate_id: format!("r{r}-{}", g % reps),
            pips: fit.pips,
            credible_sets: fit.credible_sets,
            causal_indices: d.causal_indices,
        };
        (r, result)
    })
}

fn credible_set_coverage(results: &[(f64, ReplicateResult)]) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for level in [0.0, 0.4] {
        let subset: Vec<ReplicateResult> =
            results.iter().filter(|(r, _)| *r == level).map(|(_, x)| x.clone()).collect();
        let s = cs_summary(&subset);
        let cov = s.coverage.unwrap_or(0.0);
        pass &= s.coverage.is_some() && cov >= 0.90;
        parts.push(format!("censoring {level}: coverage {cov:.3} over {} sets, power {:.3}", s.n_sets, s.power));
    }
    outcome(pass, parts.join("; "))
}

fn pip_calibration(results: &[(f64, ReplicateResult)]) -> Outcome {
    let pooled: Vec<ReplicateResult> = results.iter().map(|(_, x)| x.clone()).collect();
    let table = calibration_table(&pooled, 10);
    let checked: Vec<_> = table.iter().filter(|b| !b.sparse).collect();
    let worst = checked.iter().map(|b| (b.mean_pip - b.causal_fraction).abs()).fold(0.0, f64::max);
    outcome(
        worst <= 0.15,
        format!("{} bins with >= 10 PIPs, max |mean PIP - causal fraction| = {worst:.3}", checked.len()),
    )
}

fn derivative_check() -> Outcome {
    let mut worst: f64 = 0.0;
    for seed in 0..200u64 {
        let n = 10 + (seed as usize * 53) % 191;
        let inst = random_instance(100 + seed, n, (seed % 9) as f64 / 10.0, 2.0);
        let b = (seed as f64 / 50.0) - 2.0;
        let h = 1e-5 * b.abs().max(1.0);
        let (score, hess) = partial_score_hessian(b, &inst.x, &inst.offsets, &inst.outcome).unwrap();
        let ll = |t: f64| partial_loglik(t, &inst.x, &inst.offsets, &inst.outcome).unwrap();
        let sc = |t: f64| partial_score_hessian(t, &inst.x, &inst.offsets, &inst.outcome).unwrap().0;
        let fd_score = central_difference(ll, b, h);
        let fd_hess = central_difference(sc, b, h);
        worst = worst
            .max((score - fd_score).abs() / fd_score.abs().max(1.0))
            .max((hess - fd_hess).abs() / fd_hess.abs().max(1.0));
    }
    outcome(worst <= 1e-5, format!("max relative error {worst:.2e} over 200 instances"))
}

fn mle_oracle() -> Outcome {
    let mut worst: f64 = 0.0;
    for seed in 0..100u64 {
        let n = 30 + (seed as usize * 29) % 271;
        let inst = random_instance(3000 + seed, n, 0.3, 1.0);
        let fit = fit_univariate(&inst.x, &inst.offsets, &inst.outcome).unwrap();
        let ll = |t: f64| partial_loglik(t, &inst.x, &inst.offsets, &inst.outcome).unwrap();
        let oracle = golden_max(ll, -10.0, 10.0, 1e-10);
        worst = worst.max((fit.bhat - oracle).abs());
    }
    outcome(worst <= 1e-6, format!("max |bhat - golden-section maximiser| = {worst:.2e}"))
}

fn censoring_calibration() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (k, r) in [0.2, 0.6, 0.9].into_iter().enumerate() {
        let spec = SimulationSpec {
            n: 50_000,
            p: 1,
            p1: 1,
            effect_mean: 0.0,
            effect_variance: 0.0,
            censoring_level: r,
            seed: 500 + k as u64,
            ..Default::default()
        };
        let d = simulate_dataset(&spec, Execution::Parallel).unwrap();
        pass &= (d.realized_censoring_rate - r).abs() <= 0.01;
        parts.push(format!("r {r}: {:.4}", d.realized_censoring_rate));
    }
    let trials = 1_000_000;
    let est = exponential_race_check(1.0, 3.0, trials, 77).unwrap();
    let se = (0.75f64 * 0.25 / trials as f64).sqrt();
    pass &= (est - 0.75).abs() <= 3.0 * se;
    parts.push(format!("race {est:.5} vs 0.75 (3 SE = {:.5})", 3.0 * se));
    outcome(pass, parts.join("; "))
}

fn em_ascent() -> Outcome {
    let mut worst = f64::INFINITY;
    for seed in 0..50u64 {
        let spec = SimulationSpec {
            n: 300,
            p: 15,
            p1: 1 + (seed % 3) as usize,
            effect_variance: 0.5,
            censoring_level: 0.1 * (seed % 8) as f64,
            maf: Maf::Uniform { low: 0.05, high: 0.5 },
            seed: replicate_seed(88, seed),
            ..Default::default()
        };
        let d = simulate_dataset(&spec, Execution::Sequential).unwrap();
        let pi = PriorWeights::uniform(15);
        let fits = fit_columns(&d.x, &d.outcome, &LinearPredictor::zeros(300), Execution::Parallel).unwrap();
        let v0 = [0.01, 0.1, 1.0, 5.0, 20.0][seed as usize % 5];
        let ser = ser_from_fits(&fits, &pi, v0).unwrap();
        let v1 = update_prior_variance(&ser);
        let before = surrogate_log_evidence(&fits, &pi, v0).unwrap();
        let after = surrogate_log_evidence(&fits, &pi, v1).unwrap();
        worst = worst.min(after - before);
    }
    outcome(worst >= -1e-8, format!("smallest change in surrogate log-evidence {worst:.3e}"))
}

fn bookkeeping() -> Outcome {
    let spec = SimulationSpec {
        n: 500,
        p: 50,
        p1: 2,
        censoring_level: 0.3,
        maf: Maf::Uniform { low: 0.05, high: 0.5 },
        seed: 9,
        ..Default::default()
    };
    let d = simulate_dataset(&spec, Execution::Parallel).unwrap();
    let base: Vec<f64> = (0..500).map(|i| 0.1 * ((i % 11) as f64 - 5.0)).collect();
    let base = LinearPredictor::new(base).unwrap();
    let opts = SusieOptions { max_iter: 20, tol: 0.0, ..SusieOptions::with_l(5) };
    let mut worst: f64 = 0.0;
    let fit = fit_susie_observed(&d.x, &d.outcome, &PriorWeights::uniform(50), Some(&base), &opts, |u| {
        let mut expect = base.as_slice().to_vec();
        for m in u.posterior_means {
            for (e, v) in expect.iter_mut().zip(d.x.mul_vec(m)) {
                *e += v;
            }
        }
        for (a, b) in u.offsets.as_slice().iter().zip(&expect) {
            worst = worst.max((a - b).abs());
        }
    })
    .unwrap();
    let counts_ok = fit.fits_per_iteration.len() == 20 && fit.fits_per_iteration.iter().all(|&k| k == 50 * 5);
    outcome(
        worst <= 1e-8 && counts_ok && fit.iterations == 20,
        format!("max offset drift {worst:.2e} over {} iterations; fits per iteration {:?}", fit.iterations, {
            let mut k = fit.fits_per_iteration.clone();
            k.dedup();
            k
        }),
    )
}

fn thread_determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let spec = SimulationSpec {
        n: 1000,
        p: 100,
        p1: 2,
        censoring_level: 0.3,
        maf: Maf::Uniform { low: 0.05, high: 0.5 },
        seed: 2718,
        ..Default::default()
    };
    let d = simulate_dataset(&spec, Execution::Parallel).unwrap();
    let geno = dir.path().join("g.csv");
    let pheno = dir.path().join("y.csv");
    let header: Vec<String> = (0..100).map(|j| format!("snp{j}")).collect();
    write_matrix(&geno, &header, &d.x).unwrap();
    write_phenotypes(&pheno, &d.outcome).unwrap();
    let fit_with = |threads: &str| {
        let out = dir.path().join(format!("fit{threads}.json"));
        let status = Command::new(env!("CARGO_BIN_EXE_coxph-susie"))
            .args(["fit", "--threads", threads, "--seed", "5"])
            .arg("--genotypes")
            .arg(&geno)
            .arg("--phenotypes")
            .arg(&pheno)
            .arg("--out")
            .arg(&out)
            .status()
            .unwrap();
        assert!(status.success());
        std::fs::read(out).unwrap()
    };
    let (one, eight) = (fit_with("1"), fit_with("8"));
    outcome(one == eight, format!("{} byte documents, identical: {}", one.len(), one == eight))
}

fn main() -> ExitCode {
    let start = Instant::now();
    let mut failed = 0;
    let mut report = |id: usize, name: &str, t0: Instant, o: Outcome| {
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        failed += usize::from(!o.pass);
        println!("[{verdict}] {id:>2} {name}: {} ({:.1}s)", o.detail, t0.elapsed().as_secs_f64());
    };

    let t = Instant::now();
    report(1, "laplace-bf-accuracy", t, laplace_accuracy());
    let t = Instant::now();
    report(2, "one-node-quadrature-identity", t, one_node_identity());
    let t = Instant::now();
    let replicates = coverage_replicates();
    report(3, "credible-set-coverage", t, credible_set_coverage(&replicates));
    let t = Instant::now();
    report(4, "pip-calibration", t, pip_calibration(&replicates));
    let t = Instant::now();
    report(5, "score-hessian-finite-differences", t, derivative_check());
    let t = Instant::now();
    report(6, "mle-golden-section", t, mle_oracle());
    let t = Instant::now();
    report(7, "censoring-calibration", t, censoring_calibration());
    let t = Instant::now();
    report(8, "em-ascent", t, em_ascent());
    let t = Instant::now();
    report(9, "offset-bookkeeping", t, bookkeeping());
    let t = Instant::now();
    report(10, "thread-determinism", t, thread_determinism());

    println!("{} of 10 criteria passed in {:.0}s", 10 - failed, start.elapsed().as_secs_f64());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
