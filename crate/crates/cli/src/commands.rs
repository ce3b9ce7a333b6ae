use std::fs;
use std::path::{Path, PathBuf};

use coxph_susie::bayes_factor::{log_abf, log_laplace_bf, to_log10, BayesFactorInputs};
use coxph_susie::cox::{fit_multivariate, fit_univariate};
use coxph_susie::exec::map_indexed;
use coxph_susie::metrics::{calibration_table, cs_summary, power_fdr_curve, uniform_thresholds, ReplicateResult};
use coxph_susie::quadrature::{hermite_rule, log_quadrature_bf_rule};
use coxph_susie::simulate::{replicate_seed, simulate_dataset, simulate_tte, Maf, SimulationSpec};
use coxph_susie::{
    fit_susie, DesignMatrix, Execution, LinearPredictor, PriorWeights, SurvivalOutcome, SusieOptions,
};
use serde::{Deserialize, Serialize};

use crate::document::{FitDocument, TruthDocument};
use crate::error::{CliError, Result};
use crate::settings::{check_variance, resolve_nodes, BfCompareArgs, EvaluateArgs, FileConfig, FitArgs, ModelSettings, SimulateArgs};
use crate::table::{emit, read_json, read_numeric, read_phenotypes, to_json, write_matrix, write_phenotypes, write_table};

pub const FIT_SUFFIX: &str = ".fit.json";
pub const TRUTH_SUFFIX: &str = ".truth.json";

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}

/// Fits the model and builds the output document. `covariates`, when given,
/// are fitted alone first and their linear predictor becomes the offset.
pub fn fit_document(
    x: &DesignMatrix,
    variables: Vec<String>,
    outcome: &SurvivalOutcome,
    covariates: Option<&DesignMatrix>,
    settings: ModelSettings,
) -> Result<FitDocument> {
    if x.nrows() != outcome.len() {
        return Err(CliError::Dimension(format!(
            "genotypes have {} rows, phenotypes have {}",
            x.nrows(),
            outcome.len()
        )));
    }
    let seeded = match covariates {
        Some(z) if z.nrows() != outcome.len() => {
            return Err(CliError::Dimension(format!(
                "covariates have {} rows, phenotypes have {}",
                z.nrows(),
                outcome.len()
            )))
        }
        Some(z) => {
            let m = fit_multivariate(z, outcome)?;
            if !m.converged {
                eprintln!("warning: covariate model did not converge (gradient norm {:e})", m.gradient_norm);
            }
            Some(m)
        }
        None => None,
    };
    let opts = SusieOptions {
        l: settings.l,
        sigma0_init: vec![settings.sigma0; settings.l],
        max_iter: settings.max_iter,
        tol: settings.tol,
        rho: settings.rho,
        purity_threshold: settings.purity,
        execution: Execution::Parallel,
    };
    let pi = PriorWeights::uniform(x.ncols());
    let fit = fit_susie(x, outcome, &pi, seeded.as_ref().map(|m| &m.offsets), &opts)?;
    if !fit.converged {
        eprintln!("warning: no convergence after {} iterations", fit.iterations);
    }
    Ok(FitDocument::new(&fit, variables, x.nrows(), settings, seeded.map(|m| m.coefficients)))
}

pub fn fit(args: &FitArgs, file: &FileConfig) -> Result<()> {
    let settings = ModelSettings::resolve(&args.model, file)?;
    let genotypes = read_numeric(&args.genotypes)?;
    let outcome = read_phenotypes(&args.phenotypes)?;
    let covariates = match &args.covariates {
        Some(path) => Some(read_numeric(path)?.into_matrix()?),
        None => None,
    };
    let variables = genotypes.header.clone();
    let x = genotypes.into_matrix()?;
    let doc = fit_document(&x, variables, &outcome, covariates.as_ref(), settings)?;
    emit(args.out.as_ref(), &to_json(&doc))
}

pub fn replicate_stem(index: usize) -> String {
    format!("rep{:04}", index + 1)
}

pub fn simulate(args: &SimulateArgs, seed: u64) -> Result<()> {
    let maf = match args.maf_max {
        Some(high) => Maf::Uniform { low: args.maf, high },
        None => Maf::Fixed(args.maf),
    };
    if args.replicates == 0 {
        return Err(CliError::Usage("--replicates must be at least 1".into()));
    }
    let supplied = match &args.genotypes {
        Some(path) => {
            let t = read_numeric(path)?;
            Some((t.header.clone(), t.into_matrix()?))
        }
        None => None,
    };
    let (n, p) = supplied.as_ref().map_or((args.n, args.p), |(_, x)| (x.nrows(), x.ncols()));
    let header: Vec<String> = match &supplied {
        Some((h, _)) => h.clone(),
        None => (0..p).map(|j| format!("snp{j}")).collect(),
    };
    let base = SimulationSpec {
        n,
        p,
        p1: args.causal,
        effect_mean: args.effect_mean,
        effect_variance: args.effect_variance,
        baseline: args.baseline,
        censoring_level: args.censoring,
        maf,
        seed,
    };
    base.validate()?;
    create_dir(&args.out)?;

    let results = map_indexed(Execution::Parallel, args.replicates, |r| -> Result<()> {
        let spec = SimulationSpec { seed: replicate_seed(seed, r as u64), ..base.clone() };
        let d = match &supplied {
            Some((_, x)) => simulate_tte(x, &spec)?,
            None => simulate_dataset(&spec, Execution::Sequential)?,
        };
        let stem = replicate_stem(r);
        write_matrix(&args.out.join(format!("{stem}.genotypes.csv")), &header, &d.x)?;
        write_phenotypes(&args.out.join(format!("{stem}.phenotypes.csv")), &d.outcome)?;
        let truth = args.out.join(format!("{stem}{TRUTH_SUFFIX}"));
        fs::write(&truth, to_json(&TruthDocument::new(&spec, &d))).map_err(|e| CliError::io(&truth, e))
    });
    results.into_iter().collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BfRow {
    pub maf: f64,
    pub censoring: f64,
    pub replicate: usize,
    pub realized_censoring: f64,
    pub bhat: f64,
    pub se: f64,
    pub log10_laplace: f64,
    pub log10_abf: f64,
    pub log10_quad: f64,
    /// False when the single-SNP fit failed or the SNP was monomorphic;
    /// all three Bayes factors are then 1.
    pub informative: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BfGrid {
    pub mafs: Vec<f64>,
    pub censoring: Vec<f64>,
    pub replicates: usize,
    pub n: usize,
    pub effect: f64,
    pub sigma0: f64,
    pub nodes: usize,
    pub seed: u64,
}

/// One row per simulated single-SNP data set, cells in frequency-major order.
pub fn bf_compare_rows(grid: &BfGrid) -> Result<Vec<BfRow>> {
    check_variance(grid.sigma0)?;
    if grid.replicates == 0 {
        return Err(CliError::Usage("--replicates must be at least 1".into()));
    }
    let rule = hermite_rule(grid.nodes)?;
    let cells: Vec<(f64, f64)> =
        grid.mafs.iter().flat_map(|&m| grid.censoring.iter().map(move |&r| (m, r))).collect();
    for &(m, r) in &cells {
        SimulationSpec { n: grid.n, p: 1, censoring_level: r, maf: Maf::Fixed(m), ..Default::default() }.validate()?;
    }
    let r_count = grid.replicates;
    let zeros = LinearPredictor::zeros(grid.n);
    map_indexed(Execution::Parallel, cells.len() * r_count, |g| -> Result<BfRow> {
        let (maf, censoring) = cells[g / r_count];
        let spec = SimulationSpec {
            n: grid.n,
            p: 1,
            p1: 1,
            effect_mean: grid.effect,
            effect_variance: 0.0,
            censoring_level: censoring,
            maf: Maf::Fixed(maf),
            seed: replicate_seed(grid.seed, g as u64),
            ..Default::default()
        };
        let d = simulate_dataset(&spec, Execution::Sequential)?;
        let x = d.x.column(0);
        let fit = fit_univariate(x, &zeros, &d.outcome)?;
        let (abf, laplace, quad) = if fit.is_informative() {
            let inputs = BayesFactorInputs::from_fit(&fit, grid.sigma0)?;
            let q = log_quadrature_bf_rule(x, &zeros, &d.outcome, grid.sigma0, &rule)?;
            (log_abf(&inputs), log_laplace_bf(&inputs), q.log_bf)
        } else {
            (0.0, 0.0, 0.0)
        };
        Ok(BfRow {
            maf,
            censoring,
            replicate: g % r_count,
            realized_censoring: d.realized_censoring_rate,
            bhat: fit.bhat,
            se: fit.se,
            log10_laplace: to_log10(laplace),
            log10_abf: to_log10(abf),
            log10_quad: to_log10(quad),
            informative: fit.is_informative(),
        })
    })
    .into_iter()
    .collect()
}

pub fn bf_compare(args: &BfCompareArgs, file: &FileConfig, seed: u64) -> Result<()> {
    let grid = BfGrid {
        mafs: args.mafs.clone(),
        censoring: args.censoring.clone(),
        replicates: args.replicates,
        n: args.n,
        effect: args.effect,
        sigma0: args.sigma0.or(file.sigma0).unwrap_or(1.0),
        nodes: resolve_nodes(args.nodes, file)?,
        seed,
    };
    let rows = bf_compare_rows(&grid)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in &rows {
        w.serialize(row).map_err(|e| CliError::Invalid(e.to_string()))?;
    }
    let mut text = String::from_utf8(w.into_inner().map_err(|e| CliError::Invalid(e.to_string()))?)
        .expect("csv output is utf-8");
    if rows.is_empty() {
        text = "maf,censoring,replicate,realized_censoring,bhat,se,log10_laplace,log10_abf,log10_quad,informative\n".into();
    }
    emit(args.out.as_ref(), &text)
}

/// Pairs every `<stem>.fit.json` in `dir` with `<stem>.truth.json`, in
/// file-name order.
pub fn load_replicates(dir: &Path) -> Result<Vec<ReplicateResult>> {
    let entries = fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?;
    let mut fits: Vec<(String, PathBuf)> = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| CliError::io(dir, e))?.path();
        let name = path.file_name().and_then(|s| s.to_str()).unwrap_or_default();
        if let Some(stem) = name.strip_suffix(FIT_SUFFIX) {
            fits.push((stem.to_string(), path.clone()));
        }
    }
    fits.sort();
    fits.into_iter()
        .map(|(stem, fit_path)| {
            let truth_path = dir.join(format!("{stem}{TRUTH_SUFFIX}"));
            if !truth_path.is_file() {
                return Err(CliError::Pairing { fit: fit_path, truth: truth_path });
            }
            let fit: FitDocument = read_json(&fit_path)?;
            let truth: TruthDocument = read_json(&truth_path)?;
            if fit.pips.len() != truth.true_coefficients.len() {
                return Err(CliError::Dimension(format!(
                    "{stem}: fit has {} variables, truth has {}",
                    fit.pips.len(),
                    truth.true_coefficients.len()
                )));
            }
            Ok(ReplicateResult {
                replicate_id: stem,
                pips: fit.pips,
                credible_sets: fit.credible_sets,
                causal_indices: truth.causal_indices,
            })
        })
        .collect()
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

pub fn evaluate(args: &EvaluateArgs) -> Result<()> {
    if args.bins < 2 || args.thresholds < 2 {
        return Err(CliError::Usage("--bins and --thresholds must be at least 2".into()));
    }
    let results = load_replicates(&args.input)?;
    create_dir(&args.out)?;

    let calibration: Vec<Vec<String>> = calibration_table(&results, args.bins)
        .into_iter()
        .map(|b| {
            vec![
                b.lower.to_string(),
                b.upper.to_string(),
                b.mean_pip.to_string(),
                b.causal_fraction.to_string(),
                b.count.to_string(),
                b.sparse.to_string(),
            ]
        })
        .collect();
    write_table(
        &args.out.join("calibration.csv"),
        &["lower", "upper", "mean_pip", "causal_fraction", "count", "sparse"],
        &calibration,
    )?;

    let curve = if results.is_empty() {
        Vec::new()
    } else {
        power_fdr_curve(&results, &uniform_thresholds(args.thresholds))
    };
    let curve: Vec<Vec<String>> = curve
        .into_iter()
        .map(|p| {
            vec![
                p.threshold.to_string(),
                p.fdr.to_string(),
                p.power.to_string(),
                p.true_positives.to_string(),
                p.false_positives.to_string(),
                p.false_negatives.to_string(),
            ]
        })
        .collect();
    write_table(
        &args.out.join("power_fdr.csv"),
        &["threshold", "fdr", "power", "true_positives", "false_positives", "false_negatives"],
        &curve,
    )?;

    let summary = if results.is_empty() {
        Vec::new()
    } else {
        let s = cs_summary(&results);
        vec![vec![
            results.len().to_string(),
            opt(s.coverage),
            s.power.to_string(),
            opt(s.median_purity),
            opt(s.median_mas),
            opt(s.mean_size),
            s.n_sets.to_string(),
            s.n_causal.to_string(),
        ]]
    };
    write_table(
        &args.out.join("cs_summary.csv"),
        &["replicates", "coverage", "power", "median_purity", "median_mas", "mean_size", "n_sets", "n_causal"],
        &summary,
    )
}
