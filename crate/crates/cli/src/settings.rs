//! Command-line arguments and their resolution.
//!
//! Each tunable is looked up in order: explicit flag, `COXSUSIE_*`
//! environment variable, `--config` TOML file, built-in default.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use coxph_susie::quadrature::MAX_NODES;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::table::read_to_string;

#[derive(Debug, Parser)]
#[command(name = "coxph-susie", version, about = "Fine-mapping of time-to-event traits with CoxPH-SuSiE")]
pub struct Cli {
    /// TOML file with defaults for any tunable.
    #[arg(long, global = true, env = "COXSUSIE_CONFIG")]
    pub config: Option<PathBuf>,
    /// Worker threads; 0 uses every available core.
    #[arg(long, global = true, env = "COXSUSIE_THREADS")]
    pub threads: Option<usize>,
    #[arg(long, global = true, env = "COXSUSIE_SEED")]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the model to a genotype matrix and survival phenotypes.
    Fit(FitArgs),
    /// Simulate genotypes and censored survival times.
    Simulate(SimulateArgs),
    /// Compare ABF, Laplace and quadrature Bayes factors on simulated SNPs.
    BfCompare(BfCompareArgs),
    /// Score a directory of fits against their simulation truth.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct ModelArgs {
    /// Number of single effects.
    #[arg(long = "L", env = "COXSUSIE_L")]
    pub l: Option<usize>,
    /// Credible-set coverage.
    #[arg(long, env = "COXSUSIE_RHO")]
    pub rho: Option<f64>,
    /// Minimum credible-set purity.
    #[arg(long, env = "COXSUSIE_PURITY")]
    pub purity: Option<f64>,
    /// Initial prior effect variance.
    #[arg(long, env = "COXSUSIE_SIGMA0")]
    pub sigma0: Option<f64>,
    #[arg(long, env = "COXSUSIE_MAX_ITER")]
    pub max_iter: Option<usize>,
    #[arg(long, env = "COXSUSIE_TOL")]
    pub tol: Option<f64>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long, env = "COXSUSIE_GENOTYPES")]
    pub genotypes: PathBuf,
    #[arg(long, env = "COXSUSIE_PHENOTYPES")]
    pub phenotypes: PathBuf,
    #[arg(long, env = "COXSUSIE_COVARIATES")]
    pub covariates: Option<PathBuf>,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Output JSON file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Use this genotype matrix instead of synthetic genotypes.
    #[arg(long)]
    pub genotypes: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 100)]
    pub p: usize,
    /// Number of causal variables.
    #[arg(long, default_value_t = 1)]
    pub causal: usize,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub effect_mean: f64,
    #[arg(long, default_value_t = 1.0)]
    pub effect_variance: f64,
    #[arg(long, default_value_t = 1.0)]
    pub baseline: f64,
    /// Target censoring fraction.
    #[arg(long, default_value_t = 0.0)]
    pub censoring: f64,
    /// Minor allele frequency, or the lower end of its range with `--maf-max`.
    #[arg(long, default_value_t = 0.25)]
    pub maf: f64,
    /// Draw each SNP's frequency uniformly from `[maf, maf-max]`.
    #[arg(long)]
    pub maf_max: Option<f64>,
    #[arg(long, default_value_t = 1)]
    pub replicates: usize,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BfCompareArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [0.01, 0.1, 0.25])]
    pub mafs: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.2, 0.6, 0.9])]
    pub censoring: Vec<f64>,
    /// Replicates per frequency and censoring cell.
    #[arg(long, default_value_t = 50)]
    pub replicates: usize,
    #[arg(long, default_value_t = 10_000)]
    pub n: usize,
    /// True per-allele effect.
    #[arg(long, default_value_t = 0.1, allow_negative_numbers = true)]
    pub effect: f64,
    #[arg(long, env = "COXSUSIE_SIGMA0")]
    pub sigma0: Option<f64>,
    /// Gauss-Hermite nodes for the reference Bayes factor.
    #[arg(long, env = "COXSUSIE_NODES")]
    pub nodes: Option<usize>,
    /// Output CSV file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Directory of `<stem>.fit.json` and `<stem>.truth.json` pairs.
    #[arg(long, env = "COXSUSIE_INPUT")]
    pub input: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub bins: usize,
    /// Number of evenly spaced PIP thresholds for the power/FDR table.
    #[arg(long, default_value_t = 101)]
    pub thresholds: usize,
    /// Output directory for the metric tables.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct FileConfig {
    #[serde(rename = "L")]
    pub l: Option<usize>,
    pub rho: Option<f64>,
    pub purity: Option<f64>,
    pub sigma0: Option<f64>,
    pub max_iter: Option<usize>,
    pub tol: Option<f64>,
    pub nodes: Option<usize>,
    pub threads: Option<usize>,
    pub seed: Option<u64>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else { return Ok(Self::default()) };
        toml::from_str(&read_to_string(path)?)
            .map_err(|e| CliError::Format { path: path.to_path_buf(), message: e.to_string() })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSettings {
    #[serde(rename = "L")]
    pub l: usize,
    pub rho: f64,
    pub purity: f64,
    pub sigma0: f64,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for ModelSettings {
    fn default() -> Self {
        Self { l: 5, rho: 0.95, purity: 0.5, sigma0: 1.0, max_iter: 100, tol: 1e-4 }
    }
}

impl ModelSettings {
    pub fn resolve(args: &ModelArgs, file: &FileConfig) -> Result<Self> {
        let d = Self::default();
        let s = Self {
            l: args.l.or(file.l).unwrap_or(d.l),
            rho: args.rho.or(file.rho).unwrap_or(d.rho),
            purity: args.purity.or(file.purity).unwrap_or(d.purity),
            sigma0: args.sigma0.or(file.sigma0).unwrap_or(d.sigma0),
            max_iter: args.max_iter.or(file.max_iter).unwrap_or(d.max_iter),
            tol: args.tol.or(file.tol).unwrap_or(d.tol),
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let usage = |m: &str| Err(CliError::Usage(m.to_string()));
        if self.l == 0 {
            return usage("--L must be at least 1");
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return usage("--rho must lie in (0, 1)");
        }
        if !(0.0..=1.0).contains(&self.purity) {
            return usage("--purity must lie in [0, 1]");
        }
        check_variance(self.sigma0)?;
        if self.max_iter == 0 {
            return usage("--max-iter must be at least 1");
        }
        if !(self.tol.is_finite() && self.tol >= 0.0) {
            return usage("--tol must be finite and non-negative");
        }
        Ok(())
    }
}

pub fn check_variance(v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(CliError::Usage("--sigma0 must be finite and positive".into()))
    }
}

pub fn resolve_nodes(flag: Option<usize>, file: &FileConfig) -> Result<usize> {
    let k = flag.or(file.nodes).unwrap_or(coxph_susie::quadrature::DEFAULT_NODES);
    if k == 0 || k > MAX_NODES {
        return Err(CliError::Usage(format!("--nodes must lie in 1..={MAX_NODES}")));
    }
    Ok(k)
}
