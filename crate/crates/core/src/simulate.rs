//! Synthetic genotypes and censored exponential time-to-event outcomes.
//!
//! Survival rates are linear in the genotypes, `λᵢ = b₀ + xᵢᵀb`, with event
//! times `Tᵢ ~ Exp(λᵢ)` and censoring times `Cᵢ ~ Exp(λᶜ)` where
//! `λᶜ = r·mean(λ)/(1 - r)`. For equal `λᵢ` the expected censored fraction is
//! exactly `r`; otherwise it is an approximation.
//!
//! Random streams come from ChaCha8 with `(seed, stream)` addressing, so
//! per-column and per-replicate work can run in any order and still reproduce.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{DesignMatrix, SurvivalOutcome};
use crate::error::{dimension, invalid, Error, Result};
use crate::exec::{map_indexed, Execution};

const STREAM_OUTCOME: u64 = 1;
const STREAM_MAF: u64 = 2;
const STREAM_GENOTYPE_BASE: u64 = 1 << 32;

pub const MAX_RATE_RESAMPLES: usize = 100;

/// Independent generator for `(seed, stream)`.
pub fn rng_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Seed for replicate `index` of a study seeded with `seed` (splitmix64).
pub fn replicate_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Minor allele frequency of the synthetic SNPs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Maf {
    Fixed(f64),
    /// Drawn per SNP from `U(low, high)`.
    Uniform { low: f64, high: f64 },
}

impl Maf {
    fn validate(&self) -> Result<()> {
        let ok = |f: f64| f > 0.0 && f <= 0.5;
        match *self {
            Maf::Fixed(f) if ok(f) => Ok(()),
            Maf::Uniform { low, high } if ok(low) && ok(high) && low <= high => Ok(()),
            _ => Err(invalid(format!("minor allele frequency {self:?} must lie in (0, 0.5]"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSpec {
    pub n: usize,
    pub p: usize,
    /// Number of causal variables.
    pub p1: usize,
    pub effect_mean: f64,
    pub effect_variance: f64,
    /// `b₀`.
    pub baseline: f64,
    /// Target censoring level `r ∈ [0, 1)`.
    pub censoring_level: f64,
    pub maf: Maf,
    pub seed: u64,
}

impl Default for SimulationSpec {
    fn default() -> Self {
        Self {
            n: 1000,
            p: 100,
            p1: 1,
            effect_mean: 0.0,
            effect_variance: 1.0,
            baseline: 1.0,
            censoring_level: 0.0,
            maf: Maf::Fixed(0.25),
            seed: 1,
        }
    }
}

impl SimulationSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 || self.p == 0 {
            return Err(invalid("need n >= 2 samples and p >= 1 variables"));
        }
        if self.p1 > self.p {
            return Err(invalid(format!("{} causal variables exceed p = {}", self.p1, self.p)));
        }
        if !(self.effect_mean.is_finite() && self.effect_variance.is_finite() && self.effect_variance >= 0.0) {
            return Err(invalid("effect mean must be finite and effect variance finite and >= 0"));
        }
        if !self.baseline.is_finite() {
            return Err(invalid("baseline rate must be finite"));
        }
        if !(self.censoring_level >= 0.0 && self.censoring_level < 1.0) {
            return Err(invalid(format!("censoring level {} must lie in [0, 1)", self.censoring_level)));
        }
        self.maf.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedDataset {
    pub x: DesignMatrix,
    pub outcome: SurvivalOutcome,
    /// Sorted ascending.
    pub causal_indices: Vec<usize>,
    pub true_coefficients: Vec<f64>,
    pub realized_censoring_rate: f64,
    /// `λᶜ`, or 0 when no censoring was simulated.
    pub censoring_rate_param: f64,
}

/// `n × p` matrix of `Binomial(2, f)` dosages, one random stream per column.
pub fn simulate_genotypes(n: usize, p: usize, maf: Maf, seed: u64, exec: Execution) -> Result<DesignMatrix> {
    maf.validate()?;
    let freqs: Vec<f64> = match maf {
        Maf::Fixed(f) => vec![f; p],
        Maf::Uniform { low, high } => {
            let mut rng = rng_stream(seed, STREAM_MAF);
            (0..p).map(|_| low + (high - low) * rng.random::<f64>()).collect()
        }
    };
    let columns = map_indexed(exec, p, |j| {
        let mut rng = rng_stream(seed, STREAM_GENOTYPE_BASE + j as u64);
        let f = freqs[j];
        (0..n)
            .map(|_| f64::from(u8::from(rng.random::<f64>() < f) + u8::from(rng.random::<f64>() < f)))
            .collect::<Vec<f64>>()
    });
    DesignMatrix::from_col_major(n, p, columns.concat())
}

fn draw_exp(rng: &mut ChaCha8Rng, rate: f64) -> f64 {
    let e: f64 = Exp1.sample(rng);
    e / rate
}

/// Draw causal variables, coefficients and censored times for genotypes `x`.
pub fn simulate_tte(x: &DesignMatrix, spec: &SimulationSpec) -> Result<SimulatedDataset> {
    spec.validate()?;
    if x.nrows() != spec.n || x.ncols() != spec.p {
        return Err(dimension(format!(
            "genotypes are {}x{}, simulation expects {}x{}",
            x.nrows(),
            x.ncols(),
            spec.n,
            spec.p
        )));
    }
    let mut rng = rng_stream(spec.seed, STREAM_OUTCOME);
    let mut causal = sample(&mut rng, spec.p, spec.p1).into_vec();
    causal.sort_unstable();

    let sd = spec.effect_variance.sqrt();
    let mut rates = Vec::new();
    let mut coefficients = vec![0.0; spec.p];
    let mut positive = false;
    for _ in 0..MAX_RATE_RESAMPLES {
        for &j in &causal {
            let z: f64 = StandardNormal.sample(&mut rng);
            coefficients[j] = spec.effect_mean + sd * z;
        }
        rates = x.mul_vec(&coefficients);
        rates.iter_mut().for_each(|r| *r += spec.baseline);
        if rates.iter().all(|&r| r > 0.0) {
            positive = true;
            break;
        }
    }
    if !positive {
        return Err(Error::RatePositivity(format!(
            "survival rate b0 + x'b was non-positive for some sample in {MAX_RATE_RESAMPLES} coefficient draws"
        )));
    }

    let r = spec.censoring_level;
    let mean_rate = rates.iter().sum::<f64>() / rates.len() as f64;
    let (times, status, lambda_c) = if r == 0.0 {
        let times = rates.iter().map(|&l| draw_exp(&mut rng, l)).collect();
        (times, vec![true; spec.n], 0.0)
    } else {
        let lambda_c = r * mean_rate / (1.0 - r);
        let mut times = Vec::with_capacity(spec.n);
        let mut status = Vec::with_capacity(spec.n);
        for &l in &rates {
            let t = draw_exp(&mut rng, l);
            let c = draw_exp(&mut rng, lambda_c);
            times.push(t.min(c));
            status.push(t <= c);
        }
        (times, status, lambda_c)
    };
    let outcome = SurvivalOutcome::new(times, status)?;
    Ok(SimulatedDataset {
        x: x.clone(),
        realized_censoring_rate: outcome.censoring_rate(),
        outcome,
        causal_indices: causal,
        true_coefficients: coefficients,
        censoring_rate_param: lambda_c,
    })
}

/// Synthetic genotypes followed by [`simulate_tte`].
pub fn simulate_dataset(spec: &SimulationSpec, exec: Execution) -> Result<SimulatedDataset> {
    spec.validate()?;
    let x = simulate_genotypes(spec.n, spec.p, spec.maf, spec.seed, exec)?;
    simulate_tte(&x, spec)
}

/// Expected censored fraction `(1/n) Σ λᶜ/(λᵢ + λᶜ)` for given rates.
pub fn expected_censoring(rates: &[f64], lambda_c: f64) -> f64 {
    rates.iter().map(|&l| lambda_c / (l + lambda_c)).sum::<f64>() / rates.len() as f64
}

/// Monte Carlo estimate of `Pr(X > Y)` for `X ~ Exp(lambda)`, `Y ~ Exp(mu)`.
pub fn exponential_race_check(lambda: f64, mu: f64, trials: usize, seed: u64) -> Result<f64> {
    if !(lambda > 0.0 && mu > 0.0 && lambda.is_finite() && mu.is_finite()) {
        return Err(invalid("both rates must be finite and positive"));
    }
    if trials == 0 {
        return Err(invalid("need at least one trial"));
    }
    let mut rng = rng_stream(seed, 0);
    let wins = (0..trials)
        .filter(|_| draw_exp(&mut rng, lambda) > draw_exp(&mut rng, mu))
        .count();
    Ok(wins as f64 / trials as f64)
}
