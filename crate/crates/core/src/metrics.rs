//! Evaluation of fitted replicates against simulated ground truth.

use serde::{Deserialize, Serialize};

use crate::credible::CredibleSet;

/// Bins with fewer observations than this are flagged as sparse.
pub const MIN_BIN_COUNT: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateResult {
    pub replicate_id: String,
    pub pips: Vec<f64>,
    pub credible_sets: Vec<CredibleSet>,
    pub causal_indices: Vec<usize>,
}

impl ReplicateResult {
    fn is_causal(&self, j: usize) -> bool {
        self.causal_indices.contains(&j)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationBin {
    pub lower: f64,
    pub upper: f64,
    pub mean_pip: f64,
    pub causal_fraction: f64,
    pub count: usize,
    pub sparse: bool,
}

/// PIPs grouped into `bins` equal-width bins on `[0, 1]`; only populated
/// bins are returned. A PIP of exactly 1 falls in the last bin.
pub fn calibration_table(results: &[ReplicateResult], bins: usize) -> Vec<CalibrationBin> {
    let bins = bins.max(2);
    let mut sum = vec![0.0; bins];
    let mut causal = vec![0usize; bins];
    let mut count = vec![0usize; bins];
    for r in results {
        for (j, &pip) in r.pips.iter().enumerate() {
            let b = ((pip * bins as f64).floor() as usize).min(bins - 1);
            sum[b] += pip;
            count[b] += 1;
            causal[b] += usize::from(r.is_causal(j));
        }
    }
    (0..bins)
        .filter(|&b| count[b] > 0)
        .map(|b| CalibrationBin {
            lower: b as f64 / bins as f64,
            upper: (b + 1) as f64 / bins as f64,
            mean_pip: sum[b] / count[b] as f64,
            causal_fraction: causal[b] as f64 / count[b] as f64,
            count: count[b],
            sparse: count[b] < MIN_BIN_COUNT,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerFdrPoint {
    pub threshold: f64,
    pub fdr: f64,
    pub power: f64,
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
}

/// A variable is called when `PIP >= threshold`. FDR is 0 with no calls.
pub fn power_fdr_curve(results: &[ReplicateResult], thresholds: &[f64]) -> Vec<PowerFdrPoint> {
    thresholds
        .iter()
        .map(|&t| {
            let (mut tp, mut fp, mut fneg) = (0, 0, 0);
            for r in results {
                for (j, &pip) in r.pips.iter().enumerate() {
                    match (pip >= t, r.is_causal(j)) {
                        (true, true) => tp += 1,
                        (true, false) => fp += 1,
                        (false, true) => fneg += 1,
                        (false, false) => {}
                    }
                }
            }
            let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
            PowerFdrPoint {
                threshold: t,
                fdr: ratio(fp, tp + fp),
                power: ratio(tp, tp + fneg),
                true_positives: tp,
                false_positives: fp,
                false_negatives: fneg,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsSummary {
    /// Fraction of emitted sets containing a causal variable; `None` when no
    /// set was emitted.
    pub coverage: Option<f64>,
    /// Fraction of causal variables inside some emitted set.
    pub power: f64,
    pub median_purity: Option<f64>,
    pub median_mas: Option<f64>,
    pub mean_size: Option<f64>,
    pub n_sets: usize,
    pub n_causal: usize,
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) })
}

pub fn cs_summary(results: &[ReplicateResult]) -> CsSummary {
    let mut covered = 0usize;
    let mut n_sets = 0usize;
    let mut sizes = 0usize;
    let mut purities = Vec::new();
    let mut mas = Vec::new();
    let mut n_causal = 0usize;
    let mut found = 0usize;
    for r in results {
        for cs in &r.credible_sets {
            n_sets += 1;
            sizes += cs.members.len();
            covered += usize::from(cs.members.iter().any(|&j| r.is_causal(j)));
            purities.push(cs.purity);
            mas.push(cs.mean_abs_corr);
        }
        for &c in &r.causal_indices {
            n_causal += 1;
            found += usize::from(r.credible_sets.iter().any(|cs| cs.contains(c)));
        }
    }
    CsSummary {
        coverage: (n_sets > 0).then(|| covered as f64 / n_sets as f64),
        power: if n_causal == 0 { 0.0 } else { found as f64 / n_causal as f64 },
        median_purity: median(purities),
        median_mas: median(mas),
        mean_size: (n_sets > 0).then(|| sizes as f64 / n_sets as f64),
        n_sets,
        n_causal,
    }
}

/// `0, 1/(k-1), …, 1`.
pub fn uniform_thresholds(k: usize) -> Vec<f64> {
    let k = k.max(2);
    (0..k).map(|i| i as f64 / (k - 1) as f64).collect()
}
