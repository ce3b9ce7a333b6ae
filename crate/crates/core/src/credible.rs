//! Level-ρ credible sets and their purity filter.

use serde::{Deserialize, Serialize};

use crate::data::DesignMatrix;

pub const DEFAULT_COVERAGE: f64 = 0.95;
pub const DEFAULT_PURITY: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CredibleSet {
    pub effect_index: usize,
    /// Variable indices in the order they were added (descending α).
    pub members: Vec<usize>,
    pub coverage_mass: f64,
    /// Minimum absolute pairwise correlation; 1 for a singleton.
    pub purity: f64,
    /// Mean absolute pairwise correlation; 1 for a singleton.
    pub mean_abs_corr: f64,
    /// Member with the largest α.
    pub sentinel: usize,
}

impl CredibleSet {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, j: usize) -> bool {
        self.members.contains(&j)
    }
}

/// Greedy construction: sort by descending α (ties by ascending index) and
/// add variables until the cumulative mass reaches `rho`.
pub fn greedy_members(alpha: &[f64], rho: f64) -> (Vec<usize>, f64) {
    let mut idx: Vec<usize> = (0..alpha.len()).collect();
    idx.sort_by(|&a, &b| alpha[b].total_cmp(&alpha[a]).then(a.cmp(&b)));
    let mut mass = 0.0;
    let mut members = Vec::new();
    for j in idx {
        members.push(j);
        mass += alpha[j];
        if mass >= rho {
            break;
        }
    }
    (members, mass)
}

fn standardised(col: &[f64]) -> Option<Vec<f64>> {
    let n = col.len() as f64;
    let mean = col.iter().sum::<f64>() / n;
    let ss: f64 = col.iter().map(|v| (v - mean) * (v - mean)).sum();
    if ss.is_nan() || ss <= 0.0 {
        return None;
    }
    let scale = ss.sqrt().recip();
    Some(col.iter().map(|v| (v - mean) * scale).collect())
}

/// `(min, mean)` absolute Pearson correlation over all member pairs.
/// A constant column is treated as uncorrelated with everything.
pub fn purity(x: &DesignMatrix, members: &[usize]) -> (f64, f64) {
    if members.len() < 2 {
        return (1.0, 1.0);
    }
    let cols: Vec<Option<Vec<f64>>> = members.iter().map(|&j| standardised(x.column(j))).collect();
    let mut min = f64::INFINITY;
    let mut total = 0.0;
    let mut pairs = 0usize;
    for a in 0..cols.len() {
        for b in a + 1..cols.len() {
            let r = match (&cols[a], &cols[b]) {
                (Some(u), Some(v)) => u.iter().zip(v).map(|(p, q)| p * q).sum::<f64>().abs().min(1.0),
                _ => 0.0,
            };
            min = min.min(r);
            total += r;
            pairs += 1;
        }
    }
    (min, total / pairs as f64)
}

/// Build the level-`rho` set for one effect; `None` when its purity falls
/// below `purity_threshold`.
pub fn credible_set(
    alpha: &[f64],
    rho: f64,
    x: &DesignMatrix,
    purity_threshold: f64,
    effect_index: usize,
) -> Option<CredibleSet> {
    let (members, coverage_mass) = greedy_members(alpha, rho);
    let sentinel = *members.first()?;
    let (purity, mean_abs_corr) = purity(x, &members);
    if purity < purity_threshold {
        return None;
    }
    Some(CredibleSet {
        effect_index,
        members,
        coverage_mass,
        purity,
        mean_abs_corr,
        sentinel,
    })
}
