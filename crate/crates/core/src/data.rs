//! Input containers: survival outcomes, offsets and the covariate matrix.

use serde::{Deserialize, Serialize};

use crate::error::{dimension, invalid, Error, Result};

/// A block of samples sharing one observed time, in descending-time order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct TieGroup {
    pub start: usize,
    pub end: usize,
    pub events: usize,
}

/// Observed times `y` and event indicators `δ` for `n` samples.
///
/// The sort order used by the risk-set recursions is computed once on
/// construction and shared by every likelihood evaluation.
#[derive(Debug, Clone)]
pub struct SurvivalOutcome {
    times: Vec<f64>,
    status: Vec<bool>,
    /// Sample indices by descending time.
    order: Vec<usize>,
    groups: Vec<TieGroup>,
    events: usize,
}

impl PartialEq for SurvivalOutcome {
    fn eq(&self, other: &Self) -> bool {
        self.times == other.times && self.status == other.status
    }
}

impl SurvivalOutcome {
    pub fn new(times: Vec<f64>, status: Vec<bool>) -> Result<Self> {
        if times.len() != status.len() {
            return Err(dimension(format!(
                "{} times but {} status flags",
                times.len(),
                status.len()
            )));
        }
        if times.len() < 2 {
            return Err(invalid("survival outcome needs at least 2 samples"));
        }
        if let Some(i) = times.iter().position(|t| !t.is_finite() || *t < 0.0) {
            return Err(invalid(format!("time {} at sample {i} is not a finite non-negative value", times[i])));
        }
        let events = status.iter().filter(|&&d| d).count();
        if events == 0 {
            return Err(Error::DegenerateData(
                "no uncensored samples; the partial likelihood is vacuous".into(),
            ));
        }

        let mut order: Vec<usize> = (0..times.len()).collect();
        order.sort_by(|&a, &b| times[b].total_cmp(&times[a]).then(a.cmp(&b)));

        let mut groups = Vec::new();
        let mut start = 0;
        while start < order.len() {
            let t = times[order[start]];
            let mut end = start;
            let mut d = 0;
            while end < order.len() && times[order[end]] == t {
                d += usize::from(status[order[end]]);
                end += 1;
            }
            groups.push(TieGroup { start, end, events: d });
            start = end;
        }

        Ok(Self { times, status, order, groups, events })
    }

    /// Convenience constructor from 0/1 integer status codes.
    pub fn from_codes(times: Vec<f64>, codes: &[u8]) -> Result<Self> {
        let status = codes
            .iter()
            .enumerate()
            .map(|(i, &c)| match c {
                0 => Ok(false),
                1 => Ok(true),
                _ => Err(invalid(format!("status {c} at sample {i} is not 0 or 1"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(times, status)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn status(&self) -> &[bool] {
        &self.status
    }

    /// Number of observed events `K`.
    pub fn event_count(&self) -> usize {
        self.events
    }

    /// `(n - K) / n`.
    pub fn censoring_rate(&self) -> f64 {
        (self.len() - self.events) as f64 / self.len() as f64
    }

    pub(crate) fn order(&self) -> &[usize] {
        &self.order
    }

    pub(crate) fn groups(&self) -> &[TieGroup] {
        &self.groups
    }
}

/// Fixed per-sample offsets `c` added to the linear predictor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LinearPredictor(Vec<f64>);

impl LinearPredictor {
    pub fn new(offsets: Vec<f64>) -> Result<Self> {
        if let Some(i) = offsets.iter().position(|c| !c.is_finite()) {
            return Err(invalid(format!("offset at sample {i} is not finite")));
        }
        Ok(Self(offsets))
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

/// Column-major `n × p` covariate matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignMatrix {
    nrows: usize,
    ncols: usize,
    data: Vec<f64>,
}

impl DesignMatrix {
    /// Build from column-major storage.
    pub fn from_col_major(nrows: usize, ncols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != nrows * ncols {
            return Err(dimension(format!(
                "{} values cannot fill a {nrows}x{ncols} matrix",
                data.len()
            )));
        }
        if let Some(k) = data.iter().position(|v| !v.is_finite()) {
            return Err(invalid(format!(
                "non-finite entry at row {}, column {}",
                k % nrows.max(1),
                k / nrows.max(1)
            )));
        }
        Ok(Self { nrows, ncols, data })
    }

    pub fn from_columns(columns: Vec<Vec<f64>>) -> Result<Self> {
        let nrows = columns.first().map_or(0, Vec::len);
        if let Some(j) = columns.iter().position(|c| c.len() != nrows) {
            return Err(dimension(format!("column {j} has a different length")));
        }
        let ncols = columns.len();
        Self::from_col_major(nrows, ncols, columns.concat())
    }

    /// Build from row-major storage, as produced by most text readers.
    pub fn from_row_major(nrows: usize, ncols: usize, rows: &[f64]) -> Result<Self> {
        if rows.len() != nrows * ncols {
            return Err(dimension(format!(
                "{} values cannot fill a {nrows}x{ncols} matrix",
                rows.len()
            )));
        }
        let mut data = vec![0.0; rows.len()];
        for i in 0..nrows {
            for j in 0..ncols {
                data[j * nrows + i] = rows[i * ncols + j];
            }
        }
        Self::from_col_major(nrows, ncols, data)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.data[j * self.nrows..(j + 1) * self.nrows]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[f64]> + '_ {
        (0..self.ncols).map(move |j| self.column(j))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.nrows + i]
    }

    /// Accumulate `out += scale · X·b`, skipping zero coefficients.
    pub fn gemv_acc(&self, b: &[f64], scale: f64, out: &mut [f64]) {
        debug_assert_eq!(b.len(), self.ncols);
        debug_assert_eq!(out.len(), self.nrows);
        for (col, &bj) in self.columns().zip(b) {
            if bj == 0.0 {
                continue;
            }
            let w = scale * bj;
            for (o, &x) in out.iter_mut().zip(col) {
                *o += w * x;
            }
        }
    }

    /// `X·b` as a fresh vector.
    pub fn mul_vec(&self, b: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.nrows];
        self.gemv_acc(b, 1.0, &mut out);
        out
    }
}
