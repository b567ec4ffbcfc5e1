//! Normalized componentwise maxima.
//!
//! The first step of the experiment normalizes block maxima of the raw sample with
//! a_n = 1/n, b_n = 1, i.e. m_j = n·(max_i u_{i,j} − 1), whose df tends to exp(x) on
//! x ≤ 0 under independence. [`ScaleConvention::Literal`] divides by n instead. The
//! second step divides the slice maxima by c·a_k without recentering.
//!
//! The downstream test only sees within-column ranks, so neither affine choice
//! affects it.

use serde::{Deserialize, Serialize};

use crate::copulas::NormingConstants;
use crate::error::{Error, Result};
use crate::sampling::{SampleMatrix, SliceSample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScaleConvention {
    /// n·(max − 1)
    #[default]
    Tail,
    /// (max − 1)/n
    Literal,
}

impl ScaleConvention {
    /// Maps 1 − max to the normalized value for block size n.
    pub fn apply(self, complement: f64, n: usize) -> f64 {
        match self {
            ScaleConvention::Tail => -(n as f64) * complement,
            ScaleConvention::Literal => -complement / n as f64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "norming", rename_all = "lowercase")]
pub enum Norming {
    Unconditional { convention: ScaleConvention, n: usize },
    Conditional { c: f64, a_k: f64, k: usize },
}

impl Norming {
    pub fn name(&self) -> &'static str {
        match self {
            Norming::Unconditional { convention: ScaleConvention::Tail, .. } => "unconditional-tail",
            Norming::Unconditional { convention: ScaleConvention::Literal, .. } => "unconditional-literal",
            Norming::Conditional { .. } => "conditional",
        }
    }

    pub fn block_size(&self) -> usize {
        match *self {
            Norming::Unconditional { n, .. } => n,
            Norming::Conditional { k, .. } => k,
        }
    }

    /// (scale constant c, a_n) as written in CSV headers; c = 1 for unconditional maxima.
    pub fn constants(&self) -> (f64, f64) {
        match *self {
            Norming::Unconditional { convention: ScaleConvention::Tail, n } => (1.0, 1.0 / n as f64),
            Norming::Unconditional { convention: ScaleConvention::Literal, n } => (1.0, n as f64),
            Norming::Conditional { c, a_k, .. } => (c, a_k),
        }
    }
}

/// N repetitions of an m-dimensional normalized maximum, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct MaximaSample {
    data: Vec<f64>,
    reps: usize,
    cols: usize,
    norming: Norming,
}

impl MaximaSample {
    pub fn new(data: Vec<f64>, cols: usize, norming: Norming) -> Result<Self> {
        if cols == 0 || data.is_empty() {
            return Err(Error::Empty("maxima sample has no entries".into()));
        }
        if !data.len().is_multiple_of(cols) {
            return Err(Error::DimensionMismatch { expected: cols, got: data.len() % cols });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("maxima must be finite".into()));
        }
        Ok(Self { reps: data.len() / cols, data, cols, norming })
    }

    pub fn from_rows(rows: &[Vec<f64>], norming: Norming) -> Result<Self> {
        let cols = rows.first().map(Vec::len).ok_or_else(|| Error::Empty("no repetitions".into()))?;
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch { expected: cols, got: bad.len() });
        }
        Self::new(rows.concat(), cols, norming)
    }

    pub fn reps(&self) -> usize {
        self.reps
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn norming(&self) -> Norming {
        self.norming
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.cols)
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        self.data.iter().skip(j).step_by(self.cols).copied()
    }

    /// The sub-sample made of the listed columns.
    pub fn project(&self, columns: &[usize]) -> Result<MaximaSample> {
        if let Some(&bad) = columns.iter().find(|&&c| c >= self.cols) {
            return Err(Error::InvalidParameter(format!("column {bad} out of range")));
        }
        let data = self.iter_rows().flat_map(|r| columns.iter().map(move |&c| r[c])).collect();
        MaximaSample::new(data, columns.len(), self.norming)
    }
}

/// Normalized per-column maxima of one raw sample.
pub fn componentwise_max_unconditional(s: &SampleMatrix, convention: ScaleConvention) -> Result<Vec<f64>> {
    if s.rows() == 0 {
        return Err(Error::Empty("sample has no rows".into()));
    }
    Ok((0..s.dim())
        .map(|j| {
            let max = s.column(j).fold(f64::NEG_INFINITY, f64::max);
            convention.apply(1.0 - max, s.rows())
        })
        .collect())
}

/// max_i u_{i,s}/(c·a_k) for every column of a full slice.
pub fn componentwise_max_conditional(sl: &SliceSample, nc: &NormingConstants) -> Result<Vec<f64>> {
    if sl.is_short() {
        return Err(Error::Shortfall { requested: sl.requested_k, achieved: sl.achieved_k });
    }
    if sl.achieved_k == 0 {
        return Err(Error::Empty("slice has no rows".into()));
    }
    let scale = nc.c * nc.a_n;
    let mut max = vec![f64::NEG_INFINITY; sl.cols()];
    for row in sl.iter_rows() {
        for (m, &x) in max.iter_mut().zip(row) {
            *m = m.max(x);
        }
    }
    Ok(max.into_iter().map(|m| m / scale).collect())
}
