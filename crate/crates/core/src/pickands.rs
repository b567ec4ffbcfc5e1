//! Rank-based Pickands dependence function estimation and the sup-distance test of
//! asymptotic tail independence.
//!
//! The estimator is the multivariate Capéraà–Fougères–Genest construction applied to
//! block maxima: each column is mapped to the standard exponential scale through its
//! ranks, Y_{r,s} = −log(R_{r,s}/(N+1)), and
//!
//!   log Â(t) = −(1/N) Σ_r log min_s (Y_{r,s}/t_s) + Σ_s t_s (1/N) Σ_r log Y_{r,s},
//!
//! which is the CFG estimator with the endpoint correction that forces Â(e_s) = 1 (the
//! Euler constant cancels). The result is clipped into [max_s t_s, 1].
//!
//! The test statistic is S = √N · max_t |Â(t) − 1| over a simplex grid. Under the null
//! hypothesis of independent tails the columns of the maxima are independent, so null
//! quantiles can be simulated from independent uniforms: the estimator only sees ranks.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maxima::MaximaSample;
use crate::rng::{self, tag};
use crate::stats::{ranks, upper_quantile};

/// Fewest repetitions the estimator accepts.
pub const MIN_REPS: usize = 20;

/// Replicates used for Monte Carlo critical values unless told otherwise.
pub const DEFAULT_REPLICATES: usize = 2000;

/// Regular grid on the unit simplex S_d with step 1/divisions. Vertices are always included.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexGrid {
    dim: usize,
    divisions: usize,
    points: Vec<f64>,
}

/// Compact description of a grid for reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridInfo {
    pub dim: usize,
    pub mesh: f64,
    pub points: usize,
}

impl SimplexGrid {
    pub fn new(dim: usize, mesh: f64) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidParameter(format!("simplex dimension must be >= 2, got {dim}")));
        }
        if !(mesh > 0.0 && mesh <= 1.0) {
            return Err(Error::InvalidParameter(format!("mesh must lie in (0, 1], got {mesh}")));
        }
        let divisions = (1.0 / mesh).round() as usize;
        if ((divisions as f64) * mesh - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!("mesh {mesh} does not divide 1")));
        }
        let mut points = Vec::new();
        let mut current = vec![0usize; dim];
        compositions(divisions, 0, &mut current, &mut |c| {
            points.extend(c.iter().map(|&k| k as f64 / divisions as f64));
        });
        Ok(Self { dim, divisions, points })
    }

    /// Default resolution: 0.01 for d = 2, 0.025 for d = 3, 0.05 for d = 4, 0.1 for d = 5
    /// and 0.2 beyond.
    pub fn default_for(dim: usize) -> Result<Self> {
        let mesh = match dim {
            2 => 0.01,
            3 => 0.025,
            4 => 0.05,
            5 => 0.1,
            _ => 0.2,
        };
        Self::new(dim, mesh)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mesh(&self) -> f64 {
        1.0 / self.divisions as f64
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks_exact(self.dim)
    }

    pub fn info(&self) -> GridInfo {
        GridInfo { dim: self.dim, mesh: self.mesh(), points: self.len() }
    }

    /// Builds a grid from explicit weight vectors (each must lie on the simplex).
    pub fn from_points(dim: usize, pts: &[Vec<f64>]) -> Result<Self> {
        if dim < 2 || pts.is_empty() {
            return Err(Error::InvalidParameter("a grid needs dim >= 2 and at least one point".into()));
        }
        for p in pts {
            if p.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: p.len() });
            }
            let sum: f64 = p.iter().sum();
            if p.iter().any(|&x| x < 0.0) || (sum - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidParameter(format!("{p:?} is not on the unit simplex")));
            }
        }
        Ok(Self { dim, divisions: 0, points: pts.concat() })
    }
}

fn compositions(remaining: usize, pos: usize, current: &mut [usize], emit: &mut dyn FnMut(&[usize])) {
    if pos + 1 == current.len() {
        current[pos] = remaining;
        emit(current);
        return;
    }
    for k in (0..=remaining).rev() {
        current[pos] = k;
        compositions(remaining - k, pos + 1, current, emit);
    }
}

/// Column-wise log of the exponential-scale pseudo-observations, row-major.
fn log_exponential_scores(data: &[f64], reps: usize, cols: usize) -> Result<Vec<f64>> {
    let mut out = vec![0.0; data.len()];
    let denom = reps as f64 + 1.0;
    for c in 0..cols {
        let column: Vec<f64> = data.iter().skip(c).step_by(cols).copied().collect();
        if column.iter().all(|&v| v == column[0]) {
            return Err(Error::Degenerate(format!("column {c} is constant across repetitions")));
        }
        for (r, rank) in ranks(&column).into_iter().enumerate() {
            out[r * cols + c] = (-(rank / denom).ln()).ln();
        }
    }
    Ok(out)
}

fn estimate_from_scores(log_y: &[f64], reps: usize, cols: usize, grid: &SimplexGrid) -> Vec<f64> {
    let mean_log_y: Vec<f64> =
        (0..cols).map(|c| log_y.iter().skip(c).step_by(cols).sum::<f64>() / reps as f64).collect();
    let mut log_t = vec![0.0; cols];
    grid.points()
        .map(|t| {
            let upper = t.iter().cloned().fold(0.0, f64::max);
            if upper == 1.0 {
                return 1.0;
            }
            for (lt, &ts) in log_t.iter_mut().zip(t) {
                *lt = if ts > 0.0 { ts.ln() } else { f64::NAN };
            }
            let mut total = 0.0;
            for row in log_y.chunks_exact(cols) {
                let mut m = f64::INFINITY;
                for ((&ly, &lt), &ts) in row.iter().zip(&log_t).zip(t) {
                    if ts > 0.0 {
                        let v = ly - lt;
                        if v < m {
                            m = v;
                        }
                    }
                }
                total += m;
            }
            let center: f64 = t.iter().zip(&mean_log_y).map(|(ts, my)| ts * my).sum();
            let a = (center - total / reps as f64).exp();
            a.clamp(upper, 1.0)
        })
        .collect()
}

/// Â(t) at every grid point.
pub fn estimate_pickands(mx: &MaximaSample, grid: &SimplexGrid) -> Result<Vec<f64>> {
    if mx.cols() < 2 {
        return Err(Error::InvalidParameter("the estimator needs at least two coordinates".into()));
    }
    if grid.dim() != mx.cols() {
        return Err(Error::DimensionMismatch { expected: mx.cols(), got: grid.dim() });
    }
    if mx.reps() < MIN_REPS {
        return Err(Error::InvalidParameter(format!(
            "the estimator needs at least {MIN_REPS} repetitions, got {}",
            mx.reps()
        )));
    }
    let log_y = log_exponential_scores(mx.data(), mx.reps(), mx.cols())?;
    Ok(estimate_from_scores(&log_y, mx.reps(), mx.cols(), grid))
}

/// √N · max_t |Â(t) − 1|.
pub fn test_statistic(estimate: &[f64], reps: usize) -> f64 {
    let dev = estimate.iter().fold(0.0f64, |m, a| m.max((a - 1.0).abs()));
    (reps as f64).sqrt() * dev
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CriticalSource {
    /// Tabulated 0.95-quantiles for d = 2 and d = 3.
    BuiltIn,
    /// Empirical quantile of simulated null statistics.
    MonteCarlo { replicates: usize, seed: u64 },
}

impl CriticalSource {
    pub fn monte_carlo(seed: u64) -> Self {
        CriticalSource::MonteCarlo { replicates: DEFAULT_REPLICATES, seed }
    }
}

const BUILTIN: [(usize, f64, f64); 2] = [(2, 0.05, 0.960), (3, 0.05, 1.300)];

pub fn builtin_critical_value(dim: usize, alpha: f64) -> Result<f64> {
    BUILTIN
        .iter()
        .find(|(d, a, _)| *d == dim && (a - alpha).abs() < 1e-12)
        .map(|(_, _, q)| *q)
        .ok_or(Error::UnavailableBuiltin { dim, alpha })
}

/// Null statistics for `replicates` independent N × dim samples, in replicate order.
pub fn null_statistics(dim: usize, reps: usize, grid: &SimplexGrid, replicates: usize, seed: u64) -> Result<Vec<f64>> {
    if grid.dim() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: grid.dim() });
    }
    if reps < MIN_REPS {
        return Err(Error::InvalidParameter(format!("null samples need at least {MIN_REPS} repetitions")));
    }
    Ok((0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng::stream(seed, &[tag::CALIBRATION, dim as u64, reps as u64, r as u64]);
            let data: Vec<f64> = (0..reps * dim).map(|_| rng.random::<f64>()).collect();
            let log_y = log_exponential_scores(&data, reps, dim).expect("uniform columns are not constant");
            test_statistic(&estimate_from_scores(&log_y, reps, dim, grid), reps)
        })
        .collect())
}

/// The (1 − α)-quantile of the null distribution of the statistic.
pub fn critical_value(dim: usize, alpha: f64, source: &CriticalSource, reps: usize, grid: &SimplexGrid) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    match *source {
        CriticalSource::BuiltIn => builtin_critical_value(dim, alpha),
        CriticalSource::MonteCarlo { replicates, seed } => {
            if replicates == 0 {
                return Err(Error::InvalidParameter("Monte Carlo calibration needs replicates".into()));
            }
            let stats = null_statistics(dim, reps, grid, replicates, seed)?;
            Ok(upper_quantile(&stats, 1.0 - alpha))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailTestResult {
    pub statistic: f64,
    pub critical_value: f64,
    pub alpha: f64,
    pub reject: bool,
    pub reps: usize,
    pub grid: GridInfo,
    pub critical_source: CriticalSource,
}

/// Estimates Â on the default grid for the sample's dimension and tests A ≡ 1.
pub fn run_test(mx: &MaximaSample, alpha: f64, source: &CriticalSource) -> Result<TailTestResult> {
    let grid = SimplexGrid::default_for(mx.cols())?;
    let critical = critical_value(mx.cols(), alpha, source, mx.reps(), &grid)?;
    run_test_with(mx, alpha, &grid, critical, *source)
}

/// As [`run_test`], with a precomputed critical value.
pub fn run_test_with(
    mx: &MaximaSample,
    alpha: f64,
    grid: &SimplexGrid,
    critical_value: f64,
    critical_source: CriticalSource,
) -> Result<TailTestResult> {
    let est = estimate_pickands(mx, grid)?;
    let statistic = test_statistic(&est, mx.reps());
    Ok(TailTestResult {
        statistic,
        critical_value,
        alpha,
        reject: statistic > critical_value,
        reps: mx.reps(),
        grid: grid.info(),
        critical_source,
    })
}
