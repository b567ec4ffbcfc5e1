//! The two-step simulation experiment.
//!
//! One outer repetition collects two maxima samples of N rows each:
//!
//! 1. unconditional: each row is the normalized componentwise maximum of a fresh
//!    Archimedean sample of size n;
//! 2. conditional: each row is the maximum, divided by c·a_k, of k observations of the
//!    remaining d − 1 coordinates whose j-th coordinate fell in [u − ε, u + ε].
//!
//! Both are tested for tail independence; M repetitions give rejection rates.
//!
//! Step 2 has two slicing modes. [`SliceMode::Window`] (the default) draws the window
//! hits directly with [`WindowSampler`], which is distributed exactly like the first k
//! hits of an endless scan. [`SliceMode::Scan`] draws n rows and keeps the first k hits,
//! retrying once on a fresh stream when fewer than k rows hit.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::copulas::{CopulaModel, NormingConstants};
use crate::error::{Error, Result};
use crate::generators::{Family, Generator};
use crate::maxima::{componentwise_max_conditional, MaximaSample, Norming, ScaleConvention};
use crate::output::{fmt_num, write_maxima, write_pickands};
use crate::pickands::{
    critical_value, estimate_pickands, run_test_with, CriticalSource, SimplexGrid, DEFAULT_REPLICATES, MIN_REPS,
};
use crate::rng::{self, tag};
use crate::sampling::{conditional_slice, sample_archimedean, Sampler, SliceSample, WindowSampler};
use crate::svg;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SliceMode {
    #[default]
    Window,
    Scan,
}

impl FromStr for SliceMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "window" => Ok(SliceMode::Window),
            "scan" => Ok(SliceMode::Scan),
            other => Err(Error::Config(format!("unknown slice mode '{other}' (expected window or scan)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CriticalKind {
    BuiltIn,
    #[default]
    MonteCarlo,
}

impl FromStr for CriticalKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "builtin" | "built-in" => Ok(CriticalKind::BuiltIn),
            "montecarlo" | "monte-carlo" | "mc" => Ok(CriticalKind::MonteCarlo),
            other => Err(Error::Config(format!("unknown critical source '{other}' (expected builtin or montecarlo)"))),
        }
    }
}

/// Named parameter sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// n = 110000, k = 1000, N = 100, M = 1000.
    #[default]
    Paper,
    /// n = 20000, k = 500, N = 100, M = 200.
    Desk,
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "paper" => Ok(Preset::Paper),
            "desk" => Ok(Preset::Desk),
            other => Err(Error::Config(format!("unknown preset '{other}' (expected paper or desk)"))),
        }
    }
}

/// Flat experiment configuration. Missing keys take the full-scale defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub family: Family,
    pub theta: f64,
    pub d: usize,
    /// Raw sample size per block.
    pub n: usize,
    pub u: f64,
    #[serde(alias = "epsilon")]
    pub eps: f64,
    pub k: usize,
    /// Conditioned coordinate, 1-based. Defaults to d.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub j: Option<usize>,
    /// N, maxima per sample.
    #[serde(alias = "N")]
    pub reps: usize,
    /// M, outer repetitions.
    #[serde(alias = "M")]
    pub outer: usize,
    pub alpha: f64,
    pub seed: u64,
    pub critical: CriticalKind,
    /// Null replicates for Monte Carlo critical values.
    pub replicates: usize,
    pub slice_mode: SliceMode,
    pub scale_convention: ScaleConvention,
    /// Worker threads. Never serialized: results do not depend on it.
    #[serde(skip_serializing)]
    pub threads: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            family: Family::GumbelHougaard,
            theta: 3.0,
            d: 3,
            n: 110_000,
            u: 0.99,
            eps: 0.0005,
            k: 1000,
            j: None,
            reps: 100,
            outer: 1000,
            alpha: 0.05,
            seed: crate::DEFAULT_SEED,
            critical: CriticalKind::MonteCarlo,
            replicates: DEFAULT_REPLICATES,
            slice_mode: SliceMode::Window,
            scale_convention: ScaleConvention::Tail,
            threads: None,
        }
    }
}

impl ExperimentConfig {
    pub fn preset(p: Preset) -> Self {
        let mut c = Self::default();
        c.apply_preset(p);
        c
    }

    pub fn paper() -> Self {
        Self::preset(Preset::Paper)
    }

    pub fn desk() -> Self {
        Self::preset(Preset::Desk)
    }

    /// Overwrites the sizes (n, k, N, M) with those of a preset, keeping the model.
    pub fn apply_preset(&mut self, p: Preset) {
        let (n, k, reps, outer) = match p {
            Preset::Paper => (110_000, 1000, 100, 1000),
            Preset::Desk => (20_000, 500, 100, 200),
        };
        self.n = n;
        self.k = k;
        self.reps = reps;
        self.outer = outer;
    }

    pub fn with_model(mut self, family: Family, theta: f64, d: usize) -> Self {
        self.family = family;
        self.theta = theta;
        self.d = d;
        self
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("bad experiment config: {e}")))
    }

    /// Zero-based conditioned coordinate.
    pub fn conditioned_index(&self) -> usize {
        self.j.unwrap_or(self.d).saturating_sub(1)
    }

    pub fn critical_source(&self) -> CriticalSource {
        match self.critical {
            CriticalKind::BuiltIn => CriticalSource::BuiltIn,
            CriticalKind::MonteCarlo => CriticalSource::MonteCarlo { replicates: self.replicates, seed: self.seed },
        }
    }

    pub fn model(&self) -> Result<CopulaModel> {
        CopulaModel::archimedean(Generator::new(self.family, self.theta)?, self.d)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !self.family.is_samplable() {
            return bad(format!("the {} generator has no sampler", self.family));
        }
        Generator::new(self.family, self.theta)?;
        if self.d < 3 {
            return bad(format!("d must be >= 3 so that the conditional sample has two coordinates, got {}", self.d));
        }
        if self.n == 0 || self.k == 0 || self.outer == 0 {
            return bad("n, k and M must all be positive".into());
        }
        if self.reps < MIN_REPS {
            return bad(format!("N must be at least {MIN_REPS}, got {}", self.reps));
        }
        if !(self.u > 0.0 && self.u < 1.0) {
            return bad(format!("u must lie in (0, 1), got {}", self.u));
        }
        if !(self.eps > 0.0 && self.eps < self.u.min(1.0 - self.u)) {
            return bad(format!("epsilon must lie in (0, min(u, 1 - u)), got {}", self.eps));
        }
        if let Some(j) = self.j {
            if j == 0 || j > self.d {
                return bad(format!("j must lie in 1..={}, got {j}", self.d));
            }
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        if self.critical == CriticalKind::MonteCarlo && self.replicates == 0 {
            return bad("Monte Carlo critical values need replicates >= 1".into());
        }
        if self.slice_mode == SliceMode::Scan && self.k > self.n {
            return bad(format!("scan slicing needs k <= n, got k = {} and n = {}", self.k, self.n));
        }
        if self.threads == Some(0) {
            return bad("threads must be >= 1".into());
        }
        Ok(())
    }
}

/// Runs `f` on a dedicated pool with the requested number of workers, or on the global pool.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::Config(format!("cannot start {t} worker threads: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

// (dim, reps, alpha bits, Monte Carlo (replicates, seed))
type CriticalKey = (usize, usize, u64, Option<(usize, u64)>);

/// Critical values keyed by everything they depend on.
#[derive(Debug, Clone, Default)]
pub struct CriticalCache {
    values: HashMap<CriticalKey, f64>,
}

impl CriticalCache {
    pub fn get(&mut self, dim: usize, reps: usize, alpha: f64, source: &CriticalSource, grid: &SimplexGrid) -> Result<f64> {
        let src = match *source {
            CriticalSource::BuiltIn => None,
            CriticalSource::MonteCarlo { replicates, seed } => Some((replicates, seed)),
        };
        let key = (dim, reps, alpha.to_bits(), src);
        if let Some(&v) = self.values.get(&key) {
            return Ok(v);
        }
        let v = critical_value(dim, alpha, source, reps, grid)?;
        self.values.insert(key, v);
        Ok(v)
    }
}

/// Outcome of one outer repetition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub rep: usize,
    pub s_unconditional: f64,
    pub reject_unconditional: bool,
    /// Missing when a slice stayed short after its retry.
    pub s_conditional: Option<f64>,
    pub reject_conditional: Option<bool>,
    pub shortfall: bool,
    /// Slices that needed a retry.
    pub retries: usize,
}

/// The two maxima samples of one repetition.
#[derive(Debug, Clone)]
pub struct RunMaxima {
    pub unconditional: MaximaSample,
    pub conditional: Option<MaximaSample>,
    pub retries: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub seed: u64,
    pub critical_source: CriticalSource,
    pub critical_unconditional: f64,
    pub critical_conditional: f64,
    pub norming: NormingConstants,
    /// Percent of the M runs rejecting on the unconditional maxima.
    pub rejection_rate_unconditional: f64,
    /// Percent of the runs with a conditional statistic that reject on it.
    pub rejection_rate_conditional: f64,
    pub conditional_runs: usize,
    pub shortfall_count: usize,
    pub runs: Vec<RunResult>,
    /// Excluded from serialization so reports stay a function of (config, seed).
    #[serde(skip)]
    pub wall_time: Duration,
}

impl ExperimentReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn write_runs_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        w.write_record([
            "rep",
            "s_unconditional",
            "reject_unconditional",
            "s_conditional",
            "reject_conditional",
            "shortfall",
            "retries",
        ])?;
        for r in &self.runs {
            w.write_record([
                r.rep.to_string(),
                fmt_num(r.s_unconditional),
                r.reject_unconditional.to_string(),
                r.s_conditional.map(fmt_num).unwrap_or_else(|| "NA".into()),
                r.reject_conditional.map(|b| b.to_string()).unwrap_or_else(|| "NA".into()),
                r.shortfall.to_string(),
                r.retries.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn summary(&self) -> String {
        let c = &self.config;
        let mut s = String::new();
        let _ = writeln!(s, "model: {} theta={} d={} j={}", c.family, c.theta, c.d, c.conditioned_index() + 1);
        let _ = writeln!(
            s,
            "sizes: n={} k={} N={} M={} u={} eps={} alpha={} seed={}",
            c.n, c.k, c.reps, c.outer, c.u, c.eps, c.alpha, self.seed
        );
        let _ = writeln!(s, "slice mode: {:?}", c.slice_mode);
        let _ = writeln!(
            s,
            "critical values: d={} -> {:.4}, d={} -> {:.4} ({})",
            c.d,
            self.critical_unconditional,
            c.d - 1,
            self.critical_conditional,
            match self.critical_source {
                CriticalSource::BuiltIn => "built-in".to_string(),
                CriticalSource::MonteCarlo { replicates, .. } => format!("Monte Carlo, R={replicates}"),
            }
        );
        let _ = writeln!(s, "rejection rate unconditional: {:.3}%", self.rejection_rate_unconditional);
        let _ = writeln!(
            s,
            "rejection rate conditional:   {:.3}% ({} runs with a conditional statistic)",
            self.rejection_rate_conditional, self.conditional_runs
        );
        let _ = writeln!(s, "shortfalls: {}", self.shortfall_count);
        s
    }

    /// Writes report.json, runs.csv and summary.txt under `dir`.
    pub fn write_to_dir(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let paths = [dir.join("report.json"), dir.join("runs.csv"), dir.join("summary.txt")];
        fs::write(&paths[0], self.to_json()?)?;
        self.write_runs_csv(fs::File::create(&paths[1])?)?;
        fs::write(&paths[2], self.summary())?;
        Ok(paths.to_vec())
    }
}

/// A validated configuration with its samplers, grids and critical values ready.
#[derive(Debug, Clone)]
pub struct Experiment {
    config: ExperimentConfig,
    sampler: Sampler,
    model: CopulaModel,
    window: WindowSampler,
    norming: NormingConstants,
    grid_full: SimplexGrid,
    grid_cond: SimplexGrid,
    source: CriticalSource,
    /// (d, d − 1) critical values; absent until calibrated.
    critical: Option<(f64, f64)>,
}

impl Experiment {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        Self::with_cache(config, &mut CriticalCache::default())
    }

    pub fn with_cache(config: ExperimentConfig, cache: &mut CriticalCache) -> Result<Self> {
        let mut e = Self::prepare(config)?;
        let c = &e.config;
        let critical = with_threads(c.threads, || -> Result<(f64, f64)> {
            Ok((
                cache.get(c.d, c.reps, c.alpha, &e.source, &e.grid_full)?,
                cache.get(c.d - 1, c.reps, c.alpha, &e.source, &e.grid_cond)?,
            ))
        })??;
        e.critical = Some(critical);
        Ok(e)
    }

    /// Validates and builds the samplers without calibrating critical values, which is
    /// all [`Experiment::maxima`] needs.
    pub fn prepare(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let model = config.model()?;
        let j = config.conditioned_index();
        let sampler = Sampler::new(&model)?;
        let window = WindowSampler::new(&model, j, config.u, config.eps)?;
        let norming = model.norming_constants(config.u, j, config.k as u64)?;
        let grid_full = SimplexGrid::default_for(config.d)?;
        let grid_cond = SimplexGrid::default_for(config.d - 1)?;
        let source = config.critical_source();
        Ok(Self { config, sampler, model, window, norming, grid_full, grid_cond, source, critical: None })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn norming(&self) -> &NormingConstants {
        &self.norming
    }

    /// (d, d − 1) critical values, once calibrated.
    pub fn critical_values(&self) -> Option<(f64, f64)> {
        self.critical
    }

    fn scan_slice(&self, seed: u64) -> Result<SliceSample> {
        let c = &self.config;
        let s = sample_archimedean(&self.model, c.n, seed)?;
        conditional_slice(&s, c.conditioned_index(), c.u, c.eps, c.k)
    }

    /// Both maxima samples of outer repetition `rep`.
    pub fn maxima(&self, rep: usize) -> Result<RunMaxima> {
        let c = &self.config;
        let (seed, r) = (c.seed, rep as u64);
        let d = c.d;
        let unconditional = unconditional_maxima(&self.sampler, c.n, c.reps, c.scale_convention, seed, rep)?;

        let nc = &self.norming;
        let mut cond = Vec::with_capacity(c.reps * (d - 1));
        let mut retries = 0;
        let mut complete = true;
        for i in 0..c.reps as u64 {
            let path = [tag::EXPERIMENT, r, tag::STEP_CONDITIONAL, i];
            let slice = match c.slice_mode {
                SliceMode::Window => self.window.draw_slice(c.k, &mut rng::stream(seed, &path)),
                SliceMode::Scan => {
                    let first = self.scan_slice(rng::derive_seed(seed, &path))?;
                    if first.is_short() {
                        retries += 1;
                        let retry = [tag::EXPERIMENT, r, tag::STEP_CONDITIONAL, i, tag::RETRY];
                        self.scan_slice(rng::derive_seed(seed, &retry))?
                    } else {
                        first
                    }
                }
            };
            if slice.is_short() {
                complete = false;
                break;
            }
            cond.extend(componentwise_max_conditional(&slice, nc)?);
        }
        let conditional = if complete {
            Some(MaximaSample::new(cond, d - 1, Norming::Conditional { c: nc.c, a_k: nc.a_n, k: c.k })?)
        } else {
            None
        };
        Ok(RunMaxima { unconditional, conditional, retries })
    }

    /// Outer repetition `rep`: both maxima samples and both tests.
    pub fn run_single(&self, rep: usize) -> Result<RunResult> {
        let (critical_full, critical_cond) =
            self.critical.ok_or_else(|| Error::Config("critical values have not been calibrated".into()))?;
        let m = self.maxima(rep)?;
        let alpha = self.config.alpha;
        let full = run_test_with(&m.unconditional, alpha, &self.grid_full, critical_full, self.source)?;
        let cond = match &m.conditional {
            Some(mx) => Some(run_test_with(mx, alpha, &self.grid_cond, critical_cond, self.source)?),
            None => None,
        };
        Ok(RunResult {
            rep,
            s_unconditional: full.statistic,
            reject_unconditional: full.reject,
            s_conditional: cond.as_ref().map(|t| t.statistic),
            reject_conditional: cond.as_ref().map(|t| t.reject),
            shortfall: cond.is_none(),
            retries: m.retries,
        })
    }

    /// All M repetitions, in parallel over repetitions.
    pub fn run(&self) -> Result<ExperimentReport> {
        let start = Instant::now();
        let (critical_unconditional, critical_conditional) =
            self.critical.ok_or_else(|| Error::Config("critical values have not been calibrated".into()))?;
        let runs = with_threads(self.config.threads, || {
            (0..self.config.outer).into_par_iter().map(|r| self.run_single(r)).collect::<Result<Vec<_>>>()
        })??;
        let m = runs.len() as f64;
        let rejects_full = runs.iter().filter(|r| r.reject_unconditional).count();
        let conditional_runs = runs.iter().filter(|r| r.s_conditional.is_some()).count();
        let rejects_cond = runs.iter().filter(|r| r.reject_conditional == Some(true)).count();
        let rate = |k: usize, of: f64| if of > 0.0 { 100.0 * k as f64 / of } else { 0.0 };
        Ok(ExperimentReport {
            config: self.config.clone(),
            seed: self.config.seed,
            critical_source: self.source,
            critical_unconditional,
            critical_conditional,
            norming: self.norming,
            rejection_rate_unconditional: rate(rejects_full, m),
            rejection_rate_conditional: rate(rejects_cond, conditional_runs as f64),
            conditional_runs,
            shortfall_count: runs.iter().filter(|r| r.shortfall).count(),
            runs,
            wall_time: start.elapsed(),
        })
    }
}

/// N normalized unconditional maxima of `n`-row samples for outer repetition `rep`.
///
/// Block i of repetition r is the sample drawn under the seed derived from
/// (seed, r, step 1, i), so the maxima match [`sample_archimedean`] with that seed.
pub fn unconditional_maxima(
    sampler: &Sampler,
    n: usize,
    reps: usize,
    convention: ScaleConvention,
    seed: u64,
    rep: usize,
) -> Result<MaximaSample> {
    if n == 0 || reps == 0 {
        return Err(Error::InvalidParameter("block size and repetitions must be positive".into()));
    }
    let mut data = Vec::with_capacity(reps * sampler.dim());
    for i in 0..reps as u64 {
        let block_seed = rng::derive_seed(seed, &[tag::EXPERIMENT, rep as u64, tag::STEP_UNCONDITIONAL, i]);
        data.extend(sampler.max_complements(n, block_seed).into_iter().map(|x| convention.apply(x, n)));
    }
    MaximaSample::new(data, sampler.dim(), Norming::Unconditional { convention, n })
}

/// Validates, prepares and runs one configuration.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    Experiment::new(config.clone())?.run()
}

/// One cell of the rejection-rate table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableCell {
    pub d: usize,
    pub theta: f64,
    pub report: Option<ExperimentReport>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableReport {
    pub dims: Vec<usize>,
    pub thetas: Vec<f64>,
    /// Row-major over (d, ϑ).
    pub cells: Vec<TableCell>,
}

pub const TABLE_DIMS: [usize; 3] = [3, 4, 5];
pub const TABLE_THETAS: [f64; 5] = [2.0, 3.0, 4.0, 5.0, 6.0];

/// Runs `base` for every (d, ϑ). Each cell keeps the base seed, so a cell reproduces
/// the single experiment with the same parameters. Failures stay in their cell.
pub fn run_table(base: &ExperimentConfig, dims: &[usize], thetas: &[f64]) -> TableReport {
    let mut cache = CriticalCache::default();
    let mut cells = Vec::with_capacity(dims.len() * thetas.len());
    for &d in dims {
        for &theta in thetas {
            let cfg = base.clone().with_model(base.family, theta, d);
            let outcome = Experiment::with_cache(cfg, &mut cache).and_then(|e| e.run());
            let (report, error) = match outcome {
                Ok(r) => (Some(r), None),
                Err(e) => (None, Some(e.to_string())),
            };
            cells.push(TableCell { d, theta, report, error });
        }
    }
    TableReport { dims: dims.to_vec(), thetas: thetas.to_vec(), cells }
}

impl TableReport {
    pub fn cell(&self, d: usize, theta: f64) -> Option<&TableCell> {
        self.cells.iter().find(|c| c.d == d && c.theta == theta)
    }

    /// Conditional rejection rates as a table: one row per d, one
    /// column per ϑ, `NA` for failed cells.
    pub fn write_table1_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        let mut header = vec!["d".to_string()];
        header.extend(self.thetas.iter().map(|t| format!("theta_{t}")));
        w.write_record(&header)?;
        for &d in &self.dims {
            let mut rec = vec![d.to_string()];
            for &t in &self.thetas {
                rec.push(match self.cell(d, t).and_then(|c| c.report.as_ref()) {
                    Some(r) => fmt_num(r.rejection_rate_conditional),
                    None => "NA".into(),
                });
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Long format with both rates and any cell error.
    pub fn write_cells_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        w.write_record(["d", "theta", "rate_conditional", "rate_unconditional", "shortfall_count", "error"])?;
        for c in &self.cells {
            let (rc, ru, sf) = match &c.report {
                Some(r) => (
                    fmt_num(r.rejection_rate_conditional),
                    fmt_num(r.rejection_rate_unconditional),
                    r.shortfall_count.to_string(),
                ),
                None => ("NA".into(), "NA".into(), "NA".into()),
            };
            w.write_record([c.d.to_string(), c.theta.to_string(), rc, ru, sf, c.error.clone().unwrap_or_default()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Writes table1.csv, table1_cells.csv and table1.json under `dir`.
    pub fn write_to_dir(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let paths = [dir.join("table1.csv"), dir.join("table1_cells.csv"), dir.join("table1.json")];
        self.write_table1_csv(fs::File::create(&paths[0])?)?;
        self.write_cells_csv(fs::File::create(&paths[1])?)?;
        fs::write(&paths[2], serde_json::to_string_pretty(self)? + "\n")?;
        Ok(paths.to_vec())
    }
}

/// Data behind the six panels of the maxima figure, from outer repetition 0.
///
/// Panels, row by row: (1) unconditional maxima, (2) their Pickands estimate,
/// (3) maxima of a coordinate pair, (4) its Pickands curve, (5) conditional maxima,
/// (6) their Pickands estimate.
#[derive(Debug, Clone)]
pub struct FigureBundle {
    pub pair: (usize, usize),
    pub unconditional: MaximaSample,
    pub pair_maxima: MaximaSample,
    pub conditional: MaximaSample,
    pub grid_full: SimplexGrid,
    pub grid_pair: SimplexGrid,
    pub grid_cond: SimplexGrid,
    pub pickands_full: Vec<f64>,
    pub pickands_pair: Vec<f64>,
    pub pickands_cond: Vec<f64>,
}

/// `pair` holds zero-based coordinates of the unconditional maxima.
pub fn figure_data(config: &ExperimentConfig, pair: (usize, usize)) -> Result<FigureBundle> {
    config.validate()?;
    if pair.0 == pair.1 || pair.0 >= config.d || pair.1 >= config.d {
        return Err(Error::Config(format!("pair {:?} must name two distinct coordinates below d = {}", pair, config.d)));
    }
    let exp = Experiment::prepare(config.clone())?;
    let m = with_threads(config.threads, || exp.maxima(0))??;
    let conditional = m.conditional.ok_or(Error::Shortfall { requested: config.k, achieved: 0 })?;
    let pair_maxima = m.unconditional.project(&[pair.0, pair.1])?;
    let grid_full = SimplexGrid::default_for(config.d)?;
    let grid_pair = SimplexGrid::default_for(2)?;
    let grid_cond = SimplexGrid::default_for(config.d - 1)?;
    Ok(FigureBundle {
        pair,
        pickands_full: estimate_pickands(&m.unconditional, &grid_full)?,
        pickands_pair: estimate_pickands(&pair_maxima, &grid_pair)?,
        pickands_cond: estimate_pickands(&conditional, &grid_cond)?,
        unconditional: m.unconditional,
        pair_maxima,
        conditional,
        grid_full,
        grid_pair,
        grid_cond,
    })
}

fn maxima_svg(title: &str, mx: &MaximaSample) -> String {
    let col = |j: usize| mx.column(j).collect::<Vec<_>>();
    if mx.cols() >= 3 {
        svg::cloud(title, &col(0), &col(1), &col(2))
    } else {
        svg::scatter(title, &col(0), &col(1))
    }
}

fn pickands_svg(title: &str, grid: &SimplexGrid, a: &[f64]) -> String {
    match grid.dim() {
        2 => {
            let t: Vec<f64> = grid.points().map(|p| p[0]).collect();
            svg::pickands_curve(title, &t, a)
        }
        3 => {
            let pts: Vec<[f64; 3]> = grid.points().map(|p| [p[0], p[1], p[2]]).collect();
            svg::pickands_ternary(title, &pts, a)
        }
        _ => {
            let tmax: Vec<f64> = grid.points().map(|p| p.iter().copied().fold(0.0, f64::max)).collect();
            svg::scatter(title, &tmax, a)
        }
    }
}

impl FigureBundle {
    /// Writes fig1_panel{1..6}.csv and fig1_panel{1..6}.svg under `dir`.
    pub fn write_to_dir(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let (a, b) = (self.pair.0 + 1, self.pair.1 + 1);
        let mut paths = Vec::new();
        let mut emit = |panel: usize, csv_bytes: Vec<u8>, svg_text: String| -> Result<()> {
            let csv_path = dir.join(format!("fig1_panel{panel}.csv"));
            let svg_path = dir.join(format!("fig1_panel{panel}.svg"));
            fs::write(&csv_path, csv_bytes)?;
            fs::write(&svg_path, svg_text)?;
            paths.push(csv_path);
            paths.push(svg_path);
            Ok(())
        };
        let maxima_csv = |mx: &MaximaSample| -> Result<Vec<u8>> {
            let mut buf = Vec::new();
            write_maxima(&mut buf, mx)?;
            Ok(buf)
        };
        let pickands_csv = |g: &SimplexGrid, est: &[f64]| -> Result<Vec<u8>> {
            let mut buf = Vec::new();
            write_pickands(&mut buf, g, est)?;
            Ok(buf)
        };
        emit(1, maxima_csv(&self.unconditional)?, maxima_svg("unconditional maxima", &self.unconditional))?;
        emit(
            2,
            pickands_csv(&self.grid_full, &self.pickands_full)?,
            pickands_svg("Pickands estimate, unconditional", &self.grid_full, &self.pickands_full),
        )?;
        emit(3, maxima_csv(&self.pair_maxima)?, maxima_svg(&format!("maxima of m{a}, m{b}"), &self.pair_maxima))?;
        emit(
            4,
            pickands_csv(&self.grid_pair, &self.pickands_pair)?,
            pickands_svg(&format!("Pickands estimate, m{a} and m{b}"), &self.grid_pair, &self.pickands_pair),
        )?;
        emit(5, maxima_csv(&self.conditional)?, maxima_svg("conditional maxima", &self.conditional))?;
        emit(
            6,
            pickands_csv(&self.grid_cond, &self.pickands_cond)?,
            pickands_svg("Pickands estimate, conditional", &self.grid_cond, &self.pickands_cond),
        )?;
        Ok(paths)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        ExperimentConfig {
            n: 2000,
            k: 50,
            u: 0.9,
            eps: 0.01,
            reps: 30,
            outer: 4,
            replicates: 50,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn defaults_and_presets() {
        let c = ExperimentConfig::default();
        assert_eq!((c.n, c.u, c.eps, c.k, c.reps, c.outer, c.alpha), (110_000, 0.99, 0.0005, 1000, 100, 1000, 0.05));
        assert_eq!(c.conditioned_index(), 2);
        let d = ExperimentConfig::desk();
        assert_eq!((d.n, d.k, d.reps, d.outer), (20_000, 500, 100, 200));
        assert!(c.validate().is_ok() && d.validate().is_ok());
    }

    #[test]
    fn validation() {
        let bad = [
            ExperimentConfig { eps: 0.02, u: 0.99, ..small() },
            ExperimentConfig { d: 2, ..small() },
            ExperimentConfig { j: Some(4), ..small() },
            ExperimentConfig { reps: 5, ..small() },
            ExperimentConfig { outer: 0, ..small() },
            ExperimentConfig { alpha: 1.0, ..small() },
            ExperimentConfig { theta: 0.5, ..small() },
            ExperimentConfig { family: Family::Logistic, ..small() },
            ExperimentConfig { slice_mode: SliceMode::Scan, k: 5000, ..small() },
        ];
        for c in bad {
            assert!(c.validate().is_err(), "{c:?}");
        }
    }

    #[test]
    fn json_round_trip_and_aliases() {
        let c = small();
        let text = serde_json::to_string(&c).unwrap();
        assert!(!text.contains("threads"));
        assert_eq!(ExperimentConfig::from_json(&text).unwrap(), c);
        let a = ExperimentConfig::from_json(r#"{"family":"clayton","theta":2,"N":40,"M":7,"epsilon":0.001}"#).unwrap();
        assert_eq!((a.family, a.reps, a.outer, a.eps), (Family::Clayton, 40, 7, 0.001));
        assert!(ExperimentConfig::from_json(r#"{"bogus":1}"#).is_err());
    }

    #[test]
    fn unconditional_maxima_match_full_samples() {
        let m = small().model().unwrap();
        let sampler = Sampler::new(&m).unwrap();
        let mx = unconditional_maxima(&sampler, 3000, 20, ScaleConvention::Tail, 7, 2).unwrap();
        for i in 0..3u64 {
            let seed = rng::derive_seed(7, &[tag::EXPERIMENT, 2, tag::STEP_UNCONDITIONAL, i]);
            let s = sample_archimedean(&m, 3000, seed).unwrap();
            let want = crate::maxima::componentwise_max_unconditional(&s, ScaleConvention::Tail).unwrap();
            let got = &mx.data()[3 * i as usize..3 * (i as usize + 1)];
            for (g, w) in got.iter().zip(&want) {
                assert!((g - w).abs() <= 1e-9 * w.abs().max(1.0), "{g} vs {w}");
            }
        }
    }

    #[test]
    fn prepared_experiment_needs_calibration_to_test() {
        let e = Experiment::prepare(small()).unwrap();
        assert!(e.critical_values().is_none());
        assert!(e.maxima(0).is_ok());
        assert!(matches!(e.run_single(0), Err(Error::Config(_))));
    }

    #[test]
    fn run_single_is_deterministic() {
        let e = Experiment::new(small()).unwrap();
        let a = e.run_single(1).unwrap();
        let b = e.run_single(1).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, e.run_single(2).unwrap());
        assert_eq!(a.rep, 1);
    }

    #[test]
    fn report_is_independent_of_thread_count() {
        let one = run_experiment(&ExperimentConfig { threads: Some(1), ..small() }).unwrap();
        let three = run_experiment(&ExperimentConfig { threads: Some(3), ..small() }).unwrap();
        assert_eq!(one.to_json().unwrap(), three.to_json().unwrap());
        let (mut x, mut y) = (Vec::new(), Vec::new());
        one.write_runs_csv(&mut x).unwrap();
        three.write_runs_csv(&mut y).unwrap();
        assert_eq!(x, y);
        assert!((0.0..=100.0).contains(&one.rejection_rate_conditional));
        assert_eq!(one.runs.len(), 4);
    }

    #[test]
    fn scan_mode_reports_shortfalls() {
        // Expected hits per block: 2000 · 0.0002 = 0.4, far below k.
        let c = ExperimentConfig { slice_mode: SliceMode::Scan, eps: 0.0001, outer: 2, ..small() };
        let r = run_experiment(&c).unwrap();
        assert_eq!(r.shortfall_count, 2);
        assert_eq!(r.conditional_runs, 0);
        assert!(r.runs.iter().all(|x| x.retries == 1 && x.s_conditional.is_none()));

        let ok = run_experiment(&ExperimentConfig { slice_mode: SliceMode::Scan, n: 10_000, outer: 2, ..small() }).unwrap();
        assert_eq!(ok.shortfall_count, 0);
    }

    #[test]
    fn table_isolates_failures() {
        let base = ExperimentConfig { outer: 2, ..small() };
        let t = run_table(&base, &[3], &[0.5, 2.0]);
        assert!(t.cell(3, 0.5).unwrap().error.is_some());
        assert!(t.cell(3, 2.0).unwrap().report.is_some());
        let mut buf = Vec::new();
        t.write_table1_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("d,theta_0.5,theta_2\n3,NA,"));
    }

    #[test]
    fn figure_shapes() {
        let f = figure_data(&ExperimentConfig { theta: 4.0, ..small() }, (0, 1)).unwrap();
        assert_eq!((f.unconditional.reps(), f.unconditional.cols()), (30, 3));
        assert_eq!(f.pair_maxima.cols(), 2);
        assert_eq!(f.conditional.cols(), 2);
        assert_eq!(f.pickands_pair.len(), f.grid_pair.len());
        let dir = tempfile::tempdir().unwrap();
        let paths = f.write_to_dir(dir.path()).unwrap();
        assert_eq!(paths.len(), 12);
        assert!(figure_data(&small(), (1, 1)).is_err());
    }
}
