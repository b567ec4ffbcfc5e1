//! The `tailcond` command line.
//!
//! Every verb validates its options before computing anything. Results go to stdout,
//! or to fixed file names under `--out DIR`. Exit codes: 0 on success, 2 on usage or
//! configuration errors, 1 on data errors.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::copulas::{decade_grid, CopulaModel};
use crate::dnorms::DNorm;
use crate::error::{Error, Result};
use crate::experiment::{
    figure_data, run_table, unconditional_maxima, with_threads, CriticalKind, Experiment, ExperimentConfig, Preset,
    SliceMode, TABLE_DIMS, TABLE_THETAS,
};
use crate::generators::{condition_report, default_s_grid, inverse_tail_probe, tail_index_probe, Family, Generator};
use crate::maxima::{MaximaSample, Norming, ScaleConvention};
use crate::output::{fmt_num, read_maxima_columns, write_maxima, write_pickands, write_probe, write_sample, write_slice};
use crate::pickands::{
    critical_value, estimate_pickands, run_test_with, CriticalSource, SimplexGrid, DEFAULT_REPLICATES,
};
use crate::sampling::{conditional_slice, sample_archimedean, Sampler};
use crate::svg;

#[derive(Debug, Parser)]
#[command(name = "tailcond", version, about = "Archimedean copulas, conditional maxima and tail-independence tests")]
pub struct Cli {
    /// Random seed; every run with the same flags and seed is byte-identical.
    /// Defaults to the config file's seed, then to the built-in one.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (a hint; results do not depend on it).
    #[arg(long, global = true, env = "TAILCOND_THREADS")]
    pub threads: Option<usize>,
    /// JSON experiment configuration (experiment and figure verbs).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory for output files; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

impl Cli {
    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(crate::DEFAULT_SEED)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NormArg {
    Sum,
    Sup,
    Logistic,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long)]
    pub family: Family,
    #[arg(long)]
    pub theta: f64,
    /// D-norm combining the generator values.
    #[arg(long, value_enum, default_value_t = NormArg::Sum)]
    pub norm: NormArg,
    /// Exponent of the logistic D-norm.
    #[arg(long)]
    pub q: Option<f64>,
}

impl ModelArgs {
    fn model(&self, dim: usize) -> Result<CopulaModel> {
        let g = Generator::new(self.family, self.theta)?;
        let dnorm = match (self.norm, self.q) {
            (NormArg::Sum, None) => DNorm::sum(dim)?,
            (NormArg::Sup, None) => DNorm::sup(dim)?,
            (NormArg::Logistic, Some(q)) => DNorm::logistic(q, dim)?,
            (NormArg::Logistic, None) => return Err(Error::Config("--norm logistic needs --q".into())),
            (_, Some(_)) => return Err(Error::Config("--q only applies to --norm logistic".into())),
        };
        CopulaModel::archimax(g, dnorm)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProbeKind {
    /// φ(1 − sx)/φ(1 − s) → x^p
    #[value(name = "C0")]
    C0,
    /// (1 − φ⁻¹(sx))/(1 − φ⁻¹(s)) → x^{1/p}
    Inverse,
    /// Limits of the tail conditions, as JSON.
    Conditions,
    /// n·(1 − C(1 + x/n)) → ‖(|x_i|^p)‖_D^{1/p}
    Doa,
    /// n·(1 − H_{j,u}(1 + c·a_n·x)) → Σ(−x_i)^p
    Limit,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// Size preset for n, k, N and M.
    #[arg(long)]
    pub preset: Option<Preset>,
    /// Overrides the preset's sizes (e.g. `--preset paper --scale desk`).
    #[arg(long)]
    pub scale: Option<Preset>,
    #[arg(long)]
    pub family: Option<Family>,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub u: Option<f64>,
    #[arg(long, alias = "epsilon")]
    pub eps: Option<f64>,
    #[arg(long)]
    pub k: Option<usize>,
    /// Conditioned coordinate, 1-based.
    #[arg(long)]
    pub j: Option<usize>,
    /// N, maxima per sample.
    #[arg(long)]
    pub reps: Option<usize>,
    /// M, outer repetitions.
    #[arg(long)]
    pub outer: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub critical: Option<CriticalKind>,
    #[arg(long)]
    pub replicates: Option<usize>,
    #[arg(long)]
    pub slice_mode: Option<SliceMode>,
    /// Normalize unconditional maxima as (max − 1)/n instead of n·(max − 1).
    #[arg(long)]
    pub literal: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate the copula df at one point.
    Eval {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        u: Vec<f64>,
    },
    /// Evaluate the conditional df of the other coordinates given U_j = u.
    Conditional {
        #[command(flatten)]
        model: ModelArgs,
        /// Conditioning level.
        #[arg(long)]
        u: f64,
        /// Values of the other d − 1 coordinates.
        #[arg(long, value_delimiter = ',', required = true)]
        v: Vec<f64>,
        /// Conditioned coordinate, 1-based; defaults to d.
        #[arg(long)]
        j: Option<usize>,
        /// Also print the norming constants for block size n.
        #[arg(long)]
        n: Option<u64>,
    },
    /// Tail-limit probes.
    Probe {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_enum)]
        kind: ProbeKind,
        /// Probe point: a scalar for C0 and inverse, a nonpositive vector otherwise.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        x: Vec<f64>,
        /// Conditioning level for the limit probe.
        #[arg(long, default_value_t = 0.99)]
        u: f64,
        /// Conditioned coordinate (1-based) for the limit probe; defaults to d.
        #[arg(long)]
        j: Option<usize>,
        /// The n grid runs over 10, 100, …, 10^max_exp.
        #[arg(long, default_value_t = 6)]
        max_exp: i32,
    },
    /// Draw an Archimedean sample, or its conditional slice.
    Sample {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        n: usize,
        /// Keep only rows with u_j in [u − eps, u + eps] (first k of them).
        #[arg(long)]
        slice: bool,
        #[arg(long)]
        j: Option<usize>,
        #[arg(long, default_value_t = 0.99)]
        u: f64,
        #[arg(long, default_value_t = 0.0005)]
        eps: f64,
        #[arg(long, default_value_t = 1000)]
        k: usize,
    },
    /// Normalized componentwise maxima (unconditional, or conditional with --conditional).
    Maxima {
        #[command(flatten)]
        exp: ExperimentArgs,
        #[arg(long)]
        conditional: bool,
        /// Outer repetition index whose streams are used.
        #[arg(long, default_value_t = 0)]
        rep: usize,
    },
    /// Estimate the Pickands dependence function from a maxima CSV.
    Pickands {
        #[arg(long)]
        input: PathBuf,
        /// Grid mesh; defaults by dimension.
        #[arg(long)]
        mesh: Option<f64>,
    },
    /// Test tail independence on a maxima CSV.
    Test {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, default_value = "builtin")]
        critical: CriticalKind,
        #[arg(long, default_value_t = DEFAULT_REPLICATES)]
        replicates: usize,
    },
    /// Run the two-step experiment, or the whole rejection-rate table with --table.
    Experiment {
        #[command(flatten)]
        exp: ExperimentArgs,
        #[arg(long)]
        table: bool,
        /// Print the JSON report instead of the summary.
        #[arg(long)]
        json: bool,
    },
    /// Write the six maxima/Pickands panels as CSV and SVG.
    Figure {
        #[command(flatten)]
        exp: ExperimentArgs,
        /// Coordinate pair (1-based) for the projected panels.
        #[arg(long, value_delimiter = ',', default_values_t = [1usize, 2])]
        pair: Vec<usize>,
    },
    /// Monte Carlo critical values of the test statistic.
    Calibrate {
        #[arg(long, value_delimiter = ',', default_values_t = [2usize, 3])]
        d: Vec<usize>,
        #[arg(long, default_value_t = 100)]
        reps: usize,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, default_value_t = DEFAULT_REPLICATES)]
        replicates: usize,
    },
}

/// Parses `args` (including the program name) and runs the verb.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { stdout.write_all(text.as_bytes()) } else { stderr.write_all(text.as_bytes()) };
            return code;
        }
    };
    match dispatch(&cli, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            match e {
                Error::Config(_) => 2,
                _ => 1,
            }
        }
    }
}

fn dispatch(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    if cli.threads == Some(0) {
        return Err(Error::Config("--threads must be >= 1".into()));
    }
    // Collect output in memory so the dispatcher itself stays on one thread.
    let mut buf = Vec::new();
    let mut notes = Vec::new();
    with_threads(cli.threads, || execute(cli, &mut buf, &mut notes))??;
    stdout.write_all(&buf)?;
    stderr.write_all(&notes)?;
    Ok(())
}

fn out_file(cli: &Cli, name: &str) -> Result<Option<PathBuf>> {
    match &cli.out {
        None => Ok(None),
        Some(dir) => {
            fs::create_dir_all(dir)?;
            Ok(Some(dir.join(name)))
        }
    }
}

/// Writes `bytes` to `--out/name`, or to stdout.
fn emit(cli: &Cli, name: &str, bytes: &[u8], stdout: &mut Vec<u8>) -> Result<()> {
    match out_file(cli, name)? {
        Some(p) => fs::write(p, bytes)?,
        None => stdout.extend_from_slice(bytes),
    }
    Ok(())
}

fn check_index(j: Option<usize>, d: usize) -> Result<usize> {
    let j = j.unwrap_or(d);
    if j == 0 || j > d {
        return Err(Error::Config(format!("--j must lie in 1..={d}, got {j}")));
    }
    Ok(j - 1)
}

fn build_config(cli: &Cli, a: &ExperimentArgs) -> Result<ExperimentConfig> {
    let mut c = match &cli.config {
        Some(path) => ExperimentConfig::from_json(
            &fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?,
        )?,
        None => ExperimentConfig::default(),
    };
    if cli.config.is_none() || a.preset.is_some() {
        c.apply_preset(a.preset.unwrap_or_default());
    }
    if let Some(s) = a.scale {
        c.apply_preset(s);
    }
    macro_rules! set {
        ($($field:ident),*) => { $(if let Some(v) = a.$field { c.$field = v; })* };
    }
    set!(family, theta, d, n, u, eps, k, reps, outer, alpha, critical, replicates, slice_mode);
    if a.j.is_some() {
        c.j = a.j;
    }
    if a.literal {
        c.scale_convention = ScaleConvention::Literal;
    }
    if let Some(seed) = cli.seed {
        c.seed = seed;
    }
    c.threads = cli.threads;
    c.validate()?;
    Ok(c)
}

fn execute(cli: &Cli, out: &mut Vec<u8>, notes: &mut Vec<u8>) -> Result<()> {
    match &cli.command {
        Command::Eval { model, u } => {
            let m = model.model(u.len())?;
            writeln!(out, "{}", fmt_num(m.cdf(u)?))?;
        }
        Command::Conditional { model, u, v, j, n } => {
            let d = v.len() + 1;
            let j = check_index(*j, d)?;
            let m = model.model(d)?;
            let h = m.conditional_cdf(j, *u, v)?;
            writeln!(out, "{}", fmt_num(h))?;
            if let Some(n) = n {
                let nc = m.norming_constants(*u, j, *n)?;
                writeln!(out, "c={} a_n={}", fmt_num(nc.c), fmt_num(nc.a_n))?;
            }
        }
        Command::Probe { model, kind, x, u, j, max_exp } => probe(cli, model, *kind, x, *u, *j, *max_exp, out)?,
        Command::Sample { model, d, n, slice, j, u, eps, k } => {
            let j = check_index(*j, *d)?;
            if *n == 0 {
                return Err(Error::Config("--n must be >= 1".into()));
            }
            let m = model.model(*d)?;
            Sampler::new(&m)?;
            let s = sample_archimedean(&m, *n, cli.seed())?;
            let mut buf = Vec::new();
            if *slice {
                let sl = conditional_slice(&s, j, *u, *eps, *k)?;
                if sl.is_short() {
                    writeln!(notes, "warning: only {} of {} rows fell in the window", sl.achieved_k, sl.requested_k)?;
                }
                write_slice(&mut buf, &sl)?;
                emit(cli, "slice.csv", &buf, out)?;
            } else {
                write_sample(&mut buf, &s)?;
                emit(cli, "sample.csv", &buf, out)?;
            }
        }
        Command::Maxima { exp, conditional, rep } => {
            let c = build_config(cli, exp)?;
            let mx = if *conditional {
                let e = Experiment::prepare(c.clone())?;
                e.maxima(*rep)?
                    .conditional
                    .ok_or(Error::Shortfall { requested: c.k, achieved: 0 })?
            } else {
                let sampler = Sampler::new(&c.model()?)?;
                unconditional_maxima(&sampler, c.n, c.reps, c.scale_convention, c.seed, *rep)?
            };
            let mut buf = Vec::new();
            write_maxima(&mut buf, &mx)?;
            emit(cli, "maxima.csv", &buf, out)?;
        }
        Command::Pickands { input, mesh } => {
            let mx = read_maxima(input)?;
            let grid = match mesh {
                Some(h) => SimplexGrid::new(mx.cols(), *h)?,
                None => SimplexGrid::default_for(mx.cols())?,
            };
            let est = estimate_pickands(&mx, &grid)?;
            let mut buf = Vec::new();
            write_pickands(&mut buf, &grid, &est)?;
            emit(cli, "pickands.csv", &buf, out)?;
            if let Some(p) = out_file(cli, "pickands.svg")? {
                if grid.dim() == 2 {
                    let t: Vec<f64> = grid.points().map(|p| p[0]).collect();
                    fs::write(p, svg::pickands_curve("Pickands estimate", &t, &est))?;
                } else if grid.dim() == 3 {
                    let pts: Vec<[f64; 3]> = grid.points().map(|p| [p[0], p[1], p[2]]).collect();
                    fs::write(p, svg::pickands_ternary("Pickands estimate", &pts, &est))?;
                }
            }
        }
        Command::Test { input, alpha, critical, replicates } => {
            if !(*alpha > 0.0 && *alpha < 1.0) {
                return Err(Error::Config(format!("--alpha must lie in (0, 1), got {alpha}")));
            }
            let mx = read_maxima(input)?;
            let source = match critical {
                CriticalKind::BuiltIn => CriticalSource::BuiltIn,
                CriticalKind::MonteCarlo => CriticalSource::MonteCarlo { replicates: *replicates, seed: cli.seed() },
            };
            let grid = SimplexGrid::default_for(mx.cols())?;
            let cv = critical_value(mx.cols(), *alpha, &source, mx.reps(), &grid)?;
            let res = run_test_with(&mx, *alpha, &grid, cv, source)?;
            emit(cli, "test.json", (serde_json::to_string_pretty(&res)? + "\n").as_bytes(), out)?;
        }
        Command::Experiment { exp, table, json } => {
            let c = build_config(cli, exp)?;
            if *table {
                let t = run_table(&c, &TABLE_DIMS, &TABLE_THETAS);
                match &cli.out {
                    Some(dir) => {
                        t.write_to_dir(dir)?;
                    }
                    None => t.write_table1_csv(&mut *out)?,
                }
                for cell in t.cells.iter().filter(|c| c.error.is_some()) {
                    writeln!(notes, "cell d={} theta={} failed: {}", cell.d, cell.theta, cell.error.as_deref().unwrap_or(""))?;
                }
            } else {
                let report = Experiment::new(c)?.run()?;
                if let Some(dir) = &cli.out {
                    report.write_to_dir(dir)?;
                }
                if *json {
                    out.extend_from_slice(report.to_json()?.as_bytes());
                } else {
                    out.extend_from_slice(report.summary().as_bytes());
                }
                writeln!(notes, "wall time: {:.1}s", report.wall_time.as_secs_f64())?;
            }
        }
        Command::Figure { exp, pair } => {
            let mut c = build_config(cli, exp)?;
            if exp.theta.is_none() && cli.config.is_none() {
                // Figure default.
                c.theta = 4.0;
            }
            let &[a, b] = pair.as_slice() else {
                return Err(Error::Config("--pair needs exactly two coordinates".into()));
            };
            if a == 0 || b == 0 || a > c.d || b > c.d || a == b {
                return Err(Error::Config(format!("--pair must name two distinct coordinates in 1..={}", c.d)));
            }
            let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("."));
            let bundle = figure_data(&c, (a - 1, b - 1))?;
            for p in bundle.write_to_dir(&dir)? {
                writeln!(out, "{}", p.display())?;
            }
        }
        Command::Calibrate { d, reps, alpha, replicates } => {
            if !(*alpha > 0.0 && *alpha < 1.0) || *replicates == 0 {
                return Err(Error::Config("--alpha must lie in (0, 1) and --replicates must be positive".into()));
            }
            if let Some(bad) = d.iter().find(|&&x| x < 2) {
                return Err(Error::Config(format!("dimensions must be >= 2, got {bad}")));
            }
            let source = CriticalSource::MonteCarlo { replicates: *replicates, seed: cli.seed() };
            let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
            w.write_record(["d", "reps", "alpha", "replicates", "critical_value", "builtin"])?;
            for &dim in d {
                let grid = SimplexGrid::default_for(dim)?;
                let cv = critical_value(dim, *alpha, &source, *reps, &grid)?;
                let builtin = crate::pickands::builtin_critical_value(dim, *alpha).map(fmt_num).unwrap_or_else(|_| "NA".into());
                w.write_record([dim.to_string(), reps.to_string(), alpha.to_string(), replicates.to_string(), fmt_num(cv), builtin])?;
            }
            let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
            emit(cli, "critical_values.csv", &bytes, out)?;
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn probe(
    cli: &Cli,
    model: &ModelArgs,
    kind: ProbeKind,
    x: &[f64],
    u: f64,
    j: Option<usize>,
    max_exp: i32,
    out: &mut Vec<u8>,
) -> Result<()> {
    let g = Generator::new(model.family, model.theta)?;
    let scalar = || -> Result<f64> {
        match x {
            [v] => Ok(*v),
            _ => Err(Error::Config("this probe needs a single --x value".into())),
        }
    };
    let vector = || -> Result<&[f64]> {
        if x.is_empty() {
            Err(Error::Config("this probe needs --x".into()))
        } else {
            Ok(x)
        }
    };
    if !(1..=15).contains(&max_exp) {
        return Err(Error::Config(format!("--max-exp must lie in 1..=15, got {max_exp}")));
    }
    let s_rows = |values: Vec<f64>| -> Result<Vec<u8>> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
        w.write_record(["s", "value"])?;
        for (s, v) in default_s_grid().into_iter().zip(values) {
            w.write_record([fmt_num(s), fmt_num(v)])?;
        }
        w.into_inner().map_err(|e| Error::Io(e.to_string()))
    };
    let bytes = match kind {
        ProbeKind::C0 => s_rows(tail_index_probe(&g, scalar()?, &default_s_grid())?)?,
        ProbeKind::Inverse => s_rows(inverse_tail_probe(&g, scalar()?, &default_s_grid())?)?,
        ProbeKind::Conditions => (serde_json::to_string_pretty(&condition_report(&g))? + "\n").into_bytes(),
        ProbeKind::Doa => {
            let x = vector()?;
            let rows = model.model(x.len())?.doa_convergence_probe(x, &decade_grid(max_exp))?;
            let mut buf = Vec::new();
            write_probe(&mut buf, &rows)?;
            buf
        }
        ProbeKind::Limit => {
            let x = vector()?;
            let d = x.len() + 1;
            let j = check_index(j, d)?;
            let rows = model.model(d)?.conditional_limit_probe(u, j, x, &decade_grid(max_exp))?;
            let mut buf = Vec::new();
            write_probe(&mut buf, &rows)?;
            buf
        }
    };
    let name = if kind == ProbeKind::Conditions { "conditions.json" } else { "probe.csv" };
    emit(cli, name, &bytes, out)
}

fn read_maxima(path: &Path) -> Result<MaximaSample> {
    let file = fs::File::open(path).map_err(|e| Error::Io(format!("cannot open {}: {e}", path.display())))?;
    let (data, cols) = read_maxima_columns(file)?;
    // The norming does not enter the rank-based estimator.
    MaximaSample::new(data, cols, Norming::Unconditional { convention: ScaleConvention::Tail, n: 1 })
}

/// Convenience wrapper for `main`.
pub fn main_with_args(args: impl IntoIterator<Item = OsString>) -> i32 {
    let mut stdout = std::io::stdout().lock();
    let mut stderr = std::io::stderr().lock();
    run(args, &mut stdout, &mut stderr)
}
