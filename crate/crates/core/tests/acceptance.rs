//! End-to-end acceptance checks. Each test prints one PASS/FAIL line straight to the
//! process stdout, so the lines show up even when the harness captures output.

mod common;

use std::io::Write;
use std::sync::OnceLock;

use tailcond::experiment::{run_experiment, unconditional_maxima, with_threads, ExperimentReport};
use tailcond::pickands::{critical_value, estimate_pickands, test_statistic, DEFAULT_REPLICATES};
use tailcond::sampling::{sample_archimedean, Sampler};
use tailcond::stats::{binomial_acceptance, kendall_tau};
use tailcond::{
    CopulaModel, CriticalSource, DNorm, ExperimentConfig, Family, Generator, ScaleConvention, SimplexGrid,
    DEFAULT_SEED,
};

use common::{archimax, oracle_models, partial, point, rel_err, rng};

fn report(criterion: u32, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout().lock();
    writeln!(out, "acceptance criterion {criterion:>2}: {verdict}  {detail}").unwrap();
    out.flush().unwrap();
}

// ---------------------------------------------------------------------------------------
// Experiments shared by criteria 1, 2 and 10.

const TABLE_CELLS: [(usize, f64); 3] = [(3, 2.0), (3, 3.0), (4, 3.0)];

fn cell_config(d: usize, theta: f64, threads: usize) -> ExperimentConfig {
    let mut c = ExperimentConfig::desk().with_model(Family::GumbelHougaard, theta, d);
    c.replicates = DEFAULT_REPLICATES;
    c.threads = Some(threads);
    c
}

fn contrast_config(threads: usize) -> ExperimentConfig {
    let mut c = cell_config(3, 3.0, threads);
    c.outer = 100;
    c
}

fn run_on(config: &ExperimentConfig) -> ExperimentReport {
    with_threads(config.threads, || run_experiment(config)).unwrap().unwrap()
}

fn table_reports(threads: usize) -> Vec<ExperimentReport> {
    TABLE_CELLS.iter().map(|&(d, t)| run_on(&cell_config(d, t, threads))).collect()
}

fn table_single_thread() -> &'static [ExperimentReport] {
    static CELLS: OnceLock<Vec<ExperimentReport>> = OnceLock::new();
    CELLS.get_or_init(|| table_reports(1))
}

fn contrast_single_thread() -> &'static ExperimentReport {
    static RUN: OnceLock<ExperimentReport> = OnceLock::new();
    RUN.get_or_init(|| run_on(&contrast_config(1)))
}

#[test]
fn criterion_01_table_cells_at_desk_scale() {
    let reports = table_single_thread();
    let mut pass = true;
    let mut parts = Vec::new();
    for (&(d, theta), r) in TABLE_CELLS.iter().zip(reports) {
        let (lo, hi) = binomial_acceptance(r.conditional_runs as u64, 0.05, 0.99);
        let rejects = r.runs.iter().filter(|x| x.reject_conditional == Some(true)).count() as u64;
        let ok = r.conditional_runs == r.config.outer && (lo..=hi).contains(&rejects);
        pass &= ok;
        parts.push(format!(
            "d={d} theta={theta}: {:.1}% ({rejects}/{} in [{lo}, {hi}]), unconditional {:.1}%",
            r.rejection_rate_conditional, r.conditional_runs, r.rejection_rate_unconditional
        ));
    }
    report(1, pass, &parts.join("; "));
    assert!(pass);
}

#[test]
fn criterion_02_two_statistic_contrast() {
    let r = contrast_single_thread();
    let both = r
        .runs
        .iter()
        .filter(|x| {
            x.s_unconditional > r.critical_unconditional
                && x.s_conditional.is_some_and(|s| s < r.critical_conditional)
        })
        .count();
    let pass = both >= 95;
    report(
        2,
        pass,
        &format!(
            "{both}/100 desk runs (n=20000) with S_unc > {:.3} and S_cond < {:.3}",
            r.critical_unconditional, r.critical_conditional
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_10_reports_do_not_depend_on_thread_count() {
    let mut same = Vec::new();
    for (&(d, t), a) in TABLE_CELLS.iter().zip(table_single_thread()) {
        let b = run_on(&cell_config(d, t, 2));
        same.push((format!("cell d={d} theta={t}"), a.to_json().unwrap() == b.to_json().unwrap()));
    }
    let b = run_on(&contrast_config(2));
    same.push(("contrast".to_string(), contrast_single_thread().to_json().unwrap() == b.to_json().unwrap()));
    let pass = same.iter().all(|(_, s)| *s);
    let detail: Vec<String> =
        same.iter().map(|(n, s)| format!("{n} {}", if *s { "identical" } else { "differs" })).collect();
    report(10, pass, &format!("1 vs 2 threads: {}", detail.join(", ")));
    assert!(pass);
}

// ---------------------------------------------------------------------------------------
// Analytic checks.

#[test]
fn criterion_03_conditional_df_matches_finite_differences() {
    let mut r = rng(303);
    let mut worst: f64 = 0.0;
    let mut models = 0;
    for m in oracle_models() {
        models += 1;
        let d = m.dim();
        for i in 0..200 {
            let j = i % d;
            let x = point(&mut r, d, 0.5, 0.995);
            let v: Vec<f64> = x.iter().enumerate().filter(|(k, _)| *k != j).map(|(_, &a)| a).collect();
            let exact = m.conditional_cdf(j, x[j], &v).unwrap();
            let fd = partial(&|y: &[f64]| m.cdf(y).unwrap(), &x, j, m.lower_valid()[j]);
            worst = worst.max(rel_err(fd, exact));
        }
    }
    let pass = worst < 1e-5;
    report(3, pass, &format!("{models} models x 200 points, max rel err {worst:.2e} (tol 1e-5)"));
    assert!(pass);
}

#[test]
fn criterion_04_conditional_limit() {
    let grid = [1e6];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, g) in [("gumbel 3", Generator::gumbel(3.0)), ("clayton 2", Generator::clayton(2.0))] {
        let m = CopulaModel::archimedean(g.unwrap(), 3).unwrap();
        let row = m.conditional_limit_probe(0.99, 2, &[-1.0, -1.0], &grid).unwrap()[0];
        let ok = (row.value - 2.0).abs() <= 0.05 * 2.0 && row.target == 2.0;
        pass &= ok;
        parts.push(format!("{name}: {:.4}", row.value));
    }
    report(4, pass, &format!("n=1e6, target 2 within 5%: {}", parts.join(", ")));
    assert!(pass);
}

#[test]
fn criterion_05_domain_of_attraction() {
    let x3 = [-1.0, -0.5, -2.0];
    let cases: Vec<(&str, CopulaModel)> = vec![
        ("gumbel 3 sum", CopulaModel::archimedean(Generator::gumbel(3.0).unwrap(), 3).unwrap()),
        ("clayton 2 sum", CopulaModel::archimedean(Generator::clayton(2.0).unwrap(), 3).unwrap()),
        ("frank 5 sum", CopulaModel::archimedean(Generator::frank(5.0).unwrap(), 3).unwrap()),
        ("gumbel 2 sup", archimax(Generator::gumbel(2.0).unwrap(), DNorm::sup(3).unwrap())),
        ("gumbel 2 logistic 3", archimax(Generator::gumbel(2.0).unwrap(), DNorm::logistic(3.0, 3).unwrap())),
        ("clayton 1 logistic 2", archimax(Generator::clayton(1.0).unwrap(), DNorm::logistic(2.0, 3).unwrap())),
    ];
    let mut worst: f64 = 0.0;
    for (name, m) in &cases {
        let row = m.doa_convergence_probe(&x3, &[1e6]).unwrap()[0];
        assert!(row.target > 0.0, "{name}");
        worst = worst.max(row.rel_error);
    }
    let pass = worst <= 0.005;
    report(5, pass, &format!("{} models at n=1e6, max rel err {worst:.2e} (tol 5e-3)", cases.len()));
    assert!(pass);
}

#[test]
fn criterion_06_logistic_archimax_reduces_to_archimedean() {
    let a = archimax(Generator::gumbel(2.0).unwrap(), DNorm::logistic(3.0, 3).unwrap());
    let b = CopulaModel::archimedean(Generator::gumbel(6.0).unwrap(), 3).unwrap();
    let mut r = rng(606);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let x = point(&mut r, 3, 0.5, 1.0);
        worst = worst.max((a.cdf(&x).unwrap() - b.cdf(&x).unwrap()).abs());
    }
    let pass = worst <= 1e-12;
    report(6, pass, &format!("1000 points, max abs diff {worst:.2e} (tol 1e-12)"));
    assert!(pass);
}

#[test]
fn criterion_07_sampler_goodness_of_fit() {
    let n = 100_000;
    let mut r = rng(707);
    let mut misses = Vec::new();
    let mut worst_z: f64 = 0.0;
    for (name, g) in [("gumbel 2", Generator::gumbel(2.0)), ("clayton 2", Generator::clayton(2.0)), ("frank 5", Generator::frank(5.0))] {
        let m = CopulaModel::archimedean(g.unwrap(), 3).unwrap();
        let s = sample_archimedean(&m, n, 77).unwrap();
        for _ in 0..20 {
            let probe = point(&mut r, 3, 0.5, 0.99);
            let p = m.cdf(&probe).unwrap();
            let hits = s.iter_rows().filter(|row| row.iter().zip(&probe).all(|(x, q)| x <= q)).count();
            let z = (hits as f64 / n as f64 - p).abs() / (p * (1.0 - p) / n as f64).sqrt();
            worst_z = worst_z.max(z);
            if z > 3.0 {
                misses.push(format!("{name} at {probe:?}"));
            }
        }
    }
    let mut taus = Vec::new();
    for theta in [2.0, 3.0, 4.0] {
        let m = CopulaModel::archimedean(Generator::gumbel(theta).unwrap(), 2).unwrap();
        let s = sample_archimedean(&m, n, 78).unwrap();
        let x: Vec<f64> = s.column(0).collect();
        let y: Vec<f64> = s.column(1).collect();
        let tau = kendall_tau(&x, &y);
        if (tau - (1.0 - 1.0 / theta)).abs() > 0.01 {
            misses.push(format!("gumbel {theta} tau {tau:.4}"));
        }
        taus.push(format!("{tau:.4}"));
    }
    let pass = misses.is_empty();
    report(
        7,
        pass,
        &format!(
            "60 probes at n=1e5, max |z| {worst_z:.2} (tol 3); gumbel tau {} vs 0.5000, 0.6667, 0.7500{}",
            taus.join(", "),
            if pass { String::new() } else { format!("; misses: {}", misses.join(", ")) }
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_08_null_size() {
    let runs = 400;
    let reps = 100;
    let source = CriticalSource::MonteCarlo { replicates: DEFAULT_REPLICATES, seed: DEFAULT_SEED };
    let mut pass = true;
    let mut parts = Vec::new();
    for d in [2usize, 3] {
        let grid = SimplexGrid::default_for(d).unwrap();
        let crit = critical_value(d, 0.05, &source, reps, &grid).unwrap();
        let m = CopulaModel::archimedean(Generator::gumbel(1.0).unwrap(), d).unwrap();
        let sampler = Sampler::new(&m).unwrap();
        // Seeds disjoint from the calibration streams.
        let rejects = (0..runs)
            .filter(|&rep| {
                let mx = unconditional_maxima(&sampler, 200, reps, ScaleConvention::Tail, 808, rep).unwrap();
                test_statistic(&estimate_pickands(&mx, &grid).unwrap(), reps) > crit
            })
            .count();
        let rate = 100.0 * rejects as f64 / runs as f64;
        let ok = (2.5..=8.0).contains(&rate);
        pass &= ok;
        parts.push(format!("d={d}: {rate:.2}% (critical {crit:.4})"));
    }
    report(8, pass, &format!("400 independence runs, N=100, band [2.5%, 8%]: {}", parts.join(", ")));
    assert!(pass);
}

#[test]
fn criterion_09_sup_norm_is_comonotone() {
    let mut r = rng(909);
    let mut exact = 0;
    for g in [Generator::gumbel(2.0).unwrap(), Generator::clayton(1.5).unwrap()] {
        let m = archimax(g, DNorm::sup(3).unwrap());
        for _ in 0..1000 {
            let x = point(&mut r, 3, 0.5, 1.0);
            exact += (m.cdf(&x).unwrap() == x.iter().cloned().fold(1.0, f64::min)) as usize;
        }
    }
    let pass = exact == 2000;
    report(9, pass, &format!("{exact}/2000 points with C(u) == min(u) exactly"));
    assert!(pass);
}
