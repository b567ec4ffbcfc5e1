mod common;

use tailcond::sampling::{conditional_slice, sample_archimedean, WindowSampler};
use tailcond::stats::kendall_tau;
use tailcond::{CopulaModel, DNorm, Generator};

use common::{archimax, point, rng};

// Share of rows with every coordinate below the probe.
fn frequency<'a>(rows: impl Iterator<Item = &'a [f64]>, probe: &[f64]) -> (f64, usize) {
    let (mut hits, mut n) = (0usize, 0usize);
    for r in rows {
        n += 1;
        hits += r.iter().zip(probe).all(|(x, p)| x <= p) as usize;
    }
    (hits as f64 / n as f64, n)
}

fn within_three_se(freq: f64, p: f64, n: usize) -> bool {
    let se = (p * (1.0 - p) / n as f64).sqrt();
    (freq - p).abs() <= 3.0 * se.max(0.5 / n as f64)
}

#[test]
fn empirical_frequencies_match_the_cdf() {
    let mut r = rng(21);
    for g in [Generator::gumbel(2.0), Generator::clayton(2.0), Generator::frank(5.0)] {
        let m = CopulaModel::archimedean(g.unwrap(), 3).unwrap();
        let s = sample_archimedean(&m, 20_000, 7).unwrap();
        for _ in 0..10 {
            let probe = point(&mut r, 3, 0.5, 0.99);
            let p = m.cdf(&probe).unwrap();
            let (f, n) = frequency(s.iter_rows(), &probe);
            assert!(within_three_se(f, p, n), "{:?} at {probe:?}: {f} vs {p}", m.generator());
        }
    }
}

#[test]
fn logistic_archimax_is_sampled_through_its_reduction() {
    let m = archimax(Generator::gumbel(1.5).unwrap(), DNorm::logistic(2.0, 2).unwrap());
    let s = sample_archimedean(&m, 20_000, 8).unwrap();
    let x: Vec<f64> = s.column(0).collect();
    let y: Vec<f64> = s.column(1).collect();
    // Gumbel with ϑ = 3 has τ = 2/3.
    assert!((kendall_tau(&x, &y) - 2.0 / 3.0).abs() < 0.02);
}

#[test]
fn clayton_tau() {
    let m = CopulaModel::archimedean(Generator::clayton(2.0).unwrap(), 2).unwrap();
    let s = sample_archimedean(&m, 20_000, 9).unwrap();
    let x: Vec<f64> = s.column(0).collect();
    let y: Vec<f64> = s.column(1).collect();
    assert!((kendall_tau(&x, &y) - 0.5).abs() < 0.02);
}

#[test]
fn sup_norm_has_no_sampler() {
    let m = archimax(Generator::gumbel(2.0).unwrap(), DNorm::sup(3).unwrap());
    assert!(sample_archimedean(&m, 10, 1).is_err());
}

#[test]
fn samples_depend_only_on_the_seed() {
    let m = CopulaModel::archimedean(Generator::gumbel(3.0).unwrap(), 3).unwrap();
    let a = sample_archimedean(&m, 5_000, 42).unwrap();
    let b = sample_archimedean(&m, 5_000, 42).unwrap();
    let c = sample_archimedean(&m, 5_000, 43).unwrap();
    assert_eq!(a.data(), b.data());
    assert_ne!(a.data(), c.data());
    // A longer sample extends a shorter one.
    let long = sample_archimedean(&m, 9_000, 42).unwrap();
    assert_eq!(&long.data()[..a.data().len()], a.data());
}

// Rows drawn given U_j near u follow the conditional df of the others.
#[test]
fn window_hits_follow_the_conditional_df() {
    let mut r = rng(22);
    for g in [Generator::gumbel(3.0), Generator::clayton(1.0), Generator::frank(5.0)] {
        let m = CopulaModel::archimedean(g.unwrap(), 3).unwrap();
        let w = WindowSampler::new(&m, 0, 0.9, 1e-4).unwrap();
        let slice = w.draw_slice(20_000, &mut rng(5));
        assert_eq!(slice.cols(), 2);
        for _ in 0..8 {
            let v = point(&mut r, 2, 0.5, 0.999);
            let p = m.conditional_cdf(0, 0.9, &v).unwrap();
            let (f, n) = frequency(slice.iter_rows(), &v);
            assert!(within_three_se(f, p, n), "{:?} at {v:?}: {f} vs {p}", m.generator());
        }
    }
}

#[test]
fn scanned_slice_rows_come_from_the_window() {
    let m = CopulaModel::archimedean(Generator::gumbel(2.0).unwrap(), 3).unwrap();
    let s = sample_archimedean(&m, 50_000, 3).unwrap();
    let sl = conditional_slice(&s, 1, 0.8, 0.01, 100).unwrap();
    assert_eq!(sl.achieved_k, 100);
    let expected: Vec<f64> = s
        .iter_rows()
        .filter(|r| (r[1] - 0.8).abs() <= 0.01)
        .take(100)
        .flat_map(|r| [r[0], r[2]])
        .collect();
    assert_eq!(sl.data(), &expected[..]);
}
