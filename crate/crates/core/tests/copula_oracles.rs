mod common;

use proptest::prelude::*;
use tailcond::{CopulaModel, DNorm, Generator};

use common::{archimax, oracle_models, partial, point, rel_err, rng};

// The whole unit cube minus a sliver at the origin.
fn wide(m: CopulaModel) -> CopulaModel {
    let d = m.dim();
    m.with_lower_valid(vec![1e-6; d]).unwrap()
}

// ∂C/∂u_j at (v with u inserted at j) against the closed form.
fn fd_conditional(m: &CopulaModel, j: usize, u: f64, v: &[f64]) -> f64 {
    let mut x = v.to_vec();
    x.insert(j, u);
    partial(&|y: &[f64]| m.cdf(y).unwrap(), &x, j, m.lower_valid()[j])
}

#[test]
fn conditional_cdf_is_the_partial_derivative() {
    let mut r = rng(11);
    for m in oracle_models() {
        let d = m.dim();
        for i in 0..200 {
            let j = i % d;
            let x = point(&mut r, d, 0.5, 0.995);
            let u = x[j];
            let v: Vec<f64> = x.iter().enumerate().filter(|(k, _)| *k != j).map(|(_, &a)| a).collect();
            let exact = m.conditional_cdf(j, u, &v).unwrap();
            let fd = fd_conditional(&m, j, u, &v);
            assert!(rel_err(fd, exact) < 1e-5, "{:?} d={d} at {x:?}: {exact} vs {fd}", m.generator());
        }
    }
}

#[test]
fn logistic_archimax_conditional_is_the_partial_derivative() {
    let m = archimax(Generator::gumbel(1.5).unwrap(), DNorm::logistic(2.0, 3).unwrap());
    let mut r = rng(12);
    for _ in 0..100 {
        let x = point(&mut r, 3, 0.6, 0.99);
        let exact = m.conditional_cdf(1, x[1], &[x[0], x[2]]).unwrap();
        let fd = fd_conditional(&m, 1, x[1], &[x[0], x[2]]);
        assert!(rel_err(fd, exact) < 1e-5, "{x:?}: {exact} vs {fd}");
    }
}

#[test]
fn survival_complements_the_cdf() {
    let mut r = rng(13);
    for m in oracle_models() {
        let d = m.dim();
        for _ in 0..50 {
            let x = point(&mut r, d, 0.5, 0.999);
            let h = m.conditional_cdf(0, x[0], &x[1..]).unwrap();
            let s = m.conditional_survival(0, x[0], &x[1..]).unwrap();
            assert!((h + s - 1.0).abs() < 1e-12, "{h} + {s}");
            let offsets: Vec<f64> = x[1..].iter().map(|a| 1.0 - a).collect();
            let st = m.conditional_survival_tail(0, x[0], &offsets).unwrap();
            assert!(rel_err(st, s) < 1e-8, "{st} vs {s}");
        }
    }
}

#[test]
fn conditional_df_is_a_df() {
    let mut r = rng(14);
    for m in oracle_models() {
        let m = wide(m);
        let d = m.dim();
        for _ in 0..30 {
            let u = point(&mut r, 1, 0.3, 0.99)[0];
            let mut prev = 0.0;
            for i in 1..=50 {
                let t = i as f64 / 50.0;
                let h = m.conditional_cdf(0, u, &vec![t; d - 1]).unwrap();
                assert!((0.0..=1.0).contains(&h));
                assert!(h >= prev - 1e-15, "not monotone at t={t}");
                prev = h;
            }
            assert!((prev - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn uniform_margins_and_the_margin_shortcut() {
    let mut r = rng(15);
    for m in oracle_models() {
        let m = wide(m);
        let d = m.dim();
        for _ in 0..50 {
            let a = point(&mut r, 1, 0.01, 0.99)[0];
            for j in 0..d {
                let mut x = vec![1.0; d];
                x[j] = a;
                assert!((m.cdf(&x).unwrap() - a).abs() < 1e-12);
            }
            let u = point(&mut r, 1, 0.3, 0.99)[0];
            let mut v = vec![1.0; d - 1];
            v[0] = a;
            let margin = m.conditional_margin(u, a).unwrap();
            assert!((margin - m.conditional_cdf(0, u, &v).unwrap()).abs() < 1e-13);
        }
    }
}

#[test]
fn sup_norm_is_the_minimum() {
    let mut r = rng(16);
    for g in [Generator::gumbel(2.5).unwrap(), Generator::frank(3.0).unwrap()] {
        let m = wide(archimax(g, DNorm::sup(4).unwrap()));
        for _ in 0..200 {
            let x = point(&mut r, 4, 0.001, 1.0);
            let min = x.iter().cloned().fold(1.0, f64::min);
            assert_eq!(m.cdf(&x).unwrap(), min);
        }
        assert!(m.conditional_cdf(0, 0.5, &[0.5, 0.5, 0.5]).is_err());
    }
}

#[test]
fn sum_norm_archimax_is_archimedean() {
    let g = Generator::clayton(1.3).unwrap();
    let a = wide(archimax(g, DNorm::sum(3).unwrap()));
    let b = wide(CopulaModel::archimedean(g, 3).unwrap());
    let mut r = rng(17);
    for _ in 0..200 {
        let x = point(&mut r, 3, 0.01, 1.0);
        assert_eq!(a.cdf(&x).unwrap(), b.cdf(&x).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn rectangles_have_nonnegative_mass(
        which in 0usize..5,
        lo in proptest::collection::vec(0.01..0.98f64, 2),
        w in proptest::collection::vec(0.001..0.3f64, 2),
    ) {
        let g = [
            Generator::gumbel(1.5),
            Generator::gumbel(3.0),
            Generator::clayton(1.0),
            Generator::clayton(2.0),
            Generator::frank(5.0),
        ][which].clone().unwrap();
        let m = wide(CopulaModel::archimedean(g, 2).unwrap());
        let hi: Vec<f64> = lo.iter().zip(&w).map(|(a, b)| (a + b).min(1.0)).collect();
        let c = |a: f64, b: f64| m.cdf(&[a, b]).unwrap();
        let mass = c(hi[0], hi[1]) - c(lo[0], hi[1]) - c(hi[0], lo[1]) + c(lo[0], lo[1]);
        prop_assert!(mass >= -1e-14, "mass {}", mass);
    }

    #[test]
    fn cdf_within_frechet_bounds(which in 0usize..5, x in proptest::collection::vec(1e-6..1.0f64, 3)) {
        let g = [
            Generator::gumbel(1.5),
            Generator::gumbel(3.0),
            Generator::clayton(1.0),
            Generator::clayton(2.0),
            Generator::frank(5.0),
        ][which].clone().unwrap();
        let m = wide(CopulaModel::archimedean(g, 3).unwrap());
        let c = m.cdf(&x).unwrap();
        let min = x.iter().cloned().fold(1.0, f64::min);
        let lower = (x.iter().sum::<f64>() - 2.0).max(0.0);
        prop_assert!(c <= min + 1e-15 && c >= lower - 1e-15);
    }
}
