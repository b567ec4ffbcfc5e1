//! Shared oracles for the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tailcond::{CopulaModel, DNorm, Generator};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// ∂f/∂x_j by finite differences on [lo, 1].
///
/// The step is 1e-3·(1 − x_j), small next to the distance to the upper edge where
/// the derivative varies on that scale. A fourth-order central stencil is used when it fits in
/// the interval, else a second-order one-sided stencil.
pub fn partial(f: &dyn Fn(&[f64]) -> f64, x: &[f64], j: usize, lo: f64) -> f64 {
    let h = 1e-3 * (1.0 - x[j]).max(1e-9);
    let at = |dx: f64| {
        let mut y = x.to_vec();
        y[j] += dx;
        f(&y)
    };
    if x[j] - 2.0 * h >= lo && x[j] + 2.0 * h <= 1.0 {
        (-at(2.0 * h) + 8.0 * at(h) - 8.0 * at(-h) + at(-2.0 * h)) / (12.0 * h)
    } else if x[j] + 2.0 * h <= 1.0 {
        (-3.0 * at(0.0) + 4.0 * at(h) - at(2.0 * h)) / (2.0 * h)
    } else {
        (3.0 * at(0.0) - 4.0 * at(-h) + at(-2.0 * h)) / (2.0 * h)
    }
}

/// Central derivative of a scalar function with a t-scaled step.
pub fn derivative(f: &dyn Fn(f64) -> f64, t: f64) -> f64 {
    let h = 1e-6 * t;
    (-f(t + 2.0 * h) + 8.0 * f(t + h) - 8.0 * f(t - h) + f(t - 2.0 * h)) / (12.0 * h)
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        a.abs()
    } else {
        ((a - b) / b).abs()
    }
}

/// A point with coordinates uniform on [lo, hi].
pub fn point(rng: &mut impl Rng, d: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..d).map(|_| rng.random_range(lo..hi)).collect()
}

/// The generator/dimension grid used by the conditional-df oracle.
pub fn oracle_models() -> Vec<CopulaModel> {
    let gens = [
        Generator::gumbel(1.5),
        Generator::gumbel(3.0),
        Generator::clayton(1.0),
        Generator::clayton(2.0),
        Generator::frank(5.0),
    ];
    let mut out = Vec::new();
    for g in gens {
        let g = g.unwrap();
        for d in 2..=4 {
            out.push(CopulaModel::archimedean(g, d).unwrap());
        }
    }
    out
}

pub fn archimax(g: Generator, norm: DNorm) -> CopulaModel {
    CopulaModel::archimax(g, norm).unwrap()
}
