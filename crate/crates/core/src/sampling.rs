//! Frailty samplers for the Gumbel–Hougaard, Clayton and Frank copulas, and the
//! conditional slices used by the second step of the experiment.
//!
//! With a positive frailty V whose Laplace transform is φ⁻¹ and i.i.d. unit
//! exponentials E_i, the vector U_i = φ⁻¹(E_i/V) has df C_φ:
//!
//! | family  | frailty V                                   |
//! |---------|---------------------------------------------|
//! | Gumbel  | positive stable, index 1/ϑ                   |
//! | Clayton | Gamma with shape 1/ϑ and scale ϑ             |
//! | Frank   | logarithmic series with parameter 1 − e^{−ϑ} |

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma, Open01};
use rayon::prelude::*;

use crate::copulas::CopulaModel;
use crate::error::{Error, Result};
use crate::generators::{Family, Generator};
use crate::rng::{self, tag};

/// Rows per independently seeded block.
pub const BLOCK_ROWS: usize = 8192;

#[derive(Debug, Clone)]
enum Frailty {
    /// V ≡ 1: the independence copula.
    Unit,
    PositiveStable { alpha: f64 },
    Gamma(Gamma<f64>),
    LogSeries { theta: f64, p: f64 },
}

impl Frailty {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Frailty::Unit => 1.0,
            Frailty::PositiveStable { alpha } => positive_stable(*alpha, rng),
            Frailty::Gamma(g) => g.sample(rng),
            Frailty::LogSeries { theta, p } => log_series(*theta, *p, rng) as f64,
        }
    }
}

/// Positive stable variate with Laplace transform exp(−s^α), 0 < α < 1.
///
/// Chambers–Mallows–Stuck in its totally skewed (β = 1) form, written as Kanter's
/// representation: with Θ ~ U(0, π) and W ~ Exp(1),
/// V = sin(αΘ)/sin(Θ)^{1/α} · (sin((1−α)Θ)/W)^{(1−α)/α}.
pub fn positive_stable<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    let u: f64 = Open01.sample(rng);
    let theta = PI * u;
    let w: f64 = Exp1.sample(rng);
    let lead = (alpha * theta).sin() / theta.sin().powf(1.0 / alpha);
    let tail = ((1.0 - alpha) * theta).sin() / w;
    lead * tail.powf((1.0 - alpha) / alpha)
}

/// Logarithmic-series variate, P(V = k) = p^k / (k·ϑ) with p = 1 − e^{−ϑ}.
///
/// Sequential-search inversion for moderate p; Kemp's LK method once p ≥ 0.95, where
/// the search length grows like 1/(1 − p).
pub fn log_series<R: Rng + ?Sized>(theta: f64, p: f64, rng: &mut R) -> u64 {
    if p < 0.95 {
        let mut u: f64 = rng.random();
        let mut k = 1u64;
        let mut prob = p / theta;
        while u > prob {
            u -= prob;
            k += 1;
            prob *= p * (k - 1) as f64 / k as f64;
            if prob <= 0.0 {
                break;
            }
        }
        k
    } else {
        let v: f64 = rng.random();
        if v >= p {
            return 1;
        }
        let w: f64 = Open01.sample(rng);
        let q = -(-theta * w).exp_m1();
        if v <= q * q {
            let k = 1.0 + (v.ln() / q.ln()).floor();
            if k.is_finite() && k >= 1.0 {
                k as u64
            } else {
                1
            }
        } else if v <= q {
            2
        } else {
            1
        }
    }
}

/// Draws rows of an Archimedean copula through its frailty representation.
#[derive(Debug, Clone)]
pub struct Sampler {
    generator: Generator,
    frailty: Frailty,
    dim: usize,
}

impl Sampler {
    pub fn new(model: &CopulaModel) -> Result<Self> {
        let g = model.archimedean_generator()?;
        let frailty = match g.family() {
            Family::GumbelHougaard => {
                let theta = g.theta() * g.power();
                if theta == 1.0 {
                    Frailty::Unit
                } else {
                    Frailty::PositiveStable { alpha: 1.0 / theta }
                }
            }
            Family::Clayton if g.power() == 1.0 => {
                let th = g.theta();
                Frailty::Gamma(Gamma::new(1.0 / th, th).map_err(|e| Error::InvalidParameter(e.to_string()))?)
            }
            Family::Frank if g.power() == 1.0 => {
                let th = g.theta();
                Frailty::LogSeries { theta: th, p: -(-th).exp_m1() }
            }
            Family::Logistic => {
                return Err(Error::Unsupported("no sampler exists for the logistic generator".into()))
            }
            f => return Err(Error::Unsupported(format!("no frailty sampler for a powered {f} generator"))),
        };
        Ok(Self { generator: g, frailty, dim: model.dim() })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn generator(&self) -> &Generator {
        &self.generator
    }

    /// Fills `out` with E_i/V for one row.
    fn ratios<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        let v = self.frailty.sample(rng);
        for r in out.iter_mut() {
            let e: f64 = Exp1.sample(rng);
            *r = e / v;
        }
    }

    pub fn draw_row<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        self.ratios(rng, out);
        for x in out.iter_mut() {
            *x = self.generator.inverse_unchecked(*x).value;
        }
    }

    fn fill_block(&self, seed: u64, block: usize, out: &mut [f64]) {
        let mut rng = rng::stream(seed, &[tag::SAMPLE_BLOCK, block as u64]);
        for row in out.chunks_exact_mut(self.dim) {
            self.draw_row(&mut rng, row);
        }
    }

    /// 1 − max_i U_{i,j} for every column j of the n-row sample that
    /// [`sample_archimedean`] would draw with the same seed, without storing it.
    pub fn max_complements(&self, n: usize, seed: u64) -> Vec<f64> {
        let d = self.dim;
        let mut min_ratio = vec![f64::INFINITY; d];
        let mut row = vec![0.0; d];
        for (block, start) in (0..n).step_by(BLOCK_ROWS).enumerate() {
            let rows = BLOCK_ROWS.min(n - start);
            let mut rng = rng::stream(seed, &[tag::SAMPLE_BLOCK, block as u64]);
            for _ in 0..rows {
                self.ratios(&mut rng, &mut row);
                for (m, &r) in min_ratio.iter_mut().zip(&row) {
                    if r < *m {
                        *m = r;
                    }
                }
            }
        }
        min_ratio.into_iter().map(|r| self.generator.inverse_complement_unchecked(r)).collect()
    }
}

/// An n × d sample from an Archimedean copula, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix {
    data: Vec<f64>,
    rows: usize,
    dim: usize,
    seed: u64,
    model: CopulaModel,
}

impl SampleMatrix {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn model(&self) -> &CopulaModel {
        &self.model
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        self.data.iter().skip(j).step_by(self.dim).copied()
    }
}

/// Draws n i.i.d. rows. Blocks of [`BLOCK_ROWS`] rows use independent streams derived
/// from `seed`, so the output does not depend on the thread count.
pub fn sample_archimedean(model: &CopulaModel, n: usize, seed: u64) -> Result<SampleMatrix> {
    if n == 0 {
        return Err(Error::InvalidParameter("sample size must be >= 1".into()));
    }
    let sampler = Sampler::new(model)?;
    let d = model.dim();
    let mut data = vec![0.0; n * d];
    data.par_chunks_mut(BLOCK_ROWS * d)
        .enumerate()
        .for_each(|(block, chunk)| sampler.fill_block(seed, block, chunk));
    Ok(SampleMatrix { data, rows: n, dim: d, seed, model: model.clone() })
}

/// Observations whose j-th coordinate fell in [u − ε, u + ε], with that coordinate removed.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceSample {
    rows: Vec<f64>,
    cols: usize,
    pub u: f64,
    pub eps: f64,
    pub j: usize,
    pub requested_k: usize,
    pub achieved_k: usize,
}

impl SliceSample {
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.rows
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.rows.chunks_exact(self.cols)
    }

    pub fn is_short(&self) -> bool {
        self.achieved_k < self.requested_k
    }
}

fn check_window(d: usize, j: usize, u: f64, eps: f64, k: usize) -> Result<()> {
    if j >= d {
        return Err(Error::InvalidParameter(format!("coordinate {j} out of range for d = {d}")));
    }
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::InvalidParameter(format!("conditioning level must lie in (0, 1), got {u}")));
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidParameter(format!("window half-width must be positive, got {eps}")));
    }
    if k == 0 {
        return Err(Error::InvalidParameter("slice size k must be >= 1".into()));
    }
    Ok(())
}

/// Scans the sample in row order and keeps the first k rows with u_{i,j} ∈ [u − ε, u + ε].
pub fn conditional_slice(s: &SampleMatrix, j: usize, u: f64, eps: f64, k: usize) -> Result<SliceSample> {
    check_window(s.dim, j, u, eps, k)?;
    let (lo, hi) = (u - eps, u + eps);
    let mut rows = Vec::with_capacity(k * (s.dim - 1));
    let mut achieved = 0;
    for row in s.iter_rows() {
        if achieved == k {
            break;
        }
        if row[j] >= lo && row[j] <= hi {
            rows.extend(row.iter().enumerate().filter(|(i, _)| *i != j).map(|(_, &x)| x));
            achieved += 1;
        }
    }
    Ok(SliceSample { rows, cols: s.dim - 1, u, eps, j, requested_k: k, achieved_k: achieved })
}

/// Draws window hits directly, without generating the rows that miss the window.
///
/// A row hits iff aV ≤ E_j ≤ bV with a = φ(u + ε), b = φ(u − ε). Rows are i.i.d., so
/// the first k hits of an endless scan are k i.i.d. draws from the law of a row given
/// a hit. That law is sampled exactly: V is accepted with probability
/// (e^{−aV} − e^{−bV})/max_v(e^{−av} − e^{−bv}), then E_j is an exponential truncated
/// to [aV, bV] and the other E_i are unconstrained.
#[derive(Debug, Clone)]
pub struct WindowSampler {
    sampler: Sampler,
    j: usize,
    u: f64,
    eps: f64,
    lo_ratio: f64,
    hi_ratio: f64,
    peak: f64,
}

impl WindowSampler {
    pub fn new(model: &CopulaModel, j: usize, u: f64, eps: f64) -> Result<Self> {
        check_window(model.dim(), j, u, eps, 1)?;
        let sampler = Sampler::new(model)?;
        let g = sampler.generator;
        let lo_ratio = if u + eps >= 1.0 { 0.0 } else { g.phi_unchecked(u + eps) };
        let hi_ratio = if u - eps <= 0.0 { f64::INFINITY } else { g.phi_unchecked(u - eps) };
        let peak = if lo_ratio == 0.0 || hi_ratio.is_infinite() {
            1.0
        } else {
            let v = (hi_ratio / lo_ratio).ln() / (hi_ratio - lo_ratio);
            (-lo_ratio * v).exp() - (-hi_ratio * v).exp()
        };
        Ok(Self { sampler, j, u, eps, lo_ratio, hi_ratio, peak })
    }

    /// Probability that a row with frailty v lands in the window.
    fn hit_probability(&self, v: f64) -> f64 {
        (-self.lo_ratio * v).exp() - (-self.hi_ratio * v).exp()
    }

    /// One hit row, with coordinate j dropped.
    pub fn draw_hit<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        let v = loop {
            let v = self.sampler.frailty.sample(rng);
            let accept: f64 = rng.random();
            if accept * self.peak < self.hit_probability(v) {
                break v;
            }
        };
        // U_j itself is discarded, so E_j (exponential truncated to [aV, bV]) is never drawn.
        for x in out.iter_mut() {
            let e: f64 = Exp1.sample(rng);
            *x = self.sampler.generator.inverse_unchecked(e / v).value;
        }
    }

    pub fn draw_slice<R: Rng + ?Sized>(&self, k: usize, rng: &mut R) -> SliceSample {
        let cols = self.sampler.dim - 1;
        let mut rows = vec![0.0; k * cols];
        for row in rows.chunks_exact_mut(cols) {
            self.draw_hit(rng, row);
        }
        SliceSample { rows, cols, u: self.u, eps: self.eps, j: self.j, requested_k: k, achieved_k: k }
    }
}
