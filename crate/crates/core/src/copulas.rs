//! Archimedean and Archimax copulas.
//!
//! A [`CopulaModel`] evaluates C(u) = φ⁻¹(‖(φ(u_1), …, φ(u_d))‖_D) on the region
//! [u₀, 1] where the representation is asserted. With the sum norm this is the
//! Archimedean copula C_φ.
//!
//! Conditioning on one component U_j = u is available for Archimedean models and for
//! logistic-norm Archimax models, which are Archimedean with generator φ^q. The
//! conditional df is H_{j,u}(v) = φ′(u)/φ′(φ⁻¹(φ(u) + Σ φ(v_i))).
//!
//! Coordinate indices are zero-based throughout this module.

use serde::{Deserialize, Serialize};

use crate::dnorms::{DNorm, NormKind};
use crate::error::{Error, Result};
use crate::generators::{Family, Generator};

/// Slack kept between a clamped probe point and the edge of the validity region.
pub const REGION_SLACK: f64 = 1e-12;

/// Relative size of Σφ(v_i) against φ(u) below which the conditional df switches to a
/// first-order expansion around u.
const SMALL_INCREMENT: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelSpec", into = "ModelSpec")]
pub struct CopulaModel {
    generator: Generator,
    dnorm: DNorm,
    lower_valid: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ModelSpec {
    generator: Generator,
    dnorm: DNorm,
    dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lower_valid: Option<Vec<f64>>,
}

impl TryFrom<ModelSpec> for CopulaModel {
    type Error = Error;

    fn try_from(spec: ModelSpec) -> Result<Self> {
        if spec.dim != spec.dnorm.dim() {
            return Err(Error::DimensionMismatch { expected: spec.dim, got: spec.dnorm.dim() });
        }
        let m = CopulaModel::archimax(spec.generator, spec.dnorm)?;
        match spec.lower_valid {
            Some(u0) => m.with_lower_valid(u0),
            None => Ok(m),
        }
    }
}

impl From<CopulaModel> for ModelSpec {
    fn from(m: CopulaModel) -> Self {
        ModelSpec { generator: m.generator, dim: m.dim(), dnorm: m.dnorm, lower_valid: Some(m.lower_valid) }
    }
}

/// Norming constants for conditional maxima.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormingConstants {
    /// (φ′(u)²/φ″(u))^{1/p}
    pub c: f64,
    /// 1 − φ⁻¹(1/n)
    pub a_n: f64,
    pub n: u64,
    pub u: f64,
    pub j: usize,
}

impl NormingConstants {
    pub fn scale(&self) -> f64 {
        self.c * self.a_n
    }
}

/// One row of a convergence probe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbeRow {
    pub n: f64,
    pub value: f64,
    pub target: f64,
    pub rel_error: f64,
    /// A probe coordinate was pulled back into the validity region.
    pub clamped: bool,
}

impl ProbeRow {
    fn new(n: f64, value: f64, target: f64, clamped: bool) -> Self {
        let rel_error = if target == 0.0 { value.abs() } else { ((value - target) / target).abs() };
        Self { n, value, target, rel_error, clamped }
    }
}

impl CopulaModel {
    /// Archimax model with the default validity region.
    ///
    /// The default lower corner is 0.5 in every coordinate for the three copula
    /// families. For the logistic generator it is the level c with ‖(φ(c), …, φ(c))‖_D = 1,
    /// which keeps every point of [u₀, 1] on the df-valid branch.
    pub fn archimax(generator: Generator, dnorm: DNorm) -> Result<Self> {
        let dim = dnorm.dim();
        if dim < 2 {
            return Err(Error::InvalidParameter(format!("copula dimension must be >= 2, got {dim}")));
        }
        let level = match generator.family() {
            Family::Logistic => {
                let ones = vec![1.0; dim];
                generator.phi_inverse(1.0 / dnorm.eval(&ones)?)?
            }
            _ => 0.5,
        };
        Ok(Self { generator, dnorm, lower_valid: vec![level; dim] })
    }

    pub fn archimedean(generator: Generator, dim: usize) -> Result<Self> {
        Self::archimax(generator, DNorm::sum(dim)?)
    }

    pub fn with_lower_valid(mut self, lower_valid: Vec<f64>) -> Result<Self> {
        if lower_valid.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: lower_valid.len() });
        }
        if let Some(bad) = lower_valid.iter().find(|&&v| !(v > 0.0 && v < 1.0)) {
            return Err(Error::InvalidParameter(format!("lower validity bound {bad} is outside (0, 1)")));
        }
        self.lower_valid = lower_valid;
        Ok(self)
    }

    pub fn generator(&self) -> &Generator {
        &self.generator
    }

    pub fn dnorm(&self) -> &DNorm {
        &self.dnorm
    }

    pub fn dim(&self) -> usize {
        self.dnorm.dim()
    }

    pub fn lower_valid(&self) -> &[f64] {
        &self.lower_valid
    }

    /// The generator of the equivalent Archimedean copula, when one exists.
    ///
    /// Sum norm: φ itself. Logistic(q): φ^q. Sup norm: none.
    pub fn archimedean_generator(&self) -> Result<Generator> {
        match self.dnorm.kind() {
            NormKind::Sum => Ok(self.generator),
            NormKind::Logistic(q) => archimax_logistic_reduction(&self.generator, q),
            NormKind::Sup => Err(Error::Unsupported(
                "conditioning is only available for sum and logistic D-norms".into(),
            )),
        }
    }

    pub fn cdf(&self, u: &[f64]) -> Result<f64> {
        self.check_point(u)?;
        if self.dnorm.kind() == NormKind::Sup {
            // φ⁻¹(max φ(u_i)) is min u_i; skip the round trip through φ.
            return Ok(u.iter().cloned().fold(1.0, f64::min));
        }
        let phis: Vec<f64> = u.iter().map(|&x| self.generator.phi_unchecked(x)).collect();
        Ok(self.generator.inverse_unchecked(self.dnorm.eval_unchecked(&phis)).value)
    }

    /// 1 − C(1 − s), evaluated without forming 1 − s.
    pub fn tail_survival(&self, s: &[f64]) -> Result<f64> {
        if s.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: s.len() });
        }
        let mut phis = Vec::with_capacity(s.len());
        for (i, &si) in s.iter().enumerate() {
            if !(si >= 0.0 && 1.0 - si >= self.lower_valid[i]) {
                return Err(Error::OutOfRegion(format!(
                    "coordinate {i} at 1 - {si} is below the lower bound {}",
                    self.lower_valid[i]
                )));
            }
            phis.push(self.generator.phi_tail(si)?);
        }
        Ok(self.generator.inverse_complement_unchecked(self.dnorm.eval_unchecked(&phis)))
    }

    fn check_point(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: u.len() });
        }
        for (i, (&x, &lo)) in u.iter().zip(&self.lower_valid).enumerate() {
            if !(x >= lo && x <= 1.0) {
                return Err(Error::OutOfRegion(format!("u[{i}] = {x} is outside [{lo}, 1]")));
            }
        }
        Ok(())
    }

    fn check_conditioning(&self, j: usize, u: f64, others: usize) -> Result<()> {
        let d = self.dim();
        if j >= d {
            return Err(Error::InvalidParameter(format!("coordinate {j} out of range for d = {d}")));
        }
        if others != d - 1 {
            return Err(Error::DimensionMismatch { expected: d - 1, got: others });
        }
        let lo = self.lower_valid[j];
        if !(u >= lo && u < 1.0) {
            return Err(Error::OutOfRegion(format!("conditioning level {u} is outside [{lo}, 1)")));
        }
        Ok(())
    }

    fn other_bounds(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        self.lower_valid.iter().enumerate().filter(move |(i, _)| *i != j).map(|(_, &b)| b)
    }

    /// Returns (φ′(u), φ′(w), φ′(w) − φ′(u)) with w = φ⁻¹(φ(u) + extra).
    ///
    /// When `extra` is negligible next to φ(u) the sum φ(u) + extra loses it to
    /// rounding, so w − u and the derivative increment come from midpoint expansions.
    fn conditional_terms(g: &Generator, u: f64, extra: f64) -> Result<(f64, f64, f64)> {
        let du = g.phi_prime_unchecked(u);
        if !(du.is_finite() && du != 0.0) {
            return Err(Error::Degenerate(format!("phi'({u}) = {du}")));
        }
        let phi_u = g.phi_unchecked(u);
        if extra <= SMALL_INCREMENT * phi_u {
            let first = extra / du;
            let step = extra / g.phi_prime_unchecked(u + 0.5 * first);
            let diff = step * g.phi_second_unchecked(u + 0.5 * step);
            return Ok((du, du + diff, diff));
        }
        let inv = g.inverse_unchecked(phi_u + extra);
        if inv.clamped || inv.value <= 0.0 {
            return Err(Error::Degenerate("the joint df vanishes at this point".into()));
        }
        let dw = if inv.value >= 1.0 { du } else { g.phi_prime_unchecked(inv.value) };
        if !(dw.is_finite() && dw != 0.0) {
            return Err(Error::Degenerate(format!("phi' at C(u) = {} is {dw}", inv.value)));
        }
        Ok((du, dw, dw - du))
    }

    fn sum_phi_others(&self, g: &Generator, j: usize, v: &[f64]) -> Result<f64> {
        let mut total = 0.0;
        for (k, (&x, lo)) in v.iter().zip(self.other_bounds(j)).enumerate() {
            if !(x >= lo && x <= 1.0) {
                return Err(Error::OutOfRegion(format!("v[{k}] = {x} is outside [{lo}, 1]")));
            }
            total += g.phi_unchecked(x);
        }
        Ok(total)
    }

    /// P(U_i ≤ v_i, i ≠ j | U_j = u). `v` lists the other coordinates in order.
    pub fn conditional_cdf(&self, j: usize, u: f64, v: &[f64]) -> Result<f64> {
        self.check_conditioning(j, u, v.len())?;
        let g = self.archimedean_generator()?;
        let extra = self.sum_phi_others(&g, j, v)?;
        let (du, dw, _) = Self::conditional_terms(&g, u, extra)?;
        Ok((du / dw).min(1.0))
    }

    /// 1 − H_{j,u}(v) = (φ′(w) − φ′(u))/φ′(w).
    pub fn conditional_survival(&self, j: usize, u: f64, v: &[f64]) -> Result<f64> {
        self.check_conditioning(j, u, v.len())?;
        let g = self.archimedean_generator()?;
        let extra = self.sum_phi_others(&g, j, v)?;
        let (_, dw, diff) = Self::conditional_terms(&g, u, extra)?;
        Ok((diff / dw).max(0.0))
    }

    /// 1 − H_{j,u}(1 − s) with the offsets s supplied directly.
    pub fn conditional_survival_tail(&self, j: usize, u: f64, s: &[f64]) -> Result<f64> {
        self.check_conditioning(j, u, s.len())?;
        let g = self.archimedean_generator()?;
        let mut extra = 0.0;
        for (k, (&si, lo)) in s.iter().zip(self.other_bounds(j)).enumerate() {
            if !(si >= 0.0 && 1.0 - si >= lo) {
                return Err(Error::OutOfRegion(format!("offset s[{k}] = {si} leaves [{lo}, 1]")));
            }
            extra += g.phi_tail(si)?;
        }
        let (_, dw, diff) = Self::conditional_terms(&g, u, extra)?;
        Ok((diff / dw).max(0.0))
    }

    /// The common univariate upper-tail margin H_u(v) of the conditional df.
    pub fn conditional_margin(&self, u: f64, v: f64) -> Result<f64> {
        let v0 = self.lower_valid.iter().cloned().fold(0.0, f64::max);
        if !(u >= v0 && u < 1.0) {
            return Err(Error::OutOfRegion(format!("conditioning level {u} is outside [{v0}, 1)")));
        }
        if !(v >= v0 && v <= 1.0) {
            return Err(Error::OutOfRegion(format!("v = {v} is outside [{v0}, 1]")));
        }
        let g = self.archimedean_generator()?;
        let (du, dw, _) = Self::conditional_terms(&g, u, g.phi_unchecked(v))?;
        Ok((du / dw).min(1.0))
    }

    /// c = (φ′(u)²/φ″(u))^{1/p} and a_n = 1 − φ⁻¹(1/n) for the Archimedean generator.
    pub fn norming_constants(&self, u: f64, j: usize, n: u64) -> Result<NormingConstants> {
        if n == 0 {
            return Err(Error::InvalidParameter("block size must be >= 1".into()));
        }
        if j >= self.dim() {
            return Err(Error::InvalidParameter(format!("coordinate {j} out of range")));
        }
        let g = self.archimedean_generator()?;
        let d1 = g.phi_prime(u)?;
        let d2 = g.phi_second(u)?;
        if !(d2 > 0.0 && d2.is_finite()) || d1 == 0.0 {
            return Err(Error::Degenerate(format!("phi''({u}) = {d2}: norming constant c is undefined")));
        }
        let c = (d1 * d1 / d2).powf(1.0 / g.tail_index());
        let a_n = g.inverse_complement_unchecked(1.0 / n as f64);
        Ok(NormingConstants { c, a_n, n, u, j })
    }

    /// n·(1 − C(1 + x/n)) along `n_grid`; the target is ‖(|x_1|^p, …)‖_D^{1/p}.
    pub fn doa_convergence_probe(&self, x: &[f64], n_grid: &[f64]) -> Result<Vec<ProbeRow>> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        if x.iter().any(|&v| !(v <= 0.0)) {
            return Err(Error::Domain("probe direction must be nonpositive".into()));
        }
        let target = self.dnorm.power_transform(self.generator.tail_index())?.eval(x)?;
        n_grid
            .iter()
            .map(|&n| {
                if !(n >= 1.0) {
                    return Err(Error::InvalidParameter(format!("grid value n = {n} must be >= 1")));
                }
                for (i, (&xi, &lo)) in x.iter().zip(&self.lower_valid).enumerate() {
                    if 1.0 + xi / n < lo {
                        return Err(Error::OutOfRegion(format!(
                            "1 + x[{i}]/n = {} at n = {n} is below {lo}; start the grid higher",
                            1.0 + xi / n
                        )));
                    }
                }
                let s: Vec<f64> = x.iter().map(|&xi| -xi / n).collect();
                Ok(ProbeRow::new(n, n * self.tail_survival(&s)?, target, false))
            })
            .collect()
    }

    /// n·(1 − H_{j,u}(1 + c·a_n·x)) along `n_grid`; the target is Σ(−x_i)^p.
    pub fn conditional_limit_probe(&self, u: f64, j: usize, x: &[f64], n_grid: &[f64]) -> Result<Vec<ProbeRow>> {
        self.check_conditioning(j, u, x.len())?;
        if x.iter().any(|&v| !(v <= 0.0)) {
            return Err(Error::Domain("probe direction must be nonpositive".into()));
        }
        let g = self.archimedean_generator()?;
        let p = g.tail_index();
        let target: f64 = x.iter().map(|&xi| (-xi).powf(p)).sum();
        let bounds: Vec<f64> = self.other_bounds(j).collect();
        n_grid
            .iter()
            .map(|&n| {
                if !(n >= 1.0) {
                    return Err(Error::InvalidParameter(format!("grid value n = {n} must be >= 1")));
                }
                let nc = self.norming_constants(u, j, n.round() as u64)?;
                let scale = nc.c * g.inverse_complement_unchecked(1.0 / n);
                let mut clamped = false;
                let s: Vec<f64> = x
                    .iter()
                    .zip(&bounds)
                    .map(|(&xi, &lo)| {
                        let room = 1.0 - lo - REGION_SLACK;
                        let si = -scale * xi;
                        if si > room {
                            clamped = true;
                            room
                        } else {
                            si
                        }
                    })
                    .collect();
                Ok(ProbeRow::new(n, n * self.conditional_survival_tail(j, u, &s)?, target, clamped))
            })
            .collect()
    }
}

/// ψ = φ^q: the generator that turns a logistic-norm Archimax copula into an Archimedean one.
pub fn archimax_logistic_reduction(g: &Generator, q: f64) -> Result<Generator> {
    g.powered(q)
}

/// n = 10, 100, …, 10^k.
pub fn decade_grid(max_exponent: i32) -> Vec<f64> {
    (1..=max_exponent).map(|k| 10f64.powi(k)).collect()
}
