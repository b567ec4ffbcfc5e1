//! Archimedean generators.
//!
//! A generator is a convex, strictly decreasing function φ: (0,1] → [0,∞) with φ(1) = 0.
//! Four families are supported, and any of them can be raised to a power q ≥ 1 (the
//! composite ψ = φ^q arises when an Archimax copula with a logistic D-norm is rewritten
//! as an Archimedean one).
//!
//! Every evaluation that matters for tail asymptotics has a `*_tail` variant taking
//! s = 1 − t directly, so that probes at s = 1e-10 do not lose digits to the
//! subtraction `1 - s`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Generator family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "gumbel", alias = "gumbel-hougaard", alias = "gumbelhougaard")]
    GumbelHougaard,
    #[serde(rename = "clayton")]
    Clayton,
    #[serde(rename = "frank")]
    Frank,
    /// φ_p(t) = (1 − t)^p. Only a generator on an upper interval for d > 2.
    #[serde(rename = "logistic")]
    Logistic,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::GumbelHougaard => "gumbel",
            Family::Clayton => "clayton",
            Family::Frank => "frank",
            Family::Logistic => "logistic",
        }
    }

    /// Families with a frailty representation (and hence a sampler).
    pub fn is_samplable(self) -> bool {
        !matches!(self, Family::Logistic)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gumbel" | "gumbel-hougaard" | "gumbelhougaard" | "gh" => Ok(Family::GumbelHougaard),
            "clayton" => Ok(Family::Clayton),
            "frank" => Ok(Family::Frank),
            "logistic" => Ok(Family::Logistic),
            other => Err(Error::InvalidParameter(format!("unknown generator family '{other}'"))),
        }
    }
}

/// A parametrized generator, optionally raised to a power.
///
/// `theta` is ϑ for the three copula families and p for the logistic family.
/// `power` is the exponent q of the composite ψ = φ^q and equals 1 for a plain generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GeneratorSpec", into = "GeneratorSpec")]
pub struct Generator {
    family: Family,
    theta: f64,
    power: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct GeneratorSpec {
    family: Family,
    theta: f64,
    #[serde(default = "unit_power", skip_serializing_if = "is_unit_power")]
    power: f64,
}

fn unit_power() -> f64 {
    1.0
}

fn is_unit_power(q: &f64) -> bool {
    *q == 1.0
}

impl TryFrom<GeneratorSpec> for Generator {
    type Error = Error;

    fn try_from(spec: GeneratorSpec) -> Result<Self> {
        Generator::new(spec.family, spec.theta)?.powered(spec.power)
    }
}

impl From<Generator> for GeneratorSpec {
    fn from(g: Generator) -> Self {
        GeneratorSpec { family: g.family, theta: g.theta, power: g.power }
    }
}

/// Value of φ⁻¹ together with a flag telling whether the logistic branch was clamped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Inverse {
    pub value: f64,
    /// Set when y > 1 for a logistic generator: the value is the max(0, ·) branch.
    pub clamped: bool,
}

impl Generator {
    pub fn new(family: Family, theta: f64) -> Result<Self> {
        let ok = theta.is_finite()
            && match family {
                Family::GumbelHougaard | Family::Logistic => theta >= 1.0,
                Family::Clayton | Family::Frank => theta > 0.0,
            };
        if !ok {
            let bound = match family {
                Family::GumbelHougaard | Family::Logistic => ">= 1",
                Family::Clayton | Family::Frank => "> 0",
            };
            return Err(Error::InvalidParameter(format!(
                "{family} generator needs a finite parameter {bound}, got {theta}"
            )));
        }
        Ok(Self { family, theta, power: 1.0 })
    }

    pub fn gumbel(theta: f64) -> Result<Self> {
        Self::new(Family::GumbelHougaard, theta)
    }

    pub fn clayton(theta: f64) -> Result<Self> {
        Self::new(Family::Clayton, theta)
    }

    pub fn frank(theta: f64) -> Result<Self> {
        Self::new(Family::Frank, theta)
    }

    pub fn logistic(p: f64) -> Result<Self> {
        Self::new(Family::Logistic, p)
    }

    /// The composite ψ = φ^q. Powers compose multiplicatively.
    pub fn powered(self, q: f64) -> Result<Self> {
        if !(q.is_finite() && q >= 1.0) {
            return Err(Error::InvalidParameter(format!("power must be finite and >= 1, got {q}")));
        }
        Ok(Self { power: self.power * q, ..self })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    /// The exponent p in lim φ(1 − sx)/φ(1 − s) = x^p.
    pub fn tail_index(&self) -> f64 {
        let base = match self.family {
            Family::GumbelHougaard | Family::Logistic => self.theta,
            Family::Clayton | Family::Frank => 1.0,
        };
        base * self.power
    }

    /// The constant A in lim φ(1 − s)/s^p = A.
    pub fn slope_const(&self) -> Option<f64> {
        let base = match self.family {
            Family::GumbelHougaard | Family::Clayton | Family::Logistic => 1.0,
            Family::Frank => self.theta / self.theta.exp_m1(),
        };
        let a = base.powf(self.power);
        (a.is_finite() && a > 0.0).then_some(a)
    }

    pub fn phi(&self, t: f64) -> Result<f64> {
        if !(t > 0.0 && t <= 1.0) {
            return Err(Error::Domain(format!("phi needs t in (0, 1], got {t}")));
        }
        Ok(self.phi_unchecked(t))
    }

    pub fn phi_prime(&self, t: f64) -> Result<f64> {
        check_open_unit("phi_prime", t)?;
        Ok(self.phi_prime_unchecked(t))
    }

    pub fn phi_second(&self, t: f64) -> Result<f64> {
        check_open_unit("phi_second", t)?;
        Ok(self.phi_second_unchecked(t))
    }

    /// φ⁻¹(y). Logistic arguments above one map to 0 (see [`Generator::phi_inverse_flagged`]).
    pub fn phi_inverse(&self, y: f64) -> Result<f64> {
        self.phi_inverse_flagged(y).map(|inv| inv.value)
    }

    pub fn phi_inverse_flagged(&self, y: f64) -> Result<Inverse> {
        if !(y >= 0.0) {
            return Err(Error::Domain(format!("phi_inverse needs y >= 0, got {y}")));
        }
        Ok(self.inverse_unchecked(y))
    }

    /// 1 − φ⁻¹(y), accurate for small y.
    pub fn phi_inverse_complement(&self, y: f64) -> Result<f64> {
        if !(y >= 0.0) {
            return Err(Error::Domain(format!("phi_inverse_complement needs y >= 0, got {y}")));
        }
        Ok(self.inverse_complement_unchecked(y))
    }

    /// φ(1 − s) for s ∈ [0, 1).
    pub fn phi_tail(&self, s: f64) -> Result<f64> {
        check_tail("phi_tail", s)?;
        Ok(self.compose(self.base_phi(1.0 - s, s)))
    }

    /// φ′(1 − s) for s ∈ (0, 1).
    pub fn phi_prime_tail(&self, s: f64) -> Result<f64> {
        check_tail("phi_prime_tail", s)?;
        if s == 0.0 {
            return Err(Error::Domain("phi_prime_tail needs s > 0".into()));
        }
        let t = 1.0 - s;
        Ok(self.compose_d1(self.base_phi(t, s), self.base_d1(t, s)))
    }

    pub(crate) fn phi_unchecked(&self, t: f64) -> f64 {
        self.compose(self.base_phi(t, 1.0 - t))
    }

    pub(crate) fn phi_prime_unchecked(&self, t: f64) -> f64 {
        let s = 1.0 - t;
        self.compose_d1(self.base_phi(t, s), self.base_d1(t, s))
    }

    pub(crate) fn phi_second_unchecked(&self, t: f64) -> f64 {
        let s = 1.0 - t;
        let q = self.power;
        let d2 = self.base_d2(t, s);
        if q == 1.0 {
            return d2;
        }
        let b = self.base_phi(t, s);
        let d1 = self.base_d1(t, s);
        q * (q - 1.0) * b.powf(q - 2.0) * d1 * d1 + q * b.powf(q - 1.0) * d2
    }

    pub(crate) fn inverse_unchecked(&self, y: f64) -> Inverse {
        if y == 0.0 {
            return Inverse { value: 1.0, clamped: false };
        }
        let y = if self.power == 1.0 { y } else { y.powf(1.0 / self.power) };
        let th = self.theta;
        match self.family {
            Family::GumbelHougaard => Inverse { value: (-root(y, th)).exp(), clamped: false },
            Family::Clayton => Inverse { value: (-(th * y).ln_1p() / th).exp(), clamped: false },
            Family::Frank => Inverse { value: -((-y).exp() * (-th).exp_m1()).ln_1p() / th, clamped: false },
            Family::Logistic => {
                if y > 1.0 {
                    Inverse { value: 0.0, clamped: true }
                } else {
                    Inverse { value: 1.0 - root(y, th), clamped: false }
                }
            }
        }
    }

    pub(crate) fn inverse_complement_unchecked(&self, y: f64) -> f64 {
        if y == 0.0 {
            return 0.0;
        }
        let y = if self.power == 1.0 { y } else { y.powf(1.0 / self.power) };
        let th = self.theta;
        match self.family {
            Family::GumbelHougaard => -(-root(y, th)).exp_m1(),
            Family::Clayton => -(-(th * y).ln_1p() / th).exp_m1(),
            Family::Frank => {
                let scale = th.exp_m1();
                if scale.is_finite() {
                    (scale * -(-y).exp_m1()).ln_1p() / th
                } else {
                    1.0 + ((-y).exp() * (-th).exp_m1()).ln_1p() / th
                }
            }
            Family::Logistic => root(y, th).min(1.0),
        }
    }

    fn compose(&self, b: f64) -> f64 {
        if self.power == 1.0 {
            b
        } else {
            b.powf(self.power)
        }
    }

    fn compose_d1(&self, b: f64, d1: f64) -> f64 {
        let q = self.power;
        if q == 1.0 {
            d1
        } else {
            q * b.powf(q - 1.0) * d1
        }
    }

    // Base generator at t with s = 1 − t supplied separately.
    fn base_phi(&self, t: f64, s: f64) -> f64 {
        let th = self.theta;
        match self.family {
            Family::GumbelHougaard => {
                let l = neg_ln(t, s);
                if th == 1.0 {
                    l
                } else {
                    l.powf(th)
                }
            }
            Family::Clayton => (-th * ln(t, s)).exp_m1() / th,
            Family::Frank => {
                if s < 0.5 {
                    -((-th).exp() * (th * s).exp_m1() / (-th).exp_m1()).ln_1p()
                } else {
                    -((-th * t).exp_m1() / (-th).exp_m1()).ln()
                }
            }
            Family::Logistic => s.powf(th),
        }
    }

    fn base_d1(&self, t: f64, s: f64) -> f64 {
        let th = self.theta;
        match self.family {
            Family::GumbelHougaard => {
                let l = neg_ln(t, s);
                -th * l.powf(th - 1.0) / t
            }
            Family::Clayton => -((-th - 1.0) * ln(t, s)).exp(),
            Family::Frank => -th / (th * t).exp_m1(),
            Family::Logistic => -th * s.powf(th - 1.0),
        }
    }

    fn base_d2(&self, t: f64, s: f64) -> f64 {
        let th = self.theta;
        match self.family {
            Family::GumbelHougaard => {
                let l = neg_ln(t, s);
                th * l.powf(th - 2.0) * (th - 1.0 + l) / (t * t)
            }
            Family::Clayton => (th + 1.0) * ((-th - 2.0) * ln(t, s)).exp(),
            Family::Frank => {
                let m = -(-th * t).exp_m1();
                th * th * (-th * t).exp() / (m * m)
            }
            Family::Logistic => th * (th - 1.0) * s.powf(th - 2.0),
        }
    }
}

fn check_open_unit(what: &str, t: f64) -> Result<()> {
    if t > 0.0 && t < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{what} needs t in (0, 1), got {t}")))
    }
}

fn check_tail(what: &str, s: f64) -> Result<()> {
    if (0.0..1.0).contains(&s) {
        Ok(())
    } else {
        Err(Error::Domain(format!("{what} needs s in [0, 1), got {s}")))
    }
}

fn ln(t: f64, s: f64) -> f64 {
    if t > 0.5 {
        (-s).ln_1p()
    } else {
        t.ln()
    }
}

fn neg_ln(t: f64, s: f64) -> f64 {
    -ln(t, s)
}

fn root(y: f64, p: f64) -> f64 {
    if p == 1.0 {
        y
    } else {
        y.powf(1.0 / p)
    }
}

/// φ(1 − sx)/φ(1 − s) along a grid of s values.
pub fn tail_index_probe(g: &Generator, x: f64, s_grid: &[f64]) -> Result<Vec<f64>> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::Domain(format!("tail index probe needs x > 0, got {x}")));
    }
    s_grid
        .iter()
        .map(|&s| {
            if !(s > 0.0 && s * x < 1.0 && s < 1.0) {
                return Err(Error::Domain(format!("grid point s = {s} leaves (0, 1) at x = {x}")));
            }
            Ok(g.phi_tail(s * x)? / g.phi_tail(s)?)
        })
        .collect()
}

/// (1 − φ⁻¹(sx))/(1 − φ⁻¹(s)), which tends to x^{1/p}.
pub fn inverse_tail_probe(g: &Generator, x: f64, s_grid: &[f64]) -> Result<Vec<f64>> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::Domain(format!("inverse tail probe needs x > 0, got {x}")));
    }
    s_grid
        .iter()
        .map(|&s| {
            if !(s > 0.0) {
                return Err(Error::Domain(format!("grid point s = {s} must be positive")));
            }
            Ok(g.phi_inverse_complement(s * x)? / g.phi_inverse_complement(s)?)
        })
        .collect()
}

/// s = 10^-2, …, 10^-10.
pub fn default_s_grid() -> Vec<f64> {
    (2..=10).map(|k| 10f64.powi(-k)).collect()
}

/// A numerically extrapolated limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitEstimate {
    pub value: f64,
    pub converged: bool,
}

/// Numerical status of the tail-regularity conditions of a generator.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub tail_index: f64,
    pub slope_const: Option<f64>,
    /// lim φ(1 − s)/s^p
    pub c1: LimitEstimate,
    /// −lim φ′(1 − s)/s^{p−1}
    pub c2: LimitEstimate,
    /// −lim sφ′(1 − s)/φ(1 − s)
    pub c3: LimitEstimate,
    pub c1_holds: bool,
    pub c2_holds: bool,
}

/// Two rounds of Richardson extrapolation on values sampled at s, s/r, s/r², …,
/// assuming an error expansion in integer powers of s.
pub fn richardson_limit(values: &[f64], ratio: f64) -> LimitEstimate {
    let mut level: Vec<f64> = values.to_vec();
    for order in 1..=2 {
        if level.len() < 2 {
            break;
        }
        let f = ratio.powi(order);
        level = level.windows(2).map(|w| (f * w[1] - w[0]) / (f - 1.0)).collect();
    }
    match level.as_slice() {
        [] => LimitEstimate { value: f64::NAN, converged: false },
        [only] => LimitEstimate { value: *only, converged: false },
        [.., prev, last] => {
            let converged = last.is_finite() && (last - prev).abs() <= 1e-6 * last.abs().max(1.0);
            LimitEstimate { value: *last, converged }
        }
    }
}

/// Evaluates the tail limits on the default geometric grid.
pub fn condition_report(g: &Generator) -> ConditionReport {
    let p = g.tail_index();
    let grid = default_s_grid();
    let sample = |f: &dyn Fn(f64) -> Result<f64>| -> Vec<f64> {
        grid.iter().map(|&s| f(s).unwrap_or(f64::NAN)).collect()
    };
    let c1 = richardson_limit(&sample(&|s| Ok(g.phi_tail(s)? / s.powf(p))), 10.0);
    let c2 = richardson_limit(&sample(&|s| Ok(-g.phi_prime_tail(s)? / s.powf(p - 1.0))), 10.0);
    let c3 = richardson_limit(&sample(&|s| Ok(-s * g.phi_prime_tail(s)? / g.phi_tail(s)?)), 10.0);
    let c1_holds = c1.converged && c1.value.is_finite() && c1.value > 0.0;
    let c2_holds = c2.converged && c1_holds && ((c2.value - p * c1.value) / (p * c1.value)).abs() < 1e-4;
    ConditionReport { tail_index: p, slope_const: g.slope_const(), c1, c2, c3, c1_holds, c2_holds }
}
