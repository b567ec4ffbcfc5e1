//! D-norms: the logistic family, the sup norm and the sum norm.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormKind {
    /// (Σ|x_i|^q)^{1/q}, q ≥ 1.
    Logistic(f64),
    /// max |x_i|: complete dependence.
    Sup,
    /// Σ|x_i|: independence.
    Sum,
}

/// A D-norm on R^d.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DNormSpec", into = "DNormSpec")]
pub struct DNorm {
    kind: NormKind,
    dim: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct DNormSpec {
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    q: Option<f64>,
    d: usize,
}

impl TryFrom<DNormSpec> for DNorm {
    type Error = Error;

    fn try_from(spec: DNormSpec) -> Result<Self> {
        let kind = match spec.kind.to_ascii_lowercase().as_str() {
            "logistic" => NormKind::Logistic(
                spec.q.ok_or_else(|| Error::InvalidParameter("logistic norm needs q".into()))?,
            ),
            "sup" | "max" => NormKind::Sup,
            "sum" | "l1" => NormKind::Sum,
            other => return Err(Error::InvalidParameter(format!("unknown D-norm kind '{other}'"))),
        };
        DNorm::new(kind, spec.d)
    }
}

impl From<DNorm> for DNormSpec {
    fn from(n: DNorm) -> Self {
        let (kind, q) = match n.kind {
            NormKind::Logistic(q) => ("logistic", Some(q)),
            NormKind::Sup => ("sup", None),
            NormKind::Sum => ("sum", None),
        };
        DNormSpec { kind: kind.to_string(), q, d: n.dim }
    }
}

impl DNorm {
    pub fn new(kind: NormKind, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("D-norm dimension must be positive".into()));
        }
        if let NormKind::Logistic(q) = kind {
            if !(q.is_finite() && q >= 1.0) {
                return Err(Error::InvalidParameter(format!("logistic norm needs finite q >= 1, got {q}")));
            }
        }
        Ok(Self { kind, dim })
    }

    pub fn sum(dim: usize) -> Result<Self> {
        Self::new(NormKind::Sum, dim)
    }

    pub fn sup(dim: usize) -> Result<Self> {
        Self::new(NormKind::Sup, dim)
    }

    pub fn logistic(q: f64, dim: usize) -> Result<Self> {
        Self::new(NormKind::Logistic(q), dim)
    }

    pub fn kind(&self) -> NormKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        Ok(self.eval_unchecked(x))
    }

    pub(crate) fn eval_unchecked(&self, x: &[f64]) -> f64 {
        match self.kind {
            NormKind::Sum => x.iter().map(|v| v.abs()).sum(),
            NormKind::Sup => x.iter().fold(0.0, |m, v| m.max(v.abs())),
            NormKind::Logistic(1.0) => x.iter().map(|v| v.abs()).sum(),
            NormKind::Logistic(q) => {
                // Scale by the largest magnitude so |x_i|^q cannot overflow.
                let m = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                if m == 0.0 || !m.is_finite() {
                    return m;
                }
                let s: f64 = x.iter().map(|v| (v.abs() / m).powf(q)).sum();
                m * s.powf(1.0 / q)
            }
        }
    }

    /// The D-norm x ↦ ‖(|x_1|^p, …, |x_d|^p)‖^{1/p}, expressed in closed form.
    ///
    /// Logistic(q) becomes Logistic(pq), the sum norm becomes Logistic(p) and the sup
    /// norm is unchanged.
    pub fn power_transform(&self, p: f64) -> Result<DNorm> {
        if !(p.is_finite() && p >= 1.0) {
            return Err(Error::InvalidParameter(format!("power transform needs p >= 1, got {p}")));
        }
        if p == 1.0 {
            return Ok(*self);
        }
        let kind = match self.kind {
            NormKind::Logistic(q) => NormKind::Logistic(p * q),
            NormKind::Sum => NormKind::Logistic(p),
            NormKind::Sup => NormKind::Sup,
        };
        DNorm::new(kind, self.dim)
    }

    /// Literal evaluation of ‖(|x_1|^p, …, |x_d|^p)‖^{1/p}, without the closed-form reduction.
    pub fn eval_powered(&self, x: &[f64], p: f64) -> Result<f64> {
        if !(p.is_finite() && p >= 1.0) {
            return Err(Error::InvalidParameter(format!("power transform needs p >= 1, got {p}")));
        }
        let m = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if m == 0.0 {
            return self.eval(x);
        }
        let powered: Vec<f64> = x.iter().map(|v| (v.abs() / m).powf(p)).collect();
        Ok(m * self.eval(&powered)?.powf(1.0 / p))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let n = DNorm::logistic(2.0, 2).unwrap();
        assert!((n.eval(&[-3.0, -4.0]).unwrap() - 5.0).abs() < 1e-15);
        assert_eq!(DNorm::sup(3).unwrap().eval(&[-1.0, -0.2, -0.7]).unwrap(), 1.0);
        let sup = DNorm::sup(2).unwrap().power_transform(2.0).unwrap();
        assert_eq!(sup.eval(&[-2.0, -1.0]).unwrap(), 2.0);
        assert_eq!(DNorm::sup(2).unwrap().eval_powered(&[-2.0, -1.0], 2.0).unwrap(), 2.0);
    }

    #[test]
    fn unit_vectors_have_unit_norm() {
        for n in [DNorm::sum(4).unwrap(), DNorm::sup(4).unwrap(), DNorm::logistic(3.5, 4).unwrap()] {
            for i in 0..4 {
                let mut e = vec![0.0; 4];
                e[i] = 1.0;
                assert_eq!(n.eval(&e).unwrap(), 1.0);
            }
        }
    }

    #[test]
    fn dimension_mismatch() {
        let n = DNorm::sum(3).unwrap();
        assert_eq!(n.eval(&[1.0, 2.0]), Err(Error::DimensionMismatch { expected: 3, got: 2 }));
    }

    #[test]
    fn invalid_parameters() {
        assert!(DNorm::logistic(0.9, 2).is_err());
        assert!(DNorm::sum(0).is_err());
        assert!(DNorm::sum(2).unwrap().power_transform(0.5).is_err());
    }

    #[test]
    fn large_q_does_not_overflow() {
        let n = DNorm::logistic(60.0, 3).unwrap();
        let v = n.eval(&[1e10, 2e10, 3e10]).unwrap();
        assert!(v.is_finite() && (3e10..3.0001e10).contains(&v));
    }

    #[test]
    fn power_transform_identity_and_sum() {
        let n = DNorm::logistic(2.0, 3).unwrap();
        assert_eq!(n.power_transform(1.0).unwrap(), n);
        assert_eq!(DNorm::sum(3).unwrap().power_transform(2.5).unwrap().kind(), NormKind::Logistic(2.5));
        assert_eq!(n.power_transform(3.0).unwrap().kind(), NormKind::Logistic(6.0));
    }

    #[test]
    fn serde_shape() {
        let n = DNorm::logistic(2.0, 3).unwrap();
        assert_eq!(serde_json::to_string(&n).unwrap(), r#"{"kind":"logistic","q":2.0,"d":3}"#);
        let s: DNorm = serde_json::from_str(r#"{"kind":"sup","d":2}"#).unwrap();
        assert_eq!(s, DNorm::sup(2).unwrap());
        assert!(serde_json::from_str::<DNorm>(r#"{"kind":"logistic","d":2}"#).is_err());
    }
}
