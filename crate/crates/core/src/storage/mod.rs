//! Candidate storage functions and their viscosity subdifferentials.
//!
//! A candidate is anything implementing [`Storage`]: a value map `x -> V(x)`,
//! a regularity tag, and optionally an exact subdifferential oracle and/or a
//! gradient oracle. The built-ins carry closed-form oracles; expression-backed
//! candidates only have a gradient when one is supplied explicitly, and
//! otherwise must go through [`verify_subgradient`].

mod subdiff;
mod verify;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{sign, EvalError, Expr};

pub use subdiff::{Interval, SubdiffSet};
pub use verify::{default_radii, verify_subgradient, SubgradientCheck, DEFAULT_SUBGRADIENT_TOL};

/// Distance under which a query point is snapped onto a built-in kink locus.
pub const KINK_SNAP: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regularity {
    Continuous,
    Lipschitz,
    C1AwayFromOrigin,
    Smooth,
}

impl Regularity {
    pub fn parse(s: &str) -> Option<Regularity> {
        match s {
            "continuous" => Some(Regularity::Continuous),
            "lipschitz" => Some(Regularity::Lipschitz),
            "c1_away_from_origin" => Some(Regularity::C1AwayFromOrigin),
            "smooth" => Some(Regularity::Smooth),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum StorageError {
    #[error("candidate `{0}` has no exact subdifferential or gradient oracle")]
    NoOracle(String),
    #[error("candidate `{name}` expects dimension {expected}, got {got}")]
    Dimension {
        name: String,
        expected: usize,
        got: usize,
    },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// A candidate storage function.
pub trait Storage: Send + Sync + fmt::Debug {
    fn name(&self) -> String;

    /// State dimension, or `None` when the candidate is defined for every `n`.
    fn dim(&self) -> Option<usize>;

    fn value(&self, x: &[f64]) -> Result<f64, StorageError>;

    fn regularity(&self) -> Regularity;

    /// Exact viscosity subdifferential, when known in closed form.
    fn subdiff_oracle(&self, _x: &[f64]) -> Option<SubdiffSet> {
        None
    }

    /// Exact gradient at points of differentiability.
    fn gradient(&self, _x: &[f64]) -> Option<Vec<f64>> {
        None
    }
}

pub type StorageCandidate = Arc<dyn Storage>;

/// Exact subdifferential: the closed-form oracle if present, otherwise the
/// singleton of the gradient oracle.
pub fn subdiff(v: &dyn Storage, x: &[f64]) -> Result<SubdiffSet, StorageError> {
    check_dim(v, x)?;
    if let Some(s) = v.subdiff_oracle(x) {
        return Ok(s);
    }
    if let Some(g) = v.gradient(x) {
        return Ok(SubdiffSet::Singleton(g));
    }
    Err(StorageError::NoOracle(v.name()))
}

pub(crate) fn check_dim(v: &dyn Storage, x: &[f64]) -> Result<(), StorageError> {
    match v.dim() {
        Some(n) if n != x.len() => Err(StorageError::Dimension {
            name: v.name(),
            expected: n,
            got: x.len(),
        }),
        _ => Ok(()),
    }
}

/// Built-in candidates with closed-form subdifferentials.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Builtin {
    /// `2|x1| + 2|x2|`
    V1Scaled,
    /// `|x1| + |x2|`
    V1,
    /// `x1^2 + x2^{2/3}`
    V2,
    /// `max{|x|, 2x - 1}` on the line
    V3Scalar,
    /// `|x|^2` in any dimension
    SqNorm,
}

impl Builtin {
    pub const ALL: [Builtin; 5] = [
        Builtin::V1Scaled,
        Builtin::V1,
        Builtin::V2,
        Builtin::V3Scalar,
        Builtin::SqNorm,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Builtin::V1Scaled => "v1_scaled",
            Builtin::V1 => "v1",
            Builtin::V2 => "v2",
            Builtin::V3Scalar => "v3_scalar",
            Builtin::SqNorm => "sq_norm",
        }
    }

    pub fn from_name(name: &str) -> Option<Builtin> {
        Builtin::ALL.into_iter().find(|b| b.as_str() == name)
    }

    pub fn candidate(self) -> StorageCandidate {
        Arc::new(self)
    }

    fn weighted_l1_subdiff(w: f64, x: &[f64]) -> SubdiffSet {
        SubdiffSet::from_box(
            x.iter()
                .map(|&c| {
                    if c.abs() < KINK_SNAP {
                        Interval::new(-w, w)
                    } else {
                        Interval::point(w * sign(c))
                    }
                })
                .collect(),
        )
    }
}

impl Storage for Builtin {
    fn name(&self) -> String {
        self.as_str().to_string()
    }

    fn dim(&self) -> Option<usize> {
        match self {
            Builtin::V1Scaled | Builtin::V1 | Builtin::V2 => Some(2),
            Builtin::V3Scalar => Some(1),
            Builtin::SqNorm => None,
        }
    }

    fn value(&self, x: &[f64]) -> Result<f64, StorageError> {
        check_dim(self, x)?;
        Ok(match self {
            Builtin::V1Scaled => 2.0 * x[0].abs() + 2.0 * x[1].abs(),
            Builtin::V1 => x[0].abs() + x[1].abs(),
            Builtin::V2 => x[0] * x[0] + x[1].cbrt().powi(2),
            Builtin::V3Scalar => x[0].abs().max(2.0 * x[0] - 1.0),
            Builtin::SqNorm => x.iter().map(|c| c * c).sum(),
        })
    }

    fn regularity(&self) -> Regularity {
        match self {
            Builtin::V1Scaled | Builtin::V1 | Builtin::V3Scalar => Regularity::Lipschitz,
            Builtin::V2 => Regularity::Continuous,
            Builtin::SqNorm => Regularity::Smooth,
        }
    }

    fn subdiff_oracle(&self, x: &[f64]) -> Option<SubdiffSet> {
        if check_dim(self, x).is_err() {
            return None;
        }
        Some(match self {
            Builtin::V1Scaled => Builtin::weighted_l1_subdiff(2.0, x),
            Builtin::V1 => Builtin::weighted_l1_subdiff(1.0, x),
            Builtin::V2 => {
                if x[1].abs() < KINK_SNAP {
                    // |h|^{2/3} / |h| diverges, so every second component qualifies.
                    SubdiffSet::Box(vec![Interval::point(2.0 * x[0]), Interval::real_line()])
                } else {
                    SubdiffSet::Singleton(vec![2.0 * x[0], 2.0 / (3.0 * x[1].cbrt())])
                }
            }
            Builtin::V3Scalar => {
                let t = x[0];
                if t.abs() < KINK_SNAP {
                    SubdiffSet::from_box(vec![Interval::new(-1.0, 1.0)])
                } else if (t - 1.0).abs() < KINK_SNAP {
                    SubdiffSet::from_box(vec![Interval::new(1.0, 2.0)])
                } else if t < 0.0 {
                    SubdiffSet::Singleton(vec![-1.0])
                } else if t < 1.0 {
                    SubdiffSet::Singleton(vec![1.0])
                } else {
                    SubdiffSet::Singleton(vec![2.0])
                }
            }
            Builtin::SqNorm => SubdiffSet::Singleton(x.iter().map(|c| 2.0 * c).collect()),
        })
    }

    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        match self.subdiff_oracle(x)? {
            SubdiffSet::Singleton(g) => Some(g),
            _ => None,
        }
    }
}

/// Candidate given by an expression in `x1..xn`, with an optional gradient
/// given by one expression per coordinate.
#[derive(Clone, Debug)]
pub struct ExprStorage {
    pub label: String,
    pub n: usize,
    pub expr: Expr,
    pub regularity: Regularity,
    pub gradient: Option<Vec<Expr>>,
}

impl ExprStorage {
    pub fn new(label: impl Into<String>, n: usize, expr: Expr, regularity: Regularity) -> ExprStorage {
        ExprStorage {
            label: label.into(),
            n,
            expr,
            regularity,
            gradient: None,
        }
    }

    /// Parses `src` (and optional gradient components) with state dimension `n`.
    pub fn parse(
        src: &str,
        n: usize,
        regularity: Regularity,
        gradient: Option<&[&str]>,
    ) -> Result<ExprStorage, crate::expr::ParseError> {
        let expr = crate::expr::parse(src, n, 0)?;
        let gradient = gradient
            .map(|g| g.iter().map(|s| crate::expr::parse(s, n, 0)).collect::<Result<Vec<_>, _>>())
            .transpose()?;
        Ok(ExprStorage {
            label: src.to_string(),
            n,
            expr,
            regularity,
            gradient,
        })
    }

    pub fn with_gradient(mut self, gradient: Vec<Expr>) -> ExprStorage {
        self.gradient = Some(gradient);
        self
    }
}

impl Storage for ExprStorage {
    fn name(&self) -> String {
        self.label.clone()
    }

    fn dim(&self) -> Option<usize> {
        Some(self.n)
    }

    fn value(&self, x: &[f64]) -> Result<f64, StorageError> {
        check_dim(self, x)?;
        Ok(self.expr.eval(x, &[])?)
    }

    fn regularity(&self) -> Regularity {
        self.regularity
    }

    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        if x.len() != self.n {
            return None;
        }
        let g = self.gradient.as_ref()?;
        g.iter().map(|e| e.eval(x, &[]).ok()).collect()
    }
}

/// `factor * V`, `factor > 0`.
#[derive(Clone, Debug)]
pub struct Scaled {
    pub inner: StorageCandidate,
    pub factor: f64,
}

impl Storage for Scaled {
    fn name(&self) -> String {
        format!("{}*{}", self.factor, self.inner.name())
    }
    fn dim(&self) -> Option<usize> {
        self.inner.dim()
    }
    fn value(&self, x: &[f64]) -> Result<f64, StorageError> {
        Ok(self.factor * self.inner.value(x)?)
    }
    fn regularity(&self) -> Regularity {
        self.inner.regularity()
    }
    fn subdiff_oracle(&self, x: &[f64]) -> Option<SubdiffSet> {
        self.inner.subdiff_oracle(x).map(|s| s.scaled(self.factor))
    }
    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        self.inner
            .gradient(x)
            .map(|g| g.into_iter().map(|c| c * self.factor).collect())
    }
}

/// `V + offset`; oracles are unchanged.
#[derive(Clone, Debug)]
pub struct Shifted {
    pub inner: StorageCandidate,
    pub offset: f64,
}

impl Storage for Shifted {
    fn name(&self) -> String {
        format!("{}+{}", self.inner.name(), self.offset)
    }
    fn dim(&self) -> Option<usize> {
        self.inner.dim()
    }
    fn value(&self, x: &[f64]) -> Result<f64, StorageError> {
        Ok(self.inner.value(x)? + self.offset)
    }
    fn regularity(&self) -> Regularity {
        self.inner.regularity()
    }
    fn subdiff_oracle(&self, x: &[f64]) -> Option<SubdiffSet> {
        self.inner.subdiff_oracle(x)
    }
    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        self.inner.gradient(x)
    }
}
