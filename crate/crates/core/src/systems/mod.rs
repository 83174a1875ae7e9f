//! Control systems over expression-defined vector fields.
//!
//! Three shapes are supported: input-affine `ẋ = g0(x) + Σ u_i g_i(x)`,
//! power-affine `ẋ = g0(x) + Σ φ(u_i) g_i(x)` with `φ(r) = |r|^p` or
//! `sign(r)|r|^p`, and general `ẋ = F(x, u)`. Inputs range over all of `R^m`.

pub mod sigma3;
pub mod zoo;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{self, sign, EvalError, Expr, ParseError};

#[derive(Clone, Debug, PartialEq, Error)]
pub enum SystemError {
    #[error("{what}: expected dimension {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("invalid system: {0}")]
    Invalid(String),
    #[error("expression `{src}`: {err}")]
    Parse { src: String, err: ParseError },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phi {
    AbsPow,
    SignedPow,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AffineSystem {
    pub name: String,
    pub n: usize,
    pub m: usize,
    pub g0: Vec<Expr>,
    /// `g[i]` is the i-th input field, `n` components each.
    pub g: Vec<Vec<Expr>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PowerAffineSystem {
    pub base: AffineSystem,
    pub p: f64,
    pub phi: Phi,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneralSystem {
    pub name: String,
    pub n: usize,
    pub m: usize,
    pub f: Vec<Expr>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum System {
    Affine(AffineSystem),
    PowerAffine(PowerAffineSystem),
    General(GeneralSystem),
}

fn parse_all(srcs: &[&str], n: usize, m: usize) -> Result<Vec<Expr>, SystemError> {
    srcs.iter()
        .map(|s| {
            expr::parse(s, n, m).map_err(|err| SystemError::Parse {
                src: s.to_string(),
                err,
            })
        })
        .collect()
}

fn eval_all(exprs: &[Expr], x: &[f64], u: &[f64]) -> Result<Vec<f64>, EvalError> {
    exprs.iter().map(|e| e.eval(x, u)).collect()
}

impl AffineSystem {
    pub fn new(name: impl Into<String>, n: usize, m: usize, g0: Vec<Expr>, g: Vec<Vec<Expr>>) -> Result<AffineSystem, SystemError> {
        let sys = AffineSystem {
            name: name.into(),
            n,
            m,
            g0,
            g,
        };
        sys.validate()?;
        Ok(sys)
    }

    /// Builds a system from expression strings (state variables only).
    pub fn parse(name: &str, n: usize, m: usize, g0: &[&str], g: &[&[&str]]) -> Result<AffineSystem, SystemError> {
        let g0 = parse_all(g0, n, 0)?;
        let g = g.iter().map(|gi| parse_all(gi, n, 0)).collect::<Result<Vec<_>, _>>()?;
        AffineSystem::new(name, n, m, g0, g)
    }

    fn validate(&self) -> Result<(), SystemError> {
        if self.g0.len() != self.n {
            return Err(SystemError::Invalid(format!(
                "drift has {} components, state dimension is {}",
                self.g0.len(),
                self.n
            )));
        }
        if self.g.len() != self.m {
            return Err(SystemError::Invalid(format!(
                "{} input fields given, input dimension is {}",
                self.g.len(),
                self.m
            )));
        }
        for (i, gi) in self.g.iter().enumerate() {
            if gi.len() != self.n {
                return Err(SystemError::Invalid(format!(
                    "input field {} has {} components, state dimension is {}",
                    i + 1,
                    gi.len(),
                    self.n
                )));
            }
        }
        for e in self.g0.iter().chain(self.g.iter().flatten()) {
            if e.input_arity() > 0 {
                return Err(SystemError::Invalid(format!("vector field `{e}` depends on the input")));
            }
            if e.state_arity() > self.n {
                return Err(SystemError::Invalid(format!("`{e}` references a state beyond x{}", self.n)));
            }
        }
        Ok(())
    }

    pub fn drift(&self, x: &[f64]) -> Result<Vec<f64>, EvalError> {
        eval_all(&self.g0, x, &[])
    }

    pub fn input_field(&self, i: usize, x: &[f64]) -> Result<Vec<f64>, EvalError> {
        eval_all(&self.g[i], x, &[])
    }

    /// `(g0(x), [g_1(x), ..., g_m(x)])`
    pub fn fields(&self, x: &[f64]) -> Result<(Vec<f64>, Vec<Vec<f64>>), EvalError> {
        let g0 = self.drift(x)?;
        let g = (0..self.m).map(|i| self.input_field(i, x)).collect::<Result<Vec<_>, _>>()?;
        Ok((g0, g))
    }
}

impl PowerAffineSystem {
    pub fn new(base: AffineSystem, p: f64, phi: Phi) -> Result<PowerAffineSystem, SystemError> {
        if !(p >= 1.0 && p.is_finite()) {
            return Err(SystemError::Invalid(format!("exponent p = {p} must be a finite real >= 1")));
        }
        Ok(PowerAffineSystem { base, p, phi })
    }

    /// `φ(r)` with `φ(0) = 0`.
    pub fn phi(&self, r: f64) -> f64 {
        phi_value(self.phi, self.p, r)
    }
}

pub fn phi_value(phi: Phi, p: f64, r: f64) -> f64 {
    match phi {
        Phi::AbsPow => r.abs().powf(p),
        Phi::SignedPow => sign(r) * r.abs().powf(p),
    }
}

impl GeneralSystem {
    pub fn new(name: impl Into<String>, n: usize, m: usize, f: Vec<Expr>) -> Result<GeneralSystem, SystemError> {
        if f.len() != n {
            return Err(SystemError::Invalid(format!("F has {} components, state dimension is {n}", f.len())));
        }
        for e in &f {
            if e.state_arity() > n || e.input_arity() > m {
                return Err(SystemError::Invalid(format!("`{e}` references a variable out of range")));
            }
        }
        Ok(GeneralSystem {
            name: name.into(),
            n,
            m,
            f,
        })
    }

    pub fn parse(name: &str, n: usize, m: usize, f: &[&str]) -> Result<GeneralSystem, SystemError> {
        GeneralSystem::new(name, n, m, parse_all(f, n, m)?)
    }
}

/// View of a system as `g0 + Σ φ(u_i) g_i`; input-affine systems are the
/// case `p = 1` with the signed reading.
#[derive(Clone, Copy, Debug)]
pub struct PowerView<'a> {
    pub base: &'a AffineSystem,
    pub p: f64,
    pub phi: Phi,
}

impl PowerView<'_> {
    pub fn phi(&self, r: f64) -> f64 {
        phi_value(self.phi, self.p, r)
    }

    pub fn is_affine(&self) -> bool {
        self.p == 1.0 && self.phi == Phi::SignedPow
    }
}

impl System {
    pub fn name(&self) -> &str {
        match self {
            System::Affine(s) => &s.name,
            System::PowerAffine(s) => &s.base.name,
            System::General(s) => &s.name,
        }
    }

    pub fn n(&self) -> usize {
        match self {
            System::Affine(s) => s.n,
            System::PowerAffine(s) => s.base.n,
            System::General(s) => s.n,
        }
    }

    pub fn m(&self) -> usize {
        match self {
            System::Affine(s) => s.m,
            System::PowerAffine(s) => s.base.m,
            System::General(s) => s.m,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            System::Affine(_) => "affine",
            System::PowerAffine(_) => "power_affine",
            System::General(_) => "general",
        }
    }

    pub fn as_affine(&self) -> Option<&AffineSystem> {
        match self {
            System::Affine(s) => Some(s),
            _ => None,
        }
    }

    pub fn power_view(&self) -> Option<PowerView<'_>> {
        match self {
            System::Affine(s) => Some(PowerView {
                base: s,
                p: 1.0,
                phi: Phi::SignedPow,
            }),
            System::PowerAffine(s) => Some(PowerView {
                base: &s.base,
                p: s.p,
                phi: s.phi,
            }),
            System::General(_) => None,
        }
    }

    fn check_dims(&self, x: &[f64], u: &[f64]) -> Result<(), SystemError> {
        if x.len() != self.n() {
            return Err(SystemError::Dimension {
                what: "state",
                expected: self.n(),
                got: x.len(),
            });
        }
        if u.len() != self.m() {
            return Err(SystemError::Dimension {
                what: "input",
                expected: self.m(),
                got: u.len(),
            });
        }
        Ok(())
    }

    /// `ẋ` at state `x` under input value `u`.
    pub fn dynamics(&self, x: &[f64], u: &[f64]) -> Result<Vec<f64>, SystemError> {
        self.check_dims(x, u)?;
        match self {
            System::General(s) => Ok(eval_all(&s.f, x, u)?),
            _ => {
                let view = self.power_view().expect("affine-like");
                let mut out = view.base.drift(x)?;
                for (i, &ui) in u.iter().enumerate() {
                    let c = if view.is_affine() { ui } else { view.phi(ui) };
                    if c == 0.0 {
                        continue;
                    }
                    for (o, e) in out.iter_mut().zip(&view.base.g[i]) {
                        *o += c * e.eval(x, &[])?;
                    }
                }
                Ok(out)
            }
        }
    }

    /// Drift plus input fields for affine-like systems, evaluated once.
    pub fn fields(&self, x: &[f64]) -> Option<Result<(Vec<f64>, Vec<Vec<f64>>), SystemError>> {
        let view = self.power_view()?;
        if x.len() != self.n() {
            return Some(Err(SystemError::Dimension {
                what: "state",
                expected: self.n(),
                got: x.len(),
            }));
        }
        Some(view.base.fields(x).map_err(SystemError::from))
    }
}
