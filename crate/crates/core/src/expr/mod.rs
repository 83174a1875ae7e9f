//! Scalar arithmetic expressions over state variables `x1..xn` and input
//! variables `u1..um`.
//!
//! The grammar is deliberately small: numeric literals, variables, unary
//! negation, the four binary operators and a fixed set of calls
//! (`abs`, `sign`, `min`, `max`, `sqrt`, `cbrt`, `pow`, `spow`). There is no
//! conditional construct; piecewise functions are written with
//! `min`/`max`/`abs`/`sign`. Fractional powers go through `cbrt` or `pow`, so
//! `pow(cbrt(x), 4)` is the real reading of `x^{4/3}`.

mod parse;

use std::fmt;

use thiserror::Error;

pub use parse::{parse, ParseError};

/// Binary arithmetic operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
        }
    }
}

/// Built-in function names.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Abs,
    Sign,
    Min,
    Max,
    Sqrt,
    Cbrt,
    /// `pow(a, b) = |a|^b`
    Pow,
    /// `spow(a, b) = sign(a) |a|^b`
    Spow,
}

impl Func {
    pub const ALL: [Func; 8] = [
        Func::Abs,
        Func::Sign,
        Func::Min,
        Func::Max,
        Func::Sqrt,
        Func::Cbrt,
        Func::Pow,
        Func::Spow,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Abs => "abs",
            Func::Sign => "sign",
            Func::Min => "min",
            Func::Max => "max",
            Func::Sqrt => "sqrt",
            Func::Cbrt => "cbrt",
            Func::Pow => "pow",
            Func::Spow => "spow",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Abs | Func::Sign | Func::Sqrt | Func::Cbrt => 1,
            Func::Min | Func::Max | Func::Pow | Func::Spow => 2,
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }
}

/// Expression tree. Variable indices are zero-based (`x1` is `X(0)`).
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    X(usize),
    U(usize),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("sqrt of negative number {0}")]
    SqrtOfNegative(f64),
    #[error("variable {0} is not bound (state dimension {1}, input dimension {2})")]
    Unbound(String, usize, usize),
}

/// Sign with `sign(0) = 0`.
#[inline]
pub fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

impl Expr {
    pub fn num(v: f64) -> Expr {
        Expr::Num(v)
    }

    pub fn bin(op: BinOp, a: Expr, b: Expr) -> Expr {
        Expr::Bin(op, Box::new(a), Box::new(b))
    }

    /// Evaluates the tree at state `x` and input `u`.
    pub fn eval(&self, x: &[f64], u: &[f64]) -> Result<f64, EvalError> {
        Ok(match self {
            Expr::Num(v) => *v,
            Expr::X(i) => *x
                .get(*i)
                .ok_or_else(|| EvalError::Unbound(format!("x{}", i + 1), x.len(), u.len()))?,
            Expr::U(i) => *u
                .get(*i)
                .ok_or_else(|| EvalError::Unbound(format!("u{}", i + 1), x.len(), u.len()))?,
            Expr::Neg(a) => -a.eval(x, u)?,
            Expr::Bin(op, a, b) => {
                let a = a.eval(x, u)?;
                let b = b.eval(x, u)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err(EvalError::DivisionByZero);
                        }
                        a / b
                    }
                }
            }
            Expr::Call(f, args) => {
                let a = args[0].eval(x, u)?;
                match f {
                    Func::Abs => a.abs(),
                    Func::Sign => sign(a),
                    Func::Sqrt => {
                        if a < 0.0 {
                            return Err(EvalError::SqrtOfNegative(a));
                        }
                        a.sqrt()
                    }
                    Func::Cbrt => a.cbrt(),
                    Func::Min => a.min(args[1].eval(x, u)?),
                    Func::Max => a.max(args[1].eval(x, u)?),
                    Func::Pow => a.abs().powf(args[1].eval(x, u)?),
                    Func::Spow => sign(a) * a.abs().powf(args[1].eval(x, u)?),
                }
            }
        })
    }

    /// Largest state index referenced plus one (0 when none).
    pub fn state_arity(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |e| {
            if let Expr::X(i) = e {
                n = n.max(i + 1);
            }
        });
        n
    }

    /// Largest input index referenced plus one (0 when none).
    pub fn input_arity(&self) -> usize {
        let mut m = 0;
        self.visit(&mut |e| {
            if let Expr::U(i) = e {
                m = m.max(i + 1);
            }
        });
        m
    }

    fn visit(&self, f: &mut impl FnMut(&Expr)) {
        f(self);
        match self {
            Expr::Num(_) | Expr::X(_) | Expr::U(_) => {}
            Expr::Neg(a) => a.visit(f),
            Expr::Bin(_, a, b) => {
                a.visit(f);
                b.visit(f);
            }
            Expr::Call(_, args) => args.iter().for_each(|a| a.visit(f)),
        }
    }
}

/// Fully parenthesized rendering; re-parsing yields the same tree for any tree
/// produced by [`parse`].
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => {
                if *v < 0.0 {
                    write!(f, "(-{})", -v)
                } else {
                    write!(f, "{v:?}")
                }
            }
            Expr::X(i) => write!(f, "x{}", i + 1),
            Expr::U(i) => write!(f, "u{}", i + 1),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Bin(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (k, a) in args.iter().enumerate() {
                    if k > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(src: &str, n: usize, m: usize, x: &[f64], u: &[f64]) -> f64 {
        parse(src, n, m).unwrap().eval(x, u).unwrap()
    }

    #[test]
    fn sigma1_first_component_vanishes_at_unit_point() {
        let v = ev("abs(x1)*(-x1+abs(x2)+u1)", 2, 2, &[1.0, 1.0], &[0.0, 0.0]);
        assert_eq!(v, 0.0);
    }

    #[test]
    fn identity() {
        for c in [-3.5, 0.0, 2.25] {
            assert_eq!(ev("x1", 1, 0, &[c], &[]), c);
        }
    }

    #[test]
    fn cusp_system_second_component() {
        let v = ev("3*pow(cbrt(x2),4)*(-x1-x2+u2)", 2, 2, &[1.0, 1.0], &[0.0, 0.0]);
        assert_eq!(v, -6.0);
    }

    #[test]
    fn builtin_semantics() {
        assert_eq!(ev("sign(x1)", 1, 0, &[-2.0], &[]), -1.0);
        assert_eq!(ev("sign(x1)", 1, 0, &[0.0], &[]), 0.0);
        assert_eq!(ev("min(u1,max(x1,0))", 1, 1, &[5.0], &[3.0]), 3.0);
        assert!((ev("pow(cbrt(x1),2)", 1, 0, &[-8.0], &[]) - 4.0).abs() < 1e-12);
        assert_eq!(ev("spow(x1, 3)", 1, 0, &[-2.0], &[]), -8.0);
        assert_eq!(ev("pow(x1, 3)", 1, 0, &[-2.0], &[]), 8.0);
        assert_eq!(ev("cbrt(x1)", 1, 0, &[-27.0], &[]), -3.0);
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(ev("2+3*4", 0, 0, &[], &[]), 14.0);
        assert_eq!(ev("8-3-2", 0, 0, &[], &[]), 3.0);
        assert_eq!(ev("8/4/2", 0, 0, &[], &[]), 1.0);
        assert_eq!(ev("-2*3", 0, 0, &[], &[]), -6.0);
        assert_eq!(ev("(1+2)*3", 0, 0, &[], &[]), 9.0);
        assert_eq!(ev("--2", 0, 0, &[], &[]), 2.0);
        assert_eq!(ev("1.5e2 + 2.5E-1", 0, 0, &[], &[]), 150.25);
    }

    #[test]
    fn evaluation_errors() {
        let e = parse("1/x1", 1, 0).unwrap();
        assert_eq!(e.eval(&[0.0], &[]), Err(EvalError::DivisionByZero));
        let e = parse("sqrt(x1)", 1, 0).unwrap();
        assert!(matches!(e.eval(&[-1.0], &[]), Err(EvalError::SqrtOfNegative(_))));
        let e = parse("x2", 2, 0).unwrap();
        assert!(matches!(e.eval(&[1.0], &[]), Err(EvalError::Unbound(..))));
    }

    #[test]
    fn arity_helpers() {
        let e = parse("x3*u2 + x1", 3, 2).unwrap();
        assert_eq!(e.state_arity(), 3);
        assert_eq!(e.input_arity(), 2);
    }

    #[test]
    fn display_round_trip_examples() {
        for src in [
            "abs(x1)*(-x1+abs(x2)+u1)",
            "3*pow(cbrt(x2),4)*(-x1-x2+u2)",
            "max(abs(x1), 2*x1-1)",
            "-(x1 - 0.1) / 7e-3",
            "spow(u1, 2.5) - sign(x2)",
        ] {
            let e = parse(src, 2, 2).unwrap();
            let again = parse(&e.to_string(), 2, 2).unwrap();
            assert_eq!(e, again, "{src} -> {e}");
        }
    }
}
