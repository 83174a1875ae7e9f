//! Native implementation of the scalar non-affine example.
//!
//! `φ(s,t) = sign(s) max{min{(|s|-t)/2, |s|}, 0}`,
//! `ψ(a,b) = (φ(b-a, b+a-2) + (b-a)) / 2`,
//! `f(x,u) = (|u|+x) ψ(x,|u|)` for `x >= 0` and `x² + |u| ψ(0,|u|)` for `x < 0`.

use crate::expr::sign;

pub fn phi(s: f64, t: f64) -> f64 {
    sign(s) * (0.5 * (s.abs() - t)).min(s.abs()).max(0.0)
}

pub fn psi(a: f64, b: f64) -> f64 {
    0.5 * (phi(b - a, b + a - 2.0) + (b - a))
}

pub fn f(x: f64, u: f64) -> f64 {
    let au = u.abs();
    if x >= 0.0 {
        (au + x) * psi(x, au)
    } else {
        x * x + au * psi(0.0, au)
    }
}

pub const PHI_SRC: &str = "sign(S)*max(min(0.5*(abs(S)-(T)),abs(S)),0)";

/// DSL source for `f`, built only from `min`, `max`, `abs`, `sign`.
pub fn f_source() -> String {
    let phi = |s: &str, t: &str| PHI_SRC.replace('S', &format!("({s})")).replace('T', t);
    let psi = |a: &str, b: &str| format!("0.5*({}+(({b})-({a})))", phi(&format!("({b})-({a})"), &format!("({b})+({a})-2")));
    let au = "abs(u1)";
    let nonneg = "(1-max(-sign(x1),0))";
    let neg = "max(-sign(x1),0)";
    format!(
        "{nonneg}*(({au}+x1)*{}) + {neg}*(x1*x1+{au}*{})",
        psi("x1", au),
        psi("0", au)
    )
}
