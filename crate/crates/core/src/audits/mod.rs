//! Numerical audits of the inequalities that nonexistence arguments derive
//! from a hypothetical witness.
//!
//! An audit never proves a nonexistence claim. `ObstructionVerified` means the
//! derived inequalities hold numerically for the given candidate, so the
//! argument's conclusion applies to it; `ViolationFound` means the candidate
//! is not a witness at all, with an explicit failing point.

mod sigma3;

use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::hji::{self, norm2, HjiError, Region, ResidualMode, WitnessOptions};
use crate::storage::{Interval, Storage, StorageError};
use crate::systems::{zoo, SystemError};

pub use sigma3::{verify_sigma3_pieces, PieceDefects, PIECE_INEQ_TOL};

/// Tolerance for "an inequality fails": residuals must exceed this.
pub const AUDIT_TOL: f64 = 1e-9;

/// Offsets `10^{-k}`, `k = 3..6`, for one-sided limits.
pub fn default_h_seq() -> Vec<f64> {
    vec![1e-3, 1e-4, 1e-5, 1e-6]
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum AuditError {
    #[error("candidate `{0}` has no gradient oracle")]
    GradientMissing(String),
    #[error("invalid audit input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Hji(#[from] HjiError),
    #[error(transparent)]
    Storage(#[from] StorageError),
    #[error(transparent)]
    System(#[from] SystemError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AuditKind {
    ViolationFound,
    ObstructionVerified,
    Inconclusive,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct AuditPoint {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct AuditReport {
    pub audit: &'static str,
    pub candidate: String,
    pub kind: AuditKind,
    pub witness_point: Option<AuditPoint>,
    pub detail: Value,
    /// The inequality the audit evaluates.
    pub mechanizes: &'static str,
    /// What follows for the candidate when the obstruction is verified.
    pub conclusion: &'static str,
}

impl AuditReport {
    /// Exit-code convention: obstruction 0, violation 1, inconclusive 2.
    pub fn exit_code(&self) -> i32 {
        match self.kind {
            AuditKind::ObstructionVerified => 0,
            AuditKind::ViolationFound => 1,
            AuditKind::Inconclusive => 2,
        }
    }
}

fn require_gradient(w: &dyn Storage, x: &[f64]) -> Result<Vec<f64>, AuditError> {
    w.gradient(x).ok_or_else(|| AuditError::GradientMissing(w.name()))
}

/// Linear extrapolation to `h = 0` from the two smallest offsets.
fn extrapolate(samples: &[(f64, f64)]) -> f64 {
    match samples {
        [] => f64::NAN,
        [(_, v)] => *v,
        [.., (h1, v1), (h2, v2)] => v2 - h2 * (v1 - v2) / (h1 - h2),
    }
}

/// `true` when the values never move against one direction by more than `tol`.
fn is_monotone(values: &[f64], tol: f64) -> bool {
    let up = values.windows(2).all(|w| w[1] >= w[0] - tol);
    let down = values.windows(2).all(|w| w[1] <= w[0] + tol);
    up || down
}

fn violation(audit: &'static str, candidate: String, x: Vec<f64>, u: Vec<f64>, detail: Value, mechanizes: &'static str, conclusion: &'static str) -> AuditReport {
    AuditReport {
        audit,
        candidate,
        kind: AuditKind::ViolationFound,
        witness_point: Some(AuditPoint {
            x: Some(x),
            u: Some(u),
            t: None,
        }),
        detail,
        mechanizes,
        conclusion,
    }
}

const SIGMA1_AXIS: &str = "W_x1(a,x2) - sign(x2) W_x2(a,x2) <= 0 near the x1-axis, from u = (x1,|x2|) where |u| = |x| and the supply vanishes";
const SIGMA1_CONCLUSION: &str = "W_x1(a,0) <= 0 for a > 0: W(.,0) is nonincreasing, so W is not proper, and with W(0) = 0 it is not positive definite";

/// One-sided limits of `W_x1 ∓ W_x2` at `(a, 0±)`, extrapolated from `x2 = ±h`.
#[derive(Clone, Debug, Serialize)]
pub struct AxisLimits {
    pub a: f64,
    /// `(h, W_x1(a,h) - W_x2(a,h))`
    pub upper: Vec<(f64, f64)>,
    /// `(h, W_x1(a,-h) + W_x2(a,-h))`
    pub lower: Vec<(f64, f64)>,
    pub upper_limit: f64,
    pub lower_limit: f64,
}

pub fn sigma1_axis_limits(w: &dyn Storage, a: f64, h_seq: &[f64]) -> Result<AxisLimits, AuditError> {
    let mut upper = Vec::new();
    let mut lower = Vec::new();
    for &h in h_seq {
        let gp = require_gradient(w, &[a, h])?;
        let gm = require_gradient(w, &[a, -h])?;
        upper.push((h, gp[0] - gp[1]));
        lower.push((h, gm[0] + gm[1]));
    }
    Ok(AxisLimits {
        a,
        upper_limit: extrapolate(&upper),
        lower_limit: extrapolate(&lower),
        upper,
        lower,
    })
}

/// Falsifies `w` as a gain-1 witness of sigma1, or checks the axis inequalities
/// that any C1 witness must satisfy.
pub fn audit_sigma1_axis(w: &dyn Storage, a_samples: &[f64], limit_tol: f64, region: &Region) -> Result<AuditReport, AuditError> {
    if a_samples.iter().any(|a| !(*a > 0.0)) {
        return Err(AuditError::Invalid("axis samples must be positive".into()));
    }
    // a C1 candidate has a gradient on the axis as well
    for &a in a_samples {
        require_gradient(w, &[a, 0.0])?;
    }
    let sys = zoo::sigma1();
    let rep = hji::check_witness(&sys, w, 1.0, region, &WitnessOptions::default())?;
    if !rep.passed() {
        let detail = json!({
            "max_residual": rep.max_residual,
            "zeta": rep.worst_zeta,
            "points_checked": rep.points_checked,
        });
        return Ok(violation("sigma1_axis", w.name(), rep.worst_x, rep.worst_u, detail, SIGMA1_AXIS, SIGMA1_CONCLUSION));
    }
    let mut limits = Vec::new();
    for &a in a_samples {
        limits.push(sigma1_axis_limits(w, a, &default_h_seq())?);
    }
    let holds = limits.iter().all(|l| l.upper_limit <= limit_tol && l.lower_limit <= limit_tol);
    let w0 = w.value(&[0.0, 0.0])?;
    // the positive-definiteness half of the conclusion presumes W >= 0 and W(0) = 0
    let mut w_min = w0;
    for x in region.points() {
        w_min = w_min.min(w.value(&x)?);
    }
    let axis_values: Vec<(f64, f64)> = a_samples
        .iter()
        .map(|&a| w.value(&[a, 0.0]).map(|v| (a, v)))
        .collect::<Result<_, _>>()?;
    Ok(AuditReport {
        audit: "sigma1_axis",
        candidate: w.name(),
        kind: if holds { AuditKind::ObstructionVerified } else { AuditKind::Inconclusive },
        witness_point: None,
        detail: json!({
            "max_residual": rep.max_residual,
            "limits": limits,
            "w_at_origin": w0,
            "w_min_on_region": w_min,
            "positive_definiteness_branch_applies": w0 == 0.0 && w_min >= 0.0,
            "axis_values": axis_values,
        }),
        mechanizes: SIGMA1_AXIS,
        conclusion: SIGMA1_CONCLUSION,
    })
}

/// `t ↦ (a t, (a² - (a t)²)^{3/2})`, running from `(0, a³)` to `(a, 0)`.
pub fn sigma2_curve(a: f64, t: f64) -> [f64; 2] {
    [a * t, (a * a - (a * t).powi(2)).max(0.0).powf(1.5)]
}

pub fn sigma2_curve_velocity(a: f64, t: f64) -> [f64; 2] {
    let s = (a * a - (a * t).powi(2)).max(0.0);
    [a, -3.0 * a * a * t * s.sqrt()]
}

/// `β(t) = (a² - (a t)²)^{3/2} / a`.
pub fn sigma2_beta(a: f64, t: f64) -> f64 {
    (a * a - (a * t).powi(2)).max(0.0).powf(1.5) / a
}

/// The input-free part of the sigma2 drift, `g(x) = (x2, -3 x1 x2^{4/3})`.
pub fn sigma2_g(x: &[f64]) -> [f64; 2] {
    [x[1], -3.0 * x[0] * x[1].cbrt().powi(4)]
}

/// `g(x) + h(x,u)` with `h(x,u) = (u1 - x1, 3 x2^{4/3} (u2 - x2))`.
pub fn sigma2_h(x: &[f64], u: &[f64]) -> [f64; 2] {
    [u[0] - x[0], 3.0 * x[1].cbrt().powi(4) * (u[1] - x[1])]
}

const CURVE_MONOTONE: &str = "V is nonincreasing along the orbit t -> (a t, (a^2 - (a t)^2)^(3/2)) of g, from zeta.g <= 0 at u = x where h(x,x) = 0";
const CURVE_CONCLUSION: &str = "V(a,0) <= V(0,a^3) for every a > 0 at which V(.,0) is differentiable: V decreases along the x1-axis, so a locally Lipschitz V is not proper nor positive definite";

/// Checks that `V` does not increase along the sigma2 orbit through `(a, 0)`.
pub fn audit_curve_monotone(v: &dyn Storage, a: f64, t_grid: &[f64]) -> Result<AuditReport, AuditError> {
    if !(a > 0.0) {
        return Err(AuditError::Invalid(format!("curve parameter a must be positive, got {a}")));
    }
    if t_grid.iter().any(|t| !(0.0..=1.0).contains(t)) || t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(AuditError::Invalid("t grid must be increasing within [0, 1]".into()));
    }
    let values: Vec<f64> = t_grid
        .iter()
        .map(|&t| v.value(&sigma2_curve(a, t)))
        .collect::<Result<_, _>>()?;
    if values.len() < 2 {
        return Ok(AuditReport {
            audit: "curve_monotone",
            candidate: v.name(),
            kind: AuditKind::Inconclusive,
            witness_point: None,
            detail: json!({ "a": a, "values": values }),
            mechanizes: CURVE_MONOTONE,
            conclusion: CURVE_CONCLUSION,
        });
    }
    // largest rise over the running minimum
    let mut run_min = values[0];
    let mut best = (f64::NEG_INFINITY, 0usize, 0usize);
    let mut argmin = 0;
    for (k, &val) in values.iter().enumerate().skip(1) {
        if val - run_min > best.0 {
            best = (val - run_min, k, argmin);
        }
        if val < run_min {
            run_min = val;
            argmin = k;
        }
    }
    let (increase, k, from) = best;
    let samples: Vec<(f64, f64)> = t_grid.iter().copied().zip(values.iter().copied()).collect();
    if increase > AUDIT_TOL {
        return Ok(AuditReport {
            audit: "curve_monotone",
            candidate: v.name(),
            kind: AuditKind::ViolationFound,
            witness_point: Some(AuditPoint {
                x: Some(sigma2_curve(a, t_grid[k]).to_vec()),
                u: None,
                t: Some(t_grid[k]),
            }),
            detail: json!({
                "a": a,
                "increase": increase,
                "from_t": t_grid[from],
                "samples": samples,
            }),
            mechanizes: CURVE_MONOTONE,
            conclusion: CURVE_CONCLUSION,
        });
    }
    let start = v.value(&sigma2_curve(a, 0.0))?;
    let end = v.value(&[a, 0.0])?;
    Ok(AuditReport {
        audit: "curve_monotone",
        candidate: v.name(),
        kind: AuditKind::ObstructionVerified,
        witness_point: None,
        detail: json!({
            "a": a,
            "max_increase": increase.max(0.0),
            "value_at_x2_axis": start,
            "value_at_x1_axis": end,
            "samples": samples,
        }),
        mechanizes: CURVE_MONOTONE,
        conclusion: CURVE_CONCLUSION,
    })
}

/// `max_t |g(γ(t)) - β(t) γ'(t)|` over the grid.
pub fn audit_curve_tangency(a: f64, t_grid: &[f64]) -> Result<f64, AuditError> {
    if !(a > 0.0) {
        return Err(AuditError::Invalid(format!("curve parameter a must be positive, got {a}")));
    }
    Ok(t_grid
        .iter()
        .map(|&t| {
            let g = sigma2_g(&sigma2_curve(a, t));
            let v = sigma2_curve_velocity(a, t);
            let b = sigma2_beta(a, t);
            (g[0] - b * v[0]).abs().max((g[1] - b * v[1]).abs())
        })
        .fold(0.0, f64::max))
}

const SIGMAP: &str = "grad V.g <= 0 from u1 -> +inf and -grad V.g <= 0 from u2 -> +inf since p > 2, and grad V != 0 from u = 0";
const SIGMAP_CONCLUSION: &str = "grad V.g = 0 off the origin forces grad V(a,0) = 0, contradicting the u = 0 requirement: no C1 candidate is a witness at any gain";

/// Searches inputs `u1 ∈ {1, 2, 4, ...}` (or `u2`) for a violation of the gain
/// inequality of `sigma_p(p)`, and runs the axis test when `∇V·g` vanishes.
pub fn audit_sigmap(v: &dyn Storage, p: f64, gamma: f64, xi_samples: &[Vec<f64>], search_u_max: f64) -> Result<AuditReport, AuditError> {
    if !(p > 2.0) {
        return Err(AuditError::Invalid(format!("needs p > 2, got {p}")));
    }
    if !(gamma > 0.0) {
        return Err(AuditError::Invalid(format!("gamma must be positive, got {gamma}")));
    }
    require_gradient(v, &[1.0, 0.0])?;
    let sys = zoo::sigma_p(p);
    let view = sys.power_view().expect("sigma_p is power-affine");
    let tol = AUDIT_TOL;
    let mut couplings = Vec::new();
    for xi in xi_samples {
        if norm2(xi) == 0.0 {
            continue;
        }
        let grad = require_gradient(v, xi)?;
        let (_, g) = view.base.fields(xi).map_err(SystemError::Eval)?;
        let c = hji::dot(&grad, &g[0]);
        couplings.push((xi.clone(), c));
        if c.abs() <= tol {
            continue;
        }
        let channel = if c > 0.0 { 0 } else { 1 };
        let mut mag = 1.0;
        while mag <= search_u_max {
            let mut u = vec![0.0; 2];
            u[channel] = mag;
            let f = sys.dynamics(xi, &u)?;
            let residual = hji::dot(&grad, &f) - hji::supply(xi, &u, gamma);
            if residual > tol {
                let detail = json!({ "coupling": c, "residual": residual, "p": p, "gamma": gamma });
                return Ok(violation("sigmap", v.name(), xi.clone(), u, detail, SIGMAP, SIGMAP_CONCLUSION));
            }
            mag *= 2.0;
        }
    }
    if couplings.iter().any(|(_, c)| c.abs() > tol) {
        return Ok(AuditReport {
            audit: "sigmap",
            candidate: v.name(),
            kind: AuditKind::Inconclusive,
            witness_point: None,
            detail: json!({ "couplings": couplings, "search_u_max": search_u_max }),
            mechanizes: SIGMAP,
            conclusion: SIGMAP_CONCLUSION,
        });
    }
    // ∇V·g ≈ 0 everywhere sampled: the one-sided limits at an axis point force ∇V(a,0) = 0
    let a = xi_samples
        .iter()
        .find(|x| x.len() == 2 && x[1] == 0.0 && x[0] > 0.0)
        .map_or(1.0, |x| x[0]);
    let at_axis = require_gradient(v, &[a, 0.0])?;
    let mut side_grads = Vec::new();
    for &h in &default_h_seq() {
        side_grads.push((h, require_gradient(v, &[a, h])?, require_gradient(v, &[a, -h])?));
    }
    let (_, gp, gm) = side_grads.last().expect("nonempty h sequence");
    let continuous = gp.iter().chain(gm.iter()).zip(at_axis.iter().chain(at_axis.iter())).all(|(s, c)| (s - c).abs() <= 1e-4);
    let grad_zero = at_axis.iter().all(|c| c.abs() <= 1e-6);
    let f0 = sys.dynamics(&[a, 0.0], &[0.0, 0.0])?;
    let u0_residual = hji::dot(&at_axis, &f0) + a * a;
    let kind = if continuous && grad_zero {
        AuditKind::ObstructionVerified
    } else {
        AuditKind::Inconclusive
    };
    Ok(AuditReport {
        audit: "sigmap",
        candidate: v.name(),
        kind,
        witness_point: Some(AuditPoint {
            x: Some(vec![a, 0.0]),
            u: Some(vec![0.0, 0.0]),
            t: None,
        }),
        detail: json!({
            "couplings": couplings,
            "gradient_at_axis": at_axis,
            "gradient_continuous_at_axis": continuous,
            "u0_residual": u0_residual,
        }),
        mechanizes: SIGMAP,
        conclusion: SIGMAP_CONCLUSION,
    })
}

const STRADDLE: &str = "W'(x) <= 1 on (0,1) and W'(x) >= 2 for x > 1 under u = 1, so the left quotient at 1 stays <= 1 and the right one >= 2";
const STRADDLE_CONCLUSION: &str = "limsup of left quotients <= 1 < 2 <= liminf of right quotients: W is not differentiable at 1";

/// Fixed input box for sigma3 sweeps; it contains `u = ±1` exactly.
pub fn sigma3_u_mode() -> ResidualMode {
    ResidualMode::Sampled {
        u_box: Some(vec![Interval::new(-3.0, 3.0)]),
        u_points: 121,
    }
}

/// Falsifies `w` as a gain-1 witness of sigma3_scalar, or measures the
/// one-sided difference quotients at 1.
pub fn audit_scalar_straddle(w: &dyn Storage, h_seq: &[f64], region: &Region) -> Result<AuditReport, AuditError> {
    if h_seq.is_empty() || h_seq.iter().any(|h| !(*h > 0.0)) || h_seq.windows(2).any(|p| p[1] >= p[0]) {
        return Err(AuditError::Invalid("h sequence must be positive and decreasing".into()));
    }
    let sys = zoo::sigma3_scalar();
    let opts = WitnessOptions {
        mode: sigma3_u_mode(),
        tol: None,
    };
    let rep = hji::check_witness(&sys, w, 1.0, region, &opts)?;
    if !rep.passed() {
        let detail = json!({ "max_residual": rep.max_residual, "zeta": rep.worst_zeta });
        return Ok(violation("scalar_straddle", w.name(), rep.worst_x, rep.worst_u, detail, STRADDLE, STRADDLE_CONCLUSION));
    }
    let w1 = w.value(&[1.0])?;
    let mut left = Vec::new();
    let mut right = Vec::new();
    for &h in h_seq {
        left.push((w.value(&[1.0 - h])? - w1) / -h);
        right.push((w.value(&[1.0 + h])? - w1) / h);
    }
    let tol = 1e-6;
    let monotone = is_monotone(&left, tol) && is_monotone(&right, tol);
    let left_lim = *left.last().expect("nonempty");
    let right_lim = *right.last().expect("nonempty");
    let kind = if !monotone {
        AuditKind::Inconclusive
    } else if left_lim <= 1.0 + tol && right_lim >= 2.0 - tol {
        AuditKind::ObstructionVerified
    } else {
        AuditKind::Inconclusive
    };
    Ok(AuditReport {
        audit: "scalar_straddle",
        candidate: w.name(),
        kind,
        witness_point: Some(AuditPoint {
            x: Some(vec![1.0]),
            u: Some(vec![1.0]),
            t: None,
        }),
        detail: json!({
            "h": h_seq,
            "left_quotients": left,
            "right_quotients": right,
            "monotone": monotone,
            "max_residual": rep.max_residual,
        }),
        mechanizes: STRADDLE,
        conclusion: STRADDLE_CONCLUSION,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::storage::{Builtin, ExprStorage, Regularity, Shifted};
    use std::sync::Arc;

    fn expr(src: &str, n: usize, grad: &[&str]) -> ExprStorage {
        ExprStorage::parse(src, n, Regularity::Smooth, Some(grad)).unwrap()
    }

    fn sigma1_region() -> Region {
        Region::square(-2.0, 2.0, 2, 41)
    }

    fn sigma3_region() -> Region {
        Region::square(-3.0, 3.0, 1, 121)
    }

    /// Independent re-evaluation of a reported violation.
    fn residual_at(sys: &crate::systems::System, w: &dyn Storage, x: &[f64], u: &[f64], gamma: f64) -> f64 {
        let g = w.gradient(x).unwrap();
        hji::dot(&g, &sys.dynamics(x, u).unwrap()) - hji::supply(x, u, gamma)
    }

    #[test]
    fn sigma1_axis_falsifies_linear_candidate() {
        let w = expr("2*x1 + x2*x2", 2, &["2", "2*x2"]);
        let r = audit_sigma1_axis(&w, &[1.0], 1e-6, &sigma1_region()).unwrap();
        assert_eq!(r.kind, AuditKind::ViolationFound);
        let pt = r.witness_point.as_ref().unwrap();
        let sys = zoo::sigma1();
        let res = residual_at(&sys, &w, pt.x.as_ref().unwrap(), pt.u.as_ref().unwrap(), 1.0);
        assert!(res > AUDIT_TOL, "{res}");
        // the hand-computed point
        assert!((residual_at(&sys, &w, &[-1.0, 0.0], &[0.0, 0.0], 1.0) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn sigma1_axis_constant_and_missing_gradient() {
        let c = expr("3", 2, &["0", "0"]);
        assert_eq!(audit_sigma1_axis(&c, &[1.0], 1e-6, &sigma1_region()).unwrap().kind, AuditKind::ViolationFound);
        assert!(matches!(
            audit_sigma1_axis(&Builtin::V1Scaled, &[1.0], 1e-6, &sigma1_region()),
            Err(AuditError::GradientMissing(_))
        ));
    }

    #[test]
    fn axis_limits_of_a_smooth_candidate() {
        // W = -x1 + x2²: W_x1 ∓ W_x2 → -1 from both sides
        let w = expr("-x1 + x2*x2", 2, &["-1", "2*x2"]);
        let l = sigma1_axis_limits(&w, 1.0, &default_h_seq()).unwrap();
        assert!((l.upper_limit + 1.0).abs() < 1e-12 && (l.lower_limit + 1.0).abs() < 1e-12);
    }

    #[test]
    fn curve_on_v2_is_constant() {
        let ts: Vec<f64> = (0..=100).map(|k| k as f64 / 100.0).collect();
        for a in [0.5, 1.0, 2.0] {
            let vals: Vec<f64> = ts.iter().map(|&t| Builtin::V2.value(&sigma2_curve(a, t)).unwrap()).collect();
            let spread = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - vals.iter().cloned().fold(f64::INFINITY, f64::min);
            assert!(spread <= 1e-12, "{a}: {spread}");
            let r = audit_curve_monotone(&Builtin::V2, a, &ts).unwrap();
            assert_eq!(r.kind, AuditKind::ObstructionVerified);
        }
    }

    #[test]
    fn curve_falsifies_l1_norm() {
        let r = audit_curve_monotone(&Builtin::V1, 1.0, &[0.0, 0.5, 1.0]).unwrap();
        assert_eq!(r.kind, AuditKind::ViolationFound);
        assert_eq!(r.witness_point.as_ref().unwrap().t, Some(0.5));
        let inc = r.detail["increase"].as_f64().unwrap();
        assert!((inc - (0.5 + 0.75_f64.powf(1.5) - 1.0)).abs() < 1e-12);
        assert_eq!(audit_curve_monotone(&Builtin::V1, 1.0, &[0.5]).unwrap().kind, AuditKind::Inconclusive);
    }

    #[test]
    fn tangency_and_endpoint() {
        let ts: Vec<f64> = (0..=100).map(|k| k as f64 / 100.0).collect();
        for a in [0.5, 1.0, 2.0] {
            assert!(audit_curve_tangency(a, &ts).unwrap() <= 1e-9);
            assert_eq!(sigma2_curve(a, 1.0), [a, 0.0]);
            assert_eq!(sigma2_curve_velocity(a, 1.0), [a, 0.0]);
        }
        // the zoo drift splits as g + h with h(x,x) = 0
        let sys = zoo::sigma2();
        let x = [0.7, -0.4];
        let u = [0.3, 1.1];
        let f = sys.dynamics(&x, &u).unwrap();
        let (g, h) = (sigma2_g(&x), sigma2_h(&x, &u));
        assert!((f[0] - g[0] - h[0]).abs() < 1e-14 && (f[1] - g[1] - h[1]).abs() < 1e-14);
        assert_eq!(sigma2_h(&x, &x), [0.0, 0.0]);
    }

    #[test]
    fn sigmap_falsifies_square_norm() {
        let v = expr("x1*x1 + x2*x2", 2, &["2*x1", "2*x2"]);
        let r = audit_sigmap(&v, 3.0, 1.0, &[vec![2.0, 1.0]], 1e3).unwrap();
        assert_eq!(r.kind, AuditKind::ViolationFound);
        let pt = r.witness_point.as_ref().unwrap();
        assert_eq!(pt.u.as_deref(), Some(&[2.0, 0.0][..]));
        assert!((r.detail["residual"].as_f64().unwrap() - 15.0).abs() < 1e-9);
        assert!((residual_at(&zoo::sigma_p(3.0), &v, &[2.0, 1.0], &[2.0, 0.0], 1.0) - 15.0).abs() < 1e-9);
    }

    #[test]
    fn sigmap_preconditions_and_axis_branch() {
        assert!(matches!(
            audit_sigmap(&Builtin::V1, 3.0, 1.0, &[vec![1.0, 1.0]], 10.0),
            Err(AuditError::GradientMissing(_))
        ));
        assert!(audit_sigmap(&Builtin::SqNorm, 2.0, 1.0, &[vec![1.0, 1.0]], 10.0).is_err());
        // a function of |x1|+|x2| has zero coupling with g and reaches the axis test
        let v = expr("(abs(x1)+abs(x2))*(abs(x1)+abs(x2))", 2, &["2*(abs(x1)+abs(x2))*sign(x1)", "2*(abs(x1)+abs(x2))*sign(x2)"]);
        let r = audit_sigmap(&v, 3.0, 1.0, &[vec![1.0, 0.5], vec![-0.3, 2.0], vec![1.0, 0.0]], 1e3).unwrap();
        assert_ne!(r.kind, AuditKind::ViolationFound);
        assert!(r.detail.get("gradient_at_axis").is_some());
        assert_eq!(r.detail["gradient_continuous_at_axis"], false);
        // a constant has zero gradient at the axis, which the u = 0 inequality forbids
        let c = expr("1", 2, &["0", "0"]);
        let r = audit_sigmap(&c, 3.0, 1.0, &[vec![1.0, 0.5], vec![1.0, 0.0]], 1e3).unwrap();
        assert_eq!(r.kind, AuditKind::ObstructionVerified);
        assert_eq!(r.detail["u0_residual"].as_f64().unwrap(), 1.0);
    }

    #[test]
    fn straddle_on_v3() {
        let r = audit_scalar_straddle(&Builtin::V3Scalar, &default_h_seq(), &sigma3_region()).unwrap();
        assert_eq!(r.kind, AuditKind::ObstructionVerified, "{:?}", r.detail);
        for q in r.detail["left_quotients"].as_array().unwrap() {
            assert!((q.as_f64().unwrap() - 1.0).abs() < 1e-9);
        }
        for q in r.detail["right_quotients"].as_array().unwrap() {
            assert!((q.as_f64().unwrap() - 2.0).abs() < 1e-9);
        }
        let shifted = Shifted {
            inner: Arc::new(Builtin::V3Scalar),
            offset: 5.0,
        };
        assert_eq!(audit_scalar_straddle(&shifted, &default_h_seq(), &sigma3_region()).unwrap().kind, AuditKind::ObstructionVerified);
    }

    #[test]
    fn straddle_falsifies_square() {
        let w = expr("x1*x1", 1, &["2*x1"]);
        let r = audit_scalar_straddle(&w, &default_h_seq(), &sigma3_region()).unwrap();
        assert_eq!(r.kind, AuditKind::ViolationFound);
        let pt = r.witness_point.as_ref().unwrap();
        let res = residual_at(&zoo::sigma3_scalar(), &w, pt.x.as_ref().unwrap(), pt.u.as_ref().unwrap(), 1.0);
        assert!(res > hji::SAMPLED_TOL, "{res}");
        // the hand-computed point
        assert!((residual_at(&zoo::sigma3_scalar(), &w, &[0.9], &[1.0], 1.0) - (1.8 * 0.19 - 0.19)).abs() < 1e-12);
    }
}
