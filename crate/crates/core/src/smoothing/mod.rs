//! Smoothing a continuous witness at a slightly larger gain.
//!
//! Inputs are compactified by `d = u/√(1+|u|²)`, turning the system into
//! `f(x,d) = (1-|d|²) g0 + Σ φ(d_i)(1-|d|²)^{1-p/2} g_i` on the closed unit
//! ball, with target `Θ(x,d) = -(1-|d|²)α(x) + |d|²β(x)`. The smooth
//! approximant is a bump mollification of `V`, rescaled by `1/(1-δ)`, and is
//! accepted only after both `|V-W| <= V/2` and
//! `∇W·F(x,u) <= -|x|² + [(1+ε)γ+ε]|u|²` are certified on a point set.
//!
//! The certified object is the kernel convolution itself; sampled grids are
//! evaluations of it. Probes at fractions of the radius on both sides of every
//! grid hyperplane expose the transition bands of kinks lying on grid lines.

mod kernel;

use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::hji::{self, norm2, HjiError, Region, WitnessOptions};
use crate::par;
use crate::storage::{Storage, StorageCandidate, StorageError};
use crate::systems::{phi_value, PowerView, System};

pub use kernel::{default_nodes_per_axis, BumpQuadrature, Mollified};

#[derive(Clone, Debug, PartialEq, Error)]
pub enum SmoothingError {
    #[error("need gamma' > gamma > 0, got gamma = {gamma}, gamma' = {gamma_prime}")]
    GainOrder { gamma: f64, gamma_prime: f64 },
    #[error("smoothing needs an affine or power-affine system with p <= 2")]
    UnsupportedSystem,
    #[error("|d| must be < 1 to decompactify, got |d| = {0}")]
    OutsideBall(f64),
    #[error("hypothesis fails: max residual {max_residual} at {worst_x:?}")]
    HypothesisFailed { max_residual: f64, worst_x: Vec<f64> },
    #[error("invalid annulus or grid: {0}")]
    InvalidDomain(String),
    #[error("mollification radius {radius} exceeds half the distance {dist} to the domain boundary")]
    RadiusTooLarge { radius: f64, dist: f64 },
    #[error(transparent)]
    Hji(#[from] HjiError),
    #[error(transparent)]
    Storage(#[from] StorageError),
}

/// `d = u / √(1 + |u|²)`.
pub fn compactify(u: &[f64]) -> Vec<f64> {
    let s = (1.0 + norm2(u)).sqrt();
    u.iter().map(|c| c / s).collect()
}

/// `u = d / √(1 - |d|²)` for `|d| < 1`.
pub fn decompactify(d: &[f64]) -> Result<Vec<f64>, SmoothingError> {
    let n2 = norm2(d);
    if n2 >= 1.0 {
        return Err(SmoothingError::OutsideBall(n2.sqrt()));
    }
    let s = (1.0 - n2).sqrt();
    Ok(d.iter().map(|c| c / s).collect())
}

fn smoothing_view(sys: &System) -> Result<PowerView<'_>, SmoothingError> {
    match sys.power_view() {
        Some(v) if v.p <= 2.0 => Ok(v),
        _ => Err(SmoothingError::UnsupportedSystem),
    }
}

/// The compactified field `f(x, d)` for `|d| <= 1`.
pub fn transformed_field(sys: &System, x: &[f64], d: &[f64]) -> Result<Vec<f64>, SmoothingError> {
    let view = smoothing_view(sys)?;
    let (g0, g) = view.base.fields(x).map_err(|e| HjiError::from(e))?;
    let s = (1.0 - norm2(d)).max(0.0);
    let exponent = 1.0 - view.p / 2.0;
    let mut out: Vec<f64> = g0.iter().map(|c| s * c).collect();
    for (di, gi) in d.iter().zip(&g) {
        let coeff = if exponent == 0.0 {
            view.phi(*di)
        } else {
            view.phi(*di) * s.powf(exponent)
        };
        for (o, gk) in out.iter_mut().zip(gi) {
            *o += coeff * gk;
        }
    }
    Ok(out)
}

/// `Θ = -(1-|d|²) α + |d|² β`.
pub fn theta(alpha: f64, beta: f64, d: &[f64]) -> f64 {
    let n2 = norm2(d);
    -(1.0 - n2) * alpha + n2 * beta
}

#[derive(Clone, Debug, Serialize)]
pub struct Case1Check {
    /// `Σ φ(d_i) ζ·g_i(x)`.
    pub lhs_limit: f64,
    pub beta: f64,
    /// `(ε, ε² ζ·g0 + Σ φ(d_i) ζ·g_i + ε² α - β)` along the sequence.
    pub scaled_gaps: Vec<(f64, f64)>,
    pub holds: bool,
}

/// Boundary case `|d| = 1` at `p = 2`: checks `Σ φ(d_i) ζ·g_i(x) <= β`, which the
/// inequality at `u = d/ε` approaches after multiplying by `ε²`.
pub fn check_case1_p2(sys: &System, x: &[f64], zeta: &[f64], beta: f64, d: &[f64], eps_seq: &[f64]) -> Result<Case1Check, SmoothingError> {
    let view = match sys.power_view() {
        Some(v) if v.p == 2.0 => v,
        _ => return Err(SmoothingError::UnsupportedSystem),
    };
    let (g0, g) = view.base.fields(x).map_err(|e| HjiError::from(e))?;
    let lhs: f64 = d
        .iter()
        .zip(&g)
        .map(|(di, gi)| phi_value(view.phi, 2.0, *di) * hji::dot(zeta, gi))
        .sum();
    let alpha = norm2(x);
    let z0 = hji::dot(zeta, &g0);
    let scaled_gaps = eps_seq
        .iter()
        .map(|&e| (e, e * e * z0 + lhs + e * e * alpha - beta))
        .collect();
    Ok(Case1Check {
        lhs_limit: lhs,
        beta,
        scaled_gaps,
        holds: lhs <= beta + hji::EXACT_TOL,
    })
}

/// `δ = m/(1+m)` with `m = min{ε, 1/4}`.
pub fn choose_delta(eps: f64) -> f64 {
    let m = eps.min(0.25);
    m / (1.0 + m)
}

/// `ε = ((γ+γ')/2 - γ)/(γ+1)`, so `(1+ε)γ + ε` is the midpoint of `[γ, γ']`.
pub fn epsilon_for(gamma: f64, gamma_prime: f64) -> f64 {
    (0.5 * (gamma + gamma_prime) - gamma) / (gamma + 1.0)
}

/// `(Υ1, Υ2) = ((1-δ)/4 · V, δ · min{1, α})`.
pub fn upsilons(v_x: f64, alpha_x: f64, delta: f64) -> (f64, f64) {
    ((1.0 - delta) / 4.0 * v_x, delta * alpha_x.min(1.0))
}

#[derive(Clone, Debug)]
pub struct SmoothOptions {
    pub r_min: f64,
    pub r_max: f64,
    /// Points per axis of the grid used while shrinking the radius.
    pub schedule_ppd: usize,
    /// Points per axis of the final certification grid.
    pub cert_ppd: usize,
    /// Probe offsets as fractions of the radius.
    pub band_fractions: Vec<f64>,
    pub quad_nodes_per_axis: Option<usize>,
    pub radius_floor: f64,
}

impl SmoothOptions {
    pub fn annulus(r_min: f64, r_max: f64) -> SmoothOptions {
        SmoothOptions {
            r_min,
            r_max,
            schedule_ppd: 41,
            cert_ppd: 81,
            band_fractions: vec![0.2, 0.5, 0.8],
            quad_nodes_per_axis: None,
            radius_floor: 1e-7,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RadiusAttempt {
    pub radius: f64,
    pub max_approx_ratio: f64,
    pub max_eq20_residual: f64,
    pub points: usize,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SmoothReport {
    pub system: String,
    pub storage: String,
    pub gamma: f64,
    pub gamma_prime: f64,
    pub epsilon: f64,
    pub delta: f64,
    /// `(1+ε)γ + ε`, the gain certified for `W`.
    pub certified_gamma: f64,
    pub radius: Option<f64>,
    pub radius_schedule: Vec<RadiusAttempt>,
    /// `max |V - W| / V` on the certification set.
    pub max_relative_approx_error: f64,
    pub max_eq20_residual: f64,
    pub worst_eq20_x: Vec<f64>,
    pub points_certified: usize,
    /// `W` re-checked as a gain-`γ'` witness on the certification set.
    pub witness_at_gamma_prime: Option<hji::WitnessReport>,
    pub verdict: hji::Verdict,
}

#[derive(Debug)]
pub struct CertifiedSmooth {
    pub w: Option<Mollified>,
    pub report: SmoothReport,
    pub cert_points: Vec<Vec<f64>>,
}

impl CertifiedSmooth {
    /// Rows `x1..xn, V, W, gradW1..n` over the certification grid (without probes).
    pub fn csv_rows(&self, v: &dyn Storage, grid: &[Vec<f64>]) -> Result<(Vec<String>, Vec<Vec<String>>), StorageError> {
        let n = grid.first().map_or(0, Vec::len);
        let mut header: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
        header.extend(["V".to_string(), "W".to_string()]);
        header.extend((1..=n).map(|i| format!("gradW{i}")));
        let mut rows = Vec::new();
        if let Some(w) = &self.w {
            for x in grid {
                let (wv, wg) = w.value_and_gradient(x)?;
                let mut row: Vec<String> = x.iter().map(|c| c.to_string()).collect();
                row.push(v.value(x)?.to_string());
                row.push(wv.to_string());
                row.extend(wg.iter().map(|c| c.to_string()));
                rows.push(row);
            }
        }
        Ok((header, rows))
    }
}

/// Annulus grid points plus probes `x ± f·r·e_k`, all kept inside the annulus.
pub fn certification_points(n: usize, opts: &SmoothOptions, ppd: usize, radius: f64) -> Vec<Vec<f64>> {
    let base = annulus_grid(n, opts, ppd);
    let mut out = base.clone();
    for x in &base {
        for k in 0..n {
            for &f in &opts.band_fractions {
                for s in [1.0, -1.0] {
                    let mut y = x.clone();
                    y[k] += s * f * radius;
                    let r = norm2(&y).sqrt();
                    if r >= opts.r_min && r <= opts.r_max {
                        out.push(y);
                    }
                }
            }
        }
    }
    out
}

pub fn annulus_grid(n: usize, opts: &SmoothOptions, ppd: usize) -> Vec<Vec<f64>> {
    Region::square(-opts.r_max, opts.r_max, n, ppd)
        .points()
        .into_iter()
        .filter(|x| {
            let r = norm2(x).sqrt();
            r >= opts.r_min && r <= opts.r_max
        })
        .collect()
}

struct Certification {
    max_ratio: f64,
    max_rel: f64,
    max_eq20: f64,
    worst_x: Vec<f64>,
}

fn certify(
    view: PowerView<'_>,
    v: &dyn Storage,
    w: &Mollified,
    delta: f64,
    gamma_cert: f64,
    points: &[Vec<f64>],
) -> Result<Certification, SmoothingError> {
    let per_point = par::map(points, |x| -> Result<(f64, f64, f64), SmoothingError> {
        let vx = v.value(x)?;
        let (wx, grad) = w.value_and_gradient(x)?;
        // V̂ = (1-δ) W
        let vhat = (1.0 - delta) * wx;
        let (ups1, _) = upsilons(vx, norm2(x), delta);
        let ratio = (vx - vhat).abs() / ups1;
        let rel = (vx - wx).abs() / vx;
        let (res, _) = hji::power_residual(view, x, &grad, gamma_cert)?;
        Ok((ratio, rel, res))
    });
    let mut c = Certification {
        max_ratio: f64::NEG_INFINITY,
        max_rel: f64::NEG_INFINITY,
        max_eq20: f64::NEG_INFINITY,
        worst_x: Vec::new(),
    };
    for (x, r) in points.iter().zip(per_point) {
        let (ratio, rel, res) = r?;
        c.max_ratio = c.max_ratio.max(ratio);
        c.max_rel = c.max_rel.max(rel);
        if res > c.max_eq20 {
            c.max_eq20 = res;
            c.worst_x = x.clone();
        }
    }
    Ok(c)
}

/// Mollifies `v`, shrinking the radius until the approximation bound and the
/// gain-`(1+ε)γ+ε` inequality hold, then certifies on the finer grid.
pub fn smooth_witness(
    sys: &System,
    v: StorageCandidate,
    gamma: f64,
    gamma_prime: f64,
    opts: &SmoothOptions,
) -> Result<CertifiedSmooth, SmoothingError> {
    if !(gamma > 0.0 && gamma_prime > gamma) {
        return Err(SmoothingError::GainOrder { gamma, gamma_prime });
    }
    let view = smoothing_view(sys)?;
    if !(opts.r_min > 0.0 && opts.r_max > opts.r_min) || opts.schedule_ppd < 2 || opts.cert_ppd < 2 {
        return Err(SmoothingError::InvalidDomain(format!(
            "need 0 < r_min < r_max and at least two points per axis, got [{}, {}]",
            opts.r_min, opts.r_max
        )));
    }
    let n = sys.n();
    let schedule_grid = annulus_grid(n, opts, opts.schedule_ppd);
    if schedule_grid.is_empty() {
        return Err(SmoothingError::InvalidDomain("annulus contains no grid point".into()));
    }
    let pts: Vec<Vec<f64>> = annulus_grid(n, opts, opts.cert_ppd);
    let hyp = hji::check_witness_at(sys, v.as_ref(), gamma, &pts, &WitnessOptions::default())?;
    if !hyp.passed() {
        return Err(SmoothingError::HypothesisFailed {
            max_residual: hyp.max_residual,
            worst_x: hyp.worst_x,
        });
    }

    let eps = epsilon_for(gamma, gamma_prime);
    let delta = choose_delta(eps);
    let gamma_cert = (1.0 + eps) * gamma + eps;
    let quad = Arc::new(match opts.quad_nodes_per_axis {
        Some(q) => BumpQuadrature::new(n, q),
        None => BumpQuadrature::for_dim(n),
    });

    let spacing = 2.0 * opts.r_max / (opts.schedule_ppd - 1) as f64;
    let mut radius = (8.0 * 0.5 * spacing).min(opts.r_min / 4.0);
    if radius >= opts.r_min / 2.0 {
        return Err(SmoothingError::RadiusTooLarge {
            radius,
            dist: opts.r_min,
        });
    }
    let mut schedule = Vec::new();
    let mut report = SmoothReport {
        system: sys.name().to_string(),
        storage: v.name(),
        gamma,
        gamma_prime,
        epsilon: eps,
        delta,
        certified_gamma: gamma_cert,
        radius: None,
        radius_schedule: Vec::new(),
        max_relative_approx_error: f64::NAN,
        max_eq20_residual: f64::NAN,
        worst_eq20_x: Vec::new(),
        points_certified: 0,
        witness_at_gamma_prime: None,
        verdict: hji::Verdict::Fail,
    };
    let mut last_points = Vec::new();
    while radius >= opts.radius_floor {
        let w = Mollified::new(v.clone(), radius, quad.clone()).scaled(1.0 / (1.0 - delta));
        let points = certification_points(n, opts, opts.schedule_ppd, radius);
        let c = certify(view, v.as_ref(), &w, delta, gamma_cert, &points)?;
        let mut pass = c.max_ratio <= 1.0 && c.max_eq20 <= 0.0;
        schedule.push(RadiusAttempt {
            radius,
            max_approx_ratio: c.max_ratio,
            max_eq20_residual: c.max_eq20,
            points: points.len(),
            pass,
        });
        report.max_relative_approx_error = c.max_rel;
        report.max_eq20_residual = c.max_eq20;
        report.worst_eq20_x = c.worst_x.clone();
        report.points_certified = points.len();
        if pass {
            let fine = certification_points(n, opts, opts.cert_ppd, radius);
            let f = certify(view, v.as_ref(), &w, delta, gamma_cert, &fine)?;
            pass = f.max_ratio <= 1.0 && f.max_rel <= 0.5 && f.max_eq20 <= 0.0;
            report.max_relative_approx_error = f.max_rel;
            report.max_eq20_residual = f.max_eq20;
            report.worst_eq20_x = f.worst_x;
            report.points_certified = fine.len();
            if pass {
                let w_arc: StorageCandidate = Arc::new(w.clone());
                let recheck = hji::check_witness_at(sys, w_arc.as_ref(), gamma_prime, &fine, &WitnessOptions::default())?;
                pass = recheck.passed();
                report.witness_at_gamma_prime = Some(recheck);
            }
            last_points = fine;
            if pass {
                report.radius = Some(radius);
                report.verdict = hji::Verdict::Pass;
                report.radius_schedule = schedule;
                return Ok(CertifiedSmooth {
                    w: Some(w),
                    report,
                    cert_points: last_points,
                });
            }
            schedule.last_mut().expect("pushed").pass = false;
        }
        radius *= 0.5;
    }
    report.radius_schedule = schedule;
    Ok(CertifiedSmooth {
        w: None,
        report,
        cert_points: last_points,
    })
}
