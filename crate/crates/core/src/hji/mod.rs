//! Pointwise and region-level checks of the gain-witness condition
//! `ζ·F(x,u) <= γ|u|² - |x|²` for all `u` and all `ζ ∈ ∂_D V(x)`, `x != 0`.
//!
//! For input-affine systems the supremum over `u` is the closed form
//! `ζ·g0 + (1/4γ) Σ (ζ·g_i)² + |x|²`. Power-affine systems get the analogous
//! per-channel closed form; general systems are maximized over a `u` grid.

mod region;

use serde::Serialize;
use thiserror::Error;

use crate::par;
use crate::storage::{self, Interval, Storage, StorageError, SubdiffSet};
use crate::systems::{AffineSystem, Phi, PowerView, System, SystemError};

pub use region::Region;

pub const EXACT_TOL: f64 = 1e-9;
pub const SAMPLED_TOL: f64 = 1e-6;
pub const DEFAULT_U_POINTS: usize = 41;
/// Coefficients of unbounded subgradient coordinates below this count as zero.
pub const ZERO_COEFF_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum HjiError {
    #[error(transparent)]
    Storage(#[from] StorageError),
    #[error(transparent)]
    System(#[from] SystemError),
    #[error("region contains no grid point outside the excluded ball")]
    EmptyRegion,
    #[error("gain must be positive, got {0}")]
    InvalidGamma(f64),
    #[error("{0}")]
    Invalid(String),
}

impl From<crate::expr::EvalError> for HjiError {
    fn from(e: crate::expr::EvalError) -> Self {
        HjiError::System(SystemError::Eval(e))
    }
}

/// Supply rate `γ|u|² - |x|²`.
pub fn supply(x: &[f64], u: &[f64], gamma: f64) -> f64 {
    gamma * norm2(u) - norm2(x)
}

pub(crate) fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `ζ·g0(x) + (1/(4γ)) Σ (ζ·g_i(x))² + |x|²`.
pub fn affine_residual(sys: &AffineSystem, x: &[f64], zeta: &[f64], gamma: f64) -> Result<f64, HjiError> {
    let (g0, g) = sys.fields(x)?;
    Ok(affine_from_fields(&g0, &g, x, zeta, gamma))
}

fn affine_from_fields(g0: &[f64], g: &[Vec<f64>], x: &[f64], zeta: &[f64], gamma: f64) -> f64 {
    let quad: f64 = g.iter().map(|gi| dot(zeta, gi).powi(2)).sum();
    dot(zeta, g0) + quad / (4.0 * gamma) + norm2(x)
}

/// `sup_{r} [c φ(r) - γ r²]` together with a maximizer (`None` when unbounded).
pub fn channel_sup(c: f64, phi: Phi, p: f64, gamma: f64) -> (f64, Option<f64>) {
    let (c_eff, dir) = match phi {
        Phi::AbsPow => (c, 1.0),
        Phi::SignedPow => (c.abs(), if c < 0.0 { -1.0 } else { 1.0 }),
    };
    if c_eff <= 0.0 {
        return (0.0, Some(0.0));
    }
    if gamma <= 0.0 {
        return (f64::INFINITY, None);
    }
    if p == 1.0 {
        let r = c_eff / (2.0 * gamma);
        return (c_eff * c_eff / (4.0 * gamma), Some(dir * r));
    }
    if p < 2.0 {
        let r = (p * c_eff / (2.0 * gamma)).powf(1.0 / (2.0 - p));
        let v = c_eff * r.powf(p) - gamma * r * r;
        return (v.max(0.0), Some(dir * r));
    }
    if p == 2.0 && c_eff <= gamma {
        return (0.0, Some(0.0));
    }
    (f64::INFINITY, None)
}

/// Exact `sup_u [ζ·F(x,u) - γ|u|²] + |x|²` for affine-like systems, with a maximizing `u`.
pub fn power_residual(view: PowerView<'_>, x: &[f64], zeta: &[f64], gamma: f64) -> Result<(f64, Option<Vec<f64>>), HjiError> {
    let (g0, g) = view.base.fields(x)?;
    Ok(power_from_fields(view, &g0, &g, x, zeta, gamma))
}

fn power_from_fields(
    view: PowerView<'_>,
    g0: &[f64],
    g: &[Vec<f64>],
    x: &[f64],
    zeta: &[f64],
    gamma: f64,
) -> (f64, Option<Vec<f64>>) {
    if view.is_affine() {
        let r = affine_from_fields(g0, g, x, zeta, gamma);
        let u = g.iter().map(|gi| dot(zeta, gi) / (2.0 * gamma)).collect();
        return (r, Some(u));
    }
    let mut total = dot(zeta, g0) + norm2(x);
    let mut u = Some(Vec::with_capacity(g.len()));
    for gi in g {
        let (s, arg) = channel_sup(dot(zeta, gi), view.phi, view.p, gamma);
        total += s;
        match (arg, u.as_mut()) {
            (Some(a), Some(v)) => v.push(a),
            _ => u = None,
        }
    }
    (total, u)
}

/// Default sampling box `[-4 max|x|, 4 max|x|]^m`.
pub fn default_u_box(x: &[f64], m: usize) -> Vec<Interval> {
    let s = 4.0 * x.iter().fold(0.0_f64, |a, c| a.max(c.abs()));
    vec![Interval::new(-s, s); m]
}

/// Cartesian grid with `points` nodes per axis (one node at the midpoint if `points == 1`).
pub fn u_grid(u_box: &[Interval], points: usize) -> Vec<Vec<f64>> {
    let axes: Vec<Vec<f64>> = u_box.iter().map(|iv| region::axis(iv.lo, iv.hi, points)).collect();
    let mut out = vec![Vec::with_capacity(u_box.len())];
    for axis in &axes {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                axis.iter().map(move |&c| {
                    let mut v = prefix.clone();
                    v.push(c);
                    v
                })
            })
            .collect();
    }
    out
}

/// `max` over the `u` grid of `ζ·F(x,u) - supply(x,u,γ)`, and the maximizing `u`.
pub fn general_residual(
    sys: &System,
    x: &[f64],
    zeta: &[f64],
    gamma: f64,
    u_box: &[Interval],
    u_points: usize,
) -> Result<(f64, Vec<f64>), HjiError> {
    let grid = u_grid(u_box, u_points);
    let samples = sample_dynamics(sys, x, &grid)?;
    Ok(sampled_max(&samples, &grid, x, zeta, gamma))
}

fn sample_dynamics(sys: &System, x: &[f64], grid: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, HjiError> {
    match sys.fields(x) {
        Some(fields) => {
            let (g0, g) = fields?;
            let view = sys.power_view().expect("affine-like");
            Ok(grid
                .iter()
                .map(|u| {
                    let mut f = g0.clone();
                    for (ui, gi) in u.iter().zip(&g) {
                        let c = if view.is_affine() { *ui } else { view.phi(*ui) };
                        for (fk, gk) in f.iter_mut().zip(gi) {
                            *fk += c * gk;
                        }
                    }
                    f
                })
                .collect())
        }
        None => grid.iter().map(|u| sys.dynamics(x, u).map_err(HjiError::from)).collect(),
    }
}

fn sampled_max(samples: &[Vec<f64>], grid: &[Vec<f64>], x: &[f64], zeta: &[f64], gamma: f64) -> (f64, Vec<f64>) {
    let mut best = f64::NEG_INFINITY;
    let mut arg = Vec::new();
    for (f, u) in samples.iter().zip(grid) {
        let r = dot(zeta, f) - supply(x, u, gamma);
        if r > best {
            best = r;
            arg = u.clone();
        }
    }
    (best, arg)
}

/// How the supremum over inputs is evaluated.
#[derive(Clone, Debug, PartialEq)]
pub enum ResidualMode {
    /// Closed form for affine and power-affine systems, sampled for general ones.
    Auto,
    /// Grid maximization; `u_box = None` uses [`default_u_box`] at each `x`.
    Sampled { u_box: Option<Vec<Interval>>, u_points: usize },
}

impl ResidualMode {
    pub fn sampled_default() -> ResidualMode {
        ResidualMode::Sampled {
            u_box: None,
            u_points: DEFAULT_U_POINTS,
        }
    }

    fn is_exact_for(&self, sys: &System) -> bool {
        matches!(self, ResidualMode::Auto) && sys.power_view().is_some()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WitnessOptions {
    pub mode: ResidualMode,
    /// `None` selects [`EXACT_TOL`] for closed forms and [`SAMPLED_TOL`] otherwise.
    pub tol: Option<f64>,
}

impl Default for WitnessOptions {
    fn default() -> Self {
        WitnessOptions {
            mode: ResidualMode::Auto,
            tol: None,
        }
    }
}

impl WitnessOptions {
    pub fn tolerance(&self, sys: &System) -> f64 {
        self.tol.unwrap_or(if self.mode.is_exact_for(sys) { EXACT_TOL } else { SAMPLED_TOL })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
}

/// Outcome at a single state.
#[derive(Clone, Debug, PartialEq)]
pub struct PointResidual {
    pub x: Vec<f64>,
    pub residual: f64,
    pub zeta: Vec<f64>,
    /// Empty when the supremum is unbounded.
    pub u: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct WitnessReport {
    pub system: String,
    pub storage: String,
    pub gamma: f64,
    pub tol: f64,
    pub mode: &'static str,
    pub verdict: Verdict,
    pub max_residual: f64,
    pub worst_x: Vec<f64>,
    pub worst_zeta: Vec<f64>,
    pub worst_u: Vec<f64>,
    pub points_checked: usize,
    #[serde(skip)]
    pub points: Vec<PointResidual>,
}

impl WitnessReport {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    /// Sweep dump: `x1..xn, residual, worst_u1..um, pass`.
    pub fn csv_rows(&self, n: usize, m: usize) -> (Vec<String>, Vec<Vec<String>>) {
        let mut header: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
        header.push("residual".into());
        header.extend((1..=m).map(|i| format!("worst_u{i}")));
        header.push("pass".into());
        let rows = self
            .points
            .iter()
            .map(|p| {
                let mut row: Vec<String> = p.x.iter().map(|c| c.to_string()).collect();
                row.push(p.residual.to_string());
                for i in 0..m {
                    row.push(p.u.get(i).map_or_else(|| "nan".to_string(), |c| c.to_string()));
                }
                row.push((p.residual <= self.tol).to_string());
                row
            })
            .collect();
        (header, rows)
    }
}

/// Residual at `x`, maximized over the subdifferential of `v` (vertex enumeration
/// plus the zero-coefficient rule for unbounded coordinates) and over inputs.
pub fn point_residual(
    sys: &System,
    v: &dyn Storage,
    x: &[f64],
    gamma: f64,
    mode: &ResidualMode,
) -> Result<PointResidual, HjiError> {
    let set = storage::subdiff(v, x)?;
    residual_over_set(sys, &set, x, gamma, mode)
}

pub fn residual_over_set(
    sys: &System,
    set: &SubdiffSet,
    x: &[f64],
    gamma: f64,
    mode: &ResidualMode,
) -> Result<PointResidual, HjiError> {
    let vertices = set.finite_vertices();
    if vertices.is_empty() {
        return Ok(PointResidual {
            x: x.to_vec(),
            residual: f64::NEG_INFINITY,
            zeta: Vec::new(),
            u: Vec::new(),
        });
    }
    let unbounded = set.unbounded_coords();
    let exact = mode.is_exact_for(sys);

    let fields = sys.fields(x).transpose()?;
    let (grid, samples) = if exact {
        (Vec::new(), Vec::new())
    } else {
        let u_box = match mode {
            ResidualMode::Sampled { u_box: Some(b), .. } => b.clone(),
            _ => default_u_box(x, sys.m()),
        };
        let points = match mode {
            ResidualMode::Sampled { u_points, .. } => *u_points,
            ResidualMode::Auto => DEFAULT_U_POINTS,
        };
        let grid = u_grid(&u_box, points);
        let samples = sample_dynamics(sys, x, &grid)?;
        (grid, samples)
    };

    for &k in &unbounded {
        let vanishes = match &fields {
            Some((g0, g)) => g0[k].abs() <= ZERO_COEFF_TOL && g.iter().all(|gi| gi[k].abs() <= ZERO_COEFF_TOL),
            None => samples.iter().all(|f| f[k].abs() <= ZERO_COEFF_TOL),
        };
        if !vanishes {
            return Ok(PointResidual {
                x: x.to_vec(),
                residual: f64::INFINITY,
                zeta: vertices[0].clone(),
                u: Vec::new(),
            });
        }
    }

    let mut best = PointResidual {
        x: x.to_vec(),
        residual: f64::NEG_INFINITY,
        zeta: Vec::new(),
        u: Vec::new(),
    };
    for zeta in vertices {
        let (r, u) = if exact {
            let view = sys.power_view().expect("exact mode needs an affine-like system");
            let (g0, g) = fields.as_ref().expect("affine-like");
            let (r, u) = power_from_fields(view, g0, g, x, &zeta, gamma);
            (r, u.unwrap_or_default())
        } else {
            sampled_max(&samples, &grid, x, &zeta, gamma)
        };
        if r > best.residual {
            best.residual = r;
            best.zeta = zeta;
            best.u = u;
        }
    }
    Ok(best)
}

/// Sweeps `region` and reports the largest residual.
pub fn check_witness(
    sys: &System,
    v: &dyn Storage,
    gamma: f64,
    region: &Region,
    opts: &WitnessOptions,
) -> Result<WitnessReport, HjiError> {
    if !(gamma > 0.0) {
        return Err(HjiError::InvalidGamma(gamma));
    }
    if region.dim() != sys.n() {
        return Err(HjiError::Invalid(format!(
            "region has dimension {}, system state dimension is {}",
            region.dim(),
            sys.n()
        )));
    }
    check_witness_at(sys, v, gamma, &region.points(), opts)
}

/// [`check_witness`] over an explicit list of states.
pub fn check_witness_at(
    sys: &System,
    v: &dyn Storage,
    gamma: f64,
    xs: &[Vec<f64>],
    opts: &WitnessOptions,
) -> Result<WitnessReport, HjiError> {
    if !(gamma > 0.0) {
        return Err(HjiError::InvalidGamma(gamma));
    }
    let r2 = region::DEFAULT_EXCLUDE_RADIUS.powi(2);
    let xs: Vec<Vec<f64>> = xs.iter().filter(|x| norm2(x) >= r2).cloned().collect();
    if xs.is_empty() {
        return Err(HjiError::EmptyRegion);
    }
    if let Some(x) = xs.iter().find(|x| x.len() != sys.n()) {
        return Err(HjiError::Invalid(format!(
            "point has dimension {}, system state dimension is {}",
            x.len(),
            sys.n()
        )));
    }
    let results = par::map(&xs, |x| point_residual(sys, v, x, gamma, &opts.mode));
    let points = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let tol = opts.tolerance(sys);

    let worst = points
        .iter()
        .fold(None::<&PointResidual>, |acc, p| match acc {
            Some(a) if a.residual >= p.residual => Some(a),
            _ => Some(p),
        })
        .expect("nonempty");
    Ok(WitnessReport {
        system: sys.name().to_string(),
        storage: v.name(),
        gamma,
        tol,
        mode: if opts.mode.is_exact_for(sys) { "closed_form" } else { "sampled" },
        verdict: if worst.residual <= tol { Verdict::Pass } else { Verdict::Fail },
        max_residual: worst.residual,
        worst_x: worst.x.clone(),
        worst_zeta: worst.zeta.clone(),
        worst_u: worst.u.clone(),
        points_checked: points.len(),
        points,
    })
}

/// `lo, lo+step, ...` up to `hi` (inclusive within half a step).
pub fn gamma_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    if !(step > 0.0) || hi < lo {
        return Vec::new();
    }
    let count = ((hi - lo) / step + 0.5).floor() as usize;
    (0..=count).map(|k| lo + k as f64 * step).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct GainScan {
    /// Smallest passing grid gain, if any.
    pub gamma: Option<f64>,
    /// `(γ, max residual)` for every grid value visited.
    pub trace: Vec<(f64, f64)>,
}

/// Smallest `γ` in the increasing grid for which `check_witness` passes.
pub fn min_gain_scan(
    sys: &System,
    v: &dyn Storage,
    region: &Region,
    gammas: &[f64],
    opts: &WitnessOptions,
) -> Result<GainScan, HjiError> {
    if gammas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(HjiError::Invalid("gain grid must be strictly increasing".into()));
    }
    let mut trace = Vec::new();
    for &g in gammas {
        let rep = check_witness(sys, v, g, region, opts)?;
        trace.push((g, rep.max_residual));
        if rep.passed() {
            return Ok(GainScan { gamma: Some(g), trace });
        }
    }
    Ok(GainScan { gamma: None, trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::storage::Builtin;
    use crate::systems::zoo;

    fn affine(s: &System) -> &AffineSystem {
        s.as_affine().unwrap()
    }

    #[test]
    fn supply_values() {
        assert_eq!(supply(&[1.0, 1.0], &[1.0, 1.0], 1.0), 0.0);
        assert_eq!(supply(&[0.0, 0.0], &[2.0, 0.0], 1.0), 4.0);
        assert_eq!(supply(&[3.0, 4.0], &[0.0, 0.0], 5.0), -25.0);
    }

    #[test]
    fn affine_residual_values() {
        let s1 = zoo::sigma1();
        assert_eq!(affine_residual(affine(&s1), &[1.0, 1.0], &[2.0, 2.0], 1.0).unwrap(), 0.0);
        assert_eq!(affine_residual(affine(&s1), &[1.0, 1.0], &[2.0, 2.0], 0.5).unwrap(), 2.0);
        let s2 = zoo::sigma2();
        let r = affine_residual(affine(&s2), &[1.0, 1.0], &[2.0, 2.0 / 3.0], 1.0).unwrap();
        assert!(r.abs() < 1e-15, "{r}");
        assert_eq!(affine_residual(affine(&s2), &[0.3, -2.0], &[0.0, 0.0], 1.0).unwrap(), 4.09);
    }

    #[test]
    fn grid_sup_approaches_closed_form() {
        let s1 = zoo::sigma1();
        let (r, u) = general_residual(&s1, &[1.0, 1.0], &[2.0, 2.0], 1.0, &[Interval::new(-4.0, 4.0); 2], 81).unwrap();
        assert!(r.abs() < 1e-3);
        assert!((u[0] - 1.0).abs() < 1e-12 && (u[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sigma3_residual_at_half() {
        let s = zoo::sigma3_scalar();
        let (r, _) = general_residual(&s, &[0.5], &[1.0], 1.0, &[Interval::new(-3.0, 3.0)], 601).unwrap();
        assert!(r.abs() < 1e-12, "{r}");
    }

    #[test]
    fn channel_sup_closed_forms() {
        // p = 1.5, c = 2, γ = 1: r* = 1.5^2 = 2.25, value = 2*2.25^1.5 - 2.25^2
        let (v, r) = channel_sup(2.0, Phi::AbsPow, 1.5, 1.0);
        assert!((r.unwrap() - 2.25).abs() < 1e-12);
        assert!((v - (2.0 * 2.25_f64.powf(1.5) - 2.25 * 2.25)).abs() < 1e-12);
        assert_eq!(channel_sup(-2.0, Phi::AbsPow, 1.5, 1.0).0, 0.0);
        assert!(channel_sup(-2.0, Phi::SignedPow, 1.5, 1.0).1.unwrap() < 0.0);
        assert_eq!(channel_sup(0.5, Phi::AbsPow, 2.0, 1.0).0, 0.0);
        assert!(channel_sup(1.5, Phi::AbsPow, 2.0, 1.0).0.is_infinite());
        assert!(channel_sup(1e-9, Phi::AbsPow, 3.0, 1.0).0.is_infinite());
    }

    #[test]
    fn sigma1_claim_and_failure() {
        let sys = zoo::sigma1();
        let region = Region::square(-2.0, 2.0, 2, 41);
        let rep = check_witness(&sys, &Builtin::V1Scaled, 1.0, &region, &WitnessOptions::default()).unwrap();
        assert!(rep.passed(), "{rep:?}");
        assert!(rep.max_residual.abs() <= 1e-9);
        assert_eq!(rep.points_checked, 41 * 41 - 1);
        let rep = check_witness(&sys, &Builtin::V1Scaled, 0.9, &region, &WitnessOptions::default()).unwrap();
        assert!(!rep.passed());
        let at11 = rep.points.iter().find(|p| p.x == [1.0, 1.0]).unwrap();
        assert!((at11.residual - (2.0 / 0.9 - 2.0)).abs() < 1e-12);
    }

    #[test]
    fn sigma2_axis_uses_zero_coefficient_rule() {
        let sys = zoo::sigma2();
        let p = point_residual(&sys, &Builtin::V2, &[1.0, 0.0], 1.0, &ResidualMode::Auto).unwrap();
        assert!(p.residual <= 0.0 && p.residual.is_finite());
        // a drift with nonzero second component on the axis cannot absorb an unbounded ζ2
        let bad = System::Affine(AffineSystem::parse("bad", 2, 2, &["-x1", "1"], &[&["1", "0"], &["0", "1"]]).unwrap());
        let p = point_residual(&bad, &Builtin::V2, &[1.0, 0.0], 1.0, &ResidualMode::Auto).unwrap();
        assert_eq!(p.residual, f64::INFINITY);
    }

    #[test]
    fn scans() {
        let sys = zoo::sigma1();
        let region = Region::square(-2.0, 2.0, 2, 41);
        let g = min_gain_scan(&sys, &Builtin::V1Scaled, &region, &gamma_grid(0.5, 2.0, 0.01), &WitnessOptions::default())
            .unwrap()
            .gamma
            .unwrap();
        assert!((g - 1.0).abs() < 0.01 + 1e-12, "{g}");
        assert_eq!(gamma_grid(0.5, 2.0, 0.01).len(), 151);
    }

    #[test]
    fn invalid_inputs() {
        let sys = zoo::sigma1();
        let region = Region::square(-2.0, 2.0, 2, 3);
        assert!(matches!(
            check_witness(&sys, &Builtin::V1Scaled, 0.0, &region, &WitnessOptions::default()),
            Err(HjiError::InvalidGamma(_))
        ));
        let empty = Region::new(vec![Interval::point(0.0); 2], 1);
        assert!(matches!(
            check_witness(&sys, &Builtin::V1Scaled, 1.0, &empty, &WitnessOptions::default()),
            Err(HjiError::EmptyRegion)
        ));
    }
}
