//! Construction of a witness that is C¹ away from the origin for scalar
//! input-affine systems, starting from a locally Lipschitz one.
//!
//! With `a = Σ g_i(x)²`, `b = 4γ g0(x)`, `c = 4γ x²`, a slope `p` satisfies
//! `p·(g0 + Σ u_i g_i) <= γ|u|² - x²` for all `u` iff `Δ(p) = ap² + bp + c <= 0`.
//! The selector is `p(x) = h(x)` if `a = 0`, else `min{h(x), (-b+√(b²-4ac))/2a}`,
//! and `W(x) = ∫_0^x p`.

mod quad;

use serde::Serialize;
use thiserror::Error;

use crate::expr::{self, EvalError, Expr};
use crate::hji::{self, HjiError, WitnessOptions, WitnessReport};
use crate::par;
use crate::storage::{Regularity, Storage, StorageError};
use crate::systems::{AffineSystem, System};

pub use quad::{cumulative_quadratic, QuadraticPiece};

pub const TOL_DISC: f64 = 1e-10;
pub const H_FLOOR: f64 = 1e-9;
pub const DIRECT_U_POINTS: usize = 1000;
pub const DIRECT_SLACK: f64 = 1e-6;
/// Allowed `V - W` excess and `Δ(p)` excess in the construction contracts.
pub const CONTRACT_TOL: f64 = 1e-9;
const WINDOW_SAMPLES: usize = 16;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum Construct1dError {
    #[error("drift has the wrong sign at x = {x}: g0(x) = {g0}")]
    DriftSign { x: f64, g0: f64 },
    #[error("no admissible slope at x = {x}: discriminant {disc}")]
    InfeasibleAt { x: f64, disc: f64 },
    #[error("system must be input-affine with one state, got `{0}`")]
    NotScalarAffine(String),
    #[error("hypothesis fails: candidate is not a witness on the grid (max residual {max_residual} at x = {worst_x})")]
    HypothesisFailed { max_residual: f64, worst_x: f64 },
    #[error("window must be positive, got {0}")]
    DegenerateWindow(f64),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error(transparent)]
    Hji(#[from] HjiError),
    #[error(transparent)]
    Storage(#[from] StorageError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QuadCoeffs {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl QuadCoeffs {
    /// Coefficients at `x`; for `x < 0` the linear coefficient is negated so the
    /// same quadratic governs `|q|` for a nonpositive slope `q`.
    pub fn at(sys: &AffineSystem, gamma: f64, x: f64) -> Result<QuadCoeffs, EvalError> {
        let (g0, g) = sys.fields(&[x])?;
        let a = g.iter().map(|gi| gi[0] * gi[0]).sum();
        let b = 4.0 * gamma * g0[0];
        let c = 4.0 * gamma * x * x;
        Ok(QuadCoeffs {
            a,
            b: if x < 0.0 { -b } else { b },
            c,
        })
    }

    pub fn discriminant(&self) -> f64 {
        self.b * self.b - 4.0 * self.a * self.c
    }

    /// Smaller root in the cancellation-free form `2c / (|b| + √disc)`.
    pub fn lower_root(&self) -> Option<f64> {
        let d = self.discriminant();
        (d >= 0.0).then(|| 2.0 * self.c / (self.b.abs() + d.sqrt()))
    }
}

pub fn delta(q: &QuadCoeffs, p: f64) -> f64 {
    q.a * p * p + q.b * p + q.c
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Membership {
    Direct,
    Quadratic,
}

fn scalar_affine(sys: &System) -> Result<&AffineSystem, Construct1dError> {
    match sys.as_affine() {
        Some(a) if a.n == 1 => Ok(a),
        _ => Err(Construct1dError::NotScalarAffine(sys.name().to_string())),
    }
}

/// Whether `p` is an admissible slope at `x > 0`.
pub fn f_membership(sys: &AffineSystem, gamma: f64, x: f64, p: f64, mode: Membership) -> Result<bool, EvalError> {
    let q = QuadCoeffs::at(sys, gamma, x)?;
    match mode {
        Membership::Quadratic => Ok(delta(&q, p) <= 0.0),
        Membership::Direct => {
            let (g0, g) = sys.fields(&[x])?;
            let radius = p.abs() * q.a.sqrt() / gamma + 1.0;
            let m = g.len();
            let per_dim = if m <= 1 {
                DIRECT_U_POINTS
            } else {
                (DIRECT_U_POINTS as f64).powf(1.0 / m as f64).ceil() as usize
            };
            let grid = hji::u_grid(&vec![crate::storage::Interval::new(-radius, radius); m], per_dim);
            let worst = grid
                .iter()
                .map(|u| {
                    let drift = g0[0] + u.iter().zip(&g).map(|(ui, gi)| ui * gi[0]).sum::<f64>();
                    p * drift - hji::supply(&[x], u, gamma)
                })
                .fold(f64::NEG_INFINITY, f64::max);
            Ok(worst <= DIRECT_SLACK)
        }
    }
}

/// Continuous positive bound `h` with `|V'| <= h/2`.
#[derive(Clone, Debug)]
pub enum Envelope {
    Expr(Expr),
    /// Piecewise-linear through `(xs[k], hs[k])`, constant beyond the ends.
    Tabulated { xs: Vec<f64>, hs: Vec<f64> },
}

impl Envelope {
    pub fn parse(src: &str) -> Result<Envelope, expr::ParseError> {
        Ok(Envelope::Expr(expr::parse(src, 1, 0)?))
    }

    pub fn eval(&self, x: f64) -> Result<f64, EvalError> {
        match self {
            Envelope::Expr(e) => e.eval(&[x], &[]),
            Envelope::Tabulated { xs, hs } => Ok(interp(xs, hs, x)),
        }
    }
}

pub(crate) fn interp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[xs.len() - 1] {
        return ys[ys.len() - 1];
    }
    let k = xs.partition_point(|&s| s <= x) - 1;
    let t = (x - xs[k]) / (xs[k + 1] - xs[k]);
    ys[k] + t * (ys[k + 1] - ys[k])
}

/// `h(x) = 2(1+margin) · max |ΔV/Δx|` over `[x-window, x+window]`, floored at [`H_FLOOR`].
pub fn h_from_v(v: &dyn Storage, grid: &[f64], window: f64, margin: f64) -> Result<Envelope, Construct1dError> {
    if !(window > 0.0) {
        return Err(Construct1dError::DegenerateWindow(window));
    }
    check_sorted(grid)?;
    let hs = par::map(grid, |&x| -> Result<f64, StorageError> {
        let pts: Vec<f64> = (0..=WINDOW_SAMPLES)
            .map(|i| x - window + 2.0 * window * i as f64 / WINDOW_SAMPLES as f64)
            .collect();
        let vals = pts.iter().map(|&s| v.value(&[s])).collect::<Result<Vec<_>, _>>()?;
        let q = (1..pts.len())
            .map(|i| ((vals[i] - vals[i - 1]) / (pts[i] - pts[i - 1])).abs())
            .fold(0.0, f64::max);
        Ok((2.0 * (1.0 + margin) * q).max(H_FLOOR))
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    Ok(Envelope::Tabulated { xs: grid.to_vec(), hs })
}

fn check_sorted(grid: &[f64]) -> Result<(), Construct1dError> {
    if grid.is_empty() {
        return Err(Construct1dError::InvalidGrid("empty grid".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) || grid.iter().any(|x| !x.is_finite()) {
        return Err(Construct1dError::InvalidGrid("abscissae must be finite and strictly increasing".into()));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// `a = 0`: the envelope itself.
    Envelope,
    /// `h(x)` is below the larger root.
    EnvelopeCap,
    /// The larger root of `Δ`.
    Root,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Selection {
    /// Signed slope: `>= 0` for `x > 0`, `<= 0` for `x < 0`.
    pub p: f64,
    pub coeffs: QuadCoeffs,
    pub h: f64,
    pub branch: Branch,
    /// The discriminant was in `[-TOL_DISC, 0)` and was clamped to zero.
    pub clamped: bool,
    /// `|disc| <= TOL_DISC`: the admissible slope set is a single point.
    pub double_root: bool,
}

/// The selector at `x != 0`.
pub fn p_of_x(sys: &AffineSystem, gamma: f64, h: &Envelope, x: f64) -> Result<Selection, Construct1dError> {
    let (g0, _) = sys.fields(&[x])?;
    let g0 = g0[0];
    let wrong_sign = if x > 0.0 { g0 >= 0.0 } else { g0 <= 0.0 };
    if x == 0.0 || wrong_sign {
        return Err(Construct1dError::DriftSign { x, g0 });
    }
    let q = QuadCoeffs::at(sys, gamma, x)?;
    let hx = h.eval(x)?;
    let sgn = x.signum();
    if q.a == 0.0 {
        return Ok(Selection {
            p: sgn * hx,
            coeffs: q,
            h: hx,
            branch: Branch::Envelope,
            clamped: false,
            double_root: false,
        });
    }
    let mut disc = q.discriminant();
    let double_root = disc.abs() <= TOL_DISC;
    let mut clamped = false;
    if disc < -TOL_DISC {
        return Err(Construct1dError::InfeasibleAt { x, disc });
    }
    if disc < 0.0 {
        disc = 0.0;
        clamped = true;
    }
    let root = (-q.b + disc.sqrt()) / (2.0 * q.a);
    let (mag, branch) = if hx <= root { (hx, Branch::EnvelopeCap) } else { (root, Branch::Root) };
    Ok(Selection {
        p: sgn * mag,
        coeffs: q,
        h: hx,
        branch,
        clamped,
        double_root,
    })
}

/// The constructed witness `W(x) = ∫_0^x p`, piecewise quadratic in between nodes.
#[derive(Clone, Debug, Serialize)]
pub struct ConstructedW {
    /// Nodes in increasing order, including `0`.
    pub grid: Vec<f64>,
    pub p_values: Vec<f64>,
    pub w_values: Vec<f64>,
    pub gamma: f64,
    #[serde(skip)]
    pieces: Vec<QuadraticPiece>,
}

impl ConstructedW {
    fn locate(&self, x: f64) -> usize {
        let k = self.grid.partition_point(|&s| s <= x);
        k.saturating_sub(1).min(self.pieces.len() - 1)
    }

    /// Rows `x, p, W`.
    pub fn csv_rows(&self) -> (Vec<String>, Vec<Vec<String>>) {
        let header = vec!["x".to_string(), "p".to_string(), "W".to_string()];
        let rows = (0..self.grid.len())
            .map(|k| vec![self.grid[k].to_string(), self.p_values[k].to_string(), self.w_values[k].to_string()])
            .collect();
        (header, rows)
    }
}

impl Storage for ConstructedW {
    fn name(&self) -> String {
        "constructed_w".into()
    }

    fn dim(&self) -> Option<usize> {
        Some(1)
    }

    fn value(&self, x: &[f64]) -> Result<f64, StorageError> {
        crate::storage::check_dim(self, x)?;
        let k = self.locate(x[0]);
        Ok(self.w_values[k] + self.pieces[k].integral(self.grid[k], x[0]))
    }

    fn regularity(&self) -> Regularity {
        Regularity::C1AwayFromOrigin
    }

    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        if x.len() != 1 {
            return None;
        }
        if let Ok(k) = self.grid.binary_search_by(|s| s.total_cmp(&x[0])) {
            return Some(vec![self.p_values[k]]);
        }
        Some(vec![self.pieces[self.locate(x[0])].eval(x[0])])
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ContractReport {
    /// `min (W - V)` over nonzero grid nodes.
    pub min_w_minus_v: f64,
    pub w_dominates_v: bool,
    pub max_delta: f64,
    pub delta_nonpositive: bool,
    pub min_p_sign_ok: bool,
    pub p_within_envelope: bool,
    pub clamped_points: usize,
    pub double_root_points: usize,
    pub witness: WitnessReport,
}

impl ContractReport {
    pub fn holds(&self) -> bool {
        self.w_dominates_v && self.delta_nonpositive && self.min_p_sign_ok && self.p_within_envelope && self.witness.passed()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Construction {
    pub w: ConstructedW,
    pub selections: Vec<Selection>,
    pub contracts: ContractReport,
}

/// Builds `W` on the nonzero abscissae of `grid` after checking the hypothesis there.
pub fn construct_w(sys: &System, gamma: f64, v: &dyn Storage, h: &Envelope, grid: &[f64]) -> Result<Construction, Construct1dError> {
    let affine = scalar_affine(sys)?;
    check_sorted(grid)?;
    let xs: Vec<f64> = grid.iter().copied().filter(|&x| x != 0.0).collect();
    if xs.is_empty() {
        return Err(Construct1dError::InvalidGrid("no nonzero abscissa".into()));
    }
    let points: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
    let hyp = hji::check_witness_at(sys, v, gamma, &points, &WitnessOptions::default())?;
    if !hyp.passed() {
        return Err(Construct1dError::HypothesisFailed {
            max_residual: hyp.max_residual,
            worst_x: hyp.worst_x[0],
        });
    }

    let selections = par::map(&xs, |&x| p_of_x(affine, gamma, h, x))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;

    let split = xs.partition_point(|&x| x < 0.0);
    let (neg_x, pos_x) = xs.split_at(split);
    let (neg_p, pos_p): (Vec<f64>, Vec<f64>) = {
        let p: Vec<f64> = selections.iter().map(|s| s.p).collect();
        (p[..split].to_vec(), p[split..].to_vec())
    };

    // Each half integrates outward from 0 with p(0) extrapolated linearly.
    let half = |xs: &[f64], ps: &[f64], sign: f64| -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<QuadraticPiece>) {
        let mut nodes = vec![0.0];
        let mut vals = vec![0.0];
        nodes.extend(xs.iter().map(|x| sign * x));
        vals.extend(ps.iter().map(|p| sign * p));
        if xs.len() >= 2 {
            let (x1, x2, p1, p2) = (nodes[1], nodes[2], vals[1], vals[2]);
            vals[0] = (p1 - x1 * (p2 - p1) / (x2 - x1)).max(0.0);
        } else if xs.len() == 1 {
            vals[0] = 0.0;
        }
        let (w, pieces) = cumulative_quadratic(&nodes, &vals);
        (nodes, vals, w, pieces)
    };
    let mut rev_neg_x: Vec<f64> = neg_x.to_vec();
    let mut rev_neg_p: Vec<f64> = neg_p;
    rev_neg_x.reverse();
    rev_neg_p.reverse();
    let (pn, pv, pw, ppieces) = half(pos_x, &pos_p, 1.0);
    let (nn, nv, nw, npieces) = half(&rev_neg_x, &rev_neg_p, -1.0);

    // Assemble increasing nodes: negative half mirrored back, then 0 and the positive half.
    let mut grid_all = Vec::new();
    let mut p_all = Vec::new();
    let mut w_all = Vec::new();
    let mut pieces = Vec::new();
    if !neg_x.is_empty() {
        for k in (1..nn.len()).rev() {
            grid_all.push(-nn[k]);
            p_all.push(-nv[k]);
            w_all.push(nw[k]);
            // piece on [-nn[k], -nn[k-1]] in mirrored coordinates
            pieces.push(npieces[k - 1].mirrored());
        }
    }
    grid_all.push(0.0);
    if neg_x.is_empty() {
        p_all.push(pv[0]);
    } else if pos_x.is_empty() {
        p_all.push(-nv[0]);
    } else {
        p_all.push(0.5 * (pv[0] - nv[0]));
    }
    w_all.push(0.0);
    for k in 1..pn.len() {
        pieces.push(ppieces[k - 1]);
        grid_all.push(pn[k]);
        p_all.push(pv[k]);
        w_all.push(pw[k]);
    }
    if pieces.is_empty() {
        return Err(Construct1dError::InvalidGrid("need at least one nonzero abscissa".into()));
    }
    let w = ConstructedW {
        grid: grid_all,
        p_values: p_all,
        w_values: w_all,
        gamma,
        pieces,
    };

    let mut min_w_minus_v = f64::INFINITY;
    for &x in &xs {
        min_w_minus_v = min_w_minus_v.min(w.value(&[x])? - v.value(&[x])?);
    }
    let max_delta = selections
        .iter()
        .map(|s| delta(&s.coeffs, s.p.abs()))
        .fold(f64::NEG_INFINITY, f64::max);
    let min_p_sign_ok = xs.iter().zip(&selections).all(|(x, s)| s.p * x.signum() >= 0.0);
    let p_within_envelope = selections.iter().all(|s| s.p.abs() <= s.h);
    let witness = hji::check_witness_at(sys, &w, gamma, &points, &WitnessOptions::default())?;
    let contracts = ContractReport {
        min_w_minus_v,
        w_dominates_v: min_w_minus_v >= -CONTRACT_TOL,
        max_delta,
        delta_nonpositive: max_delta <= CONTRACT_TOL,
        min_p_sign_ok,
        p_within_envelope,
        clamped_points: selections.iter().filter(|s| s.clamped).count(),
        double_root_points: selections.iter().filter(|s| s.double_root).count(),
        witness,
    };
    Ok(Construction { w, selections, contracts })
}
