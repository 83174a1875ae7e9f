//! Piecewise facts about the scalar non-affine example, checked on grids.

use serde::Serialize;

use crate::systems::sigma3::{f, phi, psi};

/// Rounding allowance for the inequality properties.
pub const PIECE_INEQ_TOL: f64 = 1e-14;

/// Largest defect per property; inequality defects are `max(lhs - rhs, 0)`.
#[derive(Clone, Debug, Default, Serialize)]
pub struct PieceDefects {
    /// `x <= 1, |u| <= 1`: `f = u² - x²`.
    pub case1_equality: f64,
    /// `x <= 1, |u| >= 1`: `f <= u² - x²`.
    pub case2_inequality: f64,
    /// `x >= 1, |u| <= 1`: `f <= (u² - x²)/2`.
    pub case3_inequality: f64,
    /// `x >= 1, |u| >= 1`: `f = (u² - x²)/2`.
    pub case4_equality: f64,
    /// `|φ(s,t)| <= |s|` with matching sign.
    pub phi_range: f64,
    /// `φ(s,t) = 0` for `t >= |s|`.
    pub phi_zero_regime: f64,
    /// `φ(s,t) = s` for `t <= -|s|`.
    pub phi_identity_regime: f64,
    /// `ψ(a,b) = (b-a)/2` for `a, b >= 1`.
    pub psi_half: f64,
    /// `ψ(a,b) = b - a` for `a, b <= 1`.
    pub psi_full: f64,
    /// `ψ(a,b)` between `b-a` and `(b-a)/2`.
    pub psi_bracket: f64,
    pub points: usize,
}

impl PieceDefects {
    pub fn max_equality_defect(&self) -> f64 {
        self.case1_equality.max(self.case4_equality)
    }

    pub fn max_inequality_defect(&self) -> f64 {
        self.case2_inequality.max(self.case3_inequality)
    }

    /// Equalities within `eq_tol`; inequalities never violated beyond `ineq_tol`,
    /// which only has to absorb rounding in the two sides.
    pub fn holds(&self, eq_tol: f64, ineq_tol: f64) -> bool {
        self.max_equality_defect() <= eq_tol
            && self.max_inequality_defect() <= ineq_tol
            && self.phi_range <= ineq_tol
            && self.phi_zero_regime <= eq_tol
            && self.phi_identity_regime <= eq_tol
            && self.psi_half <= eq_tol
            && self.psi_full <= eq_tol
            && self.psi_bracket <= ineq_tol
    }
}

fn bump(slot: &mut f64, v: f64) {
    if v > *slot {
        *slot = v;
    }
}

/// Checks the four case properties of `f` for `x >= 0` and the range facts of
/// `φ` and `ψ` over every pair drawn from `x_grid × u_grid`.
///
/// `φ` is probed at `(s, t) = (u, x)` and `(u, -x)`, `ψ` at `(a, b) = (x, |u|)`.
pub fn verify_sigma3_pieces(x_grid: &[f64], u_grid: &[f64]) -> PieceDefects {
    let mut d = PieceDefects::default();
    for &x in x_grid {
        for &u in u_grid {
            d.points += 1;
            let au = u.abs();
            if x >= 0.0 {
                let fx = f(x, u);
                let full = u * u - x * x;
                if x <= 1.0 && au <= 1.0 {
                    bump(&mut d.case1_equality, (fx - full).abs());
                }
                if x <= 1.0 && au >= 1.0 {
                    bump(&mut d.case2_inequality, fx - full);
                }
                if x >= 1.0 && au <= 1.0 {
                    bump(&mut d.case3_inequality, fx - 0.5 * full);
                }
                if x >= 1.0 && au >= 1.0 {
                    bump(&mut d.case4_equality, (fx - 0.5 * full).abs());
                }

                let (a, b) = (x, au);
                let ps = psi(a, b);
                if a >= 1.0 && b >= 1.0 {
                    bump(&mut d.psi_half, (ps - 0.5 * (b - a)).abs());
                }
                if a <= 1.0 && b <= 1.0 {
                    bump(&mut d.psi_full, (ps - (b - a)).abs());
                }
                let (lo, hi) = if b - a <= 0.0 { (b - a, 0.5 * (b - a)) } else { (0.5 * (b - a), b - a) };
                bump(&mut d.psi_bracket, (lo - ps).max(ps - hi));
            }
            for (s, t) in [(u, x), (u, -x), (x, u), (-x, u)] {
                let p = phi(s, t);
                let range = if s >= 0.0 { (-p).max(p - s) } else { (p).max(s - p) };
                bump(&mut d.phi_range, range);
                if t >= s.abs() {
                    bump(&mut d.phi_zero_regime, p.abs());
                }
                if t <= -s.abs() {
                    bump(&mut d.phi_identity_regime, (p - s).abs());
                }
            }
        }
    }
    d
}
