//! Numeric test of the viscosity-subgradient liminf condition.
//!
//! For each radius `r` the quotient `[V(x+h) - V(x) - ζ·h] / |h|` is minimized
//! over sampled `h` with `|h| ∈ [r/2, r]`. The per-radius minima are then
//! extrapolated linearly in `r` to `r = 0` from the two smallest radii, which
//! removes the `O(r)` curvature term of smooth-but-concave directions while
//! leaving cone-like kink defects (constant in `r`) untouched.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{check_dim, Storage, StorageError};

pub const DEFAULT_SUBGRADIENT_TOL: f64 = 1e-7;

const ANGLES_2D: usize = 64;
const SHELL_FRACTIONS: [f64; 3] = [0.5, 0.75, 1.0];

pub fn default_radii() -> Vec<f64> {
    vec![1e-2, 1e-3, 1e-4, 1e-5, 1e-6]
}

#[derive(Clone, Debug, Serialize)]
pub struct SubgradientCheck {
    pub accepted: bool,
    /// `(radius, minimum quotient)` per radius, largest radius first.
    pub minima: Vec<(f64, f64)>,
    /// Extrapolated limit of the minima as the radius shrinks.
    pub limit: f64,
}

fn directions(n: usize) -> Vec<Vec<f64>> {
    match n {
        0 => Vec::new(),
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..ANGLES_2D)
            .map(|k| {
                let th = std::f64::consts::TAU * k as f64 / ANGLES_2D as f64;
                vec![th.cos(), th.sin()]
            })
            .collect(),
        _ => {
            let mut out = Vec::new();
            for k in 0..n {
                for s in [1.0, -1.0] {
                    let mut d = vec![0.0; n];
                    d[k] = s;
                    out.push(d);
                }
            }
            let mut rng = ChaCha8Rng::seed_from_u64(0);
            while out.len() < 2 * n + 4 * n * n {
                let d: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let norm = d.iter().map(|c| c * c).sum::<f64>().sqrt();
                if norm > 1e-3 && norm <= 1.0 {
                    out.push(d.iter().map(|c| c / norm).collect());
                }
            }
            out
        }
    }
}

/// Checks whether `zeta` is a viscosity subgradient of `v` at `x`.
///
/// Rejection is conclusive up to sampling; acceptance is evidence only.
pub fn verify_subgradient(
    v: &dyn Storage,
    x: &[f64],
    zeta: &[f64],
    radii: &[f64],
    tol: f64,
) -> Result<SubgradientCheck, StorageError> {
    check_dim(v, x)?;
    let mut radii: Vec<f64> = radii.iter().copied().filter(|r| *r > 0.0).collect();
    radii.sort_by(|a, b| b.total_cmp(a));
    radii.dedup();

    let v0 = v.value(x)?;
    let dirs = directions(x.len());
    let mut minima = Vec::with_capacity(radii.len());
    let mut xh = x.to_vec();
    for &r in &radii {
        let mut best = f64::INFINITY;
        for d in &dirs {
            for frac in SHELL_FRACTIONS {
                let len = frac * r;
                for k in 0..x.len() {
                    xh[k] = x[k] + len * d[k];
                }
                let dot: f64 = (0..x.len()).map(|k| zeta[k] * (xh[k] - x[k])).sum();
                let hn = (0..x.len()).map(|k| (xh[k] - x[k]).powi(2)).sum::<f64>().sqrt();
                let q = (v.value(&xh)? - v0 - dot) / hn;
                best = best.min(q);
            }
        }
        minima.push((r, best));
    }

    let limit = match minima.as_slice() {
        [] => f64::NAN,
        [(_, m)] => *m,
        [.., (r1, m1), (r2, m2)] => m2 - r2 * (m1 - m2) / (r1 - r2),
    };
    let last = minima.last().map_or(f64::NAN, |(_, m)| *m);
    let accepted = last.max(limit) >= -tol;
    Ok(SubgradientCheck {
        accepted,
        minima,
        limit,
    })
}
