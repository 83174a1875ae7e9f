use serde::{Deserialize, Serialize};

use crate::storage::Interval;

pub const DEFAULT_EXCLUDE_RADIUS: f64 = 1e-9;

/// Tensor grid over a box with the origin's neighbourhood removed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub bounds: Vec<Interval>,
    pub points_per_dim: usize,
    pub exclude_radius: f64,
}

pub(crate) fn axis(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![0.5 * (lo + hi)],
        _ => (0..points)
            .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
            .collect(),
    }
}

impl Region {
    pub fn new(bounds: Vec<Interval>, points_per_dim: usize) -> Region {
        Region {
            bounds,
            points_per_dim,
            exclude_radius: DEFAULT_EXCLUDE_RADIUS,
        }
    }

    /// `[lo, hi]^n`.
    pub fn square(lo: f64, hi: f64, n: usize, points_per_dim: usize) -> Region {
        Region::new(vec![Interval::new(lo, hi); n], points_per_dim)
    }

    pub fn with_exclude_radius(mut self, r: f64) -> Region {
        self.exclude_radius = r;
        self
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    /// Grid points in lexicographic order (first coordinate slowest).
    pub fn points(&self) -> Vec<Vec<f64>> {
        let axes: Vec<Vec<f64>> = self
            .bounds
            .iter()
            .map(|iv| axis(iv.lo, iv.hi, self.points_per_dim))
            .collect();
        let mut out: Vec<Vec<f64>> = vec![Vec::new()];
        for a in &axes {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    a.iter().map(move |&c| {
                        let mut v = prefix.clone();
                        v.push(c);
                        v
                    })
                })
                .collect();
        }
        let r2 = self.exclude_radius * self.exclude_radius;
        out.retain(|x| x.iter().map(|c| c * c).sum::<f64>() >= r2 && !x.is_empty());
        out
    }
}
