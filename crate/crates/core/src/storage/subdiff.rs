use serde::{Deserialize, Serialize};

/// Closed interval, possibly unbounded on either side.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Interval {
        debug_assert!(lo <= hi, "empty interval [{lo}, {hi}]");
        Interval { lo, hi }
    }

    pub fn point(v: f64) -> Interval {
        Interval { lo: v, hi: v }
    }

    pub fn real_line() -> Interval {
        Interval {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        }
    }

    pub fn is_degenerate(&self) -> bool {
        self.lo == self.hi
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }
}

/// Viscosity subdifferential restricted to coordinate boxes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum SubdiffSet {
    Empty,
    Singleton(Vec<f64>),
    Box(Vec<Interval>),
}

impl SubdiffSet {
    /// Builds a box and collapses it to a singleton when every side is degenerate.
    pub fn from_box(intervals: Vec<Interval>) -> SubdiffSet {
        SubdiffSet::Box(intervals).canonical()
    }

    pub fn canonical(self) -> SubdiffSet {
        match self {
            SubdiffSet::Box(iv) if iv.iter().all(Interval::is_degenerate) => {
                SubdiffSet::Singleton(iv.iter().map(|i| i.lo).collect())
            }
            other => other,
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, SubdiffSet::Empty)
    }

    /// Exact interval containment.
    pub fn contains(&self, zeta: &[f64]) -> bool {
        match self {
            SubdiffSet::Empty => false,
            SubdiffSet::Singleton(v) => v.len() == zeta.len() && v.iter().zip(zeta).all(|(a, b)| a == b),
            SubdiffSet::Box(iv) => {
                iv.len() == zeta.len() && iv.iter().zip(zeta).all(|(i, z)| i.contains(*z))
            }
        }
    }

    pub fn intervals(&self) -> Vec<Interval> {
        match self {
            SubdiffSet::Empty => Vec::new(),
            SubdiffSet::Singleton(v) => v.iter().map(|&c| Interval::point(c)).collect(),
            SubdiffSet::Box(iv) => iv.clone(),
        }
    }

    /// Coordinates whose interval is unbounded on at least one side.
    pub fn unbounded_coords(&self) -> Vec<usize> {
        self.intervals()
            .iter()
            .enumerate()
            .filter(|(_, i)| !i.is_bounded())
            .map(|(k, _)| k)
            .collect()
    }

    /// Vertices of the box restricted to its bounded coordinates; unbounded
    /// coordinates are set to zero. Degenerate sides contribute one value, so a
    /// singleton yields exactly one vertex.
    pub fn finite_vertices(&self) -> Vec<Vec<f64>> {
        let iv = self.intervals();
        if matches!(self, SubdiffSet::Empty) {
            return Vec::new();
        }
        let mut out = vec![Vec::with_capacity(iv.len())];
        for i in &iv {
            let choices: Vec<f64> = if !i.is_bounded() {
                vec![0.0]
            } else if i.is_degenerate() {
                vec![i.lo]
            } else {
                vec![i.lo, i.hi]
            };
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    choices.iter().map(move |&c| {
                        let mut v = prefix.clone();
                        v.push(c);
                        v
                    })
                })
                .collect();
        }
        out
    }

    pub fn scaled(&self, factor: f64) -> SubdiffSet {
        let scale = |i: &Interval| {
            let (a, b) = (i.lo * factor, i.hi * factor);
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            // 0 * inf
            Interval {
                lo: if lo.is_nan() { 0.0 } else { lo },
                hi: if hi.is_nan() { 0.0 } else { hi },
            }
        };
        match self {
            SubdiffSet::Empty => SubdiffSet::Empty,
            SubdiffSet::Singleton(v) => SubdiffSet::Singleton(v.iter().map(|c| c * factor).collect()),
            SubdiffSet::Box(iv) => SubdiffSet::from_box(iv.iter().map(scale).collect()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_prefers_singleton() {
        let s = SubdiffSet::from_box(vec![Interval::point(1.0), Interval::point(2.0)]);
        assert_eq!(s, SubdiffSet::Singleton(vec![1.0, 2.0]));
    }

    #[test]
    fn vertices_of_mixed_box() {
        let s = SubdiffSet::from_box(vec![
            Interval::new(-2.0, 2.0),
            Interval::point(2.0),
            Interval::real_line(),
        ]);
        let v = s.finite_vertices();
        assert_eq!(v, vec![vec![-2.0, 2.0, 0.0], vec![2.0, 2.0, 0.0]]);
        assert_eq!(s.unbounded_coords(), vec![2]);
    }

    #[test]
    fn containment_is_exact() {
        let s = SubdiffSet::from_box(vec![Interval::new(1.0, 2.0)]);
        assert!(s.contains(&[1.0]));
        assert!(s.contains(&[2.0]));
        assert!(!s.contains(&[2.0 + 1e-15]));
        assert!(!SubdiffSet::Empty.contains(&[0.0]));
    }
}
