/// Quadratic `c0 + c1 (x - x0) + c2 (x - x0)(x - x1)` in Newton form.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadraticPiece {
    x0: f64,
    x1: f64,
    c0: f64,
    c1: f64,
    c2: f64,
}

impl QuadraticPiece {
    /// Interpolant through three points (two when `pts.len() == 2`).
    pub fn through(xs: &[f64], ys: &[f64]) -> QuadraticPiece {
        let d01 = (ys[1] - ys[0]) / (xs[1] - xs[0]);
        let c2 = if xs.len() >= 3 {
            let d12 = (ys[2] - ys[1]) / (xs[2] - xs[1]);
            (d12 - d01) / (xs[2] - xs[0])
        } else {
            0.0
        };
        QuadraticPiece {
            x0: xs[0],
            x1: xs[1],
            c0: ys[0],
            c1: d01,
            c2,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.c0 + self.c1 * (x - self.x0) + self.c2 * (x - self.x0) * (x - self.x1)
    }

    fn antiderivative(&self, x: f64) -> f64 {
        let s = x - self.x0;
        let h1 = self.x1 - self.x0;
        self.c0 * s + self.c1 * s * s / 2.0 + self.c2 * (s * s * s / 3.0 - h1 * s * s / 2.0)
    }

    /// `∫_a^b` of the quadratic.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        self.antiderivative(b) - self.antiderivative(a)
    }

    /// `x ↦ -self(-x)`: the slope piece of a half built on mirrored abscissae.
    pub(crate) fn mirrored(&self) -> QuadraticPiece {
        QuadraticPiece {
            x0: -self.x0,
            x1: -self.x1,
            c0: -self.c0,
            c1: self.c1,
            c2: -self.c2,
        }
    }
}

/// Cumulative integral of the data `(xs, ys)` from `xs[0]`. Intervals are
/// paired and each pair is integrated with the quadratic through its three
/// nodes (composite Simpson on non-uniform grids); a trailing unpaired interval
/// reuses the last three nodes.
pub fn cumulative_quadratic(xs: &[f64], ys: &[f64]) -> (Vec<f64>, Vec<QuadraticPiece>) {
    let n = xs.len();
    let mut w = vec![0.0; n];
    let mut pieces = Vec::with_capacity(n.saturating_sub(1));
    for k in 0..n.saturating_sub(1) {
        let piece = if n == 2 {
            QuadraticPiece::through(&xs[0..2], &ys[0..2])
        } else {
            let s = (k - k % 2).min(n - 3);
            QuadraticPiece::through(&xs[s..s + 3], &ys[s..s + 3])
        };
        w[k + 1] = w[k] + piece.integral(xs[k], xs[k + 1]);
        pieces.push(piece);
    }
    (w, pieces)
}
