//! Convolution with a normalized `C^∞` bump of constant radius.
//!
//! `ρ(y) ∝ exp(-1/(1-|y|²))` on the unit ball. Integrals over the ball use a
//! symmetric midpoint tensor rule; since `ρ` vanishes with all derivatives on
//! the boundary this is spectrally accurate for smooth integrands. Weights are
//! normalized to unit mass, and the gradient rule is divided by its first
//! moment so both value and gradient are exact on affine functions.

use crate::storage::{check_dim, Regularity, Storage, StorageCandidate, StorageError};

#[derive(Clone, Debug)]
pub struct BumpQuadrature {
    pub n: usize,
    pub nodes: Vec<Vec<f64>>,
    /// `w_j ρ(y_j)`, summing to one.
    pub value_weights: Vec<f64>,
    /// `w_j ∇ρ(y_j) / μ`.
    pub grad_weights: Vec<Vec<f64>>,
}

fn bump(r2: f64) -> f64 {
    if r2 >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - r2)).exp()
    }
}

/// Nodes per axis used by [`BumpQuadrature::for_dim`].
pub fn default_nodes_per_axis(n: usize) -> usize {
    match n {
        1 => 64,
        2 => 28,
        _ => 12,
    }
}

impl BumpQuadrature {
    pub fn new(n: usize, per_axis: usize) -> BumpQuadrature {
        let axis: Vec<f64> = (0..per_axis)
            .map(|j| -1.0 + (2 * j + 1) as f64 / per_axis as f64)
            .collect();
        let mut nodes: Vec<Vec<f64>> = vec![Vec::new()];
        for _ in 0..n {
            nodes = nodes
                .into_iter()
                .flat_map(|p| {
                    axis.iter().map(move |&c| {
                        let mut q = p.clone();
                        q.push(c);
                        q
                    })
                })
                .collect();
        }
        nodes.retain(|y| y.iter().map(|c| c * c).sum::<f64>() < 1.0);
        let raw: Vec<f64> = nodes.iter().map(|y| bump(y.iter().map(|c| c * c).sum())).collect();
        let mass: f64 = raw.iter().sum();
        let value_weights: Vec<f64> = raw.iter().map(|w| w / mass).collect();
        // ∇ρ = ρ · (-2y/(1-|y|²)²)
        let grads: Vec<Vec<f64>> = nodes
            .iter()
            .zip(&value_weights)
            .map(|(y, w)| {
                let s = 1.0 - y.iter().map(|c| c * c).sum::<f64>();
                y.iter().map(|c| -2.0 * c * w / (s * s)).collect()
            })
            .collect();
        let mu = -nodes.iter().zip(&grads).map(|(y, g)| y[0] * g[0]).sum::<f64>();
        let grad_weights = grads.into_iter().map(|g| g.into_iter().map(|c| c / mu).collect()).collect();
        BumpQuadrature {
            n,
            nodes,
            value_weights,
            grad_weights,
        }
    }

    pub fn for_dim(n: usize) -> BumpQuadrature {
        BumpQuadrature::new(n, default_nodes_per_axis(n))
    }
}

/// `V̂ = ρ_r * V`, scaled by `scale`; `V̂(0) := 0`.
#[derive(Clone, Debug)]
pub struct Mollified {
    pub inner: StorageCandidate,
    pub radius: f64,
    pub scale: f64,
    pub quad: std::sync::Arc<BumpQuadrature>,
}

impl Mollified {
    pub fn new(inner: StorageCandidate, radius: f64, quad: std::sync::Arc<BumpQuadrature>) -> Mollified {
        Mollified {
            inner,
            radius,
            scale: 1.0,
            quad,
        }
    }

    pub fn scaled(mut self, scale: f64) -> Mollified {
        self.scale = scale;
        self
    }

    /// Value and kernel gradient at `x != 0`.
    pub fn value_and_gradient(&self, x: &[f64]) -> Result<(f64, Vec<f64>), StorageError> {
        let n = x.len();
        let v0 = self.inner.value(x)?;
        let mut value = 0.0;
        let mut grad = vec![0.0; n];
        let mut z = vec![0.0; n];
        for ((y, wv), wg) in self.quad.nodes.iter().zip(&self.quad.value_weights).zip(&self.quad.grad_weights) {
            for k in 0..n {
                z[k] = x[k] - self.radius * y[k];
            }
            let vz = self.inner.value(&z)?;
            value += wv * vz;
            let dv = vz - v0;
            for k in 0..n {
                grad[k] += wg[k] * dv;
            }
        }
        let gs = self.scale / self.radius;
        Ok((self.scale * value, grad.into_iter().map(|g| g * gs).collect()))
    }
}

impl Storage for Mollified {
    fn name(&self) -> String {
        format!("mollified({}, r={})", self.inner.name(), self.radius)
    }

    fn dim(&self) -> Option<usize> {
        Some(self.quad.n)
    }

    fn value(&self, x: &[f64]) -> Result<f64, StorageError> {
        check_dim(self, x)?;
        if x.iter().all(|c| *c == 0.0) {
            return Ok(0.0);
        }
        Ok(self.value_and_gradient(x)?.0)
    }

    fn regularity(&self) -> Regularity {
        Regularity::Smooth
    }

    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        if x.len() != self.quad.n || x.iter().all(|c| *c == 0.0) {
            return None;
        }
        self.value_and_gradient(x).ok().map(|(_, g)| g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::storage::{ExprStorage, Regularity};
    use std::sync::Arc;

    #[test]
    fn weights_are_normalized_and_symmetric() {
        for n in 1..=3 {
            let q = BumpQuadrature::for_dim(n);
            assert!((q.value_weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            for k in 0..n {
                let s: f64 = q.grad_weights.iter().map(|g| g[k]).sum();
                assert!(s.abs() < 1e-10, "n={n} k={k} {s}");
            }
        }
    }

    #[test]
    fn affine_functions_are_reproduced() {
        let v = ExprStorage::parse("3*x1 - 2*x2 + 1", 2, Regularity::Smooth, None).unwrap();
        let m = Mollified::new(Arc::new(v), 0.3, Arc::new(BumpQuadrature::for_dim(2)));
        let (val, g) = m.value_and_gradient(&[0.7, -0.4]).unwrap();
        assert!((val - (2.1 + 0.8 + 1.0)).abs() < 1e-12);
        assert!((g[0] - 3.0).abs() < 1e-10 && (g[1] + 2.0).abs() < 1e-10);
    }

    #[test]
    fn absolute_value_in_one_dimension() {
        let v = ExprStorage::parse("abs(x1)", 1, Regularity::Lipschitz, None).unwrap();
        let r = 0.1;
        let m = Mollified::new(Arc::new(v), r, Arc::new(BumpQuadrature::for_dim(1)));
        for k in -20..=20 {
            let x = 0.01 * k as f64 + 0.003;
            let (val, g) = m.value_and_gradient(&[x]).unwrap();
            assert!(val >= x.abs() - 1e-12 && val <= x.abs() + r);
            assert!(g[0].abs() <= 1.0 + 1e-9);
        }
        let (_, g) = m.value_and_gradient(&[0.5]).unwrap();
        assert!((g[0] - 1.0).abs() < 1e-12);
    }
}
