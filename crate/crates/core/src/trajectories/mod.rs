//! Fixed-step RK4 trajectories, the integral dissipation audit and an
//! empirical lower bound on the L² gain.

mod signal;

use serde::Serialize;
use thiserror::Error;

use crate::hji::{norm2, supply};
use crate::par;
use crate::storage::{Storage, StorageError};
use crate::systems::{System, SystemError};

pub use signal::{InputSignal, Side};

pub const BLOWUP_NORM: f64 = 1e8;
pub const DEFAULT_STEP: f64 = 1e-3;
/// Inputs with `∫|u|²` below this are skipped by [`l2_gain_lowerbound`].
pub const MIN_INPUT_ENERGY: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum TrajectoryError {
    #[error("state norm exceeded {BLOWUP_NORM:e} at t = {t}")]
    Blowup { t: f64 },
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Storage(#[from] StorageError),
    #[error("{0}")]
    Invalid(String),
    #[error("no admissible input: every ensemble member has negligible energy")]
    NoAdmissibleInput,
}

#[derive(Clone, Debug, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub input: InputSignal,
    pub step: f64,
}

impl Trajectory {
    /// Rows `t, x1..xn, u1..um` with `u` sampled from the right.
    pub fn csv_rows(&self) -> (Vec<String>, Vec<Vec<String>>) {
        let n = self.states.first().map_or(0, Vec::len);
        let m = self.input.dim();
        let mut header = vec!["t".to_string()];
        header.extend((1..=n).map(|i| format!("x{i}")));
        header.extend((1..=m).map(|i| format!("u{i}")));
        let rows = self
            .times
            .iter()
            .zip(&self.states)
            .map(|(t, x)| {
                let mut row = vec![t.to_string()];
                row.extend(x.iter().map(|c| c.to_string()));
                row.extend(self.input.at(*t, Side::Right).iter().map(|c| c.to_string()));
                row
            })
            .collect();
        (header, rows)
    }
}

fn axpy(x: &[f64], a: f64, k: &[f64]) -> Vec<f64> {
    x.iter().zip(k).map(|(xi, ki)| xi + a * ki).collect()
}

/// One classical RK4 step from `(t, x)`; the input is read right-continuously at
/// `t`, at the midpoint, and left-continuously at `t + h`.
pub fn rk4_step(sys: &System, x: &[f64], t: f64, h: f64, u: &InputSignal) -> Result<Vec<f64>, SystemError> {
    let u0 = u.at(t, Side::Right);
    let um = u.at(t + 0.5 * h, Side::Right);
    let u1 = u.at(t + h, Side::Left);
    let k1 = sys.dynamics(x, &u0)?;
    let k2 = sys.dynamics(&axpy(x, 0.5 * h, &k1), &um)?;
    let k3 = sys.dynamics(&axpy(x, 0.5 * h, &k2), &um)?;
    let k4 = sys.dynamics(&axpy(x, h, &k3), &u1)?;
    Ok((0..x.len())
        .map(|i| x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}

/// Integrates on `[a, b]` with `N = round((b-a)/step)` equal steps.
pub fn integrate(sys: &System, x0: &[f64], u: &InputSignal, span: (f64, f64), step: f64) -> Result<Trajectory, TrajectoryError> {
    let (a, b) = span;
    if !(step > 0.0) || !(b > a) {
        return Err(TrajectoryError::Invalid(format!("need step > 0 and b > a, got step {step} on [{a}, {b}]")));
    }
    u.validate().map_err(TrajectoryError::Invalid)?;
    if u.dim() != sys.m() {
        return Err(SystemError::Dimension {
            what: "input",
            expected: sys.m(),
            got: u.dim(),
        }
        .into());
    }
    let steps = ((b - a) / step).round().max(1.0) as usize;
    let h = (b - a) / steps as f64;
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    times.push(a);
    states.push(x0.to_vec());
    let mut x = x0.to_vec();
    for k in 0..steps {
        let t = a + k as f64 * h;
        x = rk4_step(sys, &x, t, h, u)?;
        let t_next = a + (k + 1) as f64 * h;
        if !x.iter().all(|c| c.is_finite()) || norm2(&x).sqrt() > BLOWUP_NORM {
            return Err(TrajectoryError::Blowup { t: t_next });
        }
        times.push(t_next);
        states.push(x.clone());
    }
    Ok(Trajectory {
        times,
        states,
        input: u.clone(),
        step: h,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct DissipationAudit {
    /// `max_{a<=b} V(x(b)) - V(x(a)) - ∫_a^b (γ|u|² - |x|²) dt`; never negative.
    pub max_slack: f64,
    pub argmax_interval: (f64, f64),
}

/// Integral dissipation check over all pairs of grid times, via a running minimum.
pub fn dissipation_audit(traj: &Trajectory, v: &dyn Storage, gamma: f64) -> Result<DissipationAudit, TrajectoryError> {
    let n = traj.times.len();
    let mut best = (0.0, (traj.times[0], traj.times[0]));
    let mut cum = 0.0;
    let mut d_min = (v.value(&traj.states[0])?, 0usize);
    for k in 1..n {
        let (t0, t1) = (traj.times[k - 1], traj.times[k]);
        let s0 = supply(&traj.states[k - 1], &traj.input.at(t0, Side::Right), gamma);
        let s1 = supply(&traj.states[k], &traj.input.at(t1, Side::Left), gamma);
        cum += 0.5 * (t1 - t0) * (s0 + s1);
        let d = v.value(&traj.states[k])? - cum;
        if d - d_min.0 > best.0 {
            best = (d - d_min.0, (traj.times[d_min.1], t1));
        }
        if d < d_min.0 {
            d_min = (d, k);
        }
    }
    Ok(DissipationAudit {
        max_slack: best.0,
        argmax_interval: best.1,
    })
}

/// `(∫|x|², ∫|u|²)` over the trajectory by the trapezoid rule.
pub fn energies(traj: &Trajectory) -> (f64, f64) {
    let mut ex = 0.0;
    let mut eu = 0.0;
    for k in 1..traj.times.len() {
        let (t0, t1) = (traj.times[k - 1], traj.times[k]);
        let h = t1 - t0;
        ex += 0.5 * h * (norm2(&traj.states[k - 1]) + norm2(&traj.states[k]));
        eu += 0.5 * h * (norm2(&traj.input.at(t0, Side::Right)) + norm2(&traj.input.at(t1, Side::Left)));
    }
    (ex, eu)
}

#[derive(Clone, Debug, Serialize)]
pub struct GainLowerBound {
    /// `max ∫|x|² / ∫|u|²` over admissible members.
    pub ratio: f64,
    pub best_index: usize,
    pub admissible: usize,
}

/// Largest energy ratio from `x(0) = 0` over the ensemble.
pub fn l2_gain_lowerbound(sys: &System, ensemble: &[InputSignal], horizon: f64, step: f64) -> Result<GainLowerBound, TrajectoryError> {
    let x0 = vec![0.0; sys.n()];
    let runs = par::map(ensemble, |u| -> Result<Option<f64>, TrajectoryError> {
        let traj = integrate(sys, &x0, u, (0.0, horizon), step)?;
        let (ex, eu) = energies(&traj);
        Ok((eu >= MIN_INPUT_ENERGY).then_some(ex / eu))
    });
    let mut best: Option<(f64, usize)> = None;
    let mut admissible = 0;
    for (i, r) in runs.into_iter().enumerate() {
        if let Some(ratio) = r? {
            admissible += 1;
            if best.is_none_or(|(b, _)| ratio > b) {
                best = Some((ratio, i));
            }
        }
    }
    let (ratio, best_index) = best.ok_or(TrajectoryError::NoAdmissibleInput)?;
    Ok(GainLowerBound {
        ratio,
        best_index,
        admissible,
    })
}

/// Single-channel sine and cosine inputs at the given frequencies.
pub fn low_frequency_ensemble(frequencies: &[f64]) -> Vec<InputSignal> {
    frequencies
        .iter()
        .flat_map(|&w| {
            [0.0, std::f64::consts::FRAC_PI_2]
                .into_iter()
                .map(move |ph| InputSignal::sinusoid(1.0, w, ph))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::storage::Builtin;
    use crate::systems::{zoo, AffineSystem};

    fn decay() -> System {
        System::Affine(AffineSystem::parse("decay", 1, 1, &["-x1"], &[&["1"]]).unwrap())
    }

    #[test]
    fn exponential_oracle() {
        let tr = integrate(&decay(), &[1.0], &InputSignal::zero(1), (0.0, 1.0), 1e-3).unwrap();
        assert!((tr.states.last().unwrap()[0] - (-1.0_f64).exp()).abs() < 1e-9);
        assert_eq!(tr.times.len(), 1001);
    }

    #[test]
    fn replay_is_bit_exact() {
        let sys = zoo::sigma1();
        let u = InputSignal::constant(vec![0.3, -0.2]);
        let tr = integrate(&sys, &[1.0, -0.5], &u, (0.0, 0.5), 1e-2).unwrap();
        for k in 1..tr.times.len() {
            let next = rk4_step(&sys, &tr.states[k - 1], tr.times[k - 1], tr.step, &u).unwrap();
            assert_eq!(next, tr.states[k]);
        }
    }

    #[test]
    fn blowup_is_detected() {
        let sys = System::Affine(AffineSystem::parse("blow", 1, 1, &["x1*x1"], &[&["0"]]).unwrap());
        let err = integrate(&sys, &[1.0], &InputSignal::zero(1), (0.0, 2.0), 1e-3).unwrap_err();
        assert!(matches!(err, TrajectoryError::Blowup { .. }));
    }

    #[test]
    fn dissipation_of_sigma1() {
        let tr = integrate(&zoo::sigma1(), &[1.0, 1.0], &InputSignal::zero(2), (0.0, 1.0), 1e-3).unwrap();
        let a = dissipation_audit(&tr, &Builtin::V1Scaled, 1.0).unwrap();
        assert!(a.max_slack <= 1e-4, "{a:?}");
    }

    #[test]
    fn non_witness_has_positive_slack() {
        // V = x² is not a witness for xdot = -x + u at γ = 0.5
        let u = InputSignal::constant(vec![1.0]);
        let tr = integrate(&decay(), &[0.0], &u, (0.0, 1.0), 1e-3).unwrap();
        let a = dissipation_audit(&tr, &Builtin::SqNorm, 0.5).unwrap();
        assert!(a.max_slack > 1e-2);
    }

    #[test]
    fn zero_ensemble_is_rejected() {
        let err = l2_gain_lowerbound(&decay(), &[InputSignal::zero(1)], 1.0, 1e-2).unwrap_err();
        assert_eq!(err, TrajectoryError::NoAdmissibleInput);
    }
}
