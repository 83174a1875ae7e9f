use rand::Rng;
use serde::{Deserialize, Serialize};

/// Relative distance under which a query time is treated as a switch time.
pub const SWITCH_SNAP: f64 = 1e-12;

/// Which one-sided value to use at a switching instant.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Admissible input `u(·)`: bounded and piecewise continuous by construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InputSignal {
    Constant {
        value: Vec<f64>,
    },
    /// `values[k]` holds on `[times[k-1], times[k])`, with `times[-1] = -∞`
    /// and `times[len] = +∞`; so `values.len() == times.len() + 1`.
    PiecewiseConstant {
        times: Vec<f64>,
        values: Vec<Vec<f64>>,
    },
    /// `amplitude_i sin(frequency_i t + phase_i)` per channel.
    Sinusoid {
        amplitude: Vec<f64>,
        frequency: Vec<f64>,
        phase: Vec<f64>,
    },
}

impl InputSignal {
    pub fn constant(value: Vec<f64>) -> InputSignal {
        InputSignal::Constant { value }
    }

    pub fn zero(m: usize) -> InputSignal {
        InputSignal::Constant { value: vec![0.0; m] }
    }

    pub fn sinusoid(amplitude: f64, frequency: f64, phase: f64) -> InputSignal {
        InputSignal::Sinusoid {
            amplitude: vec![amplitude],
            frequency: vec![frequency],
            phase: vec![phase],
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            InputSignal::Constant { value } => value.len(),
            InputSignal::PiecewiseConstant { values, .. } => values.first().map_or(0, Vec::len),
            InputSignal::Sinusoid { amplitude, .. } => amplitude.len(),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        match self {
            InputSignal::Constant { .. } => Ok(()),
            InputSignal::PiecewiseConstant { times, values } => {
                if values.len() != times.len() + 1 {
                    return Err(format!("{} switch times need {} values, got {}", times.len(), times.len() + 1, values.len()));
                }
                if times.windows(2).any(|w| w[1] <= w[0]) {
                    return Err("switch times must be strictly increasing".into());
                }
                if values.iter().any(|v| v.len() != values[0].len()) {
                    return Err("all values must have the same dimension".into());
                }
                Ok(())
            }
            InputSignal::Sinusoid {
                amplitude,
                frequency,
                phase,
            } => {
                if amplitude.len() != frequency.len() || amplitude.len() != phase.len() {
                    return Err("amplitude, frequency and phase must have equal lengths".into());
                }
                Ok(())
            }
        }
    }

    /// Value at `t`, taking the limit from the given side at switch times.
    pub fn at(&self, t: f64, side: Side) -> Vec<f64> {
        match self {
            InputSignal::Constant { value } => value.clone(),
            InputSignal::PiecewiseConstant { times, values } => {
                // switch times within rounding of t count as t
                let snap = |s: f64| SWITCH_SNAP * s.abs().max(1.0);
                let k = match side {
                    Side::Right => times.partition_point(|&s| s <= t + snap(s)),
                    Side::Left => times.partition_point(|&s| s < t - snap(s)),
                };
                values[k].clone()
            }
            InputSignal::Sinusoid {
                amplitude,
                frequency,
                phase,
            } => amplitude
                .iter()
                .zip(frequency)
                .zip(phase)
                .map(|((a, w), p)| a * (w * t + p).sin())
                .collect(),
        }
    }

    /// Piecewise-constant input with values uniform in `[-amp, amp]^m`,
    /// switching every `period` on `[0, horizon)`.
    pub fn random_piecewise<R: Rng>(rng: &mut R, m: usize, horizon: f64, period: f64, amp: f64) -> InputSignal {
        let switches = ((horizon / period).ceil() as usize).saturating_sub(1);
        let times = (1..=switches).map(|k| k as f64 * period).collect();
        let values = (0..=switches)
            .map(|_| (0..m).map(|_| rng.gen_range(-amp..=amp)).collect())
            .collect();
        InputSignal::PiecewiseConstant { times, values }
    }
}
