//! Named example systems with their claimed witnesses.

use std::fmt;

use serde::{Serialize, Serializer};

use super::{sigma3, AffineSystem, GeneralSystem, Phi, PowerAffineSystem, System};
use crate::storage::{Builtin, StorageCandidate};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ClaimedGamma {
    Value(f64),
    AnyPositive,
}

impl ClaimedGamma {
    /// The gain to test a claim at; "any positive" is exercised at 0.01.
    pub fn representative(self) -> f64 {
        match self {
            ClaimedGamma::Value(g) => g,
            ClaimedGamma::AnyPositive => 0.01,
        }
    }

    pub fn value(self) -> Option<f64> {
        match self {
            ClaimedGamma::Value(g) => Some(g),
            ClaimedGamma::AnyPositive => None,
        }
    }
}

impl fmt::Display for ClaimedGamma {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClaimedGamma::Value(g) => write!(f, "{g}"),
            ClaimedGamma::AnyPositive => f.write_str("any positive"),
        }
    }
}

impl Serialize for ClaimedGamma {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            ClaimedGamma::Value(g) => s.serialize_f64(*g),
            ClaimedGamma::AnyPositive => s.serialize_str("any positive"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ZooEntry {
    pub name: String,
    pub system: System,
    pub witness: Builtin,
    pub claimed_gamma: ClaimedGamma,
    pub notes: &'static str,
}

impl ZooEntry {
    pub fn witness_candidate(&self) -> StorageCandidate {
        self.witness.candidate()
    }
}

fn affine(name: &str, n: usize, m: usize, g0: &[&str], g: &[&[&str]]) -> AffineSystem {
    AffineSystem::parse(name, n, m, g0, g).expect("built-in system parses")
}

pub fn sigma1() -> System {
    System::Affine(affine(
        "sigma1",
        2,
        2,
        &["abs(x1)*(-x1+abs(x2))", "x2*(-x1-abs(x2))"],
        &[&["abs(x1)", "0"], &["0", "x2"]],
    ))
}

pub fn sigma1_c1() -> System {
    System::Affine(affine(
        "sigma1_c1",
        2,
        2,
        &["pow(x1*x2,3) - x1*abs(x1)", "-(x1*x2)*(x1*x2)*(x1*x2) - x2*abs(x2)"],
        &[&["x1", "0"], &["0", "x2"]],
    ))
}

pub fn sigma2() -> System {
    System::Affine(affine(
        "sigma2",
        2,
        2,
        &["-x1+x2", "3*pow(cbrt(x2),4)*(-x1-x2)"],
        &[&["1", "0"], &["0", "3*pow(cbrt(x2),4)"]],
    ))
}

/// `ẋ = g0 + |u1|^p g - |u2|^p g` with `g = (|x1| x2, -|x2| x1)`, `g0 = (-|x1| x1, -|x2| x2)`.
pub fn sigma_p(p: f64) -> System {
    let base = affine(
        &format!("sigma_p({p})"),
        2,
        2,
        &["-abs(x1)*x1", "-abs(x2)*x2"],
        &[&["abs(x1)*x2", "-abs(x2)*x1"], &["-abs(x1)*x2", "abs(x2)*x1"]],
    );
    System::PowerAffine(PowerAffineSystem::new(base, p, Phi::AbsPow).expect("p >= 1"))
}

/// `ẋ = g0 + sign(u)|u|^p g`.
pub fn sigma_p_signed(p: f64) -> System {
    let base = affine(
        &format!("sigma_p_signed({p})"),
        2,
        1,
        &["-abs(x1)*x1", "-abs(x2)*x2"],
        &[&["abs(x1)*x2", "-abs(x2)*x1"]],
    );
    System::PowerAffine(PowerAffineSystem::new(base, p, Phi::SignedPow).expect("p >= 1"))
}

pub fn sigma3_scalar() -> System {
    System::General(GeneralSystem::parse("sigma3_scalar", 1, 1, &[&sigma3::f_source()]).expect("built-in system parses"))
}

/// `ẋ = -x + u`
pub fn scalar_linear() -> System {
    System::Affine(affine("scalar_linear", 1, 1, &["-x1"], &[&["1"]]))
}

/// `ẋ = -2x`, with a single identically zero input field.
pub fn scalar_decay() -> System {
    System::Affine(affine("scalar_decay", 1, 1, &["-2*x1"], &[&["0"]]))
}

const DEFAULT_P: f64 = 3.0;

pub fn zoo() -> Vec<ZooEntry> {
    vec![
        ZooEntry {
            name: "sigma1".into(),
            system: sigma1(),
            witness: Builtin::V1Scaled,
            claimed_gamma: ClaimedGamma::Value(1.0),
            notes: "Lipschitz witness 2|x1|+2|x2| at unit gain; no C1 witness is proper or positive definite",
        },
        ZooEntry {
            name: "sigma1_c1".into(),
            system: sigma1_c1(),
            witness: Builtin::V1Scaled,
            claimed_gamma: ClaimedGamma::Value(1.0),
            notes: "C1 vector-field variant of sigma1; cross terms cancel by sign analysis",
        },
        ZooEntry {
            name: "sigma2".into(),
            system: sigma2(),
            witness: Builtin::V2,
            claimed_gamma: ClaimedGamma::Value(1.0),
            notes: "cusp system with drift g+h; continuous witness x1^2+x2^(2/3), no locally Lipschitz one",
        },
        ZooEntry {
            name: format!("sigma_p({DEFAULT_P})"),
            system: sigma_p(DEFAULT_P),
            witness: Builtin::V1,
            claimed_gamma: ClaimedGamma::AnyPositive,
            notes: "power-affine with p > 2; L1 norm witnesses every positive gain, no C1 candidate does",
        },
        ZooEntry {
            name: format!("sigma_p_signed({DEFAULT_P})"),
            system: sigma_p_signed(DEFAULT_P),
            witness: Builtin::V1,
            claimed_gamma: ClaimedGamma::AnyPositive,
            notes: "single-input signed variant of sigma_p",
        },
        ZooEntry {
            name: "sigma3_scalar".into(),
            system: sigma3_scalar(),
            witness: Builtin::V3Scalar,
            claimed_gamma: ClaimedGamma::Value(1.0),
            notes: "scalar system not affine in inputs; witness max{|x|, 2x-1}, every witness is non-differentiable at 1",
        },
        ZooEntry {
            name: "scalar_linear".into(),
            system: scalar_linear(),
            witness: Builtin::SqNorm,
            claimed_gamma: ClaimedGamma::Value(1.0),
            notes: "xdot = -x + u; transfer function 1/(s+1)",
        },
        ZooEntry {
            name: "scalar_decay".into(),
            system: scalar_decay(),
            witness: Builtin::SqNorm,
            claimed_gamma: ClaimedGamma::AnyPositive,
            notes: "xdot = -2x with a zero input field",
        },
    ]
}

/// Looks up an entry by name; `sigma_p(<p>)` and `sigma_p_signed(<p>)` accept any `p >= 1`.
pub fn lookup(name: &str) -> Option<ZooEntry> {
    if let Some(e) = zoo().into_iter().find(|e| e.name == name) {
        return Some(e);
    }
    let parametric = |prefix: &str| -> Option<f64> {
        let p: f64 = name.strip_prefix(prefix)?.strip_suffix(')')?.trim().parse().ok()?;
        (p >= 1.0 && p.is_finite()).then_some(p)
    };
    if let Some(p) = parametric("sigma_p_signed(") {
        let mut e = zoo().into_iter().find(|e| e.name.starts_with("sigma_p_signed("))?;
        e.name = name.to_string();
        e.system = sigma_p_signed(p);
        return Some(e);
    }
    if let Some(p) = parametric("sigma_p(") {
        let mut e = zoo().into_iter().find(|e| e.name.starts_with("sigma_p("))?;
        e.name = name.to_string();
        e.system = sigma_p(p);
        return Some(e);
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registered_claims() {
        let z = zoo();
        let get = |n: &str| z.iter().find(|e| e.name == n).unwrap();
        assert_eq!(get("sigma1").claimed_gamma, ClaimedGamma::Value(1.0));
        assert_eq!(get("sigma_p(3)").claimed_gamma, ClaimedGamma::AnyPositive);
        assert_eq!(get("sigma3_scalar").witness, Builtin::V3Scalar);
        assert_eq!(z.len(), 8);
    }

    #[test]
    fn parametric_lookup() {
        let e = lookup("sigma_p(4)").unwrap();
        let System::PowerAffine(s) = &e.system else { panic!() };
        assert_eq!(s.p, 4.0);
        assert!(lookup("sigma_p(0.5)").is_none());
        assert!(lookup("nope").is_none());
        assert_eq!(lookup("sigma_p_signed(2.5)").unwrap().system.m(), 1);
    }

    #[test]
    fn sigma1_c1_drift_is_the_remark_form() {
        let s = sigma1_c1();
        let (x1, x2) = (-0.7_f64, 1.3_f64);
        let f = s.dynamics(&[x1, x2], &[0.4, -0.2]).unwrap();
        let e1 = (x1 * x2).abs().powi(3) + x1 * (-x1.abs() + 0.4);
        let e2 = -(x1 * x2).powi(3) + x2 * (-x2.abs() - 0.2);
        assert!((f[0] - e1).abs() < 1e-12 && (f[1] - e2).abs() < 1e-12);
    }
}
