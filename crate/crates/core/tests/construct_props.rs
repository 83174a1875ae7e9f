//! Scalar construction: membership readings, root forms and the selector.

use hji_core::construct1d::{f_membership, h_from_v, p_of_x, Branch, Envelope, Membership, QuadCoeffs, DIRECT_SLACK};
use hji_core::storage::Builtin;
use hji_core::systems::{zoo, AffineSystem};
use proptest::prelude::*;

/// `ẋ = -k x - s x³ + (b + e x) u1 (+ c u2)`.
fn scalar_system() -> impl Strategy<Value = AffineSystem> {
    (0.1..3.0f64, 0.0..1.0f64, -2.0..2.0f64, -1.0..1.0f64, prop::option::of(-1.0..1.0f64)).prop_map(|(k, s, b, e, c)| {
        let g0 = format!("-({k:?})*x1 - ({s:?})*x1*x1*x1");
        let g1 = format!("({b:?}) + ({e:?})*x1");
        match c {
            None => AffineSystem::parse("random", 1, 1, &[&g0], &[&[&g1]]).unwrap(),
            Some(c) => AffineSystem::parse("random", 1, 2, &[&g0], &[&[&g1], &[&format!("{c:?}")]]).unwrap(),
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    /// The sampled reading can only under-estimate the supremum, so it agrees
    /// with the quadratic one except within its grid resolution of the boundary.
    #[test]
    fn direct_and_quadratic_membership_agree(
        sys in scalar_system(),
        gamma in 0.2..3.0f64,
        x in 0.05..2.0f64,
        p in -5.0..5.0f64,
    ) {
        let quad = f_membership(&sys, gamma, x, p, Membership::Quadratic).unwrap();
        let direct = f_membership(&sys, gamma, x, p, Membership::Direct).unwrap();
        if quad {
            prop_assert!(direct);
        } else {
            let q = QuadCoeffs::at(&sys, gamma, x).unwrap();
            let sup = (q.a * p * p + q.b * p + q.c) / (4.0 * gamma);
            let radius = p.abs() * q.a.sqrt() / gamma + 1.0;
            let per_dim = if sys.m == 1 { 1000.0 } else { 32.0 };
            let h = 2.0 * radius / (per_dim - 1.0);
            let resolution = gamma * sys.m as f64 * h * h / 4.0;
            if sup > DIRECT_SLACK + resolution {
                prop_assert!(!direct, "sup {sup} resolution {resolution}");
            }
        }
    }

    #[test]
    fn lower_root_forms_agree(a in 1e-3..10.0f64, b in -10.0..-1e-3f64, t in 0.0..=1.0f64) {
        let c = t * b * b / (4.0 * a);
        let q = QuadCoeffs { a, b, c };
        prop_assume!(q.discriminant() >= 0.0);
        let naive = (-b - q.discriminant().sqrt()) / (2.0 * a);
        let stable = q.lower_root().unwrap();
        prop_assert!((naive - stable).abs() <= 1e-9 * stable.abs().max(1.0), "{naive} vs {stable}");
        prop_assert!(stable <= 2.0 * c / b.abs() * (1.0 + 1e-15));
    }
}

#[test]
fn lower_root_stays_below_the_envelope_from_a_witness() {
    let sys = zoo::scalar_linear();
    let aff = sys.as_affine().unwrap();
    let grid: Vec<f64> = (1..=300).map(|k| k as f64 * 0.01).collect();
    let h = h_from_v(&Builtin::SqNorm, &grid, 0.005, 0.01).unwrap();
    for &x in &grid {
        let q = QuadCoeffs::at(aff, 1.0, x).unwrap();
        let (g0, _) = aff.fields(&[x]).unwrap();
        let root = q.lower_root().unwrap();
        let bound = 2.0 * x * x / g0[0].abs();
        assert!(root <= bound * (1.0 + 1e-12), "x {x}: {root} > {bound}");
        assert!(bound <= h.eval(x).unwrap(), "x {x}");
    }
}

#[test]
fn selector_tends_to_the_envelope_as_inputs_vanish() {
    let h = Envelope::parse("3*abs(x1) + 1").unwrap();
    let x = 0.7;
    let hx = h.eval(x).unwrap();
    let mut prev = f64::INFINITY;
    for k in 1..=8 {
        let s = 10f64.powi(-k);
        let sys = AffineSystem::parse("shrink", 1, 1, &["-x1"], &[&[&format!("{s:?}")]]).unwrap();
        let sel = p_of_x(&sys, 1.0, &h, x).unwrap();
        let gap = (sel.p - hx).abs();
        assert!(gap <= prev);
        prev = gap;
        if k >= 2 {
            assert_eq!(sel.branch, Branch::EnvelopeCap);
            assert_eq!(sel.p, hx);
        }
    }
    let sys = AffineSystem::parse("zero", 1, 1, &["-x1"], &[&["0"]]).unwrap();
    let sel = p_of_x(&sys, 1.0, &h, x).unwrap();
    assert_eq!((sel.branch, sel.p), (Branch::Envelope, hx));
}
