//! Structural identities of the system representations and the zoo.

use hji_core::audits::{sigma2_g, sigma2_h};
use hji_core::systems::{zoo, AffineSystem, Phi, PowerAffineSystem, System};
use proptest::prelude::*;

fn base() -> AffineSystem {
    AffineSystem::parse(
        "base",
        2,
        2,
        &["-abs(x1)*x1 + x2", "-x2*x2*x2"],
        &[&["abs(x1)*x2", "1"], &["sign(x2)", "x1 - x2"]],
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn signed_pow_at_one_is_affine(
        x in prop::collection::vec(-3.0..3.0f64, 2),
        u in prop::collection::vec(-3.0..3.0f64, 2),
    ) {
        let affine = System::Affine(base());
        let power = System::PowerAffine(PowerAffineSystem::new(base(), 1.0, Phi::SignedPow).unwrap());
        let a = affine.dynamics(&x, &u).unwrap();
        let p = power.dynamics(&x, &u).unwrap();
        prop_assert_eq!(a, p);
    }

    #[test]
    fn sigma_p_keeps_the_x1_axis(
        x1 in -3.0..3.0f64,
        u in prop::collection::vec(-5.0..5.0f64, 2),
        p in prop::sample::select(vec![1.0, 1.5, 2.0, 3.0, 4.0]),
    ) {
        let f = zoo::sigma_p(p).dynamics(&[x1, 0.0], &u).unwrap();
        prop_assert_eq!(f[1], 0.0);
        let f = zoo::sigma_p_signed(p).dynamics(&[x1, 0.0], &u[..1]).unwrap();
        prop_assert_eq!(f[1], 0.0);
    }
}

#[test]
fn sigma2_splits_into_drift_and_input_parts() {
    let sys = zoo::sigma2();
    let axis: Vec<f64> = (0..=16).map(|k| -2.0 + 0.25 * k as f64).collect();
    for &x1 in &axis {
        for &x2 in &axis {
            for &u1 in &[-1.5, 0.0, 0.7] {
                for &u2 in &[-0.3, 0.0, 2.0] {
                    let x = [x1, x2];
                    let u = [u1, u2];
                    let f = sys.dynamics(&x, &u).unwrap();
                    let (g, h) = (sigma2_g(&x), sigma2_h(&x, &u));
                    for k in 0..2 {
                        assert!((f[k] - (g[k] + h[k])).abs() <= 1e-12, "x {x:?} u {u:?}: {f:?}");
                    }
                }
            }
        }
    }
}
