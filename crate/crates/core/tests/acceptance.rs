//! Acceptance criteria 1-9, one verdict line each.

use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hji_core::audits::{self, AuditKind};
use hji_core::construct1d::{self, f_membership, p_of_x, Construct1dError, Envelope, Membership};
use hji_core::hji::{self, Region, ResidualMode, WitnessOptions};
use hji_core::smoothing::{self, SmoothOptions};
use hji_core::storage::{self, Builtin, ExprStorage, Regularity, Storage};
use hji_core::suite::{self, SuiteOptions};
use hji_core::systems::{phi_value, zoo, AffineSystem, Phi, System};
use hji_core::trajectories::{self, InputSignal};

struct Verdict {
    passed: bool,
    notes: Vec<String>,
}

impl Verdict {
    fn new() -> Verdict {
        Verdict { passed: true, notes: Vec::new() }
    }

    fn require(&mut self, ok: bool, note: String) {
        self.passed &= ok;
        self.notes.push(if ok { note } else { format!("FAILED {note}") });
    }
}

fn exact() -> WitnessOptions {
    WitnessOptions::default()
}

fn sigma1_box() -> Region {
    Region::square(-2.0, 2.0, 2, 41)
}

fn criterion_1() -> Verdict {
    let mut v = Verdict::new();
    let sys = zoo::sigma1();
    let r = hji::check_witness(&sys, &Builtin::V1Scaled, 1.0, &sigma1_box(), &exact()).unwrap();
    v.require(r.passed() && r.max_residual <= 1e-9, format!("max residual {:e} at gain 1 over {} points", r.max_residual, r.points_checked));
    let low = hji::check_witness(&sys, &Builtin::V1Scaled, 0.9, &sigma1_box(), &exact()).unwrap();
    let at = hji::point_residual(&sys, &Builtin::V1Scaled, &[1.0, 1.0], 0.9, &ResidualMode::Auto).unwrap();
    v.require(
        !low.passed() && (at.residual - 2.0 / 9.0).abs() <= 1e-9,
        format!("gain 0.9 fails, residual {:.9} at (1,1)", at.residual),
    );
    let scan = hji::min_gain_scan(&sys, &Builtin::V1Scaled, &sigma1_box(), &hji::gamma_grid(0.5, 2.0, 0.01), &exact()).unwrap();
    let g = scan.gamma.unwrap_or(f64::NAN);
    v.require((g - 1.0).abs() <= 0.01 + 1e-12, format!("gain scan {g:.2}"));
    v
}

fn criterion_2() -> Verdict {
    let mut v = Verdict::new();
    let r = hji::check_witness(&zoo::sigma1_c1(), &Builtin::V1Scaled, 1.0, &sigma1_box(), &exact()).unwrap();
    v.require(r.passed() && r.max_residual <= 1e-9, format!("C1 variant max residual {:e}", r.max_residual));
    v
}

fn criterion_3() -> Verdict {
    let mut v = Verdict::new();
    let r = hji::check_witness(&zoo::sigma2(), &Builtin::V2, 1.0, &sigma1_box(), &exact()).unwrap();
    let axis_rows = r.points.iter().filter(|p| p.x[1] == 0.0).count();
    v.require(r.passed(), format!("v2 max residual {:e} ({axis_rows} points on x2 = 0)", r.max_residual));
    let ts: Vec<f64> = (0..=1000).map(|k| k as f64 / 1000.0).collect();
    let mut spread: f64 = 0.0;
    let mut tangency: f64 = 0.0;
    for a in [0.5, 1.0, 2.0] {
        let vals: Vec<f64> = ts.iter().map(|&t| Builtin::V2.value(&audits::sigma2_curve(a, t)).unwrap()).collect();
        spread = spread.max(vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - vals.iter().cloned().fold(f64::INFINITY, f64::min));
        tangency = tangency.max(audits::audit_curve_tangency(a, &ts).unwrap());
    }
    v.require(spread <= 1e-12, format!("v2 spread along curves {spread:e}"));
    v.require(tangency <= 1e-9, format!("tangency defect {tangency:e}"));
    let audit = audits::audit_curve_monotone(&Builtin::V1, 1.0, &[0.0, 0.5]).unwrap();
    let inc = audit.detail["increase"].as_f64().unwrap_or(f64::NAN);
    let t = audit.witness_point.as_ref().and_then(|p| p.t);
    v.require(
        audit.kind == AuditKind::ViolationFound && (inc - 0.1495).abs() <= 5e-5 && t == Some(0.5),
        format!("|x1|+|x2| rises by {inc:.4} at t = 0.5"),
    );
    v
}

fn criterion_4() -> Verdict {
    let mut v = Verdict::new();
    let sys = zoo::sigma_p(3.0);
    let sampled = WitnessOptions {
        mode: ResidualMode::sampled_default(),
        tol: None,
    };
    let r = hji::check_witness(&sys, &Builtin::V1, 0.01, &sigma1_box(), &sampled).unwrap();
    v.require(r.passed(), format!("v1 at gain 0.01 on sampled inputs, max residual {:e}", r.max_residual));
    let sq = ExprStorage::parse("x1*x1 + x2*x2", 2, Regularity::Smooth, Some(&["2*x1", "2*x2"])).unwrap();
    let a = audits::audit_sigmap(&sq, 3.0, 1.0, &[vec![2.0, 1.0]], 1e3).unwrap();
    let p = a.witness_point.clone().unwrap_or_default();
    let res = a.detail["residual"].as_f64().unwrap_or(f64::NAN);
    v.require(
        a.kind == AuditKind::ViolationFound && p.x == Some(vec![2.0, 1.0]) && p.u == Some(vec![2.0, 0.0]) && (res - 15.0).abs() <= 1e-9,
        format!("|x|^2 falsified at x = (2,1), u = (2,0), residual {res}"),
    );
    v
}

fn criterion_5() -> Verdict {
    let mut v = Verdict::new();
    let xs: Vec<f64> = (0..301).map(|k| 3.0 * k as f64 / 300.0).collect();
    let us: Vec<f64> = (0..301).map(|k| -3.0 + 6.0 * k as f64 / 300.0).collect();
    let d = audits::verify_sigma3_pieces(&xs, &us);
    v.require(
        d.holds(1e-12, audits::PIECE_INEQ_TOL),
        format!(
            "pieces over {} points: equality defect {:e}, inequality defect {:e}",
            d.points,
            d.max_equality_defect(),
            d.max_inequality_defect()
        ),
    );
    let mut subgrad_ok = true;
    for (z, expect) in [(1.0, true), (2.0, true), (0.99, false), (2.01, false)] {
        let c = storage::verify_subgradient(&Builtin::V3Scalar, &[1.0], &[z], &storage::default_radii(), storage::DEFAULT_SUBGRADIENT_TOL).unwrap();
        subgrad_ok &= c.accepted == expect;
    }
    v.require(subgrad_ok, "kink endpoints 1, 2 accepted and 0.99, 2.01 rejected".into());
    let opts = WitnessOptions {
        mode: audits::sigma3_u_mode(),
        tol: None,
    };
    let region = suite::default_region(1);
    let scan = hji::min_gain_scan(&zoo::sigma3_scalar(), &Builtin::V3Scalar, &region, &hji::gamma_grid(0.5, 2.0, 0.01), &opts).unwrap();
    let g = scan.gamma.unwrap_or(f64::NAN);
    v.require((g - 1.0).abs() <= 1e-12, format!("gain scan {g:.2}"));
    let s = audits::audit_scalar_straddle(&Builtin::V3Scalar, &audits::default_h_seq(), &region).unwrap();
    // quotients are exact up to the cancellation error of V(1±h) - V(1)
    let exact_up_to_rounding = |key: &str, target: f64| {
        let qs = s.detail[key].as_array().cloned().unwrap_or_default();
        let hs = audits::default_h_seq();
        qs.len() == hs.len() && qs.iter().zip(&hs).all(|(q, h)| (q.as_f64().unwrap_or(f64::NAN) - target).abs() <= 8.0 * f64::EPSILON / h)
    };
    let (left, right) = (exact_up_to_rounding("left_quotients", 1.0), exact_up_to_rounding("right_quotients", 2.0));
    v.require(
        s.kind == AuditKind::ObstructionVerified && left && right,
        "straddle obstruction with quotients 1 and 2 up to rounding".into(),
    );
    v
}

fn criterion_6() -> Verdict {
    let mut v = Verdict::new();
    let sys = zoo::scalar_linear();
    let grid: Vec<f64> = (0..=200).map(|k| 0.01 * k as f64).collect();
    let h = Envelope::parse("4*abs(x1)").unwrap();
    let c = construct1d::construct_w(&sys, 1.0, &Builtin::SqNorm, &h, &grid).unwrap();
    let err = grid.iter().map(|&x| (c.w.value(&[x]).unwrap() - x * x).abs()).fold(0.0, f64::max);
    let zero_disc = c.contracts.double_root_points + c.contracts.clamped_points;
    v.require(
        err <= 1e-6 && c.contracts.holds() && zero_disc > 0,
        format!("W = x^2 within {err:e}, {zero_disc} zero-discriminant nodes"),
    );

    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut disagree = 0;
    for _ in 0..1000 {
        let k = rng.gen_range(0.1..3.0);
        let s = rng.gen_range(0.0..1.0);
        let b = rng.gen_range(-2.0..2.0);
        let g0 = format!("-({k:?})*x1 - ({s:?})*x1*x1*x1");
        let g1 = format!("{b:?}");
        let aff = AffineSystem::parse("random", 1, 1, &[&g0], &[&[&g1]]).unwrap();
        let gamma = rng.gen_range(0.2..3.0);
        let x = rng.gen_range(0.05..2.0);
        let p = rng.gen_range(-5.0..5.0);
        let direct = f_membership(&aff, gamma, x, p, Membership::Direct).unwrap();
        let quad = f_membership(&aff, gamma, x, p, Membership::Quadratic).unwrap();
        disagree += usize::from(direct != quad);
    }
    v.require(disagree == 0, format!("membership readings disagree on {disagree} of 1000 instances"));

    let slow = AffineSystem::parse("slow", 1, 1, &["-x1/10"], &[&["1"]]).unwrap();
    let err = p_of_x(&slow, 1.0, &h, 1.0).unwrap_err();
    v.require(matches!(err, Construct1dError::InfeasibleAt { .. }), format!("slow drift: {err}"));
    v
}

fn criterion_7() -> Verdict {
    let mut v = Verdict::new();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut identity: f64 = 0.0;
    for _ in 0..10_000 {
        let m = rng.gen_range(1..=3);
        let u: Vec<f64> = (0..m).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let d = smoothing::compactify(&u);
        let u2: f64 = u.iter().map(|c| c * c).sum();
        let d2: f64 = d.iter().map(|c| c * c).sum();
        identity = identity.max((u2 - d2 / (1.0 - d2)).abs() / u2.max(1.0));
        identity = identity.max((1.0 - d2 - 1.0 / (1.0 + u2)).abs());
        for p in [1.0, 1.5, 2.0] {
            for phi in [Phi::AbsPow, Phi::SignedPow] {
                for (ui, di) in u.iter().zip(&d) {
                    let lhs = phi_value(phi, p, *di) * (1.0 - d2).powf(1.0 - p / 2.0);
                    let rhs = phi_value(phi, p, *ui) / (1.0 + u2);
                    identity = identity.max((lhs - rhs).abs() / rhs.abs().max(1.0));
                }
            }
        }
    }
    v.require(identity <= 1e-12, format!("compactification identities to {identity:e}"));

    let mut field: f64 = 0.0;
    for sys in [zoo::sigma1(), zoo::sigma2(), zoo::sigma_p(1.5), zoo::sigma_p(2.0), zoo::sigma_p_signed(1.5)] {
        for _ in 0..1000 {
            let x: Vec<f64> = (0..2).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let u: Vec<f64> = (0..sys.m()).map(|_| rng.gen_range(-10.0..10.0)).collect();
            let f = sys.dynamics(&x, &u).unwrap();
            let t = smoothing::transformed_field(&sys, &x, &smoothing::compactify(&u)).unwrap();
            let s = 1.0 + u.iter().map(|c| c * c).sum::<f64>();
            for k in 0..2 {
                field = field.max((s * t[k] - f[k]).abs() / f[k].abs().max(1.0));
            }
        }
    }
    v.require(field <= 1e-9, format!("field correspondence to {field:e}"));

    let mut closing = true;
    for _ in 0..10_000 {
        let eps = rng.gen_range(1e-9..10.0);
        let beta = rng.gen_range(0.0..1e6);
        let delta = smoothing::choose_delta(eps);
        closing &= delta > 0.0 && delta < 1.0 && (beta + delta) / (1.0 - delta) <= ((1.0 + eps) * beta + eps) * (1.0 + 1e-15);
    }
    v.require(closing, "(b+d)/(1-d) <= (1+e)b+e on 10^4 samples".into());

    let opts = SmoothOptions::annulus(0.05, 2.0);
    for (sys, w) in [(zoo::sigma1(), Builtin::V1Scaled), (zoo::sigma2(), Builtin::V2)] {
        let c = smoothing::smooth_witness(&sys, w.candidate(), 1.0, 1.1, &opts).unwrap();
        let r = &c.report;
        let wit = r.witness_at_gamma_prime.as_ref().is_some_and(|w| w.passed());
        v.require(
            r.verdict == hji::Verdict::Pass && r.max_relative_approx_error <= 0.5 && r.max_eq20_residual <= 0.0 && wit,
            format!(
                "{} smoothed at radius {:e}: |V-W|/V <= {:.3}, residual {:e}, certified gain {:.4}",
                sys.name(),
                r.radius.unwrap_or(f64::NAN),
                r.max_relative_approx_error,
                r.max_eq20_residual,
                r.certified_gamma
            ),
        );
    }
    v
}

fn criterion_8(suite_report: &suite::SuiteReport) -> Verdict {
    let mut v = Verdict::new();
    let decay = System::Affine(AffineSystem::parse("decay", 1, 1, &["-x1"], &[&["1"]]).unwrap());
    let err = |h: f64| {
        let tr = trajectories::integrate(&decay, &[1.0], &InputSignal::zero(1), (0.0, 1.0), h).unwrap();
        (tr.states.last().unwrap()[0] - (-1.0_f64).exp()).abs()
    };
    let e = err(1e-3);
    let ratio = err(0.1) / err(0.05);
    v.require(e <= 1e-9 && (12.0..=20.0).contains(&ratio), format!("e^-1 error {e:e}, halving ratio {ratio:.2}"));

    let mut worst: f64 = 0.0;
    let mut all = true;
    for entry in &suite_report.entries {
        let c = entry.checks.iter().find(|c| c.name == "dissipation");
        let slack = c.and_then(|c| c.detail["max_slack"].as_f64()).unwrap_or(f64::NAN);
        all &= c.is_some_and(|c| c.passed) && c.and_then(|c| c.detail["runs"].as_u64()) == Some(100);
        worst = worst.max(slack);
    }
    v.require(all, format!("dissipation slack <= {worst:e} over 100 runs per zoo entry"));

    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let ensemble: Vec<InputSignal> = (0..50).map(|_| InputSignal::random_piecewise(&mut rng, 2, 5.0, 0.25, 2.0)).collect();
    let b = trajectories::l2_gain_lowerbound(&zoo::sigma1(), &ensemble, 5.0, 1e-3).unwrap();
    v.require(b.ratio <= 1.001, format!("sigma1 energy ratio {:.4} (origin is invariant, so the bound is vacuous)", b.ratio));
    let lf = trajectories::l2_gain_lowerbound(&zoo::scalar_linear(), &trajectories::low_frequency_ensemble(&suite::low_frequencies()), 50.0, 1e-2).unwrap();
    v.require(lf.ratio >= 0.95, format!("low-frequency ratio {:.4}", lf.ratio));
    v
}

fn criterion_9(first: &str, first_secs: f64) -> Verdict {
    let mut v = Verdict::new();
    let t = Instant::now();
    let second = serde_json::to_string_pretty(&suite::run_all(&SuiteOptions::default())).unwrap();
    let secs = t.elapsed().as_secs_f64();
    v.require(first == second, format!("two runs give {} identical bytes", first.len()));
    v.require(first_secs.max(secs) <= 300.0, format!("suite runtime {:.1}s and {:.1}s", first_secs, secs));
    v
}

fn main() -> ExitCode {
    let t = Instant::now();
    let report = suite::run_all(&SuiteOptions::default());
    let first_secs = t.elapsed().as_secs_f64();
    let first = serde_json::to_string_pretty(&report).unwrap();

    let verdicts = [
        criterion_1(),
        criterion_2(),
        criterion_3(),
        criterion_4(),
        criterion_5(),
        criterion_6(),
        criterion_7(),
        criterion_8(&report),
        criterion_9(&first, first_secs),
    ];
    let mut failed = Vec::new();
    for (k, v) in verdicts.iter().enumerate() {
        println!("criterion {}: {}: {}", k + 1, if v.passed { "PASS" } else { "FAIL" }, v.notes.join("; "));
        if !v.passed {
            failed.push(k + 1);
        }
    }
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        eprintln!("failed criteria: {failed:?}");
        ExitCode::FAILURE
    }
}
