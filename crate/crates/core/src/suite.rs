//! End-to-end regression runs over the zoo.
//!
//! Each entry gets its witness sweep, a sharpness check where the claimed gain
//! is a number, randomized dissipation and gain runs, and the entry-specific
//! audits. Reports contain no timings, and all randomness derives from the seed,
//! so identical options give byte-identical JSON.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::audits::{self, AuditKind};
use crate::construct1d::{self, Envelope};
use crate::hji::{self, Region, ResidualMode, WitnessOptions};
use crate::par;
use crate::storage::{self, Builtin, ExprStorage, Regularity, Storage};
use crate::systems::zoo::{self, ClaimedGamma, ZooEntry};
use crate::trajectories::{self, InputSignal};

#[derive(Clone, Debug, Serialize)]
pub struct SuiteOptions {
    pub seed: u64,
    pub dissipation_runs: usize,
    pub dissipation_horizon: f64,
    pub gain_inputs: usize,
    pub gain_horizon: f64,
    pub step: f64,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions {
            seed: 0,
            dissipation_runs: 100,
            dissipation_horizon: 1.0,
            gain_inputs: 50,
            gain_horizon: 5.0,
            step: trajectories::DEFAULT_STEP,
        }
    }
}

/// Slack allowed in the integral dissipation inequality.
pub const DISSIPATION_TOL: f64 = 1e-4;
/// Slack allowed between the empirical and the claimed gain.
pub const GAIN_TOL: f64 = 1e-3;

#[derive(Clone, Debug, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: Value,
}

#[derive(Clone, Debug, Serialize)]
pub struct EntryReport {
    pub entry: String,
    pub system_kind: &'static str,
    pub witness: &'static str,
    pub claimed_gamma: ClaimedGamma,
    pub notes: &'static str,
    pub seed: u64,
    pub checks: Vec<CheckOutcome>,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub options: SuiteOptions,
    pub entries: Vec<EntryReport>,
    pub passed: bool,
}

/// Default sweep region: `[-2,2]²` at 41 points per axis, `[-3,3]` at 121 on the line.
pub fn default_region(n: usize) -> Region {
    match n {
        1 => Region::square(-3.0, 3.0, 1, 121),
        _ => Region::square(-2.0, 2.0, n, 41),
    }
}

/// Residual mode the suite uses for an entry.
pub fn default_mode(entry: &ZooEntry) -> ResidualMode {
    if entry.system.power_view().is_some() {
        ResidualMode::Auto
    } else {
        audits::sigma3_u_mode()
    }
}

fn check(name: &str, passed: bool, detail: Value) -> CheckOutcome {
    CheckOutcome {
        name: name.to_string(),
        passed,
        detail,
    }
}

fn failed(name: &str, err: impl std::fmt::Display) -> CheckOutcome {
    check(name, false, json!({ "error": err.to_string() }))
}

/// FNV-1a, to derive per-entry seeds from names.
fn name_hash(name: &str) -> u64 {
    name.bytes().fold(0xcbf29ce484222325, |h, b| (h ^ b as u64).wrapping_mul(0x100000001b3))
}

fn witness_checks(entry: &ZooEntry, out: &mut Vec<CheckOutcome>) {
    let v = entry.witness_candidate();
    let region = default_region(entry.system.n());
    let opts = WitnessOptions {
        mode: default_mode(entry),
        tol: None,
    };
    let gamma = entry.claimed_gamma.representative();
    match hji::check_witness(&entry.system, v.as_ref(), gamma, &region, &opts) {
        Ok(r) => out.push(check(
            "witness",
            r.passed(),
            json!({ "gamma": gamma, "mode": r.mode, "max_residual": r.max_residual, "worst_x": r.worst_x, "points": r.points_checked }),
        )),
        Err(e) => out.push(failed("witness", e)),
    }
    if entry.system.power_view().is_some() {
        let sampled = WitnessOptions {
            mode: ResidualMode::sampled_default(),
            tol: None,
        };
        match hji::check_witness(&entry.system, v.as_ref(), gamma, &region, &sampled) {
            Ok(r) => out.push(check(
                "witness_sampled_inputs",
                r.passed(),
                json!({ "gamma": gamma, "max_residual": r.max_residual, "worst_x": r.worst_x }),
            )),
            Err(e) => out.push(failed("witness_sampled_inputs", e)),
        }
    }
    let ClaimedGamma::Value(g) = entry.claimed_gamma else { return };
    let below = 0.9 * g;
    match hji::check_witness(&entry.system, v.as_ref(), below, &region, &opts) {
        Ok(r) => out.push(check(
            "fails_below_claim",
            !r.passed(),
            json!({ "gamma": below, "max_residual": r.max_residual, "worst_x": r.worst_x }),
        )),
        Err(e) => out.push(failed("fails_below_claim", e)),
    }
    let grid = hji::gamma_grid(0.5, 2.0, 0.01);
    match hji::min_gain_scan(&entry.system, v.as_ref(), &region, &grid, &opts) {
        Ok(s) => out.push(check(
            "gain_scan",
            s.gamma.is_some_and(|f| (f - g).abs() <= 0.01 + 1e-12),
            json!({ "grid": [0.5, 2.0, 0.01], "gamma": s.gamma }),
        )),
        Err(e) => out.push(failed("gain_scan", e)),
    }
}

fn random_state(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.5..=1.5)).collect()
}

fn trajectory_checks(entry: &ZooEntry, opts: &SuiteOptions, out: &mut Vec<CheckOutcome>) {
    let sys = &entry.system;
    let v = entry.witness_candidate();
    let gamma = entry.claimed_gamma.representative();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ name_hash(&entry.name));
    let runs: Vec<(Vec<f64>, InputSignal)> = (0..opts.dissipation_runs)
        .map(|_| {
            let x0 = random_state(&mut rng, sys.n());
            let u = InputSignal::random_piecewise(&mut rng, sys.m(), opts.dissipation_horizon, 0.1, 2.0);
            (x0, u)
        })
        .collect();
    let slacks = par::map(&runs, |(x0, u)| {
        let tr = trajectories::integrate(sys, x0, u, (0.0, opts.dissipation_horizon), opts.step)?;
        trajectories::dissipation_audit(&tr, v.as_ref(), gamma)
    });
    let mut worst = (0.0_f64, 0usize);
    let mut error = None;
    for (k, s) in slacks.into_iter().enumerate() {
        match s {
            Ok(a) if a.max_slack > worst.0 => worst = (a.max_slack, k),
            Ok(_) => {}
            Err(e) => {
                error = Some(e);
                break;
            }
        }
    }
    match error {
        Some(e) => out.push(failed("dissipation", e)),
        None => out.push(check(
            "dissipation",
            worst.0 <= DISSIPATION_TOL,
            json!({ "runs": opts.dissipation_runs, "gamma": gamma, "max_slack": worst.0, "worst_run": worst.1 }),
        )),
    }

    let ClaimedGamma::Value(g) = entry.claimed_gamma else { return };
    let ensemble: Vec<InputSignal> = (0..opts.gain_inputs)
        .map(|_| InputSignal::random_piecewise(&mut rng, sys.m(), opts.gain_horizon, 0.25, 2.0))
        .collect();
    match trajectories::l2_gain_lowerbound(sys, &ensemble, opts.gain_horizon, opts.step) {
        Ok(b) => out.push(check(
            "l2_gain_lowerbound",
            b.ratio <= g + GAIN_TOL,
            json!({ "inputs": opts.gain_inputs, "ratio": b.ratio, "claimed": g }),
        )),
        Err(e) => out.push(failed("l2_gain_lowerbound", e)),
    }
}

fn smooth(src: &str, grad: &[&str], n: usize) -> ExprStorage {
    ExprStorage::parse(src, n, Regularity::Smooth, Some(grad)).expect("fixed candidate parses")
}

fn specific_checks(entry: &ZooEntry, out: &mut Vec<CheckOutcome>) {
    let name = entry.name.as_str();
    if name == "sigma1" {
        // at u = (x1, |x2|) with x1 > 0 the supply vanishes
        let region = Region::square(0.05, 2.0, 2, 40);
        let worst = region
            .points()
            .iter()
            .filter(|x| x[0] > 0.0)
            .map(|x| hji::supply(x, &[x[0], x[1].abs()], 1.0).abs())
            .fold(0.0, f64::max);
        out.push(check("axis_reduction_supply", worst == 0.0, json!({ "max_abs_supply": worst })));
        match hji::point_residual(&entry.system, &Builtin::V1Scaled, &[1.0, 1.0], 0.9, &ResidualMode::Auto) {
            Ok(p) => {
                let expect = 2.0 / 0.9 - 2.0;
                out.push(check("residual_at_0.9", (p.residual - expect).abs() <= 1e-9, json!({ "residual": p.residual, "expected": expect })));
            }
            Err(e) => out.push(failed("residual_at_0.9", e)),
        }
        let cand = smooth("2*x1 + x2*x2", &["2", "2*x2"], 2);
        match audits::audit_sigma1_axis(&cand, &[0.5, 1.0, 2.0], 1e-6, &default_region(2)) {
            Ok(r) => out.push(check("axis_audit_falsifies", r.kind == AuditKind::ViolationFound, json!(r))),
            Err(e) => out.push(failed("axis_audit_falsifies", e)),
        }
    } else if name == "sigma2" {
        let ts: Vec<f64> = (0..=100).map(|k| k as f64 / 100.0).collect();
        for a in [0.5, 1.0, 2.0] {
            let spread = ts
                .iter()
                .map(|&t| Builtin::V2.value(&audits::sigma2_curve(a, t)).unwrap_or(f64::NAN))
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
            let tangency = audits::audit_curve_tangency(a, &ts).unwrap_or(f64::NAN);
            out.push(check(
                &format!("curve_a={a}"),
                spread.1 - spread.0 <= 1e-12 && tangency <= 1e-9,
                json!({ "v2_spread": spread.1 - spread.0, "tangency_defect": tangency }),
            ));
        }
        match audits::audit_curve_monotone(&Builtin::V1, 1.0, &[0.0, 0.5, 1.0]) {
            Ok(r) => {
                let inc = r.detail["increase"].as_f64().unwrap_or(f64::NAN);
                let expect = 0.5 + 0.75_f64.powf(1.5) - 1.0;
                out.push(check(
                    "curve_falsifies_l1",
                    r.kind == AuditKind::ViolationFound && (inc - expect).abs() <= 1e-12,
                    json!(r),
                ));
            }
            Err(e) => out.push(failed("curve_falsifies_l1", e)),
        }
    } else if let Some(p) = name.strip_prefix("sigma_p(").and_then(|s| s.strip_suffix(')')).and_then(|s| s.parse::<f64>().ok()) {
        if p > 2.0 {
            let cand = smooth("x1*x1 + x2*x2", &["2*x1", "2*x2"], 2);
            match audits::audit_sigmap(&cand, p, 1.0, &[vec![2.0, 1.0]], 1e3) {
                Ok(r) => {
                    let ok = r.kind == AuditKind::ViolationFound
                        && (p != 3.0
                            || (r.witness_point.as_ref().and_then(|w| w.u.clone()) == Some(vec![2.0, 0.0])
                                && (r.detail["residual"].as_f64().unwrap_or(f64::NAN) - 15.0).abs() <= 1e-9));
                    out.push(check("sigmap_falsifies_square_norm", ok, json!(r)));
                }
                Err(e) => out.push(failed("sigmap_falsifies_square_norm", e)),
            }
        }
    } else if name == "sigma3_scalar" {
        let xs: Vec<f64> = (0..301).map(|k| 3.0 * k as f64 / 300.0).collect();
        let us: Vec<f64> = (0..301).map(|k| -3.0 + 6.0 * k as f64 / 300.0).collect();
        let d = audits::verify_sigma3_pieces(&xs, &us);
        out.push(check("pieces", d.holds(1e-12, audits::PIECE_INEQ_TOL), json!(d)));
        let mut subgrad = Vec::new();
        let mut ok = true;
        for (z, expect) in [(1.0, true), (1.5, true), (2.0, true), (0.99, false), (2.01, false)] {
            match storage::verify_subgradient(&Builtin::V3Scalar, &[1.0], &[z], &storage::default_radii(), storage::DEFAULT_SUBGRADIENT_TOL) {
                Ok(c) => {
                    ok &= c.accepted == expect;
                    subgrad.push(json!({ "zeta": z, "accepted": c.accepted }));
                }
                Err(e) => {
                    ok = false;
                    subgrad.push(json!({ "zeta": z, "error": e.to_string() }));
                }
            }
        }
        out.push(check("kink_subgradients", ok, json!(subgrad)));
        match audits::audit_scalar_straddle(&Builtin::V3Scalar, &audits::default_h_seq(), &default_region(1)) {
            Ok(r) => out.push(check("straddle", r.kind == AuditKind::ObstructionVerified, json!(r))),
            Err(e) => out.push(failed("straddle", e)),
        }
    } else if name == "scalar_linear" {
        let grid: Vec<f64> = (1..=200).map(|k| 0.01 * k as f64).collect();
        let h = Envelope::parse("4*abs(x1)").expect("fixed envelope parses");
        match construct1d::construct_w(&entry.system, 1.0, &Builtin::SqNorm, &h, &grid) {
            Ok(c) => {
                let err = grid
                    .iter()
                    .map(|&x| (c.w.value(&[x]).unwrap_or(f64::NAN) - x * x).abs())
                    .fold(0.0, f64::max);
                out.push(check(
                    "construct_square",
                    err <= 1e-6 && c.contracts.holds(),
                    json!({ "max_abs_error": err, "double_root_points": c.contracts.double_root_points, "clamped_points": c.contracts.clamped_points }),
                ));
            }
            Err(e) => out.push(failed("construct_square", e)),
        }
        let ensemble = trajectories::low_frequency_ensemble(&low_frequencies());
        match trajectories::l2_gain_lowerbound(&entry.system, &ensemble, 50.0, 1e-2) {
            Ok(b) => out.push(check("low_frequency_gain", b.ratio >= 0.95 && b.ratio <= 1.0 + GAIN_TOL, json!(b))),
            Err(e) => out.push(failed("low_frequency_gain", e)),
        }
    }
}

/// Frequencies of the low-frequency sweep.
pub fn low_frequencies() -> Vec<f64> {
    vec![0.02, 0.05, 0.1, 0.2, 0.5, 1.0]
}

pub fn run_entry(entry: &ZooEntry, opts: &SuiteOptions) -> EntryReport {
    let mut checks = Vec::new();
    witness_checks(entry, &mut checks);
    trajectory_checks(entry, opts, &mut checks);
    specific_checks(entry, &mut checks);
    let passed = checks.iter().all(|c| c.passed);
    EntryReport {
        entry: entry.name.clone(),
        system_kind: entry.system.kind(),
        witness: entry.witness.as_str(),
        claimed_gamma: entry.claimed_gamma,
        notes: entry.notes,
        seed: opts.seed,
        checks,
        passed,
    }
}

pub fn run_all(opts: &SuiteOptions) -> SuiteReport {
    let entries: Vec<EntryReport> = zoo::zoo().iter().map(|e| run_entry(e, opts)).collect();
    let passed = entries.iter().all(|e| e.passed);
    SuiteReport {
        options: opts.clone(),
        entries,
        passed,
    }
}
