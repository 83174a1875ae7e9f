//! `hji`: batch front end for verifying, falsifying, constructing and
//! smoothing storage functions.
//!
//! Every command writes a JSON report (and CSV dumps where meaningful) to the
//! output directory and prints a one-line verdict. Exit codes: 0 claim verified
//! or obstruction verified, 1 claim falsified or violation found, 2 usage or
//! runtime error.

mod args;
mod out;

use std::io::Write;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::Parser;
use serde_json::json;

use hji_core::audits;
use hji_core::config::{self, SystemSpec};
use hji_core::construct1d::{self, Envelope};
use hji_core::hji as core_hji;
use hji_core::smoothing::{self, SmoothOptions};
use hji_core::storage::{self, Builtin, StorageCandidate};
use hji_core::suite::{self, SuiteOptions};
use hji_core::systems::{zoo, System};
use hji_core::trajectories::{self, InputSignal};

use args::{AuditKindArg, Cli, Command, SystemArgs, ZooCommand};
use out::Output;

/// Outcome of a command: process exit code and the verdict line.
struct Outcome {
    code: u8,
    line: String,
}

impl Outcome {
    fn new(ok: bool, line: String) -> Outcome {
        Outcome {
            code: if ok { 0 } else { 1 },
            line,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(o) => {
            let _ = writeln!(std::io::stdout(), "{}", o.line);
            ExitCode::from(o.code)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn configure_jobs(jobs: Option<usize>) -> Result<()> {
    let jobs = match jobs {
        Some(j) => Some(j),
        None => match std::env::var("HJI_JOBS") {
            Ok(s) => Some(s.trim().parse().with_context(|| format!("HJI_JOBS must be a positive integer, got `{s}`"))?),
            Err(_) => None,
        },
    };
    if let Some(j) = jobs {
        if j == 0 {
            bail!("--jobs must be positive");
        }
        #[cfg(feature = "parallel")]
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .context("configuring the worker pool")?;
    }
    Ok(())
}

struct Resolved {
    system: System,
    zoo_entry: Option<zoo::ZooEntry>,
}

fn resolve_system(a: &SystemArgs) -> Result<Resolved> {
    match (&a.zoo, &a.system) {
        (Some(name), None) => {
            let e = zoo::lookup(name).ok_or_else(|| anyhow!("unknown zoo entry `{name}`"))?;
            Ok(Resolved {
                system: e.system.clone(),
                zoo_entry: Some(e),
            })
        }
        (None, Some(path)) => Ok(Resolved {
            system: config::load_system(path)?,
            zoo_entry: None,
        }),
        _ => bail!("give exactly one of --zoo and --system"),
    }
}

fn resolve_storage(arg: Option<&str>, r: &Resolved) -> Result<StorageCandidate> {
    match arg {
        Some(s) => Ok(config::storage_from_arg(s, r.system.n())?),
        None => r
            .zoo_entry
            .as_ref()
            .map(|e| e.witness_candidate())
            .ok_or_else(|| anyhow!("--storage is required unless --zoo supplies a witness")),
    }
}

fn run(cli: Cli) -> Result<Outcome> {
    configure_jobs(cli.jobs)?;
    let out = Output::new(cli.out.clone())?;
    match cli.command {
        Command::Verify(a) => verify(&out, a),
        Command::Gain(a) => gain(&out, a),
        Command::Simulate(a) => simulate(&out, a, cli.seed),
        Command::L2gain(a) => l2gain(&out, a, cli.seed),
        Command::Construct1d(a) => construct(&out, a),
        Command::Smooth(a) => smooth(&out, a),
        Command::Audit(a) => audit(&out, a),
        Command::Zoo { command } => zoo_cmd(&out, command, cli.seed),
        Command::Subdiff(a) => subdiff(&out, a),
    }
}

fn verify(out: &Output, a: args::VerifyArgs) -> Result<Outcome> {
    let r = resolve_system(&a.sys)?;
    let v = resolve_storage(a.storage.as_deref(), &r)?;
    let region = a.region.region(r.system.n())?;
    let opts = a.residual.options()?;
    let rep = core_hji::check_witness(&r.system, v.as_ref(), a.gamma, &region, &opts)?;
    out.json("verify.json", &json!({ "region": region, "report": rep }))?;
    let (h, rows) = rep.csv_rows(r.system.n(), r.system.m());
    out.csv("verify.csv", &h, &rows)?;
    Ok(Outcome::new(
        rep.passed(),
        format!(
            "{}: {} on {} at gamma {} (max residual {:e} at {:?}, {} points)",
            if rep.passed() { "PASS" } else { "FAIL" },
            rep.storage,
            rep.system,
            rep.gamma,
            rep.max_residual,
            rep.worst_x,
            rep.points_checked
        ),
    ))
}

fn gain(out: &Output, a: args::GainArgs) -> Result<Outcome> {
    let r = resolve_system(&a.sys)?;
    let v = resolve_storage(a.storage.as_deref(), &r)?;
    let region = a.region.region(r.system.n())?;
    let opts = a.residual.options()?;
    let (lo, hi, step) = args::parse_range(&a.gammas)?;
    let grid = core_hji::gamma_grid(lo, hi, step);
    let scan = core_hji::min_gain_scan(&r.system, v.as_ref(), &region, &grid, &opts)?;
    out.json("gain.json", &json!({ "grid": [lo, hi, step], "scan": scan }))?;
    Ok(match scan.gamma {
        Some(g) => Outcome::new(true, format!("{g:.2}")),
        None => Outcome::new(false, format!("no gain in [{lo}, {hi}] passes")),
    })
}

fn simulate(out: &Output, a: args::SimulateArgs, seed: u64) -> Result<Outcome> {
    let r = resolve_system(&a.sys)?;
    let u = args::parse_input(&a.input, r.system.m(), a.t_end, seed)?;
    let x0 = match &a.x0 {
        Some(x) => x.clone(),
        None => vec![0.0; r.system.n()],
    };
    let tr = trajectories::integrate(&r.system, &x0, &u, (0.0, a.t_end), a.step)?;
    let (h, rows) = tr.csv_rows();
    out.csv("trajectory.csv", &h, &rows)?;
    let audit = match (&a.storage, a.gamma, &r.zoo_entry) {
        (None, None, None) => None,
        _ => {
            let v = resolve_storage(a.storage.as_deref(), &r)?;
            let gamma = match (a.gamma, &r.zoo_entry) {
                (Some(g), _) => g,
                (None, Some(e)) => e.claimed_gamma.representative(),
                (None, None) => bail!("--gamma is required with --storage"),
            };
            Some((gamma, trajectories::dissipation_audit(&tr, v.as_ref(), gamma)?))
        }
    };
    let last = tr.states.last().cloned().unwrap_or_default();
    out.json(
        "simulate.json",
        &json!({
            "seed": seed,
            "input": u,
            "x0": x0,
            "final_state": last,
            "steps": tr.times.len() - 1,
            "audit": audit.as_ref().map(|(g, d)| json!({ "gamma": g, "max_slack": d.max_slack, "argmax_interval": d.argmax_interval })),
        }),
    )?;
    Ok(match audit {
        Some((g, d)) => Outcome::new(
            d.max_slack <= suite::DISSIPATION_TOL,
            format!(
                "{}: max dissipation slack {:e} at gamma {g}{}",
                if d.max_slack <= suite::DISSIPATION_TOL { "PASS" } else { "FAIL" },
                d.max_slack,
                if d.max_slack > 0.0 { format!(" on [{}, {}]", d.argmax_interval.0, d.argmax_interval.1) } else { String::new() }
            ),
        ),
        None => Outcome::new(true, format!("integrated {} steps, x(T) = {last:?}", tr.times.len() - 1)),
    })
}

fn l2gain(out: &Output, a: args::L2gainArgs, seed: u64) -> Result<Outcome> {
    use rand::SeedableRng;
    let r = resolve_system(&a.sys)?;
    let ensemble: Vec<InputSignal> = if a.low_frequency {
        if r.system.m() != 1 {
            bail!("--low-frequency needs a single-input system");
        }
        trajectories::low_frequency_ensemble(&suite::low_frequencies())
    } else {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..a.inputs)
            .map(|_| InputSignal::random_piecewise(&mut rng, r.system.m(), a.horizon, a.period, a.amplitude))
            .collect()
    };
    let b = trajectories::l2_gain_lowerbound(&r.system, &ensemble, a.horizon, a.step)?;
    let claimed = a.gamma.or_else(|| r.zoo_entry.as_ref().and_then(|e| e.claimed_gamma.value()));
    let ok = claimed.is_none_or(|g| b.ratio <= g + suite::GAIN_TOL);
    out.json(
        "l2gain.json",
        &json!({ "seed": seed, "horizon": a.horizon, "step": a.step, "claimed_gamma": claimed, "bound": b, "ensemble": ensemble }),
    )?;
    Ok(Outcome::new(
        ok,
        format!(
            "{}: energy ratio lower bound {:.6} over {} admissible inputs{}",
            if ok { "PASS" } else { "FAIL" },
            b.ratio,
            b.admissible,
            claimed.map_or(String::new(), |g| format!(" (claimed gamma {g})"))
        ),
    ))
}

fn construct(out: &Output, a: args::Construct1dArgs) -> Result<Outcome> {
    let r = resolve_system(&a.sys)?;
    let v = resolve_storage(a.storage.as_deref(), &r)?;
    let h = Envelope::parse(&a.h).map_err(|e| anyhow!("envelope `{}`: {e}", a.h))?;
    let (lo, hi, step) = args::parse_range(&a.grid)?;
    let count = ((hi - lo) / step + 0.5).floor() as usize;
    let grid: Vec<f64> = (0..=count).map(|k| lo + k as f64 * step).collect();
    let c = construct1d::construct_w(&r.system, a.gamma, v.as_ref(), &h, &grid)?;
    let (hd, rows) = c.w.csv_rows();
    out.csv("construct1d.csv", &hd, &rows)?;
    out.json("construct1d.json", &json!({ "gamma": a.gamma, "envelope": a.h, "contracts": c.contracts, "w": c.w }))?;
    let ok = c.contracts.holds();
    Ok(Outcome::new(
        ok,
        format!(
            "{}: constructed W on {} nodes (min W-V {:e}, {} clamped, {} double roots)",
            if ok { "PASS" } else { "FAIL" },
            c.w.grid.len(),
            c.contracts.min_w_minus_v,
            c.contracts.clamped_points,
            c.contracts.double_root_points
        ),
    ))
}

fn smooth(out: &Output, a: args::SmoothArgs) -> Result<Outcome> {
    let r = resolve_system(&a.sys)?;
    let v = resolve_storage(a.storage.as_deref(), &r)?;
    let mut opts = SmoothOptions::annulus(a.r_min, a.r_max);
    opts.schedule_ppd = a.schedule_ppd;
    opts.cert_ppd = a.cert_ppd;
    let c = smoothing::smooth_witness(&r.system, v.clone(), a.gamma, a.gamma_prime, &opts)?;
    out.json("smooth.json", &c.report)?;
    let grid = smoothing::annulus_grid(r.system.n(), &opts, opts.schedule_ppd);
    let (h, rows) = c.csv_rows(v.as_ref(), &grid)?;
    out.csv("smooth.csv", &h, &rows)?;
    let rep = &c.report;
    let ok = rep.verdict == core_hji::Verdict::Pass;
    Ok(Outcome::new(
        ok,
        format!(
            "{}: smoothed {} certified at gamma {:.4} (radius {}, max |V-W|/V {:.3}, max residual {:e})",
            if ok { "PASS" } else { "FAIL" },
            rep.storage,
            rep.certified_gamma,
            rep.radius.map_or("none".to_string(), |r| format!("{r:e}")),
            rep.max_relative_approx_error,
            rep.max_eq20_residual
        ),
    ))
}

fn audit_outcome(out: &Output, r: &audits::AuditReport) -> Result<Outcome> {
    out.json(&format!("audit_{}.json", r.audit), r)?;
    let code = r.exit_code() as u8;
    let at = r
        .witness_point
        .as_ref()
        .map(|p| format!(" at {}", serde_json::to_string(p).unwrap_or_default()))
        .unwrap_or_default();
    Ok(Outcome {
        code,
        line: format!("{}: {}{}", serde_json::to_value(r.kind)?.as_str().unwrap_or("?"), r.candidate, at),
    })
}

fn audit(out: &Output, a: args::AuditArgs) -> Result<Outcome> {
    let n = match a.kind {
        AuditKindArg::Straddle => 1,
        _ => 2,
    };
    let candidate = |default: Option<Builtin>| -> Result<StorageCandidate> {
        match (&a.storage, default) {
            (Some(s), _) => Ok(config::storage_from_arg(s, n)?),
            (None, Some(b)) => Ok(b.candidate()),
            (None, None) => bail!("--storage is required for this audit"),
        }
    };
    let t_grid: Vec<f64> = (0..a.t_points).map(|k| k as f64 / (a.t_points.max(2) - 1) as f64).collect();
    match a.kind {
        AuditKindArg::Sigma1Axis => {
            let w = candidate(None)?;
            let r = audits::audit_sigma1_axis(w.as_ref(), &a.a_samples, a.limit_tol, &suite::default_region(2))?;
            audit_outcome(out, &r)
        }
        AuditKindArg::CurveMonotone => {
            let v = candidate(Some(Builtin::V2))?;
            let r = audits::audit_curve_monotone(v.as_ref(), a.a, &t_grid)?;
            audit_outcome(out, &r)
        }
        AuditKindArg::CurveTangency => {
            let d = audits::audit_curve_tangency(a.a, &t_grid)?;
            out.json("audit_curve_tangency.json", &json!({ "a": a.a, "t_points": a.t_points, "max_defect": d }))?;
            Ok(Outcome::new(d <= 1e-9, format!("max tangency defect {d:e}")))
        }
        AuditKindArg::Sigmap => {
            let v = candidate(None)?;
            let xi: Vec<Vec<f64>> = a.xi.chunks(2).map(|c| c.to_vec()).collect();
            if xi.is_empty() || xi.iter().any(|c| c.len() != 2) {
                bail!("--xi takes coordinate pairs");
            }
            let r = audits::audit_sigmap(v.as_ref(), a.p, a.gamma, &xi, a.search_u_max)?;
            audit_outcome(out, &r)
        }
        AuditKindArg::Straddle => {
            let w = candidate(Some(Builtin::V3Scalar))?;
            let r = audits::audit_scalar_straddle(w.as_ref(), &audits::default_h_seq(), &suite::default_region(1))?;
            audit_outcome(out, &r)
        }
        AuditKindArg::Sigma3Pieces => {
            let xs: Vec<f64> = (0..301).map(|k| 3.0 * k as f64 / 300.0).collect();
            let us: Vec<f64> = (0..301).map(|k| -3.0 + 6.0 * k as f64 / 300.0).collect();
            let d = audits::verify_sigma3_pieces(&xs, &us);
            out.json("audit_sigma3_pieces.json", &d)?;
            let ok = d.holds(1e-12, audits::PIECE_INEQ_TOL);
            Ok(Outcome::new(
                ok,
                format!(
                    "{}: equality defect {:e}, inequality defect {:e} over {} points",
                    if ok { "PASS" } else { "FAIL" },
                    d.max_equality_defect(),
                    d.max_inequality_defect(),
                    d.points
                ),
            ))
        }
    }
}

fn zoo_cmd(out: &Output, cmd: ZooCommand, seed: u64) -> Result<Outcome> {
    match cmd {
        ZooCommand::List => {
            let entries: Vec<_> = zoo::zoo()
                .iter()
                .map(|e| {
                    json!({
                        "name": e.name,
                        "kind": e.system.kind(),
                        "witness": e.witness.as_str(),
                        "claimed_gamma": e.claimed_gamma,
                        "notes": e.notes,
                        "definition": SystemSpec::from_system(&e.system),
                    })
                })
                .collect();
            out.json("zoo_list.json", &entries)?;
            let mut line = String::new();
            for e in zoo::zoo() {
                line.push_str(&format!("{:<20} {:<13} {:<10} gamma {}\n", e.name, e.system.kind(), e.witness.as_str(), e.claimed_gamma));
            }
            Ok(Outcome::new(true, line.trim_end().to_string()))
        }
        ZooCommand::Run { name, all } => {
            let opts = SuiteOptions {
                seed,
                ..SuiteOptions::default()
            };
            match (name, all) {
                (Some(name), false) => {
                    let e = zoo::lookup(&name).ok_or_else(|| anyhow!("unknown zoo entry `{name}`"))?;
                    let r = suite::run_entry(&e, &opts);
                    out.json(&format!("zoo_{}.json", out::file_stem(&e.name)), &r)?;
                    let failed: Vec<&str> = r.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
                    Ok(Outcome::new(r.passed, summary_line(&r.entry, r.checks.len(), &failed)))
                }
                (None, true) => {
                    let r = suite::run_all(&opts);
                    out.json("zoo_all.json", &r)?;
                    let lines: Vec<String> = r
                        .entries
                        .iter()
                        .map(|e| {
                            let failed: Vec<&str> = e.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
                            summary_line(&e.entry, e.checks.len(), &failed)
                        })
                        .collect();
                    Ok(Outcome::new(r.passed, lines.join("\n")))
                }
                _ => bail!("give either an entry name or --all"),
            }
        }
    }
}

fn summary_line(entry: &str, total: usize, failed: &[&str]) -> String {
    if failed.is_empty() {
        format!("PASS: {entry} ({total} checks)")
    } else {
        format!("FAIL: {entry} ({} of {total} checks failed: {})", failed.len(), failed.join(", "))
    }
}

fn subdiff(out: &Output, a: args::SubdiffArgs) -> Result<Outcome> {
    let n = a.x.len();
    let v = config::storage_from_arg(&a.storage, n)?;
    let exact = storage::subdiff(v.as_ref(), &a.x).ok();
    let check = match &a.zeta {
        Some(z) => {
            if z.len() != n {
                bail!("--zeta has {} components, --x has {n}", z.len());
            }
            Some(storage::verify_subgradient(v.as_ref(), &a.x, z, &storage::default_radii(), a.tol)?)
        }
        None => None,
    };
    out.json("subdiff.json", &json!({ "storage": v.name(), "x": a.x, "exact": exact, "zeta": a.zeta, "check": check }))?;
    Ok(match (check, exact) {
        (Some(c), _) => Outcome::new(
            c.accepted,
            format!("{}: extrapolated quotient limit {:e}", if c.accepted { "ACCEPTED" } else { "REJECTED" }, c.limit),
        ),
        (None, Some(s)) => Outcome::new(true, serde_json::to_string(&s)?),
        (None, None) => bail!("`{}` has no exact oracle; pass --zeta to test a candidate numerically", v.name()),
    })
}
