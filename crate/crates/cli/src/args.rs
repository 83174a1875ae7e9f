use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;

use hji_core::hji::{Region, ResidualMode, WitnessOptions, DEFAULT_U_POINTS};
use hji_core::storage::Interval;
use hji_core::trajectories::InputSignal;

#[derive(Debug, Parser)]
#[command(name = "hji", version, about = "Storage-function workbench for L2-gain dissipation inequalities")]
pub struct Cli {
    /// Directory receiving JSON reports and CSV dumps.
    #[arg(long, global = true, default_value = "hji-out")]
    pub out: PathBuf,
    /// Worker threads for grid sweeps (falls back to HJI_JOBS).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Seed for randomized input ensembles.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a storage candidate against the HJI on a grid.
    Verify(VerifyArgs),
    /// Smallest gain on a grid for which the candidate passes.
    Gain(GainArgs),
    /// Integrate a trajectory and audit the integral dissipation inequality.
    Simulate(SimulateArgs),
    /// Empirical lower bound on the L2 gain from zero initial state.
    L2gain(L2gainArgs),
    /// Build a scalar witness dominating a given storage function.
    Construct1d(Construct1dArgs),
    /// Mollify a nonsmooth witness and certify the degraded gain.
    Smooth(SmoothArgs),
    /// Run a falsification audit.
    Audit(AuditArgs),
    /// List or run the built-in example systems.
    Zoo {
        #[command(subcommand)]
        command: ZooCommand,
    },
    /// Viscosity subdifferential at a point, or a numeric test of a candidate subgradient.
    Subdiff(SubdiffArgs),
}

#[derive(Debug, Subcommand)]
pub enum ZooCommand {
    List,
    Run {
        name: Option<String>,
        #[arg(long)]
        all: bool,
    },
}

#[derive(Debug, Args)]
pub struct SystemArgs {
    /// Built-in system name.
    #[arg(long, conflicts_with = "system")]
    pub zoo: Option<String>,
    /// System JSON file.
    #[arg(long)]
    pub system: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RegionArgs {
    /// Box bounds as `lo hi` per state coordinate; defaults to [-2,2]^n ([-3,3] for n = 1).
    #[arg(long = "box", num_args = 2.., allow_negative_numbers = true, value_name = "LO HI")]
    pub bounds: Option<Vec<f64>>,
    /// Grid points per axis.
    #[arg(long)]
    pub ppd: Option<usize>,
}

impl RegionArgs {
    pub fn region(&self, n: usize) -> Result<Region> {
        let default = hji_core::suite::default_region(n);
        let ppd = self.ppd.unwrap_or(default.points_per_dim);
        if ppd == 0 {
            bail!("--ppd must be positive");
        }
        let bounds = match &self.bounds {
            None => default.bounds,
            Some(b) => {
                if b.len() != 2 * n {
                    bail!("--box needs {} numbers for a {n}-dimensional state, got {}", 2 * n, b.len());
                }
                let mut out = Vec::with_capacity(n);
                for c in b.chunks(2) {
                    if !(c[0].is_finite() && c[1].is_finite() && c[0] <= c[1]) {
                        bail!("--box interval [{}, {}] is not a finite nonempty interval", c[0], c[1]);
                    }
                    out.push(Interval::new(c[0], c[1]));
                }
                out
            }
        };
        Ok(Region::new(bounds, ppd))
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    /// Closed form where available, sampled otherwise.
    Auto,
    /// Always maximize over a sampled input grid.
    Sampled,
}

#[derive(Debug, Args)]
pub struct ResidualArgs {
    #[arg(long, value_enum, default_value = "auto")]
    pub mode: ModeArg,
    /// Input box `lo hi` per channel for sampled mode; defaults to a state-scaled box.
    #[arg(long = "u-box", num_args = 2.., allow_negative_numbers = true, value_name = "LO HI")]
    pub u_box: Option<Vec<f64>>,
    /// Input grid points per channel for sampled mode.
    #[arg(long = "u-points", default_value_t = DEFAULT_U_POINTS)]
    pub u_points: usize,
    /// Residual tolerance; defaults to 1e-9 for closed forms and 1e-6 for sampling.
    #[arg(long)]
    pub tol: Option<f64>,
}

impl ResidualArgs {
    pub fn options(&self) -> Result<WitnessOptions> {
        let mode = match self.mode {
            ModeArg::Auto => {
                if self.u_box.is_some() {
                    bail!("--u-box only applies with --mode sampled");
                }
                ResidualMode::Auto
            }
            ModeArg::Sampled => {
                if self.u_points < 2 {
                    bail!("--u-points must be at least 2");
                }
                let u_box = match &self.u_box {
                    None => None,
                    Some(b) => {
                        if b.len() % 2 != 0 {
                            bail!("--u-box takes `lo hi` pairs");
                        }
                        Some(
                            b.chunks(2)
                                .map(|c| {
                                    if c[0] <= c[1] {
                                        Ok(Interval::new(c[0], c[1]))
                                    } else {
                                        Err(anyhow!("--u-box interval [{}, {}] is empty", c[0], c[1]))
                                    }
                                })
                                .collect::<Result<Vec<_>>>()?,
                        )
                    }
                };
                ResidualMode::Sampled {
                    u_box,
                    u_points: self.u_points,
                }
            }
        };
        if let Some(t) = self.tol {
            if !(t >= 0.0) {
                bail!("--tol must be nonnegative");
            }
        }
        Ok(WitnessOptions { mode, tol: self.tol })
    }
}

fn positive(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("expected a positive number, got {v}"))
    }
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub sys: SystemArgs,
    /// `builtin:<name>`, `expr:<source>` or a storage JSON file; defaults to the zoo witness.
    #[arg(long)]
    pub storage: Option<String>,
    #[arg(long, value_parser = positive)]
    pub gamma: f64,
    #[command(flatten)]
    pub region: RegionArgs,
    #[command(flatten)]
    pub residual: ResidualArgs,
}

#[derive(Debug, Args)]
pub struct GainArgs {
    #[command(flatten)]
    pub sys: SystemArgs,
    #[arg(long)]
    pub storage: Option<String>,
    /// Gain grid `lo:hi:step`.
    #[arg(long)]
    pub gammas: String,
    #[command(flatten)]
    pub region: RegionArgs,
    #[command(flatten)]
    pub residual: ResidualArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub sys: SystemArgs,
    /// Initial state; defaults to the origin.
    #[arg(long, num_args = 1.., allow_negative_numbers = true)]
    pub x0: Option<Vec<f64>>,
    /// `zero`, `const:v1,v2,..`, `sin:amp,freq,phase`, `random:period,amp` or an input JSON file.
    #[arg(long, default_value = "zero")]
    pub input: String,
    #[arg(long = "t-end", default_value_t = 1.0, value_parser = positive)]
    pub t_end: f64,
    #[arg(long, default_value_t = hji_core::trajectories::DEFAULT_STEP, value_parser = positive)]
    pub step: f64,
    /// Storage for the dissipation audit; defaults to the zoo witness.
    #[arg(long)]
    pub storage: Option<String>,
    #[arg(long, value_parser = positive)]
    pub gamma: Option<f64>,
}

#[derive(Debug, Args)]
pub struct L2gainArgs {
    #[command(flatten)]
    pub sys: SystemArgs,
    /// Number of random piecewise-constant inputs.
    #[arg(long, default_value_t = 50)]
    pub inputs: usize,
    #[arg(long, default_value_t = 5.0, value_parser = positive)]
    pub horizon: f64,
    #[arg(long, default_value_t = 0.5, value_parser = positive)]
    pub period: f64,
    #[arg(long, default_value_t = 1.0, value_parser = positive)]
    pub amplitude: f64,
    #[arg(long, default_value_t = hji_core::trajectories::DEFAULT_STEP, value_parser = positive)]
    pub step: f64,
    /// Use slow sinusoids instead of random inputs.
    #[arg(long)]
    pub low_frequency: bool,
    /// Claimed gain to compare against; defaults to the zoo claim.
    #[arg(long, value_parser = positive)]
    pub gamma: Option<f64>,
}

#[derive(Debug, Args)]
pub struct Construct1dArgs {
    #[command(flatten)]
    pub sys: SystemArgs,
    #[arg(long)]
    pub storage: Option<String>,
    #[arg(long, value_parser = positive)]
    pub gamma: f64,
    /// Envelope `h(x)` as an expression in `x1`.
    #[arg(long)]
    pub h: String,
    /// Abscissa grid `lo:hi:step`.
    #[arg(long, default_value = "-3:3:0.01")]
    pub grid: String,
}

#[derive(Debug, Args)]
pub struct SmoothArgs {
    #[command(flatten)]
    pub sys: SystemArgs,
    #[arg(long)]
    pub storage: Option<String>,
    #[arg(long, value_parser = positive)]
    pub gamma: f64,
    #[arg(long = "gamma-prime", value_parser = positive)]
    pub gamma_prime: f64,
    /// Inner radius of the certification annulus.
    #[arg(long = "r-min", default_value_t = 0.25, value_parser = positive)]
    pub r_min: f64,
    /// Outer radius of the certification annulus.
    #[arg(long = "r-max", default_value_t = 2.0, value_parser = positive)]
    pub r_max: f64,
    #[arg(long = "schedule-ppd", default_value_t = 41)]
    pub schedule_ppd: usize,
    #[arg(long = "cert-ppd", default_value_t = 81)]
    pub cert_ppd: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum AuditKindArg {
    Sigma1Axis,
    CurveMonotone,
    CurveTangency,
    Sigmap,
    Straddle,
    Sigma3Pieces,
}

#[derive(Debug, Args)]
pub struct AuditArgs {
    #[arg(value_enum)]
    pub kind: AuditKindArg,
    /// Candidate under audit.
    #[arg(long)]
    pub storage: Option<String>,
    /// Axis points for sigma1-axis.
    #[arg(long = "a-samples", num_args = 1.., allow_negative_numbers = true, default_values_t = [0.5, 1.0, 1.5])]
    pub a_samples: Vec<f64>,
    #[arg(long = "limit-tol", default_value_t = 1e-3)]
    pub limit_tol: f64,
    /// Curve parameter for the curve audits.
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub a: f64,
    #[arg(long = "t-points", default_value_t = 1001)]
    pub t_points: usize,
    /// Exponent for sigmap.
    #[arg(long, default_value_t = 3.0, value_parser = positive)]
    pub p: f64,
    #[arg(long, default_value_t = 1.0, value_parser = positive)]
    pub gamma: f64,
    /// Sample points `x1 x2 ...` pairs for sigmap.
    #[arg(long, num_args = 2.., allow_negative_numbers = true, default_values_t = [1.0, 0.0, 0.5, 0.0, 1.5, 0.0])]
    pub xi: Vec<f64>,
    #[arg(long = "search-u-max", default_value_t = 1024.0, value_parser = positive)]
    pub search_u_max: f64,
}

#[derive(Debug, Args)]
pub struct SubdiffArgs {
    /// `builtin:<name>`, `expr:<source>` or a storage JSON file.
    #[arg(long)]
    pub storage: String,
    #[arg(long, num_args = 1.., allow_negative_numbers = true, required = true)]
    pub x: Vec<f64>,
    /// Candidate subgradient to test numerically.
    #[arg(long, num_args = 1.., allow_negative_numbers = true)]
    pub zeta: Option<Vec<f64>>,
    #[arg(long, default_value_t = hji_core::storage::DEFAULT_SUBGRADIENT_TOL)]
    pub tol: f64,
}

/// `lo:hi:step` with `lo <= hi` and `step > 0`.
pub fn parse_range(s: &str) -> Result<(f64, f64, f64)> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        bail!("expected `lo:hi:step`, got `{s}`");
    }
    let nums = parts
        .iter()
        .map(|p| p.trim().parse::<f64>().with_context(|| format!("bad number `{p}` in `{s}`")))
        .collect::<Result<Vec<_>>>()?;
    let (lo, hi, step) = (nums[0], nums[1], nums[2]);
    if !(step > 0.0) || !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
        bail!("range `{s}` needs finite lo <= hi and step > 0");
    }
    Ok((lo, hi, step))
}

fn numbers(s: &str, what: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|p| p.trim().parse::<f64>().with_context(|| format!("bad number `{p}` in {what}")))
        .collect()
}

/// Input signal from a compact spec or a JSON file.
pub fn parse_input(s: &str, m: usize, horizon: f64, seed: u64) -> Result<InputSignal> {
    let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
    let u = match kind {
        "zero" => InputSignal::zero(m),
        "const" => InputSignal::constant(numbers(rest, "const input")?),
        "sin" => {
            let v = numbers(rest, "sin input")?;
            if v.len() != 3 {
                bail!("`sin:amp,freq,phase` takes three numbers");
            }
            InputSignal::Sinusoid {
                amplitude: vec![v[0]; m],
                frequency: vec![v[1]; m],
                phase: vec![v[2]; m],
            }
        }
        "random" => {
            let v = numbers(rest, "random input")?;
            if v.len() != 2 || !(v[0] > 0.0) || !(v[1] > 0.0) {
                bail!("`random:period,amp` takes two positive numbers");
            }
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            InputSignal::random_piecewise(&mut rng, m, horizon, v[0], v[1])
        }
        _ => {
            let text = std::fs::read_to_string(s).with_context(|| format!("reading input file `{s}`"))?;
            serde_json::from_str(&text).with_context(|| format!("parsing input file `{s}`"))?
        }
    };
    u.validate().map_err(|e| anyhow!("input `{s}`: {e}"))?;
    if u.dim() != m {
        bail!("input `{s}` has {} channels, the system has {m}", u.dim());
    }
    Ok(u)
}
