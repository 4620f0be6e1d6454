//! The `snls` command line: single-path simulation, Monte Carlo ensembles,
//! estimate sweeps, stored-trajectory norms, quick identity checks and
//! output-file hash verification.
//!
//! Exit codes: 0 success, 2 invalid configuration or usage, 3 I/O failure,
//! 1 other errors. Failures print a machine-readable JSON record to stderr.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::ensemble::run_ensemble_hashed;
use crate::error::{Error, Result};
use crate::estimates;
use crate::io::{self, RunConfig};
use crate::noise::{hs_norm, NoiseSource, WienerState};
use crate::norms::{self, Trajectory, Window};
use crate::stepper::{evolve, evolve_truncated, SolverState, TruncationConfig};
use crate::torus::TorusSpec;

#[derive(Parser)]
#[command(name = "snls", version, about = "Pseudo-spectral simulator for stochastic NLS on tori")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a single path and write the observables CSV.
    Simulate(SimulateArgs),
    /// Run a Monte Carlo ensemble and write the report JSON.
    Ensemble(EnsembleArgs),
    /// Run an estimate-constant sweep over a list of cutoffs.
    Verify(VerifyArgs),
    /// Compute norms of a stored trajectory.
    Norms(NormsArgs),
    /// Quick closed-identity checks.
    #[command(subcommand, name = "check-identity")]
    CheckIdentity(IdentityCmd),
    /// Re-derive and verify the config hash embedded in an output file.
    #[command(name = "check-file")]
    CheckFile { path: PathBuf },
}

#[derive(Args, Clone)]
struct CommonOpts {
    /// Flat key=value configuration file; explicit flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long = "N")]
    n: Option<u32>,
    /// Comma-separated per-axis periods.
    #[arg(long)]
    periods: Option<String>,
    #[arg(long)]
    k: Option<u32>,
    /// defocusing | focusing
    #[arg(long)]
    sign: Option<String>,
    /// strang | additive-exp-euler | multiplicative-ito-euler | multiplicative-strat-midpoint
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long = "T")]
    t_end: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    paths: Option<usize>,
    /// Observer stride in steps.
    #[arg(long)]
    stride: Option<usize>,
    /// on | off
    #[arg(long)]
    dealias: Option<String>,
    /// none | additive-ito | multiplicative-ito | multiplicative-strat-real
    #[arg(long)]
    noise: Option<String>,
    /// zero | band:<radius>:<amp> | jb:<a>:<amp> | file:<path>
    #[arg(long)]
    phi: Option<String>,
    /// zero | constant:<re>,<im> | smooth:<amp>,<decay>
    #[arg(long)]
    u0: Option<String>,
    /// on | off
    #[arg(long)]
    nonlinearity: Option<String>,
    /// Comma-separated: mass, energy, hs:<s>.
    #[arg(long)]
    observables: Option<String>,
    /// Comma-separated moment orders.
    #[arg(long)]
    moments: Option<String>,
    /// Cutoff radius of the truncated evolution.
    #[arg(long = "R")]
    r_cut: Option<f64>,
    /// Regularity s of the running norm.
    #[arg(long)]
    s: Option<f64>,
    /// Temporal exponent b of the running norm (0 ≤ b < 1/2).
    #[arg(long)]
    b: Option<f64>,
    /// Running-norm refresh stride in steps.
    #[arg(long)]
    refresh: Option<usize>,
    /// Regularity of the hs_norm CSV column.
    #[arg(long = "hs-s")]
    hs_s: Option<f64>,
}

impl CommonOpts {
    fn to_config(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        macro_rules! set_opt {
            ($key:expr, $field:expr) => {
                if let Some(v) = &$field {
                    cfg.set($key, v);
                }
            };
        }
        set_opt!("d", self.d);
        set_opt!("N", self.n);
        set_opt!("periods", self.periods);
        set_opt!("k", self.k);
        set_opt!("sign", self.sign);
        set_opt!("scheme", self.scheme);
        set_opt!("dt", self.dt);
        set_opt!("T", self.t_end);
        set_opt!("seed", self.seed);
        set_opt!("paths", self.paths);
        set_opt!("stride", self.stride);
        set_opt!("dealias", self.dealias);
        set_opt!("noise", self.noise);
        set_opt!("phi", self.phi);
        set_opt!("u0", self.u0);
        set_opt!("nonlinearity", self.nonlinearity);
        set_opt!("observables", self.observables);
        set_opt!("moments", self.moments);
        set_opt!("R", self.r_cut);
        set_opt!("s", self.s);
        set_opt!("b", self.b);
        set_opt!("refresh", self.refresh);
        set_opt!("hs-s", self.hs_s);
        Ok(cfg)
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: CommonOpts,
    /// Observables CSV output path.
    #[arg(long, default_value = "observables.csv")]
    out_csv: PathBuf,
    /// Also track the running X^{s,b} norm per observed sample.
    #[arg(long)]
    track_xsb: bool,
    /// Save the observed trajectory.
    #[arg(long)]
    save_traj: Option<PathBuf>,
    /// Save the final state snapshot.
    #[arg(long)]
    save_snapshot: Option<PathBuf>,
}

#[derive(Args)]
struct EnsembleArgs {
    #[command(flatten)]
    common: CommonOpts,
    /// Report JSON output path.
    #[arg(long, default_value = "report.json")]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    /// strichartz | l4 | product | multilinear
    #[arg(long)]
    estimate: String,
    /// Comma-separated cutoff list.
    #[arg(long, default_value = "8,16,32")]
    n_list: String,
    #[arg(long, default_value_t = 200)]
    samples: usize,
    #[arg(long, default_value_t = 1)]
    d: usize,
    #[arg(long, default_value_t = 6.0)]
    p: f64,
    #[arg(long, default_value_t = 0.0)]
    s: f64,
    #[arg(long, default_value_t = 1.0)]
    r: f64,
    #[arg(long, default_value_t = 1)]
    k: u32,
    #[arg(long, default_value_t = 0.375)]
    b: f64,
    #[arg(long, default_value_t = 0.625)]
    bp: f64,
    #[arg(long = "T", default_value_t = 1.0)]
    t_horizon: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out_csv: Option<PathBuf>,
    #[arg(long)]
    out_json: Option<PathBuf>,
}

#[derive(Args)]
struct NormsArgs {
    /// Stored trajectory path.
    #[arg(long)]
    traj: PathBuf,
    #[arg(long, default_value_t = 0.0)]
    s: f64,
    #[arg(long, default_value_t = 0.375)]
    b: f64,
    /// sharp | none
    #[arg(long, default_value = "sharp")]
    window: String,
    #[arg(long, default_value_t = 1)]
    k: u32,
    /// defocusing | focusing (for the energy column)
    #[arg(long, default_value = "defocusing")]
    sign: String,
}

#[derive(Subcommand)]
enum IdentityCmd {
    /// Singular-integral identity: quadrature vs π/sin(πα).
    Factorization {
        #[arg(long)]
        alpha: f64,
        #[arg(long = "t", default_value_t = 1.0)]
        t: f64,
        #[arg(long, default_value_t = 0.0)]
        mu: f64,
    },
    /// Linear additive Itô isometry E‖Ψ(t)‖²_{H^s} = 2t‖φ‖²_{HS}.
    Isometry {
        #[arg(long, default_value_t = 2000)]
        paths: usize,
        #[arg(long = "T", default_value_t = 0.5)]
        t: f64,
        #[arg(long = "N", default_value_t = 16)]
        n: u32,
        #[arg(long, default_value_t = 0.0)]
        s: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Additive mass drift slope vs ‖φ‖²_{HS}.
    Drift {
        #[arg(long, default_value_t = 500)]
        paths: usize,
        #[arg(long = "T", default_value_t = 0.5)]
        t: f64,
        #[arg(long = "N", default_value_t = 16)]
        n: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// Entry point; returns the process exit status.
pub fn run_cli<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // clap renders its own usage text; route errors to stderr.
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(err) => {
            let (code, kind) = match &err {
                Error::Validation(_)
                | Error::InvalidParam { .. }
                | Error::SchemeNoiseMismatch { .. }
                | Error::Format { .. } => (2, "invalid-config"),
                Error::Io(_) => (3, "io"),
                _ => (1, "runtime"),
            };
            let detail: Vec<String> = match &err {
                Error::Validation(list) => list.clone(),
                other => vec![other.to_string()],
            };
            let record = serde_json::json!({ "error": kind, "detail": detail });
            eprintln!("{record}");
            code
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Simulate(args) => simulate(args),
        Cmd::Ensemble(args) => ensemble(args),
        Cmd::Verify(args) => verify(args),
        Cmd::Norms(args) => norms_cmd(args),
        Cmd::CheckIdentity(cmd) => check_identity(cmd),
        Cmd::CheckFile { path } => {
            let hash = io::check_file_hash(&path)?;
            println!("ok config_hash={hash}");
            Ok(())
        }
    }
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let cfg = args.common.to_config()?;
    let built = cfg.build()?;
    let ens = &built.ensemble;

    let field = ens.u0.build(&built.torus);
    let mut state = match &built.stepper.noise {
        Some(ns) => SolverState::with_noise(
            field,
            0.0,
            NoiseSource::Live(WienerState::with_mode(
                &built.torus,
                ens.base_seed,
                ns.mode.requires_real_noise(),
            )),
        ),
        None => SolverState::new(field, 0.0),
    };

    let (traj, tau) = match built.truncation {
        Some((r, s, b, refresh)) => {
            let mut trunc = TruncationConfig::new(r, s, b)?;
            trunc.refresh_stride = refresh;
            evolve_truncated(&mut state, &built.stepper, &trunc, built.horizon, built.stride)?
        }
        None => (
            evolve(&mut state, &built.stepper, built.horizon, built.stride, None)?,
            None,
        ),
    };

    let nl = built.stepper.nl.unwrap_or(crate::torus::NonlinearitySpec {
        k: 1,
        sign: crate::torus::Sign::Defocusing,
    });
    let track = args.track_xsb || built.truncation.is_some();
    let (xsb_s, xsb_b) = built
        .truncation
        .map(|(_, s, b, _)| (s, b))
        .unwrap_or((0.0, 0.375));

    let mut csv = io::ObservablesCsv::create(&args.out_csv, &cfg)?;
    for i in 0..traj.len() {
        let (t, f) = traj.sample(i);
        let running = if track && i >= 1 {
            let prefix = Trajectory::from_parts(
                traj.times()[..=i].to_vec(),
                traj.fields()[..=i].to_vec(),
            )?;
            Some(norms::xsb_norm(&prefix, xsb_s, xsb_b, Window::Sharp)?)
        } else {
            None
        };
        csv.row(
            t,
            norms::mass(f),
            norms::energy(f, &nl),
            norms::sobolev_norm(f, built.hs_s),
            running,
        )?;
    }
    csv.finish()?;

    if let Some(path) = &args.save_traj {
        io::write_trajectory(path, &traj)?;
    }
    if let Some(path) = &args.save_snapshot {
        let (t, f) = traj.sample(traj.len() - 1);
        io::write_snapshot(path, f, t)?;
    }
    match tau {
        Some(t) => println!("done t={} tau_R={t}", state.t),
        None => println!("done t={}", state.t),
    }
    Ok(())
}

fn ensemble(args: EnsembleArgs) -> Result<()> {
    let cfg = args.common.to_config()?;
    let built = cfg.build()?;
    let report = run_ensemble_hashed(&built.ensemble, cfg.hash())?;
    io::write_report_json(&args.out, &cfg, &report)?;
    println!(
        "done paths={} events={} out={}",
        built.ensemble.paths,
        report.events.len(),
        args.out.display()
    );
    Ok(())
}

fn verify(args: VerifyArgs) -> Result<()> {
    let n_list: Vec<u32> = args
        .n_list
        .split(',')
        .map(|v| v.trim().parse::<u32>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::invalid("n-list", "comma-separated integers expected"))?;

    let mut config = RunConfig::default();
    config.set("estimate", &args.estimate);
    config.set("n-list", &args.n_list);
    config.set("samples", args.samples);
    config.set("d", args.d);
    config.set("seed", args.seed);
    config.set("T", args.t_horizon);

    let mut sweeps = Vec::new();
    let mut rows: Vec<(u32, usize, f64)> = Vec::new();
    for &n in &n_list {
        let spec = TorusSpec::new(args.d, n)?;
        let sweep = match args.estimate.as_str() {
            "strichartz" => {
                config.set("p", args.p);
                estimates::strichartz_ratio(&spec, args.p, args.samples, args.t_horizon, args.seed)?
            }
            "l4" => estimates::l4_xsb_ratio_random(&spec, args.samples, args.t_horizon, args.seed)?,
            "product" => {
                config.set("s", args.s);
                config.set("r", args.r);
                estimates::product_ratio(&spec, args.s, args.r, args.samples, args.seed)?
            }
            "multilinear" => {
                config.set("s", args.s);
                config.set("k", args.k);
                config.set("b", args.b);
                config.set("bp", args.bp);
                estimates::multilinear_ratio(
                    &spec,
                    args.k,
                    args.s,
                    args.b,
                    args.bp,
                    args.samples,
                    args.t_horizon,
                    args.seed,
                )?
            }
            other => return Err(Error::invalid("estimate", format!("unknown estimate `{other}`"))),
        };
        for (i, r) in sweep.ratios.iter().enumerate() {
            rows.push((n, i, *r));
        }
        println!("N={n} max={:.6} mean={:.6}", sweep.max(), sweep.mean());
        sweeps.push(sweep);
    }

    if let Some(path) = &args.out_csv {
        io::write_verifier_csv(path, &config, &rows)?;
    }
    if let Some(path) = &args.out_json {
        io::write_verifier_json(path, &config, &args.estimate, &sweeps)?;
    }
    Ok(())
}

fn norms_cmd(args: NormsArgs) -> Result<()> {
    let traj = io::read_trajectory(&args.traj)?;
    let window = match args.window.as_str() {
        "sharp" => Window::Sharp,
        "none" => Window::Raw,
        other => return Err(Error::invalid("window", format!("unknown window `{other}`"))),
    };
    let nl = crate::torus::NonlinearitySpec::new(
        args.k,
        match args.sign.as_str() {
            "defocusing" => crate::torus::Sign::Defocusing,
            "focusing" => crate::torus::Sign::Focusing,
            other => return Err(Error::invalid("sign", format!("unknown sign `{other}`"))),
        },
    )?;
    let (t_last, last) = traj.sample(traj.len() - 1);
    let doc = serde_json::json!({
        "samples": traj.len(),
        "dt": traj.uniform_dt()?,
        "t_final": t_last,
        "mass_final": norms::mass(last),
        "energy_final": norms::energy(last, &nl),
        "hs_final": norms::sobolev_norm(last, args.s),
        "xsb": norms::xsb_norm(&traj, args.s, args.b, window)?,
    });
    println!("{}", serde_json::to_string_pretty(&doc)?);
    Ok(())
}

fn check_identity(cmd: IdentityCmd) -> Result<()> {
    match cmd {
        IdentityCmd::Factorization { alpha, t, mu } => {
            let value = estimates::factorization_check(alpha, t, mu)?;
            let expect = std::f64::consts::PI / (std::f64::consts::PI * alpha).sin();
            let diff = (value - expect).abs();
            println!("factorization alpha={alpha} value={value:.9} expected={expect:.9} |diff|={diff:.3e}");
            if diff > 1e-6 {
                return Err(Error::invalid("alpha", "identity residual above 1e-6"));
            }
        }
        IdentityCmd::Isometry { paths, t, n, s, seed } => {
            let spec = TorusSpec::new(1, n)?;
            let op = io::build_operator("jb:2:1", &spec)?;
            let expected = 2.0 * t * hs_norm(&op, s).powi(2);
            let steps = 64usize;
            let dt = t / steps as f64;
            let values = crate::map_indexed(paths, |i| {
                let mut src = NoiseSource::Live(WienerState::new(&spec, seed ^ i as u64));
                let mut psi = crate::torus::SpectralField::zeros(&spec);
                for _ in 0..steps {
                    psi = crate::noise::convolve_additive_step(&psi, &op, &mut src, dt).unwrap();
                }
                norms::sobolev_norm(&psi, s).powi(2)
            });
            let (mean, se) = crate::ensemble::mean_and_se(&values);
            let z = (mean - expected).abs() / se;
            println!("isometry t={t} mean={mean:.6} expected={expected:.6} z={z:.2}");
            if z > 3.0 {
                return Err(Error::invalid("isometry", "outside 3 standard errors"));
            }
        }
        IdentityCmd::Drift { paths, t, n, seed } => {
            let mut cfg = RunConfig::default();
            cfg.set("N", n);
            cfg.set("noise", "additive-ito");
            cfg.set("phi", "band:1:1");
            cfg.set("scheme", "additive-exp-euler");
            cfg.set("dt", 1e-3);
            cfg.set("T", t);
            cfg.set("paths", paths);
            cfg.set("seed", seed);
            cfg.set("stride", 100);
            cfg.set("observables", "mass");
            let built = cfg.build()?;
            let drift = crate::ensemble::drift_check(&built.ensemble)?;
            let last = drift.last().ok_or_else(|| Error::invalid("T", "no samples"))?;
            let z = last[1].abs() / last[2];
            println!("drift residual r(T)={:.6} se={:.6} z={z:.2}", last[1], last[2]);
            if z > 3.0 {
                return Err(Error::invalid("drift", "outside 3 standard errors"));
            }
        }
    }
    Ok(())
}
