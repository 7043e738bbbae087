//! `khess`: classify exponent configurations, integrate radial solutions, and
//! run the verification suites.
//!
//! Exit codes: 0 success, 1 failed comparison (sweep disagreement or failing
//! suite), 2 usage or domain error, 3 numerical failure.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use khessian::harness::{io as kio, sweep, verify};
use khessian::radial::{
    check_estimates, estimate_blowup_rate, integrate, IntegrateOptions, Terminal,
};
use khessian::{asymptotics, classify, dynamics, picard, ExponentConfig};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(version, about = "Radial solutions of coupled k-Hessian systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ConfigArgs {
    /// JSON file with keys N, k, m, p, q, s
    #[arg(long, conflicts_with_all = ["n", "k", "m", "p", "q", "s"])]
    config: Option<PathBuf>,
    #[arg(long = "N", allow_negative_numbers = true)]
    n: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    k: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    m: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    p: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    q: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    s: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Derived constants and the predicted regime
    Classify {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Integrate from (u, v)(0) = (a, b) and write the trajectory as CSV
    Solve {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, default_value_t = 1.0)]
        a: f64,
        #[arg(long, default_value_t = 1.0)]
        b: f64,
        #[arg(long)]
        r_max: f64,
        /// Trajectory CSV destination
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1e-9)]
        rtol: f64,
        #[arg(long, default_value_t = 1e-12)]
        atol: f64,
        /// u or v above this ends the run as a blow-up ("inf" disables)
        #[arg(long, default_value_t = 1e12)]
        blowup_threshold: f64,
    },
    /// Reduced autonomous system
    Dynamics {
        #[command(subcommand)]
        what: DynCommand,
    },
    /// Fixed-point solution near the origin, written as CSV
    Picard {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, default_value_t = 1.0)]
        a: f64,
        #[arg(long, default_value_t = 1.0)]
        b: f64,
        /// Initial interval length; halved on non-convergence
        #[arg(long, default_value_t = 0.1)]
        rho: f64,
        #[arg(long, default_value_t = 512)]
        intervals: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Singular profile and, with --r-max, convergence of a computed solution
    Asymptotics {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, default_value_t = 1.0)]
        a: f64,
        #[arg(long, default_value_t = 1.0)]
        b: f64,
        #[arg(long)]
        r_max: Option<f64>,
        /// CSV of u / r^alpha_u and v / r^alpha_v over the last decade
        #[arg(long, requires = "r_max")]
        ratios_out: Option<PathBuf>,
    },
    /// Classify and integrate every tuple of a sweep specification
    Sweep {
        spec: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, env = "KHESS_JOBS")]
        jobs: Option<usize>,
    },
    /// Run a named property suite
    Verify {
        /// One of: identities, singular, picard-oracle, lemma-bounds, stability-sweep, uniqueness
        suite: String,
    },
}

#[derive(Subcommand)]
enum DynCommand {
    Equilibrium {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    Stability {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Flow from (X_inf, scale * Y_inf, Z_inf, W_inf)
    Flow {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, default_value_t = 0.5)]
        start_scale: f64,
        #[arg(long, default_value_t = 200.0)]
        t_end: f64,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// CSV destination; without it the CSV goes to stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Bad flags or inputs; exit code 2.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

/// A comparison came out false; exit code 1.
#[derive(Debug)]
struct Failed(String);

impl std::fmt::Display for Failed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Failed {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

impl ConfigArgs {
    fn resolve(&self) -> anyhow::Result<ExponentConfig> {
        if let Some(path) = &self.config {
            return Ok(kio::read_config(path)?);
        }
        let vals = [
            ("N", self.n),
            ("k", self.k),
            ("m", self.m),
            ("p", self.p),
            ("q", self.q),
            ("s", self.s),
        ];
        let missing: Vec<&str> = vals
            .iter()
            .filter(|(_, v)| v.is_none())
            .map(|(n, _)| *n)
            .collect();
        if !missing.is_empty() {
            return Err(usage(format!(
                "missing --{} (or pass --config)",
                missing.join(", --")
            )));
        }
        let [n, k, m, p, q, s] = vals.map(|(_, v)| v.unwrap());
        Ok(khessian::validate(n, k, m, p, q, s)?)
    }
}

fn print_json(value: Value) -> anyhow::Result<()> {
    println!("{}", kio::to_json(&value)?);
    Ok(())
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn require_positive(name: &str, x: f64) -> anyhow::Result<()> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(usage(format!(
            "--{name} must be positive and finite, got {x}"
        )));
    }
    Ok(())
}

fn cmd_classify(cfg: &ExponentConfig) -> anyhow::Result<()> {
    let regime = classify(cfg);
    let mut out = serde_json::to_value(cfg.derived())?;
    let obj = out
        .as_object_mut()
        .expect("derived constants serialize to an object");
    obj.insert("config".into(), serde_json::to_value(cfg)?);
    obj.insert("regime".into(), Value::String(regime.tag.to_string()));
    obj.insert("witness".into(), serde_json::to_value(&regime.witness)?);
    print_json(out)
}

#[allow(clippy::too_many_arguments)]
fn cmd_solve(
    cfg: &ExponentConfig,
    a: f64,
    b: f64,
    r_max: f64,
    out: &Path,
    rtol: f64,
    atol: f64,
    threshold: f64,
) -> anyhow::Result<()> {
    for (name, x) in [("a", a), ("b", b), ("r-max", r_max), ("rtol", rtol)] {
        require_positive(name, x)?;
    }
    if atol.is_nan() || atol < 0.0 || threshold.is_nan() || threshold <= 0.0 {
        return Err(usage(
            "--atol must be non-negative and --blowup-threshold positive",
        ));
    }
    let opts = IntegrateOptions {
        rtol,
        atol,
        blowup_threshold: threshold,
        ..Default::default()
    };
    let traj = integrate(cfg, a, b, r_max, &opts)?;
    kio::write_trajectory_csv(create(out)?, &traj)?;
    let violations = check_estimates(cfg, &traj);
    let blowup = match traj.terminal {
        Terminal::BlowupDetected { .. } => estimate_blowup_rate(cfg, &traj).ok(),
        _ => None,
    };
    let summary = json!({
        "config": cfg,
        "a": a,
        "b": b,
        "regime": classify(cfg).tag.as_str(),
        "terminal": traj.terminal.name(),
        "r_end": traj.last().r,
        "samples": traj.samples.len(),
        "steps_accepted": traj.steps_accepted,
        "steps_rejected": traj.steps_rejected,
        "startup_rel_error": traj.startup_rel_error,
        "violations": violations.len(),
        "first_violation": violations.first(),
        "blowup": blowup,
    });
    print_json(summary)?;
    match traj.terminal {
        Terminal::StepUnderflow | Terminal::StepLimit | Terminal::Overflow => {
            bail!("integration stopped early: {}", traj.terminal.name())
        }
        _ if !violations.is_empty() => bail!("{} a-priori bound violations", violations.len()),
        _ => Ok(()),
    }
}

fn cmd_dynamics(what: &DynCommand) -> anyhow::Result<()> {
    match what {
        DynCommand::Equilibrium { cfg } => {
            let cfg = cfg.resolve()?;
            let eq = dynamics::equilibrium(&cfg)?;
            let boundary = dynamics::boundary_equilibria(&cfg)?;
            print_json(json!({ "equilibrium": eq, "boundary": boundary }))
        }
        DynCommand::Stability { cfg } => {
            print_json(serde_json::to_value(dynamics::stability(&cfg.resolve()?)?)?)
        }
        DynCommand::Flow {
            cfg,
            start_scale,
            t_end,
            tol,
            out,
        } => {
            let cfg = cfg.resolve()?;
            require_positive("start-scale", *start_scale)?;
            require_positive("t-end", *t_end)?;
            require_positive("tol", *tol)?;
            let eq = dynamics::equilibrium(&cfg)?;
            let traj = dynamics::flow_integrate(
                &cfg,
                &dynamics::scaled_start(&eq, *start_scale),
                *t_end,
                *tol,
            );
            let last = *traj.last().expect("flow keeps its start point");
            let distance = [last.y - eq.y_inf, last.z - eq.z_inf, last.w - eq.w_inf]
                .iter()
                .fold(0.0f64, |m, d| m.max(d.abs()));
            match out {
                Some(path) => {
                    kio::write_dyn_csv(create(path)?, &traj)?;
                    print_json(
                        json!({ "final": last, "equilibrium": eq, "max_distance": distance }),
                    )
                }
                None => Ok(kio::write_dyn_csv(io::stdout().lock(), &traj)?),
            }
        }
    }
}

fn cmd_picard(
    cfg: &ExponentConfig,
    a: f64,
    b: f64,
    rho: f64,
    intervals: usize,
    out: Option<&Path>,
) -> anyhow::Result<()> {
    require_positive("a", a)?;
    require_positive("b", b)?;
    if !(rho >= 0.0 && rho.is_finite()) || intervals == 0 {
        return Err(usage("--rho must be non-negative and --intervals positive"));
    }
    let opts = picard::PicardOptions {
        intervals,
        ..Default::default()
    };
    let sol = picard::picard_solve_auto(cfg, a, b, rho, &opts)?;
    match out {
        Some(path) => {
            kio::write_picard_csv(create(path)?, &sol.pair)?;
            print_json(json!({
                "rho": sol.pair.rho(),
                "iterations": sol.iterations,
                "last_change": sol.last_change,
            }))
        }
        None => Ok(kio::write_picard_csv(io::stdout().lock(), &sol.pair)?),
    }
}

fn cmd_asymptotics(
    cfg: &ExponentConfig,
    a: f64,
    b: f64,
    r_max: Option<f64>,
    ratios_out: Option<&Path>,
) -> anyhow::Result<()> {
    let profile = asymptotics::profile(cfg)?;
    let Some(r_max) = r_max else {
        return print_json(serde_json::to_value(profile)?);
    };
    require_positive("r-max", r_max)?;
    let opts = IntegrateOptions {
        blowup_threshold: f64::INFINITY,
        ..Default::default()
    };
    let traj = integrate(cfg, a, b, r_max, &opts)?;
    let report = asymptotics::convergence_report(cfg, &traj)?;
    if let Some(path) = ratios_out {
        kio::write_ratio_csv(create(path)?, &report)?;
    }
    let mut summary = serde_json::to_value(&report)?;
    summary
        .as_object_mut()
        .expect("report is an object")
        .remove("ratios");
    print_json(summary)
}

fn cmd_sweep(spec_path: &Path, out: Option<&Path>, jobs: Option<usize>) -> anyhow::Result<()> {
    let text = std::fs::read_to_string(spec_path)
        .with_context(|| format!("cannot read {}", spec_path.display()))?;
    let spec = sweep::SweepSpec::from_json(&text)?;
    let jobs = sweep::resolve_jobs(jobs, &spec);
    let outcome = sweep::run_sweep(&spec, jobs)?;
    match out {
        Some(path) => sweep::write_sweep_csv(create(path)?, &outcome.rows)?,
        None => sweep::write_sweep_csv(io::stdout().lock(), &outcome.rows)?,
    }
    eprintln!(
        "{} tuples, {} rejected, {} disagreements, {} workers",
        outcome.rows.len(),
        outcome.rows.iter().filter(|r| r.rejected.is_some()).count(),
        outcome.disagreements,
        jobs
    );
    if outcome.disagreements > 0 {
        return Err(Failed(format!(
            "{} predicted/observed disagreements",
            outcome.disagreements
        ))
        .into());
    }
    Ok(())
}

fn cmd_verify(suite: &str) -> anyhow::Result<()> {
    let Some(result) = verify::run_suite(suite) else {
        return Err(usage(format!(
            "unknown suite {suite:?}; expected one of {}",
            verify::SUITES.join(", ")
        )));
    };
    let report = result?;
    print_json(serde_json::to_value(&report)?)?;
    if !report.passed() {
        return Err(Failed(format!(
            "{}: {} of {} checks failed",
            suite, report.failures, report.checks
        ))
        .into());
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Classify { cfg } => cmd_classify(&cfg.resolve()?),
        Command::Solve {
            cfg,
            a,
            b,
            r_max,
            out,
            rtol,
            atol,
            blowup_threshold,
        } => cmd_solve(
            &cfg.resolve()?,
            a,
            b,
            r_max,
            &out,
            rtol,
            atol,
            blowup_threshold,
        ),
        Command::Dynamics { what } => cmd_dynamics(&what),
        Command::Picard {
            cfg,
            a,
            b,
            rho,
            intervals,
            out,
        } => cmd_picard(&cfg.resolve()?, a, b, rho, intervals, out.as_deref()),
        Command::Asymptotics {
            cfg,
            a,
            b,
            r_max,
            ratios_out,
        } => cmd_asymptotics(&cfg.resolve()?, a, b, r_max, ratios_out.as_deref()),
        Command::Sweep { spec, out, jobs } => cmd_sweep(&spec, out.as_deref(), jobs),
        Command::Verify { suite } => cmd_verify(&suite),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.is::<Usage>() {
        2
    } else if err.is::<Failed>() {
        1
    } else if let Some(e) = err.downcast_ref::<khessian::Error>() {
        if e.is_usage() {
            2
        } else {
            3
        }
    } else {
        3
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => {
            let _ = io::stdout().flush();
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
