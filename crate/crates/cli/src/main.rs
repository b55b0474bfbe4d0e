//! `erw`: parameters, classification, sweeps, simulation and verification
//! suites for excited random walks with Markovian cookie stacks.

mod config;

use std::io::Write;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use config::{Format, GlobalFlags, RunConfig};
use erw_core::env_model::{build_example, CookieSystem, ExampleFamily, FamilyKind};
use erw_core::parameters::{coupled_delta, derive, identity_suite};
use erw_core::regimes::{classify_system, fmt_float, phase_sweep, sweep_csv, AxisSpec};
use erw_core::rng::substream;
use erw_core::simulators::blp::{simulate_backward_blp, simulate_forward_blp, BlpConfig, BlpTrajectory};
use erw_core::simulators::coupling::{simulate_coupled_blp, CoupledConfig, CoupledModel};
use erw_core::simulators::stack::StackModel;
use erw_core::simulators::walk::{simulate_walk, WalkConfig};
use erw_core::suites::{default_model, run_suite, SuiteOptions, SUITES};
use erw_core::{Error, Result};

#[derive(Parser)]
#[command(name = "erw", version, about = "Excited random walks with Markovian cookie stacks")]
struct Cli {
    #[command(flatten)]
    global: GlobalFlags,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form parameters and identity residuals.
    Params,
    /// Criticality, transience, speed and limit-law regime.
    Classify,
    /// Regime over a two-parameter grid of a family (CSV).
    Sweep {
        /// `lo:hi:count`, inclusive.
        #[arg(long, default_value = "0.01:1:200")]
        axis1: String,
        #[arg(long, default_value = "0.01:0.99:200")]
        axis2: String,
    },
    /// Simulate walks or branching-like processes.
    Simulate {
        #[arg(value_enum)]
        target: Target,
        /// Initial value of the process.
        #[arg(long)]
        y0: Option<u64>,
        /// Backward process from 0: record this many regeneration pairs.
        #[arg(long)]
        n_regen: Option<usize>,
        /// Comma-separated levels whose hitting times are recorded.
        #[arg(long, value_delimiter = ',')]
        targets: Vec<u64>,
        /// Keep every `stride`-th walk position.
        #[arg(long)]
        stride: Option<u64>,
        /// Keep full process trajectories in JSON output.
        #[arg(long)]
        record: bool,
        /// Coupled: dominating strengths, `/`-separated.
        #[arg(long)]
        p1: Option<String>,
        /// Coupled: switch parameter.
        #[arg(long)]
        epsilon: Option<f64>,
        /// Stop a path once a value exceeds this (reported as censored).
        #[arg(long, default_value_t = 100_000)]
        value_cap: u64,
    },
    /// Run a verification suite; exit 1 if it fails.
    Verify {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(SUITES))]
        suite: String,
        /// Level `n` for suites that have one.
        #[arg(long)]
        level: Option<u64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Target {
    Walk,
    Ublp,
    Vblp,
    Coupled,
}

enum Outcome {
    Ok,
    SuiteFailed,
}

fn load_model(cfg: &RunConfig) -> Result<Option<CookieSystem>> {
    match (&cfg.model, &cfg.family) {
        (Some(_), Some(_)) => Err(Error::InvalidArgument("give either --model or --family, not both".into())),
        (Some(path), None) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::InvalidArgument(format!("cannot read {}: {e}", path.display())))?;
            CookieSystem::from_json_str(&text).map(Some)
        }
        (None, Some(spec)) => build_example(&ExampleFamily::from_str(spec)?).map(Some),
        (None, None) => Ok(None),
    }
}

fn require_model(cfg: &RunConfig) -> Result<CookieSystem> {
    load_model(cfg)?.ok_or_else(|| Error::InvalidArgument("a model is required (--model or --family)".into()))
}

fn emit(cfg: &RunConfig, body: &str) -> Result<()> {
    match &cfg.out {
        Some(path) => std::fs::write(path, body)
            .map_err(|e| Error::InvalidArgument(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(body.as_bytes()).map_err(|e| Error::InvalidArgument(e.to_string()))
        }
    }
}

fn emit_json(cfg: &RunConfig, command: &str, result: Value) -> Result<()> {
    let doc = json!({ "command": command, "config": cfg, "result": result });
    let mut s = serde_json::to_string_pretty(&doc).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    s.push('\n');
    emit(cfg, &s)
}

fn csv_header(cfg: &RunConfig, command: &str) -> String {
    let mut s = format!("# command={command}\n");
    for (k, v) in cfg.comments() {
        s.push_str(&format!("# {k}={v}\n"));
    }
    s
}

fn parse_axis(s: &str) -> Result<AxisSpec> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || Error::Parse(format!("axis {s:?}: expected lo:hi:count"));
    if parts.len() != 3 {
        return Err(bad());
    }
    Ok(AxisSpec {
        lo: parts[0].trim().parse().map_err(|_| bad())?,
        hi: parts[1].trim().parse().map_err(|_| bad())?,
        count: parts[2].trim().parse().map_err(|_| bad())?,
    })
}

fn cmd_params(cfg: &RunConfig) -> Result<Outcome> {
    let sys = require_model(cfg)?;
    let params = derive(&sys)?;
    let identities = identity_suite(&sys, cfg.tol_critical)?;
    emit_json(cfg, "params", json!({ "model": sys, "params": params, "identities": identities }))?;
    Ok(Outcome::Ok)
}

fn cmd_classify(cfg: &RunConfig) -> Result<Outcome> {
    let sys = require_model(cfg)?;
    let (_, report) = classify_system(&sys, cfg.tol_critical, cfg.tol_boundary)?;
    emit_json(cfg, "classify", serde_json::to_value(&report).unwrap_or(Value::Null))?;
    Ok(Outcome::Ok)
}

fn cmd_sweep(cfg: &RunConfig, axis1: &str, axis2: &str) -> Result<Outcome> {
    let spec = cfg.family.as_deref().ok_or_else(|| Error::InvalidArgument("sweep needs --family <kind>".into()))?;
    // accept a full builder spec too; only its kind matters
    let kind = FamilyKind::from_str(spec.split(':').next().unwrap_or(spec))?;
    let (a1, a2) = (parse_axis(axis1)?, parse_axis(axis2)?);
    let rows = phase_sweep(kind, &a1, &a2, cfg.tol_critical, cfg.tol_boundary);
    let (n1, n2) = kind.axis_names();
    match cfg.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut comments = vec![("command".to_string(), "sweep".to_string())];
            comments.extend(cfg.comments());
            comments.push(("axis1".into(), format!("{n1}={axis1}")));
            comments.push(("axis2".into(), format!("{n2}={axis2}")));
            emit(cfg, &sweep_csv(&rows, &comments))?;
        }
        Format::Json => {
            let pts: Vec<Value> = rows
                .iter()
                .map(|r| match &r.outcome {
                    Ok(p) => json!({ n1: r.axis1, n2: r.axis2, "point": p }),
                    Err(e) => json!({ n1: r.axis1, n2: r.axis2, "error": e }),
                })
                .collect();
            emit_json(cfg, "sweep", Value::Array(pts))?;
        }
    }
    Ok(Outcome::Ok)
}

fn blp_summary(t: &BlpTrajectory, record: bool) -> Value {
    let mut v = json!({
        "lifetime": t.lifetime,
        "total_progeny": t.total_progeny,
        "progeny_censored": t.progeny_censored,
        "last_value": t.last_value,
        "capped": t.capped,
    });
    if !t.regen_pairs.is_empty() {
        v["regen_pairs"] = serde_json::to_value(&t.regen_pairs).unwrap_or(Value::Null);
    }
    if record {
        v["values"] = serde_json::to_value(&t.values).unwrap_or(Value::Null);
    }
    v
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    cfg: &RunConfig,
    target: Target,
    y0: Option<u64>,
    n_regen: Option<usize>,
    targets: &[u64],
    stride: Option<u64>,
    record: bool,
    p1: Option<&str>,
    epsilon: Option<f64>,
    value_cap: u64,
) -> Result<Outcome> {
    let sys = require_model(cfg)?;
    let paths = cfg.paths.unwrap_or(1);
    if paths == 0 {
        return Err(Error::InvalidArgument("--paths must be at least 1".into()));
    }
    let format = cfg.format.unwrap_or(Format::Json);
    let model = StackModel::new(&sys);
    let key = |i: usize| substream(cfg.seed, i as u64);
    let path_col = paths > 1;
    match target {
        Target::Walk => {
            let horizon = cfg.horizon.unwrap_or(10_000);
            let wc = WalkConfig {
                horizon,
                targets: targets.to_vec(),
                stride: stride.unwrap_or(1),
                ..Default::default()
            };
            let recs: Vec<_> = (0..paths).into_par_iter().map(|i| simulate_walk(&model, key(i), &wc)).collect();
            match format {
                Format::Json => {
                    let censored: Vec<Value> = targets
                        .iter()
                        .map(|&m| {
                            let c = recs.iter().filter(|r| r.hitting_time(m).is_none()).count();
                            json!({ "level": m, "censored_fraction": c as f64 / paths as f64 })
                        })
                        .collect();
                    let mean = recs.iter().map(|r| r.final_position as f64).sum::<f64>() / paths as f64;
                    emit_json(
                        cfg,
                        "simulate walk",
                        json!({ "aggregate": { "paths": paths, "mean_final_position": mean, "hitting": censored },
                                "records": recs }),
                    )?;
                }
                Format::Csv => {
                    let mut s = csv_header(cfg, "simulate walk");
                    s.push_str(if path_col { "path,step,value\n" } else { "step,value\n" });
                    for (i, r) in recs.iter().enumerate() {
                        for (k, x) in &r.positions {
                            if path_col {
                                s.push_str(&format!("{i},{k},{x}\n"));
                            } else {
                                s.push_str(&format!("{k},{x}\n"));
                            }
                        }
                    }
                    emit(cfg, &s)?;
                }
            }
        }
        Target::Ublp | Target::Vblp => {
            let forward = target == Target::Ublp;
            let bc = BlpConfig {
                y0: y0.unwrap_or(if forward { 1 } else { 0 }),
                horizon: cfg.horizon.unwrap_or(if n_regen.is_some() { u64::MAX } else { 1_000_000 }),
                value_cap,
                record: record || (format == Format::Csv && n_regen.is_none()),
                n_regenerations: if forward { 0 } else { n_regen.unwrap_or(0) },
                ..Default::default()
            };
            if forward && bc.y0 == 0 {
                return Err(Error::InvalidArgument("forward process needs --y0 >= 1".into()));
            }
            if n_regen.is_some() && (forward || bc.y0 != 0) {
                return Err(Error::InvalidArgument("--n-regen applies to vblp started at 0".into()));
            }
            let trajs: Vec<BlpTrajectory> = (0..paths)
                .into_par_iter()
                .map(|i| if forward { simulate_forward_blp(&model, key(i), &bc) } else { simulate_backward_blp(&model, key(i), &bc) })
                .collect();
            let name = if forward { "simulate ublp" } else { "simulate vblp" };
            match format {
                Format::Json => {
                    let censored = trajs.iter().filter(|t| t.lifetime.is_censored()).count();
                    let list: Vec<Value> = trajs.iter().map(|t| blp_summary(t, record)).collect();
                    emit_json(
                        cfg,
                        name,
                        json!({ "aggregate": { "paths": paths, "censored_fraction": censored as f64 / paths as f64 },
                                "trajectories": list }),
                    )?;
                }
                Format::Csv => {
                    let mut s = csv_header(cfg, name);
                    if n_regen.is_some() {
                        s.push_str(if path_col { "path,k,duration,progeny\n" } else { "k,duration,progeny\n" });
                        for (i, t) in trajs.iter().enumerate() {
                            for (k, p) in t.regen_pairs.iter().enumerate() {
                                let row = format!("{},{},{}", k + 1, p.duration, p.progeny);
                                s.push_str(&if path_col { format!("{i},{row}\n") } else { format!("{row}\n") });
                            }
                        }
                    } else {
                        s.push_str(if path_col { "path,step,value\n" } else { "step,value\n" });
                        for (i, t) in trajs.iter().enumerate() {
                            for (k, v) in t.values.iter().flatten().enumerate() {
                                s.push_str(&if path_col { format!("{i},{k},{v}\n") } else { format!("{k},{v}\n") });
                            }
                        }
                    }
                    emit(cfg, &s)?;
                }
            }
        }
        Target::Coupled => {
            let p1: Vec<f64> = p1
                .ok_or_else(|| Error::InvalidArgument("coupled needs --p1".into()))?
                .split('/')
                .map(|x| x.trim().parse().map_err(|_| Error::Parse(format!("bad strength {x:?}"))))
                .collect::<Result<_>>()?;
            let eps = epsilon.ok_or_else(|| Error::InvalidArgument("coupled needs --epsilon".into()))?;
            let c = coupled_delta(&p1, sys.p(), &sys, eps, cfg.tol_critical)?;
            let cm = CoupledModel::new(&c);
            let cc = CoupledConfig { y0: y0.unwrap_or(1), horizon: cfg.horizon.unwrap_or(1_000), value_cap };
            let runs: Vec<_> = (0..paths).into_par_iter().map(|i| simulate_coupled_blp(&cm, key(i), &cc)).collect();
            let fv: usize = runs.iter().map(|r| r.forward_violations).sum();
            let bv: usize = runs.iter().map(|r| r.backward_violations).sum();
            match format {
                Format::Json => emit_json(
                    cfg,
                    "simulate coupled",
                    json!({ "delta_hat": c.delta_hat, "delta_hat_series": c.delta_hat_series,
                            "aggregate": { "paths": paths, "forward_violations": fv, "backward_violations": bv },
                            "paths": runs }),
                )?,
                Format::Csv => {
                    let mut s = csv_header(cfg, "simulate coupled");
                    s.push_str(if path_col { "path,step,u,u_hat,v,v_hat\n" } else { "step,u,u_hat,v,v_hat\n" });
                    for (i, r) in runs.iter().enumerate() {
                        let len = r.u.len().max(r.v.len());
                        for k in 0..len {
                            let cell = |x: &Vec<u64>| x.get(k).map_or(String::new(), |v| v.to_string());
                            let row = format!("{k},{},{},{},{}", cell(&r.u), cell(&r.u_hat), cell(&r.v), cell(&r.v_hat));
                            s.push_str(&if path_col { format!("{i},{row}\n") } else { format!("{row}\n") });
                        }
                    }
                    emit(cfg, &s)?;
                }
            }
            if fv + bv > 0 {
                return Err(Error::CouplingViolation(format!("forward {fv}, backward {bv}")));
            }
        }
    }
    Ok(Outcome::Ok)
}

fn cmd_verify(cfg: &RunConfig, suite: &str, level: Option<u64>) -> Result<Outcome> {
    let sys = match load_model(cfg)? {
        Some(s) => Some(s),
        None => default_model(suite),
    };
    let opts = SuiteOptions {
        seed: cfg.seed,
        paths: cfg.paths,
        horizon: cfg.horizon,
        level,
        tol_critical: cfg.tol_critical,
        tol_boundary: cfg.tol_boundary,
    };
    let report = run_suite(suite, sys.as_ref(), &opts)?;
    match cfg.format.unwrap_or(Format::Json) {
        Format::Json => emit_json(cfg, "verify", serde_json::to_value(&report).unwrap_or(Value::Null))?,
        Format::Csv => {
            let mut s = csv_header(cfg, "verify");
            s.push_str("name,estimate,stderr,method,n_samples,target,tolerance,pass\n");
            let opt = |x: Option<f64>| x.map_or(String::new(), fmt_float);
            for c in &report.checks {
                s.push_str(&format!(
                    "{},{},{},{},{},{},{},{}\n",
                    c.name,
                    fmt_float(c.estimate),
                    fmt_float(c.stderr),
                    c.method,
                    c.n_samples,
                    opt(c.target),
                    opt(c.tolerance),
                    c.pass
                ));
            }
            emit(cfg, &s)?;
        }
    }
    Ok(if report.pass { Outcome::Ok } else { Outcome::SuiteFailed })
}

fn run(cli: &Cli) -> Result<Outcome> {
    let cfg = RunConfig::resolve(&cli.global)?;
    if let Some(n) = cfg.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    }
    match &cli.command {
        Command::Params => cmd_params(&cfg),
        Command::Classify => cmd_classify(&cfg),
        Command::Sweep { axis1, axis2 } => cmd_sweep(&cfg, axis1, axis2),
        Command::Simulate { target, y0, n_regen, targets, stride, record, p1, epsilon, value_cap } => {
            cmd_simulate(&cfg, *target, *y0, *n_regen, targets, *stride, *record, p1.as_deref(), *epsilon, *value_cap)
        }
        Command::Verify { suite, level } => cmd_verify(&cfg, suite, *level),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::SuiteFailed) => ExitCode::from(1),
        Err(e @ Error::CouplingViolation(_)) => {
            eprintln!("{e}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(2)
        }
    }
}
