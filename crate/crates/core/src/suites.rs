//! Named verification suites, each a list of estimator reports.

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::env_model::{build_example, CookieSystem, ExampleFamily};
use crate::error::{Error, Result};
use crate::parameters::{derive, identity_suite, random_critical_system, IDENTITY_TOL};
use crate::regimes::classify_system;
use crate::rng::{substream, CounterRng};
use crate::simulators::bijection::{verify_bijections, BijectionOptions};
use crate::simulators::blp::{simulate_backward_blp, simulate_forward_blp, BlpConfig};
use crate::simulators::stack::StackModel;
use crate::statistics::excursion::excursion_delta;
use crate::statistics::limits::{limit_law_check, LimitOptions};
use crate::statistics::moments::blp_increment_moments;
use crate::statistics::report::EstimateReport;
use crate::statistics::speed::speed_estimates;
use crate::statistics::tail::{tail_exponent, Observation, TailMethod};

pub const SUITES: [&str; 7] = ["identities", "bijections", "moments", "tails", "speed", "limits", "excursion_delta"];

pub const TAIL_TOLERANCE: f64 = 0.15;
pub const SPEED_RELATIVE: f64 = 0.05;
pub const SPEED_ZERO: f64 = 0.01;

#[derive(Debug, Clone, Default, Serialize)]
pub struct SuiteOptions {
    pub seed: u64,
    /// Overrides the suite's sample count.
    pub paths: Option<usize>,
    pub horizon: Option<u64>,
    /// Level `n` where the suite has one.
    pub level: Option<u64>,
    pub tol_critical: f64,
    pub tol_boundary: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub pass: bool,
    pub checks: Vec<EstimateReport>,
    pub details: Value,
}

fn finish(suite: &str, checks: Vec<EstimateReport>, details: Value) -> SuiteReport {
    SuiteReport { suite: suite.into(), pass: !checks.is_empty() && checks.iter().all(|c| c.pass), checks, details }
}

fn need<'a>(sys: Option<&'a CookieSystem>, suite: &str) -> Result<&'a CookieSystem> {
    sys.ok_or_else(|| Error::InvalidArgument(format!("suite {suite} needs a model (--model or --family)")))
}

/// Run suite `name`; `sys` is optional only for `identities`.
pub fn run_suite(name: &str, sys: Option<&CookieSystem>, o: &SuiteOptions) -> Result<SuiteReport> {
    match name {
        "identities" => identities(sys, o),
        "bijections" => bijections(need(sys, name)?, o),
        "moments" => moments(need(sys, name)?, o),
        "tails" => tails(need(sys, name)?, o),
        "speed" => speed(need(sys, name)?, o),
        "limits" => limits(need(sys, name)?, o),
        "excursion_delta" => excursion(need(sys, name)?, o),
        other => Err(Error::InvalidArgument(format!("unknown suite {other:?}; expected one of {SUITES:?}"))),
    }
}

fn identities(sys: Option<&CookieSystem>, o: &SuiteOptions) -> Result<SuiteReport> {
    let systems: Vec<CookieSystem> = match sys {
        Some(s) => vec![s.clone()],
        None => {
            let mut rng = CounterRng::new(o.seed);
            (0..o.paths.unwrap_or(50)).map(|i| random_critical_system(&mut rng, 2 + i % 5)).collect()
        }
    };
    let mut checks = Vec::new();
    let mut reports = Vec::new();
    for s in &systems {
        let rep = identity_suite(s, o.tol_critical)?;
        let mut c = EstimateReport::new("max_identity_residual", "closed form", rep.max_residual(), 0.0, 1, o.seed)
            .below(IDENTITY_TOL);
        c.pass = rep.pass;
        checks.push(c);
        reports.push(rep);
    }
    Ok(finish("identities", checks, json!({ "systems": reports })))
}

fn bijections(sys: &CookieSystem, o: &SuiteOptions) -> Result<SuiteReport> {
    let d = BijectionOptions::default();
    let opts = BijectionOptions {
        level: o.level.unwrap_or(d.level),
        paths: o.paths.unwrap_or(d.paths),
        walk_horizon: o.horizon.unwrap_or(d.walk_horizon),
        ..d
    };
    let r = verify_bijections(sys, &opts, o.seed)?;
    let half = opts.significance / 2.0;
    let mut p_sum = EstimateReport::new("ks_sum_pvalue", "two-sample KS", r.p_sum, 0.0, r.hits, o.seed);
    p_sum.pass = r.p_sum > half;
    p_sum.tolerance = Some(half);
    let mut p_max = EstimateReport::new("ks_max_pvalue", "two-sample KS", r.p_max, 0.0, r.hits, o.seed);
    p_max.pass = r.p_max > half;
    p_max.tolerance = Some(half);
    let checks = vec![
        EstimateReport::new("hitting_identity_violations", "pathwise", r.hitting_identity_violations as f64, 0.0, r.hits, o.seed)
            .below(0.5),
        EstimateReport::new("domination_violations", "pathwise", r.domination_violations as f64, 0.0, r.coupled_walks, o.seed)
            .below(0.5),
        EstimateReport::new("censored_walks", "pathwise", r.censored_walks as f64, 0.0, opts.paths, o.seed).below(0.5),
        p_sum,
        p_max,
    ];
    Ok(finish("bijections", checks, serde_json::to_value(&r).unwrap_or(Value::Null)))
}

fn moments(sys: &CookieSystem, o: &SuiteOptions) -> Result<SuiteReport> {
    let levels = match o.level {
        Some(n) => vec![n],
        None => vec![50, 100, 200],
    };
    let rows = blp_increment_moments(sys, &levels, o.paths.unwrap_or(100_000), o.seed)?;
    let mut checks = Vec::new();
    for r in &rows {
        let tag = format!("{:?}_n{}", r.direction, r.level).to_lowercase();
        checks.push(
            EstimateReport::new(&format!("{tag}_mean"), "Monte Carlo", r.mean, r.mean_se, r.paths, o.seed)
                .against(r.target_mean, 3.0 * r.mean_se),
        );
        checks.push(
            EstimateReport::new(&format!("{tag}_var_over_n"), "Monte Carlo", r.var_over_n, r.var_se, r.paths, o.seed)
                .against(r.target_var, r.var_tolerance),
        );
    }
    Ok(finish("moments", checks, serde_json::to_value(&rows).unwrap_or(Value::Null)))
}

fn tails(sys: &CookieSystem, o: &SuiteOptions) -> Result<SuiteReport> {
    let delta = derive(sys)?.delta;
    let paths = o.paths.unwrap_or(100_000);
    let horizon = o.horizon.unwrap_or(100_000);
    let m = StackModel::new(sys);
    let top = 2f64.powi((horizon as f64).log2().floor() as i32);
    let w_life = (16.0, top);
    let w_prog = (256.0, top * top / 64.0);
    let mut checks = Vec::new();
    let mut skipped = Vec::new();
    if delta > 0.0 {
        let cfg = BlpConfig { y0: 0, horizon, ..Default::default() };
        let vs: Vec<_> = (0..paths as u64)
            .into_par_iter()
            .map(|i| simulate_backward_blp(&m, substream(substream(o.seed, 0), i), &cfg))
            .collect();
        let life: Vec<Observation> = vs.iter().map(|t| Observation::lifetime(t.lifetime)).collect();
        let prog: Vec<Observation> =
            vs.iter().map(|t| Observation { value: t.total_progeny as f64, censored: t.progeny_censored }).collect();
        let e = tail_exponent(&life, TailMethod::SurvivalRegression, w_life, substream(o.seed, 2))?;
        checks.push(e.report("backward_lifetime_exponent", o.seed, delta, TAIL_TOLERANCE));
        let e = tail_exponent(&prog, TailMethod::SurvivalRegression, w_prog, substream(o.seed, 3))?;
        checks.push(e.report("backward_progeny_exponent", o.seed, delta / 2.0, TAIL_TOLERANCE));
    } else {
        skipped.push("backward: delta <= 0, positive survival");
    }
    if delta < 1.0 {
        let cfg = BlpConfig { y0: 1, horizon, ..Default::default() };
        let us: Vec<Observation> = (0..paths as u64)
            .into_par_iter()
            .map(|i| Observation::lifetime(simulate_forward_blp(&m, substream(substream(o.seed, 1), i), &cfg).lifetime))
            .collect();
        let e = tail_exponent(&us, TailMethod::SurvivalRegression, w_life, substream(o.seed, 4))?;
        checks.push(e.report("forward_lifetime_exponent", o.seed, 1.0 - delta, TAIL_TOLERANCE));
    } else {
        skipped.push("forward: delta >= 1, positive survival");
    }
    Ok(finish("tails", checks, json!({ "delta": delta, "skipped": skipped })))
}

fn speed(sys: &CookieSystem, o: &SuiteOptions) -> Result<SuiteReport> {
    let s = speed_estimates(sys, o.horizon.unwrap_or(100_000), o.paths.unwrap_or(1_000), 1_000_000, o.seed)?;
    let check = if s.non_ballistic {
        EstimateReport::new("v_direct", "X_horizon / horizon", s.v_direct, s.se_direct, s.paths, o.seed).against(0.0, SPEED_ZERO)
    } else {
        EstimateReport::new("relative_speed_gap", "direct vs regeneration", s.relative_difference, 0.0, s.paths, o.seed)
            .below(SPEED_RELATIVE)
    };
    Ok(finish("speed", vec![check], serde_json::to_value(&s).unwrap_or(Value::Null)))
}

fn limits(sys: &CookieSystem, o: &SuiteOptions) -> Result<SuiteReport> {
    let (_, reg) = classify_system(sys, o.tol_critical, o.tol_boundary)?;
    let r = limit_law_check(sys, &reg, o.level.unwrap_or(10_000), o.paths.unwrap_or(2_000), o.seed, &LimitOptions::default())?;
    Ok(finish("limits", vec![r.report(o.seed)], serde_json::to_value(&r).unwrap_or(Value::Null)))
}

fn excursion(sys: &CookieSystem, o: &SuiteOptions) -> Result<SuiteReport> {
    let target = derive(sys)?.delta;
    let e = excursion_delta(sys, o.level.unwrap_or(1_000), o.paths.unwrap_or(100_000), o.seed)?;
    Ok(finish("excursion_delta", vec![e.report(o.seed, target, 3.0)], serde_json::to_value(&e).unwrap_or(Value::Null)))
}

/// The model a suite uses when none is given.
pub fn default_model(suite: &str) -> Option<CookieSystem> {
    let fam = match suite {
        "bijections" | "speed" | "limits" => ExampleFamily::Geometric { alpha: 0.1, p1: 0.9 },
        "tails" => ExampleFamily::Geometric { alpha: 0.2, p1: 0.55 },
        "moments" | "excursion_delta" => ExampleFamily::Geometric { alpha: 0.5, p1: 0.75 },
        _ => return None,
    };
    build_example(&fam).ok()
}
