//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//!
//! Run a subset with `cargo test -p erw-core --test acceptance -- 3 7`.

use std::time::Instant;

use erw_core::env_model::{build_example, CookieSystem, ExampleFamily, DEFAULT_TOL_CRITICAL};
use erw_core::parameters::{coupled_delta, deltas, derive, identity_suite, random_critical_system, COUPLED_TOL};
use erw_core::regimes::{classify_system, DEFAULT_TOL_BOUNDARY};
use erw_core::rng::{substream, CounterRng, DEFAULT_SEED};
use erw_core::simulators::bijection::{verify_bijections, BijectionOptions, BijectionReport};
use erw_core::simulators::blp::{simulate_backward_blp, simulate_forward_blp, BlpConfig};
use erw_core::simulators::coupling::{simulate_coupled_blp, walk_forward_coupling, CoupledConfig, CoupledModel};
use erw_core::simulators::stack::StackModel;
use erw_core::statistics::excursion::excursion_delta;
use erw_core::statistics::limits::{limit_law_check, LimitOptions};
use erw_core::statistics::moments::blp_increment_moments;
use erw_core::statistics::speed::{direct_speeds, speed_estimates};
use erw_core::statistics::report::mean_se;
use erw_core::statistics::tail::{tail_exponent, Observation, TailMethod};
use rayon::prelude::*;

const TOL_CLOSED_FORM: f64 = 1e-9;
const TOL_IDENTITY: f64 = 1e-9;
const TOL_COUPLED: f64 = 1e-8;
const KS_BIJECTION: f64 = 0.02;
const MOMENT_SE: f64 = 3.0;
const TAIL_TOL: f64 = 0.15;
const SURVIVAL_LOW: f64 = 0.01;
const SURVIVAL_HIGH: f64 = 0.05;
const SPEED_REL: f64 = 0.05;
const SPEED_ZERO: f64 = 0.01;
const KS_GAUSSIAN: f64 = 0.05;
const KS_STABLE: f64 = 0.07;
const EXCURSION_SE: f64 = 3.0;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn geometric(alpha: f64, p1: f64) -> CookieSystem {
    build_example(&ExampleFamily::Geometric { alpha, p1 }).unwrap()
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn seed(id: u64) -> u64 {
    substream(DEFAULT_SEED, id)
}

fn c1() -> Outcome {
    let mut worst: f64 = 0.0;
    for alpha in linspace(0.05, 1.0, 20) {
        for p1 in linspace(0.05, 0.95, 20) {
            let (d, dt) = deltas(&geometric(alpha, p1)).unwrap();
            let want = (2.0 * p1 - 1.0) / alpha;
            worst = worst.max((d - want).abs()).max((dt + want).abs());
        }
    }
    outcome(worst <= TOL_CLOSED_FORM, format!("400 points, max error {worst:.2e} (tol {TOL_CLOSED_FORM:.0e})"))
}

fn two_type_formula(a: f64, p: f64) -> f64 {
    (2.0 * p - 1.0) * ((2.0 * a - 1.0) * p - a) / (4.0 * (2.0 * a - 1.0) * (p - 1.0) * p + a - 1.0)
}

fn c2() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut worst_periodic: f64 = 0.0;
    let mut peak: f64 = f64::NEG_INFINITY;
    let ps = linspace(0.02, 0.98, 50);
    for alpha in linspace(0.002, 1.0, 50) {
        for &p in &ps {
            let sys = build_example(&ExampleFamily::TwoType { alpha, p }).unwrap();
            let d = deltas(&sys).unwrap().0;
            worst = worst.max((d - two_type_formula(alpha, p)).abs());
            if alpha == 1.0 {
                worst_periodic = worst_periodic.max((d - (2.0 * p - 1.0) / (4.0 * p)).abs());
            }
            if alpha == 0.002 {
                peak = peak.max(d);
            }
        }
    }
    let pass = worst <= TOL_CLOSED_FORM && worst_periodic <= TOL_CLOSED_FORM && peak > 4.0;
    outcome(
        pass,
        format!(
            "2500 points, max error {worst:.2e}, alpha=1 error {worst_periodic:.2e} (tol {TOL_CLOSED_FORM:.0e}); \
             max delta at alpha=0.002 is {peak:.4} (> 4)"
        ),
    )
}

fn c3() -> Outcome {
    const NAMES: [&str; 6] = ["pi_Pi_stationary", "pi_g_lambda", "pi_r_zero", "r_plus_r_tilde", "nu_equals_nu_tilde", "delta_sum"];
    let mut rng = CounterRng::new(seed(3));
    let mut worst: f64 = 0.0;
    let mut missing = 0;
    for i in 0..100 {
        let sys = random_critical_system(&mut rng, 2 + i % 5);
        let rep = identity_suite(&sys, DEFAULT_TOL_CRITICAL).unwrap();
        for name in NAMES {
            match rep.residual(name) {
                Some(r) => worst = worst.max(r),
                None => missing += 1,
            }
        }
    }
    outcome(
        worst <= TOL_IDENTITY && missing == 0,
        format!("100 systems, 6 identities, max residual {worst:.2e} (tol {TOL_IDENTITY:.0e}), {missing} skipped"),
    )
}

fn c4() -> Outcome {
    let mut rng = CounterRng::new(seed(4));
    let mut worst: f64 = 0.0;
    let mut worst_one: f64 = 0.0;
    let mut exact_one = true;
    let mut monotone = true;
    for i in 0..20 {
        let base = random_critical_system(&mut rng, 2 + i % 4);
        let p0 = base.p().to_vec();
        let p1: Vec<f64> = p0.iter().map(|&q| q + rng.uniform() * (0.97 - q)).collect();
        let eps = 10f64.powf(-3.0 * rng.uniform());
        let c = coupled_delta(&p1, &p0, &base, eps, DEFAULT_TOL_CRITICAL).unwrap();
        worst = worst.max(c.route_discrepancy());
        let one = coupled_delta(&p1, &p0, &base, 1.0, DEFAULT_TOL_CRITICAL).unwrap();
        let d0 = deltas(&base).unwrap().0;
        exact_one &= one.delta_hat_series == d0;
        worst_one = worst_one.max((one.delta_hat - d0).abs());
        let curve: Vec<f64> = (0..=12)
            .map(|k| coupled_delta(&p1, &p0, &base, 10f64.powf(-3.0 + 0.25 * k as f64), DEFAULT_TOL_CRITICAL).unwrap())
            .map(|c| c.delta_hat_series)
            .collect();
        monotone &= curve.windows(2).all(|w| w[1] < w[0]);
    }
    let pass = worst <= TOL_COUPLED && worst_one <= TOL_COUPLED && exact_one && monotone && COUPLED_TOL <= TOL_COUPLED;
    outcome(
        pass,
        format!(
            "20 instances, max relative route gap {worst:.2e} (tol {TOL_COUPLED:.0e}); eps=1 series exact: {exact_one}, \
             2N route gap {worst_one:.2e}; strictly decreasing in eps: {monotone}"
        ),
    )
}

fn bijection_run() -> BijectionReport {
    let opts = BijectionOptions {
        level: 200,
        paths: 10_000,
        walk_horizon: 100_000_000,
        coupling_returns: 3,
        coupling_horizon: 200,
        significance: 0.01,
    };
    verify_bijections(&geometric(0.1, 0.9), &opts, seed(5)).expect("pathwise coupling failed")
}

fn c5(bij: &BijectionReport) -> Outcome {
    // coupled pair on a two-type base
    let base = build_example(&ExampleFamily::TwoType { alpha: 0.3, p: 0.7 }).unwrap();
    let c = coupled_delta(&[0.75, 0.4], &[0.7, 0.3], &base, 0.2, DEFAULT_TOL_CRITICAL).unwrap();
    let cm = CoupledModel::new(&c);
    let cfg = CoupledConfig { y0: 5, horizon: 200, value_cap: 10_000 };
    let key = substream(seed(5), 10);
    let viol: Vec<(usize, usize)> = (0..10_000u64)
        .into_par_iter()
        .map(|i| {
            let p = simulate_coupled_blp(&cm, substream(key, i), &cfg);
            (p.forward_violations, p.backward_violations)
        })
        .collect();
    let (fv, bv) = viol.iter().fold((0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    // walk/forward coupling where returns are frequent
    let m = StackModel::new(&geometric(0.2, 0.55));
    let wkey = substream(seed(5), 11);
    let checks: Vec<_> = (0..10_000u64).into_par_iter().map(|i| walk_forward_coupling(&m, substream(wkey, i), 3, 20_000)).collect();
    let dom: usize = checks.iter().map(|c| c.domination_violations).sum();
    let eq: usize = checks.iter().map(|c| c.equality_violations).sum();
    let finite = checks.iter().filter(|c| c.gamma_finite).count();
    let pass = bij.hits == 10_000
        && bij.hitting_identity_violations == 0
        && bij.domination_violations == 0
        && bij.equality_violations == 0
        && fv == 0
        && bv == 0
        && dom == 0
        && eq == 0;
    outcome(
        pass,
        format!(
            "T_n identity: {} hits, {} violations; U>=E: {}+{} violations ({} + {} walks); \
             equality on gamma_n<inf: {} violations over {finite} walks; U>=U_hat: {fv}, V<=V_hat: {bv} over 10000 pairs",
            bij.hits,
            bij.hitting_identity_violations,
            bij.domination_violations,
            dom,
            bij.coupled_walks,
            checks.len(),
            eq
        ),
    )
}

fn c6(bij: &BijectionReport) -> Outcome {
    outcome(
        bij.ks_sum < KS_BIJECTION && bij.ks_max < KS_BIJECTION,
        format!(
            "n=200, {} walks vs 10000 paths: KS(sum) {:.4} (p {:.3}), KS(max) {:.4} (p {:.3}), threshold {KS_BIJECTION}",
            bij.hits, bij.ks_sum, bij.p_sum, bij.ks_max, bij.p_max
        ),
    )
}

fn c7() -> Outcome {
    let mut failed = Vec::new();
    let mut rows = 0;
    let mut max_z: f64 = 0.0;
    for (name, sys) in [
        ("geometric(0.5,0.75)", geometric(0.5, 0.75)),
        ("two-type(0.3,0.7)", build_example(&ExampleFamily::TwoType { alpha: 0.3, p: 0.7 }).unwrap()),
    ] {
        let res = blp_increment_moments(&sys, &[50, 100, 200], 100_000, seed(7)).unwrap();
        for r in res {
            rows += 1;
            let z = (r.mean - r.target_mean) / r.mean_se;
            max_z = max_z.max(z.abs());
            if !(r.mean_pass && r.var_pass) || z.abs() > MOMENT_SE {
                failed.push(format!(
                    "{name} {:?} n={}: mean z {z:.2}, Var/n {:.4} vs {:.4} (tol {:.4})",
                    r.direction, r.level, r.var_over_n, r.target_var, r.var_tolerance
                ));
            }
        }
    }
    let detail = if failed.is_empty() {
        format!("{rows} (instance, direction, level) rows, max |mean z| {max_z:.2} (< {MOMENT_SE}), all Var/n within max(3 s.e., 5/n)")
    } else {
        failed.join("; ")
    };
    outcome(failed.is_empty(), detail)
}

fn c8() -> Outcome {
    let sys = geometric(0.2, 0.55);
    let m = StackModel::new(&sys);
    let key = seed(8);
    let vcfg = BlpConfig { y0: 0, horizon: 100_000, ..Default::default() };
    let vs: Vec<_> = (0..100_000u64)
        .into_par_iter()
        .map(|i| simulate_backward_blp(&m, substream(substream(key, 0), i), &vcfg))
        .collect();
    let life: Vec<Observation> = vs.iter().map(|t| Observation::lifetime(t.lifetime)).collect();
    let prog: Vec<Observation> =
        vs.iter().map(|t| Observation { value: t.total_progeny as f64, censored: t.progeny_censored }).collect();
    let ucfg = BlpConfig { y0: 1, horizon: 100_000, ..Default::default() };
    let us: Vec<Observation> = (0..100_000u64)
        .into_par_iter()
        .map(|i| Observation::lifetime(simulate_forward_blp(&m, substream(substream(key, 1), i), &ucfg).lifetime))
        .collect();
    let w_life = (16.0, 65_536.0);
    let w_prog = (256.0, 268_435_456.0);
    let sv = tail_exponent(&life, TailMethod::SurvivalRegression, w_life, substream(key, 2)).unwrap();
    let pv = tail_exponent(&prog, TailMethod::SurvivalRegression, w_prog, substream(key, 3)).unwrap();
    let su = tail_exponent(&us, TailMethod::SurvivalRegression, w_life, substream(key, 4)).unwrap();
    let pass = (sv.exponent - 0.5).abs() <= TAIL_TOL && (pv.exponent - 0.25).abs() <= TAIL_TOL && (su.exponent - 0.5).abs() <= TAIL_TOL;
    outcome(
        pass,
        format!(
            "V lifetime {:.3} ± {:.3} (target 0.5), V progeny {:.3} ± {:.3} (target 0.25), U lifetime {:.3} ± {:.3} \
             (target 0.5); tol {TAIL_TOL}; censored {:.4}/{:.4}/{:.4}",
            sv.exponent, sv.stderr, pv.exponent, pv.stderr, su.exponent, su.stderr,
            sv.censored_fraction, pv.censored_fraction, su.censored_fraction
        ),
    )
}

fn survival_fraction(sys: &CookieSystem, key: u64) -> f64 {
    let m = StackModel::new(sys);
    let cfg = BlpConfig { y0: 1, horizon: 1_000_000, ..Default::default() };
    let alive = (0..10_000u64)
        .into_par_iter()
        .filter(|&i| simulate_forward_blp(&m, substream(key, i), &cfg).lifetime.is_censored())
        .count();
    alive as f64 / 10_000.0
}

fn c9() -> Outcome {
    let low = survival_fraction(&geometric(0.2, 0.55), substream(seed(9), 0));
    let high = survival_fraction(&geometric(0.5, 0.875), substream(seed(9), 1));
    outcome(
        low < SURVIVAL_LOW && high > SURVIVAL_HIGH,
        format!("U alive at 10^6: delta=0.5 {low:.4} (< {SURVIVAL_LOW}), delta=1.5 {high:.4} (> {SURVIVAL_HIGH})"),
    )
}

fn c10() -> Outcome {
    let s = speed_estimates(&geometric(0.1, 0.9), 100_000, 1_000, 1_000_000, seed(10)).unwrap();
    let m = StackModel::new(&geometric(0.5, 0.875));
    let (v15, se15) = mean_se(&direct_speeds(&m, 1 << 31, 16, substream(seed(10), 2)));
    let pass = s.relative_difference < SPEED_REL && v15.abs() < SPEED_ZERO;
    outcome(
        pass,
        format!(
            "delta=8: v_direct {:.5} ± {:.5}, v_regen {:.5} ± {:.5}, relative gap {:.4} (< {SPEED_REL}); \
             delta=1.5 at 2^31 steps: v_direct {v15:.5} ± {se15:.5} (|v| < {SPEED_ZERO})",
            s.v_direct, s.se_direct, s.v_regen, s.se_regen, s.relative_difference
        ),
    )
}

fn c11() -> Outcome {
    let opts = LimitOptions::default();
    let mut parts = Vec::new();
    let mut pass = true;
    for (name, sys, threshold) in [
        ("delta=8", geometric(0.1, 0.9), KS_GAUSSIAN),
        ("p=0.6", build_example(&ExampleFamily::Periodic { p: vec![0.6] }).unwrap(), KS_GAUSSIAN),
        ("delta=1.5", geometric(0.5, 0.875), KS_STABLE),
    ] {
        let (_, reg) = classify_system(&sys, DEFAULT_TOL_CRITICAL, DEFAULT_TOL_BOUNDARY).unwrap();
        let r = limit_law_check(&sys, &reg, 10_000, 2_000, seed(11), &opts).unwrap();
        pass &= r.ks < threshold;
        parts.push(format!("{name} [{}] KS {:.4} (< {threshold}), censored {}", r.case, r.ks, r.censored));
    }
    outcome(pass, parts.join("; "))
}

fn c12() -> Outcome {
    let instances: Vec<(&str, CookieSystem)> = vec![
        ("geometric(0.5,0.75)", geometric(0.5, 0.75)),
        ("geometric(0.1,0.9)", geometric(0.1, 0.9)),
        ("two-type(0.3,0.7)", build_example(&ExampleFamily::TwoType { alpha: 0.3, p: 0.7 }).unwrap()),
        ("periodic(0.7,0.3)", build_example(&ExampleFamily::Periodic { p: vec![0.7, 0.3] }).unwrap()),
        (
            "bounded(0.4;0.8,0.7,0.3,0.6)",
            build_example(&ExampleFamily::BoundedStack { alpha: 0.4, p: [0.8, 0.7, 0.3, 0.6] }).unwrap(),
        ),
    ];
    let mut parts = Vec::new();
    let mut pass = true;
    for (i, (name, sys)) in instances.iter().enumerate() {
        let target = derive(sys).unwrap().delta;
        let e = excursion_delta(sys, 1000, 100_000, substream(seed(12), i as u64)).unwrap();
        let z = (e.delta_hat - target) / e.delta_se;
        pass &= z.abs() <= EXCURSION_SE;
        parts.push(format!("{name} {:.4} ± {:.4} vs {target:.4} (z {z:.2})", e.delta_hat, e.delta_se));
    }
    outcome(pass, parts.join("; "))
}

fn main() {
    let wanted: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let run = |id: u32| wanted.is_empty() || wanted.contains(&id);
    let mut results: Vec<(u32, &str, Outcome, f64)> = Vec::new();
    let mut timed = |id: u32, name: &'static str, f: &dyn Fn() -> Outcome| {
        let t = Instant::now();
        let o = f();
        let secs = t.elapsed().as_secs_f64();
        println!("[{}] {id:>2} {name}: {} ({secs:.1} s)", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        results.push((id, name, o, secs));
    };
    if run(1) {
        timed(1, "closed form, geometric stacks", &c1);
    }
    if run(2) {
        timed(2, "closed form, two-type stacks", &c2);
    }
    if run(3) {
        timed(3, "identity suite on random critical systems", &c3);
    }
    if run(4) {
        timed(4, "coupled delta, series vs 2N-state pipeline", &c4);
    }
    if run(5) || run(6) {
        let t = Instant::now();
        let bij = bijection_run();
        println!("      bijection run (shared by 5 and 6): {:.1} s", t.elapsed().as_secs_f64());
        if run(5) {
            timed(5, "pathwise bijection and couplings", &|| c5(&bij));
        }
        if run(6) {
            timed(6, "distributional bijection", &|| c6(&bij));
        }
    }
    if run(7) {
        timed(7, "BLP increment moments", &c7);
    }
    if run(8) {
        timed(8, "tail exponents", &c8);
    }
    if run(9) {
        timed(9, "survival dichotomy", &c9);
    }
    if run(10) {
        timed(10, "speed cross-validation", &c10);
    }
    if run(11) {
        timed(11, "hitting-time limit laws", &c11);
    }
    if run(12) {
        timed(12, "excursion-based delta", &c12);
    }
    let failed: Vec<u32> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    println!("acceptance: {} run, {} failed {:?}", results.len(), failed.len(), failed);
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
