//! Walk/branching-process correspondences checked on simulated paths.

use rayon::prelude::*;
use serde::Serialize;

use super::blp::backward_step;
use super::coupling::walk_forward_coupling;
use super::stack::StackModel;
use super::walk::{hitting_identity_residual, simulate_walk, WalkConfig};
use crate::env_model::CookieSystem;
use crate::error::{Error, Result};
use crate::rng::substream;
use crate::statistics::ks::{ks_pvalue, ks_two_sample};

#[derive(Debug, Clone, Serialize)]
pub struct BijectionOptions {
    /// Level `n` of the hitting time `T_n` and of the backward sequence.
    pub level: u64,
    /// Number of walks, of backward paths and of coupled walk/forward pairs.
    pub paths: usize,
    pub walk_horizon: u64,
    /// Number of returns to the origin in the walk/forward coupling.
    pub coupling_returns: u64,
    pub coupling_horizon: u64,
    /// Family-wise significance of the two distributional tests.
    pub significance: f64,
}

impl Default for BijectionOptions {
    fn default() -> Self {
        BijectionOptions {
            level: 200,
            paths: 10_000,
            walk_horizon: 50_000_000,
            coupling_returns: 3,
            coupling_horizon: 200,
            significance: 0.01,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BijectionReport {
    pub level: u64,
    pub hits: usize,
    pub censored_walks: usize,
    pub hitting_identity_violations: usize,
    pub coupled_walks: usize,
    pub coupled_returned: usize,
    pub domination_violations: usize,
    pub equality_violations: usize,
    pub ks_sum: f64,
    pub ks_max: f64,
    pub p_sum: f64,
    pub p_max: f64,
    pub significance: f64,
    pub distribution_pass: bool,
}

/// `(sum, max)` of `(D_n^{n-1}, .., D_n^0)` for one walk, if `T_n` was hit;
/// the identity residual is returned alongside.
fn walk_summary(model: &StackModel, key: u64, n: u64, horizon: u64) -> Option<(f64, f64, i64)> {
    let cfg = WalkConfig {
        horizon,
        targets: vec![n],
        left_edges_at: Some(n),
        stop_at_last_target: true,
        ..Default::default()
    };
    let rec = simulate_walk(model, key, &cfg);
    let res = hitting_identity_residual(&rec, n)?;
    let (min_site, counts) = rec.left_edge_counts?;
    let nonneg = &counts[(-min_site) as usize..];
    let sum: u64 = nonneg.iter().sum();
    let max = nonneg.iter().copied().max().unwrap_or(0);
    Some((sum as f64, max as f64, res))
}

/// `(sum_{i=1}^n V_i, max_{i<=n} V_i)` for the backward process from 0.
pub fn backward_summary(model: &StackModel, key: u64, n: u64) -> (f64, f64) {
    let mut v = 0u64;
    let mut sum = 0u64;
    let mut max = 0u64;
    for i in 1..=n {
        v = backward_step(model, substream(key, i), v, true);
        sum += v;
        max = max.max(v);
    }
    (sum as f64, max as f64)
}

/// Pathwise checks (hitting-time identity, walk/forward domination) and the
/// distributional comparison of left-step counts with the backward process.
/// Any pathwise failure is returned as [`Error::CouplingViolation`].
pub fn verify_bijections(sys: &CookieSystem, opts: &BijectionOptions, seed: u64) -> Result<BijectionReport> {
    if opts.level == 0 {
        return Err(Error::InvalidArgument("level must be at least 1".into()));
    }
    let model = StackModel::new(sys);
    let n = opts.level;
    let wkey = substream(seed, 1);
    let vkey = substream(seed, 2);
    let ckey = substream(seed, 3);
    let walks: Vec<Option<(f64, f64, i64)>> = (0..opts.paths as u64)
        .into_par_iter()
        .map(|i| walk_summary(&model, substream(wkey, i), n, opts.walk_horizon))
        .collect();
    let blps: Vec<(f64, f64)> = (0..opts.paths as u64)
        .into_par_iter()
        .map(|i| backward_summary(&model, substream(vkey, i), n))
        .collect();
    let couplings: Vec<_> = (0..opts.paths as u64)
        .into_par_iter()
        .map(|i| walk_forward_coupling(&model, substream(ckey, i), opts.coupling_returns, opts.coupling_horizon))
        .collect();

    let hit: Vec<&(f64, f64, i64)> = walks.iter().flatten().collect();
    let identity_violations = hit.iter().filter(|w| w.2 != 0).count();
    let d_sum: Vec<f64> = hit.iter().map(|w| w.0).collect();
    let d_max: Vec<f64> = hit.iter().map(|w| w.1).collect();
    let v_sum: Vec<f64> = blps.iter().map(|b| b.0).collect();
    let v_max: Vec<f64> = blps.iter().map(|b| b.1).collect();
    let n_eff = (d_sum.len() * v_sum.len()) as f64 / (d_sum.len() + v_sum.len()).max(1) as f64;
    let ks_sum = ks_two_sample(&d_sum, &v_sum);
    let ks_max = ks_two_sample(&d_max, &v_max);
    let p_sum = ks_pvalue(ks_sum, n_eff);
    let p_max = ks_pvalue(ks_max, n_eff);
    let dom: usize = couplings.iter().map(|c| c.domination_violations).sum();
    let eq: usize = couplings.iter().map(|c| c.equality_violations).sum();
    let report = BijectionReport {
        level: n,
        hits: hit.len(),
        censored_walks: walks.len() - hit.len(),
        hitting_identity_violations: identity_violations,
        coupled_walks: couplings.len(),
        coupled_returned: couplings.iter().filter(|c| c.gamma_finite).count(),
        domination_violations: dom,
        equality_violations: eq,
        ks_sum,
        ks_max,
        p_sum,
        p_max,
        significance: opts.significance,
        // Bonferroni over the two statistics
        distribution_pass: p_sum > opts.significance / 2.0 && p_max > opts.significance / 2.0,
    };
    if identity_violations + dom + eq > 0 {
        return Err(Error::CouplingViolation(format!(
            "identity {identity_violations}, domination {dom}, equality {eq}"
        )));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env_model::{build_example, ExampleFamily};

    #[test]
    fn small_run_passes() {
        let sys = build_example(&ExampleFamily::Geometric { alpha: 0.1, p1: 0.9 }).unwrap();
        let opts = BijectionOptions { level: 30, paths: 2000, ..Default::default() };
        let rep = verify_bijections(&sys, &opts, 1).unwrap();
        assert_eq!(rep.hits, 2000);
        assert!(rep.distribution_pass, "{rep:?}");
    }
}
