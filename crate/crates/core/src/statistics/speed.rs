//! Ballistic speed: directly from walk positions and from regeneration
//! cycles of the backward process, `v = (1 + 2 E[W] / E[duration])^{-1}`.

use rayon::prelude::*;
use serde::Serialize;

use super::report::mean_se;
use crate::env_model::{criticality, stationary_distribution, CookieSystem, DEFAULT_TOL_CRITICAL};
use crate::error::{Error, Result};
use crate::parameters::deltas;
use crate::rng::substream;
use crate::simulators::blp::{simulate_backward_blp, BlpConfig, RegenPair};
use crate::simulators::stack::StackModel;
use crate::simulators::walk::{simulate_walk, WalkConfig};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpeedReport {
    pub horizon: u64,
    pub paths: usize,
    pub n_regen: usize,
    pub v_direct: f64,
    pub se_direct: f64,
    pub v_regen: f64,
    pub se_regen: f64,
    /// `|v_direct - v_regen|` over the pooled standard error.
    pub agreement: f64,
    /// `|v_direct - v_regen| / v_regen`.
    pub relative_difference: f64,
    /// Critical with `delta <= 2`: the regeneration moments may be infinite.
    pub non_ballistic: bool,
    pub delta: f64,
    /// Regeneration cycles left unfinished at the generation cap.
    pub regen_incomplete: usize,
}

/// Final positions `X_horizon / horizon` of `paths` walks.
pub fn direct_speeds(model: &StackModel, horizon: u64, paths: usize, seed: u64) -> Vec<f64> {
    let cfg = WalkConfig { horizon, ..Default::default() };
    (0..paths as u64)
        .into_par_iter()
        .map(|i| simulate_walk(model, substream(seed, i), &cfg).final_position as f64 / horizon as f64)
        .collect()
}

/// Ratio estimate of `E[W] / E[duration]` with its delta-method s.e.
pub fn regeneration_ratio(pairs: &[RegenPair]) -> (f64, f64) {
    let n = pairs.len() as f64;
    let sw: f64 = pairs.iter().map(|p| p.progeny as f64).sum();
    let sd: f64 = pairs.iter().map(|p| p.duration as f64).sum();
    let r = sw / sd;
    let dbar = sd / n;
    let resid = pairs.iter().map(|p| (p.progeny as f64 - r * p.duration as f64).powi(2)).sum::<f64>() / (n - 1.0);
    (r, (resid / n).sqrt() / dbar)
}

/// `paths` backward processes from 0, each run for `n_regen / paths` cycles.
pub fn regeneration_pairs(model: &StackModel, paths: usize, n_regen: usize, seed: u64) -> (Vec<RegenPair>, usize) {
    let per = n_regen.div_ceil(paths.max(1));
    let cfg = BlpConfig { y0: 0, horizon: u64::MAX, n_regenerations: per, ..Default::default() };
    let runs: Vec<_> = (0..paths as u64)
        .into_par_iter()
        .map(|i| simulate_backward_blp(model, substream(seed, i), &cfg))
        .collect();
    let incomplete = runs.iter().filter(|t| t.regen_pairs.len() < per).count();
    let mut pairs: Vec<RegenPair> = runs.into_iter().flat_map(|t| t.regen_pairs).collect();
    pairs.truncate(n_regen);
    (pairs, incomplete)
}

pub fn speed_estimates(sys: &CookieSystem, horizon: u64, paths: usize, n_regen: usize, seed: u64) -> Result<SpeedReport> {
    if horizon == 0 || paths < 2 || n_regen < 2 {
        return Err(Error::InvalidArgument("need horizon >= 1, paths >= 2, n_regen >= 2".into()));
    }
    let (delta, _) = deltas(sys)?;
    let critical = criticality(&stationary_distribution(sys)?, sys.p(), DEFAULT_TOL_CRITICAL).is_critical;
    let model = StackModel::new(sys);
    let (v_direct, se_direct) = mean_se(&direct_speeds(&model, horizon, paths, substream(seed, 0)));
    let (pairs, regen_incomplete) = regeneration_pairs(&model, paths.min(n_regen), n_regen, substream(seed, 1));
    let (r, se_r) = regeneration_ratio(&pairs);
    let v_regen = 1.0 / (1.0 + 2.0 * r);
    let se_regen = 2.0 * se_r * v_regen * v_regen;
    let diff = (v_direct - v_regen).abs();
    Ok(SpeedReport {
        horizon,
        paths,
        n_regen: pairs.len(),
        v_direct,
        se_direct,
        v_regen,
        se_regen,
        agreement: diff / (se_direct.powi(2) + se_regen.powi(2)).sqrt(),
        relative_difference: diff / v_regen.abs(),
        non_ballistic: critical && delta <= 2.0,
        delta,
        regen_incomplete,
    })
}
