//! One-step increment moments of the forward and backward processes.

use rayon::prelude::*;
use serde::Serialize;

use super::report::central_moments;
use crate::env_model::CookieSystem;
use crate::error::{Error, Result};
use crate::parameters::side;
use crate::rng::substream;
use crate::simulators::stack::{generation, Count, StackModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Direction {
    /// `U_1` from `U_0 = n`.
    Forward,
    /// `V_1` from `V_0 = n`.
    Backward,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelMoments {
    pub direction: Direction,
    pub level: u64,
    pub paths: usize,
    pub mean: f64,
    pub mean_se: f64,
    pub target_mean: f64,
    pub mean_pass: bool,
    pub var_over_n: f64,
    pub var_se: f64,
    pub target_var: f64,
    pub var_tolerance: f64,
    pub var_pass: bool,
}

/// Samples of the one-step increment at level `n`.
pub fn increment_samples(model: &StackModel, dir: Direction, n: u64, paths: usize, key: u64) -> Vec<f64> {
    let (m, count) = match dir {
        Direction::Forward => (n, Count::SuccessesBeforeFailures),
        Direction::Backward => (n + 1, Count::FailuresBeforeSuccesses),
    };
    (0..paths as u64)
        .into_par_iter()
        .map(|i| generation(model, substream(key, i), m, count, true) as f64)
        .collect()
}

/// Mean within 3 s.e. of `lambda n + eta.r` (forward) or
/// `lambda~ (n + 1) + eta.r~` (backward); variance over `n` within
/// `max(3 s.e., 5/n)` of `nu` or `nu~`.
pub fn blp_increment_moments(sys: &CookieSystem, levels: &[u64], paths: usize, seed: u64) -> Result<Vec<LevelMoments>> {
    if paths < 2 {
        return Err(Error::InvalidArgument("need at least two paths".into()));
    }
    let fwd = side(sys)?;
    let bwd = side(&sys.mirrored())?;
    let eta = sys.eta_vector();
    let model = StackModel::new(sys);
    let mut out = Vec::new();
    for (d, dir) in [Direction::Forward, Direction::Backward].into_iter().enumerate() {
        let sp = if dir == Direction::Forward { &fwd } else { &bwd };
        let eta_r = eta.dot(&sp.r);
        for &n in levels {
            let key = substream(substream(seed, d as u64), n);
            let xs = increment_samples(&model, dir, n, paths, key);
            let nn = xs.len() as f64;
            let (mean, m2, _, m4) = central_moments(&xs);
            let var = m2 * nn / (nn - 1.0);
            let mean_se = (var / nn).sqrt();
            let var_se = ((m4 - m2 * m2) / nn).sqrt() / n as f64;
            let target_mean = match dir {
                Direction::Forward => sp.lambda * n as f64 + eta_r,
                Direction::Backward => sp.lambda * (n + 1) as f64 + eta_r,
            };
            let var_over_n = var / n as f64;
            let var_tolerance = (3.0 * var_se).max(5.0 / n as f64);
            out.push(LevelMoments {
                direction: dir,
                level: n,
                paths,
                mean,
                mean_se,
                target_mean,
                mean_pass: (mean - target_mean).abs() <= 3.0 * mean_se,
                var_over_n,
                var_se,
                target_var: sp.nu,
                var_tolerance,
                var_pass: (var_over_n - sp.nu).abs() <= var_tolerance,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env_model::validate_system;

    #[test]
    fn fair_coin_level_100() {
        let sys = validate_system(vec![vec![1.0]], vec![0.5], vec![1.0]).unwrap();
        let rows = blp_increment_moments(&sys, &[100], 40_000, 3).unwrap();
        for r in &rows {
            assert!(r.mean_pass && r.var_pass, "{r:?}");
            assert!((r.target_var - 2.0).abs() < 1e-12);
        }
        assert!((rows[0].target_mean - 100.0).abs() < 1e-12);
        assert!((rows[1].target_mean - 101.0).abs() < 1e-12);
    }
}
