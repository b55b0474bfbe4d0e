//! The excited random walk built from per-site coin streams.

use serde::Serialize;

use super::stack::{SiteStack, StackModel};
use crate::rng::site_substream;

/// What to record and when to stop.
#[derive(Debug, Clone, Default)]
pub struct WalkConfig {
    /// Maximum number of steps.
    pub horizon: u64,
    /// Levels `m` whose hitting times `T_m` are recorded.
    pub targets: Vec<u64>,
    /// Keep `X_k` for `k` divisible by `stride` (0: keep nothing but the end).
    pub stride: u64,
    /// Snapshot the left-step counts `D_n^x`, `x < n`, at `T_n`.
    pub left_edges_at: Option<u64>,
    /// Count returns to 0 from the right and snapshot the right-step counts
    /// `E_x^n` at the `n`-th return (or at the horizon).
    pub returns: Option<u64>,
    /// The origin always steps right (its coins are never read).
    pub plus_origin: bool,
    /// Stop as soon as the largest target is hit.
    pub stop_at_last_target: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WalkRecord {
    /// `(k, X_k)` at the stride, plus the final position.
    pub positions: Vec<(u64, i64)>,
    pub steps: u64,
    pub final_position: i64,
    /// `(m, T_m)`; `None` when not hit before the walk stopped.
    pub hitting_times: Vec<(u64, Option<u64>)>,
    /// `D_n^x` for `x = min_site..n-1` as `(min_site, counts)`, if `T_n` was hit.
    pub left_edge_counts: Option<(i64, Vec<u64>)>,
    /// `E_x^n` for `x = 0..`, taken at `gamma_n` or when the walk stopped.
    pub up_crossings: Option<Vec<u64>>,
    /// Times of returns to 0 from the right.
    pub returns_to_origin: Vec<u64>,
    /// `true` iff the `n`-th return happened before the walk stopped.
    pub returns_complete: bool,
}

impl WalkRecord {
    pub fn hitting_time(&self, m: u64) -> Option<u64> {
        self.hitting_times.iter().find(|(k, _)| *k == m).and_then(|(_, t)| *t)
    }
}

#[derive(Debug, Clone)]
struct Site {
    stack: Option<SiteStack>,
    up: u64,
    down: u64,
}

const EMPTY: Site = Site { stack: None, up: 0, down: 0 };

/// Sites `x >= 0` at `pos[x]`, `x < 0` at `neg[-x - 1]`.
struct Lattice {
    pos: Vec<Site>,
    neg: Vec<Site>,
}

impl Lattice {
    fn site(&mut self, x: i64) -> &mut Site {
        let (v, i) = if x >= 0 {
            (&mut self.pos, x as usize)
        } else {
            (&mut self.neg, (-x - 1) as usize)
        };
        if i >= v.len() {
            v.resize(i + 1 + v.len() / 2, EMPTY);
        }
        &mut v[i]
    }

    fn get(&self, x: i64) -> Option<&Site> {
        if x >= 0 {
            self.pos.get(x as usize)
        } else {
            self.neg.get((-x - 1) as usize)
        }
    }
}

/// Simulate one walk from 0. Site `x` reads the stream
/// `site_substream(key, x)`, so the environment is a function of `key` only.
pub fn simulate_walk(model: &StackModel, key: u64, cfg: &WalkConfig) -> WalkRecord {
    let mut lat = Lattice { pos: Vec::with_capacity(1024), neg: Vec::with_capacity(64) };
    let mut x: i64 = 0;
    let mut min_site: i64 = 0;
    let mut max_site: i64 = 0;
    let mut targets: Vec<(u64, Option<u64>)> = cfg.targets.iter().map(|&m| (m, None)).collect();
    targets.sort_by_key(|t| t.0);
    let last_target = targets.last().map(|t| t.0);
    let mut next_target = 0usize;
    let mut positions = Vec::new();
    let mut left_edge_counts = None;
    let mut up_crossings = None;
    let mut returns = Vec::new();
    let mut returns_complete = false;
    let mut k: u64 = 0;
    if cfg.stride > 0 {
        positions.push((0, 0));
    }
    while k < cfg.horizon {
        let site = lat.site(x);
        let right = if cfg.plus_origin && x == 0 {
            true
        } else {
            let stack = site.stack.get_or_insert_with(|| SiteStack::new(model, site_substream(key, x)));
            stack.trial(model)
        };
        if right {
            site.up += 1;
            x += 1;
        } else {
            site.down += 1;
            x -= 1;
        }
        k += 1;
        if x > max_site {
            max_site = x;
            while next_target < targets.len() && targets[next_target].0 == x as u64 {
                targets[next_target].1 = Some(k);
                next_target += 1;
            }
            if cfg.left_edges_at == Some(x as u64) {
                let counts = (min_site..x).map(|y| lat.get(y).map_or(0, |s| s.down)).collect();
                left_edge_counts = Some((min_site, counts));
            }
        }
        min_site = min_site.min(x);
        if cfg.stride > 0 && k % cfg.stride == 0 {
            positions.push((k, x));
        }
        if x == 0 && !right {
            returns.push(k);
            if cfg.returns == Some(returns.len() as u64) {
                returns_complete = true;
                break;
            }
        }
        if cfg.stop_at_last_target && last_target.is_some() && next_target == targets.len() {
            break;
        }
    }
    if cfg.returns.is_some() {
        let top = max_site.max(0) as usize;
        up_crossings = Some((0..=top).map(|y| lat.get(y as i64).map_or(0, |s| s.up)).collect());
    }
    if cfg.stride > 0 && positions.last().map(|p| p.0) != Some(k) {
        positions.push((k, x));
    }
    targets.sort_by_key(|t| cfg.targets.iter().position(|m| *m == t.0));
    WalkRecord {
        positions,
        steps: k,
        final_position: x,
        hitting_times: targets,
        left_edge_counts,
        up_crossings,
        returns_to_origin: returns,
        returns_complete,
    }
}

/// `T_n - n - 2 sum_{x<n} D_n^x` from a record with a left-edge snapshot.
pub fn hitting_identity_residual(rec: &WalkRecord, n: u64) -> Option<i64> {
    let t = rec.hitting_time(n)?;
    let (_, counts) = rec.left_edge_counts.as_ref()?;
    let sum: u64 = counts.iter().sum();
    Some(t as i64 - n as i64 - 2 * sum as i64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env_model::{build_example, validate_system, ExampleFamily};

    #[test]
    fn steps_are_unit_and_deterministic() {
        let sys = build_example(&ExampleFamily::TwoType { alpha: 0.3, p: 0.7 }).unwrap();
        let m = StackModel::new(&sys);
        let cfg = WalkConfig { horizon: 5000, stride: 1, targets: vec![10, 30], ..Default::default() };
        let a = simulate_walk(&m, 42, &cfg);
        let b = simulate_walk(&m, 42, &cfg);
        assert_eq!(a, b);
        assert!(a.positions.windows(2).all(|w| (w[1].1 - w[0].1).abs() == 1));
        assert_eq!(a.positions.len(), 5001);
    }

    #[test]
    fn hitting_identity_exact() {
        let sys = build_example(&ExampleFamily::Geometric { alpha: 0.5, p1: 0.875 }).unwrap();
        let m = StackModel::new(&sys);
        let n = 25;
        let cfg = WalkConfig {
            horizon: 1_000_000,
            targets: vec![n],
            left_edges_at: Some(n),
            stop_at_last_target: true,
            ..Default::default()
        };
        let mut hits = 0;
        for i in 0..300 {
            let rec = simulate_walk(&m, i, &cfg);
            if let Some(res) = hitting_identity_residual(&rec, n) {
                assert_eq!(res, 0);
                hits += 1;
            }
        }
        assert!(hits > 250);
    }

    #[test]
    fn plus_origin_stays_nonnegative() {
        let sys = validate_system(vec![vec![1.0]], vec![0.4], vec![1.0]).unwrap();
        let m = StackModel::new(&sys);
        let cfg = WalkConfig { horizon: 10_000, stride: 1, plus_origin: true, returns: Some(5), ..Default::default() };
        let rec = simulate_walk(&m, 9, &cfg);
        assert!(rec.positions.iter().all(|p| p.1 >= 0));
        assert!(rec.returns_complete);
        assert_eq!(rec.up_crossings.as_ref().unwrap()[0], 5);
    }

    #[test]
    fn biased_walk_speed() {
        let sys = build_example(&ExampleFamily::Periodic { p: vec![0.6] }).unwrap();
        let m = StackModel::new(&sys);
        let cfg = WalkConfig { horizon: 20_000, ..Default::default() };
        let v: f64 = (0..50).map(|i| simulate_walk(&m, i, &cfg).final_position as f64 / 20_000.0).sum::<f64>() / 50.0;
        // sd of X_n/n is sqrt(0.96/n)/sqrt(50)
        assert!((v - 0.2).abs() < 3.0 * (0.96f64 / 20_000.0 / 50.0).sqrt());
    }
}
