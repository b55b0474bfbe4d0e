//! Forward and backward branching-like processes.
//!
//! Forward: `U_i` = successes before the `U_{i-1}`-th failure on a fresh stack.
//! Backward: `V_i` = failures before the `(V_{i-1} + 1)`-th success.
//! Generation `i` reads the stream `substream(key, i)`.

use serde::Serialize;

use super::stack::{generation, Count, StackModel};
use crate::rng::substream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Lifetime {
    /// First `j > 0` with `Z_j <= 0`.
    Died(u64),
    /// Still alive at this generation (horizon or value cap reached).
    Censored(u64),
}

impl Lifetime {
    pub fn value(self) -> u64 {
        match self {
            Lifetime::Died(n) | Lifetime::Censored(n) => n,
        }
    }

    pub fn is_censored(self) -> bool {
        matches!(self, Lifetime::Censored(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RegenPair {
    pub duration: u64,
    pub progeny: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlpTrajectory {
    /// `Z_0..Z_stop` when recording was requested.
    pub values: Option<Vec<u64>>,
    pub lifetime: Lifetime,
    /// `sum_{j < sigma_0} Z_j`, or the partial sum when censored.
    pub total_progeny: u64,
    pub progeny_censored: bool,
    /// Regeneration pairs of a backward process started at 0.
    pub regen_pairs: Vec<RegenPair>,
    pub last_value: u64,
    /// The run stopped because a value exceeded the cap.
    pub capped: bool,
}

#[derive(Debug, Clone)]
pub struct BlpConfig {
    pub y0: u64,
    /// Maximum number of generations.
    pub horizon: u64,
    /// Stop (censored) once a value exceeds this.
    pub value_cap: u64,
    pub record: bool,
    /// Backward process from 0: keep running until this many returns to 0.
    pub n_regenerations: usize,
    /// Allow the negative-binomial shortcut on absorbed stacks.
    pub fast_path: bool,
}

impl Default for BlpConfig {
    fn default() -> Self {
        BlpConfig {
            y0: 1,
            horizon: 1_000_000,
            value_cap: u64::MAX / 4,
            record: false,
            n_regenerations: 0,
            fast_path: true,
        }
    }
}

/// One step of the forward process from `u` (generation key `gkey`).
#[inline]
pub fn forward_step(model: &StackModel, gkey: u64, u: u64, fast: bool) -> u64 {
    generation(model, gkey, u, Count::SuccessesBeforeFailures, fast)
}

/// One step of the backward process from `v`.
#[inline]
pub fn backward_step(model: &StackModel, gkey: u64, v: u64, fast: bool) -> u64 {
    generation(model, gkey, v + 1, Count::FailuresBeforeSuccesses, fast)
}

fn run(model: &StackModel, key: u64, cfg: &BlpConfig, forward: bool) -> BlpTrajectory {
    let mut z = cfg.y0;
    let mut values = cfg.record.then(|| vec![z]);
    let mut progeny = 0u64;
    let mut lifetime = None;
    let mut regen = Vec::new();
    let mut cycle_start = 0u64;
    let mut cycle_sum = 0u64;
    let mut capped = false;
    let mut i = 0u64;
    let keep_going = !forward && cfg.n_regenerations > 0;
    while i < cfg.horizon {
        if lifetime.is_none() {
            progeny = progeny.saturating_add(z);
        }
        cycle_sum = cycle_sum.saturating_add(z);
        i += 1;
        let gkey = substream(key, i);
        z = if forward {
            forward_step(model, gkey, z, cfg.fast_path)
        } else {
            backward_step(model, gkey, z, cfg.fast_path)
        };
        if let Some(v) = values.as_mut() {
            v.push(z);
        }
        if z == 0 {
            if lifetime.is_none() {
                lifetime = Some(Lifetime::Died(i));
            }
            if keep_going {
                regen.push(RegenPair { duration: i - cycle_start, progeny: cycle_sum });
                cycle_start = i;
                cycle_sum = 0;
                if regen.len() >= cfg.n_regenerations {
                    break;
                }
            }
            if !keep_going || forward {
                break;
            }
        }
        if z > cfg.value_cap {
            capped = true;
            break;
        }
    }
    let lifetime = lifetime.unwrap_or(Lifetime::Censored(i));
    BlpTrajectory {
        values,
        lifetime,
        total_progeny: progeny,
        progeny_censored: lifetime.is_censored(),
        regen_pairs: regen,
        last_value: z,
        capped,
    }
}

pub fn simulate_forward_blp(model: &StackModel, key: u64, cfg: &BlpConfig) -> BlpTrajectory {
    assert!(cfg.y0 >= 1, "forward process starts at y0 >= 1");
    run(model, key, cfg, true)
}

pub fn simulate_backward_blp(model: &StackModel, key: u64, cfg: &BlpConfig) -> BlpTrajectory {
    run(model, key, cfg, false)
}
