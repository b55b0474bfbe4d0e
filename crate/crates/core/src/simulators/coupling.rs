//! Monotone couplings.
//!
//! * Coupled BLPs: per generation one Geometric(eps) switch `gamma` and one
//!   uniform per trial drive both `xi(j) = [u_j < p1(R_j)]` and
//!   `xi_hat(j) = [u_j < p_hat_j(R_j)]` with `p_hat_j = p1` for `j <= gamma`
//!   and `p0` after, so `xi_hat <= xi` trial by trial.
//! * Walk/forward-process: the walk in the environment where the origin always
//!   steps right and the forward process started at `n` read the same site
//!   streams.

use serde::Serialize;

use super::blp::Lifetime;
use super::stack::{SiteStack, StackModel};
use super::walk::{simulate_walk, WalkConfig};
use crate::parameters::CoupledSystem;
use crate::rng::{site_substream, substream, CounterRng};

#[derive(Debug, Clone)]
pub struct CoupledConfig {
    pub y0: u64,
    pub horizon: u64,
    pub value_cap: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoupledPaths {
    pub u: Vec<u64>,
    pub u_hat: Vec<u64>,
    pub v: Vec<u64>,
    pub v_hat: Vec<u64>,
    pub u_hat_lifetime: Lifetime,
    pub v_hat_lifetime: Lifetime,
    /// Generations with `U < U_hat`.
    pub forward_violations: usize,
    /// Generations with `V > V_hat`.
    pub backward_violations: usize,
}

/// Stack tables for the coupled pair: `K`, `eta` of the base and strengths `p1`.
pub struct CoupledModel {
    model: StackModel,
    p1: Vec<f64>,
    p0: Vec<f64>,
    epsilon: f64,
}

impl CoupledModel {
    pub fn new(c: &CoupledSystem) -> Self {
        CoupledModel {
            model: StackModel::with_strengths(&c.base, &c.p1),
            p1: c.p1.clone(),
            p0: c.p0.clone(),
            epsilon: c.epsilon,
        }
    }
}

/// One coupled generation. `targets = (m, m_hat)`; returns the two counts.
/// Forward: successes before the `m`-th failure. Backward: failures before
/// the `m`-th success.
fn coupled_generation(cm: &CoupledModel, gkey: u64, m: u64, m_hat: u64, forward: bool) -> (u64, u64) {
    let gamma = CounterRng::new(substream(gkey, u64::MAX)).geometric_failures(cm.epsilon);
    let mut stack = SiteStack::new(&cm.model, gkey);
    let (mut hit, mut hit_hat) = (0u64, 0u64);
    let (mut other, mut other_hat) = (0u64, 0u64);
    let mut j = 0u64;
    while hit < m || hit_hat < m_hat {
        j += 1;
        let (u, ty) = stack.raw_trial(&cm.model);
        let xi = u < cm.p1[ty];
        let xi_hat = u < if j <= gamma { cm.p1[ty] } else { cm.p0[ty] };
        if hit < m {
            if xi != forward {
                hit += 1;
            } else {
                other += 1;
            }
        }
        if hit_hat < m_hat {
            if xi_hat != forward {
                hit_hat += 1;
            } else {
                other_hat += 1;
            }
        }
    }
    (other, other_hat)
}

pub fn simulate_coupled_blp(cm: &CoupledModel, key: u64, cfg: &CoupledConfig) -> CoupledPaths {
    let fkey = substream(key, 0);
    let bkey = substream(key, 1);
    let mut u = vec![cfg.y0];
    let mut uh = vec![cfg.y0];
    let mut fv = 0;
    let mut u_hat_life = None;
    for i in 1..=cfg.horizon {
        let (a, b) = (*u.last().unwrap(), *uh.last().unwrap());
        if (a == 0 && b == 0) || a > cfg.value_cap {
            break;
        }
        let (na, nb) = coupled_generation(cm, substream(fkey, i), a, b, true);
        if na < nb {
            fv += 1;
        }
        if nb == 0 && u_hat_life.is_none() {
            u_hat_life = Some(Lifetime::Died(i));
        }
        u.push(na);
        uh.push(nb);
    }
    let mut v = vec![cfg.y0];
    let mut vh = vec![cfg.y0];
    let mut bv = 0;
    let mut v_hat_life = None;
    for i in 1..=cfg.horizon {
        let (a, b) = (*v.last().unwrap(), *vh.last().unwrap());
        if b > cfg.value_cap {
            break;
        }
        let (na, nb) = coupled_generation(cm, substream(bkey, i), a + 1, b + 1, false);
        if na > nb {
            bv += 1;
        }
        if nb == 0 && v_hat_life.is_none() {
            v_hat_life = Some(Lifetime::Died(i));
        }
        v.push(na);
        vh.push(nb);
    }
    CoupledPaths {
        u_hat_lifetime: u_hat_life.unwrap_or(Lifetime::Censored(uh.len() as u64 - 1)),
        v_hat_lifetime: v_hat_life.unwrap_or(Lifetime::Censored(vh.len() as u64 - 1)),
        u,
        u_hat: uh,
        v,
        v_hat: vh,
        forward_violations: fv,
        backward_violations: bv,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WalkCouplingCheck {
    pub gamma_finite: bool,
    /// Sites `i` with `U_i < E_i^n`.
    pub domination_violations: usize,
    /// On `gamma_n < infinity`: sites with `U_i != E_i^n`.
    pub equality_violations: usize,
    pub sites_checked: usize,
}

/// Walk until the `n`-th return to 0 from the right (origin always steps
/// right), then run the forward process from `U_0 = n` on the same site
/// streams and compare with the right-step counts `E_i^n`.
pub fn walk_forward_coupling(model: &StackModel, key: u64, n: u64, horizon: u64) -> WalkCouplingCheck {
    let cfg = WalkConfig {
        horizon,
        returns: Some(n),
        plus_origin: true,
        ..Default::default()
    };
    let rec = simulate_walk(model, key, &cfg);
    let e = rec.up_crossings.unwrap_or_default();
    let mut u = n;
    let mut dom = 0;
    let mut eq = 0;
    if u < e[0] {
        dom += 1;
    }
    if rec.returns_complete && u != e[0] {
        eq += 1;
    }
    // one site past the walk's range, where E = 0
    for i in 1..=e.len() {
        let ei = e.get(i).copied().unwrap_or(0);
        u = if u == 0 {
            0
        } else {
            SiteStack::new(model, site_substream(key, i as i64)).successes_before_failures(model, u)
        };
        if u < ei {
            dom += 1;
        }
        if rec.returns_complete && u != ei {
            eq += 1;
        }
    }
    WalkCouplingCheck {
        gamma_finite: rec.returns_complete,
        domination_violations: dom,
        equality_violations: eq,
        sites_checked: e.len() + 1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env_model::{build_example, ExampleFamily, DEFAULT_TOL_CRITICAL};
    use crate::parameters::coupled_delta;

    #[test]
    fn coupled_dominations_hold() {
        let base = build_example(&ExampleFamily::TwoType { alpha: 0.3, p: 0.7 }).unwrap();
        let c = coupled_delta(&[0.75, 0.4], &[0.7, 0.3], &base, 0.2, DEFAULT_TOL_CRITICAL).unwrap();
        let cm = CoupledModel::new(&c);
        let cfg = CoupledConfig { y0: 3, horizon: 40, value_cap: 20_000 };
        for k in 0..300 {
            let p = simulate_coupled_blp(&cm, k, &cfg);
            assert_eq!(p.forward_violations, 0);
            assert_eq!(p.backward_violations, 0);
            assert!(p.u.iter().zip(&p.u_hat).all(|(a, b)| a >= b));
        }
    }

    #[test]
    fn walk_coupling_equality_on_return() {
        let sys = build_example(&ExampleFamily::Geometric { alpha: 0.2, p1: 0.55 }).unwrap();
        let m = StackModel::new(&sys);
        let mut finite = 0;
        for k in 0..300 {
            let c = walk_forward_coupling(&m, k, 3, 20_000);
            assert_eq!(c.domination_violations, 0);
            assert_eq!(c.equality_violations, 0);
            finite += c.gamma_finite as usize;
        }
        assert!(finite > 150);
    }
}
