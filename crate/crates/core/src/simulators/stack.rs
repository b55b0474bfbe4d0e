//! A single site's cookie stack and the Bernoulli stream it generates.
//!
//! Stream layout: one uniform picks `R_1` from `eta`; trial `j` then uses one
//! uniform for the coin `xi(j) = [u < p(R_j)]` and one for the move
//! `R_j -> R_{j+1}`. Trial `j` therefore always reads counters `2j - 1` and
//! `2j`, whatever happened before.

use rand_distr::{Distribution, Gamma, Poisson};

use crate::env_model::CookieSystem;
use crate::rng::CounterRng;

/// Remaining count above which an absorbed stack is finished by one
/// negative-binomial draw instead of trial by trial.
pub const FAST_PATH_MIN: u64 = 24;

/// Precomputed sampling tables for a cookie system.
#[derive(Debug, Clone)]
pub struct StackModel {
    p: Vec<f64>,
    cum_k: Vec<Vec<f64>>,
    cum_eta: Vec<f64>,
    absorbed: Vec<Option<f64>>,
}

fn cumulative(row: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out: Vec<f64> = row
        .iter()
        .map(|x| {
            acc += x;
            acc
        })
        .collect();
    // last positive entry catches u close to 1
    if let Some(last) = row.iter().rposition(|&x| x > 0.0) {
        for v in &mut out[last..] {
            *v = f64::INFINITY;
        }
    }
    out
}

#[inline]
fn pick(cum: &[f64], u: f64) -> usize {
    cum.iter().position(|&c| u < c).unwrap_or(cum.len() - 1)
}

impl StackModel {
    pub fn new(sys: &CookieSystem) -> Self {
        Self::with_strengths(sys, sys.p())
    }

    /// Tables for `K`, `eta` of `sys` but strengths `p`.
    pub fn with_strengths(sys: &CookieSystem, p: &[f64]) -> Self {
        let n = sys.n_states();
        let k = sys.k();
        let mut absorbed = vec![None; n];
        for (s, slot) in absorbed.iter_mut().enumerate() {
            let mut seen = vec![false; n];
            let mut todo = vec![s];
            seen[s] = true;
            while let Some(i) = todo.pop() {
                for j in 0..n {
                    if k[i][j] > 0.0 && !seen[j] {
                        seen[j] = true;
                        todo.push(j);
                    }
                }
            }
            let q = p[s];
            if (0..n).all(|j| !seen[j] || p[j] == q) {
                *slot = Some(q);
            }
        }
        StackModel {
            p: p.to_vec(),
            cum_k: k.iter().map(|r| cumulative(r)).collect(),
            cum_eta: cumulative(sys.eta()),
            absorbed,
        }
    }

    pub fn n_states(&self) -> usize {
        self.p.len()
    }

    #[inline]
    pub fn strength(&self, state: usize) -> f64 {
        self.p[state]
    }

    pub fn strengths(&self) -> &[f64] {
        &self.p
    }

    /// Strength shared by every state reachable from `state`, if there is one.
    #[inline]
    pub fn absorbed(&self, state: usize) -> Option<f64> {
        self.absorbed[state]
    }

    #[inline]
    pub fn initial(&self, rng: &mut CounterRng) -> usize {
        pick(&self.cum_eta, rng.uniform())
    }

    #[inline]
    pub fn step(&self, state: usize, rng: &mut CounterRng) -> usize {
        pick(&self.cum_k[state], rng.uniform())
    }
}

/// Cookie stack of one site.
#[derive(Debug, Clone)]
pub struct SiteStack {
    rng: CounterRng,
    state: usize,
    visits: u64,
}

impl SiteStack {
    pub fn new(model: &StackModel, key: u64) -> Self {
        let mut rng = CounterRng::new(key);
        let state = model.initial(&mut rng);
        SiteStack { rng, state, visits: 0 }
    }

    /// Type of the next cookie to be consumed.
    pub fn state(&self) -> usize {
        self.state
    }

    pub fn visits(&self) -> u64 {
        self.visits
    }

    /// Consume one cookie: returns the coin uniform and the cookie's type.
    #[inline]
    pub fn raw_trial(&mut self, model: &StackModel) -> (f64, usize) {
        let ty = self.state;
        let u = self.rng.uniform();
        self.state = model.step(ty, &mut self.rng);
        self.visits += 1;
        (u, ty)
    }

    /// Consume one cookie; `true` is a success (step right).
    #[inline]
    pub fn trial(&mut self, model: &StackModel) -> bool {
        let (u, ty) = self.raw_trial(model);
        u < model.strength(ty)
    }

    /// Successes before the `m`-th failure, trial by trial.
    pub fn successes_before_failures(&mut self, model: &StackModel, m: u64) -> u64 {
        let mut fails = 0;
        let mut succ = 0;
        while fails < m {
            if self.trial(model) {
                succ += 1;
            } else {
                fails += 1;
            }
        }
        succ
    }

    /// Failures before the `m`-th success, trial by trial.
    pub fn failures_before_successes(&mut self, model: &StackModel, m: u64) -> u64 {
        let mut succ = 0;
        let mut fails = 0;
        while succ < m {
            if self.trial(model) {
                succ += 1;
            } else {
                fails += 1;
            }
        }
        fails
    }
}

/// Number of successes before the `k`-th failure of i.i.d. Bernoulli(q) trials,
/// drawn as a Poisson mixture over `Gamma(k, q / (1 - q))`.
pub fn negative_binomial(k: u64, q: f64, rng: &mut CounterRng) -> u64 {
    if k == 0 {
        return 0;
    }
    let scale = q / (1.0 - q);
    let g = Gamma::new(k as f64, scale).expect("valid gamma parameters");
    let lam: f64 = g.sample(rng);
    if lam <= 0.0 {
        return 0;
    }
    let pois = Poisson::new(lam).expect("valid poisson mean");
    let x: f64 = pois.sample(rng);
    x as u64
}

/// Which count a generation asks for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Count {
    /// Successes before the `m`-th failure (forward process).
    SuccessesBeforeFailures,
    /// Failures before the `m`-th success (backward process).
    FailuresBeforeSuccesses,
}

/// One generation on a fresh stack keyed by `key`. With `fast`, once the chain
/// is absorbed in a constant-strength region and more than [`FAST_PATH_MIN`]
/// events remain, the rest is a single negative-binomial draw.
pub fn generation(model: &StackModel, key: u64, m: u64, count: Count, fast: bool) -> u64 {
    let mut stack = SiteStack::new(model, key);
    let mut target = 0u64;
    let mut other = 0u64;
    while target < m {
        if fast && m - target > FAST_PATH_MIN {
            if let Some(q) = model.absorbed(stack.state) {
                let rest = m - target;
                let extra = match count {
                    Count::SuccessesBeforeFailures => negative_binomial(rest, q, &mut stack.rng),
                    Count::FailuresBeforeSuccesses => negative_binomial(rest, 1.0 - q, &mut stack.rng),
                };
                return other + extra;
            }
        }
        let success = stack.trial(model);
        let hit = match count {
            Count::SuccessesBeforeFailures => !success,
            Count::FailuresBeforeSuccesses => success,
        };
        if hit {
            target += 1;
        } else {
            other += 1;
        }
    }
    other
}
