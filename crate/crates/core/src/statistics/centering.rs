//! Plug-in centering for the `delta = 2` hitting-time limit:
//! `D(n) = xi + (2 / rbar) m(n / rbar)` with `m(t) = E[W_1 1{W_1 <= t}]`,
//! and its inverse `Gamma(t) = inf{s > 0 : s D(s) >= t}`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::simulators::blp::RegenPair;

pub const MIN_REGEN_PAIRS: usize = 100_000;

#[derive(Debug, Clone, Serialize)]
pub struct CenteringFns {
    #[serde(skip)]
    w_sorted: Vec<f64>,
    #[serde(skip)]
    prefix: Vec<f64>,
    /// Mean regeneration duration.
    pub rbar: f64,
    pub xi: f64,
    pub n_pairs: usize,
}

impl CenteringFns {
    /// From progenies `w` and the mean duration `rbar`.
    pub fn from_progeny(w: &[f64], rbar: f64) -> Self {
        let mut w_sorted = w.to_vec();
        w_sorted.sort_by(f64::total_cmp);
        let mut prefix = Vec::with_capacity(w.len() + 1);
        prefix.push(0.0);
        let mut acc = 0.0;
        for x in &w_sorted {
            acc += x;
            prefix.push(acc);
        }
        CenteringFns { w_sorted, prefix, rbar, xi: 0.0, n_pairs: w.len() }
    }

    pub fn with_xi(mut self, xi: f64) -> Self {
        self.xi = xi;
        self
    }

    /// Empirical truncated mean `mean(W 1{W <= t})`.
    pub fn m_hat(&self, t: f64) -> f64 {
        let k = self.w_sorted.partition_point(|&w| w <= t);
        self.prefix[k] / self.w_sorted.len() as f64
    }

    pub fn d_hat(&self, n: f64) -> f64 {
        self.xi + 2.0 / self.rbar * self.m_hat(n / self.rbar)
    }

    /// `inf{s > 0 : s D(s) >= t}` by bisection; `None` if `s D(s)` never
    /// reaches `t` below `1e300`.
    pub fn gamma_hat(&self, t: f64) -> Option<f64> {
        let f = |s: f64| s * self.d_hat(s);
        let mut hi = 1.0;
        while f(hi) < t {
            hi *= 2.0;
            if hi > 1e300 {
                return None;
            }
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) >= t {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= 1e-12 * hi {
                break;
            }
        }
        Some(hi)
    }
}

/// Centering functions from at least [`MIN_REGEN_PAIRS`] regeneration pairs.
pub fn centering_functions(pairs: &[RegenPair]) -> Result<CenteringFns> {
    if pairs.len() < MIN_REGEN_PAIRS {
        return Err(Error::InsufficientPairs { got: pairs.len(), need: MIN_REGEN_PAIRS });
    }
    let w: Vec<f64> = pairs.iter().map(|p| p.progeny as f64).collect();
    let rbar = pairs.iter().map(|p| p.duration as f64).sum::<f64>() / pairs.len() as f64;
    Ok(CenteringFns::from_progeny(&w, rbar))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::CounterRng;

    fn pareto_one(n: usize) -> Vec<RegenPair> {
        let mut rng = CounterRng::new(21);
        (0..n)
            .map(|_| RegenPair { duration: 1 + rng.below(3) as u64, progeny: (1.0 / rng.open_uniform()).floor() as u64 })
            .collect()
    }

    #[test]
    fn truncated_mean_is_logarithmic() {
        let c = centering_functions(&pareto_one(MIN_REGEN_PAIRS * 4)).unwrap();
        // floor of Pareto(1): m(t) = sum_{k <= t} k (1/k - 1/(k+1)) ~ ln t + 0.5772 - 1
        for t in [1e2, 1e3] {
            let want = (t as f64).ln() + 0.5772156649 - 1.0;
            assert!((c.m_hat(t) - want).abs() < 0.15, "t {t}: {} vs {want}", c.m_hat(t));
        }
        let mut last = 0.0;
        for k in 0..200 {
            let m = c.m_hat(k as f64 * 50.0);
            assert!(m >= last);
            last = m;
        }
    }

    #[test]
    fn gamma_inverts() {
        let c = centering_functions(&pareto_one(MIN_REGEN_PAIRS)).unwrap().with_xi(0.3);
        for t in [1e3, 1e4, 1e5] {
            let g = c.gamma_hat(t).unwrap();
            assert!(((g * c.d_hat(g) - t) / g).abs() < 0.05, "t {t}");
        }
    }

    #[test]
    fn too_few_pairs() {
        assert_eq!(
            centering_functions(&pareto_one(10)).unwrap_err(),
            Error::InsufficientPairs { got: 10, need: MIN_REGEN_PAIRS }
        );
    }
}
