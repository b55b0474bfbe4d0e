//! Power-law tail exponents from censored samples.

use rayon::prelude::*;
use serde::Serialize;

use super::report::EstimateReport;
use crate::error::{Error, Result};
use crate::rng::{substream, CounterRng};
use crate::simulators::blp::Lifetime;

pub const BOOTSTRAP_RESAMPLES: usize = 200;

/// `censored`: the true value is known only to exceed `value`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Observation {
    pub value: f64,
    pub censored: bool,
}

impl Observation {
    pub fn exact(value: f64) -> Self {
        Observation { value, censored: false }
    }

    pub fn lifetime(l: Lifetime) -> Self {
        Observation { value: l.value() as f64, censored: l.is_censored() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TailMethod {
    SurvivalRegression,
    Hill,
}

impl TailMethod {
    pub fn name(self) -> &'static str {
        match self {
            TailMethod::SurvivalRegression => "SurvivalRegression",
            TailMethod::Hill => "Hill",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailEstimate {
    /// `a` in `P(X > x) ~ C x^{-a}`.
    pub exponent: f64,
    pub stderr: f64,
    pub fit_window: (f64, f64),
    pub censored_fraction: f64,
    pub method: TailMethod,
    pub n_samples: usize,
    /// Dyadic points (regression) or exceedances (Hill) used.
    pub points: usize,
}

impl TailEstimate {
    pub fn report(&self, name: &str, seed: u64, target: f64, tolerance: f64) -> EstimateReport {
        EstimateReport::new(name, self.method.name(), self.exponent, self.stderr, self.n_samples, seed)
            .with_window(self.fit_window.0, self.fit_window.1)
            .against(target, tolerance)
    }
}

/// Observations sorted by value, events before censorings at ties.
fn sort_obs(obs: &[Observation]) -> Vec<Observation> {
    let mut v = obs.to_vec();
    v.sort_by(|a, b| a.value.total_cmp(&b.value).then(a.censored.cmp(&b.censored)));
    v
}

/// Weighted Kaplan-Meier `P(X > t)` at increasing `at`, on sorted observations.
fn km_sorted(obs: &[Observation], w: &[u32], at: &[f64]) -> Vec<f64> {
    let mut at_risk: f64 = w.iter().map(|&x| x as f64).sum();
    let mut s = 1.0;
    let mut out = Vec::with_capacity(at.len());
    let mut i = 0;
    for &t in at {
        while i < obs.len() && obs[i].value <= t {
            let v = obs[i].value;
            let mut d = 0.0;
            let mut c = 0.0;
            while i < obs.len() && obs[i].value == v {
                if obs[i].censored {
                    c += w[i] as f64;
                } else {
                    d += w[i] as f64;
                }
                i += 1;
            }
            if d > 0.0 && at_risk > 0.0 {
                s *= 1.0 - d / at_risk;
            }
            at_risk -= d + c;
        }
        out.push(s);
    }
    out
}

/// Kaplan-Meier estimate of `P(X > t)` at the increasing points `at`.
pub fn kaplan_meier(obs: &[Observation], at: &[f64]) -> Vec<f64> {
    let sorted = sort_obs(obs);
    km_sorted(&sorted, &vec![1; sorted.len()], at)
}

/// Powers of two inside `[lo, hi]`.
pub fn dyadic_points(lo: f64, hi: f64) -> Vec<f64> {
    let mut k = lo.max(1.0).log2().ceil() as i32;
    let mut v = Vec::new();
    while 2f64.powi(k) <= hi {
        v.push(2f64.powi(k));
        k += 1;
    }
    v
}

/// Least-squares slope of `y` on `x`.
pub fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

fn fit(sorted: &[Observation], w: &[u32], method: TailMethod, lo: f64, hi: f64) -> Result<(f64, usize)> {
    match method {
        TailMethod::SurvivalRegression => {
            let pts = dyadic_points(lo, hi);
            let s = km_sorted(sorted, w, &pts);
            let (x, y): (Vec<f64>, Vec<f64>) =
                pts.iter().zip(&s).filter(|(_, &s)| s > 0.0).map(|(t, s)| (t.ln(), s.ln())).unzip();
            if x.len() < 4 {
                return Err(Error::WindowTooNarrow(x.len()));
            }
            Ok((-ols_slope(&x, &y), x.len()))
        }
        TailMethod::Hill => {
            let mut k = 0.0;
            let mut sum = 0.0;
            let mut count = 0;
            for (o, &wi) in sorted.iter().zip(w) {
                if !o.censored && o.value > lo && wi > 0 {
                    k += wi as f64;
                    sum += wi as f64 * (o.value / lo).ln();
                    count += 1;
                }
            }
            if count == 0 {
                return Err(Error::AllCensored);
            }
            Ok((k / sum, count))
        }
    }
}

/// Tail exponent over `window = (n_min, n_max)`, with a bootstrap standard
/// error from [`BOOTSTRAP_RESAMPLES`] resamples keyed by `seed`.
pub fn tail_exponent(obs: &[Observation], method: TailMethod, window: (f64, f64), seed: u64) -> Result<TailEstimate> {
    if obs.iter().all(|o| o.censored) {
        return Err(Error::AllCensored);
    }
    let (lo, hi) = window;
    if method == TailMethod::SurvivalRegression {
        let n = dyadic_points(lo, hi).len();
        if n < 4 {
            return Err(Error::WindowTooNarrow(n));
        }
    }
    let sorted = sort_obs(obs);
    let n = sorted.len();
    let (exponent, points) = fit(&sorted, &vec![1; n], method, lo, hi)?;
    let boot: Vec<f64> = (0..BOOTSTRAP_RESAMPLES as u64)
        .into_par_iter()
        .filter_map(|b| {
            let mut rng = CounterRng::new(substream(seed, b));
            let mut w = vec![0u32; n];
            for _ in 0..n {
                w[rng.below(n)] += 1;
            }
            fit(&sorted, &w, method, lo, hi).ok().map(|r| r.0)
        })
        .collect();
    let m = boot.iter().sum::<f64>() / boot.len() as f64;
    let sd = (boot.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (boot.len() as f64 - 1.0)).sqrt();
    Ok(TailEstimate {
        exponent,
        stderr: sd,
        fit_window: window,
        censored_fraction: obs.iter().filter(|o| o.censored).count() as f64 / n as f64,
        method,
        n_samples: n,
        points,
    })
}
