//! Goodness of fit of the standardized hitting time `T_n` to its limit law.

use rayon::prelude::*;
use serde::Serialize;

use super::centering::{centering_functions, MIN_REGEN_PAIRS};
use super::ks::{ks_one_sample, ks_two_sample_below, normal_cdf};
use super::report::{mean_se, EstimateReport};
use super::speed::regeneration_pairs;
use super::stable::{fit_stable, rescale_reference, stable_reference};
use crate::env_model::CookieSystem;
use crate::error::{Error, Result};
use crate::parameters::deltas;
use crate::regimes::{LimitCase, RegimeReport};
use crate::rng::substream;
use crate::simulators::stack::StackModel;
use crate::simulators::walk::{simulate_walk, WalkConfig};

pub const KS_SPECIFIED: f64 = 0.05;
pub const KS_FITTED: f64 = 0.07;

#[derive(Debug, Clone, Serialize)]
pub struct LimitOptions {
    /// Walks still short of `n` after `cap_factor * n^{max(1, 2/delta)}`
    /// steps are censored.
    pub cap_factor: f64,
    pub reference_samples: usize,
    /// Regeneration pairs for the `delta = 2` centering.
    pub regen_pairs: usize,
}

impl Default for LimitOptions {
    fn default() -> Self {
        LimitOptions { cap_factor: 1000.0, reference_samples: 100_000, regen_pairs: MIN_REGEN_PAIRS }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LimitReport {
    pub case: String,
    pub template: String,
    pub delta: f64,
    pub n: u64,
    pub replicas: usize,
    pub censored: usize,
    pub step_cap: u64,
    pub ks: f64,
    pub threshold: f64,
    pub pass: bool,
    pub v_hat: Option<f64>,
    pub scale: Option<f64>,
    pub b_hat: Option<f64>,
    pub location: Option<f64>,
    pub xi_hat: Option<f64>,
}

impl LimitReport {
    pub fn report(&self, seed: u64) -> EstimateReport {
        EstimateReport::new("limit_law", &format!("KS {}", self.case), self.ks, 0.0, self.replicas, seed)
            .below(self.threshold)
    }
}

/// `T_n` for `replicas` walks; `None` when censored at `cap`.
pub fn hitting_times(model: &StackModel, n: u64, replicas: usize, cap: u64, seed: u64) -> Vec<Option<u64>> {
    let cfg = WalkConfig { horizon: cap, targets: vec![n], stop_at_last_target: true, ..Default::default() };
    (0..replicas as u64)
        .into_par_iter()
        .map(|i| simulate_walk(model, substream(seed, i), &cfg).hitting_time(n))
        .collect()
}

pub fn limit_law_check(
    sys: &CookieSystem,
    regime: &RegimeReport,
    n: u64,
    replicas: usize,
    seed: u64,
    opts: &LimitOptions,
) -> Result<LimitReport> {
    let (d, dt) = deltas(sys)?;
    if (d - regime.delta).abs() > 1e-9 * d.abs().max(1.0) || (dt - regime.delta_tilde).abs() > 1e-9 * dt.abs().max(1.0) {
        return Err(Error::RegimeMismatch("regime report does not belong to this system".into()));
    }
    let (sys, case, delta) = match &regime.limit_case {
        LimitCase::NoneRecurrent => return Err(Error::RegimeMismatch("recurrent walk has no hitting-time limit".into())),
        LimitCase::MirrorOf(inner) => (sys.mirrored(), (**inner).clone(), dt),
        other => (sys.clone(), other.clone(), d),
    };
    if replicas < 20 || n == 0 {
        return Err(Error::InvalidArgument("need n >= 1 and at least 20 replicas".into()));
    }
    let model = StackModel::new(&sys);
    let nf = n as f64;
    let power = match case {
        LimitCase::Stable12 | LimitCase::Stable24 => 2.0 / delta,
        _ => 1.0,
    };
    let cap_f = (opts.cap_factor * nf.powf(power.max(1.0))).min(u64::MAX as f64 / 2.0);
    let cap = cap_f as u64;
    let times = hitting_times(&model, n, replicas, cap, substream(seed, 0));
    let censored = times.iter().filter(|t| t.is_none()).count();
    let mut rep = LimitReport {
        case: case.label(),
        template: String::new(),
        delta,
        n,
        replicas,
        censored,
        step_cap: cap,
        ks: f64::NAN,
        threshold: KS_FITTED,
        pass: false,
        v_hat: None,
        scale: None,
        b_hat: None,
        location: None,
        xi_hat: None,
    };
    // censored times sit at +infinity; they only enter through the mass below the cap
    let t: Vec<f64> = times.iter().map(|t| t.map_or(f64::INFINITY, |v| v as f64)).collect();
    match case {
        LimitCase::NonCriticalGaussian | LimitCase::GaussianGt4 | LimitCase::GaussianLogAt4 => {
            if censored > 0 {
                return Err(Error::InvalidArgument(format!("{censored} walks censored in a Gaussian case")));
            }
            let (m, _) = mean_se(&t);
            let sd = (t.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (t.len() as f64 - 1.0)).sqrt();
            rep.template = if case == LimitCase::GaussianLogAt4 {
                "(T_n - n/v) / sqrt(n log n)".into()
            } else {
                "(T_n - n/v) / sqrt(n)".into()
            };
            rep.v_hat = Some(nf / m);
            rep.scale = Some(sd);
            rep.threshold = KS_SPECIFIED;
            rep.ks = ks_one_sample(&t, |x| normal_cdf((x - m) / sd));
        }
        LimitCase::Stable12 | LimitCase::Stable24 | LimitCase::Stable1At2 => {
            let alpha = if case == LimitCase::Stable1At2 { 1.0 } else { delta / 2.0 };
            let unit = stable_reference(alpha, 1.0, opts.reference_samples, substream(seed, 1))?;
            let (x, cap_x): (Vec<f64>, f64) = match case {
                LimitCase::Stable12 => {
                    rep.template = "T_n / n^(2/delta)".into();
                    let s = nf.powf(power);
                    (t.iter().map(|v| v / s).collect(), cap_f / s)
                }
                LimitCase::Stable24 => {
                    if censored > 0 {
                        return Err(Error::InvalidArgument(format!("{censored} walks censored with finite-mean T_n")));
                    }
                    rep.template = "(T_n - n/v) / n^(2/delta)".into();
                    let (m, _) = mean_se(&t);
                    rep.v_hat = Some(nf / m);
                    let s = nf.powf(power);
                    (t.iter().map(|v| (v - m) / s).collect(), f64::INFINITY)
                }
                _ => {
                    rep.template = "(T_n - n D(n)) / n".into();
                    let (pairs, _) = regeneration_pairs(&model, 64, opts.regen_pairs, substream(seed, 2));
                    let c = centering_functions(&pairs)?;
                    let shift = nf * c.d_hat(nf);
                    ((t.iter().map(|v| (v - shift) / nf).collect()), (cap_f - shift) / nf)
                }
            };
            let fit = fit_stable(&x, &unit)?;
            rep.b_hat = Some(fit.b);
            rep.location = Some(fit.location);
            if case == LimitCase::Stable1At2 {
                rep.xi_hat = Some(-fit.location);
            }
            rep.ks = ks_two_sample_below(&x, &rescale_reference(&unit, &fit), cap_x);
        }
        LimitCase::NoneRecurrent | LimitCase::MirrorOf(_) => unreachable!(),
    }
    rep.pass = rep.ks < rep.threshold;
    Ok(rep)
}
