//! Criticality parameter from single-site excursion counts.
//!
//! `E_0^n` is the number of successes before the `n`-th failure of one
//! site's stream; `rho = E[E_0^n] - n` and `nu = Var(E_0^n) / n` for large
//! `n`, and `delta = 2 rho / nu`.

use rayon::prelude::*;
use serde::Serialize;

use super::report::{central_moments, EstimateReport};
use crate::env_model::CookieSystem;
use crate::error::{Error, Result};
use crate::rng::substream;
use crate::simulators::stack::{SiteStack, StackModel};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExcursionDelta {
    pub n: u64,
    pub paths: usize,
    pub rho_hat: f64,
    pub rho_se: f64,
    pub nu_hat: f64,
    pub nu_se: f64,
    pub delta_hat: f64,
    pub delta_se: f64,
}

impl ExcursionDelta {
    /// Pass iff within `k` standard errors of `target`.
    pub fn report(&self, seed: u64, target: f64, k: f64) -> EstimateReport {
        EstimateReport::new("excursion_delta", "2 rho_hat / nu_hat", self.delta_hat, self.delta_se, self.paths, seed)
            .against(target, k * self.delta_se)
    }
}

pub fn excursion_delta(sys: &CookieSystem, n_downcrossings: u64, paths: usize, seed: u64) -> Result<ExcursionDelta> {
    if n_downcrossings == 0 || paths < 2 {
        return Err(Error::InvalidArgument("need n >= 1 and at least two paths".into()));
    }
    let model = StackModel::new(sys);
    let n = n_downcrossings;
    let xs: Vec<f64> = (0..paths as u64)
        .into_par_iter()
        .map(|i| SiteStack::new(&model, substream(seed, i)).successes_before_failures(&model, n) as f64)
        .collect();
    let k = paths as f64;
    let nf = n as f64;
    let (mean, m2, m3, m4) = central_moments(&xs);
    let rho = mean - nf;
    let nu = m2 / nf;
    // delta method on (mean, variance)
    let v_mean = m2 / k;
    let v_var = (m4 - m2 * m2) / k / (nf * nf);
    let cov = m3 / k / nf;
    let (da, db) = (2.0 / nu, -2.0 * rho / (nu * nu));
    let v_delta = da * da * v_mean + db * db * v_var + 2.0 * da * db * cov;
    Ok(ExcursionDelta {
        n,
        paths,
        rho_hat: rho,
        rho_se: v_mean.sqrt(),
        nu_hat: nu,
        nu_se: v_var.sqrt(),
        delta_hat: 2.0 * rho / nu,
        delta_se: v_delta.max(0.0).sqrt(),
    })
}
