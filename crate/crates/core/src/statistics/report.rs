//! Uniform JSON record emitted by every estimator.

use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateReport {
    pub name: String,
    pub estimate: f64,
    pub stderr: f64,
    pub method: String,
    pub window: Option<(f64, f64)>,
    pub n_samples: usize,
    pub seed: u64,
    pub pass: bool,
    pub target: Option<f64>,
    pub tolerance: Option<f64>,
}

impl EstimateReport {
    pub fn new(name: &str, method: &str, estimate: f64, stderr: f64, n_samples: usize, seed: u64) -> Self {
        EstimateReport {
            name: name.into(),
            estimate,
            stderr,
            method: method.into(),
            window: None,
            n_samples,
            seed,
            pass: true,
            target: None,
            tolerance: None,
        }
    }

    /// Pass iff `|estimate - target| <= tolerance`.
    pub fn against(mut self, target: f64, tolerance: f64) -> Self {
        self.target = Some(target);
        self.tolerance = Some(tolerance);
        self.pass = (self.estimate - target).abs() <= tolerance;
        self
    }

    /// Pass iff `estimate < threshold` (distances).
    pub fn below(mut self, threshold: f64) -> Self {
        self.target = Some(0.0);
        self.tolerance = Some(threshold);
        self.pass = self.estimate < threshold;
        self
    }

    pub fn with_window(mut self, lo: f64, hi: f64) -> Self {
        self.window = Some((lo, hi));
        self
    }
}

/// Sample mean and the standard error of the mean.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

/// Central moments `(mean, m2, m3, m4)` with divisor `n`.
pub fn central_moments(xs: &[f64]) -> (f64, f64, f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
    for x in xs {
        let d = x - m;
        let d2 = d * d;
        a += d2;
        b += d2 * d;
        c += d2 * d2;
    }
    (m, a / n, b / n, c / n)
}

/// Sample quantile by linear interpolation on a sorted slice.
pub fn quantile_sorted(xs: &[f64], q: f64) -> f64 {
    let h = (xs.len() - 1) as f64 * q;
    let i = h.floor() as usize;
    let j = (i + 1).min(xs.len() - 1);
    xs[i] + (h - i as f64) * (xs[j] - xs[i])
}

pub fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moments_of_small_sample() {
        let (m, se) = mean_se(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((se - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
        let (_, m2, m3, m4) = central_moments(&[-1.0, 1.0]);
        assert_eq!((m2, m3, m4), (1.0, 0.0, 1.0));
        assert_eq!(quantile_sorted(&[0.0, 10.0], 0.25), 2.5);
    }

    #[test]
    fn pass_flags() {
        let r = EstimateReport::new("x", "m", 1.05, 0.1, 10, 0).against(1.0, 0.1);
        assert!(r.pass);
        assert!(!EstimateReport::new("x", "m", 0.2, 0.0, 10, 0).below(0.1).pass);
    }
}
