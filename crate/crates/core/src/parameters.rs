//! Closed-form parameters of the forward and backward branching-like processes.
//!
//! Notation: `A = D_p K`, `B = D_{1-p} K`.
//!
//! * `Pi = (I - A)^{-1} B`: type of the next cookie after each failure.
//! * `pi = (1 + lambda) mu (I - A)`: stationary law of `Pi`.
//! * `g = (I - A)^{-1} p`: mean number of successes before the first failure.
//! * `r = (I - Pi + 1 pi)^{-1} g - lambda 1`: intercept of `E[U_1 | U_0 = n] - lambda n`.
//! * `nu = (1 + lambda)(lambda + 2 mu A r)`: slope of `Var(U_1 | U_0 = n) / n`.
//! * `delta = 2 eta.r / nu`.
//!
//! Tilde quantities are the same pipeline applied to `1 - p`.

use serde::{Deserialize, Serialize};

use crate::env_model::{self, CookieSystem, StationaryLaw};
use crate::error::{Error, Result};
use crate::linalg::{self, Mat, Vector};
use crate::rng::CounterRng;

/// Residual allowed for a single linear identity.
pub const LINEAR_TOL: f64 = 1e-10;
/// Residual allowed for identities composed from several solves.
pub const IDENTITY_TOL: f64 = 1e-9;
/// Agreement required between the two routes to the coupled delta, relative
/// to `max(1, |delta_hat|)`.
pub const COUPLED_TOL: f64 = 1e-8;

/// Every closed-form quantity of a model.
#[allow(non_snake_case)]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivedParams {
    pub mu: Vec<f64>,
    pub pbar: f64,
    pub lambda: f64,
    pub Pi: Vec<Vec<f64>>,
    pub pi: Vec<f64>,
    pub pi_tilde: Vec<f64>,
    pub g: Vec<f64>,
    pub r: Vec<f64>,
    pub r_tilde: Vec<f64>,
    pub nu: f64,
    pub nu_tilde: f64,
    pub delta: f64,
    pub delta_tilde: f64,
}

/// One-sided pipeline output (either `p` or `1 - p`).
#[derive(Debug, Clone)]
pub struct SideParams {
    pub mu: Vector,
    pub pbar: f64,
    pub lambda: f64,
    pub pi_matrix: Mat,
    pub pi: Vector,
    pub g: Vector,
    pub r: Vector,
    pub nu: f64,
    pub delta: f64,
}

struct Pieces {
    k: Mat,
    a: Mat,
    b: Mat,
    i_minus_a: Mat,
    p: Vector,
    eta: Vector,
    mu: Vector,
    pbar: f64,
    lambda: f64,
}

fn pieces(sys: &CookieSystem) -> Result<Pieces> {
    let law = env_model::stationary_distribution(sys)?;
    let n = sys.n_states();
    let k = sys.k_matrix();
    let p = sys.p_vector();
    let a = linalg::diag(sys.p()) * &k;
    let q: Vec<f64> = sys.p().iter().map(|x| 1.0 - x).collect();
    let b = linalg::diag(&q) * &k;
    Ok(Pieces {
        i_minus_a: Mat::identity(n, n) - &a,
        k,
        a,
        b,
        p,
        eta: sys.eta_vector(),
        mu: linalg::vector(&law.mu),
        pbar: law.pbar,
        lambda: law.lambda,
    })
}

/// `Pi = (I - D_p K)^{-1} D_{1-p} K`.
pub fn run_boundary_chain(sys: &CookieSystem) -> Result<Mat> {
    let pc = pieces(sys)?;
    linalg::solve_mat(&pc.i_minus_a, &pc.b, "run-boundary chain")
}

/// Spectral radius of `D_p K`; strictly below 1 for every elliptic system.
pub fn dpk_spectral_radius(sys: &CookieSystem) -> f64 {
    linalg::spectral_radius(&(linalg::diag(sys.p()) * sys.k_matrix()))
}

fn pi_of(mu: &Vector, i_minus_a: &Mat, lambda: f64) -> Vector {
    linalg::row_times(mu, i_minus_a) * (1.0 + lambda)
}

/// `(pi, pi_tilde)`.
pub fn pi_stationary(sys: &CookieSystem, law: &StationaryLaw) -> (Vector, Vector) {
    let n = sys.n_states();
    let k = sys.k_matrix();
    let mu = linalg::vector(&law.mu);
    let q: Vec<f64> = sys.p().iter().map(|x| 1.0 - x).collect();
    let pi = pi_of(&mu, &(Mat::identity(n, n) - linalg::diag(sys.p()) * &k), law.lambda);
    let lambda_t = (1.0 - law.pbar) / law.pbar;
    let pi_t = pi_of(&mu, &(Mat::identity(n, n) - linalg::diag(&q) * &k), lambda_t);
    (pi, pi_t)
}

/// `g = (I - D_p K)^{-1} p`.
pub fn mean_run_vector(sys: &CookieSystem) -> Result<Vector> {
    let pc = pieces(sys)?;
    linalg::solve(&pc.i_minus_a, &pc.p, "mean run vector")
}

/// `r` through the fundamental matrix of `Pi`.
pub fn drift_vector(sys: &CookieSystem) -> Result<Vector> {
    Ok(side(sys)?.r)
}

/// `r = (I - K + (1-p) mu D_{1-p} K / (1 - pbar))^{-1} p - lambda 1`.
pub fn drift_vector_direct(sys: &CookieSystem) -> Result<Vector> {
    let pc = pieces(sys)?;
    let n = sys.n_states();
    let q = Vector::from_element(n, 1.0) - &pc.p;
    let row = linalg::row_times(&pc.mu, &pc.b) / (1.0 - pc.pbar);
    let m = Mat::identity(n, n) - &pc.k + &q * row.transpose();
    let x = linalg::solve(&m, &pc.p, "direct drift formula")?;
    Ok(x.add_scalar(-pc.lambda))
}

/// Partial sums `sum_{m < terms} (Pi^m - 1 pi) g`; they converge to `r`.
pub fn drift_series(sys: &CookieSystem, terms: usize) -> Result<Vector> {
    let s = side(sys)?;
    let n = sys.n_states();
    let lam = s.pi.dot(&s.g);
    let mut acc = Vector::zeros(n);
    let mut term = s.g.clone();
    for _ in 0..terms {
        acc += term.add_scalar(-lam);
        term = &s.pi_matrix * term;
    }
    Ok(acc)
}

/// `nu` as `Var_pi(G_1) + 2 sum_k Cov_pi(G_1, G_{1+k})` with the moment sums
/// in closed form: `E[G^2 | i] = (2 A (I-A)^{-2} 1 - g)_i` and
/// `sum_n n P(G_1 = n, next = j | i) = (A (I-A)^{-2} B)_{ij}`.
pub fn variance_param_covariance(sys: &CookieSystem) -> Result<f64> {
    let pc = pieces(sys)?;
    let s = side(sys)?;
    let n = sys.n_states();
    let ones = Vector::from_element(n, 1.0);
    let inv_ones = linalg::solve(&pc.i_minus_a, &ones, "covariance route")?;
    let inv2_ones = linalg::solve(&pc.i_minus_a, &inv_ones, "covariance route")?;
    let second = &pc.a * inv2_ones * 2.0 - &s.g;
    let var = s.pi.dot(&second) - s.lambda * s.lambda;
    let br = &pc.b * &s.r;
    let y = linalg::solve(&pc.i_minus_a, &br, "covariance route")?;
    let y = linalg::solve(&pc.i_minus_a, &y, "covariance route")?;
    let cov = s.pi.dot(&(&pc.a * y));
    Ok(var + 2.0 * cov)
}

/// `nu = (1 + lambda)(lambda + 2 mu D_p K r)`.
pub fn variance_param(sys: &CookieSystem) -> Result<f64> {
    Ok(side(sys)?.nu)
}

/// `(delta, delta_tilde)`.
pub fn deltas(sys: &CookieSystem) -> Result<(f64, f64)> {
    let d = side(sys)?.delta;
    let dt = side(&sys.mirrored())?.delta;
    Ok((d, dt))
}

/// One pass of the pipeline for the strengths stored in `sys`.
pub fn side(sys: &CookieSystem) -> Result<SideParams> {
    let pc = pieces(sys)?;
    let n = sys.n_states();
    let pi_matrix = linalg::solve_mat(&pc.i_minus_a, &pc.b, "run-boundary chain")?;
    let pi = pi_of(&pc.mu, &pc.i_minus_a, pc.lambda);
    let g = linalg::solve(&pc.i_minus_a, &pc.p, "mean run vector")?;
    let ones = Vector::from_element(n, 1.0);
    let fund = Mat::identity(n, n) - &pi_matrix + &ones * pi.transpose();
    let r = linalg::solve(&fund, &g, "fundamental matrix")?.add_scalar(-pc.lambda);
    let mu_a = linalg::row_times(&pc.mu, &pc.a);
    let nu = (1.0 + pc.lambda) * (pc.lambda + 2.0 * mu_a.dot(&r));
    if !nu.is_finite() {
        return Err(Error::NonFinite(format!("nu = {nu}")));
    }
    if nu <= 0.0 {
        return Err(Error::NonPositiveVariance(nu));
    }
    let delta = 2.0 * pc.eta.dot(&r) / nu;
    Ok(SideParams {
        mu: pc.mu,
        pbar: pc.pbar,
        lambda: pc.lambda,
        pi_matrix,
        pi,
        g,
        r,
        nu,
        delta,
    })
}

/// Full pipeline on `p` and on `1 - p`.
pub fn derive(sys: &CookieSystem) -> Result<DerivedParams> {
    let s = side(sys)?;
    let t = side(&sys.mirrored())?;
    let v = |x: &Vector| x.iter().copied().collect::<Vec<f64>>();
    Ok(DerivedParams {
        mu: v(&s.mu),
        pbar: s.pbar,
        lambda: s.lambda,
        Pi: linalg::to_rows(&s.pi_matrix),
        pi: v(&s.pi),
        pi_tilde: v(&t.pi),
        g: v(&s.g),
        r: v(&s.r),
        r_tilde: v(&t.r),
        nu: s.nu,
        nu_tilde: t.nu,
        delta: s.delta,
        delta_tilde: t.delta,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub name: String,
    /// `None` when the identity only holds for critical systems and this one is not.
    pub residual: Option<f64>,
    pub skipped: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub critical: bool,
    pub tolerance: f64,
    pub checks: Vec<IdentityCheck>,
    pub pass: bool,
}

impl IdentityReport {
    pub fn residual(&self, name: &str) -> Option<f64> {
        self.checks.iter().find(|c| c.name == name).and_then(|c| c.residual)
    }

    pub fn max_residual(&self) -> f64 {
        self.checks.iter().filter_map(|c| c.residual).fold(0.0, f64::max)
    }
}

/// Residuals of the identities tying the pipeline together.
///
/// General: `pi Pi = pi`, `Pi 1 = 1`, `pi.g = lambda`, `pi.r = 0`, agreement of
/// the two drift formulas and of the two variance formulas.
/// Critical only: `nu = nu_tilde`, `r + r_tilde = (nu/2 - 1) 1`,
/// `delta + delta_tilde = 1 - 2/nu`, `nu = 2 + 4 mu D_p K r`.
pub fn identity_suite(sys: &CookieSystem, tol_critical: f64) -> Result<IdentityReport> {
    let law = env_model::stationary_distribution(sys)?;
    let critical = env_model::criticality(&law, sys.p(), tol_critical).is_critical;
    let s = side(sys)?;
    let t = side(&sys.mirrored())?;
    let n = sys.n_states();
    let ones = Vector::from_element(n, 1.0);
    let r_direct = drift_vector_direct(sys)?;
    let nu_cov = variance_param_covariance(sys)?;
    let a = linalg::diag(sys.p()) * sys.k_matrix();
    let nu_crit = 2.0 + 4.0 * linalg::row_times(&s.mu, &a).dot(&s.r);

    let mut general = vec![
        ("pi_Pi_stationary", linalg::max_abs(&(linalg::row_times(&s.pi, &s.pi_matrix) - &s.pi))),
        ("Pi_row_sums", linalg::max_abs(&(&s.pi_matrix * &ones - &ones))),
        ("pi_g_lambda", (s.pi.dot(&s.g) - s.lambda).abs()),
        ("pi_r_zero", s.pi.dot(&s.r).abs()),
        ("r_two_formulas", linalg::max_abs(&(&r_direct - &s.r))),
        ("nu_covariance_route", (nu_cov - s.nu).abs()),
    ]
    .into_iter()
    .map(|(name, res)| (name, Some(res)))
    .collect::<Vec<_>>();
    let crit = [
        ("nu_equals_nu_tilde", (s.nu - t.nu).abs()),
        ("r_plus_r_tilde", linalg::max_abs(&(&s.r + &t.r).add_scalar(1.0 - s.nu / 2.0))),
        ("delta_sum", (s.delta + t.delta - (1.0 - 2.0 / s.nu)).abs()),
        ("nu_critical_form", (nu_crit - s.nu).abs()),
    ];
    general.extend(crit.into_iter().map(|(name, res)| (name, critical.then_some(res))));
    let checks: Vec<IdentityCheck> = general
        .into_iter()
        .map(|(name, res)| IdentityCheck {
            name: name.to_string(),
            residual: res,
            skipped: res.is_none(),
            pass: res.is_none_or(|x| x <= IDENTITY_TOL),
        })
        .collect();
    let pass = checks.iter().all(|c| c.pass);
    Ok(IdentityReport { critical, tolerance: IDENTITY_TOL, checks, pass })
}

fn flat_simplex(rng: &mut CounterRng, n: usize) -> Vec<f64> {
    let e: Vec<f64> = (0..n).map(|_| rng.exp1()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}

/// Random critical system: flat-simplex rows of `K` and `eta`, raw strengths
/// uniform on (0.1, 0.9) shifted so that `mu.p = 1/2`, resampled until every
/// strength lies in (0.05, 0.95).
pub fn random_critical_system(rng: &mut CounterRng, n: usize) -> CookieSystem {
    loop {
        let k: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let mut row = flat_simplex(rng, n);
                let s: f64 = row.iter().sum();
                row[n - 1] += 1.0 - s;
                row
            })
            .collect();
        let mut eta = flat_simplex(rng, n);
        let s: f64 = eta.iter().sum();
        eta[n - 1] += 1.0 - s;
        let raw: Vec<f64> = (0..n).map(|_| 0.1 + 0.8 * rng.uniform()).collect();
        let Ok(sys) = env_model::validate_system(k, vec![0.5; n], eta) else {
            continue;
        };
        let Ok(law) = env_model::stationary_distribution(&sys) else {
            continue;
        };
        let shift: f64 = law.mu.iter().zip(&raw).map(|(m, q)| m * q).sum::<f64>() - 0.5;
        let p: Vec<f64> = raw.iter().map(|x| x - shift).collect();
        if p.iter().any(|&x| !(x > 0.05 && x < 0.95)) {
            continue;
        }
        if let Ok(s) = sys.with_strengths(p) {
            return s;
        }
    }
}

/// The 2N-state critical system obtained by running strengths `p1` for a
/// Geometric(eps) number of cookies and `p0` afterwards.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoupledSystem {
    #[serde(rename = "K_hat")]
    pub k_hat: Vec<Vec<f64>>,
    pub p_hat: Vec<f64>,
    pub eta_hat: Vec<f64>,
    pub epsilon: f64,
    /// From the 2N-state pipeline.
    pub delta_hat: f64,
    /// From the series in `K`.
    pub delta_hat_series: f64,
    pub p1: Vec<f64>,
    pub p0: Vec<f64>,
    #[serde(skip)]
    pub base: CookieSystem,
    #[serde(skip)]
    pub system: CookieSystem,
}

impl CoupledSystem {
    /// `|delta_hat - delta_hat_series| / max(1, |delta_hat_series|)`.
    pub fn route_discrepancy(&self) -> f64 {
        (self.delta_hat - self.delta_hat_series).abs() / self.delta_hat_series.abs().max(1.0)
    }
}

fn check_coupling_inputs(p1: &[f64], p0: &[f64], sys: &CookieSystem, tol_critical: f64) -> Result<()> {
    let n = sys.n_states();
    if p1.len() != n || p0.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "p1 has {}, p0 has {}, K is {n}x{n}",
            p1.len(),
            p0.len()
        )));
    }
    if let Some(i) = (0..n).find(|&i| p1[i] < p0[i]) {
        return Err(Error::NotDominating(i));
    }
    let law = env_model::stationary_distribution(sys)?;
    let gap = law.mu.iter().zip(p0).map(|(m, q)| m * q).sum::<f64>() - 0.5;
    if gap.abs() > tol_critical {
        return Err(Error::NotCriticalBase(gap));
    }
    Ok(())
}

/// Number of series terms beyond which the resolvent is used instead.
const SERIES_MAX_TERMS: usize = 1_000_000;

/// `sum_{j>=1} (1-eps)^j K^{j-1} v`, truncated once the remaining geometric
/// tail is below `cutoff`; replaced by `(1-eps)(I - (1-eps) K)^{-1} v` when the
/// truncation point would exceed `SERIES_MAX_TERMS`.
fn geometric_k_series(k: &Mat, v: &Vector, eps: f64, cutoff: f64) -> Result<Vector> {
    let vmax = linalg::max_abs(v);
    if eps >= 1.0 || vmax == 0.0 {
        return Ok(Vector::zeros(v.len()));
    }
    let decay = 1.0 - eps;
    let needed = ((cutoff / vmax).ln() / decay.ln()).ceil();
    if needed > SERIES_MAX_TERMS as f64 {
        let n = v.len();
        let m = Mat::identity(n, n) - k * decay;
        return Ok(linalg::solve(&m, v, "coupled resolvent")? * decay);
    }
    let mut acc = Vector::zeros(v.len());
    let mut term = v.clone();
    let mut w = decay;
    loop {
        let size = w * linalg::max_abs(&term);
        acc += &term * w;
        if size < cutoff {
            break;
        }
        term = k * term;
        w *= decay;
    }
    Ok(acc)
}

/// `delta(p0) + 4 eta.(sum_{j>=1} (1-eps)^j K^{j-1} (p1 - p0)) / nu(p0)`.
pub fn coupled_delta_series(p1: &[f64], p0: &[f64], sys: &CookieSystem, epsilon: f64) -> Result<f64> {
    let base = sys.with_strengths(p0.to_vec())?;
    let s = side(&base)?;
    let v = linalg::vector(p1) - linalg::vector(p0);
    let sum = geometric_k_series(&sys.k_matrix(), &v, epsilon, 1e-14 * s.nu / 4.0)?;
    Ok(s.delta + 4.0 * sys.eta_vector().dot(&sum) / s.nu)
}

/// Build the coupled system and compute its delta both ways.
pub fn coupled_delta(
    p1: &[f64],
    p0: &[f64],
    sys: &CookieSystem,
    epsilon: f64,
    tol_critical: f64,
) -> Result<CoupledSystem> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::InvalidArgument(format!("epsilon = {epsilon} must lie in (0, 1]")));
    }
    check_coupling_inputs(p1, p0, sys, tol_critical)?;
    let n = sys.n_states();
    let k = sys.k();
    let mut k_hat = vec![vec![0.0; 2 * n]; 2 * n];
    for i in 0..n {
        for j in 0..n {
            k_hat[i][j] = (1.0 - epsilon) * k[i][j];
            k_hat[i][n + j] = epsilon * k[i][j];
            k_hat[n + i][n + j] = k[i][j];
        }
    }
    let p_hat: Vec<f64> = p1.iter().chain(p0).copied().collect();
    let eta_hat: Vec<f64> = sys
        .eta()
        .iter()
        .map(|e| (1.0 - epsilon) * e)
        .chain(sys.eta().iter().map(|e| epsilon * e))
        .collect();
    let system = env_model::validate_system(k_hat.clone(), p_hat.clone(), eta_hat.clone())?;
    let delta_hat = side(&system)?.delta;
    let delta_hat_series = coupled_delta_series(p1, p0, sys, epsilon)?;
    Ok(CoupledSystem {
        k_hat,
        p_hat,
        eta_hat,
        epsilon,
        delta_hat,
        delta_hat_series,
        p1: p1.to_vec(),
        p0: p0.to_vec(),
        base: sys.with_strengths(p0.to_vec())?,
        system,
    })
}

/// Lower end of the epsilon search interval.
pub const EPSILON_FLOOR: f64 = 1e-12;

/// Bisection for `eps` with `delta_hat(eps) = target`, using the series route.
pub fn solve_epsilon_for_delta(
    p1: &[f64],
    p0: &[f64],
    sys: &CookieSystem,
    target: f64,
    tol_critical: f64,
) -> Result<f64> {
    check_coupling_inputs(p1, p0, sys, tol_critical)?;
    let f = |e: f64| coupled_delta_series(p1, p0, sys, e);
    let floor = f(1.0)?;
    if target < floor - 1e-12 {
        return Err(Error::TargetBelowRange { target, floor });
    }
    if (target - floor).abs() <= 1e-6 {
        return Ok(1.0);
    }
    if f(EPSILON_FLOOR)? < target {
        return Ok(EPSILON_FLOOR);
    }
    // bisect in log(eps)
    let (mut lo, mut hi) = (EPSILON_FLOOR.ln(), 0.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let d = f(mid.exp())?;
        if (d - target).abs() <= 1e-7 {
            return Ok(mid.exp());
        }
        if d > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    Ok((0.5 * (lo + hi)).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env_model::{build_example, validate_system, ExampleFamily, DEFAULT_TOL_CRITICAL};

    fn geo(alpha: f64, p1: f64) -> CookieSystem {
        build_example(&ExampleFamily::Geometric { alpha, p1 }).unwrap()
    }

    fn two(alpha: f64, p: f64) -> CookieSystem {
        build_example(&ExampleFamily::TwoType { alpha, p }).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn half_strength_one_state() {
        let s = validate_system(vec![vec![1.0]], vec![0.5], vec![1.0]).unwrap();
        let d = derive(&s).unwrap();
        assert!(close(d.Pi[0][0], 1.0, 1e-15));
        assert!(close(d.pi[0], 1.0, 1e-15));
        assert!(close(d.g[0], 1.0, 1e-15));
        assert!(close(d.r[0], 0.0, 1e-15));
        assert!(close(d.nu, 2.0, 1e-15));
        assert_eq!((d.delta, d.delta_tilde), (0.0, 0.0));
    }

    #[test]
    fn half_strength_any_k_gives_unit_g() {
        let s = validate_system(
            vec![vec![0.2, 0.8, 0.0], vec![0.1, 0.3, 0.6], vec![0.5, 0.0, 0.5]],
            vec![0.5; 3],
            vec![1.0, 0.0, 0.0],
        )
        .unwrap();
        let g = mean_run_vector(&s).unwrap();
        assert!(g.iter().all(|x| close(*x, 1.0, 1e-14)));
        assert!(drift_vector(&s).unwrap().iter().all(|x| x.abs() < 1e-13));
    }

    #[test]
    fn constant_strength() {
        let s = build_example(&ExampleFamily::Periodic { p: vec![0.6] }).unwrap();
        let d = derive(&s).unwrap();
        assert!(close(d.g[0], 1.5, 1e-14));
        assert!(close(d.lambda, 1.5, 1e-14));
        assert!(d.r[0].abs() < 1e-14);
        assert!(close(d.nu, 3.75, 1e-13));
        assert!(d.delta.abs() < 1e-14);
    }

    #[test]
    fn geometric_oracle_values() {
        let d = derive(&geo(0.5, 0.75)).unwrap();
        assert!(close(d.r[0], 1.0, 1e-12) && d.r[1].abs() < 1e-12);
        assert!(close(d.nu, 2.0, 1e-12));
        assert!(close(d.delta, 1.0, 1e-12) && close(d.delta_tilde, -1.0, 1e-12));
        assert!(d.pi[0].abs() < 1e-15 && close(d.pi[1], 1.0, 1e-15));
        assert!(close(deltas(&geo(0.25, 0.75)).unwrap().0, 2.0, 1e-12));
        assert!(close(deltas(&geo(0.1, 0.9)).unwrap().0, 8.000000000000004, 1e-12));
        assert!(close(deltas(&geo(0.2, 0.55)).unwrap().0, 0.5, 1e-12));
    }

    #[test]
    fn two_type_oracle_values() {
        let d = derive(&two(0.3, 0.7)).unwrap();
        assert!(close(d.delta, 0.6373626373626372, 1e-12));
        assert!(close(d.delta_tilde, -0.4615384615384617, 1e-12));
        assert!(close(d.nu, 2.4266666666666667, 1e-12));
        assert!(close(d.pi[0], 0.42, 1e-12) && close(d.pi[1], 0.58, 1e-12));
        assert!(close(d.r[0], 0.7733333333333333, 1e-12) && close(d.r[1], -0.56, 1e-12));

        let d = derive(&two(1.0, 0.75)).unwrap();
        assert!(close(d.delta, 1.0 / 6.0, 1e-12) && close(d.delta_tilde, -0.5, 1e-12));
        assert!(close(d.nu, 1.5, 1e-12));
        assert!(close(d.r[0], 0.125, 1e-12) && close(d.r[1], -0.375, 1e-12));

        let d = derive(&two(0.002, 0.9)).unwrap();
        assert!(close(d.delta, 1.12398348554986, 1e-10));
        assert!(close(d.nu, 639.44, 1e-8));
    }

    #[test]
    fn dpk_is_contracting() {
        let mut rng = CounterRng::new(7);
        for n in 2..6 {
            let s = random_critical_system(&mut rng, n);
            assert!(dpk_spectral_radius(&s) < 1.0);
        }
    }

    #[test]
    fn series_converges_to_r() {
        let s = two(0.3, 0.7);
        let r = drift_vector(&s).unwrap();
        let approx = drift_series(&s, 200).unwrap();
        assert!(linalg::max_abs(&(r - approx)) < 1e-12);
    }

    #[test]
    fn identity_suite_flags_noncritical() {
        let s = build_example(&ExampleFamily::Periodic { p: vec![0.6] }).unwrap();
        let rep = identity_suite(&s, DEFAULT_TOL_CRITICAL).unwrap();
        assert!(!rep.critical && rep.pass);
        assert!(rep.checks.iter().filter(|c| c.skipped).count() == 4);
        let rep = identity_suite(&geo(0.25, 0.75), DEFAULT_TOL_CRITICAL).unwrap();
        assert!(rep.critical && rep.pass && rep.checks.iter().all(|c| !c.skipped));
    }

    #[test]
    fn coupled_basics() {
        let base = geo(0.3, 0.5);
        let p0 = vec![0.5, 0.5];
        let p1 = vec![0.7, 0.6];
        let c = coupled_delta(&p1, &p0, &base, 1.0, DEFAULT_TOL_CRITICAL).unwrap();
        assert!(close(c.delta_hat, 0.0, 1e-12) && close(c.delta_hat_series, 0.0, 1e-15));
        let mut last = f64::NEG_INFINITY;
        for k in 1..=6 {
            let c = coupled_delta(&p1, &p0, &base, 10f64.powi(-k), DEFAULT_TOL_CRITICAL).unwrap();
            assert!(c.route_discrepancy() <= COUPLED_TOL, "{c:?}");
            assert!(c.delta_hat > last);
            last = c.delta_hat;
        }
        assert_eq!(
            coupled_delta(&p0, &p1, &base, 0.5, DEFAULT_TOL_CRITICAL).unwrap_err(),
            Error::NotDominating(0)
        );
        assert!(matches!(
            coupled_delta(&[0.8, 0.8], &[0.6, 0.6], &base, 0.5, DEFAULT_TOL_CRITICAL),
            Err(Error::NotCriticalBase(_))
        ));
    }

    #[test]
    fn epsilon_bisection() {
        let base = geo(0.3, 0.5);
        let (p0, p1) = (vec![0.55, 0.5], vec![0.7, 0.6]);
        let floor = coupled_delta_series(&p1, &p0, &base, 1.0).unwrap();
        assert_eq!(solve_epsilon_for_delta(&p1, &p0, &base, floor, 1e-10).unwrap(), 1.0);
        let e = solve_epsilon_for_delta(&p1, &p0, &base, 4.5, 1e-10).unwrap();
        assert!(close(coupled_delta_series(&p1, &p0, &base, e).unwrap(), 4.5, 1e-6));
        assert!(matches!(
            solve_epsilon_for_delta(&p1, &p0, &base, floor - 1.0, 1e-10),
            Err(Error::TargetBelowRange { .. })
        ));
    }
}
