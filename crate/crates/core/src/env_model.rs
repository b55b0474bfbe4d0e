//! Markovian cookie stacks: the model triple `(K, p, eta)`, its validation,
//! the stationary law of the cookie-type chain and the named example families.
//!
//! A cookie stack at a site is a Markov chain `R_1, R_2, ...` on `{0..N-1}` with
//! transition matrix `K` and initial law `eta`; the `j`-th visit to the site
//! steps right with probability `p[R_j]`.

use std::fmt;
use std::str::FromStr;

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Mat, Vector};

/// Tolerance on row sums of `K` and on the total mass of `eta`.
pub const ROW_SUM_TOL: f64 = 1e-12;
/// Strengths must lie in `(ELLIPTICITY_EPS, 1 - ELLIPTICITY_EPS)`.
pub const ELLIPTICITY_EPS: f64 = 1e-9;
/// Residual allowed in `mu K = mu`.
pub const STATIONARY_TOL: f64 = 1e-10;
/// Default half-width of the critical band `|mu.p - 1/2|`.
pub const DEFAULT_TOL_CRITICAL: f64 = 1e-10;

/// A validated cookie-stack model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CookieSystem {
    #[serde(rename = "K")]
    k: Vec<Vec<f64>>,
    p: Vec<f64>,
    eta: Vec<f64>,
    #[serde(skip)]
    closed_class: Vec<usize>,
}

/// Raw JSON model file: `{"K": [[..]], "p": [..], "eta": [..]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    #[serde(rename = "K")]
    pub k: Vec<Vec<f64>>,
    pub p: Vec<f64>,
    pub eta: Vec<f64>,
}

impl CookieSystem {
    pub fn n_states(&self) -> usize {
        self.p.len()
    }

    pub fn k(&self) -> &[Vec<f64>] {
        &self.k
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn eta(&self) -> &[f64] {
        &self.eta
    }

    /// States of the unique closed communicating class, ascending.
    pub fn closed_class(&self) -> &[usize] {
        &self.closed_class
    }

    pub fn k_matrix(&self) -> Mat {
        linalg::from_rows(&self.k)
    }

    pub fn p_vector(&self) -> Vector {
        linalg::vector(&self.p)
    }

    pub fn eta_vector(&self) -> Vector {
        linalg::vector(&self.eta)
    }

    /// The same stacks with every strength replaced by `1 - p`: left and right
    /// steps swap roles.
    pub fn mirrored(&self) -> CookieSystem {
        CookieSystem {
            k: self.k.clone(),
            p: self.p.iter().map(|x| 1.0 - x).collect(),
            eta: self.eta.clone(),
            closed_class: self.closed_class.clone(),
        }
    }

    /// Same `K` and `eta`, different strengths.
    pub fn with_strengths(&self, p: Vec<f64>) -> Result<CookieSystem> {
        validate_system(self.k.clone(), p, self.eta.clone())
    }

    pub fn from_json_str(s: &str) -> Result<CookieSystem> {
        let raw: ModelFile = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        validate_system(raw.k, raw.p, raw.eta)
    }

    pub fn to_model_file(&self) -> ModelFile {
        ModelFile {
            k: self.k.clone(),
            p: self.p.clone(),
            eta: self.eta.clone(),
        }
    }
}

/// Validate `(K, p, eta)` and build a [`CookieSystem`].
pub fn validate_system(k: Vec<Vec<f64>>, p: Vec<f64>, eta: Vec<f64>) -> Result<CookieSystem> {
    let n = p.len();
    if n == 0 {
        return Err(Error::DimensionMismatch("N must be at least 1".into()));
    }
    if k.len() != n || k.iter().any(|row| row.len() != n) || eta.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "K is {}x{:?}, p has {}, eta has {}",
            k.len(),
            k.iter().map(|r| r.len()).collect::<Vec<_>>(),
            n,
            eta.len()
        )));
    }
    if k.iter().flatten().chain(&p).chain(&eta).any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("model contains NaN or infinite entries".into()));
    }
    for (i, row) in k.iter().enumerate() {
        if let Some(j) = row.iter().position(|&x| x < 0.0) {
            return Err(Error::NotStochastic(format!("K[{i}][{j}] = {} < 0", row[j])));
        }
        let s: f64 = row.iter().sum();
        if (s - 1.0).abs() > ROW_SUM_TOL {
            return Err(Error::NotStochastic(format!("row {i} of K sums to {s}")));
        }
    }
    for (i, &x) in p.iter().enumerate() {
        if !(x > ELLIPTICITY_EPS && x < 1.0 - ELLIPTICITY_EPS) {
            return Err(Error::EllipticityViolation(format!("p[{i}] = {x}")));
        }
    }
    if let Some(i) = eta.iter().position(|&x| x < 0.0) {
        return Err(Error::NotStochastic(format!("eta[{i}] = {} < 0", eta[i])));
    }
    let s: f64 = eta.iter().sum();
    if (s - 1.0).abs() > ROW_SUM_TOL {
        return Err(Error::NotStochastic(format!("eta sums to {s}")));
    }
    let closed = closed_classes(&k);
    if closed.len() != 1 {
        return Err(Error::MultipleClosedClasses(closed.len()));
    }
    let closed_class = closed.into_iter().next().unwrap_or_default();
    Ok(CookieSystem { k, p, eta, closed_class })
}

/// Closed communicating classes of the positivity graph of `k`, each sorted.
///
/// A strongly connected component is closed iff no positive edge leaves it.
pub fn closed_classes(k: &[Vec<f64>]) -> Vec<Vec<usize>> {
    let n = k.len();
    let mut g = DiGraph::<usize, ()>::with_capacity(n, n * n);
    let nodes: Vec<_> = (0..n).map(|i| g.add_node(i)).collect();
    for i in 0..n {
        for j in 0..n {
            if k[i][j] > 0.0 {
                g.add_edge(nodes[i], nodes[j], ());
            }
        }
    }
    let mut comp_of = vec![0usize; n];
    let sccs = tarjan_scc(&g);
    for (c, scc) in sccs.iter().enumerate() {
        for v in scc {
            comp_of[g[*v]] = c;
        }
    }
    let mut out: Vec<Vec<usize>> = sccs
        .iter()
        .enumerate()
        .filter(|(c, scc)| {
            scc.iter().all(|v| {
                let i = g[*v];
                (0..n).all(|j| k[i][j] <= 0.0 || comp_of[j] == *c)
            })
        })
        .map(|(_, scc)| {
            let mut states: Vec<usize> = scc.iter().map(|v| g[*v]).collect();
            states.sort_unstable();
            states
        })
        .collect();
    out.sort();
    out
}

/// Stationary law of the cookie-type chain and the derived mean strength.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryLaw {
    pub mu: Vec<f64>,
    pub pbar: f64,
    pub lambda: f64,
}

/// Solve `mu K = mu`, `mu . 1 = 1` directly: the last balance equation is
/// replaced by the normalisation row. No aperiodicity is needed.
pub fn stationary_distribution(sys: &CookieSystem) -> Result<StationaryLaw> {
    let n = sys.n_states();
    let k = sys.k_matrix();
    let mut a = (Mat::identity(n, n) - &k).transpose();
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut b = Vector::zeros(n);
    b[n - 1] = 1.0;
    let mut mu = linalg::solve(&a, &b, "stationary distribution")?;
    for x in mu.iter_mut() {
        if *x < 0.0 && *x > -1e-12 {
            *x = 0.0;
        }
    }
    let total: f64 = mu.iter().sum();
    mu /= total;
    let residual = linalg::max_abs(&(linalg::row_times(&mu, &k) - &mu));
    if residual > STATIONARY_TOL || mu.iter().any(|&x| x < 0.0) {
        return Err(Error::SingularSolve(format!(
            "stationary law residual {residual:.3e}"
        )));
    }
    let pbar = mu.dot(&sys.p_vector());
    Ok(StationaryLaw {
        mu: mu.iter().copied().collect(),
        pbar,
        lambda: pbar / (1.0 - pbar),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalityVerdict {
    pub is_critical: bool,
    pub gap: f64,
    pub tol_critical: f64,
}

/// `gap = mu.p - 1/2`; critical iff `|gap| <= tol_critical`.
pub fn criticality(law: &StationaryLaw, p: &[f64], tol_critical: f64) -> CriticalityVerdict {
    let pbar: f64 = law.mu.iter().zip(p).map(|(m, q)| m * q).sum();
    let gap = pbar - 0.5;
    CriticalityVerdict {
        is_critical: gap.abs() <= tol_critical,
        gap,
        tol_critical,
    }
}

/// Named example families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ExampleFamily {
    /// Deterministic periodic stack `p[0], p[1], ..., p[N-1], p[0], ...`.
    Periodic { p: Vec<f64> },
    /// Geometric(alpha) many cookies of strength `p1`, then strength 1/2 forever.
    Geometric { alpha: f64, p1: f64 },
    /// Two cookies per site: `(p[0], p[1])` with probability alpha,
    /// `(p[2], p[3])` otherwise.
    BoundedStack { alpha: f64, p: [f64; 4] },
    /// Symmetric two-type chain with switching probability alpha and
    /// strengths `(p, 1 - p)`, started in type 1.
    TwoType { alpha: f64, p: f64 },
}

fn check_open_unit(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x < 1.0 {
        Ok(())
    } else {
        Err(Error::BadFamilyParam(format!("{name} = {x} must lie in (0, 1)")))
    }
}

/// Build the `(K, p, eta)` triple of an example family and validate it.
pub fn build_example(family: &ExampleFamily) -> Result<CookieSystem> {
    match family {
        ExampleFamily::Periodic { p } => {
            let n = p.len();
            if n == 0 {
                return Err(Error::BadFamilyParam("periodic stack needs at least one strength".into()));
            }
            for (i, &x) in p.iter().enumerate() {
                check_open_unit(&format!("p[{i}]"), x)?;
            }
            let k = (0..n)
                .map(|i| (0..n).map(|j| if j == (i + 1) % n { 1.0 } else { 0.0 }).collect())
                .collect();
            let mut eta = vec![0.0; n];
            eta[0] = 1.0;
            validate_system(k, p.clone(), eta)
        }
        ExampleFamily::Geometric { alpha, p1 } => {
            if !(*alpha > 0.0 && *alpha <= 1.0) {
                return Err(Error::BadFamilyParam(format!("alpha = {alpha} must lie in (0, 1]")));
            }
            check_open_unit("p1", *p1)?;
            validate_system(
                vec![vec![1.0 - alpha, *alpha], vec![0.0, 1.0]],
                vec![*p1, 0.5],
                vec![1.0, 0.0],
            )
        }
        ExampleFamily::BoundedStack { alpha, p } => {
            if !(0.0..=1.0).contains(alpha) {
                return Err(Error::BadFamilyParam(format!("alpha = {alpha} must lie in [0, 1]")));
            }
            for (i, &x) in p.iter().enumerate() {
                check_open_unit(&format!("p[{i}]"), x)?;
            }
            let mut k = vec![vec![0.0; 5]; 5];
            k[0][1] = 1.0;
            k[1][4] = 1.0;
            k[2][3] = 1.0;
            k[3][4] = 1.0;
            k[4][4] = 1.0;
            validate_system(
                k,
                vec![p[0], p[1], p[2], p[3], 0.5],
                vec![*alpha, 0.0, 1.0 - alpha, 0.0, 0.0],
            )
        }
        ExampleFamily::TwoType { alpha, p } => {
            if !(*alpha > 0.0 && *alpha <= 1.0) {
                return Err(Error::BadFamilyParam(format!("alpha = {alpha} must lie in (0, 1]")));
            }
            check_open_unit("p", *p)?;
            validate_system(
                vec![vec![1.0 - alpha, *alpha], vec![*alpha, 1.0 - alpha]],
                vec![*p, 1.0 - p],
                vec![1.0, 0.0],
            )
        }
    }
}

/// Which family a two-parameter sweep walks over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    Geometric,
    TwoType,
}

impl FamilyKind {
    /// Family member at `(axis1, axis2)` = `(alpha, p1)` or `(alpha, p)`.
    pub fn at(self, axis1: f64, axis2: f64) -> ExampleFamily {
        match self {
            FamilyKind::Geometric => ExampleFamily::Geometric { alpha: axis1, p1: axis2 },
            FamilyKind::TwoType => ExampleFamily::TwoType { alpha: axis1, p: axis2 },
        }
    }

    pub fn axis_names(self) -> (&'static str, &'static str) {
        match self {
            FamilyKind::Geometric => ("alpha", "p1"),
            FamilyKind::TwoType => ("alpha", "p"),
        }
    }
}

impl FromStr for FamilyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.split(':').next().unwrap_or("").trim() {
            "geometric" => Ok(FamilyKind::Geometric),
            "two-type" | "two_type" | "twotype" => Ok(FamilyKind::TwoType),
            other => Err(Error::Parse(format!("no sweepable family named `{other}`"))),
        }
    }
}

/// Parses `name:key=value,...`; list values are separated by `/`.
///
/// ```
/// use erw_core::env_model::ExampleFamily;
/// let f: ExampleFamily = "geometric:alpha=0.5,p1=0.75".parse().unwrap();
/// assert_eq!(f, ExampleFamily::Geometric { alpha: 0.5, p1: 0.75 });
/// let c: ExampleFamily = "constant:p=0.6".parse().unwrap();
/// assert_eq!(c, ExampleFamily::Periodic { p: vec![0.6] });
/// ```
impl FromStr for ExampleFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, rest) = s.split_once(':').unwrap_or((s, ""));
        let mut kv = std::collections::BTreeMap::new();
        for part in rest.split(',').filter(|x| !x.trim().is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value, got `{part}`")))?;
            kv.insert(k.trim().to_string(), v.trim().to_string());
        }
        let scalar = |key: &str| -> Result<f64> {
            let v = kv
                .get(key)
                .ok_or_else(|| Error::Parse(format!("family `{name}` needs `{key}`")))?;
            v.parse::<f64>()
                .map_err(|_| Error::Parse(format!("`{key}` = `{v}` is not a number")))
        };
        let list = |key: &str| -> Result<Vec<f64>> {
            let v = kv
                .get(key)
                .ok_or_else(|| Error::Parse(format!("family `{name}` needs `{key}`")))?;
            v.split('/')
                .map(|x| {
                    x.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Parse(format!("`{x}` is not a number")))
                })
                .collect()
        };
        match name.trim() {
            "periodic" => Ok(ExampleFamily::Periodic { p: list("p")? }),
            "constant" => Ok(ExampleFamily::Periodic { p: vec![scalar("p")?] }),
            "geometric" => Ok(ExampleFamily::Geometric {
                alpha: scalar("alpha")?,
                p1: scalar("p1")?,
            }),
            "bounded" | "bounded-stack" | "bounded_stack" => {
                let p = list("p")?;
                let p: [f64; 4] = p
                    .try_into()
                    .map_err(|_| Error::Parse("bounded stack needs exactly 4 strengths".into()))?;
                Ok(ExampleFamily::BoundedStack { alpha: scalar("alpha")?, p })
            }
            "two-type" | "two_type" | "twotype" => Ok(ExampleFamily::TwoType {
                alpha: scalar("alpha")?,
                p: scalar("p")?,
            }),
            other => Err(Error::Parse(format!("unknown family `{other}`"))),
        }
    }
}

impl fmt::Display for ExampleFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("/");
        match self {
            ExampleFamily::Periodic { p } => write!(f, "periodic:p={}", join(p)),
            ExampleFamily::Geometric { alpha, p1 } => write!(f, "geometric:alpha={alpha},p1={p1}"),
            ExampleFamily::BoundedStack { alpha, p } => {
                write!(f, "bounded:alpha={alpha},p={}", join(p))
            }
            ExampleFamily::TwoType { alpha, p } => write!(f, "two-type:alpha={alpha},p={p}"),
        }
    }
}
