//! Asymptotic classification: recurrence/transience, sign of the speed, and the
//! limit-law case with the normalisations it prescribes for `T_n` and `X_n`.

use std::fmt;

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::env_model::{self, CriticalityVerdict, FamilyKind};
use crate::parameters::{self, DerivedParams};

/// Default distance within which a delta is snapped onto a case boundary.
pub const DEFAULT_TOL_BOUNDARY: f64 = 1e-9;
/// Boundaries of the limit-law cases.
pub const BOUNDARIES: [f64; 4] = [0.0, 1.0, 2.0, 4.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Transience {
    TransientRight,
    TransientLeft,
    Recurrent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SpeedSign {
    Positive,
    Zero,
    Negative,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LimitCase {
    NonCriticalGaussian,
    /// `delta` in (1, 2).
    Stable12,
    /// `delta = 2`.
    Stable1At2,
    /// `delta` in (2, 4).
    Stable24,
    /// `delta = 4`.
    GaussianLogAt4,
    /// `delta > 4`.
    GaussianGt4,
    /// Left-transient: the case of the mirrored walk (`delta_tilde`).
    MirrorOf(Box<LimitCase>),
    NoneRecurrent,
}

impl LimitCase {
    pub fn label(&self) -> String {
        match self {
            LimitCase::NonCriticalGaussian => "NonCriticalGaussian".into(),
            LimitCase::Stable12 => "Stable_1_2".into(),
            LimitCase::Stable1At2 => "Stable1_at2".into(),
            LimitCase::Stable24 => "Stable_2_4".into(),
            LimitCase::GaussianLogAt4 => "GaussianLog_at4".into(),
            LimitCase::GaussianGt4 => "Gaussian_gt4".into(),
            LimitCase::MirrorOf(inner) => format!("MirrorOf({})", inner.label()),
            LimitCase::NoneRecurrent => "NoneRecurrent".into(),
        }
    }

    /// Case as seen from the other side.
    pub fn mirrored(&self) -> LimitCase {
        match self {
            LimitCase::MirrorOf(inner) => (**inner).clone(),
            LimitCase::NoneRecurrent => LimitCase::NoneRecurrent,
            other => LimitCase::MirrorOf(Box::new(other.clone())),
        }
    }

    /// The right-transient case, unwrapping a mirror.
    pub fn base(&self) -> &LimitCase {
        match self {
            LimitCase::MirrorOf(inner) => inner.base(),
            other => other,
        }
    }

    pub fn is_gaussian(&self) -> bool {
        matches!(
            self.base(),
            LimitCase::NonCriticalGaussian | LimitCase::GaussianLogAt4 | LimitCase::GaussianGt4
        )
    }
}

impl fmt::Display for LimitCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl Serialize for LimitCase {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Centering {
    None,
    Linear,
    Logarithmic,
}

/// Normalisation template; constants it names are never computed here.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingDescriptor {
    /// Power of `n` in the normalising sequence (ignoring log factors).
    pub exponent: Option<f64>,
    pub centering: Centering,
    pub log_factor: bool,
    pub template: String,
    pub limit: String,
    pub fitted_constants: Vec<String>,
}

impl ScalingDescriptor {
    fn none() -> Self {
        ScalingDescriptor {
            exponent: None,
            centering: Centering::None,
            log_factor: false,
            template: "no limit law (recurrent)".into(),
            limit: "none".into(),
            fitted_constants: vec![],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeReport {
    pub criticality: CriticalityVerdict,
    pub delta: f64,
    pub delta_tilde: f64,
    pub transience: Transience,
    pub speed_sign: SpeedSign,
    pub limit_case: LimitCase,
    pub hitting_scaling: ScalingDescriptor,
    pub position_scaling: ScalingDescriptor,
    pub boundary_flags: Vec<String>,
}

fn snap(x: f64, tol: f64) -> (f64, Option<f64>) {
    match BOUNDARIES.iter().find(|c| (x - **c).abs() <= tol) {
        Some(c) => (*c, Some(*c)),
        None => (x, None),
    }
}

fn case_for(d: f64) -> LimitCase {
    if d < 2.0 {
        LimitCase::Stable12
    } else if d == 2.0 {
        LimitCase::Stable1At2
    } else if d < 4.0 {
        LimitCase::Stable24
    } else if d == 4.0 {
        LimitCase::GaussianLogAt4
    } else {
        LimitCase::GaussianGt4
    }
}

fn strings(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

/// Templates for `(T_n, X_n)` in a right-transient case with parameter `d`.
fn scalings(case: &LimitCase, d: f64) -> (ScalingDescriptor, ScalingDescriptor) {
    let sd = |exponent: Option<f64>, centering, log_factor, template: String, limit: String, c: &[&str]| {
        ScalingDescriptor {
            exponent,
            centering,
            log_factor,
            template,
            limit,
            fitted_constants: strings(c),
        }
    };
    match case {
        LimitCase::NonCriticalGaussian | LimitCase::GaussianGt4 => (
            sd(Some(0.5), Centering::Linear, false, "(T_n - n/v) / (b sqrt(n))".into(), "normal".into(), &["v", "b"]),
            sd(Some(0.5), Centering::Linear, false, "(X_n - v n) / (b v^1.5 sqrt(n))".into(), "normal".into(), &["v", "b"]),
        ),
        LimitCase::GaussianLogAt4 => (
            sd(Some(0.5), Centering::Linear, true, "(T_n - n/v) / (b sqrt(n log n))".into(), "normal".into(), &["v", "b"]),
            sd(Some(0.5), Centering::Linear, true, "(X_n - v n) / (b v^1.5 sqrt(n log n))".into(), "normal".into(), &["v", "b"]),
        ),
        LimitCase::Stable12 => (
            sd(Some(2.0 / d), Centering::None, false, format!("T_n / n^{}", 2.0 / d), format!("stable({}, b)", d / 2.0), &["b"]),
            sd(Some(d / 2.0), Centering::None, false, format!("X_n / n^{}", d / 2.0), format!("1 - L(x^-{})", 2.0 / d), &["b"]),
        ),
        LimitCase::Stable1At2 => (
            sd(Some(1.0), Centering::Logarithmic, false, "(T_n - n D(n)) / n, D(n) ~ log(n)/a".into(), "stable(1, b)".into(), &["a", "b", "D(n)"]),
            sd(Some(1.0), Centering::Logarithmic, true, "(X_n - Gamma(n)) / (n / (log n)^2), Gamma(n) ~ a n / log(n)".into(), "1 - L(-x/a^2)".into(), &["a", "b", "Gamma(n)"]),
        ),
        LimitCase::Stable24 => (
            sd(Some(2.0 / d), Centering::Linear, false, format!("(T_n - n/v) / n^{}", 2.0 / d), format!("stable({}, b)", d / 2.0), &["v", "b"]),
            sd(Some(2.0 / d), Centering::Linear, false, format!("(X_n - v n) / (v^(1+2/delta) n^{})", 2.0 / d), "1 - L(-x)".into(), &["v", "b"]),
        ),
        LimitCase::MirrorOf(_) | LimitCase::NoneRecurrent => (ScalingDescriptor::none(), ScalingDescriptor::none()),
    }
}

/// Full classification of a model from its parameters.
pub fn classify(params: &DerivedParams, verdict: &CriticalityVerdict, tol_boundary: f64) -> RegimeReport {
    let (d, fd) = snap(params.delta, tol_boundary);
    let (dt, fdt) = snap(params.delta_tilde, tol_boundary);
    let mut boundary_flags = Vec::new();
    if let Some(c) = fd {
        boundary_flags.push(format!("delta={c}"));
    }
    if let Some(c) = fdt {
        boundary_flags.push(format!("delta_tilde={c}"));
    }
    let (transience, speed_sign, limit_case, (hit, pos)) = if !verdict.is_critical {
        let case = LimitCase::NonCriticalGaussian;
        let sc = scalings(&case, d);
        if verdict.gap > 0.0 {
            (Transience::TransientRight, SpeedSign::Positive, case, sc)
        } else {
            (Transience::TransientLeft, SpeedSign::Negative, case.mirrored(), sc)
        }
    } else {
        let speed = if d > 2.0 {
            SpeedSign::Positive
        } else if dt > 2.0 {
            SpeedSign::Negative
        } else {
            SpeedSign::Zero
        };
        if d > 1.0 {
            let case = case_for(d);
            let sc = scalings(&case, d);
            (Transience::TransientRight, speed, case, sc)
        } else if dt > 1.0 {
            let case = case_for(dt);
            let sc = scalings(&case, dt);
            (Transience::TransientLeft, speed, case.mirrored(), sc)
        } else {
            let none = (ScalingDescriptor::none(), ScalingDescriptor::none());
            (Transience::Recurrent, speed, LimitCase::NoneRecurrent, none)
        }
    };
    RegimeReport {
        criticality: *verdict,
        delta: params.delta,
        delta_tilde: params.delta_tilde,
        transience,
        speed_sign,
        limit_case,
        hitting_scaling: hit,
        position_scaling: pos,
        boundary_flags,
    }
}

/// Validate, derive and classify in one step.
pub fn classify_system(
    sys: &env_model::CookieSystem,
    tol_critical: f64,
    tol_boundary: f64,
) -> crate::Result<(DerivedParams, RegimeReport)> {
    let params = parameters::derive(sys)?;
    let law = env_model::stationary_distribution(sys)?;
    let verdict = env_model::criticality(&law, sys.p(), tol_critical);
    let report = classify(&params, &verdict, tol_boundary);
    Ok((params, report))
}

/// `count` evenly spaced points from `lo` to `hi` inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AxisSpec {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl AxisSpec {
    pub fn points(&self) -> Vec<f64> {
        match self.count {
            0 => vec![],
            1 => vec![self.lo],
            n => (0..n)
                .map(|i| self.lo + (self.hi - self.lo) * i as f64 / (n - 1) as f64)
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub axis1: f64,
    pub axis2: f64,
    pub outcome: Result<SweepPoint, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub delta: f64,
    pub delta_tilde: f64,
    pub nu: f64,
    pub regime: String,
    pub boundary_flags: Vec<String>,
}

/// Classify every grid point; rows are ordered by `(axis1, axis2)` index.
pub fn phase_sweep(
    family: FamilyKind,
    axis1: &AxisSpec,
    axis2: &AxisSpec,
    tol_critical: f64,
    tol_boundary: f64,
) -> Vec<SweepRow> {
    let xs = axis1.points();
    let ys = axis2.points();
    let grid: Vec<(f64, f64)> = xs.iter().flat_map(|&x| ys.iter().map(move |&y| (x, y))).collect();
    grid.par_iter()
        .map(|&(x, y)| {
            let outcome = env_model::build_example(&family.at(x, y))
                .and_then(|sys| classify_system(&sys, tol_critical, tol_boundary))
                .map(|(p, rep)| SweepPoint {
                    delta: p.delta,
                    delta_tilde: p.delta_tilde,
                    nu: p.nu,
                    regime: rep.limit_case.label(),
                    boundary_flags: rep.boundary_flags,
                })
                .map_err(|e| e.name().to_string());
            SweepRow { axis1: x, axis2: y, outcome }
        })
        .collect()
}

pub const SWEEP_HEADER: &str = "axis1,axis2,delta,delta_tilde,nu,regime,boundary_flags";

/// Floats in CSV output: 17 significant digits.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// CSV body with `# key=value` comment lines first.
pub fn sweep_csv(rows: &[SweepRow], comments: &[(String, String)]) -> String {
    let mut out = String::new();
    for (k, v) in comments {
        out.push_str(&format!("# {k}={v}\n"));
    }
    out.push_str(SWEEP_HEADER);
    out.push('\n');
    for row in rows {
        let a = fmt_float(row.axis1);
        let b = fmt_float(row.axis2);
        match &row.outcome {
            Ok(p) => out.push_str(&format!(
                "{a},{b},{},{},{},{},{}\n",
                fmt_float(p.delta),
                fmt_float(p.delta_tilde),
                fmt_float(p.nu),
                p.regime,
                p.boundary_flags.join(";")
            )),
            Err(name) => out.push_str(&format!("{a},{b},NaN,NaN,NaN,error:{name},\n")),
        }
    }
    out
}
