//! Long-run behaviour: peak extraction, period counting, the largest
//! Lyapunov exponent, attractor classification, parameter scans and Hopf
//! point location.
//!
//! "Period n" counts distinct zooplankton peak levels per repeat of the
//! orbit, the way period-doubling cascades are usually read off a
//! bifurcation diagram. The period in days is reported alongside.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::equilibria::{interior_equilibrium, InteriorAbsence};
use crate::integrate::{integrate_with_tangent, IntegrationError, IntegratorConfig, Stretch, Trajectory};
use crate::model::{
    derive_effective, jacobian, residual, DerivedParameters, DilutionMode, EffectiveParameters, Linearization, Matrix3,
    ModelError, RawParameters, Species, State,
};
use crate::stability::{characteristic_coefficients, cubic_roots, CharPoly};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AttractorError {
    #[error("need at least {needed} peaks, found {found}")]
    InsufficientPeaks { found: usize, needed: usize },
    #[error(transparent)]
    Integration(#[from] IntegrationError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid analysis configuration: {0}")]
    InvalidConfig(String),
}

/// Knobs for the long-run analyses. Tolerances default to the values the
/// classifier was calibrated with.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    pub integrator: IntegratorConfig,
    /// Initial stretch of each run discarded before measuring, days.
    pub transient: f64,
    /// Tangent frame re-orthonormalization interval, days.
    pub renorm_interval: f64,
    pub extinction_tol: f64,
    pub chaos_tol: f64,
    /// Max-norm of the vector field below which a state counts as stationary.
    pub fixed_point_tol: f64,
    /// Relative tolerance for grouping peak heights.
    pub period_rel_tol: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            integrator: IntegratorConfig::default(),
            transient: 500.0,
            renorm_interval: 1.0,
            extinction_tol: 1e-3,
            chaos_tol: 1e-3,
            fixed_point_tol: 1e-6,
            period_rel_tol: 1e-3,
        }
    }
}

impl AnalysisConfig {
    pub fn with_horizon(t_end: f64, transient: f64) -> Self {
        let mut cfg = Self::default();
        cfg.integrator.t_end = t_end;
        cfg.transient = transient;
        cfg
    }

    fn validate(&self) -> Result<(), AttractorError> {
        self.integrator.validate()?;
        if !(self.transient >= 0.0) || self.integrator.t_end < 2.0 * self.transient {
            return Err(AttractorError::InvalidConfig(format!(
                "horizon {} must be at least twice the transient {}",
                self.integrator.t_end, self.transient
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub t: f64,
    pub value: f64,
}

/// Strict interior local maxima, refined by fitting a parabola through each
/// maximum and its two neighbours.
pub fn detect_peaks(times: &[f64], values: &[f64]) -> Vec<Peak> {
    assert_eq!(times.len(), values.len(), "times and values differ in length");
    let mut peaks = Vec::new();
    for i in 1..values.len().saturating_sub(1) {
        let (y0, y1, y2) = (values[i - 1], values[i], values[i + 1]);
        if !(y1 > y0 && y1 > y2) {
            continue;
        }
        let (t0, t1, t2) = (times[i - 1], times[i], times[i + 1]);
        let d01 = (y1 - y0) / (t1 - t0);
        let d12 = (y2 - y1) / (t2 - t1);
        let d012 = (d12 - d01) / (t2 - t0);
        let peak = if d012 < 0.0 {
            let t = (0.5 * (t0 + t1) - d01 / (2.0 * d012)).clamp(t0, t2);
            Peak { t, value: y0 + d01 * (t - t0) + d012 * (t - t0) * (t - t1) }
        } else {
            Peak { t: t1, value: y1 }
        };
        peaks.push(peak);
    }
    peaks
}

pub const MIN_PEAKS: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PeriodEstimate {
    Periodic {
        /// Distinct peak levels per cycle.
        n: usize,
        /// Mean time for the peak sequence to repeat, days.
        period_days: f64,
        /// Representative level of each cluster, ascending.
        levels: Vec<f64>,
    },
    NotPeriodic {
        clusters: usize,
    },
}

/// Groups peak heights into levels: ascending values join the current
/// level while within `rel_tol` of its first member.
fn cluster_levels(values: &[f64], rel_tol: f64) -> (Vec<usize>, Vec<f64>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut labels = vec![0usize; values.len()];
    let mut levels: Vec<(f64, f64, usize)> = Vec::new(); // (anchor, sum, count)
    for &i in &order {
        let v = values[i];
        match levels.last_mut() {
            Some((anchor, sum, count))
                if (v - *anchor).abs() <= rel_tol * anchor.abs().max(v.abs()).max(f64::MIN_POSITIVE) =>
            {
                *sum += v;
                *count += 1;
            }
            _ => levels.push((v, v, 1)),
        }
        labels[i] = levels.len() - 1;
    }
    (labels, levels.into_iter().map(|(_, s, c)| s / c as f64).collect())
}

pub fn estimate_period(peaks: &[Peak], rel_tol: f64) -> Result<PeriodEstimate, AttractorError> {
    if peaks.len() < MIN_PEAKS {
        return Err(AttractorError::InsufficientPeaks { found: peaks.len(), needed: MIN_PEAKS });
    }
    let values: Vec<f64> = peaks.iter().map(|p| p.value).collect();
    let (labels, levels) = cluster_levels(&values, rel_tol);
    let n = levels.len();

    // At least two full cycles, each level once per cycle, and the label
    // sequence repeating with period n.
    let first_cycle_distinct = {
        let mut seen = vec![false; n];
        labels.iter().take(n).all(|&l| !std::mem::replace(&mut seen[l], true))
    };
    let cyclic = labels.len() >= 2 * n && first_cycle_distinct && (n..labels.len()).all(|i| labels[i] == labels[i - n]);
    if !cyclic {
        return Ok(PeriodEstimate::NotPeriodic { clusters: n });
    }
    let gaps = peaks.len() - n;
    let period_days = (n..peaks.len()).map(|i| peaks[i].t - peaks[i - n].t).sum::<f64>() / gaps as f64;
    Ok(PeriodEstimate::Periodic { n, period_days, levels })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LyapunovEstimate {
    /// Mean log stretch rate of the leading direction after the transient, per day.
    pub lambda1: f64,
    pub last_half: f64,
    pub last_quarter: f64,
    /// Last-quarter and last-half estimates agree within 20%.
    pub converged: bool,
}

fn mean_rate(stretches: &[Stretch], from: f64) -> f64 {
    let (sum, span) = stretches
        .iter()
        .filter(|s| s.t - s.dt >= from - 1e-9)
        .fold((0.0, 0.0), |(sum, span), s| (sum + s.log_growth[0], span + s.dt));
    if span > 0.0 {
        sum / span
    } else {
        f64::NAN
    }
}

/// Leading exponent from accumulated stretch factors.
pub fn lyapunov_from_stretches(stretches: &[Stretch], transient: f64, t_end: f64) -> LyapunovEstimate {
    let window = t_end - transient;
    let lambda1 = mean_rate(stretches, transient);
    let last_half = mean_rate(stretches, t_end - window / 2.0);
    let last_quarter = mean_rate(stretches, t_end - window / 4.0);
    let converged = (last_quarter - last_half).abs() <= 0.2 * last_half.abs();
    LyapunovEstimate { lambda1, last_half, last_quarter, converged }
}

pub fn largest_lyapunov<V>(field: &V, s0: State, cfg: &AnalysisConfig) -> Result<LyapunovEstimate, AttractorError>
where
    V: Linearization + fmt::Debug,
{
    cfg.validate()?;
    let (_, stretches) = integrate_with_tangent(field, s0, Matrix3::identity(), &cfg.integrator, cfg.renorm_interval)?;
    Ok(lyapunov_from_stretches(&stretches, cfg.transient, cfg.integrator.t_end))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum AttractorKind {
    FixedPoint { state: State },
    PeriodicN { n: usize, period_days: f64 },
    Chaotic,
    Collapse { species: Species },
    Unresolved,
}

impl AttractorKind {
    pub fn label(&self) -> &'static str {
        match self {
            AttractorKind::FixedPoint { .. } => "fixed_point",
            AttractorKind::PeriodicN { .. } => "periodic",
            AttractorKind::Chaotic => "chaotic",
            AttractorKind::Collapse { .. } => "collapse",
            AttractorKind::Unresolved => "unresolved",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub final_state: State,
    pub final_residual: f64,
    pub peak_count: usize,
    /// Componentwise min and max over the last 20% of the run.
    pub tail_min: [f64; 3],
    pub tail_max: [f64; 3],
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttractorSummary {
    #[serde(flatten)]
    pub kind: AttractorKind,
    pub lambda1: f64,
    pub lyapunov: LyapunovEstimate,
    /// Distinct post-transient zooplankton maxima, ascending.
    pub peak_values: Vec<f64>,
    pub diagnostics: Diagnostics,
}

/// Classification from an already computed run. Tests are applied in
/// order: collapse, fixed point, periodic, chaotic.
pub fn classify_trajectory<V>(
    field: &V,
    traj: &Trajectory,
    lyapunov: LyapunovEstimate,
    cfg: &AnalysisConfig,
) -> AttractorSummary
where
    V: crate::model::VectorField,
{
    let t_end = cfg.integrator.t_end;
    let s0 = traj.states[0].to_array();
    let (t_final, final_state) = traj.last().expect("trajectory has samples");

    let tail_start = 0.8 * t_end;
    let mut tail_min = [f64::INFINITY; 3];
    let mut tail_max = [f64::NEG_INFINITY; 3];
    for (t, s) in traj.times.iter().zip(&traj.states) {
        if *t >= tail_start {
            for (i, v) in s.to_array().into_iter().enumerate() {
                tail_min[i] = tail_min[i].min(v);
                tail_max[i] = tail_max[i].max(v);
            }
        }
    }

    let tail_times: Vec<f64>;
    let tail_z: Vec<f64>;
    {
        let start = traj.times.partition_point(|t| *t < cfg.transient);
        tail_times = traj.times[start..].to_vec();
        tail_z = traj.states[start..].iter().map(|s| s.z).collect();
    }
    let peaks = detect_peaks(&tail_times, &tail_z);
    let final_residual = field.eval(&final_state.to_array()).iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let mut notes = Vec::new();
    let period = estimate_period(&peaks, cfg.period_rel_tol);
    let peak_values = match &period {
        Ok(PeriodEstimate::Periodic { levels, .. }) => levels.clone(),
        _ => cluster_levels(&peaks.iter().map(|p| p.value).collect::<Vec<_>>(), cfg.period_rel_tol).1,
    };

    let collapsed = Species::ALL
        .into_iter()
        .find(|sp| s0[sp.index()] > cfg.extinction_tol && tail_max[sp.index()] < cfg.extinction_tol);

    let kind = if let Some(species) = collapsed {
        AttractorKind::Collapse { species }
    } else if final_residual < cfg.fixed_point_tol && lyapunov.lambda1 < 0.0 {
        AttractorKind::FixedPoint { state: final_state }
    } else if let Ok(PeriodEstimate::Periodic { n, period_days, .. }) = period {
        AttractorKind::PeriodicN { n, period_days }
    } else if lyapunov.lambda1 > cfg.chaos_tol {
        AttractorKind::Chaotic
    } else {
        if final_residual < 1e-3 && lyapunov.lambda1 < 0.0 {
            notes.push(format!(
                "still converging at t = {t_final}: residual {final_residual:e} above {:e}; lengthen the run",
                cfg.fixed_point_tol
            ));
        }
        match &period {
            Err(e) => notes.push(format!("no period estimate: {e}")),
            Ok(PeriodEstimate::NotPeriodic { clusters }) => {
                notes.push(format!("{clusters} peak levels without a repeating sequence"))
            }
            _ => {}
        }
        AttractorKind::Unresolved
    };
    if !lyapunov.converged {
        notes.push("Lyapunov estimate not converged (last quarter vs last half differ by > 20%)".into());
    }

    AttractorSummary {
        kind,
        lambda1: lyapunov.lambda1,
        lyapunov,
        peak_values,
        diagnostics: Diagnostics { final_state, final_residual, peak_count: peaks.len(), tail_min, tail_max, notes },
    }
}

pub fn classify_attractor<V>(field: &V, s0: State, cfg: &AnalysisConfig) -> Result<AttractorSummary, AttractorError>
where
    V: Linearization + fmt::Debug,
{
    cfg.validate()?;
    let (traj, stretches) =
        integrate_with_tangent(field, s0, Matrix3::identity(), &cfg.integrator, cfg.renorm_interval)?;
    let lyap = lyapunov_from_stretches(&stretches, cfg.transient, cfg.integrator.t_end);
    Ok(classify_trajectory(field, &traj, lyap, cfg))
}

/// Raw parameters plus the dilution convention: everything needed to
/// rebuild the effective coefficients after changing one parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSetup {
    pub raw: RawParameters,
    pub mode: DilutionMode,
}

impl Default for ModelSetup {
    fn default() -> Self {
        Self { raw: RawParameters::baseline(), mode: DilutionMode::Downstream }
    }
}

impl ModelSetup {
    pub fn derive(&self) -> Result<DerivedParameters, ModelError> {
        derive_effective(&self.raw, self.mode)
    }

    pub fn effective(&self) -> Result<EffectiveParameters, ModelError> {
        Ok(self.derive()?.params)
    }

    pub fn with(&self, param: ScanParameter, value: f64) -> Self {
        let mut out = self.clone();
        param.apply(&mut out.raw, value);
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScanParameter {
    Su,
    Sd,
    Gz,
    Gs,
    Gf,
    M1,
    M2,
    M3,
    Kp,
    Kz,
    Kf,
    A,
}

impl ScanParameter {
    pub const ALL: [ScanParameter; 12] = [
        Self::Su,
        Self::Sd,
        Self::Gz,
        Self::Gs,
        Self::Gf,
        Self::M1,
        Self::M2,
        Self::M3,
        Self::Kp,
        Self::Kz,
        Self::Kf,
        Self::A,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Su => "su",
            Self::Sd => "sd",
            Self::Gz => "gz",
            Self::Gs => "gs",
            Self::Gf => "gf",
            Self::M1 => "m1",
            Self::M2 => "m2",
            Self::M3 => "m3",
            Self::Kp => "kp",
            Self::Kz => "kz",
            Self::Kf => "kf",
            Self::A => "a",
        }
    }

    /// `gs`, `m2` and `m3` are applied as overrides.
    pub fn apply(self, raw: &mut RawParameters, v: f64) {
        match self {
            Self::Su => raw.s_u = v,
            Self::Sd => raw.s_d = v,
            Self::Gz => raw.g_z = v,
            Self::Gs => raw.gs_override = Some(v),
            Self::Gf => raw.g_f = v,
            Self::M1 => raw.m1 = v,
            Self::M2 => raw.m2_override = Some(v),
            Self::M3 => raw.m3_override = Some(v),
            Self::Kp => raw.k_p = v,
            Self::Kz => raw.k_z = v,
            Self::Kf => raw.k_f = v,
            Self::A => raw.a = v,
        }
    }
}

impl fmt::Display for ScanParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScanParameter {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL.into_iter().find(|p| p.name() == s).ok_or_else(|| format!("unknown scan parameter '{s}'"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Serial,
    #[default]
    Parallel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum ScanOutcome {
    Ok(AttractorSummary),
    Failed { error: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub param: ScanParameter,
    pub values: Vec<f64>,
    pub summaries: Vec<ScanOutcome>,
}

impl ScanResult {
    /// `(parameter value, peak level)` pairs for a bifurcation diagram.
    pub fn peak_table(&self) -> Vec<(f64, f64)> {
        self.values
            .iter()
            .zip(&self.summaries)
            .flat_map(|(v, s)| match s {
                ScanOutcome::Ok(sum) => sum.peak_values.iter().map(|p| (*v, *p)).collect(),
                ScanOutcome::Failed { .. } => Vec::new(),
            })
            .collect()
    }
}

/// `steps` evenly spaced values from `lo` to `hi` inclusive.
pub fn linear_grid(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    (0..steps).map(|i| if i + 1 == steps { hi } else { lo + (hi - lo) * i as f64 / (steps - 1) as f64 }).collect()
}

#[allow(clippy::too_many_arguments)]
pub fn bifurcation_scan(
    setup: &ModelSetup,
    param: ScanParameter,
    lo: f64,
    hi: f64,
    steps: usize,
    s0: State,
    cfg: &AnalysisConfig,
    execution: Execution,
) -> Result<ScanResult, AttractorError> {
    if steps < 2 || !(lo < hi) {
        return Err(AttractorError::InvalidConfig(format!(
            "scan needs lo < hi and steps >= 2 (got {lo}, {hi}, {steps})"
        )));
    }
    cfg.validate()?;
    let values = linear_grid(lo, hi, steps);
    let point = |v: &f64| -> ScanOutcome {
        let run = || -> Result<AttractorSummary, AttractorError> {
            let p = setup.with(param, *v).effective()?;
            classify_attractor(&p, s0, cfg)
        };
        match run() {
            Ok(s) => ScanOutcome::Ok(s),
            Err(e) => ScanOutcome::Failed { error: e.to_string() },
        }
    };
    // Both branches collect in grid order.
    let summaries = match execution {
        Execution::Serial => values.iter().map(point).collect(),
        Execution::Parallel => values.par_iter().map(point).collect(),
    };
    Ok(ScanResult { param, values, summaries })
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HopfError {
    #[error("margin D1*D2 - D3 has the same sign at both ends ({margin_lo:e} at {lo}, {margin_hi:e} at {hi})")]
    NoSignChange { lo: f64, hi: f64, margin_lo: f64, margin_hi: f64 },
    #[error("no interior equilibrium at {value}: {reason}")]
    NoInteriorEquilibrium { value: f64, reason: InteriorAbsence },
    #[error("D1 or D3 not positive at {value} (D1 = {d1:e}, D3 = {d3:e})")]
    CoefficientSign { value: f64, d1: f64, d3: f64 },
    #[error("no eigenvalue pair within 1e-4 of the imaginary axis at {value}")]
    NoImaginaryPair { value: f64 },
    #[error("invalid bracket [{lo}, {hi}] or tolerance {tol}")]
    InvalidBracket { lo: f64, hi: f64, tol: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HopfPoint {
    pub value: f64,
    pub bracket: (f64, f64),
    pub iterations: usize,
    pub eigenvalues: [Complex64; 3],
    /// `|Re λ|` of the pair closest to the imaginary axis.
    pub axis_distance: f64,
}

/// Points checked across the bracket before bisecting.
const HOPF_PRESCAN: usize = 33;
pub const HOPF_AXIS_TOL: f64 = 1e-4;

/// Bisects `D1 D2 - D3` of the characteristic polynomial returned by
/// `coefficients` over `[lo, hi]`.
pub fn bisect_hopf<F>(coefficients: F, lo: f64, hi: f64, tol: f64) -> Result<HopfPoint, HopfError>
where
    F: Fn(f64) -> Result<CharPoly, HopfError>,
{
    if !(lo < hi) || !(tol > 0.0) {
        return Err(HopfError::InvalidBracket { lo, hi, tol });
    }
    let checked = |v: f64| -> Result<f64, HopfError> {
        let c = coefficients(v)?;
        if !(c.d1 > 0.0 && c.d3 > 0.0) {
            return Err(HopfError::CoefficientSign { value: v, d1: c.d1, d3: c.d3 });
        }
        Ok(c.margin())
    };
    for v in linear_grid(lo, hi, HOPF_PRESCAN) {
        checked(v)?;
    }
    let (mut a, mut b) = (lo, hi);
    let (mut ma, mb) = (checked(a)?, checked(b)?);
    if ma * mb >= 0.0 {
        if ma == 0.0 || mb == 0.0 {
            let v = if ma == 0.0 { a } else { b };
            return finish(&coefficients, v, (lo, hi), 0);
        }
        return Err(HopfError::NoSignChange { lo, hi, margin_lo: ma, margin_hi: mb });
    }
    let mut iterations = 0;
    while b - a > tol {
        let mid = 0.5 * (a + b);
        let mm = checked(mid)?;
        iterations += 1;
        if mm == 0.0 {
            a = mid;
            b = mid;
            break;
        }
        if ma * mm < 0.0 {
            b = mid;
        } else {
            a = mid;
            ma = mm;
        }
    }
    finish(&coefficients, 0.5 * (a + b), (lo, hi), iterations)
}

fn finish<F>(coefficients: &F, value: f64, bracket: (f64, f64), iterations: usize) -> Result<HopfPoint, HopfError>
where
    F: Fn(f64) -> Result<CharPoly, HopfError>,
{
    let eigenvalues = cubic_roots(&coefficients(value)?);
    let axis_distance = eigenvalues.iter().filter(|l| l.im != 0.0).map(|l| l.re.abs()).fold(f64::INFINITY, f64::min);
    if !(axis_distance < HOPF_AXIS_TOL) {
        return Err(HopfError::NoImaginaryPair { value });
    }
    Ok(HopfPoint { value, bracket, iterations, eigenvalues, axis_distance })
}

/// Locates a Hopf crossing of the interior equilibrium as `param` varies
/// over `[lo, hi]`.
pub fn hopf_locate(
    setup: &ModelSetup,
    param: ScanParameter,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<HopfPoint, HopfError> {
    let coefficients = |v: f64| -> Result<CharPoly, HopfError> {
        let p = setup.with(param, v).effective()?;
        let e = interior_equilibrium(&p).map_err(|reason| HopfError::NoInteriorEquilibrium { value: v, reason })?;
        Ok(characteristic_coefficients(&jacobian(&p, &e.state)))
    };
    bisect_hopf(coefficients, lo, hi, tol)
}

/// `max |rhs|` at the trailing state, exposed for reports.
pub fn trailing_residual(p: &EffectiveParameters, traj: &Trajectory) -> Option<f64> {
    traj.last().map(|(_, s)| residual(p, &s))
}
