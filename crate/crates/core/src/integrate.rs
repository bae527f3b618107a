//! Fixed-step RK4 and adaptive Dormand–Prince 5(4) integration of
//! three-dimensional autonomous systems, with optional propagation of a
//! tangent frame for Lyapunov exponents.
//!
//! Population components are kept nonnegative: a component that dips below
//! zero by no more than [`CLAMP_TOL`] is reset to the positivity floor, and a
//! larger excursion is a step failure (fixed step) or a rejected step
//! (adaptive).

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::model::{Linearization, Matrix3, State, VectorField};

pub const CLAMP_TOL: f64 = 1e-12;
pub const DT_MIN: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntegrationError {
    #[error("step failure at t = {t}: {reason}")]
    StepFailure { t: f64, reason: String },
    #[error("non-finite state at t = {t}")]
    NonFiniteState { t: f64 },
    #[error("invalid integrator configuration: {0}")]
    InvalidConfig(String),
    #[error("initial state {0:?} has a negative component")]
    NegativeInitialState(State),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "rk4")]
    Rk4Fixed,
    #[serde(rename = "rk45")]
    Rk45Adaptive,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Rk4Fixed => "rk4",
            Method::Rk45Adaptive => "rk45",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rk4" => Ok(Method::Rk4Fixed),
            "rk45" => Ok(Method::Rk45Adaptive),
            other => Err(format!("unknown method '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub method: Method,
    /// Fixed step (RK4) or initial step (RK45), days.
    pub dt: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub t_end: f64,
    /// Keep every n-th accepted step. The initial and final states are
    /// always kept.
    pub sample_every: usize,
    /// Value a slightly negative population is reset to.
    pub positivity_floor: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            method: Method::Rk4Fixed,
            dt: 0.01,
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            t_end: 1000.0,
            sample_every: 10,
            positivity_floor: 0.0,
        }
    }
}

impl IntegratorConfig {
    pub fn rk4(dt: f64, t_end: f64) -> Self {
        Self { method: Method::Rk4Fixed, dt, t_end, sample_every: 1, ..Self::default() }
    }

    pub fn rk45(rel_tol: f64, abs_tol: f64, t_end: f64) -> Self {
        Self { method: Method::Rk45Adaptive, dt: 0.01, rel_tol, abs_tol, t_end, sample_every: 1, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), IntegrationError> {
        let bad = |m: &str| Err(IntegrationError::InvalidConfig(m.to_string()));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("dt must be positive");
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return bad("t_end must be positive");
        }
        if self.method == Method::Rk45Adaptive && !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return bad("rel_tol and abs_tol must be positive");
        }
        if self.sample_every == 0 {
            return bad("sample_every must be at least 1");
        }
        if !(self.positivity_floor >= 0.0 && self.positivity_floor <= CLAMP_TOL) {
            return bad("positivity_floor must lie in [0, 1e-12]");
        }
        Ok(())
    }

    pub fn canonical(&self) -> String {
        format!(
            "method={};dt={:?};rel_tol={:?};abs_tol={:?};t_end={:?};sample_every={};floor={:?}",
            self.method.as_str(),
            self.dt,
            self.rel_tol,
            self.abs_tol,
            self.t_end,
            self.sample_every,
            self.positivity_floor
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    /// Debug rendering of the vector field's parameters.
    pub system: String,
    pub config: IntegratorConfig,
    /// SHA-256 of the system and configuration.
    pub fingerprint: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<State>,
    pub meta: TrajectoryMeta,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<(f64, State)> {
        Some((*self.times.last()?, *self.states.last()?))
    }

    pub fn component(&self, idx: usize) -> Vec<f64> {
        self.states.iter().map(|s| s.to_array()[idx]).collect()
    }
}

fn meta_for<S: std::fmt::Debug>(system: &S, cfg: &IntegratorConfig) -> TrajectoryMeta {
    let system = format!("{system:?}");
    let mut h = Sha256::new();
    h.update(system.as_bytes());
    h.update(b"\n");
    h.update(cfg.canonical().as_bytes());
    TrajectoryMeta { system, config: *cfg, fingerprint: hex::encode(h.finalize()) }
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, k: &[f64; N]) -> [f64; N] {
    let mut out = *y;
    for i in 0..N {
        out[i] += h * k[i];
    }
    out
}

fn rk4_step<const N: usize>(f: &impl Fn(&[f64; N]) -> [f64; N], y: &[f64; N], h: f64) -> [f64; N] {
    let k1 = f(y);
    let k2 = f(&axpy(y, 0.5 * h, &k1));
    let k3 = f(&axpy(y, 0.5 * h, &k2));
    let k4 = f(&axpy(y, h, &k3));
    let mut out = *y;
    for i in 0..N {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

// Dormand–Prince 5(4) tableau.
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] =
    [5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0];

/// One Dormand–Prince step: (fifth-order solution, error estimate).
fn dopri_step<const N: usize>(f: &impl Fn(&[f64; N]) -> [f64; N], y: &[f64; N], h: f64) -> ([f64; N], [f64; N]) {
    let mut k = [[0.0; N]; 7];
    k[0] = f(y);
    for s in 1..7 {
        let mut ys = *y;
        for (j, kj) in k.iter().enumerate().take(s) {
            let a = A[s][j];
            if a != 0.0 {
                for i in 0..N {
                    ys[i] += h * a * kj[i];
                }
            }
        }
        k[s] = f(&ys);
    }
    let mut y5 = *y;
    let mut err = [0.0; N];
    for i in 0..N {
        let mut s5 = 0.0;
        let mut s4 = 0.0;
        for s in 0..7 {
            s5 += B5[s] * k[s][i];
            s4 += B4[s] * k[s][i];
        }
        y5[i] += h * s5;
        err[i] = h * (s5 - s4);
    }
    (y5, err)
}

enum Positivity {
    Ok,
    Violated(usize, f64),
}

/// Clamp tiny negative excursions of the first three components.
fn enforce_positivity<const N: usize>(y: &mut [f64; N], floor: f64) -> Positivity {
    for (i, v) in y.iter_mut().take(3).enumerate() {
        if *v < 0.0 {
            if *v < -CLAMP_TOL {
                return Positivity::Violated(i, *v);
            }
            *v = floor;
        }
    }
    Positivity::Ok
}

/// Advances an N-dimensional state, sharing sampling and step-size state
/// across successive calls.
struct Stepper {
    cfg: IntegratorConfig,
    h: f64,
    accepted: usize,
}

impl Stepper {
    fn new(cfg: IntegratorConfig) -> Self {
        Self { h: cfg.dt, cfg, accepted: 0 }
    }

    fn advance<const N: usize>(
        &mut self,
        f: &impl Fn(&[f64; N]) -> [f64; N],
        y: &mut [f64; N],
        t: &mut f64,
        t_target: f64,
        on_sample: &mut impl FnMut(f64, &[f64; N]),
    ) -> Result<(), IntegrationError> {
        match self.cfg.method {
            Method::Rk4Fixed => self.advance_rk4(f, y, t, t_target, on_sample),
            Method::Rk45Adaptive => self.advance_dopri(f, y, t, t_target, on_sample),
        }
    }

    fn accept<const N: usize>(
        &mut self,
        t: f64,
        y: &mut [f64; N],
        on_sample: &mut impl FnMut(f64, &[f64; N]),
    ) -> Result<(), IntegrationError> {
        if y.iter().any(|v| !v.is_finite()) {
            return Err(IntegrationError::NonFiniteState { t });
        }
        self.accepted += 1;
        if t >= self.cfg.t_end || self.accepted.is_multiple_of(self.cfg.sample_every) {
            on_sample(t, y);
        }
        Ok(())
    }

    fn advance_rk4<const N: usize>(
        &mut self,
        f: &impl Fn(&[f64; N]) -> [f64; N],
        y: &mut [f64; N],
        t: &mut f64,
        t_target: f64,
        on_sample: &mut impl FnMut(f64, &[f64; N]),
    ) -> Result<(), IntegrationError> {
        let dt = self.cfg.dt;
        let start = *t;
        let span = t_target - start;
        if span <= 0.0 {
            return Ok(());
        }
        let n = ((span / dt) - 1e-9).ceil().max(1.0) as usize;
        for k in 0..n {
            let last = k + 1 == n;
            let t_next = if last { t_target } else { start + (k + 1) as f64 * dt };
            let h = t_next - *t;
            let mut next = rk4_step(f, y, h);
            if let Positivity::Violated(i, v) = enforce_positivity(&mut next, self.cfg.positivity_floor) {
                return Err(IntegrationError::StepFailure {
                    t: t_next,
                    reason: format!("component {i} went negative ({v:e}); reduce dt"),
                });
            }
            *y = next;
            *t = t_next;
            self.accept(*t, y, on_sample)?;
        }
        Ok(())
    }

    fn advance_dopri<const N: usize>(
        &mut self,
        f: &impl Fn(&[f64; N]) -> [f64; N],
        y: &mut [f64; N],
        t: &mut f64,
        t_target: f64,
        on_sample: &mut impl FnMut(f64, &[f64; N]),
    ) -> Result<(), IntegrationError> {
        let (rtol, atol) = (self.cfg.rel_tol, self.cfg.abs_tol);
        while *t < t_target {
            let remaining = t_target - *t;
            let last = self.h >= remaining;
            let h = if last { remaining } else { self.h };
            let (mut next, err) = dopri_step(f, y, h);
            let norm = (err
                .iter()
                .zip(y.iter().zip(next.iter()))
                .map(|(e, (a, b))| {
                    let sc = atol + rtol * a.abs().max(b.abs());
                    (e / sc).powi(2)
                })
                .sum::<f64>()
                / N as f64)
                .sqrt();
            if !norm.is_finite() {
                self.h = h * 0.2;
            } else if norm <= 1.0 {
                let violated =
                    matches!(enforce_positivity(&mut next, self.cfg.positivity_floor), Positivity::Violated(..));
                if violated {
                    self.h = h * 0.5;
                } else {
                    let factor = if norm == 0.0 { 5.0 } else { (0.9 * norm.powf(-0.2)).clamp(0.2, 5.0) };
                    *y = next;
                    *t = if last { t_target } else { *t + h };
                    // A clipped final step must not shrink the carried step.
                    self.h = if last { self.h.max(h * factor) } else { h * factor };
                    self.accept(*t, y, on_sample)?;
                    continue;
                }
            } else {
                self.h = h * (0.9 * norm.powf(-0.2)).clamp(0.2, 1.0);
            }
            if self.h < DT_MIN {
                return Err(IntegrationError::StepFailure {
                    t: *t,
                    reason: format!("adaptive step underflow (h = {:e})", self.h),
                });
            }
        }
        Ok(())
    }
}

fn check_start(s0: &State, cfg: &IntegratorConfig) -> Result<(), IntegrationError> {
    cfg.validate()?;
    if !s0.is_nonnegative() || !s0.to_array().iter().all(|v| v.is_finite()) {
        return Err(IntegrationError::NegativeInitialState(*s0));
    }
    Ok(())
}

/// Integrates any vector field from `s0` over `[0, t_end]`.
pub fn integrate_field<V>(field: &V, s0: State, cfg: &IntegratorConfig) -> Result<Trajectory, IntegrationError>
where
    V: VectorField + std::fmt::Debug,
{
    check_start(&s0, cfg)?;
    let f = |y: &[f64; 3]| field.eval(y);
    let mut times = vec![0.0];
    let mut states = vec![s0];
    let mut y = s0.to_array();
    let mut t = 0.0;
    let mut stepper = Stepper::new(*cfg);
    stepper.advance(&f, &mut y, &mut t, cfg.t_end, &mut |t, y: &[f64; 3]| {
        times.push(t);
        states.push(State::from_array(*y));
    })?;
    Ok(Trajectory { times, states, meta: meta_for(field, cfg) })
}

/// Integrates the food-chain model.
pub fn integrate(
    p: &crate::model::EffectiveParameters,
    s0: State,
    cfg: &IntegratorConfig,
) -> Result<Trajectory, IntegrationError> {
    integrate_field(p, s0, cfg)
}

/// Log growth of each tangent direction over one renormalization interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stretch {
    /// End of the interval.
    pub t: f64,
    pub dt: f64,
    pub log_growth: [f64; 3],
    /// `max |QᵀQ - I|` of the frame after renormalization.
    pub frame_defect: f64,
}

/// Modified Gram–Schmidt on the columns of `q`; returns the orthonormal
/// frame and the column norms removed.
pub fn gram_schmidt(q: &Matrix3) -> (Matrix3, [f64; 3]) {
    let mut cols = [q.column(0), q.column(1), q.column(2)];
    let mut norms = [0.0; 3];
    for i in 0..3 {
        for j in 0..i {
            let cj = cols[j];
            let dot: f64 = (0..3).map(|k| cols[i][k] * cj[k]).sum();
            for (c, b) in cols[i].iter_mut().zip(cj) {
                *c -= dot * b;
            }
        }
        let n = cols[i].iter().map(|v| v * v).sum::<f64>().sqrt();
        norms[i] = n;
        if n > 0.0 {
            for v in cols[i].iter_mut() {
                *v /= n;
            }
        }
    }
    (Matrix3::from_columns(cols), norms)
}

pub fn orthonormality_defect(q: &Matrix3) -> f64 {
    let g = q.transpose() * *q;
    let mut worst = 0.0_f64;
    for i in 0..3 {
        for j in 0..3 {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[(i, j)] - target).abs());
        }
    }
    worst
}

/// Integrates the state together with the variational equation
/// `dQ/dt = J(x(t)) Q`, re-orthonormalizing every `renorm_interval` days.
///
/// A frame whose columns have no length (a zero Jacobian keeps the identity
/// frame unchanged) contributes `log 1 = 0` per interval.
pub fn integrate_with_tangent<V>(
    field: &V,
    s0: State,
    q0: Matrix3,
    cfg: &IntegratorConfig,
    renorm_interval: f64,
) -> Result<(Trajectory, Vec<Stretch>), IntegrationError>
where
    V: Linearization + std::fmt::Debug,
{
    check_start(&s0, cfg)?;
    if orthonormality_defect(&q0) > 1e-10 {
        return Err(IntegrationError::InvalidConfig("initial tangent frame is not orthonormal".into()));
    }
    if !(renorm_interval > 0.0) {
        return Err(IntegrationError::InvalidConfig("renorm_interval must be positive".into()));
    }

    let f = |y: &[f64; 12]| {
        let x = [y[0], y[1], y[2]];
        let dx = field.eval(&x);
        let j = field.jacobian_at(&x);
        let mut out = [0.0; 12];
        out[..3].copy_from_slice(&dx);
        // Q is stored row-major in y[3..12].
        for r in 0..3 {
            for c in 0..3 {
                out[3 + 3 * r + c] = (0..3).map(|k| j[(r, k)] * y[3 + 3 * k + c]).sum();
            }
        }
        out
    };

    let mut y = [0.0; 12];
    y[..3].copy_from_slice(&s0.to_array());
    for r in 0..3 {
        for c in 0..3 {
            y[3 + 3 * r + c] = q0[(r, c)];
        }
    }

    let mut times = vec![0.0];
    let mut states = vec![s0];
    let mut stretches = Vec::new();
    let mut stepper = Stepper::new(*cfg);
    let mut t = 0.0;
    let mut k = 0usize;
    while t < cfg.t_end {
        k += 1;
        let seg_end = (k as f64 * renorm_interval).min(cfg.t_end);
        let seg_start = t;
        stepper.advance(&f, &mut y, &mut t, seg_end, &mut |t, y: &[f64; 12]| {
            times.push(t);
            states.push(State::from_array([y[0], y[1], y[2]]));
        })?;
        let mut q = Matrix3::ZERO;
        for r in 0..3 {
            for c in 0..3 {
                q[(r, c)] = y[3 + 3 * r + c];
            }
        }
        let (q, norms) = gram_schmidt(&q);
        let mut log_growth = [0.0; 3];
        for (lg, n) in log_growth.iter_mut().zip(norms) {
            if !(n > 0.0 && n.is_finite()) {
                return Err(IntegrationError::StepFailure { t, reason: "tangent frame collapsed".into() });
            }
            *lg = n.ln();
        }
        stretches.push(Stretch { t, dt: t - seg_start, log_growth, frame_defect: orthonormality_defect(&q) });
        for r in 0..3 {
            for c in 0..3 {
                y[3 + 3 * r + c] = q[(r, c)];
            }
        }
    }
    Ok((Trajectory { times, states, meta: meta_for(field, cfg) }, stretches))
}
