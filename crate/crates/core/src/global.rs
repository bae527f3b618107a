//! Absorbing-set bound, the sufficient condition `mu > 0` for global
//! stability of the coexistence state, and the Lozinskii measure of the
//! compound-matrix system evaluated along trajectories.
//!
//! The measure is taken in the coordinates `x = 1/P, y = Z, z = F` with the
//! norm `|(u, v, w)| = max(|u|, |v| + |w|)`, which splits it into two
//! branch expressions `l1` and `l2`; `Γ(B) = max(l1, l2)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::integrate::Trajectory;
use crate::model::{rhs, EffectiveParameters, State, VectorField};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GlobalError {
    #[error("phytoplankton density is zero; x = 1/P is undefined")]
    ZeroPhytoplankton,
    #[error("a population is zero; growth ratios undefined")]
    ZeroPopulation,
    #[error("a population is zero at t = {0}; growth ratios undefined")]
    ZeroPopulationAt(f64),
    #[error("need at least two trajectory samples, got {0}")]
    InsufficientSamples(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundMode {
    /// `a (m1 + v)² kP / 4`.
    Paper,
    /// `a (m1 + v)² kP / (4 m1 v)`.
    #[default]
    Corrected,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundednessBound {
    /// Decay rate `min(m2, m3)`, per day.
    pub v: f64,
    /// Eventual upper bound on `a P + Z + F`.
    pub rho: f64,
    pub mode: BoundMode,
}

/// `X = a P + Z + F`, the quantity bounded by the absorbing set.
pub fn weighted_total(p: &EffectiveParameters, s: &State) -> f64 {
    p.a * s.p + s.z + s.f
}

pub fn absorbing_bound(p: &EffectiveParameters, mode: BoundMode) -> BoundednessBound {
    let v = p.m2.min(p.m3);
    let base = p.a * (p.m1 + v).powi(2) * p.k_p / 4.0;
    let rho = match mode {
        BoundMode::Paper => base,
        BoundMode::Corrected => base / (p.m1 * v),
    };
    BoundednessBound { v, rho, mode }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalCertificate {
    pub mu: f64,
    pub holds: bool,
    pub rho_used: f64,
    pub notes: Vec<String>,
}

/// `mu = 2 gS / (rho + kF) - (gS/kZ + gF/kF) rho - (m1 + m3)`; the
/// coexistence state is globally stable when `mu > 0`.
pub fn mu_certificate(p: &EffectiveParameters, rho: f64) -> GlobalCertificate {
    let mu = 2.0 * p.g_s / (rho + p.k_f) - (p.g_s / p.k_z + p.g_f / p.k_f) * rho - (p.m1 + p.m3);
    let holds = mu > 0.0;
    let mut notes = Vec::new();
    if !holds {
        notes.push("mu <= 0: the sufficient condition does not apply; stability must be checked numerically".into());
    }
    GlobalCertificate { mu, holds, rho_used: rho, notes }
}

/// `(P, Z, F) -> (1/P, Z, F)`.
pub fn transform_state(s: &State) -> Result<[f64; 3], GlobalError> {
    if s.p == 0.0 {
        return Err(GlobalError::ZeroPhytoplankton);
    }
    Ok([1.0 / s.p, s.z, s.f])
}

pub fn inverse_transform(x: &[f64; 3]) -> Result<State, GlobalError> {
    if x[0] == 0.0 {
        return Err(GlobalError::ZeroPhytoplankton);
    }
    Ok(State::new(1.0 / x[0], x[1], x[2]))
}

/// The food chain in `(x, y, z) = (1/P, Z, F)` coordinates, with
/// `dx/dt = -x² dP/dt`.
#[derive(Debug, Clone, Copy)]
pub struct TransformedSystem(pub EffectiveParameters);

impl VectorField for TransformedSystem {
    fn eval(&self, v: &[f64; 3]) -> [f64; 3] {
        let p = &self.0;
        let [x, y, z] = *v;
        let denom = 1.0 + x * p.k_z;
        let predation = p.g_f * y * z / (y + p.k_f);
        [
            -p.m1 * x + p.m1 / p.k_p + p.g_s * x * x * y / denom,
            p.a * p.g_s * y / denom - predation - p.m2 * y,
            predation - p.m3 * z,
        ]
    }
}

/// Both branches of the Lozinskii measure at one state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LozinskiiSample {
    pub l1: f64,
    pub l2: f64,
    pub gamma: f64,
    /// Whether `1 < x kP < 2`, the window in which `l2` dominates.
    pub in_window: bool,
}

pub fn lozinskii_terms(p: &EffectiveParameters, s: &State) -> Result<LozinskiiSample, GlobalError> {
    if s.p == 0.0 || s.z == 0.0 || s.f == 0.0 {
        return Err(GlobalError::ZeroPopulation);
    }
    let [x, y, z] = transform_state(s)?;
    let d = rhs(p, s);
    let (dy, dz) = (d[1], d[2]);
    let xk = 1.0 + x * p.k_z;
    let yk = y + p.k_f;

    let l1 = x * p.g_s * y * (2.0 + x * p.k_z) / (xk * xk) - p.m1 + p.g_f * y * z / (yk * yk) + p.g_f * y / yk;
    let l2 =
        dy / y - dz / z - 2.0 * p.m1 * (1.0 - 1.0 / (x * p.k_p)) + p.g_s * y * x / xk + p.g_f * y * p.k_f / (yk * yk);
    let xkp = x * p.k_p;
    Ok(LozinskiiSample { l1, l2, gamma: l1.max(l2), in_window: xkp > 1.0 && xkp < 2.0 })
}

pub fn lozinskii_measure(p: &EffectiveParameters, s: &State) -> Result<f64, GlobalError> {
    Ok(lozinskii_terms(p, s)?.gamma)
}

pub fn lozinskii_profile(p: &EffectiveParameters, traj: &Trajectory) -> Result<Vec<LozinskiiSample>, GlobalError> {
    traj.times
        .iter()
        .zip(&traj.states)
        .map(|(t, s)| lozinskii_terms(p, s).map_err(|_| GlobalError::ZeroPopulationAt(*t)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LozinskiiAverage {
    /// `(1/T) ∫ Γ(B) dt` by the trapezoid rule.
    pub mean: f64,
    /// Fraction of samples inside `1 < x kP < 2`.
    pub window_fraction: f64,
}

pub fn lozinskii_average(p: &EffectiveParameters, traj: &Trajectory) -> Result<LozinskiiAverage, GlobalError> {
    if traj.len() < 2 {
        return Err(GlobalError::InsufficientSamples(traj.len()));
    }
    let profile = lozinskii_profile(p, traj)?;
    let integral: f64 = traj
        .times
        .windows(2)
        .zip(profile.windows(2))
        .map(|(t, g)| 0.5 * (t[1] - t[0]) * (g[0].gamma + g[1].gamma))
        .sum();
    let span = traj.times[traj.len() - 1] - traj.times[0];
    let inside = profile.iter().filter(|s| s.in_window).count();
    Ok(LozinskiiAverage { mean: integral / span, window_fraction: inside as f64 / profile.len() as f64 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibria::interior_equilibrium;

    #[test]
    fn baseline_bounds() {
        let p = EffectiveParameters::baseline();
        let c = absorbing_bound(&p, BoundMode::Corrected);
        assert_eq!(c.v, 0.0698);
        assert!((c.rho - 25.709572492836674).abs() < 1e-9);
        let lit = absorbing_bound(&p, BoundMode::Paper);
        assert!((lit.rho - 1.076716896).abs() < 1e-9);
        let e = interior_equilibrium(&p).unwrap().state;
        assert!(weighted_total(&p, &e) > lit.rho);
        assert!(weighted_total(&p, &e) < c.rho);
    }

    #[test]
    fn equal_mortalities() {
        let p = EffectiveParameters { m2: 0.2, m3: 0.2, ..EffectiveParameters::baseline() };
        assert_eq!(absorbing_bound(&p, BoundMode::Corrected).v, 0.2);
    }

    #[test]
    fn certificate_branches() {
        let p = EffectiveParameters::baseline();
        let c = mu_certificate(&p, 25.709572492836674);
        assert!(!c.holds && c.mu < 0.0);
        assert!((c.mu - (-4.085776272921706)).abs() < 1e-9);

        let synth = EffectiveParameters { g_s: 10.0, k_f: 1.0, k_z: 100.0, g_f: 0.01, m1: 0.1, m3: 0.1, ..p };
        let c = mu_certificate(&synth, 0.1);
        assert!(c.holds);
        assert!((c.mu - 17.97081818181818).abs() < 1e-9);

        let zero = EffectiveParameters { g_s: 0.0, ..p };
        let c = mu_certificate(&zero, 3.0);
        assert!((c.mu - (-(p.g_f / p.k_f) * 3.0 - (p.m1 + p.m3))).abs() < 1e-15);
    }

    #[test]
    fn certificate_decreases_in_rho() {
        let p = EffectiveParameters::baseline();
        for rho in [0.01, 0.5, 3.0, 25.0] {
            assert!(mu_certificate(&p, 2.0 * rho).mu < mu_certificate(&p, rho).mu);
        }
    }

    #[test]
    fn transform_fixtures() {
        assert_eq!(transform_state(&State::new(2.0, 3.0, 4.0)).unwrap(), [0.5, 3.0, 4.0]);
        assert_eq!(transform_state(&State::new(1.0, 0.0, 0.0)).unwrap(), [1.0, 0.0, 0.0]);
        assert_eq!(transform_state(&State::new(0.0, 1.0, 1.0)), Err(GlobalError::ZeroPhytoplankton));
    }

    #[test]
    fn transformed_field_is_the_pushforward() {
        let p = EffectiveParameters::baseline();
        let s = State::new(2.0, 3.0, 4.0);
        let d = rhs(&p, &s);
        let t = TransformedSystem(p).eval(&transform_state(&s).unwrap());
        assert!((t[0] - (-d[0] / (s.p * s.p))).abs() < 1e-15);
        assert_eq!(t[1], d[1]);
        assert_eq!(t[2], d[2]);
    }

    #[test]
    fn measure_at_interior_equilibrium() {
        let p = EffectiveParameters::baseline();
        let e = interior_equilibrium(&p).unwrap().state;
        let m = lozinskii_terms(&p, &e).unwrap();
        // Frozen from an independent evaluation of both branch formulas.
        assert!((m.l1 - 0.26281257894955584).abs() < 1e-9);
        assert!((m.l2 - (-0.33829768685971207)).abs() < 1e-9);
        assert_eq!(m.gamma, m.l1);
        assert!(!m.in_window);

        let m = lozinskii_terms(&p, &State::new(2.0, 3.0, 4.0)).unwrap();
        assert!((m.l1 - (-0.2154216060908633)).abs() < 1e-12);
        assert!((m.l2 - (-0.7318018043455198)).abs() < 1e-12);
    }

    #[test]
    fn measure_without_interactions() {
        let p = EffectiveParameters { g_s: 0.0, g_f: 0.0, ..EffectiveParameters::baseline() };
        let m = lozinskii_terms(&p, &State::new(1.0, 1.0, 1.0)).unwrap();
        assert_eq!(m.l1, -p.m1);
        assert!(matches!(lozinskii_measure(&p, &State::new(1.0, 0.0, 1.0)), Err(GlobalError::ZeroPopulation)));
    }
}
