//! Closed-form steady states and their feasibility.

use serde::{Deserialize, Serialize};

use crate::model::{residual, EffectiveParameters, ModelError, State};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EquilibriumKind {
    Null,
    Axial,
    Boundary,
    Interior,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Equilibrium {
    pub kind: EquilibriumKind,
    pub state: State,
    pub feasible: bool,
    /// Max-norm of the vector field at `state`.
    pub residual: f64,
    pub notes: Vec<String>,
}

impl Equilibrium {
    fn new(kind: EquilibriumKind, p: &EffectiveParameters, state: State, feasible: bool) -> Self {
        Self { kind, state, feasible, residual: residual(p, &state), notes: Vec::new() }
    }
}

/// Why no positive interior equilibrium exists.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
pub enum InteriorAbsence {
    /// `gF <= m3`: fish cannot grow on any zooplankton density.
    #[error("fish growth rate does not exceed fish mortality (gF <= m3)")]
    FishGrowthTooLow,
    #[error("the phytoplankton quadratic has no positive root")]
    NoPositiveRoot,
    #[error("the zooplankton balance requires negative fish density")]
    NegativeFishDensity,
}

pub fn null_equilibrium(p: &EffectiveParameters) -> Equilibrium {
    Equilibrium::new(EquilibriumKind::Null, p, State::new(0.0, 0.0, 0.0), true)
}

pub fn axial_equilibrium(p: &EffectiveParameters) -> Equilibrium {
    Equilibrium::new(EquilibriumKind::Axial, p, State::new(p.k_p, 0.0, 0.0), true)
}

/// Fish-free steady state `(P2, Z2, 0)`.
pub fn boundary_equilibrium(p: &EffectiveParameters) -> Result<Equilibrium, ModelError> {
    let net = p.a * p.g_s - p.m2;
    if net == 0.0 {
        return Err(ModelError::Degenerate);
    }
    let growth = p.a * p.k_p * p.g_s - p.k_p * p.m2 - p.m2 * p.k_z;
    let p2 = p.m2 * p.k_z / net;
    let z2 = p.a * p.m1 * p.k_z * growth / (net * net * p.k_p);
    let feasible = net > 0.0 && growth > 0.0;
    let mut e = Equilibrium::new(EquilibriumKind::Boundary, p, State::new(p2, z2, 0.0), feasible);
    if !feasible {
        e.notes.push(if net <= 0.0 {
            "a*gS <= m2: zooplankton cannot persist on phytoplankton".to_string()
        } else {
            "a*kP*gS - kP*m2 - m2*kZ <= 0: zooplankton density would be nonpositive".to_string()
        });
    }
    Ok(e)
}

/// Zooplankton density at any coexistence state, `m3 kF / (gF - m3)`.
pub fn interior_zooplankton(p: &EffectiveParameters) -> Option<f64> {
    (p.g_f > p.m3).then(|| p.m3 * p.k_f / (p.g_f - p.m3))
}

/// Coefficients `(A0, A1, A2)` of `A0 P^2 - A1 P - A2 = 0`, the phytoplankton
/// balance multiplied through by `m1 (gF - m3)`.
pub fn interior_quadratic(p: &EffectiveParameters) -> (f64, f64, f64) {
    let scale = p.m1 * (p.g_f - p.m3);
    let a0 = scale;
    let a1 = scale * (p.k_p - p.k_z);
    let a2 = p.k_p * p.k_z * scale - p.m3 * p.k_f * p.g_s * p.k_p;
    (a0, a1, a2)
}

/// Larger root of `P^2 - b P - c = 0`, avoiding cancellation.
fn larger_root(b: f64, c: f64) -> Option<(f64, f64)> {
    let disc = b * b + 4.0 * c;
    if disc < 0.0 || !disc.is_finite() {
        return None;
    }
    let sq = disc.sqrt();
    let big = if b >= 0.0 { 0.5 * (b + sq) } else { 2.0 * c / (sq - b) };
    // Vieta: product of roots is -c.
    let small = if big != 0.0 { -c / big } else { 0.5 * (b - sq) };
    Some((big, small))
}

pub fn interior_equilibrium(p: &EffectiveParameters) -> Result<Equilibrium, InteriorAbsence> {
    let z = interior_zooplankton(p).ok_or(InteriorAbsence::FishGrowthTooLow)?;
    let b = p.k_p - p.k_z;
    let c = p.k_p * p.k_z - p.g_s * z * p.k_p / p.m1;
    let (mut root, other) = larger_root(b, c).ok_or(InteriorAbsence::NoPositiveRoot)?;
    if !(root > 0.0) {
        return Err(InteriorAbsence::NoPositiveRoot);
    }
    // One Newton step on m1 (1 - P/kP)(P + kZ) - gS Z = 0 tightens the
    // phytoplankton residual.
    let g = |x: f64| p.m1 * (1.0 - x / p.k_p) * (x + p.k_z) - p.g_s * z;
    let dg = |x: f64| p.m1 * (1.0 - (2.0 * x + p.k_z) / p.k_p);
    let slope = dg(root);
    if slope != 0.0 {
        let polished = root - g(root) / slope;
        if polished > 0.0 && g(polished).abs() <= g(root).abs() {
            root = polished;
        }
    }

    let intake = p.a * p.g_s * root / (root + p.k_z) - p.m2;
    let f = (z + p.k_f) * intake / p.g_f;
    if !(f > 0.0) {
        return Err(InteriorAbsence::NegativeFishDensity);
    }
    let mut e = Equilibrium::new(EquilibriumKind::Interior, p, State::new(root, z, f), true);
    if other > 0.0 {
        e.notes.push(format!("second positive phytoplankton root at P = {other}"));
    }
    Ok(e)
}

/// Null, axial, boundary and (when present) interior equilibria, in that order.
pub fn all_equilibria(p: &EffectiveParameters) -> Vec<Equilibrium> {
    let mut out = vec![null_equilibrium(p), axial_equilibrium(p)];
    if let Ok(b) = boundary_equilibrium(p) {
        out.push(b);
    }
    if let Ok(i) = interior_equilibrium(p) {
        out.push(i);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{derive_effective, DilutionMode, RawParameters};

    /// Scalar bisection on m1 (1 - P/kP)(P + kZ) = gS Z*, the phytoplankton
    /// balance without the quadratic formula.
    fn bisect_phyto(p: &EffectiveParameters, z: f64, mut lo: f64, mut hi: f64) -> f64 {
        let g = |x: f64| p.m1 * (1.0 - x / p.k_p) * (x + p.k_z) - p.g_s * z;
        assert!(g(lo) * g(hi) < 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(lo) * g(mid) <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn baseline_interior_matches_bisection() {
        let p = EffectiveParameters::baseline();
        let e = interior_equilibrium(&p).unwrap();
        let z = p.m3 * p.k_f / (p.g_f - p.m3);
        let pb = bisect_phyto(&p, z, 0.0, p.k_p);
        assert!((e.state.p - pb).abs() < 1e-12);
        assert!((e.state.p - 1.79947707).abs() < 1e-7);
        assert!((e.state.z - 8.95566502).abs() < 1e-7);
        assert!((e.state.f - 0.33678663).abs() < 1e-7);
        assert!(e.residual < 1e-10);
    }

    #[test]
    fn baseline_boundary() {
        let p = EffectiveParameters::baseline();
        let e = boundary_equilibrium(&p).unwrap();
        assert!(e.feasible);
        assert!((e.state.p - 1.5213358).abs() < 1e-6);
        assert!((e.state.z - 9.1355685).abs() < 1e-6);
        assert_eq!(e.state.f, 0.0);
        assert!(e.residual < 1e-10);
    }

    #[test]
    fn boundary_infeasible_and_degenerate() {
        let base = EffectiveParameters::baseline();
        let p = EffectiveParameters { g_s: 0.05, ..base };
        assert!(!boundary_equilibrium(&p).unwrap().feasible);
        let p = EffectiveParameters { g_s: base.m2 / base.a, ..base };
        assert_eq!(boundary_equilibrium(&p), Err(ModelError::Degenerate));
        let p = EffectiveParameters { m2: 0.0, ..base };
        assert_eq!(boundary_equilibrium(&p).unwrap().state.p, 0.0);
    }

    #[test]
    fn interior_absence_reasons() {
        let base = EffectiveParameters::baseline();
        let p = EffectiveParameters { g_f: 0.3, ..base };
        assert_eq!(interior_equilibrium(&p), Err(InteriorAbsence::FishGrowthTooLow));
        assert_eq!(all_equilibria(&p).len(), 3);

        let raw = RawParameters { s_u: 8.51, ..RawParameters::baseline() };
        let p = derive_effective(&raw, DilutionMode::Downstream).unwrap().params;
        assert!((p.g_s / 0.75 - 3.2453825857519782).abs() < 1e-12);
        assert_eq!(interior_equilibrium(&p), Err(InteriorAbsence::NegativeFishDensity));

        // Heavy grazing pushes the phytoplankton root below zero.
        let p = EffectiveParameters { g_s: 50.0, ..base };
        assert_eq!(interior_equilibrium(&p), Err(InteriorAbsence::NoPositiveRoot));
    }

    #[test]
    fn enumeration_order() {
        let p = EffectiveParameters::baseline();
        let all = all_equilibria(&p);
        let kinds: Vec<_> = all.iter().map(|e| e.kind).collect();
        assert_eq!(
            kinds,
            [EquilibriumKind::Null, EquilibriumKind::Axial, EquilibriumKind::Boundary, EquilibriumKind::Interior]
        );
        assert_eq!(all[0].state, State::new(0.0, 0.0, 0.0));
        assert_eq!(all[1].state, State::new(12.0, 0.0, 0.0));
        assert!(all.iter().all(|e| e.residual < 1e-10));
    }

    #[test]
    fn quadratic_coefficients_match_monic_form() {
        let p = EffectiveParameters::baseline();
        let (a0, a1, a2) = interior_quadratic(&p);
        let z = interior_zooplankton(&p).unwrap();
        let b = p.k_p - p.k_z;
        let c = p.k_p * p.k_z - p.g_s * z * p.k_p / p.m1;
        assert!(a0 > 0.0);
        assert!((a1 / a0 - b).abs() < 1e-12 * b.abs());
        assert!((a2 / a0 - c).abs() < 1e-12 * c.abs().max(1.0));
    }

    #[test]
    fn rising_fish_mortality_removes_interior() {
        let base = EffectiveParameters::baseline();
        let mut seen_absent = false;
        for i in 0..200 {
            let m3 = 0.30 + i as f64 * (base.g_f - 0.30) / 200.0;
            let present = interior_equilibrium(&EffectiveParameters { m3, ..base }).is_ok();
            if !present {
                seen_absent = true;
            }
            assert!(!(seen_absent && present), "interior reappeared at m3 = {m3}");
        }
        assert!(seen_absent);
    }
}
