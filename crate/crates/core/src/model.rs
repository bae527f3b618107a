//! Parameters, state and vector field of the salinity-coupled
//! phytoplankton (P), zooplankton (Z), fish (F) food chain:
//!
//! ```text
//! dP/dt = m1 P (1 - P/kP) - gS P Z / (P + kZ)
//! dZ/dt = a gS P Z / (P + kZ) - gF Z F / (Z + kF) - m2 Z
//! dF/dt = gF Z F / (Z + kF) - m3 F
//! ```
//!
//! The zooplankton grazing rate is scaled by a salinity dilution factor,
//! `gS = delta * gZ`, computed from the upstream and downstream salinities.

use std::fmt;
use std::ops::{Index, IndexMut, Mul};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("upstream and downstream salinity are equal ({0} ppt); dilution factor undefined")]
    EqualSalinities(f64),
    #[error("dilution factor {delta} is not positive under mode {mode}")]
    NonPositiveDilution { delta: f64, mode: DilutionMode },
    #[error("effective coefficient {name} = {value} is not positive")]
    NonPositiveEffective { name: &'static str, value: f64 },
    #[error("parameter {name} = {value} is outside its valid range")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("boundary equilibrium is degenerate (a*gS == m2)")]
    Degenerate,
}

/// How the salinity dilution factor is computed from `(sU, sD)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DilutionMode {
    /// `sU / (sU - sD)`, rejected when not positive.
    Paper,
    /// `|sU / (sU - sD)|`.
    Magnitude,
    /// `sD / (sD - sU)`, rejected when not positive.
    #[default]
    Downstream,
}

impl DilutionMode {
    pub const ALL: [DilutionMode; 3] = [Self::Paper, Self::Magnitude, Self::Downstream];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Paper => "paper",
            Self::Magnitude => "magnitude",
            Self::Downstream => "downstream",
        }
    }
}

impl fmt::Display for DilutionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for DilutionMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "paper" => Ok(Self::Paper),
            "magnitude" => Ok(Self::Magnitude),
            "downstream" => Ok(Self::Downstream),
            other => Err(format!("unknown dilution mode '{other}'")),
        }
    }
}

/// Salinity dilution factor multiplying the zooplankton grazing rate.
pub fn dilution_factor(s_up: f64, s_down: f64, mode: DilutionMode) -> Result<f64, ModelError> {
    if !(s_up >= 0.0) {
        return Err(ModelError::InvalidParameter { name: "su", value: s_up });
    }
    if !(s_down >= 0.0) {
        return Err(ModelError::InvalidParameter { name: "sd", value: s_down });
    }
    if s_up == s_down {
        return Err(ModelError::EqualSalinities(s_up));
    }
    let delta = match mode {
        DilutionMode::Paper => s_up / (s_up - s_down),
        DilutionMode::Magnitude => (s_up / (s_up - s_down)).abs(),
        DilutionMode::Downstream => s_down / (s_down - s_up),
    };
    if delta > 0.0 && delta.is_finite() {
        Ok(delta)
    } else {
        Err(ModelError::NonPositiveDilution { delta, mode })
    }
}

/// Biological rates and salinities as tabulated for the estuary.
///
/// `gs_override`, `m2_override` and `m3_override` replace the composed
/// coefficients when present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawParameters {
    pub m1: f64,
    pub g_z: f64,
    pub e_zo: f64,
    pub r_zo: f64,
    /// Fish predation rate constant. Not part of `m2`: predation already
    /// enters through the Holling term.
    pub r_fp: f64,
    pub m_z: f64,
    pub e_f: f64,
    pub m_f: f64,
    pub r_f: f64,
    pub h_f: f64,
    pub g_f: f64,
    pub k_p: f64,
    pub k_z: f64,
    pub k_f: f64,
    pub a: f64,
    pub s_u: f64,
    pub s_d: f64,
    pub gs_override: Option<f64>,
    pub m2_override: Option<f64>,
    pub m3_override: Option<f64>,
}

impl Default for RawParameters {
    fn default() -> Self {
        Self {
            m1: 0.6,
            g_z: 0.75,
            e_zo: 0.04,
            r_zo: 0.0153,
            r_fp: 0.2,
            m_z: 0.0145,
            e_f: 0.049,
            m_f: 0.021,
            r_f: 0.0125,
            h_f: 0.1090,
            g_f: 0.6894,
            k_p: 12.0,
            k_z: 38.0,
            k_f: 10.1,
            a: 0.8,
            s_u: 8.23,
            s_d: 12.30,
            gs_override: None,
            m2_override: None,
            m3_override: None,
        }
    }
}

impl RawParameters {
    /// Table defaults with the fish net mortality used in the published
    /// simulations (`m3 = 0.324`).
    pub fn baseline() -> Self {
        Self { m3_override: Some(0.324), ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let positive = [
            ("m1", self.m1),
            ("gz", self.g_z),
            ("ezo", self.e_zo),
            ("rzo", self.r_zo),
            ("rfp", self.r_fp),
            ("mz", self.m_z),
            ("ef", self.e_f),
            ("mf", self.m_f),
            ("rf", self.r_f),
            ("hf", self.h_f),
            ("gf", self.g_f),
            ("kp", self.k_p),
            ("kz", self.k_z),
            ("kf", self.k_f),
            ("a", self.a),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(ModelError::InvalidParameter { name, value });
            }
        }
        if self.a > 1.0 {
            return Err(ModelError::InvalidParameter { name: "a", value: self.a });
        }
        for (name, value) in [("su", self.s_u), ("sd", self.s_d)] {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(ModelError::InvalidParameter { name, value });
            }
        }
        if self.s_u == self.s_d && self.gs_override.is_none() {
            return Err(ModelError::EqualSalinities(self.s_u));
        }
        for (name, value) in
            [("gs_override", self.gs_override), ("m2_override", self.m2_override), ("m3_override", self.m3_override)]
        {
            if let Some(v) = value {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(ModelError::InvalidParameter { name, value: v });
                }
            }
        }
        Ok(())
    }
}

/// The nine coefficients appearing in the vector field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveParameters {
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
    pub g_s: f64,
    pub g_f: f64,
    pub k_p: f64,
    pub k_z: f64,
    pub k_f: f64,
    pub a: f64,
}

impl EffectiveParameters {
    /// Coefficients of the published baseline run with the grazing rate
    /// derived from `(sU, sD) = (8.23, 12.30)` in downstream mode.
    pub fn baseline() -> Self {
        derive_effective(&RawParameters::baseline(), DilutionMode::Downstream)
            .expect("baseline parameters are valid")
            .params
    }

    /// Hastings–Powell tri-trophic chain (a1 = 5, b1 = 3, a2 = 0.1, b2 = 2,
    /// d1 = 0.4, d2 = 0.01) written in this model's coefficients.
    pub fn hastings_powell() -> Self {
        Self { m1: 1.0, k_p: 1.0, g_s: 5.0 / 3.0, k_z: 1.0 / 3.0, a: 1.0, g_f: 0.05, k_f: 0.5, m2: 0.4, m3: 0.01 }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        for (name, value) in self.named() {
            if !(value > 0.0 && value.is_finite()) {
                return Err(ModelError::NonPositiveEffective { name, value });
            }
        }
        Ok(())
    }

    pub fn named(&self) -> [(&'static str, f64); 9] {
        [
            ("m1", self.m1),
            ("m2", self.m2),
            ("m3", self.m3),
            ("gs", self.g_s),
            ("gf", self.g_f),
            ("kp", self.k_p),
            ("kz", self.k_z),
            ("kf", self.k_f),
            ("a", self.a),
        ]
    }
}

/// Where an effective coefficient came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Composed,
    Override,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    /// `None` when the grazing rate was overridden.
    pub delta: Option<f64>,
    pub mode: DilutionMode,
    pub g_s: Origin,
    pub m2: Origin,
    pub m3: Origin,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivedParameters {
    pub params: EffectiveParameters,
    pub provenance: Provenance,
}

pub fn derive_effective(raw: &RawParameters, mode: DilutionMode) -> Result<DerivedParameters, ModelError> {
    let mut notes = Vec::new();

    let (g_s, delta, gs_origin) = match raw.gs_override {
        Some(g) => {
            notes.push(format!("gS = {g} from override"));
            (g, None, Origin::Override)
        }
        None => {
            let delta = dilution_factor(raw.s_u, raw.s_d, mode)?;
            let g = delta * raw.g_z;
            notes.push(format!("gS = delta({mode}) * gZ = {delta} * {} = {g}", raw.g_z));
            (g, Some(delta), Origin::Composed)
        }
    };

    let (m2, m2_origin) = match raw.m2_override {
        Some(m) => {
            notes.push(format!("m2 = {m} from override"));
            (m, Origin::Override)
        }
        None => {
            let m = raw.e_zo + raw.r_zo + raw.m_z;
            notes.push(format!("m2 = ezo + rzo + mz = {m} (rfp excluded)"));
            (m, Origin::Composed)
        }
    };

    let (m3, m3_origin) = match raw.m3_override {
        Some(m) => {
            notes.push(format!("m3 = {m} from override"));
            (m, Origin::Override)
        }
        None => {
            let m = raw.e_f + raw.m_f + raw.r_f + raw.h_f;
            notes.push(format!("m3 = ef + mf + rf + hf = {m}"));
            (m, Origin::Composed)
        }
    };

    let params = EffectiveParameters {
        m1: raw.m1,
        m2,
        m3,
        g_s,
        g_f: raw.g_f,
        k_p: raw.k_p,
        k_z: raw.k_z,
        k_f: raw.k_f,
        a: raw.a,
    };
    params.validate()?;

    Ok(DerivedParameters {
        params,
        provenance: Provenance { delta, mode, g_s: gs_origin, m2: m2_origin, m3: m3_origin, notes },
    })
}

/// Population densities in model units.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct State {
    #[serde(rename = "P")]
    pub p: f64,
    #[serde(rename = "Z")]
    pub z: f64,
    #[serde(rename = "F")]
    pub f: f64,
}

impl State {
    pub const fn new(p: f64, z: f64, f: f64) -> Self {
        Self { p, z, f }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.p, self.z, self.f]
    }

    pub fn from_array(v: [f64; 3]) -> Self {
        Self { p: v[0], z: v[1], f: v[2] }
    }

    pub fn is_nonnegative(&self) -> bool {
        self.p >= 0.0 && self.z >= 0.0 && self.f >= 0.0
    }

    pub fn max_abs_diff(&self, other: &State) -> f64 {
        (self.p - other.p).abs().max((self.z - other.z).abs()).max((self.f - other.f).abs())
    }
}

/// Population compartment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Species {
    P,
    Z,
    F,
}

impl Species {
    pub const ALL: [Species; 3] = [Species::P, Species::Z, Species::F];

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Species {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Species::P => "P",
            Species::Z => "Z",
            Species::F => "F",
        };
        f.write_str(s)
    }
}

/// Dense 3x3 matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Matrix3(pub [[f64; 3]; 3]);

impl Matrix3 {
    pub const ZERO: Matrix3 = Matrix3([[0.0; 3]; 3]);

    pub fn identity() -> Self {
        Matrix3([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    }

    pub fn diag(d: [f64; 3]) -> Self {
        Matrix3([[d[0], 0.0, 0.0], [0.0, d[1], 0.0], [0.0, 0.0, d[2]]])
    }

    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1] + self.0[2][2]
    }

    pub fn det(&self) -> f64 {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    pub fn transpose(&self) -> Self {
        let mut t = [[0.0; 3]; 3];
        for (i, row) in self.0.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                t[j][i] = *v;
            }
        }
        Matrix3(t)
    }

    pub fn column(&self, j: usize) -> [f64; 3] {
        [self.0[0][j], self.0[1][j], self.0[2][j]]
    }

    pub fn from_columns(c: [[f64; 3]; 3]) -> Self {
        Matrix3([[c[0][0], c[1][0], c[2][0]], [c[0][1], c[1][1], c[2][1]], [c[0][2], c[1][2], c[2][2]]])
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|v| v.is_finite())
    }

    pub fn mul_vec(&self, v: [f64; 3]) -> [f64; 3] {
        let m = &self.0;
        [
            m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
            m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
            m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
        ]
    }
}

impl Index<(usize, usize)> for Matrix3 {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.0[i][j]
    }
}

impl IndexMut<(usize, usize)> for Matrix3 {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.0[i][j]
    }
}

impl Mul for Matrix3 {
    type Output = Matrix3;

    fn mul(self, rhs: Matrix3) -> Matrix3 {
        let mut out = [[0.0; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (0..3).map(|k| self.0[i][k] * rhs.0[k][j]).sum();
            }
        }
        Matrix3(out)
    }
}

/// An autonomous vector field on R^3.
pub trait VectorField {
    fn eval(&self, y: &[f64; 3]) -> [f64; 3];
}

/// A vector field with an analytic Jacobian.
pub trait Linearization: VectorField {
    fn jacobian_at(&self, y: &[f64; 3]) -> Matrix3;
}

/// Time derivative `(dP, dZ, dF)`.
pub fn rhs(p: &EffectiveParameters, s: &State) -> [f64; 3] {
    let grazing = p.g_s * s.p * s.z / (s.p + p.k_z);
    let predation = p.g_f * s.z * s.f / (s.z + p.k_f);
    [p.m1 * s.p * (1.0 - s.p / p.k_p) - grazing, p.a * grazing - predation - p.m2 * s.z, predation - p.m3 * s.f]
}

/// Max-norm of the vector field at `s`.
pub fn residual(p: &EffectiveParameters, s: &State) -> f64 {
    rhs(p, s).iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

pub fn jacobian(p: &EffectiveParameters, s: &State) -> Matrix3 {
    let pk = s.p + p.k_z;
    let zk = s.z + p.k_f;
    let d_graze_dp = p.g_s * s.z * p.k_z / (pk * pk);
    let graze_per_z = p.g_s * s.p / pk;
    let d_pred_dz = p.g_f * s.f * p.k_f / (zk * zk);
    let pred_per_f = p.g_f * s.z / zk;
    Matrix3([
        [p.m1 * (1.0 - 2.0 * s.p / p.k_p) - d_graze_dp, -graze_per_z, 0.0],
        [p.a * d_graze_dp, p.a * graze_per_z - p.m2 - d_pred_dz, -pred_per_f],
        [0.0, d_pred_dz, pred_per_f - p.m3],
    ])
}

impl VectorField for EffectiveParameters {
    fn eval(&self, y: &[f64; 3]) -> [f64; 3] {
        rhs(self, &State::from_array(*y))
    }
}

impl Linearization for EffectiveParameters {
    fn jacobian_at(&self, y: &[f64; 3]) -> Matrix3 {
        jacobian(self, &State::from_array(*y))
    }
}
