//! Flat `key = value` run configuration.
//!
//! Every key is optional; missing keys take the baseline values. The
//! overrides accept `none` to fall back to the composed coefficient.
//! [`serialize_config`] writes every key in a fixed order, so its output is
//! a normal form and [`fingerprint`] is stable across equivalent inputs.

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::attractor::{AnalysisConfig, ModelSetup};
use crate::integrate::IntegratorConfig;
use crate::model::{DilutionMode, ModelError, RawParameters};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("unknown key '{0}'")]
    UnknownKey(String),
    #[error("line {0}: expected 'key = value'")]
    MalformedLine(usize),
    #[error("invalid value for '{key}': {reason}")]
    InvalidValue { key: String, reason: String },
    #[error("line {line}: key '{key}' given twice")]
    DuplicateKey { key: String, line: usize },
}

impl ConfigError {
    fn invalid(key: &str, reason: impl Into<String>) -> Self {
        ConfigError::InvalidValue { key: key.to_string(), reason: reason.into() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub raw: RawParameters,
    pub mode: DilutionMode,
    pub integrator: IntegratorConfig,
    /// Days discarded before long-run measurements.
    pub transient: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            raw: RawParameters::baseline(),
            mode: DilutionMode::Downstream,
            integrator: IntegratorConfig::default(),
            transient: 500.0,
        }
    }
}

impl RunConfig {
    pub fn setup(&self) -> ModelSetup {
        ModelSetup { raw: self.raw.clone(), mode: self.mode }
    }

    pub fn analysis(&self) -> AnalysisConfig {
        AnalysisConfig { integrator: self.integrator, transient: self.transient, ..AnalysisConfig::default() }
    }
}

pub const KEYS: [&str; 28] = [
    "m1",
    "gz",
    "ezo",
    "rzo",
    "rfp",
    "mz",
    "ef",
    "mf",
    "rf",
    "hf",
    "gf",
    "kp",
    "kz",
    "kf",
    "a",
    "su",
    "sd",
    "gs_override",
    "m2_override",
    "m3_override",
    "delta_mode",
    "dt",
    "t_end",
    "transient",
    "method",
    "rel_tol",
    "abs_tol",
    "sample_every",
];

fn parse_f64(key: &str, v: &str) -> Result<f64, ConfigError> {
    let x: f64 = v.parse().map_err(|_| ConfigError::invalid(key, format!("'{v}' is not a number")))?;
    if !x.is_finite() {
        return Err(ConfigError::invalid(key, "must be finite"));
    }
    Ok(x)
}

fn parse_override(key: &str, v: &str) -> Result<Option<f64>, ConfigError> {
    if v == "none" {
        Ok(None)
    } else {
        parse_f64(key, v).map(Some)
    }
}

fn slot<'a>(raw: &'a mut RawParameters, key: &str) -> Option<&'a mut f64> {
    Some(match key {
        "m1" => &mut raw.m1,
        "gz" => &mut raw.g_z,
        "ezo" => &mut raw.e_zo,
        "rzo" => &mut raw.r_zo,
        "rfp" => &mut raw.r_fp,
        "mz" => &mut raw.m_z,
        "ef" => &mut raw.e_f,
        "mf" => &mut raw.m_f,
        "rf" => &mut raw.r_f,
        "hf" => &mut raw.h_f,
        "gf" => &mut raw.g_f,
        "kp" => &mut raw.k_p,
        "kz" => &mut raw.k_z,
        "kf" => &mut raw.k_f,
        "a" => &mut raw.a,
        "su" => &mut raw.s_u,
        "sd" => &mut raw.s_d,
        _ => return None,
    })
}

fn apply(cfg: &mut RunConfig, key: &str, v: &str) -> Result<(), ConfigError> {
    if let Some(x) = slot(&mut cfg.raw, key) {
        *x = parse_f64(key, v)?;
        return Ok(());
    }
    match key {
        "gs_override" => cfg.raw.gs_override = parse_override(key, v)?,
        "m2_override" => cfg.raw.m2_override = parse_override(key, v)?,
        "m3_override" => cfg.raw.m3_override = parse_override(key, v)?,
        "delta_mode" => cfg.mode = v.parse().map_err(|e: String| ConfigError::invalid(key, e))?,
        "method" => cfg.integrator.method = v.parse().map_err(|e: String| ConfigError::invalid(key, e))?,
        "dt" => cfg.integrator.dt = parse_f64(key, v)?,
        "t_end" => cfg.integrator.t_end = parse_f64(key, v)?,
        "rel_tol" => cfg.integrator.rel_tol = parse_f64(key, v)?,
        "abs_tol" => cfg.integrator.abs_tol = parse_f64(key, v)?,
        "transient" => cfg.transient = parse_f64(key, v)?,
        "sample_every" => {
            cfg.integrator.sample_every =
                v.parse().map_err(|_| ConfigError::invalid(key, format!("'{v}' is not a positive integer")))?
        }
        other => return Err(ConfigError::UnknownKey(other.to_string())),
    }
    Ok(())
}

fn check(cfg: &RunConfig) -> Result<(), ConfigError> {
    cfg.raw.validate().map_err(|e| match e {
        ModelError::InvalidParameter { name, .. } => ConfigError::invalid(name, e.to_string()),
        ModelError::EqualSalinities(_) => ConfigError::invalid("sd", e.to_string()),
        other => ConfigError::invalid("parameters", other.to_string()),
    })?;
    cfg.integrator.validate().map_err(|e| ConfigError::invalid("integrator", e.to_string()))?;
    if !(cfg.transient >= 0.0) || cfg.transient >= cfg.integrator.t_end {
        return Err(ConfigError::invalid("transient", "must lie in [0, t_end)"));
    }
    Ok(())
}

/// Parses configuration text. `#` starts a comment; blank lines are ignored.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::default();
    let mut seen: Vec<&str> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (key, value) = body.split_once('=').ok_or(ConfigError::MalformedLine(line_no))?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || value.is_empty() {
            return Err(ConfigError::MalformedLine(line_no));
        }
        if !KEYS.contains(&key) {
            return Err(ConfigError::UnknownKey(key.to_string()));
        }
        if seen.contains(&key) {
            return Err(ConfigError::DuplicateKey { key: key.to_string(), line: line_no });
        }
        seen.push(key);
        apply(&mut cfg, key, value)?;
    }
    check(&cfg)?;
    Ok(cfg)
}

/// Normal form: every key, in [`KEYS`] order, floats in shortest
/// round-trip notation.
pub fn serialize_config(cfg: &RunConfig) -> String {
    let r = &cfg.raw;
    let ov = |o: Option<f64>| o.map_or_else(|| "none".to_string(), |v| format!("{v:?}"));
    let values = [
        format!("{:?}", r.m1),
        format!("{:?}", r.g_z),
        format!("{:?}", r.e_zo),
        format!("{:?}", r.r_zo),
        format!("{:?}", r.r_fp),
        format!("{:?}", r.m_z),
        format!("{:?}", r.e_f),
        format!("{:?}", r.m_f),
        format!("{:?}", r.r_f),
        format!("{:?}", r.h_f),
        format!("{:?}", r.g_f),
        format!("{:?}", r.k_p),
        format!("{:?}", r.k_z),
        format!("{:?}", r.k_f),
        format!("{:?}", r.a),
        format!("{:?}", r.s_u),
        format!("{:?}", r.s_d),
        ov(r.gs_override),
        ov(r.m2_override),
        ov(r.m3_override),
        cfg.mode.as_str().to_string(),
        format!("{:?}", cfg.integrator.dt),
        format!("{:?}", cfg.integrator.t_end),
        format!("{:?}", cfg.transient),
        cfg.integrator.method.as_str().to_string(),
        format!("{:?}", cfg.integrator.rel_tol),
        format!("{:?}", cfg.integrator.abs_tol),
        cfg.integrator.sample_every.to_string(),
    ];
    KEYS.iter().zip(values).map(|(k, v)| format!("{k} = {v}\n")).collect()
}

/// SHA-256 of the normal form, hex encoded.
pub fn fingerprint(cfg: &RunConfig) -> String {
    hex::encode(Sha256::digest(serialize_config(cfg).as_bytes()))
}
