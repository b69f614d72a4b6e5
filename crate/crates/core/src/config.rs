//! Flat `key = value` experiment configuration.
//!
//! Blank lines and `#` comments are ignored. Every key is optional; omitted
//! keys take the defaults below, which describe the ideal device locked at
//! `β = 0`.
//!
//! | key            | unit    | default  |
//! |----------------|---------|----------|
//! | `g1_mag`       | –       | 0.01     |
//! | `g1_phase_rad` | rad     | 0        |
//! | `g2_mag`       | –       | 0.01     |
//! | `g2_phase_rad` | rad     | 0        |
//! | `t_mag`        | –       | 1        |
//! | `t_phase_rad`  | rad     | 0        |
//! | `gamma_deg`    | degrees | 0        |
//! | `phi_s1_rad`   | rad     | 0        |
//! | `phi_s2_rad`   | rad     | −π/2     |
//! | `phi_i_rad`    | rad     | 0        |
//! | `eta_idler`    | –       | 1        |
//! | `bs_tx`        | –       | 1        |
//! | `bs_ty`        | –       | 1        |
//! | `mu_overlap`   | –       | 1        |
//! | `kappa_cps`    | counts/s per unit intensity | 3333 |
//! | `time_s`       | s       | 15       |
//! | `dark_cps`     | counts/s | 20      |
//!
//! `phi_s2_rad = −π/2` cancels the beam splitter's reflection phase, so the
//! defaults sit on the `β = 0` fringe maximum.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::tomography::DetectorModel;
use crate::zwm::{Imperfections, ZwmConfig};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(String),

    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },

    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },

    #[error("line {line}: duplicate key `{key}`")]
    DuplicateKey { line: usize, key: String },

    #[error("line {line}: `{key}` = `{value}` is not a number")]
    Number { line: usize, key: String, value: String },

    #[error("line {line}: `{key}` out of range: {message}")]
    Range { line: usize, key: String, message: String },
}

impl ConfigError {
    /// Process exit code: 3 for physical-range violations, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            ConfigError::Range { .. } => 3,
            _ => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentConfig {
    pub zwm: ZwmConfig,
    pub detector: DetectorModel,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            zwm: ZwmConfig::locked(1.0, 0.0),
            detector: DetectorModel::default(),
        }
    }
}

#[derive(Clone, Copy)]
enum Range {
    PairAmplitude,
    Unit,
    Gamma,
    NonNegative,
    Positive,
    Any,
}

const KEYS: [(&str, Range); 17] = [
    ("g1_mag", Range::PairAmplitude),
    ("g1_phase_rad", Range::Any),
    ("g2_mag", Range::PairAmplitude),
    ("g2_phase_rad", Range::Any),
    ("t_mag", Range::Unit),
    ("t_phase_rad", Range::Any),
    ("gamma_deg", Range::Gamma),
    ("phi_s1_rad", Range::Any),
    ("phi_s2_rad", Range::Any),
    ("phi_i_rad", Range::Any),
    ("eta_idler", Range::Unit),
    ("bs_tx", Range::Unit),
    ("bs_ty", Range::Unit),
    ("mu_overlap", Range::Unit),
    ("kappa_cps", Range::NonNegative),
    ("time_s", Range::Positive),
    ("dark_cps", Range::NonNegative),
];

fn check_range(range: Range, v: f64) -> Result<(), String> {
    let ok = match range {
        Range::PairAmplitude => v > 0.0 && v <= 0.1,
        Range::Unit => (0.0..=1.0).contains(&v),
        Range::Gamma => v.to_radians().cos() >= -crate::ANGLE_EPS,
        Range::NonNegative => v >= 0.0,
        Range::Positive => v > 0.0,
        Range::Any => true,
    };
    if ok {
        return Ok(());
    }
    Err(match range {
        Range::PairAmplitude => format!("{v} outside (0, 0.1]"),
        Range::Unit => format!("{v} outside [0, 1]"),
        Range::Gamma => format!("{v}° has negative cosine"),
        Range::NonNegative => format!("{v} is negative"),
        Range::Positive => format!("{v} is not positive"),
        Range::Any => unreachable!(),
    })
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut values: HashMap<&'static str, f64> = HashMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ConfigError::Syntax {
                line,
                message: format!("expected `key = value`, found `{content}`"),
            });
        };
        let (key, value) = (key.trim(), value.trim());
        let Some(&(name, range)) = KEYS.iter().find(|(k, _)| *k == key) else {
            return Err(ConfigError::UnknownKey {
                line,
                key: key.to_string(),
            });
        };
        let v: f64 = value
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| ConfigError::Number {
                line,
                key: key.to_string(),
                value: value.to_string(),
            })?;
        check_range(range, v).map_err(|message| ConfigError::Range {
            line,
            key: key.to_string(),
            message,
        })?;
        if values.insert(name, v).is_some() {
            return Err(ConfigError::DuplicateKey {
                line,
                key: key.to_string(),
            });
        }
    }

    let defaults = ExperimentConfig::default();
    let get = |k: &str, d: f64| values.get(k).copied().unwrap_or(d);
    let z = defaults.zwm;
    let zwm = ZwmConfig {
        g1: C64::from_polar(get("g1_mag", z.g1.norm()), get("g1_phase_rad", 0.0)),
        g2: C64::from_polar(get("g2_mag", z.g2.norm()), get("g2_phase_rad", 0.0)),
        t: C64::from_polar(get("t_mag", z.t.norm()), get("t_phase_rad", 0.0)),
        gamma: get("gamma_deg", 0.0).to_radians(),
        phi_s1: get("phi_s1_rad", z.phi_s1),
        phi_s2: get("phi_s2_rad", z.phi_s2),
        phi_i: get("phi_i_rad", z.phi_i),
        imperfections: Imperfections {
            eta_idler: get("eta_idler", 1.0),
            bs_tx: get("bs_tx", 1.0),
            bs_ty: get("bs_ty", 1.0),
            mu_overlap: get("mu_overlap", 1.0),
        },
    };
    let d = defaults.detector;
    let detector = DetectorModel {
        kappa: get("kappa_cps", d.kappa),
        dark_rate: get("dark_cps", d.dark_rate),
        integration_time: get("time_s", d.integration_time),
    };
    Ok(ExperimentConfig { zwm, detector })
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
    parse_config(&text)
}

/// Every key with its effective value, in the documented order. Parses back
/// to the same configuration.
pub fn dump_config(cfg: &ExperimentConfig) -> String {
    let z = &cfg.zwm;
    let imp = &z.imperfections;
    let d = &cfg.detector;
    let values = [
        z.g1.norm(),
        z.g1.arg(),
        z.g2.norm(),
        z.g2.arg(),
        z.t.norm(),
        if z.t == C64::default() { 0.0 } else { z.t.arg() },
        z.gamma.to_degrees(),
        z.phi_s1,
        z.phi_s2,
        z.phi_i,
        imp.eta_idler,
        imp.bs_tx,
        imp.bs_ty,
        imp.mu_overlap,
        d.kappa,
        d.integration_time,
        d.dark_rate,
    ];
    let mut out = String::new();
    for ((key, _), v) in KEYS.iter().zip(values) {
        let _ = writeln!(out, "{key} = {v}");
    }
    out
}
