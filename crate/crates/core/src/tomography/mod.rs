//! Polarization-state tomography with a quarter-wave plate, a polarizer and
//! a photon-counting detector.
//!
//! The pipeline is: projectors from wave-plate/polarizer settings, Poisson
//! counts with dark counts ([`simulate_counts`]), dark-count subtraction
//! ([`background_correct`]), and maximum-likelihood reconstruction of the
//! coherence matrix ([`mle_reconstruct`]).

mod mle;
mod table;

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::coherence::CoherenceMatrix;
use crate::error::{Error, Result};
use crate::optics::{JonesMatrix, Retarder};

pub use mle::{density_from_cholesky, log_likelihood, mle_reconstruct, Reconstruction};
pub use table::{read_counts_table, write_counts_table, COUNTS_HEADER};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SettingLabel {
    H,
    V,
    D,
    R,
    Custom(String),
}

impl fmt::Display for SettingLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SettingLabel::H => f.write_str("H"),
            SettingLabel::V => f.write_str("V"),
            SettingLabel::D => f.write_str("D"),
            SettingLabel::R => f.write_str("R"),
            SettingLabel::Custom(s) => f.write_str(s),
        }
    }
}

impl FromStr for SettingLabel {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s {
            "H" => SettingLabel::H,
            "V" => SettingLabel::V,
            "D" => SettingLabel::D,
            "R" => SettingLabel::R,
            other => SettingLabel::Custom(other.to_string()),
        })
    }
}

/// Quarter-wave plate followed by a polarizer, angles in radians.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSetting {
    pub label: SettingLabel,
    pub qwp_angle: f64,
    pub polarizer_angle: f64,
}

impl MeasurementSetting {
    pub fn new(label: SettingLabel, qwp_angle: f64, polarizer_angle: f64) -> Self {
        MeasurementSetting {
            label,
            qwp_angle,
            polarizer_angle,
        }
    }

    pub fn from_degrees(label: SettingLabel, qwp_deg: f64, polarizer_deg: f64) -> Self {
        Self::new(label, qwp_deg.to_radians(), polarizer_deg.to_radians())
    }

    pub fn projector(&self) -> JonesMatrix {
        projector_from_setting(self)
    }
}

/// `H`, `V`, `D`, `R`: projectors onto `(1, 0)`, `(0, 1)`, `(1, 1)/√2` and
/// `(1, −i)/√2`.
///
/// `D` uses the plate at 45°, where the diagonal state is an eigenvector of
/// the plate; `R` uses the plate at 0°, which maps `(1, −i)/√2` onto the
/// diagonal axis of the polarizer.
pub fn default_settings() -> Vec<MeasurementSetting> {
    vec![
        MeasurementSetting::from_degrees(SettingLabel::H, 0.0, 0.0),
        MeasurementSetting::from_degrees(SettingLabel::V, 0.0, 90.0),
        MeasurementSetting::from_degrees(SettingLabel::D, 45.0, 45.0),
        MeasurementSetting::from_degrees(SettingLabel::R, 0.0, 45.0),
    ]
}

/// `Π = J_QWP† · Π_pol · J_QWP`, the Jones-space projector selected by the
/// detection arm.
pub fn projector_from_setting(s: &MeasurementSetting) -> JonesMatrix {
    let qwp = JonesMatrix::waveplate(Retarder::Quarter, s.qwp_angle);
    let pol = JonesMatrix::polarizer(s.polarizer_angle);
    JonesMatrix(qwp.adjoint().matrix() * pol.matrix() * qwp.matrix())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorModel {
    /// Counts per second per unit intensity.
    pub kappa: f64,
    /// Dark counts per second.
    pub dark_rate: f64,
    /// Seconds per setting.
    pub integration_time: f64,
}

impl Default for DetectorModel {
    fn default() -> Self {
        DetectorModel {
            kappa: 3333.0,
            dark_rate: 20.0,
            integration_time: 15.0,
        }
    }
}

impl DetectorModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.kappa >= 0.0 && self.kappa.is_finite()) {
            return Err(Error::parameter("kappa", format!("{} must be non-negative", self.kappa)));
        }
        if !(self.dark_rate >= 0.0 && self.dark_rate.is_finite()) {
            return Err(Error::parameter("dark_rate", format!("{} must be non-negative", self.dark_rate)));
        }
        if !(self.integration_time > 0.0 && self.integration_time.is_finite()) {
            return Err(Error::parameter(
                "integration_time",
                format!("{} must be positive", self.integration_time),
            ));
        }
        Ok(())
    }

    pub fn dark_counts(&self) -> f64 {
        self.dark_rate * self.integration_time
    }
}

/// `κ·tr(Π·ρ)·t + dark·t` with `ρ = Gᵀ`.
pub fn expected_counts(g: &CoherenceMatrix, s: &MeasurementSetting, d: &DetectorModel) -> f64 {
    let signal = g.transmitted_intensity(&s.projector()).max(0.0);
    d.kappa * signal * d.integration_time + d.dark_counts()
}

/// Independent Poisson draws, one per setting. Deterministic in `seed`.
pub fn simulate_counts(
    g: &CoherenceMatrix,
    settings: &[MeasurementSetting],
    d: &DetectorModel,
    seed: u64,
) -> Result<Vec<u64>> {
    d.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    settings
        .iter()
        .map(|s| {
            let mu = expected_counts(g, s, d);
            if mu <= 0.0 {
                return Ok(0);
            }
            let dist = Poisson::new(mu)
                .map_err(|e| Error::parameter("expected counts", format!("{mu}: {e}")))?;
            Ok(dist.sample(&mut rng) as u64)
        })
        .collect()
}

/// `max(raw − dark·t, 0)` per setting.
pub fn background_correct(raw: &[u64], d: &DetectorModel) -> Vec<f64> {
    let dark = d.dark_counts();
    raw.iter().map(|&n| (n as f64 - dark).max(0.0)).collect()
}

/// One complete tomography measurement and its reconstruction.
#[derive(Debug, Clone)]
pub struct TomographyRun {
    pub settings: Vec<MeasurementSetting>,
    pub raw_counts: Vec<u64>,
    pub corrected_counts: Vec<f64>,
    pub reconstruction: Reconstruction,
    /// `None` when the reconstruction has zero trace.
    pub p_estimate: Option<f64>,
}

impl TomographyRun {
    pub fn from_raw(
        settings: Vec<MeasurementSetting>,
        raw_counts: Vec<u64>,
        detector: &DetectorModel,
    ) -> Result<Self> {
        detector.validate()?;
        if raw_counts.len() != settings.len() {
            return Err(Error::parameter(
                "raw_counts",
                format!("{} counts for {} settings", raw_counts.len(), settings.len()),
            ));
        }
        let corrected_counts = background_correct(&raw_counts, detector);
        let reconstruction = mle_reconstruct(&corrected_counts, &settings)?;
        let p_estimate = reconstruction.matrix.degree_of_polarization().ok();
        Ok(TomographyRun {
            settings,
            raw_counts,
            corrected_counts,
            reconstruction,
            p_estimate,
        })
    }

    /// Simulates counts from `g` and reconstructs.
    pub fn simulate(
        g: &CoherenceMatrix,
        settings: Vec<MeasurementSetting>,
        detector: &DetectorModel,
        seed: u64,
    ) -> Result<Self> {
        let raw = simulate_counts(g, &settings, detector, seed)?;
        Self::from_raw(settings, raw, detector)
    }

    /// Delta-method standard error of `P` through the linear-inversion map,
    /// with Poisson variances taken from the raw counts.
    pub fn p_stderr(&self) -> Result<f64> {
        mle::linear_inversion_p_stderr(&self.corrected_counts, &self.raw_counts, &self.settings)
    }
}

pub fn p_from_run(run: &TomographyRun) -> Result<f64> {
    run.reconstruction.matrix.degree_of_polarization()
}
