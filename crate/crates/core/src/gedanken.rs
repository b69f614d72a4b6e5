//! Two-source thought experiment.
//!
//! Two identical sources feed a balanced beam splitter; the first source's
//! photons pass a polarization rotator (angle `γ`), and a device attached to
//! that source reports an emission with probability `1 − 𝓜²`. The
//! superposed output passes a polarizer at `θ` before detection.
//!
//! `γ` controls distinguishability that the polarizer can erase, `𝓜`
//! controls distinguishability that nothing downstream can erase.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::optics::check_rotation_angle;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GedankenConfig {
    /// Rotator angle, radians. `cos γ ≥ 0`.
    pub gamma: f64,
    /// Amplitude scale of the non-reporting branch, in `[0, 1]`.
    pub m: f64,
    pub phi1: f64,
    pub phi2: f64,
    /// Polarizer angle, radians.
    pub theta: f64,
}

impl GedankenConfig {
    pub fn new(gamma: f64, m: f64, phi1: f64, phi2: f64, theta: f64) -> Result<Self> {
        let cfg = GedankenConfig {
            gamma,
            m,
            phi1,
            phi2,
            theta,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        check_rotation_angle(self.gamma)?;
        check_m(self.m)?;
        if !(self.phi1.is_finite() && self.phi2.is_finite() && self.theta.is_finite()) {
            return Err(Error::parameter("phase", "not finite"));
        }
        Ok(())
    }

    /// Single-path detection amplitudes `(α₁, α₂)`.
    fn amplitudes(&self) -> ((f64, f64), (f64, f64)) {
        let a1 = (self.theta - self.gamma).cos() / 2.0;
        let a2 = self.theta.cos() / 2.0;
        (
            (a1 * self.phi1.cos(), a1 * self.phi1.sin()),
            (a2 * self.phi2.cos(), a2 * self.phi2.sin()),
        )
    }
}

fn check_m(m: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&m) {
        return Err(Error::parameter("M", format!("{m} outside [0, 1]")));
    }
    Ok(())
}

/// Probability of a detection:
/// `¼[cos²θ + cos²(θ−γ) + 2𝓜 cosθ cos(θ−γ) cos(φ₂−φ₁)]`.
pub fn detection_probability(cfg: &GedankenConfig) -> Result<f64> {
    cfg.validate()?;
    let (c0, c1) = (cfg.theta.cos(), (cfg.theta - cfg.gamma).cos());
    Ok(0.25 * (c0 * c0 + c1 * c1 + 2.0 * cfg.m * c0 * c1 * (cfg.phi2 - cfg.phi1).cos()))
}

/// `(Φ_max, Φ_min)` over polarizer angles at zero relative phase, reached at
/// `θ = γ/2` and `θ = γ/2 ± π/2`.
pub fn extremal_probabilities(gamma: f64, m: f64) -> Result<(f64, f64)> {
    check_rotation_angle(gamma)?;
    check_m(m)?;
    let (s, c) = (gamma / 2.0).sin_cos();
    Ok(((1.0 + m) * c * c / 2.0, (1.0 - m) * s * s / 2.0))
}

/// `(𝓜 + cos γ)/(1 + 𝓜 cos γ)`.
pub fn degree_of_polarization(gamma: f64, m: f64) -> Result<f64> {
    check_rotation_angle(gamma)?;
    check_m(m)?;
    let c = gamma.cos();
    Ok((m + c) / (1.0 + m * c))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub detections: u64,
    pub samples: u64,
}

/// Samples per independently seeded shard. Fixed so that results do not
/// depend on the number of worker threads.
const SHARD_SIZE: u64 = 1 << 16;

/// Monte-Carlo estimate of [`detection_probability`] by sampling emission
/// events one photon at a time.
///
/// Each sample picks a source with probability ½. A photon from the first
/// source is reported with probability `1 − 𝓜²`; it then reaches the
/// detector as a single-path photon (probability `2|α₁|²`). Otherwise the
/// photon is in the coherent superposition of the two paths with relative
/// weights `𝓜` and `1`, detected with probability
/// `2|𝓜α₁ + α₂|²/(1 + 𝓜²)`.
///
/// Deterministic in `(seed, samples)`: shard `k` draws from ChaCha stream `k`
/// of `seed`, and shard counts are summed.
pub fn monte_carlo_detection(cfg: &GedankenConfig, samples: u64, seed: u64) -> Result<McEstimate> {
    cfg.validate()?;
    if samples == 0 {
        return Err(Error::parameter("samples", "must be at least 1"));
    }
    let ((a1r, a1i), (a2r, a2i)) = cfg.amplitudes();
    let m = cfg.m;
    let p_flagged_detect = 2.0 * (a1r * a1r + a1i * a1i);
    let (cr, ci) = (m * a1r + a2r, m * a1i + a2i);
    let p_coherent_detect = 2.0 * (cr * cr + ci * ci) / (1.0 + m * m);
    let p_report = 1.0 - m * m;

    let shards = samples.div_ceil(SHARD_SIZE);
    let detections: u64 = (0..shards)
        .into_par_iter()
        .map(|k| {
            let n = SHARD_SIZE.min(samples - k * SHARD_SIZE);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k);
            let mut hits = 0u64;
            for _ in 0..n {
                let from_first = rng.random_bool(0.5);
                let flagged = from_first && rng.random::<f64>() < p_report;
                let p = if flagged { p_flagged_detect } else { p_coherent_detect };
                if rng.random::<f64>() < p {
                    hits += 1;
                }
            }
            hits
        })
        .sum();

    let estimate = detections as f64 / samples as f64;
    Ok(McEstimate {
        estimate,
        std_error: (estimate * (1.0 - estimate) / samples as f64).sqrt(),
        detections,
        samples,
    })
}
