//! Parameter sweeps over `(γ, |T|)` and the built-in self-test.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::gedanken::{self, GedankenConfig};
use crate::tomography::{default_settings, TomographyRun};
use crate::zwm::{self, ZwmConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepMode {
    Analytic,
    Numeric,
    Tomography,
    Gedanken,
    MonteCarlo,
}

impl SweepMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepMode::Analytic => "analytic",
            SweepMode::Numeric => "numeric",
            SweepMode::Tomography => "tomography",
            SweepMode::Gedanken => "gedanken",
            SweepMode::MonteCarlo => "montecarlo",
        }
    }

    pub fn is_stochastic(self) -> bool {
        matches!(self, SweepMode::Tomography | SweepMode::MonteCarlo)
    }
}

impl fmt::Display for SweepMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SweepMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "analytic" => SweepMode::Analytic,
            "numeric" => SweepMode::Numeric,
            "tomography" => SweepMode::Tomography,
            "gedanken" => SweepMode::Gedanken,
            "montecarlo" => SweepMode::MonteCarlo,
            other => return Err(Error::parameter("mode", format!("unknown mode `{other}`"))),
        })
    }
}

pub const DEFAULT_MC_SAMPLES: u64 = 100_000;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub gamma_deg: Vec<f64>,
    pub t_abs: Vec<f64>,
    pub mode: SweepMode,
    pub replicates: u32,
    pub seed: u64,
    /// Photon samples per polarizer setting in Monte-Carlo mode.
    pub mc_samples: u64,
}

impl SweepSpec {
    /// Range checks on the grid. Violations are [`Error::Parameter`].
    pub fn validate(&self) -> Result<()> {
        if self.gamma_deg.is_empty() || self.t_abs.is_empty() {
            return Err(Error::parameter("grid", "empty γ or |T| list"));
        }
        for &g in &self.gamma_deg {
            if !g.is_finite() || g.to_radians().cos() < -crate::ANGLE_EPS {
                return Err(Error::parameter("gamma", format!("{g}° has negative cosine")));
            }
        }
        for &t in &self.t_abs {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::parameter("t", format!("|T| = {t} outside [0, 1]")));
            }
        }
        if self.replicates == 0 {
            return Err(Error::parameter("replicates", "must be at least 1"));
        }
        if self.mc_samples == 0 {
            return Err(Error::parameter("samples", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub gamma_deg: f64,
    pub t_abs: f64,
    pub mode: SweepMode,
    pub replicate: u32,
    pub p_value: f64,
    pub p_stderr: f64,
}

pub const SWEEP_HEADER: [&str; 5] = ["gamma_deg", "t_abs", "mode", "p_value", "p_stderr"];

/// Evaluates every grid point. Rows come back ordered by `(γ, |T|, replicate)`
/// in the order given; the output does not depend on the thread count.
pub fn run_sweep(base: &ExperimentConfig, spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let reps = spec.replicates as usize;
    let points: Vec<(f64, f64, u32)> = spec
        .gamma_deg
        .iter()
        .flat_map(|&g| spec.t_abs.iter().map(move |&t| (g, t)))
        .flat_map(|(g, t)| (0..spec.replicates).map(move |r| (g, t, r)))
        .collect();
    debug_assert_eq!(points.len(), spec.gamma_deg.len() * spec.t_abs.len() * reps);

    points
        .par_iter()
        .enumerate()
        .map(|(index, &(gamma_deg, t_abs, replicate))| {
            let (p_value, p_stderr) = evaluate(base, spec, gamma_deg, t_abs, row_seed(spec.seed, index as u64))?;
            Ok(SweepRow {
                gamma_deg,
                t_abs,
                mode: spec.mode,
                replicate,
                p_value,
                p_stderr,
            })
        })
        .collect()
}

fn row_seed(seed: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng.next_u64()
}

fn point_config(base: &ExperimentConfig, gamma_deg: f64, t_abs: f64) -> ZwmConfig {
    let mut cfg = base.zwm;
    cfg.gamma = gamma_deg.to_radians();
    let phase = if cfg.t == crate::C64::default() { 0.0 } else { cfg.t.arg() };
    cfg.t = crate::C64::from_polar(t_abs, phase);
    cfg
}

fn evaluate(base: &ExperimentConfig, spec: &SweepSpec, gamma_deg: f64, t_abs: f64, seed: u64) -> Result<(f64, f64)> {
    let gamma = gamma_deg.to_radians();
    match spec.mode {
        SweepMode::Analytic => Ok((zwm::analytic_p_general(&point_config(base, gamma_deg, t_abs))?, 0.0)),
        SweepMode::Numeric => Ok((zwm::numeric_p(&point_config(base, gamma_deg, t_abs))?, 0.0)),
        SweepMode::Gedanken => Ok((gedanken::degree_of_polarization(gamma, t_abs)?, 0.0)),
        SweepMode::Tomography => {
            // Unit-trace state, so `kappa_cps` is the count rate of the full beam.
            let g = zwm::numeric_coherence(&point_config(base, gamma_deg, t_abs))?;
            let g = g.scaled(1.0 / g.trace());
            let run = TomographyRun::simulate(&g, default_settings(), &base.detector, seed)?;
            let p = run
                .p_estimate
                .ok_or_else(|| Error::IllPosed("reconstruction has zero trace".into()))?;
            Ok((p, run.p_stderr()?))
        }
        SweepMode::MonteCarlo => monte_carlo_p(gamma, t_abs, spec.mc_samples, seed),
    }
}

/// `P = (Φ_max − Φ_min)/(Φ_max + Φ_min)` from two independent runs with the
/// polarizer at `γ/2` and `γ/2 + π/2`, with a delta-method standard error.
pub fn monte_carlo_p(gamma: f64, m: f64, samples: u64, seed: u64) -> Result<(f64, f64)> {
    let at = |theta: f64, s: u64| {
        let cfg = GedankenConfig::new(gamma, m, 0.0, 0.0, theta)?;
        gedanken::monte_carlo_detection(&cfg, samples, s)
    };
    let hi = at(gamma / 2.0, seed)?;
    let lo = at(gamma / 2.0 + FRAC_PI_2, seed ^ 0x9e37_79b9_7f4a_7c15)?;
    let (a, b) = (hi.estimate, lo.estimate);
    let sum = a + b;
    if sum <= 0.0 {
        return Err(Error::IllPosed("no detections at either polarizer setting".into()));
    }
    let p = (a - b) / sum;
    let (da, db) = (2.0 * b / (sum * sum), -2.0 * a / (sum * sum));
    let se = ((da * hi.std_error).powi(2) + (db * lo.std_error).powi(2)).sqrt();
    Ok((p, se))
}

pub fn write_sweep_csv<W: Write>(writer: W, rows: &[SweepRow]) -> Result<()> {
    let io = |e: csv::Error| Error::Table {
        line: 0,
        message: e.to_string(),
    };
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(SWEEP_HEADER).map_err(io)?;
    for r in rows {
        wtr.write_record([
            r.gamma_deg.to_string(),
            r.t_abs.to_string(),
            r.mode.to_string(),
            r.p_value.to_string(),
            r.p_stderr.to_string(),
        ])
        .map_err(io)?;
    }
    wtr.flush().map_err(|e| Error::Table {
        line: 0,
        message: e.to_string(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelfTestCheck {
    pub name: &'static str,
    pub max_error: f64,
    pub tolerance: f64,
}

impl SelfTestCheck {
    pub fn passed(&self) -> bool {
        self.max_error <= self.tolerance
    }
}

fn steps(n: usize, step: f64) -> impl Iterator<Item = f64> + Clone {
    (0..n).map(move |i| i as f64 * step)
}

/// Cross-checks the closed forms, the Fock-space pipeline and the
/// single-photon model against one another.
pub fn selftest() -> Result<Vec<SelfTestCheck>> {
    let mut special_vs_gedanken = 0.0f64;
    for t in steps(21, 0.05) {
        for g in steps(19, 5.0) {
            let g = g.to_radians();
            let d = (zwm::analytic_p_special(t, g)? - gedanken::degree_of_polarization(g, t)?).abs();
            special_vs_gedanken = special_vs_gedanken.max(d);
        }
    }

    let mut numeric_vs_analytic = 0.0f64;
    for t in steps(11, 0.1) {
        for g in steps(7, 15.0) {
            for beta in [0.0, PI / 3.0, PI] {
                let cfg = ZwmConfig::locked(t, g.to_radians()).with_beta(beta);
                let d = match (zwm::numeric_p(&cfg), zwm::analytic_p_general(&cfg)) {
                    (Ok(n), Ok(a)) => (n - a).abs(),
                    (Err(Error::ZeroTrace), Err(Error::ZeroTrace)) => 0.0,
                    (Err(e), _) | (_, Err(e)) if !matches!(e, Error::ZeroTrace) => return Err(e),
                    _ => f64::INFINITY,
                };
                numeric_vs_analytic = numeric_vs_analytic.max(d);
            }
        }
    }

    let mut endpoints = 0.0f64;
    for g in steps(7, 15.0) {
        let cfg = ZwmConfig::locked(1.0, g.to_radians());
        endpoints = endpoints.max((zwm::numeric_p(&cfg)? - 1.0).abs());
    }
    for t in steps(11, 0.1) {
        let cfg = ZwmConfig::locked(t, FRAC_PI_2);
        endpoints = endpoints.max((zwm::numeric_p(&cfg)? - t).abs());
        endpoints = endpoints.max((gedanken::degree_of_polarization(FRAC_PI_2, t)? - t).abs());
    }

    Ok(vec![
        SelfTestCheck {
            name: "locked closed form = single-photon model",
            max_error: special_vs_gedanken,
            tolerance: 1e-15,
        },
        SelfTestCheck {
            name: "Fock pipeline = general closed form",
            max_error: numeric_vs_analytic,
            tolerance: 1e-10,
        },
        SelfTestCheck {
            name: "endpoints",
            max_error: endpoints,
            tolerance: 1e-12,
        },
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(mode: SweepMode) -> SweepSpec {
        SweepSpec {
            gamma_deg: vec![0.0, 60.0, 90.0],
            t_abs: vec![0.0, 0.5, 1.0],
            mode,
            replicates: 2,
            seed: 7,
            mc_samples: 20_000,
        }
    }

    #[test]
    fn mode_names_round_trip() {
        for m in [
            SweepMode::Analytic,
            SweepMode::Numeric,
            SweepMode::Tomography,
            SweepMode::Gedanken,
            SweepMode::MonteCarlo,
        ] {
            assert_eq!(m.as_str().parse::<SweepMode>().unwrap(), m);
        }
        assert!("fast".parse::<SweepMode>().is_err());
    }

    #[test]
    fn rows_are_ordered_and_deterministic_modes_have_zero_stderr() {
        let rows = run_sweep(&ExperimentConfig::default(), &spec(SweepMode::Analytic)).unwrap();
        assert_eq!(rows.len(), 18);
        let keys: Vec<_> = rows.iter().map(|r| (r.gamma_deg, r.t_abs, r.replicate)).collect();
        let mut sorted = keys.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(keys, sorted);
        assert!(rows.iter().all(|r| r.p_stderr == 0.0));
        let r = rows.iter().find(|r| r.gamma_deg == 90.0 && r.t_abs == 0.5).unwrap();
        assert!((r.p_value - 0.5).abs() < 1e-12);
    }

    #[test]
    fn deterministic_modes_agree() {
        let base = ExperimentConfig::default();
        let a = run_sweep(&base, &spec(SweepMode::Analytic)).unwrap();
        let n = run_sweep(&base, &spec(SweepMode::Numeric)).unwrap();
        let g = run_sweep(&base, &spec(SweepMode::Gedanken)).unwrap();
        for ((a, n), g) in a.iter().zip(&n).zip(&g) {
            assert!((a.p_value - n.p_value).abs() < 1e-10);
            assert!((a.p_value - g.p_value).abs() < 1e-12);
        }
    }

    #[test]
    fn stochastic_modes_are_reproducible_and_close() {
        let base = ExperimentConfig::default();
        for mode in [SweepMode::MonteCarlo, SweepMode::Tomography] {
            let a = run_sweep(&base, &spec(mode)).unwrap();
            let b = run_sweep(&base, &spec(mode)).unwrap();
            assert_eq!(a, b);
            // γ = 60°, |T| = 0
            assert_ne!(a[6].p_value, a[7].p_value, "{mode}: replicates must differ");
            for r in &a {
                let exact = gedanken::degree_of_polarization(r.gamma_deg.to_radians(), r.t_abs).unwrap();
                assert!(r.p_stderr > 0.0 || exact == 1.0, "{mode} {r:?}");
                assert!((r.p_value - exact).abs() < 0.05, "{mode} {r:?}");
            }
        }
    }

    #[test]
    fn range_violations_are_parameter_errors() {
        let mut s = spec(SweepMode::Analytic);
        s.t_abs.push(1.2);
        assert!(matches!(s.validate(), Err(Error::Parameter { name: "t", .. })));
        let mut s = spec(SweepMode::Analytic);
        s.gamma_deg.push(135.0);
        assert!(matches!(s.validate(), Err(Error::Parameter { name: "gamma", .. })));
    }

    #[test]
    fn csv_layout() {
        let rows = run_sweep(&ExperimentConfig::default(), &spec(SweepMode::Gedanken)).unwrap();
        let mut buf = Vec::new();
        write_sweep_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("gamma_deg,t_abs,mode,p_value,p_stderr"));
        assert_eq!(lines.next(), Some("0,0,gedanken,1,0"));
        assert_eq!(text.lines().count(), 19);
    }

    #[test]
    fn selftest_passes() {
        for c in selftest().unwrap() {
            assert!(c.passed(), "{c:?}");
        }
    }
}
