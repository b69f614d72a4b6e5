//! Maximum-likelihood reconstruction of a single-qubit polarization state.
//!
//! The density operator is parameterized as `ρ = L·L†` with
//! `L = [[a, 0], [c + i·d, b]]`, which is positive semidefinite for every real
//! `(a, b, c, d)`. The trace is free, so the overall intensity scale is part
//! of the fit. The Poisson log-likelihood `Σ nᵢ ln μᵢ − μᵢ` with
//! `μᵢ = tr(Πᵢ ρ)` is maximized by damped Newton iterations starting from
//! the linear-inversion estimate projected onto the PSD cone.

use nalgebra::{DMatrix, DVector, Matrix2, Matrix4, Vector4};
use num_complex::Complex64 as C64;

use super::MeasurementSetting;
use crate::coherence::CoherenceMatrix;
use crate::error::{Error, Result};
use crate::optics::JonesMatrix;

const MAX_ITERATIONS: usize = 500;
/// Weight of the maximally mixed state mixed into the starting point so that
/// its Cholesky factor has full rank.
const START_MIXING: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub matrix: CoherenceMatrix,
    /// Cholesky parameters `(a, b, c, d)` of the returned `ρ = Gᵀ`.
    pub cholesky: [f64; 4],
    pub log_likelihood: f64,
    /// Log-likelihood of the projected linear-inversion estimate.
    pub initial_log_likelihood: f64,
    pub iterations: usize,
}

pub fn density_from_cholesky(x: [f64; 4]) -> Matrix2<C64> {
    let [a, b, c, d] = x;
    let off = C64::new(a * c, a * d);
    Matrix2::new(
        C64::new(a * a, 0.0),
        off.conj(),
        off,
        C64::new(b * b + c * c + d * d, 0.0),
    )
}

/// Poisson log-likelihood (up to the count-only constant). Returns `-∞`
/// when a setting with counts has zero predicted rate.
pub fn log_likelihood(counts: &[f64], projectors: &[JonesMatrix], rho: &Matrix2<C64>) -> f64 {
    counts
        .iter()
        .zip(projectors)
        .map(|(&n, p)| {
            let mu = (p.matrix() * rho).trace().re;
            poisson_term(n, mu)
        })
        .sum()
}

fn poisson_term(n: f64, mu: f64) -> f64 {
    if n > 0.0 {
        if mu <= 0.0 {
            f64::NEG_INFINITY
        } else {
            n * mu.ln() - mu
        }
    } else {
        -mu.max(0.0)
    }
}

/// `μ = Π₀₀a² + Π₁₁(b² + c² + d²) + 2a(u·c − v·d)` with `Π₀₁ = u + iv`,
/// stored as its constant Hessian in `(a, b, c, d)`: `μ = ½ xᵀ Q x`.
struct RateForm {
    q: Matrix4<f64>,
}

impl RateForm {
    fn new(p: &JonesMatrix) -> Self {
        let m = p.matrix();
        let (p00, p11) = (m[(0, 0)].re, m[(1, 1)].re);
        let (u, v) = (m[(0, 1)].re, m[(0, 1)].im);
        #[rustfmt::skip]
        let q = Matrix4::new(
            2.0 * p00, 0.0,       2.0 * u,   -2.0 * v,
            0.0,       2.0 * p11, 0.0,       0.0,
            2.0 * u,   0.0,       2.0 * p11, 0.0,
            -2.0 * v,  0.0,       0.0,       2.0 * p11,
        );
        RateForm { q }
    }

    fn rate(&self, x: &Vector4<f64>) -> f64 {
        0.5 * x.dot(&(self.q * x))
    }
}

struct Objective<'a> {
    counts: &'a [f64],
    forms: Vec<RateForm>,
}

impl Objective<'_> {
    fn value(&self, x: &Vector4<f64>) -> f64 {
        self.counts
            .iter()
            .zip(&self.forms)
            .map(|(&n, f)| poisson_term(n, f.rate(x)))
            .sum()
    }

    fn gradient_hessian(&self, x: &Vector4<f64>) -> (Vector4<f64>, Matrix4<f64>) {
        let mut grad = Vector4::zeros();
        let mut hess = Matrix4::zeros();
        for (&n, f) in self.counts.iter().zip(&self.forms) {
            let mu = f.rate(x);
            let dmu = f.q * x;
            if mu <= 0.0 {
                // only reachable with n = 0, where the term is −μ
                grad -= dmu;
                hess -= f.q;
                continue;
            }
            let w = n / mu - 1.0;
            grad += dmu * w;
            hess += f.q * w - dmu * dmu.transpose() * (n / (mu * mu));
        }
        (grad, hess)
    }
}

/// Maximum-likelihood coherence matrix from background-corrected counts.
///
/// Needs at least four settings whose projectors span the 2×2 Hermitian
/// matrices. All-zero counts give the zero matrix.
pub fn mle_reconstruct(counts: &[f64], settings: &[MeasurementSetting]) -> Result<Reconstruction> {
    if counts.len() != settings.len() {
        return Err(Error::parameter(
            "counts",
            format!("{} counts for {} settings", counts.len(), settings.len()),
        ));
    }
    if settings.len() < 4 {
        return Err(Error::IllPosed(format!(
            "{} settings; at least 4 are needed",
            settings.len()
        )));
    }
    if counts.iter().any(|n| !(n.is_finite() && *n >= 0.0)) {
        return Err(Error::parameter("counts", "must be finite and non-negative"));
    }
    let projectors: Vec<JonesMatrix> = settings.iter().map(|s| s.projector()).collect();
    let design = design_matrix(&projectors);
    let pinv = pseudo_inverse(&design)?;

    if counts.iter().all(|&n| n == 0.0) {
        return Ok(Reconstruction {
            matrix: CoherenceMatrix::zero(),
            cholesky: [0.0; 4],
            log_likelihood: 0.0,
            initial_log_likelihood: 0.0,
            iterations: 0,
        });
    }

    let bloch = &pinv * DVector::from_column_slice(counts);
    let rho0 = project_psd(&bloch, counts, &projectors);
    let initial_ll = log_likelihood(counts, &projectors, &rho0);

    let objective = Objective {
        counts,
        forms: projectors.iter().map(RateForm::new).collect(),
    };
    let half_tr = rho0.trace().re / 2.0;
    let start = rho0 * C64::new(1.0 - START_MIXING, 0.0)
        + Matrix2::identity() * C64::new(START_MIXING * half_tr, 0.0);
    let mut x = Vector4::from(cholesky_params(&start));
    let mut value = objective.value(&x);
    let mut lambda = 0.0;
    let mut iterations = 0;

    for it in 0..MAX_ITERATIONS {
        iterations = it + 1;
        let (grad, hess) = objective.gradient_hessian(&x);
        let scale = hess.diagonal().abs().max().max(f64::MIN_POSITIVE);
        let mut step_taken = None;
        for _ in 0..60 {
            let system = -hess + Matrix4::identity() * (lambda * scale);
            if let Some(chol) = system.cholesky() {
                let step = chol.solve(&grad);
                let trial = x + step;
                let trial_value = objective.value(&trial);
                if trial_value >= value {
                    step_taken = Some((step, trial_value - value, lambda));
                    x = trial;
                    value = trial_value;
                    break;
                }
            }
            lambda = if lambda == 0.0 { 1e-10 } else { lambda * 10.0 };
        }
        let Some((step, gain, used_lambda)) = step_taken else {
            break;
        };
        lambda = if used_lambda < 1e-9 { 0.0 } else { used_lambda / 10.0 };
        let converged_newton = used_lambda == 0.0 && gain <= 1e-11;
        let stalled = step.norm() <= 1e-15 * x.norm().max(f64::MIN_POSITIVE);
        if converged_newton || stalled {
            break;
        }
    }

    let mut rho = density_from_cholesky(x.into());
    let mut best = log_likelihood(counts, &projectors, &rho);
    let mut cholesky: [f64; 4] = x.into();
    if best.is_nan() || best < initial_ll {
        rho = rho0;
        best = initial_ll;
        cholesky = cholesky_params(&rho0);
    }
    Ok(Reconstruction {
        matrix: CoherenceMatrix::from_density(&rho)?,
        cholesky,
        log_likelihood: best,
        initial_log_likelihood: initial_ll,
        iterations,
    })
}

/// Rows `½(tr Π, tr Πσx, tr Πσy, tr Πσz)` so that `μ = row · (s₀, sx, sy, sz)`
/// for `ρ = ½(s₀ + s·σ)`.
fn design_matrix(projectors: &[JonesMatrix]) -> DMatrix<f64> {
    DMatrix::from_fn(projectors.len(), 4, |i, j| {
        let m = projectors[i].matrix();
        let v = match j {
            0 => m[(0, 0)].re + m[(1, 1)].re,
            1 => 2.0 * m[(0, 1)].re,
            2 => -2.0 * m[(0, 1)].im,
            _ => m[(0, 0)].re - m[(1, 1)].re,
        };
        0.5 * v
    })
}

fn pseudo_inverse(design: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let svd = design.clone().svd(true, true);
    let max = svd.singular_values.max();
    let min = svd.singular_values.min();
    if min.is_nan() || min <= 1e-9 * max {
        return Err(Error::IllPosed(format!(
            "measurement projectors are not informationally complete (σ_min/σ_max = {:e})",
            min / max
        )));
    }
    svd.pseudo_inverse(0.0).map_err(|e| Error::IllPosed(e.to_string()))
}

fn bloch_density(s0: f64, s: [f64; 3]) -> Matrix2<C64> {
    let [sx, sy, sz] = s;
    Matrix2::new(
        C64::new(0.5 * (s0 + sz), 0.0),
        C64::new(0.5 * sx, -0.5 * sy),
        C64::new(0.5 * sx, 0.5 * sy),
        C64::new(0.5 * (s0 - sz), 0.0),
    )
}

/// Clips negative eigenvalues of the linear-inversion estimate. Falls back
/// to the best multiple of the identity if nothing positive remains.
fn project_psd(bloch: &DVector<f64>, counts: &[f64], projectors: &[JonesMatrix]) -> Matrix2<C64> {
    let s0 = bloch[0];
    let s = [bloch[1], bloch[2], bloch[3]];
    let r = (s[0] * s[0] + s[1] * s[1] + s[2] * s[2]).sqrt();
    let hi = (0.5 * (s0 + r)).max(0.0);
    let lo = (0.5 * (s0 - r)).max(0.0);
    if hi > 0.0 {
        let new_s0 = hi + lo;
        let k = if r > 0.0 { (hi - lo) / r } else { 0.0 };
        return bloch_density(new_s0, s.map(|v| v * k));
    }
    let total_counts: f64 = counts.iter().sum();
    let total_weight: f64 = projectors.iter().map(|p| p.trace().re).sum();
    Matrix2::identity() * C64::new(total_counts / total_weight, 0.0)
}

fn cholesky_params(rho: &Matrix2<C64>) -> [f64; 4] {
    let r00 = rho[(0, 0)].re.max(0.0);
    let a = r00.sqrt();
    if a == 0.0 {
        return [0.0, rho[(1, 1)].re.max(0.0).sqrt(), 0.0, 0.0];
    }
    let off = rho[(1, 0)] / a;
    let b2 = rho[(1, 1)].re - off.norm_sqr();
    [a, b2.max(0.0).sqrt(), off.re, off.im]
}

/// Delta-method standard error of `P = |s|/s₀` for the linear-inversion
/// estimate `s = A⁺ n`, with `Var nᵢ = rawᵢ`.
pub(super) fn linear_inversion_p_stderr(
    corrected: &[f64],
    raw: &[u64],
    settings: &[MeasurementSetting],
) -> Result<f64> {
    let projectors: Vec<JonesMatrix> = settings.iter().map(|s| s.projector()).collect();
    let pinv = pseudo_inverse(&design_matrix(&projectors))?;
    let s = &pinv * DVector::from_column_slice(corrected);
    let s0 = s[0];
    if s0 <= 0.0 {
        return Err(Error::ZeroTrace);
    }
    let r = (s[1] * s[1] + s[2] * s[2] + s[3] * s[3]).sqrt();
    let mut dp_ds = DVector::zeros(4);
    dp_ds[0] = -r / (s0 * s0);
    if r > 0.0 {
        for k in 1..4 {
            dp_ds[k] = s[k] / (r * s0);
        }
    }
    let dp_dn = pinv.transpose() * dp_ds;
    let var: f64 = dp_dn
        .iter()
        .zip(raw)
        .map(|(g, &n)| g * g * n as f64)
        .sum();
    Ok(var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tomography::{default_settings, SettingLabel};
    use approx::assert_abs_diff_eq;

    fn noiseless_counts(g: &CoherenceMatrix, settings: &[MeasurementSetting], scale: f64) -> Vec<f64> {
        settings
            .iter()
            .map(|s| scale * g.transmitted_intensity(&s.projector()))
            .collect()
    }

    #[test]
    fn cholesky_round_trip() {
        let x = [1.3, 0.4, -0.2, 0.7];
        let rho = density_from_cholesky(x);
        let back = cholesky_params(&rho);
        for (a, b) in x.iter().zip(back) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn rate_form_matches_trace() {
        let x = [1.3, 0.4, -0.2, 0.7];
        let rho = density_from_cholesky(x);
        for s in default_settings() {
            let p = s.projector();
            let want = (p.matrix() * rho).trace().re;
            assert_abs_diff_eq!(RateForm::new(&p).rate(&Vector4::from(x)), want, epsilon = 1e-12);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let settings = default_settings();
        let counts = [120.0, 40.0, 95.0, 60.0];
        let objective = Objective {
            counts: &counts,
            forms: settings.iter().map(|s| RateForm::new(&s.projector())).collect(),
        };
        let x = Vector4::new(9.0, 5.0, 1.5, -2.0);
        let (grad, hess) = objective.gradient_hessian(&x);
        let h = 1e-5;
        for k in 0..4 {
            let mut e = Vector4::zeros();
            e[k] = h;
            let fd = (objective.value(&(x + e)) - objective.value(&(x - e))) / (2.0 * h);
            assert_abs_diff_eq!(grad[k], fd, epsilon = 1e-6 * grad[k].abs().max(1.0));
            let (gp, _) = objective.gradient_hessian(&(x + e));
            let (gm, _) = objective.gradient_hessian(&(x - e));
            for j in 0..4 {
                let fd = (gp[j] - gm[j]) / (2.0 * h);
                assert_abs_diff_eq!(hess[(j, k)], fd, epsilon = 1e-5 * hess[(j, k)].abs().max(1.0));
            }
        }
    }

    #[test]
    fn noiseless_pure_state() {
        let settings = default_settings();
        let g = CoherenceMatrix::from_parts(1.0, 0.0, C64::new(0.0, 0.0)).unwrap();
        let rec = mle_reconstruct(&noiseless_counts(&g, &settings, 1e4), &settings).unwrap();
        assert_abs_diff_eq!(rec.matrix.degree_of_polarization().unwrap(), 1.0, epsilon = 1e-6);
        assert!(rec.log_likelihood >= rec.initial_log_likelihood);
    }

    #[test]
    fn noiseless_mixed_state() {
        let settings = default_settings();
        let g = CoherenceMatrix::identity().scaled(0.5);
        let rec = mle_reconstruct(&noiseless_counts(&g, &settings, 1e4), &settings).unwrap();
        assert!(rec.matrix.degree_of_polarization().unwrap() < 1e-6);
    }

    #[test]
    fn too_few_or_degenerate_settings() {
        let settings = default_settings();
        assert!(matches!(
            mle_reconstruct(&[1.0, 2.0, 3.0], &settings[..3]),
            Err(Error::IllPosed(_))
        ));
        let h = MeasurementSetting::from_degrees(SettingLabel::H, 0.0, 0.0);
        let v = MeasurementSetting::from_degrees(SettingLabel::V, 0.0, 90.0);
        let degenerate = vec![h.clone(), v.clone(), h, v];
        assert!(matches!(
            mle_reconstruct(&[1.0, 2.0, 3.0, 4.0], &degenerate),
            Err(Error::IllPosed(_))
        ));
    }

    #[test]
    fn negative_linear_inversion_is_projected() {
        // D and R counts that no physical state produces with these H, V
        let settings = default_settings();
        let counts = [100.0, 100.0, 200.0, 200.0];
        let rec = mle_reconstruct(&counts, &settings).unwrap();
        let (_, lo) = rec.matrix.eigenvalues();
        assert!(lo >= -1e-9 * rec.matrix.trace());
        assert!(rec.log_likelihood >= rec.initial_log_likelihood);
    }
}
