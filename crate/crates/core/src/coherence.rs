//! The 2×2 polarization coherence matrix `G_pq = ⟨E_p† E_q⟩`.
//!
//! For a beam in the pure polarization state with field amplitudes
//! `(e_x, e_y)`, `G_pq = e_p* e_q`. This is the transpose of the density
//! operator `ρ = e·e†` that Jones-matrix projectors act on; see
//! [`CoherenceMatrix::density`].

use nalgebra::Matrix2;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::optics::JonesMatrix;

const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherenceMatrix {
    pub gxx: C64,
    pub gxy: C64,
    pub gyx: C64,
    pub gyy: C64,
}

/// Stokes parameters with `S0 = G_xx + G_yy`, `S1 = G_xx − G_yy`,
/// `S2 = 2·Re G_xy` and `S3 = 2·Im G_yx` (`= −2·Im G_xy`).
///
/// With this sign the state `(1, −i)/√2` (the tomography `R` setting) has
/// `S3 = +1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stokes {
    pub s0: f64,
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
}

impl Stokes {
    pub fn degree_of_polarization(&self) -> Result<f64> {
        if self.s0 <= 0.0 {
            return Err(Error::ZeroTrace);
        }
        Ok((self.s1 * self.s1 + self.s2 * self.s2 + self.s3 * self.s3).sqrt() / self.s0)
    }
}

impl CoherenceMatrix {
    /// Validates the Hermitian and positive-semidefinite invariants.
    pub fn new(gxx: C64, gxy: C64, gyx: C64, gyy: C64) -> Result<Self> {
        let g = CoherenceMatrix { gxx, gxy, gyx, gyy };
        g.validate(HERMITIAN_TOL)?;
        Ok(g)
    }

    pub fn from_parts(gxx: f64, gyy: f64, gxy: C64) -> Result<Self> {
        Self::new(C64::new(gxx, 0.0), gxy, gxy.conj(), C64::new(gyy, 0.0))
    }

    pub fn zero() -> Self {
        CoherenceMatrix {
            gxx: C64::default(),
            gxy: C64::default(),
            gyx: C64::default(),
            gyy: C64::default(),
        }
    }

    pub fn identity() -> Self {
        CoherenceMatrix {
            gxx: C64::new(1.0, 0.0),
            gyy: C64::new(1.0, 0.0),
            ..Self::zero()
        }
    }

    /// Builds `G = ρᵀ` from a polarization density operator.
    pub fn from_density(rho: &Matrix2<C64>) -> Result<Self> {
        Self::new(rho[(0, 0)], rho[(1, 0)], rho[(0, 1)], rho[(1, 1)])
    }

    /// Density operator `ρ = Gᵀ` acted on by Jones matrices.
    pub fn density(&self) -> Matrix2<C64> {
        Matrix2::new(self.gxx, self.gyx, self.gxy, self.gyy)
    }

    pub fn validate(&self, rel_tol: f64) -> Result<()> {
        let entries = [self.gxx, self.gxy, self.gyx, self.gyy];
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::parameter("G", "non-finite entry"));
        }
        let scale = self.gxx.norm().max(self.gyy.norm()).max(self.gxy.norm());
        let tol = rel_tol * scale.max(f64::MIN_POSITIVE);
        let hermitian_defect = (self.gyx - self.gxy.conj())
            .norm()
            .max(self.gxx.im.abs())
            .max(self.gyy.im.abs());
        if hermitian_defect > tol && hermitian_defect > rel_tol {
            return Err(Error::parameter("G", format!("not Hermitian (defect {hermitian_defect:e})")));
        }
        let (_, lo) = self.eigenvalues();
        let tr = self.trace();
        if tr < 0.0 || lo < -rel_tol * tr.max(scale) {
            return Err(Error::parameter("G", format!("not positive semidefinite (λ_min = {lo:e})")));
        }
        Ok(())
    }

    pub fn trace(&self) -> f64 {
        self.gxx.re + self.gyy.re
    }

    pub fn det(&self) -> f64 {
        (self.gxx * self.gyy - self.gxy * self.gyx).re
    }

    /// `(λ_max, λ_min)`.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let half_tr = self.trace() / 2.0;
        let r = self.polarized_part() / 2.0;
        (half_tr + r, half_tr - r)
    }

    /// `√((G_xx − G_yy)² + 4|G_xy|²) = √(tr² − 4 det)`.
    fn polarized_part(&self) -> f64 {
        let d = self.gxx.re - self.gyy.re;
        let off = (self.gxy.norm_sqr() + self.gyx.norm_sqr()) / 2.0;
        (d * d + 4.0 * off).sqrt()
    }

    pub fn scaled(&self, c: f64) -> Self {
        CoherenceMatrix {
            gxx: self.gxx * c,
            gxy: self.gxy * c,
            gyx: self.gyx * c,
            gyy: self.gyy * c,
        }
    }

    /// `√(1 − 4 det G / (tr G)²)`, evaluated as `(λ₁ − λ₂)/(λ₁ + λ₂)`.
    pub fn degree_of_polarization(&self) -> Result<f64> {
        let tr = self.trace();
        if tr <= 0.0 {
            return Err(Error::ZeroTrace);
        }
        Ok((self.polarized_part() / tr).min(1.0))
    }

    pub fn stokes(&self) -> Result<Stokes> {
        if self.trace() <= 0.0 {
            return Err(Error::ZeroTrace);
        }
        Ok(Stokes {
            s0: self.trace(),
            s1: self.gxx.re - self.gyy.re,
            s2: 2.0 * self.gxy.re,
            s3: 2.0 * self.gyx.im,
        })
    }

    /// Intensity transmitted by a detection arm whose Jones-space projector
    /// is `projector`: `tr(Π·ρ)`.
    pub fn transmitted_intensity(&self, projector: &JonesMatrix) -> f64 {
        (projector.matrix() * self.density()).trace().re
    }
}

pub fn degree_of_polarization(g: &CoherenceMatrix) -> Result<f64> {
    g.degree_of_polarization()
}

pub fn stokes_parameters(g: &CoherenceMatrix) -> Result<Stokes> {
    g.stokes()
}
