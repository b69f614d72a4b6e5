//! Linear optical elements.
//!
//! Two representations are used side by side:
//!
//! * [`ModeExpr`] transforms act on annihilation operators and model the
//!   interferometer (attenuator, polarization rotator, beam splitter).
//! * [`JonesMatrix`] acts on `(x, y)` field amplitudes and models the
//!   detection optics (wave plates, polarizers).
//!
//! Jones matrices are fixed only up to a global phase; only projectors and
//! intensities derived from them are physically meaningful.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;
use std::ops::{Add, Mul};

use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::fock::ModeId;
use crate::ANGLE_EPS;

const UNITARY_TOL: f64 = 1e-12;

/// Linear combination `Σ c_m a_m` of annihilation operators.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ModeExpr {
    terms: BTreeMap<ModeId, C64>,
}

impl ModeExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn mode(mode: ModeId) -> Self {
        Self::term(mode, C64::new(1.0, 0.0))
    }

    pub fn term(mode: ModeId, coeff: C64) -> Self {
        let mut terms = BTreeMap::new();
        if coeff != C64::default() {
            terms.insert(mode, coeff);
        }
        ModeExpr { terms }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&ModeId, &C64)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, mode: ModeId) -> C64 {
        self.terms.get(&mode).copied().unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn scaled(&self, c: C64) -> Self {
        let mut out = ModeExpr::zero();
        for (m, a) in &self.terms {
            out.insert(*m, a * c);
        }
        out
    }

    pub fn plus(&self, other: &ModeExpr) -> Self {
        let mut out = self.clone();
        for (m, a) in &other.terms {
            let sum = out.coefficient(*m) + a;
            out.terms.remove(m);
            out.insert(*m, sum);
        }
        out
    }

    /// Sum of squared coefficient magnitudes.
    pub fn norm_sqr(&self) -> f64 {
        self.terms.values().map(|c| c.norm_sqr()).sum()
    }

    /// Keeps only the terms whose mode satisfies `keep`.
    pub fn filter(&self, mut keep: impl FnMut(&ModeId) -> bool) -> Self {
        ModeExpr {
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| keep(m))
                .map(|(m, c)| (*m, *c))
                .collect(),
        }
    }

    fn insert(&mut self, mode: ModeId, coeff: C64) {
        if coeff != C64::default() {
            self.terms.insert(mode, coeff);
        }
    }
}

impl Add for &ModeExpr {
    type Output = ModeExpr;

    fn add(self, rhs: &ModeExpr) -> ModeExpr {
        self.plus(rhs)
    }
}

impl Mul<C64> for &ModeExpr {
    type Output = ModeExpr;

    fn mul(self, rhs: C64) -> ModeExpr {
        self.scaled(rhs)
    }
}

/// Attenuator modelled as a lossless beam splitter whose second input is
/// the vacuum mode `vac_port`:
/// `[T·input + R′·a_vac]·e^{iφ_I}` with `R′ = √(1 − |T|²)` real.
pub fn attenuator(t: C64, input: &ModeExpr, vac_port: ModeId, phi_i: f64) -> Result<ModeExpr> {
    let t_abs = t.norm();
    if !t_abs.is_finite() || t_abs > 1.0 + UNITARY_TOL {
        return Err(Error::parameter("T", format!("|T| = {t_abs} exceeds 1")));
    }
    let r = (1.0 - t_abs * t_abs).max(0.0).sqrt();
    let phase = C64::from_polar(1.0, phi_i);
    let through = input.scaled(t * phase);
    Ok(through.plus(&ModeExpr::term(vac_port, C64::new(r, 0.0) * phase)))
}

/// Rotates the polarization of the pair `(a_x, a_y)` by `gamma`:
/// `(cos γ·a_x − sin γ·a_y, sin γ·a_x + cos γ·a_y)`.
///
/// Angles are restricted to `cos γ ≥ 0`.
pub fn polarization_rotation(gamma: f64, ax: &ModeExpr, ay: &ModeExpr) -> Result<(ModeExpr, ModeExpr)> {
    check_rotation_angle(gamma)?;
    let (s, c) = gamma.sin_cos();
    let re = |v: f64| C64::new(v, 0.0);
    let x = ax.scaled(re(c)).plus(&ay.scaled(re(-s)));
    let y = ax.scaled(re(s)).plus(&ay.scaled(re(c)));
    Ok((x, y))
}

pub(crate) fn check_rotation_angle(gamma: f64) -> Result<()> {
    if !gamma.is_finite() {
        return Err(Error::parameter("gamma", "not finite"));
    }
    if gamma.cos() < -ANGLE_EPS {
        return Err(Error::parameter(
            "gamma",
            format!("cos γ must be non-negative (γ = {gamma} rad)"),
        ));
    }
    Ok(())
}

/// Coefficients of a two-port beam splitter with matrix `[[t, i·r], [i·r, t]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitterCoeffs {
    t: C64,
    r: C64,
}

impl SplitterCoeffs {
    pub fn new(t: C64, r: C64) -> Result<Self> {
        let i = C64::i();
        let m = Matrix2::new(t, i * r, i * r, t);
        let defect = max_modulus(&(m.adjoint() * m - Matrix2::identity()));
        if !defect.is_finite() || defect > UNITARY_TOL {
            return Err(Error::parameter(
                "beam splitter",
                format!("[[t, ir], [ir, t]] is not unitary (defect {defect:e})"),
            ));
        }
        Ok(SplitterCoeffs { t, r })
    }

    pub fn balanced() -> Self {
        SplitterCoeffs {
            t: C64::new(FRAC_1_SQRT_2, 0.0),
            r: C64::new(FRAC_1_SQRT_2, 0.0),
        }
    }

    /// Real transmission `t` with the reflection completing unitarity.
    pub fn from_transmission(t: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::parameter("t", format!("{t} outside [0, 1]")));
        }
        Self::new(C64::new(t, 0.0), C64::new((1.0 - t * t).sqrt(), 0.0))
    }

    pub fn t(&self) -> C64 {
        self.t
    }

    pub fn r(&self) -> C64 {
        self.r
    }

    fn apply(&self, a1: &ModeExpr, a2: &ModeExpr) -> (ModeExpr, ModeExpr) {
        let ir = C64::i() * self.r;
        (
            a1.scaled(self.t).plus(&a2.scaled(ir)),
            a1.scaled(ir).plus(&a2.scaled(self.t)),
        )
    }
}

/// Beam splitter `[[t, i·r], [i·r, t]]` acting on the input operators
/// `(a1, a2)`; returns the two output operators.
pub fn beam_splitter(t: C64, r: C64, a1: &ModeExpr, a2: &ModeExpr) -> Result<(ModeExpr, ModeExpr)> {
    Ok(SplitterCoeffs::new(t, r)?.apply(a1, a2))
}

/// Beam splitter with independent coefficients for the x and y
/// polarizations. Equal coefficients give a non-polarizing splitter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarizingSplitter {
    pub x: SplitterCoeffs,
    pub y: SplitterCoeffs,
}

/// Output ports of a [`PolarizingSplitter`], each as an `(x, y)` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitterOutputs {
    pub port1: (ModeExpr, ModeExpr),
    pub port2: (ModeExpr, ModeExpr),
}

impl PolarizingSplitter {
    pub fn balanced() -> Self {
        PolarizingSplitter {
            x: SplitterCoeffs::balanced(),
            y: SplitterCoeffs::balanced(),
        }
    }

    /// `input1` and `input2` are `(x, y)` operator pairs.
    pub fn apply(
        &self,
        input1: (&ModeExpr, &ModeExpr),
        input2: (&ModeExpr, &ModeExpr),
    ) -> SplitterOutputs {
        let (o1x, o2x) = self.x.apply(input1.0, input2.0);
        let (o1y, o2y) = self.y.apply(input1.1, input2.1);
        SplitterOutputs {
            port1: (o1x, o1y),
            port2: (o2x, o2y),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Retarder {
    Half,
    Quarter,
}

impl Retarder {
    pub fn retardance(self) -> f64 {
        match self {
            Retarder::Half => std::f64::consts::PI,
            Retarder::Quarter => std::f64::consts::FRAC_PI_2,
        }
    }
}

pub type JonesVector = Vector2<C64>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JonesMatrix(pub Matrix2<C64>);

impl JonesMatrix {
    pub fn identity() -> Self {
        JonesMatrix(Matrix2::identity())
    }

    /// Retarder with its fast axis at `angle` from x:
    /// `R(angle)·diag(1, e^{iδ})·R(−angle)`.
    pub fn waveplate(kind: Retarder, angle: f64) -> Self {
        let retard = Matrix2::new(
            C64::new(1.0, 0.0),
            C64::default(),
            C64::default(),
            C64::from_polar(1.0, kind.retardance()),
        );
        let rot = rotation(angle);
        JonesMatrix(rot * retard * rot.transpose())
    }

    /// Ideal linear polarizer transmitting along `theta`.
    pub fn polarizer(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        let re = |v: f64| C64::new(v, 0.0);
        JonesMatrix(Matrix2::new(re(c * c), re(s * c), re(s * c), re(s * s)))
    }

    /// Rank-1 projector `v·v†` onto the normalized Jones vector `v`.
    pub fn projector_onto(v: &JonesVector) -> Self {
        let v = v / C64::new(v.norm(), 0.0);
        JonesMatrix(v * v.adjoint())
    }

    pub fn matrix(&self) -> &Matrix2<C64> {
        &self.0
    }

    pub fn adjoint(&self) -> Self {
        JonesMatrix(self.0.adjoint())
    }

    pub fn then(&self, next: &JonesMatrix) -> Self {
        JonesMatrix(next.0 * self.0)
    }

    pub fn apply(&self, v: &JonesVector) -> JonesVector {
        self.0 * v
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        max_modulus(&(self.0.adjoint() * self.0 - Matrix2::identity())) <= tol
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        max_modulus(&(self.0.adjoint() - self.0)) <= tol
    }

    pub fn is_projector(&self, tol: f64) -> bool {
        self.is_hermitian(tol) && max_modulus(&(self.0 * self.0 - self.0)) <= tol
    }

    /// Largest entrywise difference to `other`.
    pub fn max_abs_diff(&self, other: &JonesMatrix) -> f64 {
        max_modulus(&(self.0 - other.0))
    }
}

/// Retarder Jones matrix (see [`JonesMatrix::waveplate`]).
pub fn waveplate_jones(kind: Retarder, angle: f64) -> JonesMatrix {
    JonesMatrix::waveplate(kind, angle)
}

pub fn polarizer_jones(theta: f64) -> JonesMatrix {
    JonesMatrix::polarizer(theta)
}

fn max_modulus(m: &Matrix2<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, |a, b| if b.is_nan() || b > a { b } else { a })
}

fn rotation(angle: f64) -> Matrix2<C64> {
    let (s, c) = angle.sin_cos();
    let re = |v: f64| C64::new(v, 0.0);
    Matrix2::new(re(c), re(-s), re(s), re(c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, FRAC_PI_8};

    fn re(v: f64) -> C64 {
        C64::new(v, 0.0)
    }

    fn close(a: C64, b: C64) -> bool {
        (a - b).norm() < 1e-12
    }

    /// Projector `J·J†` of the output state; removes the global phase.
    fn state_projector(v: &JonesVector) -> JonesMatrix {
        JonesMatrix::projector_onto(v)
    }

    #[test]
    fn attenuator_examples() {
        let input = ModeExpr::mode(ModeId::I1);
        let lossless = attenuator(re(1.0), &input, ModeId::VAC0, 0.7).unwrap();
        assert!(close(lossless.coefficient(ModeId::I1), C64::from_polar(1.0, 0.7)));
        assert_eq!(lossless.coefficient(ModeId::VAC0), C64::default());

        let blocked = attenuator(re(0.0), &input, ModeId::VAC0, 0.0).unwrap();
        assert_eq!(blocked.coefficient(ModeId::I1), C64::default());
        assert!(close(blocked.coefficient(ModeId::VAC0), re(1.0)));

        let partial = attenuator(re(0.6), &input, ModeId::VAC0, 0.0).unwrap();
        assert!(close(partial.coefficient(ModeId::I1), re(0.6)));
        assert!(close(partial.coefficient(ModeId::VAC0), re(0.8)));

        assert!(attenuator(re(1.01), &input, ModeId::VAC0, 0.0).is_err());
    }

    #[test]
    fn rotation_examples() {
        let ax = ModeExpr::mode(ModeId::S1X);
        let ay = ModeExpr::mode(ModeId::S1Y);
        let (x, y) = polarization_rotation(0.0, &ax, &ay).unwrap();
        assert_eq!((x.clone(), y.clone()), (ax.clone(), ay.clone()));

        let (x, y) = polarization_rotation(FRAC_PI_2, &ax, &ay).unwrap();
        assert!(close(x.coefficient(ModeId::S1Y), re(-1.0)));
        assert!(x.coefficient(ModeId::S1X).norm() < 1e-15);
        assert!(close(y.coefficient(ModeId::S1X), re(1.0)));

        let (x, y) = polarization_rotation(FRAC_PI_3, &ax, &ay).unwrap();
        let h = 3f64.sqrt() / 2.0;
        assert!(close(x.coefficient(ModeId::S1X), re(0.5)));
        assert!(close(x.coefficient(ModeId::S1Y), re(-h)));
        assert!(close(y.coefficient(ModeId::S1X), re(h)));
        assert!(close(y.coefficient(ModeId::S1Y), re(0.5)));

        assert!(polarization_rotation(2.0, &ax, &ay).is_err());
    }

    #[test]
    fn splitter_examples() {
        let a1 = ModeExpr::mode(ModeId::S1X);
        let vac = ModeExpr::zero();
        let (o1, o2) = beam_splitter(re(FRAC_1_SQRT_2), re(FRAC_1_SQRT_2), &a1, &vac).unwrap();
        assert!(close(o1.coefficient(ModeId::S1X), re(FRAC_1_SQRT_2)));
        assert!(close(o2.coefficient(ModeId::S1X), C64::new(0.0, FRAC_1_SQRT_2)));

        let (o1, _) = beam_splitter(re(1.0), re(0.0), &a1, &vac).unwrap();
        assert_eq!(o1, a1);

        assert!(beam_splitter(re(0.9), re(0.9), &a1, &vac).is_err());
        // r/t must be real for [[t, ir], [ir, t]] to be unitary
        assert!(beam_splitter(re(FRAC_1_SQRT_2), C64::new(0.0, FRAC_1_SQRT_2), &a1, &vac).is_err());
    }

    #[test]
    fn polarizing_splitter_asymmetry() {
        let tx = 0.9 * 0.8;
        let bs = PolarizingSplitter {
            x: SplitterCoeffs::from_transmission(tx).unwrap(),
            y: SplitterCoeffs::from_transmission(0.8).unwrap(),
        };
        let ax = ModeExpr::mode(ModeId::S1X);
        let ay = ModeExpr::mode(ModeId::S1Y);
        let z = ModeExpr::zero();
        let out = bs.apply((&ax, &ay), (&z, &z));
        let ratio = out.port1.0.coefficient(ModeId::S1X).norm() / out.port1.1.coefficient(ModeId::S1Y).norm();
        assert_abs_diff_eq!(ratio, 0.9, epsilon = 1e-12);

        let trivial = PolarizingSplitter {
            x: SplitterCoeffs::from_transmission(1.0).unwrap(),
            y: SplitterCoeffs::from_transmission(1.0).unwrap(),
        };
        let out = trivial.apply((&ax, &ay), (&z, &z));
        assert_eq!(out.port1, (ax, ay));
    }

    #[test]
    fn waveplate_examples() {
        let qwp = JonesMatrix::waveplate(Retarder::Quarter, 0.0);
        let expect = JonesMatrix(Matrix2::new(re(1.0), re(0.0), re(0.0), C64::i()));
        assert!(qwp.max_abs_diff(&expect) < 1e-15);

        let hwp = JonesMatrix::waveplate(Retarder::Half, 0.0);
        let expect = JonesMatrix(Matrix2::new(re(1.0), re(0.0), re(0.0), re(-1.0)));
        assert!(hwp.max_abs_diff(&expect) < 1e-15);

        let out = JonesMatrix::waveplate(Retarder::Half, FRAC_PI_8).apply(&Vector2::new(re(1.0), re(0.0)));
        let diag = Vector2::new(re(FRAC_1_SQRT_2), re(FRAC_1_SQRT_2));
        assert!(state_projector(&out).max_abs_diff(&state_projector(&diag)) < 1e-12);
    }

    #[test]
    fn polarizer_examples() {
        let p0 = JonesMatrix::polarizer(0.0);
        assert!(p0.max_abs_diff(&JonesMatrix(Matrix2::new(re(1.0), re(0.0), re(0.0), re(0.0)))) < 1e-15);
        let p90 = JonesMatrix::polarizer(FRAC_PI_2);
        assert!(p90.max_abs_diff(&JonesMatrix(Matrix2::new(re(0.0), re(0.0), re(0.0), re(1.0)))) < 1e-15);
        let p45 = JonesMatrix::polarizer(FRAC_PI_4);
        for v in p45.0.iter() {
            assert_abs_diff_eq!(v.re, 0.5, epsilon = 1e-15);
        }
    }

    proptest! {
        #[test]
        fn waveplates_are_unitary(angle in -10.0f64..10.0, half in any::<bool>()) {
            let kind = if half { Retarder::Half } else { Retarder::Quarter };
            prop_assert!(JonesMatrix::waveplate(kind, angle).is_unitary(1e-12));
        }

        #[test]
        fn half_wave_plate_rotates_x_by_twice_its_angle(gamma in -1.5f64..1.5) {
            let out = JonesMatrix::waveplate(Retarder::Half, gamma / 2.0)
                .apply(&Vector2::new(re(1.0), re(0.0)));
            let want = Vector2::new(re(gamma.cos()), re(gamma.sin()));
            prop_assert!(state_projector(&out).max_abs_diff(&state_projector(&want)) < 1e-12);
        }

        #[test]
        fn polarizer_is_the_projector_on_its_axis(theta in -10.0f64..10.0) {
            let p = JonesMatrix::polarizer(theta);
            prop_assert!(p.is_projector(1e-12));
            let u = Vector2::new(re(theta.cos()), re(theta.sin()));
            prop_assert_eq!(p.0, u * u.transpose());
        }

        #[test]
        fn attenuator_is_isometric(t_abs in 0.0f64..=1.0, arg in -3.2f64..3.2, phi in -3.2f64..3.2) {
            let input = ModeExpr::mode(ModeId::I1);
            let out = attenuator(C64::from_polar(t_abs, arg), &input, ModeId::VAC0, phi).unwrap();
            prop_assert!((out.norm_sqr() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn splitter_is_isometric(t in 0.0f64..=1.0, c1 in -1.0f64..1.0, c2 in -1.0f64..1.0) {
            let a1 = ModeExpr::term(ModeId::S1X, C64::new(c1, 0.3));
            let a2 = ModeExpr::term(ModeId::S2X, C64::new(-0.2, c2));
            let bs = SplitterCoeffs::from_transmission(t).unwrap();
            let (o1, o2) = bs.apply(&a1, &a2);
            // output norms, counted per input mode across both ports
            let mut total = 0.0;
            for m in [ModeId::S1X, ModeId::S2X] {
                total += o1.coefficient(m).norm_sqr() + o2.coefficient(m).norm_sqr();
            }
            prop_assert!((total - a1.norm_sqr() - a2.norm_sqr()).abs() < 1e-12);
        }

        #[test]
        fn rotations_compose(g1 in -0.7f64..0.7, g2 in -0.7f64..0.7) {
            let ax = ModeExpr::mode(ModeId::S1X);
            let ay = ModeExpr::mode(ModeId::S1Y);
            let (x1, y1) = polarization_rotation(g2, &ax, &ay).unwrap();
            let (x2, y2) = polarization_rotation(g1, &x1, &y1).unwrap();
            let (x, y) = polarization_rotation(g1 + g2, &ax, &ay).unwrap();
            for m in [ModeId::S1X, ModeId::S1Y] {
                prop_assert!((x2.coefficient(m) - x.coefficient(m)).norm() < 1e-12);
                prop_assert!((y2.coefficient(m) - y.coefficient(m)).norm() < 1e-12);
            }
            // the rotation preserves the norm of each output
            prop_assert!((x.norm_sqr() - 1.0).abs() < 1e-12);
        }
    }
}
