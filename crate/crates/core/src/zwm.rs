//! Two-crystal induced-coherence interferometer.
//!
//! Crystal NL1 emits signal `S1` and idler `I1`; `I1` passes an attenuator
//! (amplitude transmission `T`) and is aligned with the idler of crystal
//! NL2, which emits signal `S2`. `S1` passes a half-wave plate rotating its
//! polarization by `γ` and is superposed with `S2` on a beam splitter. The
//! degree of polarization of one output port depends on `|T|` (inerasable
//! distinguishability) and `γ` (erasable distinguishability).
//!
//! The state is built to first order in the pair amplitudes `g₁`, `g₂`, so
//! the order-`g²` coherence matrix is exact and [`analytic_p_general`] is
//! reproduced by the Fock-space pipeline to rounding error.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};
use std::sync::{Arc, OnceLock};

use num_complex::Complex64 as C64;

use crate::coherence::CoherenceMatrix;
use crate::error::{Error, Result};
use crate::fock::{FockState, ModeId, ModeRegistry, DEFAULT_TRUNCATION_ORDER};
use crate::optics::{
    attenuator, check_rotation_angle, polarization_rotation, ModeExpr, PolarizingSplitter,
    SplitterCoeffs,
};

/// Phase of the reflection coefficient `i` of the symmetric beam splitter.
/// `S2` reaches the detected port by reflection, so it adds to the
/// interferometric phase.
pub const BS_REFLECTION_PHASE: f64 = FRAC_PI_2;

/// Device imperfections. All fields equal to 1 describe the ideal device.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Imperfections {
    /// Amplitude transmission of the idler path between the crystals,
    /// excluding the attenuator. Multiplies `T`.
    pub eta_idler: f64,
    /// Coupling of the `S2` arm into the detected port for x polarization,
    /// relative to a balanced splitter. The `S1` arm gets the unitary
    /// completion.
    pub bs_tx: f64,
    /// Same as `bs_tx` for y polarization.
    pub bs_ty: f64,
    /// Temporal-overlap factor multiplying all `S1`–`S2` cross terms.
    pub mu_overlap: f64,
}

impl Default for Imperfections {
    fn default() -> Self {
        Imperfections {
            eta_idler: 1.0,
            bs_tx: 1.0,
            bs_ty: 1.0,
            mu_overlap: 1.0,
        }
    }
}

impl Imperfections {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("eta_idler", self.eta_idler),
            ("bs_tx", self.bs_tx),
            ("bs_ty", self.bs_ty),
            ("mu_overlap", self.mu_overlap),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::parameter(name, format!("{v} outside [0, 1]")));
            }
        }
        Ok(())
    }

    pub fn is_ideal(&self) -> bool {
        *self == Self::default()
    }

    /// The beam splitter seen by `(S1, S2)` entering ports `(1, 2)`.
    pub fn splitter(&self) -> Result<PolarizingSplitter> {
        let coeffs = |rel: f64| {
            let r = rel * FRAC_1_SQRT_2;
            SplitterCoeffs::new(C64::new((1.0 - r * r).sqrt(), 0.0), C64::new(r, 0.0))
        };
        if self.bs_tx == 1.0 && self.bs_ty == 1.0 {
            return Ok(PolarizingSplitter::balanced());
        }
        Ok(PolarizingSplitter {
            x: coeffs(self.bs_tx)?,
            y: coeffs(self.bs_ty)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZwmConfig {
    pub g1: C64,
    pub g2: C64,
    /// Complex amplitude transmission of the attenuator.
    pub t: C64,
    /// Polarization rotation of `S1`, radians; `cos γ ≥ 0`.
    pub gamma: f64,
    pub phi_s1: f64,
    pub phi_s2: f64,
    pub phi_i: f64,
    pub imperfections: Imperfections,
}

pub const DEFAULT_PAIR_AMPLITUDE: f64 = 0.01;

impl ZwmConfig {
    /// Ideal device with `g₁ = g₂ = 0.01`, real `T`, and the phases locked at
    /// `β = 0`.
    pub fn locked(t_abs: f64, gamma: f64) -> Self {
        ZwmConfig {
            g1: C64::new(DEFAULT_PAIR_AMPLITUDE, 0.0),
            g2: C64::new(DEFAULT_PAIR_AMPLITUDE, 0.0),
            t: C64::new(t_abs, 0.0),
            gamma,
            phi_s1: 0.0,
            phi_s2: -BS_REFLECTION_PHASE,
            phi_i: 0.0,
            imperfections: Imperfections::default(),
        }
    }

    /// Shifts `φ_S2` so that [`beta`] returns `target` (mod 2π).
    pub fn with_beta(mut self, target: f64) -> Self {
        self.phi_s2 += target - beta(&self);
        self
    }

    pub fn with_imperfections(mut self, imperfections: Imperfections) -> Self {
        self.imperfections = imperfections;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let t_abs = self.t.norm();
        if !(0.0..=1.0).contains(&t_abs) {
            return Err(Error::parameter("T", format!("|T| = {t_abs} outside [0, 1]")));
        }
        for (name, g) in [("g1", self.g1), ("g2", self.g2)] {
            let m = g.norm();
            if !(m > 0.0 && m <= 0.1) {
                return Err(Error::parameter(name, format!("|{name}| = {m} outside (0, 0.1]")));
            }
        }
        check_rotation_angle(self.gamma)?;
        if ![self.phi_s1, self.phi_s2, self.phi_i].iter().all(|p| p.is_finite()) {
            return Err(Error::parameter("phase", "not finite"));
        }
        self.imperfections.validate()
    }

    /// Attenuator transmission including idler-path losses.
    pub fn t_eff(&self) -> C64 {
        self.t * self.imperfections.eta_idler
    }
}

/// Registry `S1x, S1y, S2x, S2y, I1x′, 0x′` shared by all model states.
pub fn registry() -> Arc<ModeRegistry> {
    static REGISTRY: OnceLock<Arc<ModeRegistry>> = OnceLock::new();
    REGISTRY
        .get_or_init(|| {
            ModeRegistry::new([
                ModeId::S1X,
                ModeId::S1Y,
                ModeId::S2X,
                ModeId::S2Y,
                ModeId::I1,
                ModeId::VAC0,
            ])
            .expect("static registry is well formed")
        })
        .clone()
}

/// First-order parametric down-conversion acting on `state`:
/// `[1 + (g·a_s†·b† − g*·a_s·b)]·state` where `b = idler` is a mode
/// expression for the idler annihilation operator.
fn down_convert(state: &FockState, g: C64, signal: ModeId, idler: &ModeExpr) -> Result<FockState> {
    let created = state
        .apply_creation_expr(idler)?
        .apply_creation(signal)?
        .scaled(g);
    let annihilated = state
        .apply_annihilation_expr(idler)?
        .apply_annihilation(signal)?
        .scaled(-g.conj());
    state.add(&created)?.add(&annihilated)
}

/// Two-crystal state `Û₂Û₁|vac⟩` to first order in `g`:
/// `|vac⟩ + (g₁|x⟩_S1 + g₂e^{−iφ_I}T*|x⟩_S2)|x′⟩_I1 + g₂e^{−iφ_I}R′*|x⟩_S2|x′⟩₀`,
/// with `T → T·η_idler`. Products of both crystals' pairs exceed the
/// truncation order and are dropped.
pub fn build_state(cfg: &ZwmConfig) -> Result<FockState> {
    cfg.validate()?;
    let vac = FockState::vacuum(registry(), DEFAULT_TRUNCATION_ORDER);
    let after_first = down_convert(&vac, cfg.g1, ModeId::S1X, &ModeExpr::mode(ModeId::I1))?;
    // the second crystal's idler mode, expressed through I1 and the
    // attenuator's vacuum port
    let idler2 = attenuator(cfg.t_eff(), &ModeExpr::mode(ModeId::I1), ModeId::VAC0, cfg.phi_i)?;
    down_convert(&after_first, cfg.g2, ModeId::S2X, &idler2)
}

/// Positive-frequency field components `(Ê_x, Ê_y)` at the detected output
/// port of the beam splitter.
pub fn output_fields(cfg: &ZwmConfig) -> Result<(ModeExpr, ModeExpr)> {
    cfg.validate()?;
    let p1 = C64::from_polar(1.0, cfg.phi_s1);
    let p2 = C64::from_polar(1.0, cfg.phi_s2);
    let (s1x, s1y) = polarization_rotation(
        cfg.gamma,
        &ModeExpr::term(ModeId::S1X, p1),
        &ModeExpr::term(ModeId::S1Y, p1),
    )?;
    let s2x = ModeExpr::term(ModeId::S2X, p2);
    let s2y = ModeExpr::term(ModeId::S2Y, p2);
    let out = cfg.imperfections.splitter()?.apply((&s1x, &s1y), (&s2x, &s2y));
    Ok(out.port1)
}

/// `G_pq = ⟨Ψ|Ê_p† Ê_q|Ψ⟩` with the `S1`–`S2` cross terms multiplied by
/// `mu_overlap`.
pub fn coherence_matrix(
    state: &FockState,
    fields: &(ModeExpr, ModeExpr),
    mu_overlap: f64,
) -> Result<CoherenceMatrix> {
    if !(0.0..=1.0).contains(&mu_overlap) {
        return Err(Error::parameter("mu_overlap", format!("{mu_overlap} outside [0, 1]")));
    }
    let split = |e: &ModeExpr| {
        (
            e.filter(|m| m.beam == crate::fock::Beam::S1),
            e.filter(|m| m.beam != crate::fock::Beam::S1),
        )
    };
    let [(x1, x2), (y1, y2)] = [split(&fields.0), split(&fields.1)];
    let element = |p: (&ModeExpr, &ModeExpr), q: (&ModeExpr, &ModeExpr)| -> Result<C64> {
        let direct = state.pair_expectation(p.0, q.0)? + state.pair_expectation(p.1, q.1)?;
        let cross = state.pair_expectation(p.0, q.1)? + state.pair_expectation(p.1, q.0)?;
        Ok(direct + cross * mu_overlap)
    };
    let x = (&x1, &x2);
    let y = (&y1, &y2);
    CoherenceMatrix::new(element(x, x)?, element(x, y)?, element(y, x)?, element(y, y)?)
}

/// Full Fock-space pipeline: state, fields, coherence matrix, `P`.
pub fn numeric_coherence(cfg: &ZwmConfig) -> Result<CoherenceMatrix> {
    let state = build_state(cfg)?;
    let fields = output_fields(cfg)?;
    coherence_matrix(&state, &fields, cfg.imperfections.mu_overlap)
}

pub fn numeric_p(cfg: &ZwmConfig) -> Result<f64> {
    numeric_coherence(cfg)?.degree_of_polarization()
}

/// Interferometric phase
/// `β = φ_S2 − φ_S1 − φ_I − arg T + arg g₂ − arg g₁ + π/2`, reduced to
/// `(−π, π]`. The `π/2` is [`BS_REFLECTION_PHASE`]. For `T = 0`, `arg T` is
/// taken as 0; the cross terms vanish then anyway.
pub fn beta(cfg: &ZwmConfig) -> f64 {
    let arg_t = if cfg.t == C64::default() { 0.0 } else { cfg.t.arg() };
    let raw = cfg.phi_s2 - cfg.phi_s1 - cfg.phi_i - arg_t + cfg.g2.arg() - cfg.g1.arg()
        + BS_REFLECTION_PHASE;
    reduce_angle(raw)
}

fn reduce_angle(a: f64) -> f64 {
    let r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

/// General closed form for the ideal device with `|g₁| = |g₂|`:
/// `{cos²γ + |T|²(sin²γ + cos²γ cos²β) + 2|T| cosγ cosβ}^{1/2} / {1 + |T| cosγ cosβ}`,
/// with `|T| = |T·η_idler|`. At `|T| cos γ cos β = −1` no light reaches the
/// detector and the result is [`Error::ZeroTrace`], as for the Fock pipeline.
pub fn analytic_p_general(cfg: &ZwmConfig) -> Result<f64> {
    cfg.validate()?;
    let (a, b) = (cfg.g1.norm(), cfg.g2.norm());
    if (a - b).abs() > 1e-12 * a.max(b) {
        return Err(Error::parameter("g", format!("closed form needs |g1| = |g2| (got {a}, {b})")));
    }
    let imp = cfg.imperfections;
    if imp.bs_tx != 1.0 || imp.bs_ty != 1.0 || imp.mu_overlap != 1.0 {
        return Err(Error::parameter(
            "imperfections",
            "closed form holds only for a balanced splitter with full overlap",
        ));
    }
    let t = cfg.t_eff().norm();
    let (sg, cg) = cfg.gamma.sin_cos();
    let cb = beta(cfg).cos();
    let num = cg * cg + t * t * (sg * sg + cg * cg * cb * cb) + 2.0 * t * cg * cb;
    let den = 1.0 + t * cg * cb;
    // dark fringe: no detected light, P undefined
    if den <= 1e-12 {
        return Err(Error::ZeroTrace);
    }
    Ok(num.max(0.0).sqrt() / den)
}

/// `(|T| + cos γ)/(1 + |T| cos γ)`, the locked-phase (`cos β = 1`) case.
pub fn analytic_p_special(t_abs: f64, gamma: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&t_abs) {
        return Err(Error::parameter("T", format!("|T| = {t_abs} outside [0, 1]")));
    }
    check_rotation_angle(gamma)?;
    let c = gamma.cos();
    Ok((t_abs + c) / (1.0 + t_abs * c))
}
