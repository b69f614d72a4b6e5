//! Sparse multi-mode bosonic Fock space.
//!
//! States are maps from occupation vectors to complex amplitudes over a fixed
//! [`ModeRegistry`]. Every state carries a truncation order: terms whose total
//! photon number would exceed it are discarded and their squared amplitude is
//! accumulated in [`FockState::truncation_loss`].

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::optics::ModeExpr;

/// Beam a mode belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Beam {
    /// Signal from the first crystal.
    S1,
    /// Signal from the second crystal.
    S2,
    /// Idler from the first crystal (aligned with the second crystal's idler).
    I1,
    /// Unused input port of the attenuator.
    Vac0,
}

impl Beam {
    pub fn is_signal(self) -> bool {
        matches!(self, Beam::S1 | Beam::S2)
    }
}

/// Polarization axis. Signal modes use `X`/`Y`; idler and vacuum-port modes
/// use the single idler axis `Xp`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Polarization {
    X,
    Y,
    Xp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ModeId {
    pub beam: Beam,
    pub pol: Polarization,
}

impl ModeId {
    pub const S1X: ModeId = ModeId::new(Beam::S1, Polarization::X);
    pub const S1Y: ModeId = ModeId::new(Beam::S1, Polarization::Y);
    pub const S2X: ModeId = ModeId::new(Beam::S2, Polarization::X);
    pub const S2Y: ModeId = ModeId::new(Beam::S2, Polarization::Y);
    pub const I1: ModeId = ModeId::new(Beam::I1, Polarization::Xp);
    pub const VAC0: ModeId = ModeId::new(Beam::Vac0, Polarization::Xp);

    pub const fn new(beam: Beam, pol: Polarization) -> Self {
        ModeId { beam, pol }
    }

    /// Signal beams carry `X`/`Y`, idler and vacuum-port beams carry `Xp`.
    pub fn is_well_formed(&self) -> bool {
        match self.pol {
            Polarization::X | Polarization::Y => self.beam.is_signal(),
            Polarization::Xp => !self.beam.is_signal(),
        }
    }
}

impl fmt::Display for ModeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let beam = match self.beam {
            Beam::S1 => "S1",
            Beam::S2 => "S2",
            Beam::I1 => "I1",
            Beam::Vac0 => "0",
        };
        let pol = match self.pol {
            Polarization::X => "x",
            Polarization::Y => "y",
            Polarization::Xp => "x'",
        };
        write!(f, "{beam}{pol}")
    }
}

/// Ordered, duplicate-free set of modes. Fixed once constructed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModeRegistry {
    modes: Vec<ModeId>,
}

impl ModeRegistry {
    pub fn new(modes: impl IntoIterator<Item = ModeId>) -> Result<Arc<Self>> {
        let modes: Vec<ModeId> = modes.into_iter().collect();
        if modes.is_empty() {
            return Err(Error::InvalidRegistry("no modes".into()));
        }
        for (i, m) in modes.iter().enumerate() {
            if !m.is_well_formed() {
                return Err(Error::InvalidRegistry(format!(
                    "{:?} beam cannot carry {:?} polarization",
                    m.beam, m.pol
                )));
            }
            if modes[..i].contains(m) {
                return Err(Error::InvalidRegistry(format!("duplicate mode {m}")));
            }
        }
        Ok(Arc::new(ModeRegistry { modes }))
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn modes(&self) -> &[ModeId] {
        &self.modes
    }

    pub fn index_of(&self, mode: ModeId) -> Result<usize> {
        self.modes
            .iter()
            .position(|m| *m == mode)
            .ok_or(Error::UnknownMode(mode))
    }
}

/// Per-mode photon numbers, indexed like the registry.
pub type Occupation = Vec<u32>;

pub const DEFAULT_TRUNCATION_ORDER: u32 = 2;

#[derive(Debug, Clone)]
pub struct FockState {
    registry: Arc<ModeRegistry>,
    terms: BTreeMap<Occupation, C64>,
    truncation_order: u32,
    prune_threshold: f64,
    truncation_loss: f64,
}

impl FockState {
    pub fn zero(registry: Arc<ModeRegistry>, truncation_order: u32) -> Self {
        FockState {
            registry,
            terms: BTreeMap::new(),
            truncation_order,
            prune_threshold: 0.0,
            truncation_loss: 0.0,
        }
    }

    pub fn vacuum(registry: Arc<ModeRegistry>, truncation_order: u32) -> Self {
        let mut s = Self::zero(registry, truncation_order);
        let n = s.registry.len();
        s.terms.insert(vec![0; n], C64::new(1.0, 0.0));
        s
    }

    /// Single basis state `|occupation⟩` with unit amplitude.
    pub fn basis(
        registry: Arc<ModeRegistry>,
        occupation: Occupation,
        truncation_order: u32,
    ) -> Result<Self> {
        if occupation.len() != registry.len() {
            return Err(Error::parameter(
                "occupation",
                format!("expected {} modes, got {}", registry.len(), occupation.len()),
            ));
        }
        if occupation.iter().sum::<u32>() > truncation_order {
            return Err(Error::parameter(
                "occupation",
                "total photon number exceeds the truncation order",
            ));
        }
        let mut s = Self::zero(registry, truncation_order);
        s.terms.insert(occupation, C64::new(1.0, 0.0));
        Ok(s)
    }

    /// Amplitudes with magnitude strictly below `threshold` are dropped after
    /// every subsequent operation.
    pub fn with_prune_threshold(mut self, threshold: f64) -> Self {
        self.prune_threshold = threshold.max(0.0);
        self.prune();
        self
    }

    pub fn registry(&self) -> &Arc<ModeRegistry> {
        &self.registry
    }

    pub fn truncation_order(&self) -> u32 {
        self.truncation_order
    }

    /// Accumulated squared magnitude of amplitudes discarded by truncation.
    pub fn truncation_loss(&self) -> f64 {
        self.truncation_loss
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Occupation, &C64)> {
        self.terms.iter()
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn amplitude(&self, occupation: &[u32]) -> C64 {
        self.terms.get(occupation).copied().unwrap_or_default()
    }

    /// Amplitude of the basis state with one photon in each listed mode.
    pub fn amplitude_of(&self, modes: &[ModeId]) -> Result<C64> {
        let mut occ = vec![0; self.registry.len()];
        for m in modes {
            occ[self.registry.index_of(*m)?] += 1;
        }
        Ok(self.amplitude(&occ))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.terms.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn scaled(&self, c: C64) -> Self {
        let mut out = self.empty_like();
        out.truncation_loss = self.truncation_loss * c.norm_sqr();
        out.terms = self.terms.iter().map(|(k, a)| (k.clone(), a * c)).collect();
        out.prune();
        out
    }

    pub fn add(&self, other: &FockState) -> Result<Self> {
        self.check_registry(other)?;
        let mut out = self.clone();
        out.truncation_order = self.truncation_order.max(other.truncation_order);
        out.truncation_loss += other.truncation_loss;
        for (k, a) in &other.terms {
            *out.terms.entry(k.clone()).or_default() += a;
        }
        out.prune();
        Ok(out)
    }

    pub fn apply_creation(&self, mode: ModeId) -> Result<Self> {
        let idx = self.registry.index_of(mode)?;
        let mut out = self.empty_like();
        for (occ, amp) in &self.terms {
            let n = occ[idx];
            let amp = amp * ((n + 1) as f64).sqrt();
            if occ.iter().sum::<u32>() + 1 > self.truncation_order {
                out.truncation_loss += amp.norm_sqr();
                continue;
            }
            let mut raised = occ.clone();
            raised[idx] = n + 1;
            *out.terms.entry(raised).or_default() += amp;
        }
        out.prune();
        Ok(out)
    }

    pub fn apply_annihilation(&self, mode: ModeId) -> Result<Self> {
        let idx = self.registry.index_of(mode)?;
        let mut out = self.empty_like();
        for (occ, amp) in &self.terms {
            let n = occ[idx];
            if n == 0 {
                continue;
            }
            let mut lowered = occ.clone();
            lowered[idx] = n - 1;
            *out.terms.entry(lowered).or_default() += amp * (n as f64).sqrt();
        }
        out.prune();
        Ok(out)
    }

    /// Applies `Σ c_m a_m` for `expr = Σ c_m a_m`.
    pub fn apply_annihilation_expr(&self, expr: &ModeExpr) -> Result<Self> {
        let mut out = self.empty_like();
        for (mode, coeff) in expr.terms() {
            let idx = self.registry.index_of(*mode)?;
            for (occ, amp) in &self.terms {
                let n = occ[idx];
                if n == 0 {
                    continue;
                }
                let mut lowered = occ.clone();
                lowered[idx] = n - 1;
                *out.terms.entry(lowered).or_default() += amp * coeff * (n as f64).sqrt();
            }
        }
        out.prune();
        Ok(out)
    }

    /// Applies `(Σ c_m a_m)† = Σ c_m* a_m†` for `expr = Σ c_m a_m`.
    pub fn apply_creation_expr(&self, expr: &ModeExpr) -> Result<Self> {
        let mut out = self.empty_like();
        for (mode, coeff) in expr.terms() {
            let idx = self.registry.index_of(*mode)?;
            for (occ, amp) in &self.terms {
                let n = occ[idx];
                let amp = amp * coeff.conj() * ((n + 1) as f64).sqrt();
                if occ.iter().sum::<u32>() + 1 > self.truncation_order {
                    out.truncation_loss += amp.norm_sqr();
                    continue;
                }
                let mut raised = occ.clone();
                raised[idx] = n + 1;
                *out.terms.entry(raised).or_default() += amp;
            }
        }
        out.prune();
        Ok(out)
    }

    /// `⟨self|ket⟩`, conjugate-linear in `self`.
    pub fn inner_product(&self, ket: &FockState) -> Result<C64> {
        self.check_registry(ket)?;
        // iterate the smaller map, look up in the larger
        let (small, large, conj_small) = if self.terms.len() <= ket.terms.len() {
            (&self.terms, &ket.terms, true)
        } else {
            (&ket.terms, &self.terms, false)
        };
        let mut acc = C64::default();
        for (occ, a) in small {
            if let Some(b) = large.get(occ) {
                acc += if conj_small { a.conj() * b } else { b.conj() * a };
            }
        }
        Ok(acc)
    }

    /// `⟨self| p† q |self⟩` for linear mode expressions `p` and `q`.
    pub fn pair_expectation(&self, p: &ModeExpr, q: &ModeExpr) -> Result<C64> {
        let p_state = self.apply_annihilation_expr(p)?;
        let q_state = self.apply_annihilation_expr(q)?;
        p_state.inner_product(&q_state)
    }

    fn empty_like(&self) -> Self {
        FockState {
            registry: Arc::clone(&self.registry),
            terms: BTreeMap::new(),
            truncation_order: self.truncation_order,
            prune_threshold: self.prune_threshold,
            truncation_loss: self.truncation_loss,
        }
    }

    fn prune(&mut self) {
        let threshold = self.prune_threshold;
        self.terms
            .retain(|_, a| *a != C64::default() && a.norm() >= threshold);
    }

    fn check_registry(&self, other: &FockState) -> Result<()> {
        if Arc::ptr_eq(&self.registry, &other.registry) || self.registry == other.registry {
            Ok(())
        } else {
            Err(Error::RegistryMismatch)
        }
    }
}
