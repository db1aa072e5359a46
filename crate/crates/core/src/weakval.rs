//! Weak values, the controlled-phase gate, and the operator identities that
//! relate the three estimation schemes.
//!
//! Polarization encoding is fixed: `|H⟩ ↦ |0⟩`, `|V⟩ ↦ |1⟩`.

use std::f64::consts::FRAC_1_SQRT_2;

use thiserror::Error;

use crate::qcore::{self, c, Operator, OperatorKind, PureState, QError, C64};

/// Post-selection probabilities `|⟨ψ_f|ψ_i⟩|²` below this are treated as divergent.
pub const DIVERGENCE_THRESHOLD: f64 = 1e-12;

/// Evolution scale that turns [`hamiltonian_cphase`] into [`cphase`] via
/// [`qcore::exp_hermitian`]. The Hamiltonian evolves as `exp(−itH/ħ)` while the
/// gate prescription carries `e^{+iφ}`; the sign lives here.
pub const CPHASE_EVOLUTION_SCALE: f64 = -1.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WeakValueError {
    #[error("post-selection probability {0:.3e} is below the divergence threshold")]
    DivergentPostSelection(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Linalg(#[from] QError),
}

pub type Result<T> = std::result::Result<T, WeakValueError>;

/// Pre-selected state `ψ_i` and post-selected state `ψ_f` of the measured system.
#[derive(Debug, Clone, PartialEq)]
pub struct PrePostSelection {
    psi_i: PureState,
    psi_f: PureState,
    gamma: Option<f64>,
}

impl PrePostSelection {
    /// `ψ_i = cos γ|0⟩ + sin γ|1⟩`, `ψ_f = |+⟩`.
    pub fn from_gamma(gamma: f64) -> Result<Self> {
        Self::from_gamma_with_post(gamma, PureState::plus())
    }

    pub fn from_gamma_with_post(gamma: f64, psi_f: PureState) -> Result<Self> {
        if !gamma.is_finite() || !(0.0..=std::f64::consts::PI).contains(&gamma) {
            return Err(WeakValueError::InvalidParameter(format!(
                "gamma {gamma} outside [0, pi]"
            )));
        }
        let mut sel = Self::new(PureState::real_qubit(gamma), psi_f)?;
        sel.gamma = Some(gamma);
        Ok(sel)
    }

    /// Arbitrary qubit pre/post-selection; both states are normalized here.
    pub fn new(psi_i: PureState, psi_f: PureState) -> Result<Self> {
        for s in [&psi_i, &psi_f] {
            if s.dim() != 2 {
                return Err(QError::DimensionMismatch {
                    expected: 2,
                    found: s.dim(),
                }
                .into());
            }
        }
        Ok(Self {
            psi_i: psi_i.normalize()?,
            psi_f: psi_f.normalize()?,
            gamma: None,
        })
    }

    pub fn psi_i(&self) -> &PureState {
        &self.psi_i
    }

    pub fn psi_f(&self) -> &PureState {
        &self.psi_f
    }

    pub fn gamma(&self) -> Option<f64> {
        self.gamma
    }

    /// `⟨ψ_f|ψ_i⟩`.
    pub fn overlap(&self) -> C64 {
        self.psi_f.inner(&self.psi_i).expect("qubit states")
    }

    /// `|⟨ψ_f|ψ_i⟩|²`, the post-selection probability without interaction.
    pub fn bare_probability(&self) -> f64 {
        self.overlap().norm_sqr()
    }

    pub fn is_divergent(&self) -> bool {
        self.bare_probability() < DIVERGENCE_THRESHOLD
    }
}

/// What a coupling value means physically.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CouplingKind {
    /// Gate phase φ of the tunable c-phase gate.
    PhaseShift,
    /// Pointer deviation δ from the insensitive (or erasure) basis.
    PointerDelta,
    /// Dimensionless weak coupling g = (interaction strength)·t/ħ.
    WeakG,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingConstant {
    value: f64,
    kind: CouplingKind,
}

impl CouplingConstant {
    pub fn new(value: f64, kind: CouplingKind) -> Result<Self> {
        let ok = value.is_finite()
            && match kind {
                CouplingKind::PhaseShift => (0.0..=std::f64::consts::PI).contains(&value),
                CouplingKind::PointerDelta => value > -1.0 && value < 1.0,
                CouplingKind::WeakG => value >= 0.0,
            };
        if !ok {
            return Err(WeakValueError::InvalidParameter(format!(
                "coupling {value} out of range for {kind:?}"
            )));
        }
        Ok(Self { value, kind })
    }

    pub fn phase(phi: f64) -> Result<Self> {
        Self::new(phi, CouplingKind::PhaseShift)
    }

    pub fn delta(delta: f64) -> Result<Self> {
        Self::new(delta, CouplingKind::PointerDelta)
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn kind(&self) -> CouplingKind {
        self.kind
    }
}

/// `A = (I − Z)/2 = |1⟩⟨1|`, the observable probed by the tunable c-phase gate.
pub fn gate_observable() -> Operator {
    Operator::identity(2)
        .unwrap()
        .sub(&Operator::pauli_z())
        .unwrap()
        .scale_real(0.5)
        .with_kind(OperatorKind::Hermitian)
}

/// `Ā = |a₀⟩⟨a₀| − |a₁⟩⟨a₁|`.
pub fn abar_operator(a0: &PureState, a1: &PureState) -> Result<Operator> {
    let p0 = Operator::projector(&a0.normalize()?)?;
    let p1 = Operator::projector(&a1.normalize()?)?;
    Ok(p0.sub(&p1)?.with_kind(OperatorKind::Hermitian))
}

/// `⟨ψ_f|A|ψ_i⟩ / ⟨ψ_f|ψ_i⟩`. Values outside the spectrum of `A` are legal.
pub fn weak_value(a: &Operator, sel: &PrePostSelection) -> Result<C64> {
    if a.dim() != 2 {
        return Err(QError::DimensionMismatch {
            expected: 2,
            found: a.dim(),
        }
        .into());
    }
    let dev = a.hermitian_deviation();
    if dev > qcore::STRUCTURE_TOL {
        return Err(QError::NotHermitian(dev).into());
    }
    let p = sel.bare_probability();
    if p < DIVERGENCE_THRESHOLD {
        return Err(WeakValueError::DivergentPostSelection(p));
    }
    let num = sel.psi_f().inner(&qcore::apply(a, sel.psi_i())?)?;
    Ok(num / sel.overlap())
}

/// `1/(cot γ + 1)`, written as `sin γ/(cos γ + sin γ)` so that γ = 0 gives 0.
pub fn theory_curve(gamma: f64) -> Result<f64> {
    let (s, co) = gamma.sin_cos();
    // |⟨+|ψ_i⟩|² = (cos γ + sin γ)²/2
    let p = 0.5 * (co + s) * (co + s);
    if p < DIVERGENCE_THRESHOLD {
        return Err(WeakValueError::DivergentPostSelection(p));
    }
    Ok(s / (co + s))
}

/// `A_w = (1 − Ā_w)/2`.
pub fn convert_abar_to_a(abar_w: C64) -> C64 {
    (C64::new(1.0, 0.0) - abar_w) * 0.5
}

/// `diag(1, 1, 1, e^{iφ})`.
pub fn cphase(phi: f64) -> Operator {
    let one = c(1.0, 0.0);
    Operator::diagonal(
        &[one, one, one, C64::from_polar(1.0, phi)],
        OperatorKind::Unitary,
    )
    .unwrap()
}

/// The c-phase Hamiltonian `H = H₁ + H₀` with ħ/t stripped, in system ⊗
/// pointer ordering.
#[derive(Debug, Clone)]
pub struct CphaseHamiltonian {
    /// `(φ/4)(I − Z)⊗(I − Z)`
    pub h: Operator,
    /// Interaction term `(φ/4) Z⊗(Z − I)`
    pub h1: Operator,
    /// Free evolution of the pointer `(φ/4) I⊗(I − Z)`
    pub h0: Operator,
}

pub fn hamiltonian_cphase(phi: f64) -> CphaseHamiltonian {
    let id = Operator::identity(2).unwrap();
    let z = Operator::pauli_z();
    let i_minus_z = id.sub(&z).unwrap();
    let z_minus_i = z.sub(&id).unwrap();
    let k = phi / 4.0;
    let herm = |op: Operator| op.scale_real(k).with_kind(OperatorKind::Hermitian);
    CphaseHamiltonian {
        h: herm(i_minus_z.kron(&i_minus_z).unwrap()),
        h1: herm(z.kron(&z_minus_i).unwrap()),
        h0: herm(id.kron(&i_minus_z).unwrap()),
    }
}

/// `U_s = |a₀⟩⟨a₀|⊗I + |a₁⟩⟨a₁|⊗Z`; with `a₀ = |0⟩, a₁ = |1⟩` this is `cphase(π)`.
pub fn strong_unitary(a0: &PureState, a1: &PureState) -> Result<Operator> {
    let p0 = Operator::projector(&a0.normalize()?)?;
    let p1 = Operator::projector(&a1.normalize()?)?;
    let u = p0
        .kron(&Operator::identity(2)?)?
        .add(&p1.kron(&Operator::pauli_z())?)?
        .with_kind(OperatorKind::Unitary);
    Ok(u)
}

/// Pointer-space operator `B = ⟨ψ_f|U_s|ψ_i⟩ / ⟨ψ_f|ψ_i⟩`, obtained by
/// contracting the system indices of `U_s`.
pub fn b_operator(sel: &PrePostSelection, a0: &PureState, a1: &PureState) -> Result<Operator> {
    let p = sel.bare_probability();
    if p < DIVERGENCE_THRESHOLD {
        return Err(WeakValueError::DivergentPostSelection(p));
    }
    let us = strong_unitary(a0, a1)?;
    let (fi, ii) = (sel.psi_f(), sel.psi_i());
    let norm = sel.overlap();
    let mut entries = vec![C64::default(); 4];
    for p_out in 0..2 {
        for p_in in 0..2 {
            let mut acc = C64::default();
            for s_out in 0..2 {
                for s_in in 0..2 {
                    acc += fi.amp(s_out).conj()
                        * us.get(2 * s_out + p_out, 2 * s_in + p_in)
                        * ii.amp(s_in);
                }
            }
            entries[2 * p_out + p_in] = acc / norm;
        }
    }
    Ok(Operator::new(2, entries, OperatorKind::General)?)
}

/// Pointer state `α|+⟩ + β|−⟩` with real `α − β = δ`, `α + β = √(2 − δ²)`.
pub fn insensitive_pointer(delta: f64) -> Result<PureState> {
    if !(delta > -1.0 && delta < 1.0) {
        return Err(WeakValueError::InvalidParameter(format!(
            "delta {delta} outside (-1, 1)"
        )));
    }
    let sum = (2.0 - delta * delta).sqrt();
    // In the computational basis: ((α+β)|0⟩ + (α−β)|1⟩)/√2.
    Ok(PureState::from_real(&[
        sum * FRAC_1_SQRT_2,
        delta * FRAC_1_SQRT_2,
    ])?)
}
