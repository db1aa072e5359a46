//! Exact (infinite-statistics) execution of the three weak-value estimation
//! schemes and inversion of pointer statistics into weak-value estimates.
//!
//! Every regime evolves the full two-qubit state with the exact gate; the
//! first-order expansions only appear in the estimator inversions.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::qcore::{self, Operator, Projection, PureState, QError, Subsystem, C64};
use crate::weakval::{
    self, convert_abar_to_a, cphase, CouplingConstant, CouplingKind, PrePostSelection,
    WeakValueError,
};

pub const LABEL_PLUS: &str = "plus";
pub const LABEL_MINUS: &str = "minus";
pub const LABEL_PHI: &str = "phi";
pub const LABEL_PHI_PERP: &str = "phi_perp";

/// Stats with a joint post-selection probability below this are flagged invalid.
pub const MIN_POSTSELECT_PROBABILITY: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProtocolError {
    #[error("coupling kind {found:?} does not match regime {regime}")]
    CouplingMismatch { regime: Regime, found: CouplingKind },
    #[error("invalid pointer statistics: {0}")]
    InvalidStats(String),
    #[error("pointer expectation {0} is not invertible for the weak-interaction regime")]
    NonInvertible(f64),
    #[error("effective coupling must be positive and finite, got {0}")]
    InvalidCoupling(f64),
    #[error(transparent)]
    WeakValue(#[from] WeakValueError),
    #[error(transparent)]
    Linalg(#[from] QError),
}

pub type Result<T> = std::result::Result<T, ProtocolError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Regime {
    WeakInteraction,
    InsensitivePointer,
    Erasure,
}

impl Regime {
    pub const ALL: [Regime; 3] = [
        Regime::WeakInteraction,
        Regime::InsensitivePointer,
        Regime::Erasure,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Regime::WeakInteraction => "weak",
            Regime::InsensitivePointer => "insensitive",
            Regime::Erasure => "erasure",
        }
    }

    pub fn coupling_kind(self) -> CouplingKind {
        match self {
            Regime::WeakInteraction => CouplingKind::PhaseShift,
            Regime::InsensitivePointer | Regime::Erasure => CouplingKind::PointerDelta,
        }
    }

    /// The pointer expectation each estimator consumes.
    pub fn raw_stat(self, stats: &PointerStats) -> f64 {
        match self {
            Regime::WeakInteraction | Regime::InsensitivePointer => stats.exp_x,
            Regime::Erasure => stats.exp_z,
        }
    }

    /// Outcome labels of the two-outcome measurement behind [`Regime::raw_stat`],
    /// ordered (+1, −1).
    pub fn outcome_labels(self) -> (&'static str, &'static str) {
        match self {
            Regime::WeakInteraction | Regime::InsensitivePointer => (LABEL_PLUS, LABEL_MINUS),
            Regime::Erasure => (LABEL_PHI, LABEL_PHI_PERP),
        }
    }

    fn method(self) -> &'static str {
        match self {
            Regime::WeakInteraction => "weak interaction: |A_w| = sqrt(1 - <X>)/g, positive root",
            Regime::InsensitivePointer => {
                "insensitive pointer: Abar_w = <X>/delta, A_w = (1 - Abar_w)/2"
            }
            Regime::Erasure => "erasure: Abar_w = <Z>/(4 delta), A_w = (1 - Abar_w)/2",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Regime {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "weak" | "weak-interaction" => Ok(Regime::WeakInteraction),
            "insensitive" | "insensitive-pointer" => Ok(Regime::InsensitivePointer),
            "erasure" => Ok(Regime::Erasure),
            other => Err(format!(
                "unknown regime '{other}' (expected weak, insensitive, erasure)"
            )),
        }
    }
}

/// Feed-forward applied to the system in the erasure regime after the pointer
/// is found in `|φ'_⊥⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FeedForward {
    /// Apply `Ā⁻¹ = Z` to the system.
    #[default]
    TrueOperator,
    /// Post-select the `⊥` branch on `Z†ψ_f` instead of correcting the system.
    SimulatedProjection,
    Off,
}

impl FromStr for FeedForward {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "true-operator" | "true" => Ok(FeedForward::TrueOperator),
            "simulated-projection" | "simulated" => Ok(FeedForward::SimulatedProjection),
            "off" | "none" => Ok(FeedForward::Off),
            other => Err(format!(
                "unknown feed-forward mode '{other}' (expected true-operator, simulated-projection, off)"
            )),
        }
    }
}

impl fmt::Display for FeedForward {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeedForward::TrueOperator => "true-operator",
            FeedForward::SimulatedProjection => "simulated-projection",
            FeedForward::Off => "off",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegimeConfig {
    regime: Regime,
    sel: PrePostSelection,
    coupling: CouplingConstant,
    feedforward: FeedForward,
}

impl RegimeConfig {
    pub fn new(
        regime: Regime,
        sel: PrePostSelection,
        coupling: CouplingConstant,
        feedforward: FeedForward,
    ) -> Result<Self> {
        if coupling.kind() != regime.coupling_kind() {
            return Err(ProtocolError::CouplingMismatch {
                regime,
                found: coupling.kind(),
            });
        }
        Ok(Self {
            regime,
            sel,
            coupling,
            feedforward,
        })
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    pub fn sel(&self) -> &PrePostSelection {
        &self.sel
    }

    pub fn coupling(&self) -> CouplingConstant {
        self.coupling
    }

    pub fn feedforward(&self) -> FeedForward {
        self.feedforward
    }
}

/// Exact pointer statistics conditioned on the system post-selection.
#[derive(Debug, Clone, PartialEq)]
pub struct PointerStats {
    /// Joint probability of the system post-selection succeeding.
    pub p_postselect: f64,
    pub exp_x: f64,
    pub exp_y: f64,
    pub exp_z: f64,
    /// Fidelity of the system with `ψ_i` before post-selection.
    pub system_fidelity: f64,
    /// Conditional distribution of the two-outcome pointer measurement.
    pub outcome_probs: BTreeMap<String, f64>,
    /// `p_postselect / |⟨ψ_f|ψ_i⟩|²`, the squared norm of the unnormalized
    /// conditional pointer state.
    pub relative_weight: f64,
    pub valid: bool,
}

impl PointerStats {
    /// Expectations of the unnormalized conditional pointer state, i.e. the
    /// normalized ones scaled by [`PointerStats::relative_weight`].
    pub fn weighted_x(&self) -> f64 {
        self.exp_x * self.relative_weight
    }

    pub fn weighted_y(&self) -> f64 {
        self.exp_y * self.relative_weight
    }

    pub fn weighted_z(&self) -> f64 {
        self.exp_z * self.relative_weight
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeakValueEstimate {
    pub value: C64,
    pub method: &'static str,
    pub effective_coupling: f64,
    pub valid: bool,
}

fn bloch(state: &PureState) -> Result<(f64, f64, f64)> {
    let n = state.normalize()?;
    Ok((
        qcore::expectation(&Operator::pauli_x(), &n)?,
        qcore::expectation(&Operator::pauli_y(), &n)?,
        qcore::expectation(&Operator::pauli_z(), &n)?,
    ))
}

fn two_outcome(plus: &str, p_plus: f64, minus: &str, p_minus: f64) -> BTreeMap<String, f64> {
    let total = p_plus + p_minus;
    let mut m = BTreeMap::new();
    m.insert(plus.to_string(), p_plus / total);
    m.insert(minus.to_string(), p_minus / total);
    m
}

fn invalid_stats(p_postselect: f64, system_fidelity: f64, regime: Regime) -> PointerStats {
    let (plus, minus) = regime.outcome_labels();
    let mut outcome_probs = BTreeMap::new();
    outcome_probs.insert(plus.to_string(), 0.5);
    outcome_probs.insert(minus.to_string(), 0.5);
    PointerStats {
        p_postselect,
        exp_x: 0.0,
        exp_y: 0.0,
        exp_z: 0.0,
        system_fidelity,
        outcome_probs,
        relative_weight: 0.0,
        valid: false,
    }
}

/// Evolves `ψ_i ⊗ pointer` with `gate`, post-selects the system on `ψ_f`, and
/// reports pointer expectations with X-basis outcome probabilities.
fn run_pointer_regime(
    sel: &PrePostSelection,
    pointer: &PureState,
    gate: &Operator,
    regime: Regime,
) -> Result<PointerStats> {
    let joint = qcore::apply(gate, &qcore::tensor(sel.psi_i(), pointer)?)?;
    let rho = qcore::partial_trace_system(&joint)?;
    let system_fidelity = qcore::fidelity(sel.psi_i(), &rho)?;
    let Projection {
        residual,
        probability,
    } = qcore::project(&joint, sel.psi_f(), Subsystem::System)?;
    let residual = match residual {
        Some(r) if probability >= MIN_POSTSELECT_PROBABILITY && !sel.is_divergent() => r,
        _ => return Ok(invalid_stats(probability, system_fidelity, regime)),
    };
    let (exp_x, exp_y, exp_z) = bloch(&residual)?;
    let p_plus = PureState::plus().inner(&residual)?.norm_sqr();
    let p_minus = PureState::minus().inner(&residual)?.norm_sqr();
    Ok(PointerStats {
        p_postselect: probability,
        exp_x,
        exp_y,
        exp_z,
        system_fidelity,
        outcome_probs: two_outcome(LABEL_PLUS, p_plus, LABEL_MINUS, p_minus),
        relative_weight: probability / sel.bare_probability(),
        valid: true,
    })
}

/// Unnormalized pointer state after `cphase(φ)` on `ψ_i ⊗ |+⟩` and system
/// post-selection on `ψ_f`.
pub fn weak_conditional_pointer(sel: &PrePostSelection, phi: f64) -> Result<Projection> {
    let joint = qcore::apply(
        &cphase(phi),
        &qcore::tensor(sel.psi_i(), &PureState::plus())?,
    )?;
    Ok(qcore::project(&joint, sel.psi_f(), Subsystem::System)?)
}

/// Weak interaction: `cphase(φ)` with the pointer in `|+⟩`, read out in the X basis.
pub fn run_weak_regime(sel: &PrePostSelection, phi: f64) -> Result<PointerStats> {
    CouplingConstant::phase(phi)?;
    run_pointer_regime(
        sel,
        &PureState::plus(),
        &cphase(phi),
        Regime::WeakInteraction,
    )
}

/// Strong interaction (`cphase(π)`) with a pointer deviating by δ from `|0⟩`.
pub fn run_insensitive_regime(sel: &PrePostSelection, delta: f64) -> Result<PointerStats> {
    let pointer = weakval::insensitive_pointer(delta)?;
    run_pointer_regime(
        sel,
        &pointer,
        &cphase(std::f64::consts::PI),
        Regime::InsensitivePointer,
    )
}

/// Strong interaction with the maximally sensitive pointer `|+⟩` (α = 1, β = 0).
pub fn run_strong_pointer_regime(sel: &PrePostSelection) -> Result<PointerStats> {
    run_pointer_regime(
        sel,
        &PureState::plus(),
        &cphase(std::f64::consts::PI),
        Regime::InsensitivePointer,
    )
}

/// Erasure measurement basis `|φ'⟩ = γ_e|0⟩ + δ|1⟩`, `|φ'_⊥⟩ = δ|0⟩ − γ_e|1⟩`.
pub fn erasure_basis(delta: f64) -> Result<(PureState, PureState)> {
    CouplingConstant::delta(delta)?;
    let ge = (1.0 - delta * delta).sqrt();
    Ok((
        PureState::from_real(&[ge, delta])?,
        PureState::from_real(&[delta, -ge])?,
    ))
}

/// Joint probabilities of (pointer outcome × system post-selection) in the
/// erasure regime. Keys: `phi_post`, `phi_perp_post`, `phi_fail`, `phi_perp_fail`.
#[derive(Debug, Clone, PartialEq)]
pub struct ErasureBranches {
    pub joint: BTreeMap<String, f64>,
    pub system_fidelity: f64,
}

pub fn erasure_branches(
    sel: &PrePostSelection,
    delta: f64,
    feedforward: FeedForward,
) -> Result<ErasureBranches> {
    let (phi, phi_perp) = erasure_basis(delta)?;
    let joint_state = qcore::apply(
        &cphase(std::f64::consts::PI),
        &qcore::tensor(sel.psi_i(), &PureState::plus())?,
    )?;
    let z = Operator::pauli_z();

    let mut joint = BTreeMap::new();
    let mut fidelity = 0.0;
    for (label, basis, corrected) in [(LABEL_PHI, &phi, false), (LABEL_PHI_PERP, &phi_perp, true)] {
        let proj = qcore::project(&joint_state, basis, Subsystem::Pointer)?;
        let branch_prob = proj.probability;
        let (p_post, system_after) = match proj.residual {
            None => (0.0, None),
            Some(residual) => {
                // SimulatedProjection analyses the ⊥ branch with Zψ_f; ⟨Zψ_f|r⟩ = ⟨ψ_f|Zr⟩.
                let system_after = match (corrected, feedforward) {
                    (true, FeedForward::TrueOperator | FeedForward::SimulatedProjection) => {
                        qcore::apply(&z, &residual)?
                    }
                    _ => residual,
                };
                let amp = sel.psi_f().inner(&system_after)?;
                (amp.norm_sqr(), Some(system_after))
            }
        };
        if let Some(s) = system_after {
            fidelity += sel.psi_i().inner(&s)?.norm_sqr();
        }
        joint.insert(format!("{label}_post"), p_post);
        joint.insert(format!("{label}_fail"), (branch_prob - p_post).max(0.0));
    }
    Ok(ErasureBranches {
        joint,
        system_fidelity: fidelity.clamp(0.0, 1.0),
    })
}

/// Strong interaction followed by an erasure measurement of the pointer and
/// feed-forward. `exp_z` is the conditional asymmetry between the two pointer
/// outcomes. The pointer is measured only in the erasure basis here, so
/// `exp_x` and `exp_y` are reported as zero.
pub fn run_erasure_regime(
    sel: &PrePostSelection,
    delta: f64,
    feedforward: FeedForward,
) -> Result<PointerStats> {
    let branches = erasure_branches(sel, delta, feedforward)?;
    let p_phi = branches.joint[&format!("{LABEL_PHI}_post")];
    let p_perp = branches.joint[&format!("{LABEL_PHI_PERP}_post")];
    let p_post = p_phi + p_perp;
    if p_post < MIN_POSTSELECT_PROBABILITY || sel.is_divergent() {
        return Ok(invalid_stats(
            p_post,
            branches.system_fidelity,
            Regime::Erasure,
        ));
    }
    Ok(PointerStats {
        p_postselect: p_post,
        exp_x: 0.0,
        exp_y: 0.0,
        exp_z: (p_phi - p_perp) / p_post,
        system_fidelity: branches.system_fidelity,
        outcome_probs: two_outcome(LABEL_PHI, p_phi, LABEL_PHI_PERP, p_perp),
        relative_weight: p_post / sel.bare_probability(),
        valid: true,
    })
}

/// Runs whichever regime the configuration names.
pub fn run(config: &RegimeConfig) -> Result<PointerStats> {
    let v = config.coupling().value();
    match config.regime() {
        Regime::WeakInteraction => run_weak_regime(config.sel(), v),
        Regime::InsensitivePointer => run_insensitive_regime(config.sel(), v),
        Regime::Erasure => run_erasure_regime(config.sel(), v, config.feedforward()),
    }
}

fn check_coupling(k: f64) -> Result<()> {
    if k.is_finite() && k > 0.0 {
        Ok(())
    } else {
        Err(ProtocolError::InvalidCoupling(k))
    }
}

/// Inverts a raw pointer expectation into `A_w` with effective coupling `k`.
pub fn invert_raw(regime: Regime, raw: f64, k: f64) -> Result<f64> {
    check_coupling(k)?;
    if !raw.is_finite() || raw.abs() > 1.0 + 1e-12 {
        return Err(ProtocolError::InvalidStats(format!(
            "expectation {raw} outside [-1, 1]"
        )));
    }
    Ok(match regime {
        Regime::WeakInteraction => {
            let gap = 1.0 - raw;
            if gap < -1e-12 {
                return Err(ProtocolError::NonInvertible(raw));
            }
            gap.max(0.0).sqrt() / k
        }
        Regime::InsensitivePointer => convert_abar_to_a(C64::new(raw / k, 0.0)).re,
        Regime::Erasure => convert_abar_to_a(C64::new(raw / (4.0 * k), 0.0)).re,
    })
}

/// The linearized pointer response the estimator assumes; exact inverse of
/// [`invert_raw`] on its range.
pub fn forward_raw(regime: Regime, a_w: f64, k: f64) -> f64 {
    match regime {
        Regime::WeakInteraction => 1.0 - (k * a_w) * (k * a_w),
        Regime::InsensitivePointer => k * (1.0 - 2.0 * a_w),
        Regime::Erasure => 4.0 * k * (1.0 - 2.0 * a_w),
    }
}

/// Standard error of `A_w` propagated from the standard error of the raw
/// expectation (first-order delta method).
pub fn propagate_stderr(regime: Regime, raw: f64, raw_stderr: f64, k: f64) -> f64 {
    match regime {
        Regime::WeakInteraction => {
            let gap = 1.0 - raw;
            if gap <= 0.0 {
                0.0
            } else {
                raw_stderr / (2.0 * k * gap.sqrt())
            }
        }
        Regime::InsensitivePointer => raw_stderr / (2.0 * k),
        Regime::Erasure => raw_stderr / (8.0 * k),
    }
}

/// Turns pointer statistics into an estimate of `A_w` for `A = (I − Z)/2`.
pub fn estimate_weak_value(
    stats: &PointerStats,
    regime: Regime,
    effective_coupling: f64,
) -> Result<WeakValueEstimate> {
    check_coupling(effective_coupling)?;
    if !stats.valid {
        return Ok(WeakValueEstimate {
            value: C64::new(f64::NAN, 0.0),
            method: regime.method(),
            effective_coupling,
            valid: false,
        });
    }
    let raw = regime.raw_stat(stats);
    let a_w = invert_raw(regime, raw, effective_coupling)?;
    Ok(WeakValueEstimate {
        value: C64::new(a_w, 0.0),
        method: regime.method(),
        effective_coupling,
        valid: true,
    })
}
