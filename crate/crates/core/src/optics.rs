//! Jones-calculus model of the tunable c-phase gate built from two beam
//! displacers, a partially polarizing beam splitter and wave plates.
//!
//! The pointer photon is split by the first beam displacer: `V` travels the
//! upper arm and meets the signal photon on the PPBS, `H` takes the lower arm.
//! Amplitudes are tracked in the coincidence-post-selected sector only, so the
//! norm of the state is the success amplitude accumulated so far.
//!
//! Two half-wave plates at 45° that do not appear in the component table are
//! part of the model: one in the upper arm before `HWP₂`, turning `V` into `H`
//! so that `HWP₂` at 30° prepares `|+₆₀⟩`, and one in the lower arm before the
//! second beam displacer, so that both arms leave through the same port.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4, FRAC_PI_6, PI};
use std::fmt;

use thiserror::Error;

use crate::qcore::{Operator, OperatorKind, QError, C64};

/// PPBS amplitude transmissivity for vertical polarization (intensity 1/3).
pub const PPBS_T_V: f64 = 0.577_350_269_189_625_8;
/// Post-selected amplitude of two vertically polarized photons meeting on the
/// PPBS: `t_V² − r_V² = 1/3 − 2/3`.
pub const PPBS_VV: f64 = -1.0 / 3.0;
/// Tolerance on basis success amplitudes for a chain to count as balanced.
pub const BALANCE_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OpticsError {
    #[error("phase setting {0} outside [0, pi]")]
    PhiOutOfRange(f64),
    #[error("attenuator amplitude {0} outside (0, 1]")]
    InvalidAttenuator(f64),
    #[error("chain is unbalanced: basis success amplitudes range over [{min}, {max}]")]
    ChainUnbalanced { min: f64, max: f64 },
    #[error(transparent)]
    Linalg(#[from] QError),
}

pub type Result<T> = std::result::Result<T, OpticsError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pol {
    H,
    V,
}

impl Pol {
    fn idx(self) -> usize {
        match self {
            Pol::H => 0,
            Pol::V => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum JonesKind {
    Hwp,
    Qwp,
    Polarizer,
    /// Scales the field by `amplitude`; with `axis` set only the linear
    /// polarization along `axis` is attenuated.
    Attenuator {
        amplitude: f64,
        axis: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct JonesElement {
    kind: JonesKind,
    angle: f64,
    matrix: [[C64; 2]; 2],
}

fn real2(m: [[f64; 2]; 2]) -> [[C64; 2]; 2] {
    m.map(|row| row.map(|v| C64::new(v, 0.0)))
}

fn mul2(a: &[[C64; 2]; 2], b: &[[C64; 2]; 2]) -> [[C64; 2]; 2] {
    let mut out = [[C64::default(); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

fn rotation(theta: f64) -> [[C64; 2]; 2] {
    let (s, c) = theta.sin_cos();
    real2([[c, s], [-s, c]])
}

/// Retarder with fast axis at `theta`: `R(−θ)·diag(1, e^{−iη})·R(θ)`.
fn retarder(theta: f64, eta: f64) -> [[C64; 2]; 2] {
    let d = [
        [C64::new(1.0, 0.0), C64::default()],
        [C64::default(), C64::from_polar(1.0, -eta)],
    ];
    mul2(&rotation(-theta), &mul2(&d, &rotation(theta)))
}

fn projector_along(theta: f64) -> [[C64; 2]; 2] {
    let (s, c) = theta.sin_cos();
    real2([[c * c, c * s], [c * s, s * s]])
}

/// Half-wave plate; `[[cos 2θ, sin 2θ], [sin 2θ, −cos 2θ]]`.
pub fn hwp(theta: f64) -> JonesElement {
    let (s, c) = (2.0 * theta).sin_cos();
    JonesElement {
        kind: JonesKind::Hwp,
        angle: theta,
        matrix: real2([[c, s], [s, -c]]),
    }
}

/// Quarter-wave plate; `qwp(0) = diag(1, −i)`.
pub fn qwp(theta: f64) -> JonesElement {
    JonesElement {
        kind: JonesKind::Qwp,
        angle: theta,
        matrix: retarder(theta, PI / 2.0),
    }
}

pub fn polarizer(theta: f64) -> JonesElement {
    JonesElement {
        kind: JonesKind::Polarizer,
        angle: theta,
        matrix: projector_along(theta),
    }
}

pub fn attenuator(amplitude: f64) -> Result<JonesElement> {
    attenuator_impl(amplitude, None)
}

/// Attenuates only the linear polarization at `axis`.
pub fn axis_attenuator(amplitude: f64, axis: f64) -> Result<JonesElement> {
    attenuator_impl(amplitude, Some(axis))
}

fn attenuator_impl(amplitude: f64, axis: Option<f64>) -> Result<JonesElement> {
    if !(amplitude > 0.0 && amplitude <= 1.0) {
        return Err(OpticsError::InvalidAttenuator(amplitude));
    }
    let matrix = match axis {
        None => real2([[amplitude, 0.0], [0.0, amplitude]]),
        Some(theta) => {
            let p = projector_along(theta);
            let k = C64::new(1.0 - amplitude, 0.0);
            let one = C64::new(1.0, 0.0);
            [
                [one - k * p[0][0], -k * p[0][1]],
                [-k * p[1][0], one - k * p[1][1]],
            ]
        }
    };
    Ok(JonesElement {
        kind: JonesKind::Attenuator { amplitude, axis },
        angle: axis.unwrap_or(0.0),
        matrix,
    })
}

impl JonesElement {
    pub fn kind(&self) -> JonesKind {
        self.kind
    }

    pub fn angle(&self) -> f64 {
        self.angle
    }

    pub fn matrix(&self) -> &[[C64; 2]; 2] {
        &self.matrix
    }

    pub fn operator(&self) -> Operator {
        Operator::classify(2, self.matrix.iter().flatten().copied().collect())
            .expect("2x2 Jones matrix")
    }

    pub fn apply(&self, v: [C64; 2]) -> [C64; 2] {
        let m = &self.matrix;
        [
            m[0][0] * v[0] + m[0][1] * v[1],
            m[1][0] * v[0] + m[1][1] * v[1],
        ]
    }
}

impl fmt::Display for JonesElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let deg = self.angle.to_degrees();
        match self.kind {
            JonesKind::Hwp => write!(f, "HWP at {deg:.4} deg"),
            JonesKind::Qwp => write!(f, "QWP at {deg:.4} deg"),
            JonesKind::Polarizer => write!(f, "polarizer at {deg:.4} deg"),
            JonesKind::Attenuator {
                amplitude,
                axis: None,
            } => write!(f, "attenuator amplitude {amplitude:.6}"),
            JonesKind::Attenuator {
                amplitude,
                axis: Some(_),
            } => {
                write!(f, "attenuator amplitude {amplitude:.6} along {deg:.4} deg")
            }
        }
    }
}

/// Spatial mode of the pointer photon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Path {
    /// Before the first beam displacer.
    Input,
    Lower,
    Upper,
    /// After the second beam displacer.
    Output,
}

impl Path {
    pub const ALL: [Path; 4] = [Path::Input, Path::Lower, Path::Upper, Path::Output];

    fn idx(self) -> usize {
        self as usize
    }
}

/// Post-selected two-photon amplitudes indexed by pointer path and by the
/// polarization pair `(pointer, signal)` in the order `HH, HV, VH, VV`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoPhotonAmplitudes {
    amps: [[C64; 4]; 4],
}

pub const POL_LABELS: [&str; 4] = ["HH", "HV", "VH", "VV"];

impl TwoPhotonAmplitudes {
    pub fn zero() -> Self {
        Self {
            amps: [[C64::default(); 4]; 4],
        }
    }

    pub fn basis(path: Path, pointer: Pol, signal: Pol) -> Self {
        let mut s = Self::zero();
        s.amps[path.idx()][2 * pointer.idx() + signal.idx()] = C64::new(1.0, 0.0);
        s
    }

    /// Product of a pointer and a signal polarization state on one path.
    pub fn product(path: Path, pointer: [C64; 2], signal: [C64; 2]) -> Self {
        let mut s = Self::zero();
        for (p, a) in pointer.iter().enumerate() {
            for (q, b) in signal.iter().enumerate() {
                s.amps[path.idx()][2 * p + q] = a * b;
            }
        }
        s
    }

    pub fn amp(&self, path: Path, pointer: Pol, signal: Pol) -> C64 {
        self.amps[path.idx()][2 * pointer.idx() + signal.idx()]
    }

    pub fn on_path(&self, path: Path) -> [C64; 4] {
        self.amps[path.idx()]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().flatten().map(|a| a.norm_sqr()).sum()
    }

    pub fn success_amplitude(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn scale(&self, k: C64) -> Self {
        Self {
            amps: self.amps.map(|row| row.map(|a| a * k)),
        }
    }

    pub fn inner(&self, other: &Self) -> C64 {
        self.amps
            .iter()
            .flatten()
            .zip(other.amps.iter().flatten())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// `|⟨a|b⟩| / (‖a‖‖b‖)`: equality up to global phase and success amplitude.
    pub fn overlap_modulus(&self, other: &Self) -> f64 {
        let n = self.success_amplitude() * other.success_amplitude();
        if n == 0.0 {
            0.0
        } else {
            self.inner(other).norm() / n
        }
    }

    fn map_pointer(&mut self, path: Path, el: &JonesElement) {
        let row = &mut self.amps[path.idx()];
        for q in 0..2 {
            let [h, v] = el.apply([row[q], row[2 + q]]);
            row[q] = h;
            row[2 + q] = v;
        }
    }

    fn map_signal(&mut self, el: &JonesElement) {
        for row in self.amps.iter_mut() {
            for p in 0..2 {
                let [h, v] = el.apply([row[2 * p], row[2 * p + 1]]);
                row[2 * p] = h;
                row[2 * p + 1] = v;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Placement {
    PointerUpper,
    PointerLower,
    PointerOutput,
    Signal,
}

impl fmt::Display for Placement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Placement::PointerUpper => "pointer-upper-arm",
            Placement::PointerLower => "pointer-lower-arm",
            Placement::PointerOutput => "pointer-output",
            Placement::Signal => "signal",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Element {
    /// Routes the pointer from the input port: `H` to the lower arm, `V` to the upper arm.
    BeamDisplacerSplit,
    /// Merges `H` from the upper arm and `V` from the lower arm into the output
    /// port; the other polarizations leave through the unused port.
    BeamDisplacerMerge,
    /// Both-transmitted sector of the PPBS. The signal always crosses it; the
    /// pointer only from the upper arm.
    Ppbs,
    Jones {
        placement: Placement,
        element: JonesElement,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainStep {
    pub name: &'static str,
    pub element: Element,
}

impl ChainStep {
    pub fn apply(&self, state: &TwoPhotonAmplitudes) -> TwoPhotonAmplitudes {
        let mut out = state.clone();
        match &self.element {
            Element::BeamDisplacerSplit => {
                let input = out.amps[Path::Input.idx()];
                out.amps[Path::Input.idx()] = [C64::default(); 4];
                for q in 0..2 {
                    out.amps[Path::Lower.idx()][q] += input[q];
                    out.amps[Path::Upper.idx()][2 + q] += input[2 + q];
                }
            }
            Element::BeamDisplacerMerge => {
                let upper = out.amps[Path::Upper.idx()];
                let lower = out.amps[Path::Lower.idx()];
                out.amps[Path::Upper.idx()] = [C64::default(); 4];
                out.amps[Path::Lower.idx()] = [C64::default(); 4];
                for q in 0..2 {
                    out.amps[Path::Output.idx()][q] += upper[q];
                    out.amps[Path::Output.idx()][2 + q] += lower[2 + q];
                }
            }
            Element::Ppbs => {
                let tv = C64::new(PPBS_T_V, 0.0);
                for path in [Path::Input, Path::Lower, Path::Output] {
                    out.amps[path.idx()][1] *= tv;
                    out.amps[path.idx()][3] *= tv;
                }
                let up = &mut out.amps[Path::Upper.idx()];
                up[1] *= tv;
                up[2] *= tv;
                up[3] *= PPBS_VV;
            }
            Element::Jones { placement, element } => match placement {
                Placement::PointerUpper => out.map_pointer(Path::Upper, element),
                Placement::PointerLower => out.map_pointer(Path::Lower, element),
                Placement::PointerOutput => out.map_pointer(Path::Output, element),
                Placement::Signal => out.map_signal(element),
            },
        }
        out
    }
}

pub const ROW_FIRST_BD: &str = "BD1";
pub const ROW_HWP2: &str = "HWP2";
pub const ROW_PPBS: &str = "PPBS";
pub const ROW_QWP1: &str = "QWP1";
pub const ROW_HWP3: &str = "HWP3";
pub const ROW_SECOND_BD: &str = "BD2";
pub const ROW_HWP6: &str = "HWP6";

/// Names of the steps whose outputs form the component table, in order.
pub const TABLE_ROWS: [&str; 7] = [
    ROW_FIRST_BD,
    ROW_HWP2,
    ROW_PPBS,
    ROW_QWP1,
    ROW_HWP3,
    ROW_SECOND_BD,
    ROW_HWP6,
];

/// Signal-`H` attenuation that equalizes the signal with the PPBS `V` transmission.
pub const BALANCE_SIGNAL_H: f64 = PPBS_T_V;
/// Lower-arm attenuation that matches the upper-arm losses.
pub const BALANCE_LOWER_ARM: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct OpticalChain {
    phi: f64,
    balanced: bool,
    steps: Vec<ChainStep>,
}

fn jones(name: &'static str, placement: Placement, element: JonesElement) -> ChainStep {
    ChainStep {
        name,
        element: Element::Jones { placement, element },
    }
}

/// Canonical chain for phase setting `phi`, with or without the balancing attenuators.
pub fn build_chain(phi: f64, balanced: bool) -> Result<OpticalChain> {
    if !(0.0..=PI).contains(&phi) {
        return Err(OpticsError::PhiOutOfRange(phi));
    }
    let mut steps = vec![
        ChainStep {
            name: ROW_FIRST_BD,
            element: Element::BeamDisplacerSplit,
        },
        jones("HWP_upper_fold", Placement::PointerUpper, hwp(FRAC_PI_4)),
        jones(ROW_HWP2, Placement::PointerUpper, hwp(FRAC_PI_6)),
        ChainStep {
            name: ROW_PPBS,
            element: Element::Ppbs,
        },
        jones(ROW_QWP1, Placement::PointerUpper, qwp(0.0)),
        jones(ROW_HWP3, Placement::PointerUpper, hwp(phi / 4.0)),
        jones("HWP_lower_fold", Placement::PointerLower, hwp(FRAC_PI_4)),
    ];
    if balanced {
        steps.push(jones(
            "ATT_signal_H",
            Placement::Signal,
            axis_attenuator(BALANCE_SIGNAL_H, 0.0)?,
        ));
        steps.push(jones(
            "ATT_lower",
            Placement::PointerLower,
            attenuator(BALANCE_LOWER_ARM)?,
        ));
    }
    steps.push(ChainStep {
        name: ROW_SECOND_BD,
        element: Element::BeamDisplacerMerge,
    });
    steps.push(jones(ROW_HWP6, Placement::PointerOutput, hwp(FRAC_PI_4)));
    Ok(OpticalChain {
        phi,
        balanced,
        steps,
    })
}

/// State after one named step of a traced evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub name: &'static str,
    pub state: TwoPhotonAmplitudes,
}

impl OpticalChain {
    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn balanced(&self) -> bool {
        self.balanced
    }

    pub fn steps(&self) -> &[ChainStep] {
        &self.steps
    }

    pub fn evaluate(&self, input: &TwoPhotonAmplitudes) -> Vec<TraceRow> {
        let mut state = input.clone();
        self.steps
            .iter()
            .map(|step| {
                state = step.apply(&state);
                TraceRow {
                    name: step.name,
                    state: state.clone(),
                }
            })
            .collect()
    }

    pub fn output(&self, input: &TwoPhotonAmplitudes) -> TwoPhotonAmplitudes {
        self.steps
            .iter()
            .fold(input.clone(), |s, step| step.apply(&s))
    }

    /// The trace restricted to the component-table rows.
    pub fn table_trace(&self, input: &TwoPhotonAmplitudes) -> Vec<TraceRow> {
        self.evaluate(input)
            .into_iter()
            .filter(|r| TABLE_ROWS.contains(&r.name))
            .collect()
    }

    /// One line per element: name, placement and setting.
    pub fn listing(&self) -> String {
        let mut out = String::new();
        for step in &self.steps {
            let line = match &step.element {
                Element::BeamDisplacerSplit => {
                    format!("{}\tbeam displacer\tsplit H->lower V->upper", step.name)
                }
                Element::BeamDisplacerMerge => {
                    format!("{}\tbeam displacer\tmerge upper H + lower V", step.name)
                }
                Element::Ppbs => format!("{}\tupper arm + signal\tt_H=1 t_V^2=1/3", step.name),
                Element::Jones { placement, element } => {
                    format!("{}\t{placement}\t{element}", step.name)
                }
            };
            out.push_str(&line);
            out.push('\n');
        }
        out
    }
}

pub fn evaluate_chain(chain: &OpticalChain, input: &TwoPhotonAmplitudes) -> Vec<TraceRow> {
    chain.evaluate(input)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveGate {
    /// Post-selected map on the system ⊗ pointer polarization space in
    /// system-first ordering; scaled by the success amplitude.
    pub map: Operator,
    /// Success amplitude for each basis input, keyed pointer-first
    /// (`HH`, `HV`, `VH`, `VV`).
    pub basis_amplitudes: [f64; 4],
    /// Squared success amplitude of the worst basis input.
    pub success_probability: f64,
    pub balanced: bool,
}

impl EffectiveGate {
    /// The map divided by the common success amplitude.
    pub fn gate(&self) -> Operator {
        self.map.scale_real(1.0 / self.success_probability.sqrt())
    }
}

/// Assembles the 4×4 map from the chain outputs on the four basis inputs.
pub fn effective_gate(chain: &OpticalChain) -> Result<EffectiveGate> {
    let mut entries = vec![C64::default(); 16];
    let mut basis_amplitudes = [0.0; 4];
    for (k, (p, s)) in [
        (Pol::H, Pol::H),
        (Pol::H, Pol::V),
        (Pol::V, Pol::H),
        (Pol::V, Pol::V),
    ]
    .into_iter()
    .enumerate()
    {
        let out = chain.output(&TwoPhotonAmplitudes::basis(Path::Input, p, s));
        basis_amplitudes[k] = out.success_amplitude();
        let col = 2 * s.idx() + p.idx();
        let amps = out.on_path(Path::Output);
        for pp in 0..2 {
            for ss in 0..2 {
                entries[(2 * ss + pp) * 4 + col] = amps[2 * pp + ss];
            }
        }
    }
    let min = basis_amplitudes
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let max = basis_amplitudes.iter().copied().fold(0.0, f64::max);
    if chain.balanced() && max - min > BALANCE_TOL {
        return Err(OpticsError::ChainUnbalanced { min, max });
    }
    Ok(EffectiveGate {
        map: Operator::classify(4, entries)?,
        basis_amplitudes,
        success_probability: min * min,
        balanced: chain.balanced(),
    })
}

/// Pointer-local phase `I ⊗ diag(1, e^{−iφ/2})` (system-first) that the chain
/// adds on top of `cphase(φ)`.
pub fn pointer_local_phase(phi: f64) -> Operator {
    let e = C64::from_polar(1.0, -phi / 2.0);
    let one = C64::new(1.0, 0.0);
    Operator::diagonal(&[one, e, one, e], OperatorKind::Unitary).expect("unit-modulus diagonal")
}

pub fn ket_h() -> [C64; 2] {
    [C64::new(1.0, 0.0), C64::default()]
}

pub fn ket_v() -> [C64; 2] {
    [C64::default(), C64::new(1.0, 0.0)]
}

pub fn ket_diag(sign: f64) -> [C64; 2] {
    [
        C64::new(FRAC_1_SQRT_2, 0.0),
        C64::new(sign * FRAC_1_SQRT_2, 0.0),
    ]
}

/// `|R⟩ = (|H⟩ − i|V⟩)/√2`.
pub fn ket_r() -> [C64; 2] {
    [C64::new(FRAC_1_SQRT_2, 0.0), C64::new(0.0, -FRAC_1_SQRT_2)]
}

/// `|L⟩ = (|H⟩ + i|V⟩)/√2`.
pub fn ket_l() -> [C64; 2] {
    [C64::new(FRAC_1_SQRT_2, 0.0), C64::new(0.0, FRAC_1_SQRT_2)]
}

/// Linear polarization at `theta` from horizontal.
pub fn ket_linear(theta: f64) -> [C64; 2] {
    [C64::new(theta.cos(), 0.0), C64::new(theta.sin(), 0.0)]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weakval::cphase;

    fn close(a: [C64; 2], b: [C64; 2]) -> bool {
        (a[0] - b[0]).norm() < 1e-12 && (a[1] - b[1]).norm() < 1e-12
    }

    fn same_up_to_phase(a: [C64; 2], b: [C64; 2]) -> bool {
        let ov = a[0].conj() * b[0] + a[1].conj() * b[1];
        (ov.norm() - 1.0).abs() < 1e-12
    }

    #[test]
    fn wave_plate_conventions() {
        assert!(close(hwp(FRAC_PI_4).apply(ket_h()), ket_v()));
        assert!(close(hwp(FRAC_PI_4).apply(ket_v()), ket_h()));
        assert!(close(hwp(PI / 8.0).apply(ket_h()), ket_diag(1.0)));
        assert!(close(hwp(FRAC_PI_6).apply(ket_h()), ket_linear(PI / 3.0)));
        assert!(close(qwp(0.0).apply(ket_diag(1.0)), ket_r()));
        assert!(close(qwp(0.0).apply(ket_diag(-1.0)), ket_l()));
    }

    #[test]
    fn hwp3_imprints_opposite_phases() {
        let phi = 0.7;
        let plate = hwp(phi / 4.0);
        let r = plate.apply(ket_r());
        let l = plate.apply(ket_l());
        let ph = C64::from_polar(1.0, -phi / 2.0);
        assert!(close(r, [ket_l()[0] * ph, ket_l()[1] * ph]));
        assert!(close(l, [ket_r()[0] * ph.conj(), ket_r()[1] * ph.conj()]));
        assert!(same_up_to_phase(r, ket_l()));
    }

    #[test]
    fn plates_are_unitary() {
        for theta in [0.0, 0.3, 1.1, 2.9] {
            assert!(hwp(theta).operator().is_unitary());
            assert!(qwp(theta).operator().is_unitary());
        }
        assert!(!polarizer(0.2).operator().is_unitary());
    }

    #[test]
    fn attenuator_bounds() {
        assert!(attenuator(0.0).is_err());
        assert!(attenuator(1.2).is_err());
        let a = axis_attenuator(0.5, 0.0).unwrap();
        assert!(close(
            a.apply(ket_h()),
            [C64::new(0.5, 0.0), C64::default()]
        ));
        assert!(close(a.apply(ket_v()), ket_v()));
    }

    #[test]
    fn ppbs_examples() {
        let ppbs = ChainStep {
            name: ROW_PPBS,
            element: Element::Ppbs,
        };
        let p60 = ket_linear(PI / 3.0);

        let out = ppbs.apply(&TwoPhotonAmplitudes::product(Path::Upper, p60, ket_h()));
        let want = TwoPhotonAmplitudes::product(Path::Upper, ket_diag(1.0), ket_h());
        assert!((out.overlap_modulus(&want) - 1.0).abs() < 1e-12);
        assert!((out.success_amplitude() - FRAC_1_SQRT_2).abs() < 1e-12);

        let out = ppbs.apply(&TwoPhotonAmplitudes::product(Path::Upper, p60, ket_v()));
        let want = TwoPhotonAmplitudes::product(Path::Upper, ket_diag(-1.0), ket_v());
        assert!((out.overlap_modulus(&want) - 1.0).abs() < 1e-12);
        assert!((out.success_amplitude() - 1.0 / 6f64.sqrt()).abs() < 1e-12);

        let out = ppbs.apply(&TwoPhotonAmplitudes::basis(Path::Lower, Pol::H, Pol::V));
        assert!((out.amp(Path::Lower, Pol::H, Pol::V).re - PPBS_T_V).abs() < 1e-15);
    }

    #[test]
    fn unbalanced_amplitudes() {
        let g = effective_gate(&build_chain(0.18 * PI, false).unwrap()).unwrap();
        let want = [1.0, 1.0 / 3f64.sqrt(), 0.5, 1.0 / 12f64.sqrt()];
        for (a, b) in g.basis_amplitudes.iter().zip(want) {
            assert!((a - b).abs() < 1e-12, "{:?}", g.basis_amplitudes);
        }
    }

    #[test]
    fn balanced_chain_is_cphase_with_local_phase() {
        for phi in [0.0, 0.18 * PI, PI / 2.0, PI] {
            let g = effective_gate(&build_chain(phi, true).unwrap()).unwrap();
            for a in g.basis_amplitudes {
                assert!((a - 1.0 / 12f64.sqrt()).abs() < 1e-12);
            }
            let target = pointer_local_phase(phi).matmul(&cphase(phi)).unwrap();
            assert!(g.gate().phase_aligned_distance(&target).unwrap() < 1e-12);
        }
    }

    #[test]
    fn hh_input_bypasses_interaction() {
        let chain = build_chain(0.4, false).unwrap();
        for row in chain.evaluate(&TwoPhotonAmplitudes::basis(Path::Input, Pol::H, Pol::H)) {
            assert_eq!(
                row.state.on_path(Path::Upper),
                [C64::default(); 4],
                "{}",
                row.name
            );
        }
    }

    #[test]
    fn rejects_phi_out_of_range() {
        assert!(build_chain(-0.1, true).is_err());
        assert!(build_chain(3.5, true).is_err());
    }

    #[test]
    fn listing_names_every_step() {
        let chain = build_chain(PI, true).unwrap();
        let listing = chain.listing();
        assert_eq!(listing.lines().count(), chain.steps().len());
        assert!(listing.contains("HWP3\tpointer-upper-arm\tHWP at 45.0000 deg"));
    }
}
