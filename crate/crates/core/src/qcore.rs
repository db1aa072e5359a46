//! Small-dimension complex linear algebra for one and two qubits.
//!
//! Joint states are ordered system-first: the amplitude of `|s p⟩` lives at
//! index `2 * s + p`. Everything here is a pure function over immutable values.

use std::fmt;

use num_complex::Complex64;
use thiserror::Error;

pub type C64 = Complex64;

/// Tolerance used for structural checks (hermiticity, unitarity, normalization).
pub const STRUCTURE_TOL: f64 = 1e-12;

/// Off-diagonal threshold at which the 4x4 Jacobi eigensolver stops.
pub const JACOBI_TOL: f64 = 1e-14;

const JACOBI_MAX_SWEEPS: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("unsupported dimension {0} (only 2 and 4 are supported)")]
    UnsupportedDimension(usize),
    #[error("operator is not hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),
    #[error("state has zero norm")]
    ZeroNorm,
    #[error("eigensolver did not converge (off-diagonal norm {0:.3e})")]
    NoConvergence(f64),
}

pub type Result<T> = std::result::Result<T, QError>;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
fn r(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn check_dim(dim: usize) -> Result<()> {
    match dim {
        2 | 4 => Ok(()),
        d => Err(QError::UnsupportedDimension(d)),
    }
}

/// Which half of a joint system⊗pointer state an operation acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    System,
    Pointer,
}

/// A pure state of dimension 2 or 4. Amplitudes are not forced to unit norm:
/// post-selection produces unnormalized residuals on purpose.
#[derive(Clone, PartialEq)]
pub struct PureState {
    amps: Vec<C64>,
}

impl fmt::Debug for PureState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.amps.iter()).finish()
    }
}

impl PureState {
    pub fn new(amps: Vec<C64>) -> Result<Self> {
        check_dim(amps.len())?;
        Ok(Self { amps })
    }

    pub fn from_real(amps: &[f64]) -> Result<Self> {
        Self::new(amps.iter().map(|&a| r(a)).collect())
    }

    /// `cos(gamma)|0⟩ + sin(gamma)|1⟩`.
    pub fn real_qubit(gamma: f64) -> Self {
        Self {
            amps: vec![r(gamma.cos()), r(gamma.sin())],
        }
    }

    pub fn zero() -> Self {
        Self {
            amps: vec![r(1.0), r(0.0)],
        }
    }

    pub fn one() -> Self {
        Self {
            amps: vec![r(0.0), r(1.0)],
        }
    }

    pub fn plus() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self {
            amps: vec![r(h), r(h)],
        }
    }

    pub fn minus() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self {
            amps: vec![r(h), r(-h)],
        }
    }

    /// `(|0⟩ + i|1⟩)/√2`, the +1 eigenstate of Y.
    pub fn left() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self {
            amps: vec![r(h), c(0.0, h)],
        }
    }

    /// `(|0⟩ − i|1⟩)/√2`, the −1 eigenstate of Y.
    pub fn right() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self {
            amps: vec![r(h), c(0.0, -h)],
        }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amps(&self) -> &[C64] {
        &self.amps
    }

    pub fn amp(&self, i: usize) -> C64 {
        self.amps[i]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn normalize(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(QError::ZeroNorm);
        }
        Ok(self.scale(r(1.0 / n)))
    }

    pub fn scale(&self, k: C64) -> Self {
        Self {
            amps: self.amps.iter().map(|a| a * k).collect(),
        }
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &PureState) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(QError::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Phase-insensitive overlap `|⟨a|b⟩| / (‖a‖‖b‖)`.
    pub fn overlap(&self, other: &PureState) -> Result<f64> {
        let denom = self.norm() * other.norm();
        if denom == 0.0 {
            return Err(QError::ZeroNorm);
        }
        Ok(self.inner(other)?.norm() / denom)
    }

    /// State orthogonal to a normalized qubit state, `(−b*, a*)`.
    pub fn orthogonal(&self) -> Result<Self> {
        if self.dim() != 2 {
            return Err(QError::DimensionMismatch {
                expected: 2,
                found: self.dim(),
            });
        }
        Ok(Self {
            amps: vec![-self.amps[1].conj(), self.amps[0].conj()],
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    Hermitian,
    Unitary,
    General,
}

/// Square complex matrix of dimension 2 or 4, stored row-major.
#[derive(Clone, PartialEq)]
pub struct Operator {
    dim: usize,
    entries: Vec<C64>,
    kind: OperatorKind,
}

impl fmt::Debug for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Operator({:?}, dim {})", self.kind, self.dim)?;
        for i in 0..self.dim {
            let row: Vec<String> = (0..self.dim)
                .map(|j| {
                    let z = self.get(i, j);
                    format!("{:+.6}{:+.6}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

impl Operator {
    pub fn new(dim: usize, entries: Vec<C64>, kind: OperatorKind) -> Result<Self> {
        check_dim(dim)?;
        if entries.len() != dim * dim {
            return Err(QError::DimensionMismatch {
                expected: dim * dim,
                found: entries.len(),
            });
        }
        Ok(Self { dim, entries, kind })
    }

    /// Builds a general operator and tags it hermitian/unitary when it
    /// satisfies the property within [`STRUCTURE_TOL`].
    pub fn classify(dim: usize, entries: Vec<C64>) -> Result<Self> {
        let mut op = Self::new(dim, entries, OperatorKind::General)?;
        op.kind = if op.hermitian_deviation() <= STRUCTURE_TOL {
            OperatorKind::Hermitian
        } else if op.unitary_deviation() <= STRUCTURE_TOL {
            OperatorKind::Unitary
        } else {
            OperatorKind::General
        };
        Ok(op)
    }

    pub fn from_real(dim: usize, entries: &[f64], kind: OperatorKind) -> Result<Self> {
        Self::new(dim, entries.iter().map(|&x| r(x)).collect(), kind)
    }

    pub fn diagonal(diag: &[C64], kind: OperatorKind) -> Result<Self> {
        let dim = diag.len();
        check_dim(dim)?;
        let mut entries = vec![C64::default(); dim * dim];
        for (i, d) in diag.iter().enumerate() {
            entries[i * dim + i] = *d;
        }
        Self::new(dim, entries, kind)
    }

    pub fn identity(dim: usize) -> Result<Self> {
        let mut op = Self::diagonal(&vec![r(1.0); dim], OperatorKind::Hermitian)?;
        op.kind = OperatorKind::Hermitian;
        Ok(op)
    }

    pub fn zeros(dim: usize) -> Result<Self> {
        Self::new(
            dim,
            vec![C64::default(); dim * dim],
            OperatorKind::Hermitian,
        )
    }

    pub fn pauli_x() -> Self {
        Self::from_real(2, &[0.0, 1.0, 1.0, 0.0], OperatorKind::Hermitian).unwrap()
    }

    pub fn pauli_y() -> Self {
        Self::new(
            2,
            vec![r(0.0), c(0.0, -1.0), c(0.0, 1.0), r(0.0)],
            OperatorKind::Hermitian,
        )
        .unwrap()
    }

    pub fn pauli_z() -> Self {
        Self::from_real(2, &[1.0, 0.0, 0.0, -1.0], OperatorKind::Hermitian).unwrap()
    }

    /// `|a⟩⟨b|`.
    pub fn outer(a: &PureState, b: &PureState) -> Result<Self> {
        if a.dim() != b.dim() {
            return Err(QError::DimensionMismatch {
                expected: a.dim(),
                found: b.dim(),
            });
        }
        let dim = a.dim();
        let mut entries = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                entries.push(a.amp(i) * b.amp(j).conj());
            }
        }
        Self::new(dim, entries, OperatorKind::General)
    }

    /// `|a⟩⟨a|`, tagged hermitian.
    pub fn projector(a: &PureState) -> Result<Self> {
        let mut op = Self::outer(a, a)?;
        op.kind = OperatorKind::Hermitian;
        Ok(op)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn with_kind(mut self, kind: OperatorKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.entries[i * self.dim + j]
    }

    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    pub fn adjoint(&self) -> Self {
        let d = self.dim;
        let mut entries = vec![C64::default(); d * d];
        for i in 0..d {
            for j in 0..d {
                entries[j * d + i] = self.entries[i * d + j].conj();
            }
        }
        Self {
            dim: d,
            entries,
            kind: self.kind,
        }
    }

    pub fn matmul(&self, other: &Operator) -> Result<Self> {
        if self.dim != other.dim {
            return Err(QError::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        let d = self.dim;
        let mut entries = vec![C64::default(); d * d];
        for i in 0..d {
            for k in 0..d {
                let a = self.entries[i * d + k];
                if a == C64::default() {
                    continue;
                }
                for j in 0..d {
                    entries[i * d + j] += a * other.entries[k * d + j];
                }
            }
        }
        let kind = match (self.kind, other.kind) {
            (OperatorKind::Unitary, OperatorKind::Unitary) => OperatorKind::Unitary,
            _ => OperatorKind::General,
        };
        Ok(Self {
            dim: d,
            entries,
            kind,
        })
    }

    pub fn add(&self, other: &Operator) -> Result<Self> {
        if self.dim != other.dim {
            return Err(QError::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a + b)
            .collect();
        let kind = match (self.kind, other.kind) {
            (OperatorKind::Hermitian, OperatorKind::Hermitian) => OperatorKind::Hermitian,
            _ => OperatorKind::General,
        };
        Ok(Self {
            dim: self.dim,
            entries,
            kind,
        })
    }

    pub fn sub(&self, other: &Operator) -> Result<Self> {
        self.add(&other.scale_real(-1.0))
    }

    pub fn scale(&self, k: C64) -> Self {
        let kind = match self.kind {
            OperatorKind::Hermitian if k.im == 0.0 => OperatorKind::Hermitian,
            OperatorKind::Unitary if (k.norm() - 1.0).abs() <= STRUCTURE_TOL => {
                OperatorKind::Unitary
            }
            _ => OperatorKind::General,
        };
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|a| a * k).collect(),
            kind,
        }
    }

    pub fn scale_real(&self, k: f64) -> Self {
        self.scale(r(k))
    }

    /// Kronecker product `self ⊗ other` of two qubit operators.
    pub fn kron(&self, other: &Operator) -> Result<Self> {
        if self.dim != 2 || other.dim != 2 {
            return Err(QError::DimensionMismatch {
                expected: 2,
                found: self.dim.max(other.dim),
            });
        }
        let mut entries = vec![C64::default(); 16];
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        entries[(2 * i + k) * 4 + (2 * j + l)] = self.get(i, j) * other.get(k, l);
                    }
                }
            }
        }
        let kind = match (self.kind, other.kind) {
            (OperatorKind::Hermitian, OperatorKind::Hermitian) => OperatorKind::Hermitian,
            (OperatorKind::Unitary, OperatorKind::Unitary) => OperatorKind::Unitary,
            _ => OperatorKind::General,
        };
        Ok(Self {
            dim: 4,
            entries,
            kind,
        })
    }

    /// Largest entrywise deviation of `self` from `self†`.
    pub fn hermitian_deviation(&self) -> f64 {
        let d = self.dim;
        let mut worst = 0.0_f64;
        for i in 0..d {
            for j in i..d {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst
    }

    /// Largest entrywise deviation of `self† self` from the identity.
    pub fn unitary_deviation(&self) -> f64 {
        let prod = self.adjoint().matmul(self).expect("same dimension");
        let d = self.dim;
        let mut worst = 0.0_f64;
        for i in 0..d {
            for j in 0..d {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((prod.get(i, j) - r(target)).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian_deviation() <= STRUCTURE_TOL
    }

    pub fn is_unitary(&self) -> bool {
        self.unitary_deviation() <= STRUCTURE_TOL
    }

    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        assert_eq!(self.dim, other.dim, "max_abs_diff on mismatched dimensions");
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// Frobenius distance between `self` and `other` after removing the best
    /// global phase, i.e. `min_θ ‖self − e^{iθ} other‖_F`.
    pub fn phase_aligned_distance(&self, other: &Operator) -> Result<f64> {
        if self.dim != other.dim {
            return Err(QError::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        let ip: C64 = other
            .entries
            .iter()
            .zip(&self.entries)
            .map(|(b, a)| b.conj() * a)
            .sum();
        let phase = if ip.norm() > 0.0 {
            ip / ip.norm()
        } else {
            r(1.0)
        };
        Ok(self.sub(&other.scale(phase))?.frobenius_norm())
    }
}

/// Matrix–vector product. The result is left unnormalized.
pub fn apply(op: &Operator, s: &PureState) -> Result<PureState> {
    if op.dim() != s.dim() {
        return Err(QError::DimensionMismatch {
            expected: op.dim(),
            found: s.dim(),
        });
    }
    let d = op.dim();
    let amps = (0..d)
        .map(|i| (0..d).map(|j| op.get(i, j) * s.amp(j)).sum())
        .collect();
    Ok(PureState { amps })
}

/// Kronecker product of a system qubit and a pointer qubit.
pub fn tensor(system: &PureState, pointer: &PureState) -> Result<PureState> {
    for s in [system, pointer] {
        if s.dim() != 2 {
            return Err(QError::DimensionMismatch {
                expected: 2,
                found: s.dim(),
            });
        }
    }
    let mut amps = Vec::with_capacity(4);
    for a in system.amps() {
        for b in pointer.amps() {
            amps.push(a * b);
        }
    }
    Ok(PureState { amps })
}

/// `⟨s|obs|s⟩` for a hermitian observable; the imaginary residue is dropped.
pub fn expectation(obs: &Operator, s: &PureState) -> Result<f64> {
    let dev = obs.hermitian_deviation();
    if dev > STRUCTURE_TOL {
        return Err(QError::NotHermitian(dev));
    }
    let v = apply(obs, s)?;
    Ok(s.inner(&v)?.re)
}

/// Result of contracting one subsystem of a joint state with a target state.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    /// Unnormalized state of the remaining subsystem; `None` when the
    /// projection has zero probability.
    pub residual: Option<PureState>,
    pub probability: f64,
}

impl Projection {
    pub fn is_null(&self) -> bool {
        self.residual.is_none()
    }
}

/// Contracts `⟨target|` against the named subsystem of a joint state.
pub fn project(s: &PureState, target: &PureState, on: Subsystem) -> Result<Projection> {
    if s.dim() != 4 {
        return Err(QError::DimensionMismatch {
            expected: 4,
            found: s.dim(),
        });
    }
    if target.dim() != 2 {
        return Err(QError::DimensionMismatch {
            expected: 2,
            found: target.dim(),
        });
    }
    let t0 = target.amp(0).conj();
    let t1 = target.amp(1).conj();
    let amps = match on {
        // remaining pointer amplitude p: Σ_s t_s* ψ(s, p)
        Subsystem::System => vec![t0 * s.amp(0) + t1 * s.amp(2), t0 * s.amp(1) + t1 * s.amp(3)],
        Subsystem::Pointer => vec![t0 * s.amp(0) + t1 * s.amp(1), t0 * s.amp(2) + t1 * s.amp(3)],
    };
    let residual = PureState { amps };
    let probability = residual.norm_sqr();
    Ok(Projection {
        residual: if probability > 0.0 {
            Some(residual)
        } else {
            None
        },
        probability,
    })
}

/// A 2x2 density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    entries: [C64; 4],
}

impl DensityMatrix {
    /// Validates hermiticity, unit trace and positivity (eigenvalues ≥ −1e-12).
    pub fn new(entries: [C64; 4]) -> Result<Self> {
        let op = Operator::new(2, entries.to_vec(), OperatorKind::General)?;
        let dev = op.hermitian_deviation();
        if dev > STRUCTURE_TOL {
            return Err(QError::NotHermitian(dev));
        }
        Ok(Self { entries })
    }

    pub fn pure(s: &PureState) -> Result<Self> {
        let n = s.normalize()?;
        let p = Operator::projector(&n)?;
        Ok(Self {
            entries: [p.get(0, 0), p.get(0, 1), p.get(1, 0), p.get(1, 1)],
        })
    }

    pub fn maximally_mixed() -> Self {
        Self {
            entries: [r(0.5), r(0.0), r(0.0), r(0.5)],
        }
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.entries[2 * i + j]
    }

    pub fn trace(&self) -> f64 {
        (self.entries[0] + self.entries[3]).re
    }

    pub fn eigenvalues(&self) -> [f64; 2] {
        let (vals, _) = eigh2(&self.as_operator());
        vals
    }

    pub fn as_operator(&self) -> Operator {
        Operator::new(2, self.entries.to_vec(), OperatorKind::Hermitian).unwrap()
    }

    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// Reduced density matrix of the system qubit of a normalized joint state.
pub fn partial_trace_system(s: &PureState) -> Result<DensityMatrix> {
    if s.dim() != 4 {
        return Err(QError::DimensionMismatch {
            expected: 4,
            found: s.dim(),
        });
    }
    let a = s.amps();
    let mut rho = [C64::default(); 4];
    for i in 0..2 {
        for j in 0..2 {
            rho[2 * i + j] = (0..2).map(|p| a[2 * i + p] * a[2 * j + p].conj()).sum();
        }
    }
    DensityMatrix::new(rho)
}

/// `⟨ψ|ρ|ψ⟩` for a normalized qubit state, clamped to `[0, 1]`.
pub fn fidelity(psi: &PureState, rho: &DensityMatrix) -> Result<f64> {
    if psi.dim() != 2 {
        return Err(QError::DimensionMismatch {
            expected: 2,
            found: psi.dim(),
        });
    }
    let v = apply(&rho.as_operator(), psi)?;
    Ok(psi.inner(&v)?.re.clamp(0.0, 1.0))
}

/// Closed-form eigendecomposition of a 2x2 hermitian matrix. Returns ascending
/// eigenvalues and the unitary whose columns are the eigenvectors.
fn eigh2(h: &Operator) -> ([f64; 2], Operator) {
    let a = h.get(0, 0).re;
    let d = h.get(1, 1).re;
    let b = h.get(0, 1);
    let mean = 0.5 * (a + d);
    let half = 0.5 * (a - d);
    let rad = half.hypot(b.norm());
    let vals = [mean - rad, mean + rad];
    if b.norm() <= f64::EPSILON * (a.abs() + d.abs()).max(1.0) {
        let vecs = if a <= d {
            Operator::identity(2).unwrap()
        } else {
            Operator::from_real(2, &[0.0, 1.0, 1.0, 0.0], OperatorKind::Unitary).unwrap()
        };
        return ([a.min(d), a.max(d)], vecs.with_kind(OperatorKind::Unitary));
    }
    // (b, λ − a) is an eigenvector for each eigenvalue λ.
    let mut cols = [[C64::default(); 2]; 2];
    for (k, lam) in vals.iter().enumerate() {
        let v0 = b;
        let v1 = r(lam - a);
        let n = (v0.norm_sqr() + v1.norm_sqr()).sqrt();
        cols[k] = [v0 / n, v1 / n];
    }
    let vecs = Operator::new(
        2,
        vec![cols[0][0], cols[1][0], cols[0][1], cols[1][1]],
        OperatorKind::Unitary,
    )
    .unwrap();
    (vals, vecs)
}

fn off_diagonal_norm(m: &[C64], d: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..d {
        for j in 0..d {
            if i != j {
                s += m[i * d + j].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// Cyclic complex Jacobi eigensolver for a 4x4 hermitian matrix.
fn eigh4(h: &Operator) -> Result<([f64; 4], Operator)> {
    const D: usize = 4;
    let mut a: Vec<C64> = h.entries().to_vec();
    let mut v: Vec<C64> = Operator::identity(D)?.entries().to_vec();
    let scale = h.frobenius_norm().max(1.0);

    for _ in 0..JACOBI_MAX_SWEEPS {
        if off_diagonal_norm(&a, D) <= JACOBI_TOL * scale {
            break;
        }
        for p in 0..D {
            for q in (p + 1)..D {
                let apq = a[p * D + q];
                let mag = apq.norm();
                if mag == 0.0 {
                    continue;
                }
                // Phase e^{iα} that makes the (p, q) element real, then a real
                // rotation that annihilates it.
                let phase = apq / mag;
                let app = a[p * D + p].re;
                let aqq = a[q * D + q].re;
                let theta = (aqq - app) / (2.0 * mag);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let cs = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * cs;
                // Column transform G: col_p' = c·col_p − s·e^{-iα}·col_q,
                //                     col_q' = s·e^{iα}·col_p + c·col_q.
                let g_pp = r(cs);
                let g_qp = -phase.conj() * sn;
                let g_pq = phase * sn;
                let g_qq = r(cs);
                // A ← A G
                for i in 0..D {
                    let aip = a[i * D + p];
                    let aiq = a[i * D + q];
                    a[i * D + p] = aip * g_pp + aiq * g_qp;
                    a[i * D + q] = aip * g_pq + aiq * g_qq;
                }
                // A ← G† A
                for j in 0..D {
                    let apj = a[p * D + j];
                    let aqj = a[q * D + j];
                    a[p * D + j] = g_pp.conj() * apj + g_qp.conj() * aqj;
                    a[q * D + j] = g_pq.conj() * apj + g_qq.conj() * aqj;
                }
                a[p * D + q] = C64::default();
                a[q * D + p] = C64::default();
                // V ← V G
                for i in 0..D {
                    let vip = v[i * D + p];
                    let viq = v[i * D + q];
                    v[i * D + p] = vip * g_pp + viq * g_qp;
                    v[i * D + q] = vip * g_pq + viq * g_qq;
                }
            }
        }
    }
    let off = off_diagonal_norm(&a, D);
    if off > JACOBI_TOL * scale {
        return Err(QError::NoConvergence(off));
    }
    let vals = [a[0].re, a[5].re, a[10].re, a[15].re];
    Ok((vals, Operator::new(D, v, OperatorKind::Unitary)?))
}

/// Eigendecomposition of a hermitian operator: eigenvalues and the unitary
/// whose columns are the matching eigenvectors.
pub fn eigh(h: &Operator) -> Result<(Vec<f64>, Operator)> {
    let dev = h.hermitian_deviation();
    if dev > STRUCTURE_TOL {
        return Err(QError::NotHermitian(dev));
    }
    match h.dim() {
        2 => {
            let (vals, vecs) = eigh2(h);
            Ok((vals.to_vec(), vecs))
        }
        4 => {
            let (vals, vecs) = eigh4(h)?;
            Ok((vals.to_vec(), vecs))
        }
        d => Err(QError::UnsupportedDimension(d)),
    }
}

/// Exact `exp(−i·scale·H)` for hermitian `H`.
pub fn exp_hermitian(h: &Operator, scale: f64) -> Result<Operator> {
    let (vals, vecs) = eigh(h)?;
    let d = h.dim();
    let phases: Vec<C64> = vals
        .iter()
        .map(|&l| C64::from_polar(1.0, -scale * l))
        .collect();
    let mut entries = vec![C64::default(); d * d];
    for i in 0..d {
        for j in 0..d {
            entries[i * d + j] = (0..d)
                .map(|k| vecs.get(i, k) * phases[k] * vecs.get(j, k).conj())
                .sum();
        }
    }
    Operator::new(d, entries, OperatorKind::Unitary)
}
