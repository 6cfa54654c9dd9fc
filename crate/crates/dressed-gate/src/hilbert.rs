//! Finite-dimensional Hilbert-space machinery for the joint qubit ⊗ phonon
//! space: Pauli and ladder operators, tensor embedding, states, and the
//! basis rotation between the bare and dressed frames.
//!
//! Basis convention (fixed; all downstream golden values depend on it):
//! qubit factors come first with ion 0 as the slowest index, the phonon
//! factor is last (fastest). Each qubit is ordered (|1⟩, |0⟩), so
//! σ_z = |1⟩⟨1| − |0⟩⟨0| is the literal matrix diag(+1, −1).

use nalgebra::{DMatrix, DVector, Matrix2};
use num_complex::Complex64 as C64;

use crate::error::{GateError, Result};

pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);
pub const ZERO: C64 = C64::new(0.0, 0.0);

/// Dimensions of the joint Hilbert space: `n_ions` qubits and one common
/// vibrational mode truncated to Fock states `0..phonon_cutoff`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpaceShape {
    pub n_ions: usize,
    pub phonon_cutoff: usize,
}

impl SpaceShape {
    pub fn new(n_ions: usize, phonon_cutoff: usize) -> Result<Self> {
        if n_ions == 0 {
            return Err(GateError::InvalidArgument("n_ions must be ≥ 1".into()));
        }
        if phonon_cutoff < 2 {
            return Err(GateError::InvalidArgument(
                "phonon_cutoff must be ≥ 2".into(),
            ));
        }
        Ok(Self { n_ions, phonon_cutoff })
    }

    pub fn spin_dim(&self) -> usize {
        1 << self.n_ions
    }

    pub fn total_dim(&self) -> usize {
        self.spin_dim() * self.phonon_cutoff
    }

    /// Index of the joint basis state with the given spin index and
    /// phonon number.
    pub fn index(&self, spin: usize, n: usize) -> usize {
        spin * self.phonon_cutoff + n
    }
}

/// Dense operator on the joint space.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    pub shape: SpaceShape,
    pub matrix: CMat,
}

impl Operator {
    pub fn new(shape: SpaceShape, matrix: CMat) -> Result<Self> {
        if matrix.nrows() != shape.total_dim() || matrix.ncols() != shape.total_dim() {
            return Err(GateError::ShapeMismatch(format!(
                "matrix is {}x{}, shape requires {}",
                matrix.nrows(),
                matrix.ncols(),
                shape.total_dim()
            )));
        }
        Ok(Self { shape, matrix })
    }

    pub fn zeros(shape: SpaceShape) -> Self {
        let d = shape.total_dim();
        Self { shape, matrix: CMat::zeros(d, d) }
    }

    pub fn identity(shape: SpaceShape) -> Self {
        let d = shape.total_dim();
        Self { shape, matrix: CMat::identity(d, d) }
    }

    /// ‖A − A†‖ / max(‖A‖, 1) — relative deviation from hermiticity.
    pub fn hermiticity_error(&self) -> f64 {
        let diff = &self.matrix - self.matrix.adjoint();
        diff.norm() / self.matrix.norm().max(1.0)
    }

    /// ‖U†U − I‖ — deviation from unitarity.
    pub fn unitarity_error(&self) -> f64 {
        let d = self.matrix.nrows();
        (self.matrix.adjoint() * &self.matrix - CMat::identity(d, d)).norm()
    }
}

/// Normalized state on the joint space.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub shape: SpaceShape,
    pub amplitudes: CVec,
}

impl StateVector {
    pub fn new(shape: SpaceShape, amplitudes: CVec) -> Result<Self> {
        if amplitudes.len() != shape.total_dim() {
            return Err(GateError::ShapeMismatch(format!(
                "amplitude vector has length {}, shape requires {}",
                amplitudes.len(),
                shape.total_dim()
            )));
        }
        Ok(Self { shape, amplitudes })
    }

    /// Joint basis state |spin index⟩ ⊗ |n⟩.
    pub fn basis(shape: SpaceShape, spin: usize, n: usize) -> Result<Self> {
        if spin >= shape.spin_dim() || n >= shape.phonon_cutoff {
            return Err(GateError::InvalidArgument(format!(
                "basis index (spin {spin}, n {n}) outside shape"
            )));
        }
        let mut amp = CVec::zeros(shape.total_dim());
        amp[shape.index(spin, n)] = ONE;
        Ok(Self { shape, amplitudes: amp })
    }

    /// Product state from explicit spin amplitudes (length 2^n_ions) and
    /// phonon amplitudes (length phonon_cutoff). Normalizes the result.
    pub fn product(shape: SpaceShape, spin: &CVec, phonon: &CVec) -> Result<Self> {
        if spin.len() != shape.spin_dim() || phonon.len() != shape.phonon_cutoff {
            return Err(GateError::ShapeMismatch(
                "spin/phonon factor lengths do not match shape".into(),
            ));
        }
        let mut amp = CVec::zeros(shape.total_dim());
        for s in 0..spin.len() {
            for n in 0..phonon.len() {
                amp[shape.index(s, n)] = spin[s] * phonon[n];
            }
        }
        let norm = amp.norm();
        if norm == 0.0 {
            return Err(GateError::InvalidArgument("zero product state".into()));
        }
        amp /= C64::new(norm, 0.0);
        Ok(Self { shape, amplitudes: amp })
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// Reduced spin density matrix after tracing out the phonon mode.
    pub fn reduced_spin_density(&self) -> CMat {
        let sd = self.shape.spin_dim();
        let c = self.shape.phonon_cutoff;
        let mut rho = CMat::zeros(sd, sd);
        for s1 in 0..sd {
            for s2 in 0..sd {
                let mut acc = ZERO;
                for n in 0..c {
                    acc += self.amplitudes[self.shape.index(s1, n)]
                        * self.amplitudes[self.shape.index(s2, n)].conj();
                }
                rho[(s1, s2)] = acc;
            }
        }
        rho
    }
}

/// Pauli axis selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

pub fn sigma(axis: Axis) -> Matrix2<C64> {
    match axis {
        Axis::X => Matrix2::new(ZERO, ONE, ONE, ZERO),
        Axis::Y => Matrix2::new(ZERO, -I, I, ZERO),
        Axis::Z => Matrix2::new(ONE, ZERO, ZERO, -ONE),
    }
}

/// σ_+ = |1⟩⟨0| in the (|1⟩, |0⟩) ordering.
pub fn sigma_plus() -> Matrix2<C64> {
    Matrix2::new(ZERO, ONE, ZERO, ZERO)
}

pub fn sigma_minus() -> Matrix2<C64> {
    Matrix2::new(ZERO, ZERO, ONE, ZERO)
}

/// Single-qubit operator embedded on the spin factor only (2^n × 2^n).
pub fn embed_spin(op: &Matrix2<C64>, ion: usize, n_ions: usize) -> Result<CMat> {
    if ion >= n_ions {
        return Err(GateError::InvalidArgument(format!(
            "ion index {ion} out of range for {n_ions} ions"
        )));
    }
    let mut acc = CMat::identity(1, 1);
    for j in 0..n_ions {
        let factor: CMat = if j == ion {
            CMat::from_fn(2, 2, |r, c| op[(r, c)])
        } else {
            CMat::identity(2, 2)
        };
        acc = acc.kronecker(&factor);
    }
    Ok(acc)
}

/// Spin-factor operator promoted to the joint space (⊗ I_phonon).
pub fn spin_to_full(spin_op: &CMat, shape: SpaceShape) -> CMat {
    let iph = CMat::identity(shape.phonon_cutoff, shape.phonon_cutoff);
    spin_op.kronecker(&iph)
}

/// Phonon-factor operator promoted to the joint space (I_spin ⊗ op).
pub fn phonon_to_full(ph_op: &CMat, shape: SpaceShape) -> CMat {
    let ispin = CMat::identity(shape.spin_dim(), shape.spin_dim());
    ispin.kronecker(ph_op)
}

/// Pauli operator on the addressed ion, identity elsewhere.
pub fn pauli(axis: Axis, ion: usize, shape: SpaceShape) -> Result<Operator> {
    let spin = embed_spin(&sigma(axis), ion, shape.n_ions)?;
    Operator::new(shape, spin_to_full(&spin, shape))
}

/// Truncated annihilation operator on the phonon factor alone
/// (phonon_cutoff × phonon_cutoff).
pub fn annihilation(cutoff: usize) -> CMat {
    let mut b = CMat::zeros(cutoff, cutoff);
    for n in 1..cutoff {
        b[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    b
}

/// Truncated (b, b†) on the joint space; b†|cutoff−1⟩ = 0.
pub fn ladder(shape: SpaceShape) -> (Operator, Operator) {
    let b_ph = annihilation(shape.phonon_cutoff);
    let b = phonon_to_full(&b_ph, shape);
    let bdag = b.adjoint();
    (
        Operator { shape, matrix: b },
        Operator { shape, matrix: bdag },
    )
}

/// Single-qubit rotation taking the bare basis to the dressed basis:
/// conjugation by it maps σ_x → σ_z, σ_y → σ_y, σ_z → −σ_x.
pub fn dressed_rotation() -> Matrix2<C64> {
    let s = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    Matrix2::new(s, s, -s, s)
}

/// Inverse rotation, taking the dressed basis to the double-dressed basis:
/// conjugation maps σ_x → −σ_z, σ_y → σ_y, σ_z → σ_x. The two rotations
/// compose to the identity, so the double-dressed representation coincides
/// with the bare one.
pub fn double_dressed_rotation() -> Matrix2<C64> {
    dressed_rotation().adjoint()
}

/// Conjugates `op` by the per-qubit dressed rotation, re-expressing a
/// bare-basis operator in the dressed basis (σ_x → S_z, σ_y → S_y,
/// σ_z → −S_x). Applying it twice is a π rotation about y on every qubit,
/// so four applications return the original operator.
pub fn dressed_map(op: &Operator) -> Result<Operator> {
    if op.matrix.nrows() != op.shape.total_dim() {
        return Err(GateError::ShapeMismatch(
            "operator matrix does not match its shape".into(),
        ));
    }
    let mut v_spin = CMat::identity(1, 1);
    let v2 = dressed_rotation();
    for _ in 0..op.shape.n_ions {
        let f = CMat::from_fn(2, 2, |r, c| v2[(r, c)]);
        v_spin = v_spin.kronecker(&f);
    }
    let v = spin_to_full(&v_spin, op.shape);
    Operator::new(op.shape, &v * &op.matrix * v.adjoint())
}

/// Normalized truncated coherent-state amplitudes on the phonon factor.
pub fn phonon_coherent(alpha: C64, cutoff: usize) -> Result<CVec> {
    if alpha.norm_sqr() > cutoff as f64 / 4.0 {
        return Err(GateError::Truncation(format!(
            "|alpha|^2 = {:.3} exceeds phonon_cutoff/4 = {:.3}; raise the cutoff",
            alpha.norm_sqr(),
            cutoff as f64 / 4.0
        )));
    }
    let mut amp = CVec::zeros(cutoff);
    // alpha^n / sqrt(n!) built iteratively to avoid overflow.
    let mut term = ONE;
    amp[0] = term;
    for n in 1..cutoff {
        term *= alpha / C64::new((n as f64).sqrt(), 0.0);
        amp[n] = term;
    }
    let norm = amp.norm();
    amp /= C64::new(norm, 0.0);
    Ok(amp)
}

/// Coherent state of the motion with the spin factor in the first basis
/// state. Errors if |alpha|^2 > phonon_cutoff/4.
pub fn coherent_state(alpha: C64, shape: SpaceShape) -> Result<StateVector> {
    let ph = phonon_coherent(alpha, shape.phonon_cutoff)?;
    let mut spin = CVec::zeros(shape.spin_dim());
    spin[0] = ONE;
    StateVector::product(shape, &spin, &ph)
}

/// Dense matrix exponential by scaling and squaring with a convergent
/// Taylor series. Intended for the modest norms of this crate (‖A‖ ≲ 50).
pub fn expm(a: &CMat) -> CMat {
    let n = a.nrows();
    let norm = a.norm();
    let s = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scaled = a / C64::new(2f64.powi(s as i32), 0.0);
    let mut result = CMat::identity(n, n);
    let mut term = CMat::identity(n, n);
    for k in 1..200 {
        term = (&term * &scaled) / C64::new(k as f64, 0.0);
        result += &term;
        if term.norm() < 1e-18 * result.norm() {
            break;
        }
    }
    for _ in 0..s {
        result = &result * &result;
    }
    result
}

/// e^{scale·H} ψ by a convergent Taylor series of matrix-vector products.
pub fn expm_apply(h: &CMat, psi: &CVec, scale: C64) -> CVec {
    let mut result = psi.clone();
    let mut term = psi.clone();
    for k in 1..500 {
        term = (h * &term) * (scale / C64::new(k as f64, 0.0));
        result += &term;
        if term.norm() < 1e-18 * result.norm() {
            break;
        }
    }
    result
}
