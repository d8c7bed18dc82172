//! Dense complex operators on a qubit coupled to a handful of bath spins.
//!
//! The system qubit is always the leftmost Kronecker factor, so an operator
//! `A` on the system embeds as `A ⊗ I_bath` and basis states are ordered
//! `|s, i_1, ..., i_n⟩` with `s` the most significant bit.

use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Dense square complex matrix: Hamiltonians, propagators, density matrices.
pub type Operator = DMatrix<C64>;

/// Stack-allocated 2×2 operator used on the single-qubit fast path.
pub type Op2 = Matrix2<C64>;

/// Default cap on system + bath spins (dimension 128).
pub const MAX_TOTAL_SPINS: usize = 7;

/// Asymmetry above which an input is rejected as non-Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-9;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

pub fn identity(dim: usize) -> Operator {
    Operator::identity(dim, dim)
}

pub fn pauli_x() -> Operator {
    Operator::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
}

pub fn pauli_y() -> Operator {
    Operator::from_row_slice(2, 2, &[ZERO, -I, I, ZERO])
}

pub fn pauli_z() -> Operator {
    Operator::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])
}

/// `(S_x, S_y, S_z)`, each one half of the corresponding Pauli matrix.
pub fn spin_half_operators() -> (Operator, Operator, Operator) {
    let half = C64::new(0.5, 0.0);
    (pauli_x() * half, pauli_y() * half, pauli_z() * half)
}

/// `exp(−iθ(cos φ σ_x + sin φ σ_y)/2)`: rotation by `angle` about the
/// in-plane axis at azimuth `phase`.
pub fn rotation_unitary(phase: f64, angle: f64) -> Operator {
    to_dynamic(&rotation2(phase, angle))
}

/// [`rotation_unitary`] on the stack.
pub fn rotation2(phase: f64, angle: f64) -> Op2 {
    let (s, c) = (angle / 2.0).sin_cos();
    let e_minus = C64::from_polar(1.0, -phase);
    let e_plus = C64::from_polar(1.0, phase);
    Op2::new(
        C64::new(c, 0.0),
        -I * s * e_minus,
        -I * s * e_plus,
        C64::new(c, 0.0),
    )
}

/// `exp(−i t (h_x S_x + h_y S_y + h_z S_z))` in closed form.
pub fn su2_propagator(hx: f64, hy: f64, hz: f64, t: f64) -> Op2 {
    let norm = (hx * hx + hy * hy + hz * hz).sqrt();
    let half_angle = 0.5 * norm * t;
    if norm == 0.0 || half_angle == 0.0 {
        return Op2::identity();
    }
    let (s, c) = half_angle.sin_cos();
    let (nx, ny, nz) = (hx / norm, hy / norm, hz / norm);
    Op2::new(
        C64::new(c, -s * nz),
        C64::new(-s * ny, -s * nx),
        C64::new(s * ny, -s * nx),
        C64::new(c, s * nz),
    )
}

/// `exp(−i φ S_z)`, a pure phase accumulation.
pub fn z_phase(phi: f64) -> Op2 {
    Op2::new(
        C64::from_polar(1.0, -0.5 * phi),
        ZERO,
        ZERO,
        C64::from_polar(1.0, 0.5 * phi),
    )
}

pub fn to_dynamic(m: &Op2) -> Operator {
    Operator::from_row_slice(2, 2, &[m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]])
}

pub fn to_op2(m: &Operator) -> Result<Op2> {
    if m.nrows() != 2 || m.ncols() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: m.nrows(),
        });
    }
    Ok(Op2::new(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]))
}

pub fn kron(a: &Operator, b: &Operator) -> Operator {
    a.kronecker(b)
}

pub fn dagger(a: &Operator) -> Operator {
    a.adjoint()
}

pub fn commutator(a: &Operator, b: &Operator) -> Operator {
    a * b - b * a
}

/// Largest entry modulus.
pub fn max_norm(a: &Operator) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_abs_diff(a: &Operator, b: &Operator) -> f64 {
    max_norm(&(a - b))
}

pub fn hermitian_asymmetry(a: &Operator) -> f64 {
    max_abs_diff(a, &a.adjoint())
}

/// `‖U†U − I‖_max`.
pub fn unitarity_residual(u: &Operator) -> f64 {
    max_abs_diff(&(u.adjoint() * u), &identity(u.nrows()))
}

/// `min_α ‖A − e^{iα}B‖_max`, with `α` taken from the overlap `Tr(B†A)`.
pub fn phase_aligned_distance(a: &Operator, b: &Operator) -> f64 {
    let overlap = (b.adjoint() * a).trace();
    let phase = if overlap.norm() > 0.0 {
        overlap / overlap.norm()
    } else {
        ONE
    };
    max_abs_diff(a, &(b * phase))
}

/// Number of spins represented by a `dim`-dimensional space.
pub fn spin_count(dim: usize) -> Result<usize> {
    if dim < 2 || !dim.is_power_of_two() {
        return Err(Error::BadDimension(dim));
    }
    Ok(dim.trailing_zeros() as usize)
}

pub fn embed_system(op: &Operator, n_bath: usize) -> Result<Operator> {
    embed_system_with_limit(op, n_bath, MAX_TOTAL_SPINS)
}

/// `op ⊗ I_{2^n_bath}`.
pub fn embed_system_with_limit(op: &Operator, n_bath: usize, max_spins: usize) -> Result<Operator> {
    if op.nrows() != 2 || op.ncols() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: op.nrows(),
        });
    }
    if 1 + n_bath > max_spins {
        return Err(Error::TooManySpins {
            total: 1 + n_bath,
            max: max_spins,
        });
    }
    Ok(kron(op, &identity(1 << n_bath)))
}

/// Places a single-spin operator at `site` (0 = system) in an `n_spins` register.
pub fn embed_site(op: &Operator, site: usize, n_spins: usize) -> Operator {
    debug_assert!(site < n_spins);
    let left = identity(1 << site);
    let right = identity(1 << (n_spins - site - 1));
    kron(&kron(&left, op), &right)
}

fn check_hermitian(h: &Operator) -> Result<()> {
    if h.nrows() != h.ncols() {
        return Err(Error::DimensionMismatch {
            expected: h.nrows(),
            found: h.ncols(),
        });
    }
    let asymmetry = hermitian_asymmetry(h);
    if asymmetry > HERMITIAN_TOL {
        return Err(Error::NotHermitian { asymmetry });
    }
    Ok(())
}

/// Spectral decomposition of a Hermitian generator, reusable for any duration.
#[derive(Clone, Debug)]
pub struct HermitianPropagator {
    eigenvalues: Vec<f64>,
    eigenvectors: Operator,
}

impl HermitianPropagator {
    pub fn new(h: &Operator) -> Result<Self> {
        check_hermitian(h)?;
        // Symmetrize so round-off in the input never leaks into the spectrum.
        let sym = (h + h.adjoint()) * C64::new(0.5, 0.0);
        let eig = sym.symmetric_eigen();
        Ok(Self {
            eigenvalues: eig.eigenvalues.iter().copied().collect(),
            eigenvectors: eig.eigenvectors,
        })
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `exp(−i h t)`.
    pub fn at(&self, t: f64) -> Operator {
        let v = &self.eigenvectors;
        let mut scaled = v.clone();
        for (j, &lambda) in self.eigenvalues.iter().enumerate() {
            let phase = C64::from_polar(1.0, -lambda * t);
            for z in scaled.column_mut(j).iter_mut() {
                *z *= phase;
            }
        }
        scaled * v.adjoint()
    }
}

/// `exp(−i h t)` for Hermitian `h`, via eigendecomposition.
pub fn hermitian_expm(h: &Operator, t: f64) -> Result<Operator> {
    if t == 0.0 {
        check_hermitian(h)?;
        return Ok(identity(h.nrows()));
    }
    Ok(HermitianPropagator::new(h)?.at(t))
}

/// A constant Hamiltonian acting for `duration` seconds.
#[derive(Clone, Debug)]
pub struct EvolutionSegment {
    pub hamiltonian: Operator,
    pub duration: f64,
}

impl EvolutionSegment {
    pub fn new(hamiltonian: Operator, duration: f64) -> Result<Self> {
        if !duration.is_finite() || duration < 0.0 {
            return Err(crate::error::invalid(format!(
                "segment duration must be finite and non-negative, got {duration}"
            )));
        }
        Ok(Self {
            hamiltonian,
            duration,
        })
    }
}

/// Time-ordered product `U_n ··· U_1` with segment 1 earliest.
pub fn evolve(segments: &[EvolutionSegment]) -> Result<Operator> {
    let first = segments
        .first()
        .ok_or_else(|| crate::error::invalid("evolve needs at least one segment"))?;
    let dim = first.hamiltonian.nrows();
    let mut u = identity(dim);
    for seg in segments {
        if seg.hamiltonian.nrows() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: seg.hamiltonian.nrows(),
            });
        }
        u = hermitian_expm(&seg.hamiltonian, seg.duration)? * u;
    }
    Ok(u)
}

/// Density matrix on a `2^n` dimensional register.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix(Operator);

impl DensityMatrix {
    /// Wraps a matrix without checking physicality; see [`DensityMatrix::validate`].
    pub fn from_matrix(m: Operator) -> Self {
        Self(m)
    }

    pub fn pure(psi: &[C64]) -> Self {
        let v = nalgebra::DVector::from_column_slice(psi);
        Self(&v * v.adjoint())
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self(identity(dim) * C64::new(1.0 / dim as f64, 0.0))
    }

    pub fn matrix(&self) -> &Operator {
        &self.0
    }

    pub fn into_matrix(self) -> Operator {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        Self(kron(&self.0, &other.0))
    }

    /// `U ρ U†`.
    pub fn conjugate(&self, u: &Operator) -> DensityMatrix {
        Self(u * &self.0 * u.adjoint())
    }

    /// Hermiticity, unit trace and eigenvalues above `−tol`.
    pub fn validate(&self, tol: f64) -> Result<()> {
        let asym = hermitian_asymmetry(&self.0);
        if asym > tol {
            return Err(Error::NotHermitian { asymmetry: asym });
        }
        let tr = self.trace();
        if (tr - ONE).norm() > tol {
            return Err(crate::error::invalid(format!("density matrix trace {tr}")));
        }
        let sym = (&self.0 + self.0.adjoint()) * C64::new(0.5, 0.0);
        let min_eig = sym
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if min_eig < -tol {
            return Err(crate::error::invalid(format!(
                "density matrix eigenvalue {min_eig}"
            )));
        }
        Ok(())
    }
}

/// Traces out every bath spin, leaving the 2×2 system state.
pub fn partial_trace_bath(rho: &DensityMatrix) -> Result<DensityMatrix> {
    let dim = rho.dim();
    spin_count(dim)?;
    let bath = dim / 2;
    let m = rho.matrix();
    let mut out = Operator::zeros(2, 2);
    for s in 0..2 {
        for t in 0..2 {
            let mut acc = ZERO;
            for k in 0..bath {
                acc += m[(s * bath + k, t * bath + k)];
            }
            out[(s, t)] = acc;
        }
    }
    Ok(DensityMatrix(out))
}
