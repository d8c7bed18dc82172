//! Single-qubit process tomography by linear inversion, and the overlap
//! fidelity `|Tr(AB†)| / √(Tr(AA†) Tr(BB†))`.
//!
//! Process matrices are expressed in the basis `(I, σ_x, iσ_y, σ_z)`.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector, Matrix4};
use serde::{Deserialize, Serialize};

use crate::compiler::Schedule;
use crate::error::{invalid, Error, Result};
use crate::linalg::{to_dynamic, to_op2, Op2, Operator, C64};
use crate::noise::NoiseModel;
use crate::sim::ensemble_outputs;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

pub const BASIS_LABELS: [&str; 4] = ["I", "X", "iY", "Z"];

/// `(I, σ_x, iσ_y, σ_z)`.
pub fn chi_basis() -> [Op2; 4] {
    [
        Op2::identity(),
        Op2::new(ZERO, ONE, ONE, ZERO),
        Op2::new(ZERO, ONE, -ONE, ZERO),
        Op2::new(ONE, ZERO, ZERO, -ONE),
    ]
}

fn paulis() -> [Op2; 4] {
    [
        Op2::identity(),
        Op2::new(ZERO, ONE, ONE, ZERO),
        Op2::new(ZERO, -I, I, ZERO),
        Op2::new(ONE, ZERO, ZERO, -ONE),
    ]
}

/// Probe states `|0⟩, |1⟩, |+⟩, |+i⟩`.
pub fn input_states() -> [Op2; 4] {
    let h = C64::new(0.5, 0.0);
    [
        Op2::new(ONE, ZERO, ZERO, ZERO),
        Op2::new(ZERO, ZERO, ZERO, ONE),
        Op2::new(h, h, h, h),
        Op2::new(h, -I * 0.5, I * 0.5, h),
    ]
}

/// Channel outputs for the four [`input_states`], in the same order.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelSamples {
    pub outputs: [Op2; 4],
}

impl ChannelSamples {
    pub fn of_unitary(u: &Op2) -> Self {
        Self {
            outputs: input_states().map(|rho| u * rho * u.adjoint()),
        }
    }

    /// Mean over per-realization output sets.
    pub fn mean(sets: &[Vec<Op2>]) -> Result<Self> {
        if sets.is_empty() {
            return Err(invalid("no channel outputs to average"));
        }
        let mut acc = [Op2::zeros(); 4];
        for set in sets {
            if set.len() != 4 {
                return Err(Error::DimensionMismatch {
                    expected: 4,
                    found: set.len(),
                });
            }
            for (a, o) in acc.iter_mut().zip(set) {
                *a += o;
            }
        }
        let scale = C64::new(1.0 / sets.len() as f64, 0.0);
        Ok(Self {
            outputs: acc.map(|a| a * scale),
        })
    }

    pub fn validate(&self, tol: f64) -> Result<()> {
        for o in &self.outputs {
            crate::linalg::DensityMatrix::from_matrix(to_dynamic(o)).validate(tol)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChiMatrix(pub Matrix4<C64>);

/// Labeled, JSON-friendly form of a [`ChiMatrix`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChiRecord {
    pub label: String,
    pub basis: Vec<String>,
    /// Row-major `[re, im]` pairs.
    pub entries: Vec<[f64; 2]>,
}

impl ChiMatrix {
    pub fn entries(&self) -> &Matrix4<C64> {
        &self.0
    }

    pub fn as_operator(&self) -> Operator {
        Operator::from_fn(4, 4, |i, j| self.0[(i, j)])
    }

    /// `‖Σ χ_mn E_n† E_m − I‖_max`.
    pub fn trace_preservation_residual(&self) -> f64 {
        let e = chi_basis();
        let mut sum = Op2::zeros();
        for m in 0..4 {
            for n in 0..4 {
                sum += e[n].adjoint() * e[m] * self.0[(m, n)];
            }
        }
        (sum - Op2::identity()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn hermitian_asymmetry(&self) -> f64 {
        (self.0 - self.0.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let sym = (self.0 + self.0.adjoint()) * C64::new(0.5, 0.0);
        sym.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn to_record(&self, label: &str) -> ChiRecord {
        ChiRecord {
            label: label.to_string(),
            basis: BASIS_LABELS.iter().map(|s| s.to_string()).collect(),
            entries: self.0.transpose().iter().map(|z| [z.re, z.im]).collect(),
        }
    }

    pub fn from_record(rec: &ChiRecord) -> Result<Self> {
        if rec.entries.len() != 16 {
            return Err(Error::DimensionMismatch {
                expected: 16,
                found: rec.entries.len(),
            });
        }
        if rec.basis != BASIS_LABELS {
            return Err(invalid(format!("unsupported chi basis {:?}", rec.basis)));
        }
        Ok(Self(Matrix4::from_fn(|i, j| {
            let [re, im] = rec.entries[4 * i + j];
            C64::new(re, im)
        })))
    }

    /// Applies `ρ ↦ Σ χ_mn E_m ρ E_n†`.
    pub fn apply(&self, rho: &Op2) -> Op2 {
        let e = chi_basis();
        let mut out = Op2::zeros();
        for m in 0..4 {
            for n in 0..4 {
                out += e[m] * rho * e[n].adjoint() * self.0[(m, n)];
            }
        }
        out
    }
}

fn half_trace(a: &Op2) -> C64 {
    a.trace() * 0.5
}

/// Inverse of `β_{(jk),(mn)} = Tr(P_k E_m P_j E_n†)/2`.
fn inversion_matrix() -> &'static DMatrix<C64> {
    static INVERSE: OnceLock<DMatrix<C64>> = OnceLock::new();
    INVERSE.get_or_init(|| {
        let (p, e) = (paulis(), chi_basis());
        let beta = DMatrix::from_fn(16, 16, |row, col| {
            let (j, k) = (row / 4, row % 4);
            let (m, n) = (col / 4, col % 4);
            half_trace(&(p[k] * e[m] * p[j] * e[n].adjoint()))
        });
        beta.try_inverse().expect("tomography system is nonsingular for the fixed basis")
    })
}

/// Linear-inversion process matrix; no positivity projection.
pub fn chi_reconstruct(c: &ChannelSamples) -> ChiMatrix {
    let [r0, r1, rp, ri] = &c.outputs;
    let e_i = r0 + r1;
    let images = [e_i, rp * C64::new(2.0, 0.0) - e_i, ri * C64::new(2.0, 0.0) - e_i, r0 - r1];
    let p = paulis();
    let lambda = DVector::from_fn(16, |row, _| {
        let (j, k) = (row / 4, row % 4);
        half_trace(&(p[k] * images[j]))
    });
    let chi = inversion_matrix() * lambda;
    ChiMatrix(Matrix4::from_fn(|m, n| chi[4 * m + n]))
}

/// `χ_mn = c_m c_n*` for `U = Σ c_m E_m`.
pub fn unitary_chi(u: &Op2) -> ChiMatrix {
    let c = chi_basis().map(|e| half_trace(&(e.adjoint() * u)));
    ChiMatrix(Matrix4::from_fn(|m, n| c[m] * c[n].conj()))
}

/// `|Tr(AB†)| / √(Tr(AA†) Tr(BB†))`.
pub fn gate_fidelity(a: &Operator, b: &Operator) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows() * a.ncols(),
            found: b.nrows() * b.ncols(),
        });
    }
    let overlap: C64 = a.iter().zip(b.iter()).map(|(x, y)| x * y.conj()).sum();
    let na: f64 = a.iter().map(|z| z.norm_sqr()).sum();
    let nb: f64 = b.iter().map(|z| z.norm_sqr()).sum();
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok((overlap.norm() / (na * nb).sqrt()).min(1.0))
}

pub fn chi_fidelity(a: &ChiMatrix, b: &ChiMatrix) -> Result<f64> {
    gate_fidelity(&a.as_operator(), &b.as_operator())
}

pub fn simulate_channel(s: &Schedule, noise: &NoiseModel, n_realizations: usize, seed: u64) -> Result<ChannelSamples> {
    ChannelSamples::mean(&ensemble_outputs(s, noise, &input_states(), n_realizations, seed)?)
}

/// Chi of the noiseless target channel, reconstructed like a measured one.
pub fn ideal_chi(target: &Operator) -> Result<ChiMatrix> {
    Ok(chi_reconstruct(&ChannelSamples::of_unitary(&to_op2(target)?)))
}

pub fn process_fidelity(s: &Schedule, noise: &NoiseModel, n_realizations: usize, seed: u64) -> Result<f64> {
    Ok(process_fidelity_with_error(s, noise, n_realizations, seed)?.fidelity)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FidelityEstimate {
    pub fidelity: f64,
    /// Grouped jackknife standard error; zero for deterministic channels.
    pub stderr: f64,
}

/// Largest number of jackknife groups.
pub const JACKKNIFE_GROUPS: usize = 10;

/// Process fidelity plus a grouped-jackknife error over contiguous
/// realization blocks.
pub fn process_fidelity_with_error(s: &Schedule, noise: &NoiseModel, n_realizations: usize, seed: u64) -> Result<FidelityEstimate> {
    let ideal = ideal_chi(&s.target_gate)?;
    let sets = ensemble_outputs(s, noise, &input_states(), n_realizations, seed)?;
    let score = |samples: &ChannelSamples| chi_fidelity(&chi_reconstruct(samples), &ideal);
    let fidelity = score(&ChannelSamples::mean(&sets)?)?;
    let n = sets.len();
    let groups = JACKKNIFE_GROUPS.min(n);
    if groups < 2 {
        return Ok(FidelityEstimate { fidelity, stderr: 0.0 });
    }
    let bounds: Vec<usize> = (0..=groups).map(|g| g * n / groups).collect();
    let mut leave_out = Vec::with_capacity(groups);
    for g in 0..groups {
        let rest: Vec<Vec<Op2>> = sets[..bounds[g]].iter().chain(&sets[bounds[g + 1]..]).cloned().collect();
        leave_out.push(score(&ChannelSamples::mean(&rest)?)?);
    }
    let g = groups as f64;
    let mean = leave_out.iter().sum::<f64>() / g;
    let var = leave_out.iter().map(|f| (f - mean).powi(2)).sum::<f64>() * (g - 1.0) / g;
    Ok(FidelityEstimate {
        fidelity,
        stderr: var.sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compiler::{Compiler, DDKind, Gate, RotationSpec};
    use crate::linalg::{pauli_x, pauli_z, rotation2};
    use crate::noise::{ClassicalDephasing, OUNoiseSpec};
    use std::f64::consts::PI;

    fn max_diff4(a: &Matrix4<C64>, b: &Matrix4<C64>) -> f64 {
        (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn basis_is_orthogonal() {
        let e = chi_basis();
        for m in 0..4 {
            for n in 0..4 {
                let expected = if m == n { 2.0 } else { 0.0 };
                assert!(((e[m].adjoint() * e[n]).trace() - C64::new(expected, 0.0)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn identity_and_not_channels() {
        let id = chi_reconstruct(&ChannelSamples::of_unitary(&Op2::identity()));
        let mut expected = Matrix4::zeros();
        expected[(0, 0)] = ONE;
        assert!(max_diff4(id.entries(), &expected) < 1e-10);

        let not = chi_reconstruct(&ChannelSamples::of_unitary(&rotation2(0.0, PI)));
        let mut expected = Matrix4::zeros();
        expected[(1, 1)] = ONE;
        assert!(max_diff4(not.entries(), &expected) < 1e-10);
        assert!(not.trace_preservation_residual() < 1e-12);
    }

    #[test]
    fn hadamard_matches_direct_expansion() {
        // H = (σ_x + σ_z)/√2 → c = (0, 1/√2, 0, 1/√2)
        let h = to_op2(&Gate::H.ideal_unitary()).unwrap();
        let chi = chi_reconstruct(&ChannelSamples::of_unitary(&h));
        let mut expected = Matrix4::zeros();
        for (m, n) in [(1, 1), (1, 3), (3, 1), (3, 3)] {
            expected[(m, n)] = C64::new(0.5, 0.0);
        }
        assert!(max_diff4(chi.entries(), &expected) < 1e-10);
        assert!(max_diff4(unitary_chi(&h).entries(), &expected) < 1e-15);
        let hx = to_op2(&((pauli_x() + pauli_z()) * C64::new(1.0 / 2f64.sqrt(), 0.0))).unwrap();
        assert!(max_diff4(unitary_chi(&hx).entries(), &expected) < 1e-15);
    }

    #[test]
    fn random_chi_round_trip() {
        // Random Kraus pairs give valid chi matrices.
        for seed in 0..5u64 {
            let r = |k: u64| crate::rng::uniform_at(seed, 1, k) * 2.0 - 1.0;
            let a = rotation2(r(0) * PI, r(1) * PI) * C64::new(0.8, 0.0);
            let b = Op2::new(C64::new(r(2), r(3)), C64::new(r(4), r(5)), C64::new(r(6), r(7)), C64::new(r(8), r(9)));
            let chi = ChiMatrix(unitary_chi(&a).0 + unitary_chi(&b).0 * C64::new(0.1, 0.0));
            let samples = ChannelSamples {
                outputs: input_states().map(|rho| chi.apply(&rho)),
            };
            assert!(max_diff4(chi_reconstruct(&samples).entries(), chi.entries()) < 1e-10);
        }
    }

    #[test]
    fn fidelity_properties() {
        let x = pauli_x();
        let id = crate::linalg::identity(2);
        assert!(gate_fidelity(&id, &x).unwrap().abs() < 1e-12);
        for k in 0..=24 {
            let theta = k as f64 * PI / 6.0 - 2.0 * PI;
            let rz = to_dynamic(&crate::linalg::z_phase(theta));
            let f = gate_fidelity(&id, &rz).unwrap();
            assert!((f - (theta / 2.0).cos().abs()).abs() < 1e-12);
        }
        let a = to_dynamic(&rotation2(0.3, 1.1));
        let b = to_dynamic(&rotation2(1.7, -0.4));
        let f = gate_fidelity(&a, &b).unwrap();
        assert!((f - gate_fidelity(&b, &a).unwrap()).abs() < 1e-15);
        assert!((f - gate_fidelity(&(&a * C64::from_polar(1.0, 2.1)), &b).unwrap()).abs() < 1e-12);
        assert!((f - gate_fidelity(&(&a * C64::new(3.5, 0.0)), &b).unwrap()).abs() < 1e-12);
        assert!(matches!(gate_fidelity(&Operator::zeros(2, 2), &a), Err(Error::ZeroNorm)));
        assert!(gate_fidelity(&a, &crate::linalg::identity(4)).is_err());
    }

    #[test]
    fn full_dephasing_scores_inverse_root_two() {
        let dephased = ChannelSamples {
            outputs: input_states().map(|rho| Op2::new(rho[(0, 0)], ZERO, ZERO, rho[(1, 1)])),
        };
        let chi = chi_reconstruct(&dephased);
        let f = chi_fidelity(&chi, &ideal_chi(&crate::linalg::identity(2)).unwrap()).unwrap();
        assert!((f - 1.0 / 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn noiseless_process_fidelity_matches_propagator() {
        let s = Compiler::default()
            .protected_bb1_gate(&Gate::Pi8.rotations(), &DDKind::Xy8, 1e-5)
            .unwrap();
        let s = crate::compiler::apply_amplitude_error(&s, 0.03).unwrap();
        let est = process_fidelity_with_error(&s, &NoiseModel::None, 1, 0).unwrap();
        assert_eq!(est.stderr, 0.0);
        let u = to_dynamic(&s.propagator());
        let propagator_f = gate_fidelity(&u, &s.target_gate).unwrap();
        // For unitaries, chi overlap is the squared propagator overlap.
        assert!((est.fidelity - propagator_f.powi(2)).abs() < 1e-9);
        let chi = chi_reconstruct(&simulate_channel(&s, &NoiseModel::None, 1, 0).unwrap());
        assert!(chi.min_eigenvalue() > -1e-9);
        assert!((chi.trace() - ONE).norm() < 1e-9);

        // Near F = 1 the two metrics agree directly.
        for g in Gate::ALL {
            let s = Compiler::default().protected_bb1_gate(&g.rotations(), &DDKind::kdd(), 3e-6).unwrap();
            let f_chi = process_fidelity(&s, &NoiseModel::None, 1, 0).unwrap();
            let f_u = gate_fidelity(&to_dynamic(&s.propagator()), &s.target_gate).unwrap();
            assert!((f_chi - f_u).abs() < 1e-6, "{g}");
        }
    }

    #[test]
    fn long_noop_under_fast_dephasing_loses_coherence() {
        let s = Compiler::default().repeated_cycles(&DDKind::Xy4, 1e-3, 5).unwrap();
        let noise = NoiseModel::Classical(ClassicalDephasing {
            ou: Some(OUNoiseSpec::new(2e4, 1e-5)),
            static_sigma: 0.0,
        });
        let c = simulate_channel(&s, &noise, 10_000, 3).unwrap();
        let mixed = Op2::identity() * C64::new(0.5, 0.0);
        assert!((c.outputs[2] - mixed).iter().all(|z| z.norm() < 0.02));
        c.validate(1e-9).unwrap();
    }

    #[test]
    fn monte_carlo_residual_shrinks() {
        let s = Compiler::default().protected_rotation(&RotationSpec::x(PI), &DDKind::Xy4, 1e-4).unwrap();
        let noise = NoiseModel::Classical(ClassicalDephasing {
            ou: Some(OUNoiseSpec::new(3000.0, 1e-4)),
            static_sigma: 2000.0,
        });
        let few = chi_reconstruct(&simulate_channel(&s, &noise, 100, 7).unwrap());
        let many = chi_reconstruct(&simulate_channel(&s, &noise, 10_000, 7).unwrap());
        assert!(many.trace_preservation_residual() <= few.trace_preservation_residual() + 1e-12);
        assert!(many.trace_preservation_residual() < 0.05);
    }

    #[test]
    fn chi_record_round_trip() {
        let chi = unitary_chi(&rotation2(0.4, 2.0));
        let rec = chi.to_record("r");
        let text = serde_json::to_string(&rec).unwrap();
        let back = ChiMatrix::from_record(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back, chi);
    }
}
