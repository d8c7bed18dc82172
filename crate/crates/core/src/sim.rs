//! Schedule propagation under the noise models.
//!
//! Classical dephasing stays on the qubit: delays are exact `S_z` phase
//! accumulations of the sampled detuning, and finite-duration pulses are cut
//! into pieces no longer than the trajectory step with the detuning held at
//! each piece's midpoint. A quantum bath is propagated exactly on the joint
//! space, each distinct event exponentiated once.

use std::collections::HashMap;
use std::sync::Mutex;

use rayon::prelude::*;

use crate::compiler::{PulseEvent, Schedule};
use crate::error::Result;
use crate::linalg::{self, z_phase, DensityMatrix, HermitianPropagator, Op2, Operator, C64};
use crate::noise::{build_bath_hamiltonians, ClassicalDephasing, DephasingRealization, NoiseModel, SpinBathSpec};
use crate::rng::derive_seed;

/// Trajectory resolution needed to resolve every timed event of `s`: half
/// the shortest positive event duration.
pub fn resolution_step(s: &Schedule) -> Option<f64> {
    s.events
        .iter()
        .map(|e| e.duration)
        .filter(|&d| d > 0.0)
        .min_by(f64::total_cmp)
        .map(|d| d / 2.0)
}

/// Qubit propagator of `s` for one dephasing history.
pub fn classical_propagator(s: &Schedule, noise: &DephasingRealization) -> Op2 {
    let step = noise.step();
    let mut t = 0.0;
    let mut u = Op2::identity();
    for e in &s.events {
        let d = e.duration;
        let piece = match e.realized_rotation() {
            None => z_phase(noise.phase(t, t + d)),
            Some(r) if d == 0.0 => r.unitary(),
            Some(r) => {
                let omega = r.angle / d;
                let (hx, hy) = (omega * r.phase.cos(), omega * r.phase.sin());
                let pieces = step.map_or(1, |h| (d / h).ceil().max(1.0) as usize);
                let h = d / pieces as f64;
                (0..pieces).fold(Op2::identity(), |acc, k| {
                    let mid = t + (k as f64 + 0.5) * h;
                    linalg::su2_propagator(hx, hy, noise.detuning_at(mid), h) * acc
                })
            }
        };
        u = piece * u;
        t += d;
    }
    u
}

/// Realization `r` of `model` over the full schedule, keyed by `derive_seed(seed, [r])`.
pub fn classical_realization(s: &Schedule, model: &ClassicalDephasing, seed: u64, r: usize) -> Result<DephasingRealization> {
    model.realize(s.duration(), derive_seed(seed, &[r as u64]), resolution_step(s))
}

/// Exact joint propagation under a quantum spin bath.
pub struct QuantumBathEngine {
    n_bath: usize,
    drift: Operator,
    drift_propagator: HermitianPropagator,
    sx: Operator,
    sy: Operator,
    cache: Mutex<HashMap<[u64; 4], Operator>>,
}

impl QuantumBathEngine {
    pub fn new(spec: &SpinBathSpec) -> Result<Self> {
        let h = build_bath_hamiltonians(spec)?;
        let n_bath = spec.n_bath();
        let (sx, sy, _) = linalg::spin_half_operators();
        let drift = h.total();
        Ok(Self {
            n_bath,
            drift_propagator: HermitianPropagator::new(&drift)?,
            drift,
            sx: linalg::embed_system(&sx, n_bath)?,
            sy: linalg::embed_system(&sy, n_bath)?,
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn n_bath(&self) -> usize {
        self.n_bath
    }

    pub fn dim(&self) -> usize {
        self.drift.nrows()
    }

    fn event_unitary(&self, e: &PulseEvent) -> Result<Operator> {
        let rot = e.realized_rotation();
        let key = [
            e.duration.to_bits(),
            rot.map_or(u64::MAX, |r| r.phase.to_bits()),
            rot.map_or(u64::MAX, |r| r.angle.to_bits()),
            e.kind as u64,
        ];
        if let Some(u) = self.cache.lock().expect("cache lock").get(&key) {
            return Ok(u.clone());
        }
        let u = match rot {
            None => self.drift_propagator.at(e.duration),
            Some(r) if e.duration == 0.0 => linalg::embed_system(&linalg::rotation_unitary(r.phase, r.angle), self.n_bath)?,
            Some(r) => {
                let omega = r.angle / e.duration;
                let h = &self.drift + (&self.sx * C64::new(omega * r.phase.cos(), 0.0)) + (&self.sy * C64::new(omega * r.phase.sin(), 0.0));
                linalg::hermitian_expm(&h, e.duration)?
            }
        };
        self.cache.lock().expect("cache lock").insert(key, u.clone());
        Ok(u)
    }

    /// Joint system ⊗ bath propagator.
    pub fn propagator(&self, s: &Schedule) -> Result<Operator> {
        let mut u = linalg::identity(self.dim());
        for e in &s.events {
            u = self.event_unitary(e)? * u;
        }
        Ok(u)
    }

    /// Reduced output states for system inputs, bath maximally mixed.
    pub fn outputs(&self, s: &Schedule, inputs: &[Op2]) -> Result<Vec<Op2>> {
        let u = self.propagator(s)?;
        let bath = DensityMatrix::maximally_mixed(1 << self.n_bath);
        inputs
            .iter()
            .map(|rho| {
                let joint = DensityMatrix::from_matrix(linalg::to_dynamic(rho)).tensor(&bath);
                linalg::to_op2(linalg::partial_trace_bath(&joint.conjugate(&u))?.matrix())
            })
            .collect()
    }
}

/// Output states for `inputs`, one entry per noise realization in index
/// order. Deterministic models yield a single entry.
pub fn ensemble_outputs(s: &Schedule, noise: &NoiseModel, inputs: &[Op2], n_realizations: usize, seed: u64) -> Result<Vec<Vec<Op2>>> {
    noise.validate()?;
    s.validate()?;
    let conj = |u: &Op2| -> Vec<Op2> { inputs.iter().map(|rho| u * rho * u.adjoint()).collect() };
    match noise {
        NoiseModel::None => Ok(vec![conj(&s.propagator())]),
        NoiseModel::Classical(model) if model.is_silent() => Ok(vec![conj(&s.propagator())]),
        NoiseModel::Classical(model) => {
            if n_realizations < 1 {
                return Err(crate::error::invalid("n_realizations must be >= 1"));
            }
            (0..n_realizations)
                .into_par_iter()
                .map(|r| Ok(conj(&classical_propagator(s, &classical_realization(s, model, seed, r)?))))
                .collect()
        }
        NoiseModel::SpinBath(spec) => Ok(vec![QuantumBathEngine::new(spec)?.outputs(s, inputs)?]),
    }
}
