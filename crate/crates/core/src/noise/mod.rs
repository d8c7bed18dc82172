//! Dephasing environments: a quantum spin bath coupled through `S_z I_z^k`,
//! and a classical Ornstein–Uhlenbeck surrogate calibrated to decay times.

mod bath;
mod calibrate;
mod decay;
mod ou;

use serde::{Deserialize, Serialize};

pub use bath::{build_bath_hamiltonians, BathHamiltonians, SpinBathSpec};
pub use calibrate::{
    calibrate_to_targets, calibrate_with, CalibrationOptions, CalibrationResult, CALIBRATION_TOLERANCE,
};
pub use decay::{decay_time, fid_decay_curve, hahn_decay_curve, DecayCurve};
pub use ou::{sample_ou_trajectory, ClassicalDephasing, DephasingRealization, NoiseTrajectory, OUNoiseSpec};

/// Environment acting on the qubit during a schedule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseModel {
    None,
    SpinBath(SpinBathSpec),
    Classical(ClassicalDephasing),
}

impl NoiseModel {
    pub fn validate(&self) -> crate::Result<()> {
        match self {
            NoiseModel::None => Ok(()),
            NoiseModel::SpinBath(spec) => spec.validate(),
            NoiseModel::Classical(model) => model.validate(),
        }
    }
}
