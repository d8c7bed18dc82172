use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::RotationSpec;
use crate::error::{Error, Result};
use crate::linalg::{Operator, C64};

/// Named single-qubit gates with in-plane rotation decompositions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Gate {
    #[serde(rename = "H")]
    H,
    #[serde(rename = "NOT")]
    Not,
    #[serde(rename = "PI8")]
    Pi8,
    #[serde(rename = "NOOP")]
    Noop,
}

impl Gate {
    pub const ALL: [Gate; 4] = [Gate::H, Gate::Not, Gate::Pi8, Gate::Noop];

    pub fn name(self) -> &'static str {
        match self {
            Gate::H => "H",
            Gate::Not => "NOT",
            Gate::Pi8 => "PI8",
            Gate::Noop => "NOOP",
        }
    }

    /// Textbook matrix of the gate (phase conventions of the usual circuit
    /// model; compiled products may differ by a global phase).
    pub fn ideal_unitary(self) -> Operator {
        let r = C64::new(1.0 / 2f64.sqrt(), 0.0);
        let z = C64::new(0.0, 0.0);
        let one = C64::new(1.0, 0.0);
        match self {
            Gate::H => Operator::from_row_slice(2, 2, &[r, r, r, -r]),
            Gate::Not => Operator::from_row_slice(2, 2, &[z, one, one, z]),
            Gate::Pi8 => Operator::from_row_slice(
                2,
                2,
                &[C64::from_polar(1.0, -PI / 8.0), z, z, C64::from_polar(1.0, PI / 8.0)],
            ),
            Gate::Noop => Operator::identity(2, 2),
        }
    }

    pub fn rotations(self) -> Vec<RotationSpec> {
        decompose_gate(self)
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Gate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "H" | "HADAMARD" => Ok(Gate::H),
            "NOT" | "X" => Ok(Gate::Not),
            "PI8" | "T" => Ok(Gate::Pi8),
            "NOOP" | "I" | "IDENTITY" => Ok(Gate::Noop),
            _ => Err(Error::UnknownGate(s.to_string())),
        }
    }
}

/// In-plane rotations realizing `gate`, earliest first.
///
/// The table strings `R_x(π) R_y(π/2)` and `R_x(π/2) R_y(π/4) R_x(−π/2)` are
/// operator products, so the rightmost factor executes first.
pub fn decompose_gate(gate: Gate) -> Vec<RotationSpec> {
    match gate {
        Gate::H => vec![RotationSpec::y(PI / 2.0), RotationSpec::x(PI)],
        Gate::Not => vec![RotationSpec::x(PI)],
        Gate::Pi8 => vec![
            RotationSpec::x(-PI / 2.0),
            RotationSpec::y(PI / 4.0),
            RotationSpec::x(PI / 2.0),
        ],
        Gate::Noop => Vec::new(),
    }
}

pub fn decompose_gate_named(name: &str) -> Result<Vec<RotationSpec>> {
    Ok(decompose_gate(name.parse()?))
}
