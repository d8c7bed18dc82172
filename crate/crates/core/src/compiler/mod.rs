//! Gate → composite pulse → decoupled schedule compilation.
//!
//! A protected rotation splits `R_φ(θ)` into two weak half-rotations that
//! occupy the first and last half-delays of a DD cycle. A protected gate
//! expands each of its rotations into BB1's five components and protects
//! every component separately.

mod gates;
mod io;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

pub use gates::{decompose_gate, decompose_gate_named, Gate};
pub use io::{EventRecord, ScheduleHeader, ScheduleRecord};

use crate::error::{invalid, Error, Result};
use crate::linalg::{rotation2, to_dynamic, Op2, Operator};
use crate::tomography::gate_fidelity;

/// Compiled schedules must reproduce their target at least this well.
pub const VERIFY_TOLERANCE: f64 = 1e-9;

/// Default KDD phases relative to the skeleton pulse phase.
pub const KDD_PHASES: [f64; 5] = [PI / 6.0, 0.0, PI / 2.0, 0.0, PI / 6.0];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RotationSpec {
    /// Azimuth of the in-plane rotation axis, radians.
    pub phase: f64,
    /// Signed rotation angle, radians.
    pub angle: f64,
}

impl RotationSpec {
    pub fn new(phase: f64, angle: f64) -> Result<Self> {
        let r = Self { phase, angle };
        r.validate()?;
        Ok(r)
    }

    pub fn x(angle: f64) -> Self {
        Self { phase: 0.0, angle }
    }

    pub fn y(angle: f64) -> Self {
        Self {
            phase: PI / 2.0,
            angle,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.phase.is_finite() || !self.angle.is_finite() {
            return Err(invalid("rotation phase and angle must be finite"));
        }
        if !(self.angle > -4.0 * PI && self.angle <= 4.0 * PI) {
            return Err(invalid(format!("rotation angle {} outside (-4π, 4π]", self.angle)));
        }
        Ok(())
    }

    pub fn unitary(&self) -> Op2 {
        rotation2(self.phase, self.angle)
    }
}

/// Time-ordered product of ideal rotations.
pub fn rotation_product(rotations: &[RotationSpec]) -> Op2 {
    rotations.iter().fold(Op2::identity(), |u, r| r.unitary() * u)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Delay,
    HardPulse,
    SoftGateHalf,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseEvent {
    pub kind: EventKind,
    pub duration: f64,
    pub rotation: Option<RotationSpec>,
    /// Realized/nominal control amplitude, `1 + ε`.
    pub amplitude_scale: f64,
}

impl PulseEvent {
    pub fn delay(duration: f64) -> Self {
        Self {
            kind: EventKind::Delay,
            duration,
            rotation: None,
            amplitude_scale: 1.0,
        }
    }

    pub fn hard(rotation: RotationSpec, duration: f64) -> Self {
        Self {
            kind: EventKind::HardPulse,
            duration,
            rotation: Some(rotation),
            amplitude_scale: 1.0,
        }
    }

    pub fn soft_half(rotation: RotationSpec, duration: f64) -> Self {
        Self {
            kind: EventKind::SoftGateHalf,
            duration,
            rotation: Some(rotation),
            amplitude_scale: 1.0,
        }
    }

    pub fn is_pulse(&self) -> bool {
        self.kind != EventKind::Delay
    }

    /// Rotation actually applied, including the amplitude scale.
    pub fn realized_rotation(&self) -> Option<RotationSpec> {
        self.rotation.map(|r| RotationSpec {
            phase: r.phase,
            angle: r.angle * self.amplitude_scale,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration >= 0.0 && self.duration.is_finite()) {
            return Err(invalid(format!("event duration {} must be finite and >= 0", self.duration)));
        }
        if !self.amplitude_scale.is_finite() {
            return Err(invalid("amplitude scale must be finite"));
        }
        match (self.kind, self.rotation) {
            (EventKind::Delay, None) => Ok(()),
            (EventKind::Delay, Some(_)) => Err(invalid("delays carry no rotation")),
            (_, None) => Err(invalid("pulses need a rotation")),
            (EventKind::SoftGateHalf, Some(_)) if self.duration <= 0.0 => {
                Err(invalid("soft gate halves need a positive duration"))
            }
            (_, Some(r)) => r.validate(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "lowercase")]
pub enum DDKind {
    Xy4,
    Xy8,
    Kdd { phases: [f64; 5] },
    /// Asymmetric `[τ X τ Y]×2` timing; no half-delays, so no protected gates.
    Pdd,
}

impl DDKind {
    pub fn kdd() -> Self {
        DDKind::Kdd { phases: KDD_PHASES }
    }

    pub fn name(&self) -> &'static str {
        match self {
            DDKind::Xy4 => "xy4",
            DDKind::Xy8 => "xy8",
            DDKind::Kdd { .. } => "kdd",
            DDKind::Pdd => "pdd",
        }
    }

    /// Phases of the cycle's π pulses, in order.
    pub fn pulse_phases(&self) -> Vec<f64> {
        let xy4 = [0.0, PI / 2.0, 0.0, PI / 2.0];
        match self {
            DDKind::Xy4 | DDKind::Pdd => xy4.to_vec(),
            DDKind::Xy8 => xy4.iter().chain(xy4.iter().rev()).copied().collect(),
            DDKind::Kdd { phases } => xy4
                .iter()
                .flat_map(|&skeleton| phases.iter().map(move |&chi| skeleton + chi))
                .collect(),
        }
    }

    pub fn cycle_pulses(&self) -> usize {
        match self {
            DDKind::Xy4 | DDKind::Pdd => 4,
            DDKind::Xy8 => 8,
            DDKind::Kdd { .. } => 20,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Schedule {
    pub events: Vec<PulseEvent>,
    /// Duration of one DD cycle (zero for schedules without decoupling).
    pub cycle_time: f64,
    pub target_gate: Operator,
    pub label: String,
    pub dd_kind: Option<DDKind>,
    pub tau: Option<f64>,
}

impl Schedule {
    pub fn duration(&self) -> f64 {
        self.events.iter().fold(0.0, |acc, e| acc + e.duration)
    }

    pub fn pulse_count(&self) -> usize {
        self.events.iter().filter(|e| e.is_pulse()).count()
    }

    /// Noise-free propagator, honoring amplitude scales.
    pub fn propagator(&self) -> Op2 {
        self.events
            .iter()
            .filter_map(PulseEvent::realized_rotation)
            .fold(Op2::identity(), |u, r| r.unitary() * u)
    }

    fn nominal_propagator(&self) -> Op2 {
        self.events
            .iter()
            .filter_map(|e| e.rotation)
            .fold(Op2::identity(), |u, r| r.unitary() * u)
    }

    pub fn validate(&self) -> Result<()> {
        self.events.iter().try_for_each(PulseEvent::validate)?;
        if self.target_gate.nrows() != 2 || self.target_gate.ncols() != 2 {
            return Err(invalid("target gate must be 2×2"));
        }
        Ok(())
    }

    fn concat(label: String, dd_kind: Option<DDKind>, tau: Option<f64>, parts: Vec<Schedule>, target: Operator) -> Self {
        let cycle_time = parts.first().map_or(0.0, |p| p.cycle_time);
        Self {
            events: parts.into_iter().flat_map(|p| p.events).collect(),
            cycle_time,
            target_gate: target,
            label,
            dd_kind,
            tau,
        }
    }
}

/// Zero-noise, zero-amplitude-error fidelity of `s` against its target.
pub fn verify_schedule(s: &Schedule) -> f64 {
    gate_fidelity(&to_dynamic(&s.nominal_propagator()), &s.target_gate).unwrap_or(0.0)
}

fn verified(s: Schedule) -> Result<Schedule> {
    s.validate()?;
    let fidelity = verify_schedule(&s);
    if fidelity < 1.0 - VERIFY_TOLERANCE {
        return Err(Error::VerificationFailed {
            label: s.label,
            fidelity,
        });
    }
    Ok(s)
}

/// BB1: `[R_φ(θ/2), R_{φ+ψ}(π), R_{φ+3ψ}(2π), R_{φ+ψ}(π), R_φ(θ/2)]` in
/// execution order with `cos ψ = −θ/(4π)`.
pub fn bb1_expand(r: &RotationSpec) -> Result<[RotationSpec; 5]> {
    if !r.angle.is_finite() || r.angle.abs() > 4.0 * PI {
        return Err(invalid(format!("BB1 needs |θ| <= 4π, got {}", r.angle)));
    }
    let psi = bb1_phase(r.angle);
    let (phi, theta) = (r.phase, r.angle);
    Ok([
        RotationSpec { phase: phi, angle: theta / 2.0 },
        RotationSpec { phase: phi + psi, angle: PI },
        RotationSpec { phase: phi + 3.0 * psi, angle: 2.0 * PI },
        RotationSpec { phase: phi + psi, angle: PI },
        RotationSpec { phase: phi, angle: theta / 2.0 },
    ])
}

pub fn bb1_phase(angle: f64) -> f64 {
    (-angle / (4.0 * PI)).acos()
}

/// Multiplies every pulse amplitude by `1 + epsilon`.
pub fn apply_amplitude_error(s: &Schedule, epsilon: f64) -> Result<Schedule> {
    if !(epsilon.abs() < 0.5) {
        return Err(invalid(format!("amplitude error must satisfy |ε| < 0.5, got {epsilon}")));
    }
    let mut out = s.clone();
    for e in out.events.iter_mut().filter(|e| e.is_pulse()) {
        e.amplitude_scale *= 1.0 + epsilon;
    }
    Ok(out)
}

/// Non-delay events, composite components counted individually.
pub fn pulse_count(s: &Schedule) -> usize {
    s.pulse_count()
}

/// Schedule builder. `pulse_duration` is the width of every hard pulse;
/// zero gives the ideal instantaneous limit.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Compiler {
    pub pulse_duration: f64,
}

impl Compiler {
    pub fn with_pulse_duration(pulse_duration: f64) -> Result<Self> {
        if !(pulse_duration >= 0.0 && pulse_duration.is_finite()) {
            return Err(invalid(format!("pulse duration must be >= 0, got {pulse_duration}")));
        }
        Ok(Self { pulse_duration })
    }

    fn check_tau(tau: f64) -> Result<()> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(invalid(format!("τ must be > 0, got {tau}")));
        }
        Ok(())
    }

    fn cycle_events(&self, kind: &DDKind, tau: f64, head: PulseEvent, tail: PulseEvent) -> Vec<PulseEvent> {
        let pulses: Vec<PulseEvent> = kind
            .pulse_phases()
            .into_iter()
            .map(|phase| PulseEvent::hard(RotationSpec { phase, angle: PI }, self.pulse_duration))
            .collect();
        let mut events = Vec::with_capacity(2 * pulses.len() + 1);
        if let DDKind::Pdd = kind {
            for p in pulses {
                events.push(PulseEvent::delay(tau));
                events.push(p);
            }
            return events;
        }
        events.push(head);
        let last = pulses.len() - 1;
        for (i, p) in pulses.into_iter().enumerate() {
            events.push(p);
            if i < last {
                events.push(PulseEvent::delay(tau));
            }
        }
        events.push(tail);
        events
    }

    fn cycle_time(&self, kind: &DDKind, tau: f64) -> f64 {
        kind.cycle_pulses() as f64 * (tau + self.pulse_duration)
    }

    /// One bare DD cycle with symmetric half-delays (identity target).
    pub fn dd_cycle(&self, kind: &DDKind, tau: f64) -> Result<Schedule> {
        Self::check_tau(tau)?;
        let half = PulseEvent::delay(tau / 2.0);
        verified(Schedule {
            events: self.cycle_events(kind, tau, half, half),
            cycle_time: self.cycle_time(kind, tau),
            target_gate: Operator::identity(2, 2),
            label: format!("dd:{}", kind.name()),
            dd_kind: Some(*kind),
            tau: Some(tau),
        })
    }

    /// `R_φ(θ)` split into two weak halves filling the cycle's outer half-delays.
    pub fn protected_rotation(&self, r: &RotationSpec, kind: &DDKind, tau: f64) -> Result<Schedule> {
        r.validate()?;
        Self::check_tau(tau)?;
        let label = format!("protected:R({:.6},{:.6}):{}", r.phase, r.angle, kind.name());
        if r.angle == 0.0 {
            let mut s = self.dd_cycle(kind, tau)?;
            s.label = label;
            return Ok(s);
        }
        if let DDKind::Pdd = kind {
            return Err(invalid("protected rotations need a cycle with symmetric half-delays"));
        }
        let half = PulseEvent::soft_half(
            RotationSpec {
                phase: r.phase,
                angle: r.angle / 2.0,
            },
            tau / 2.0,
        );
        verified(Schedule {
            events: self.cycle_events(kind, tau, half, half),
            cycle_time: self.cycle_time(kind, tau),
            target_gate: to_dynamic(&r.unitary()),
            label,
            dd_kind: Some(*kind),
            tau: Some(tau),
        })
    }

    /// BB1 outside, DD inside: every BB1 component of every gate rotation
    /// becomes a protected rotation.
    pub fn protected_bb1_gate(&self, rotations: &[RotationSpec], kind: &DDKind, tau: f64) -> Result<Schedule> {
        let mut parts = Vec::with_capacity(5 * rotations.len());
        for r in rotations {
            for component in bb1_expand(r)? {
                parts.push(self.protected_rotation(&component, kind, tau)?);
            }
        }
        let target = to_dynamic(&rotation_product(rotations));
        verified(Schedule::concat(
            format!("bb1+{}", kind.name()),
            Some(*kind),
            Some(tau),
            parts,
            target,
        ))
    }

    /// `cycles` back-to-back bare DD cycles.
    pub fn repeated_cycles(&self, kind: &DDKind, tau: f64, cycles: usize) -> Result<Schedule> {
        let cycle = self.dd_cycle(kind, tau)?;
        let parts = vec![cycle; cycles];
        verified(Schedule::concat(
            format!("{}x{}", kind.name(), cycles),
            Some(*kind),
            Some(tau),
            parts,
            Operator::identity(2, 2),
        ))
    }

    /// One hard pulse per rotation, no decoupling.
    pub fn simple_gate(&self, rotations: &[RotationSpec]) -> Result<Schedule> {
        verified(Schedule {
            events: rotations.iter().map(|r| PulseEvent::hard(*r, self.pulse_duration)).collect(),
            cycle_time: 0.0,
            target_gate: to_dynamic(&rotation_product(rotations)),
            label: "simple".into(),
            dd_kind: None,
            tau: None,
        })
    }

    /// BB1 composite pulses back to back, no decoupling.
    pub fn bb1_gate(&self, rotations: &[RotationSpec]) -> Result<Schedule> {
        let mut events = Vec::with_capacity(5 * rotations.len());
        for r in rotations {
            events.extend(bb1_expand(r)?.iter().map(|c| PulseEvent::hard(*c, self.pulse_duration)));
        }
        verified(Schedule {
            events,
            cycle_time: 0.0,
            target_gate: to_dynamic(&rotation_product(rotations)),
            label: "bb1".into(),
            dd_kind: None,
            tau: None,
        })
    }
}
