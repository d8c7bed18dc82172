//! Flat JSON form of a schedule: a header plus one record per event.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DDKind, EventKind, PulseEvent, RotationSpec, Schedule};
use crate::error::{invalid, Error, Result};
use crate::linalg::{Operator, C64};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleHeader {
    pub label: String,
    pub dd_kind: Option<DDKind>,
    pub tau_s: Option<f64>,
    pub pulse_count: usize,
    pub cycle_time_s: f64,
    pub duration_s: f64,
    /// Row-major `[re, im]` pairs of the 2×2 target.
    pub target_gate: [f64; 8],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub index: usize,
    pub kind: EventKind,
    pub duration_s: f64,
    pub phase_rad: Option<f64>,
    pub angle_rad: Option<f64>,
    pub amplitude_scale: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleRecord {
    pub header: ScheduleHeader,
    pub events: Vec<EventRecord>,
}

impl From<&Schedule> for ScheduleRecord {
    fn from(s: &Schedule) -> Self {
        let mut target = [0.0; 8];
        for (k, z) in s.target_gate.transpose().iter().enumerate().take(4) {
            target[2 * k] = z.re;
            target[2 * k + 1] = z.im;
        }
        let events = s
            .events
            .iter()
            .enumerate()
            .map(|(index, e)| EventRecord {
                index,
                kind: e.kind,
                duration_s: e.duration,
                phase_rad: e.rotation.map(|r| r.phase),
                angle_rad: e.rotation.map(|r| r.angle),
                amplitude_scale: e.amplitude_scale,
            })
            .collect();
        Self {
            header: ScheduleHeader {
                label: s.label.clone(),
                dd_kind: s.dd_kind,
                tau_s: s.tau,
                pulse_count: s.pulse_count(),
                cycle_time_s: s.cycle_time,
                duration_s: s.duration(),
                target_gate: target,
            },
            events,
        }
    }
}

impl TryFrom<ScheduleRecord> for Schedule {
    type Error = Error;

    fn try_from(rec: ScheduleRecord) -> Result<Self> {
        let t = rec.header.target_gate;
        let target_gate = Operator::from_row_slice(
            2,
            2,
            &[
                C64::new(t[0], t[1]),
                C64::new(t[2], t[3]),
                C64::new(t[4], t[5]),
                C64::new(t[6], t[7]),
            ],
        );
        let mut events = Vec::with_capacity(rec.events.len());
        for (i, e) in rec.events.into_iter().enumerate() {
            if e.index != i {
                return Err(invalid(format!("event index {} out of order at position {i}", e.index)));
            }
            let rotation = match (e.phase_rad, e.angle_rad) {
                (Some(phase), Some(angle)) => Some(RotationSpec { phase, angle }),
                (None, None) => None,
                _ => return Err(invalid(format!("event {i} has only one of phase/angle"))),
            };
            events.push(PulseEvent {
                kind: e.kind,
                duration: e.duration_s,
                rotation,
                amplitude_scale: e.amplitude_scale,
            });
        }
        let s = Schedule {
            events,
            cycle_time: rec.header.cycle_time_s,
            target_gate,
            label: rec.header.label,
            dd_kind: rec.header.dd_kind,
            tau: rec.header.tau_s,
        };
        s.validate()?;
        if s.pulse_count() != rec.header.pulse_count {
            return Err(invalid(format!(
                "header pulse_count {} disagrees with {} pulse events",
                rec.header.pulse_count,
                s.pulse_count()
            )));
        }
        Ok(s)
    }
}

impl Schedule {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(&ScheduleRecord::from(self)).map_err(|source| Error::Json {
            context: format!("serializing schedule {}", self.label),
            source,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let rec: ScheduleRecord = serde_json::from_str(text).map_err(|source| Error::Json {
            context: "parsing schedule".into(),
            source,
        })?;
        rec.try_into()
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let mut text = self.to_json()?;
        text.push('\n');
        std::fs::write(path, text).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }
}
