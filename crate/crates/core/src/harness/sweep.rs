use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{resolve_noise, ExperimentConfig, Scheme};
use crate::compiler::{apply_amplitude_error, Compiler, DDKind, Gate, PulseEvent, Schedule};
use crate::error::{invalid, Result};
use crate::noise::NoiseModel;
use crate::rng::{derive_seed, hash_str};
use crate::tomography::process_fidelity_with_error;

/// One sweep cell. Failed cells carry NaN numbers and a populated `error`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub gate: String,
    pub scheme: String,
    pub tau_s: f64,
    pub gate_time_s: f64,
    pub pulse_count: usize,
    pub fidelity: f64,
    pub fidelity_stderr: f64,
    pub seed: u64,
    pub error: String,
}

impl ResultRow {
    pub fn is_ok(&self) -> bool {
        self.error.is_empty()
    }
}

/// Gate, total duration (s) and fidelity of the XY-8 table rows.
pub const TABLE1_TARGETS: [(Gate, f64, f64); 3] =
    [(Gate::H, 1.6e-3, 0.985), (Gate::Not, 0.6e-3, 0.995), (Gate::Pi8, 2.2e-3, 0.955)];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table1Row {
    pub gate: String,
    pub scheme: String,
    pub tau_s: f64,
    pub gate_time_s: f64,
    pub pulse_count: usize,
    pub fidelity: f64,
    pub fidelity_stderr: f64,
    pub reference_gate_time_s: f64,
    pub reference_fidelity: f64,
    pub seed: u64,
    pub error: String,
}

fn compiler(cfg: &ExperimentConfig) -> Result<Compiler> {
    Compiler::with_pulse_duration(cfg.pulse_duration)
}

/// Compiled schedule of one cell, amplitude error applied.
pub fn build_schedule(gate: Gate, scheme: Scheme, tau: f64, cfg: &ExperimentConfig) -> Result<Schedule> {
    let c = compiler(cfg)?;
    let rotations = gate.rotations();
    let mut s = match scheme {
        Scheme::Simple => c.simple_gate(&rotations)?,
        Scheme::SimplePadded => {
            let mut s = c.simple_gate(&rotations)?;
            let protected = build_protected(&c, gate, &DDKind::Xy8, tau, cfg)?;
            let pad = protected.duration() - s.duration();
            if pad > 0.0 {
                s.events.push(PulseEvent::delay(pad));
            }
            s.label = "simple_padded".into();
            s.tau = Some(tau);
            s
        }
        Scheme::Bb1 => c.bb1_gate(&rotations)?,
        _ => {
            let kind = scheme.dd_kind(cfg.kdd_phases).expect("protected scheme");
            build_protected(&c, gate, &kind, tau, cfg)?
        }
    };
    s.target_gate = gate.ideal_unitary();
    s.label = format!("{}:{}", gate.name(), s.label);
    apply_amplitude_error(&s, cfg.epsilon)
}

fn build_protected(c: &Compiler, gate: Gate, kind: &DDKind, tau: f64, cfg: &ExperimentConfig) -> Result<Schedule> {
    if gate == Gate::Noop {
        c.repeated_cycles(kind, tau, cfg.noop_cycles)
    } else {
        c.protected_bb1_gate(&gate.rotations(), kind, tau)
    }
}

/// Closed-form pulse count of a cell.
pub fn expected_pulse_count(gate: Gate, scheme: Scheme, cfg: &ExperimentConfig) -> usize {
    let rotations = gate.rotations().len();
    match scheme.dd_kind(cfg.kdd_phases) {
        None if scheme == Scheme::Bb1 => rotations * 5,
        None => rotations,
        Some(kind) if gate == Gate::Noop => cfg.noop_cycles * kind.cycle_pulses(),
        Some(kind) => rotations * 5 * (kind.cycle_pulses() + 2),
    }
}

/// Seed of cell `(gate, scheme, tau_index)`; realization `r` then uses
/// `derive_seed(cell_seed, [r])`.
pub fn cell_seed(root: u64, gate: Gate, scheme: Scheme, tau_index: u64) -> u64 {
    derive_seed(root, &[hash_str(gate.name()), hash_str(scheme.name()), tau_index])
}

fn failed_row(gate: Gate, scheme: Scheme, tau: f64, seed: u64, err: String) -> ResultRow {
    ResultRow {
        gate: gate.name().into(),
        scheme: scheme.name().into(),
        tau_s: tau,
        gate_time_s: f64::NAN,
        pulse_count: 0,
        fidelity: f64::NAN,
        fidelity_stderr: f64::NAN,
        seed,
        error: err,
    }
}

fn score(gate: Gate, scheme: Scheme, tau: f64, key: u64, cfg: &ExperimentConfig, noise: &NoiseModel) -> ResultRow {
    let attempt = || -> Result<ResultRow> {
        let s = build_schedule(gate, scheme, tau, cfg)?;
        let est = process_fidelity_with_error(&s, noise, cfg.realizations, key)?;
        Ok(ResultRow {
            gate: gate.name().into(),
            scheme: scheme.name().into(),
            tau_s: tau,
            gate_time_s: s.duration(),
            pulse_count: s.pulse_count(),
            fidelity: est.fidelity,
            fidelity_stderr: est.stderr,
            seed: cfg.seed,
            error: String::new(),
        })
    };
    attempt().unwrap_or_else(|e| failed_row(gate, scheme, tau, cfg.seed, e.to_string()))
}

/// Scores one cell; never fails, errors become sentinel rows.
pub fn run_cell(gate: Gate, scheme: Scheme, tau: f64, tau_index: usize, cfg: &ExperimentConfig, noise: &NoiseModel) -> ResultRow {
    score(gate, scheme, tau, cell_seed(cfg.seed, gate, scheme, tau_index as u64), cfg, noise)
}

pub fn run_sweep(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let noise = resolve_noise(cfg)?;
    run_sweep_with_noise(cfg, &noise)
}

/// Full `(gate, scheme, τ)` cross product, sorted by gate, scheme and τ.
pub fn run_sweep_with_noise(cfg: &ExperimentConfig, noise: &NoiseModel) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    noise.validate()?;
    let cells: Vec<(Gate, Scheme, usize, f64)> = cfg
        .gates
        .iter()
        .flat_map(|&g| {
            cfg.schemes
                .iter()
                .flat_map(move |&s| cfg.tau_grid.iter().enumerate().map(move |(i, &t)| (g, s, i, t)))
        })
        .collect();
    let mut rows: Vec<ResultRow> = cells
        .into_par_iter()
        .map(|(g, s, i, t)| run_cell(g, s, t, i, cfg, noise))
        .collect();
    rows.sort_by(|a, b| {
        (a.gate.as_str(), a.scheme.as_str())
            .cmp(&(b.gate.as_str(), b.scheme.as_str()))
            .then(a.tau_s.total_cmp(&b.tau_s))
    });
    Ok(rows)
}

/// τ giving a protected gate of total duration `gate_time`.
pub fn table1_tau(gate: Gate, kind: &DDKind, gate_time: f64, pulse_duration: f64) -> Result<f64> {
    let pulses_per_gate = gate.rotations().len() * 5 * kind.cycle_pulses();
    if pulses_per_gate == 0 {
        return Err(invalid(format!("{gate} has no rotations to time")));
    }
    let tau = gate_time / pulses_per_gate as f64 - pulse_duration;
    if !(tau > 0.0) {
        return Err(invalid(format!("gate time {gate_time} too short for {} pulses", pulses_per_gate)));
    }
    Ok(tau)
}

pub fn run_table1(cfg: &ExperimentConfig) -> Result<Vec<Table1Row>> {
    cfg.validate()?;
    let noise = resolve_noise(cfg)?;
    run_table1_with_noise(cfg, &noise)
}

/// Table gates at their listed durations, one row per protected scheme in
/// the config (gates and τ grid of the config are not used).
pub fn run_table1_with_noise(cfg: &ExperimentConfig, noise: &NoiseModel) -> Result<Vec<Table1Row>> {
    let schemes: Vec<Scheme> = cfg.schemes.iter().copied().filter(|s| s.is_protected()).collect();
    if schemes.is_empty() {
        return Err(invalid("table1 needs at least one of xy4, xy8, kdd in schemes"));
    }
    let cells: Vec<(Gate, f64, f64, Scheme)> = TABLE1_TARGETS
        .iter()
        .flat_map(|&(g, t, f)| schemes.iter().map(move |&s| (g, t, f, s)))
        .collect();
    Ok(cells
        .into_par_iter()
        .map(|(gate, gate_time, reference_fidelity, scheme)| {
            let kind = scheme.dd_kind(cfg.kdd_phases).expect("protected scheme");
            let key = derive_seed(cfg.seed, &[hash_str(gate.name()), hash_str(scheme.name()), hash_str("table1")]);
            let row = match table1_tau(gate, &kind, gate_time, cfg.pulse_duration) {
                Ok(tau) => score(gate, scheme, tau, key, cfg, noise),
                Err(e) => failed_row(gate, scheme, f64::NAN, cfg.seed, e.to_string()),
            };
            Table1Row {
                gate: row.gate,
                scheme: row.scheme,
                tau_s: row.tau_s,
                gate_time_s: row.gate_time_s,
                pulse_count: row.pulse_count,
                fidelity: row.fidelity,
                fidelity_stderr: row.fidelity_stderr,
                reference_gate_time_s: gate_time,
                reference_fidelity,
                seed: row.seed,
                error: row.error,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compiler::verify_schedule;
    use crate::harness::NoiseConfig;

    fn cfg() -> ExperimentConfig {
        let mut c = ExperimentConfig::new(NoiseConfig::None, Gate::ALL.to_vec(), Scheme::ALL.to_vec(), vec![3e-6, 3e-5]);
        c.epsilon = 0.0;
        c.realizations = 1;
        c
    }

    #[test]
    fn pulse_counts_follow_formula() {
        let c = cfg();
        for g in Gate::ALL {
            for s in Scheme::ALL {
                let sched = build_schedule(g, s, 1e-5, &c).unwrap();
                assert_eq!(sched.pulse_count(), expected_pulse_count(g, s, &c), "{g} {s}");
                assert!(verify_schedule(&sched) >= 1.0 - 1e-9, "{g} {s}");
            }
        }
        assert_eq!(expected_pulse_count(Gate::Pi8, Scheme::Kdd, &c), 330);
        assert_eq!(expected_pulse_count(Gate::Noop, Scheme::Xy8, &c), 40);
    }

    #[test]
    fn padded_simple_matches_xy8_duration() {
        let c = cfg();
        for g in Gate::ALL {
            let padded = build_schedule(g, Scheme::SimplePadded, 2e-5, &c).unwrap();
            let xy8 = build_schedule(g, Scheme::Xy8, 2e-5, &c).unwrap();
            assert!((padded.duration() - xy8.duration()).abs() < 1e-15);
        }
    }

    #[test]
    fn noiseless_sweep_is_perfect_and_sorted() {
        let rows = run_sweep_with_noise(&cfg(), &NoiseModel::None).unwrap();
        assert_eq!(rows.len(), 4 * 6 * 2);
        assert!(rows.iter().all(|r| r.is_ok() && r.fidelity >= 1.0 - 1e-6));
        let keys: Vec<(String, String, f64)> = rows.iter().map(|r| (r.gate.clone(), r.scheme.clone(), r.tau_s)).collect();
        let mut sorted = keys.clone();
        sorted.sort_by(|a, b| (&a.0, &a.1).cmp(&(&b.0, &b.1)).then(a.2.total_cmp(&b.2)));
        assert_eq!(keys, sorted);
    }

    #[test]
    fn failures_become_sentinel_rows() {
        let mut c = cfg();
        c.gates = vec![Gate::H];
        c.schemes = vec![Scheme::Xy4];
        c.tau_grid = vec![1e-5];
        let bad = NoiseModel::Classical(crate::noise::ClassicalDephasing {
            ou: None,
            static_sigma: 1.0,
        });
        let mut c2 = c.clone();
        c2.pulse_duration = -1.0;
        let row = run_cell(Gate::H, Scheme::Xy4, 1e-5, 0, &c2, &bad);
        assert!(!row.is_ok() && row.fidelity.is_nan());
        assert!(run_cell(Gate::H, Scheme::Xy4, 1e-5, 0, &c, &bad).is_ok());
    }

    #[test]
    fn table1_timing() {
        let c = cfg();
        let tau = table1_tau(Gate::H, &DDKind::Xy8, 1.6e-3, 0.0).unwrap();
        assert!((tau - 2e-5).abs() < 1e-18);
        let mut c = c;
        c.schemes = vec![Scheme::Xy8];
        let rows = run_table1_with_noise(&c, &NoiseModel::None).unwrap();
        assert_eq!(rows.len(), 3);
        for r in &rows {
            assert!((r.gate_time_s - r.reference_gate_time_s).abs() < 1e-12, "{r:?}");
            assert!(r.fidelity > 1.0 - 1e-9);
        }
        c.schemes = vec![Scheme::Simple];
        assert!(run_table1_with_noise(&c, &NoiseModel::None).is_err());
    }
}
