use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::compiler::{DDKind, Gate, KDD_PHASES};
use crate::error::{invalid, Error, Result};
use crate::noise::{CalibrationOptions, ClassicalDephasing, NoiseModel, SpinBathSpec};

/// Inter-pulse delays accepted by sweeps, seconds.
pub const TAU_BOUNDS: (f64, f64) = (1e-6, 1e-3);

/// How a gate is realized in a sweep cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Hard pulses back to back.
    Simple,
    /// Hard pulses followed by free evolution up to the XY-8 gate time at the same τ.
    SimplePadded,
    Bb1,
    Xy4,
    Xy8,
    Kdd,
}

impl Scheme {
    pub const ALL: [Scheme; 6] = [
        Scheme::Simple,
        Scheme::SimplePadded,
        Scheme::Bb1,
        Scheme::Xy4,
        Scheme::Xy8,
        Scheme::Kdd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Simple => "simple",
            Scheme::SimplePadded => "simple_padded",
            Scheme::Bb1 => "bb1",
            Scheme::Xy4 => "xy4",
            Scheme::Xy8 => "xy8",
            Scheme::Kdd => "kdd",
        }
    }

    pub fn dd_kind(self, kdd_phases: [f64; 5]) -> Option<DDKind> {
        match self {
            Scheme::Xy4 => Some(DDKind::Xy4),
            Scheme::Xy8 => Some(DDKind::Xy8),
            Scheme::Kdd => Some(DDKind::Kdd { phases: kdd_phases }),
            _ => None,
        }
    }

    pub fn is_protected(self) -> bool {
        matches!(self, Scheme::Xy4 | Scheme::Xy8 | Scheme::Kdd)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let squash = |t: &str| t.to_ascii_lowercase().replace(['-', '_', ' '], "");
        let key = squash(s);
        Scheme::ALL
            .into_iter()
            .find(|k| squash(k.name()) == key)
            .ok_or_else(|| Error::UnknownScheme(s.to_string()))
    }
}

/// Noise source of an experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseConfig {
    None,
    SpinBath(SpinBathSpec),
    Classical(ClassicalDephasing),
    /// Fit the classical model to decay times before running.
    Calibrate { target_t2_star: f64, target_t2_hahn: f64 },
    /// Reuse a calibration artifact written by `calibrate`.
    CalibrationFile { path: PathBuf },
}

impl NoiseConfig {
    /// Reference targets: T2* = 370 µs, T2 = 750 µs.
    pub fn desk_calibration() -> Self {
        NoiseConfig::Calibrate {
            target_t2_star: 370e-6,
            target_t2_hahn: 750e-6,
        }
    }
}

fn default_epsilon() -> f64 {
    0.01
}
fn default_realizations() -> usize {
    1000
}
fn default_noop_cycles() -> usize {
    5
}
fn default_kdd_phases() -> [f64; 5] {
    KDD_PHASES
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub noise: NoiseConfig,
    pub gates: Vec<Gate>,
    pub schemes: Vec<Scheme>,
    /// Inter-pulse delays τ, seconds.
    pub tau_grid: Vec<f64>,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_realizations")]
    pub realizations: usize,
    #[serde(default)]
    pub seed: u64,
    /// DD cycles used to implement NOOP under a DD scheme.
    #[serde(default = "default_noop_cycles")]
    pub noop_cycles: usize,
    /// Width of every hard pulse, seconds (0 = instantaneous).
    #[serde(default)]
    pub pulse_duration: f64,
    #[serde(default = "default_kdd_phases")]
    pub kdd_phases: [f64; 5],
    #[serde(default)]
    pub calibration: CalibrationOptions,
}

impl ExperimentConfig {
    /// Config with defaults for everything but the sweep axes.
    pub fn new(noise: NoiseConfig, gates: Vec<Gate>, schemes: Vec<Scheme>, tau_grid: Vec<f64>) -> Self {
        Self {
            noise,
            gates,
            schemes,
            tau_grid,
            epsilon: default_epsilon(),
            realizations: default_realizations(),
            seed: 0,
            noop_cycles: default_noop_cycles(),
            pulse_duration: 0.0,
            kdd_phases: KDD_PHASES,
            calibration: CalibrationOptions::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|source| Error::Json {
            context: "parsing experiment config".into(),
            source,
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.gates.is_empty() || self.schemes.is_empty() || self.tau_grid.is_empty() {
            return Err(invalid("gates, schemes and tau_grid must be non-empty"));
        }
        if self.realizations < 1 {
            return Err(invalid("realizations must be >= 1"));
        }
        let (lo, hi) = TAU_BOUNDS;
        if let Some(t) = self.tau_grid.iter().find(|&&t| !(t >= lo && t <= hi)) {
            return Err(invalid(format!("tau {t} outside [{lo}, {hi}] s")));
        }
        if !(self.epsilon.abs() < 0.5) {
            return Err(invalid(format!("epsilon must satisfy |ε| < 0.5, got {}", self.epsilon)));
        }
        if self.noop_cycles < 1 {
            return Err(invalid("noop_cycles must be >= 1"));
        }
        if !(self.pulse_duration >= 0.0 && self.pulse_duration.is_finite()) {
            return Err(invalid("pulse_duration must be finite and >= 0"));
        }
        if self.kdd_phases.iter().any(|p| !p.is_finite()) {
            return Err(invalid("kdd_phases must be finite"));
        }
        match &self.noise {
            NoiseConfig::SpinBath(spec) => spec.validate(),
            NoiseConfig::Classical(model) => model.validate(),
            NoiseConfig::Calibrate {
                target_t2_star,
                target_t2_hahn,
            } => {
                if !(*target_t2_star > 0.0 && target_t2_star <= target_t2_hahn && target_t2_hahn.is_finite()) {
                    return Err(invalid("calibration targets must satisfy 0 < T2* <= T2"));
                }
                Ok(())
            }
            NoiseConfig::None | NoiseConfig::CalibrationFile { .. } => Ok(()),
        }
    }

    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        if let Some(s) = seed {
            self.seed = s;
        }
        self
    }

    pub fn with_realizations(mut self, realizations: Option<usize>) -> Self {
        if let Some(r) = realizations {
            self.realizations = r;
        }
        self
    }
}

/// Turns a noise config into a simulatable model, calibrating if asked.
pub fn resolve_noise(cfg: &ExperimentConfig) -> Result<NoiseModel> {
    match &cfg.noise {
        NoiseConfig::None => Ok(NoiseModel::None),
        NoiseConfig::SpinBath(spec) => Ok(NoiseModel::SpinBath(spec.clone())),
        NoiseConfig::Classical(model) => Ok(NoiseModel::Classical(*model)),
        NoiseConfig::Calibrate { .. } => Ok(super::run_calibration(cfg)?.noise_model()),
        NoiseConfig::CalibrationFile { path } => Ok(super::read_calibration(path)?.noise_model()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_config_with_defaults() {
        let cfg = ExperimentConfig::from_json(
            r#"{"noise": {"kind": "calibrate", "target_t2_star": 3.7e-4, "target_t2_hahn": 7.5e-4},
                "gates": ["NOT", "H"], "schemes": ["simple_padded", "xy8"], "tau_grid": [3e-6, 1e-5]}"#,
        )
        .unwrap();
        assert_eq!(cfg.epsilon, 0.01);
        assert_eq!(cfg.noop_cycles, 5);
        assert_eq!(cfg.gates, vec![Gate::Not, Gate::H]);
        assert_eq!(cfg.noise, NoiseConfig::desk_calibration());
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(ExperimentConfig::from_json(&text).unwrap(), cfg);
    }

    #[test]
    fn rejects_invalid_configs() {
        let base = ExperimentConfig::new(NoiseConfig::None, vec![Gate::H], vec![Scheme::Xy4], vec![1e-5]);
        assert!(base.validate().is_ok());
        let mut c = base.clone();
        c.tau_grid = vec![2e-3];
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.gates.clear();
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.realizations = 0;
        assert!(c.validate().is_err());
        let mut c = base;
        c.noise = NoiseConfig::Calibrate {
            target_t2_star: 1e-3,
            target_t2_hahn: 1e-4,
        };
        assert!(c.validate().is_err());
        assert!(ExperimentConfig::from_json(r#"{"noise": {"kind": "none"}, "gates": ["H"], "schemes": ["xy4"], "tau_grid": [1e-5], "bogus": 1}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"noise": {"kind": "none"}, "gates": ["CNOT"], "schemes": ["xy4"], "tau_grid": [1e-5]}"#).is_err());
    }

    #[test]
    fn scheme_names_round_trip() {
        for s in Scheme::ALL {
            assert_eq!(s.name().parse::<Scheme>().unwrap(), s);
        }
        assert_eq!("XY-8".parse::<Scheme>().unwrap(), Scheme::Xy8);
        assert!("cpmg".parse::<Scheme>().is_err());
    }
}
