//! Config-driven experiments: calibration, fidelity sweeps over the
//! inter-pulse delay, and the fixed gate-time table.

mod config;
mod report;
mod sweep;

use std::path::Path;

pub use config::{resolve_noise, ExperimentConfig, NoiseConfig, Scheme, TAU_BOUNDS};
pub use report::{
    read_rows_csv, summarize, write_rows, write_rows_csv, write_summary_json, write_table1, write_table1_csv, CellSummary,
    Summary,
};
pub use sweep::{
    build_schedule, cell_seed, expected_pulse_count, run_cell, run_sweep, run_sweep_with_noise, run_table1,
    run_table1_with_noise, table1_tau, ResultRow, Table1Row, TABLE1_TARGETS,
};

use crate::error::{Error, Result};
use crate::noise::{calibrate_with, CalibrationResult};

/// Fits the noise model to the configured calibration targets.
pub fn run_calibration(cfg: &ExperimentConfig) -> Result<CalibrationResult> {
    match &cfg.noise {
        NoiseConfig::Calibrate {
            target_t2_star,
            target_t2_hahn,
        } => calibrate_with(*target_t2_star, *target_t2_hahn, &cfg.calibration),
        other => Err(crate::error::invalid(format!("config noise {other:?} has no calibration targets"))),
    }
}

pub fn write_calibration(result: &CalibrationResult, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(result).map_err(|source| Error::Json {
        context: "serializing calibration".into(),
        source,
    })?;
    text.push('\n');
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn read_calibration(path: &Path) -> Result<CalibrationResult> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let result: CalibrationResult = serde_json::from_str(&text).map_err(|source| Error::Json {
        context: format!("parsing calibration {}", path.display()),
        source,
    })?;
    result.params.validate()?;
    Ok(result)
}

/// Runs `f` on a pool of `jobs` worker threads (the global pool if `None`).
pub fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match jobs {
        None => Ok(f()),
        Some(0) => Err(crate::error::invalid("jobs must be >= 1")),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| crate::error::invalid(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}
