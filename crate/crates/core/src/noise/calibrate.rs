//! Fits the classical dephasing model to target FID and Hahn-echo decay times.
//!
//! OU phases scale linearly with `sigma` and the static detuning scales with
//! `static_sigma`, so one table of unit-strength phases per correlation time
//! serves every candidate strength. Static detuning refocuses exactly in the
//! echo, which makes the Hahn time a function of the OU part alone:
//!
//! 1. fit the OU `sigma` to the Hahn target at the configured `tau_c`;
//! 2. if the resulting FID is still too slow, fit `static_sigma` to the FID
//!    target;
//! 3. otherwise the refocusable part must shrink, so bisect `tau_c` downward
//!    (re-fitting `sigma` each time) with no static component.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::decay::{decay_time, fid_decay_curve, hahn_decay_curve};
use super::ou::{static_normal, ClassicalDephasing, OUNoiseSpec};
use super::NoiseModel;
use crate::error::{Error, Result};
use crate::rng::derive_seed;

/// Relative agreement required between fitted and target decay times.
pub const CALIBRATION_TOLERANCE: f64 = 0.05;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CalibrationOptions {
    pub realizations: usize,
    pub seed: u64,
    /// Starting correlation time, seconds.
    pub tau_c: f64,
    /// Delay samples between zero and `2.5 × target_t2_hahn`.
    pub n_delays: usize,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        Self {
            realizations: 10_000,
            seed: 0,
            tau_c: 200e-6,
            n_delays: 400,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub target_t2_star: f64,
    pub target_t2_hahn: f64,
    pub fitted_t2_star: f64,
    pub fitted_t2_hahn: f64,
    pub params: ClassicalDephasing,
    pub realizations: usize,
    pub seed: u64,
}

impl CalibrationResult {
    pub fn noise_model(&self) -> NoiseModel {
        NoiseModel::Classical(self.params)
    }
}

pub fn calibrate_to_targets(target_t2_star: f64, target_t2_hahn: f64) -> Result<CalibrationResult> {
    calibrate_with(target_t2_star, target_t2_hahn, &CalibrationOptions::default())
}

pub fn calibrate_with(target_t2_star: f64, target_t2_hahn: f64, opts: &CalibrationOptions) -> Result<CalibrationResult> {
    if !(target_t2_star > 0.0 && target_t2_star <= target_t2_hahn && target_t2_hahn.is_finite()) {
        return Err(Error::Calibration(format!(
            "targets must satisfy 0 < T2* <= T2, got T2*={target_t2_star} T2={target_t2_hahn}"
        )));
    }
    if opts.realizations < 1 || opts.n_delays < 3 || !(opts.tau_c > 0.0) {
        return Err(Error::Calibration(format!("invalid options {opts:?}")));
    }
    let delays: Vec<f64> = (0..opts.n_delays)
        .map(|k| 2.5 * target_t2_hahn * k as f64 / (opts.n_delays - 1) as f64)
        .collect();

    let table = PhaseTable::build(opts.tau_c, &delays, opts.realizations, opts.seed)?;
    let sigma = fit_hahn(&table, target_t2_hahn)?;
    let fid_without_static = table.fid_time(sigma, 0.0).unwrap_or(f64::INFINITY);

    let params = if fid_without_static >= target_t2_star {
        let static_sigma = if fid_without_static <= target_t2_star * (1.0 + 1e-3) {
            0.0
        } else {
            solve_decreasing(|s| table.fid_time(sigma, s), target_t2_star, 1.0 / target_t2_star)?
        };
        ClassicalDephasing {
            ou: Some(OUNoiseSpec::new(sigma, opts.tau_c)),
            static_sigma,
        }
    } else {
        shrink_correlation_time(target_t2_star, target_t2_hahn, &delays, opts)?
    };

    let model = NoiseModel::Classical(params);
    let fitted_t2_star = decay_time(&fid_decay_curve(&model, &delays, opts.realizations, opts.seed)?)
        .ok_or_else(|| Error::Calibration("fitted FID never crosses 1/e".into()))?;
    let fitted_t2_hahn = decay_time(&hahn_decay_curve(&model, &delays, opts.realizations, opts.seed)?)
        .ok_or_else(|| Error::Calibration("fitted Hahn echo never crosses 1/e".into()))?;
    let off_star = (fitted_t2_star / target_t2_star - 1.0).abs();
    let off_hahn = (fitted_t2_hahn / target_t2_hahn - 1.0).abs();
    if off_star > CALIBRATION_TOLERANCE || off_hahn > CALIBRATION_TOLERANCE {
        return Err(Error::Calibration(format!(
            "best fit {params:?} gives T2*={fitted_t2_star:.4e} s (target {target_t2_star:.4e}) \
             and T2={fitted_t2_hahn:.4e} s (target {target_t2_hahn:.4e})"
        )));
    }
    Ok(CalibrationResult {
        target_t2_star,
        target_t2_hahn,
        fitted_t2_star,
        fitted_t2_hahn,
        params,
        realizations: opts.realizations,
        seed: opts.seed,
    })
}

fn fit_hahn(table: &PhaseTable, target: f64) -> Result<f64> {
    solve_decreasing(|s| table.hahn_time(s), target, 1.0 / target)
}

fn shrink_correlation_time(
    target_t2_star: f64,
    target_t2_hahn: f64,
    delays: &[f64],
    opts: &CalibrationOptions,
) -> Result<ClassicalDephasing> {
    let fit_at = |tau_c: f64| -> Result<(f64, f64)> {
        let table = PhaseTable::build(tau_c, delays, opts.realizations, opts.seed)?;
        let sigma = fit_hahn(&table, target_t2_hahn)?;
        Ok((sigma, table.fid_time(sigma, 0.0).unwrap_or(f64::INFINITY)))
    };

    let mut hi = opts.tau_c.ln();
    let mut lo = (target_t2_hahn / 200.0).min(opts.tau_c).ln();
    let (mut sigma, fid) = fit_at(lo.exp())?;
    if fid < target_t2_star * (1.0 - CALIBRATION_TOLERANCE) {
        return Err(Error::Calibration(format!(
            "FID time {fid:.4e} s at the shortest correlation time still below target {target_t2_star:.4e} s"
        )));
    }
    let mut best = lo;
    for _ in 0..20 {
        let mid = 0.5 * (lo + hi);
        let (s, fid) = fit_at(mid.exp())?;
        if fid >= target_t2_star {
            lo = mid;
            best = mid;
            sigma = s;
        } else {
            hi = mid;
        }
        if (fid / target_t2_star - 1.0).abs() < 5e-3 || hi - lo < 1e-3 {
            break;
        }
    }
    Ok(ClassicalDephasing {
        ou: Some(OUNoiseSpec::new(sigma, best.exp())),
        static_sigma: 0.0,
    })
}

/// Root of a decreasing decay-time function `f(x) = target` for `x >= 0`,
/// where `None` means "slower than the sampled window".
fn solve_decreasing(f: impl Fn(f64) -> Option<f64>, target: f64, scale: f64) -> Result<f64> {
    let time = |x: f64| f(x).unwrap_or(f64::INFINITY);
    let mut lo = 0.0;
    let mut hi = scale;
    let mut expansions = 0;
    while time(hi) >= target {
        lo = hi;
        hi *= 2.0;
        expansions += 1;
        if expansions > 60 {
            return Err(Error::Calibration(format!("no parameter bracket reaches decay time {target:.4e} s")));
        }
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if time(mid) >= target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-6 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Unit-strength phases, stored delay-major: `fid[k][r]`.
struct PhaseTable {
    delays: Vec<f64>,
    fid: Vec<Vec<f64>>,
    hahn: Vec<Vec<f64>>,
    static_normal: Vec<f64>,
}

impl PhaseTable {
    fn build(tau_c: f64, delays: &[f64], realizations: usize, seed: u64) -> Result<Self> {
        let unit = ClassicalDephasing {
            ou: Some(OUNoiseSpec::new(1.0, tau_c)),
            static_sigma: 0.0,
        };
        let t_max = *delays.last().unwrap();
        let rows = (0..realizations)
            .into_par_iter()
            .map(|r| {
                let key = derive_seed(seed, &[r as u64]);
                let real = unit.realize(t_max, key, None)?;
                let fid: Vec<f64> = delays.iter().map(|&t| real.phase(0.0, t)).collect();
                let hahn: Vec<f64> = delays
                    .iter()
                    .map(|&t| real.phase(0.5 * t, t) - real.phase(0.0, 0.5 * t))
                    .collect();
                Ok((fid, hahn, static_normal(key)))
            })
            .collect::<Result<Vec<_>>>()?;
        let n_delays = delays.len();
        let transpose = |pick: &dyn Fn(&(Vec<f64>, Vec<f64>, f64)) -> &Vec<f64>| -> Vec<Vec<f64>> {
            (0..n_delays).map(|k| rows.iter().map(|row| pick(row)[k]).collect()).collect()
        };
        Ok(Self {
            delays: delays.to_vec(),
            fid: transpose(&|row| &row.0),
            hahn: transpose(&|row| &row.1),
            static_normal: rows.iter().map(|row| row.2).collect(),
        })
    }

    fn crossing(&self, coherence_at: impl Fn(usize) -> f64) -> Option<f64> {
        let mut prev = (self.delays[0], coherence_at(0));
        for k in 1..self.delays.len() {
            let next = (self.delays[k], coherence_at(k));
            if let Some(t) = decay_time(&[prev, next]) {
                return Some(t);
            }
            prev = next;
        }
        None
    }

    fn fid_time(&self, sigma: f64, static_sigma: f64) -> Option<f64> {
        self.crossing(|k| {
            let t = self.delays[k];
            let (mut re, mut im) = (0.0, 0.0);
            for (phi, g) in self.fid[k].iter().zip(&self.static_normal) {
                let (s, c) = (sigma * phi + static_sigma * g * t).sin_cos();
                re += c;
                im += s;
            }
            (re * re + im * im).sqrt() / self.static_normal.len() as f64
        })
    }

    fn hahn_time(&self, sigma: f64) -> Option<f64> {
        self.crossing(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            for phi in &self.hahn[k] {
                let (s, c) = (sigma * phi).sin_cos();
                re += c;
                im += s;
            }
            (re * re + im * im).sqrt() / self.hahn[k].len() as f64
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_inverted_targets() {
        assert!(matches!(calibrate_to_targets(800e-6, 700e-6), Err(Error::Calibration(_))));
        assert!(calibrate_to_targets(0.0, 700e-6).is_err());
    }

    #[test]
    fn separated_targets_use_static_broadening() {
        let opts = CalibrationOptions {
            realizations: 2000,
            seed: 3,
            ..Default::default()
        };
        let cal = calibrate_with(370e-6, 750e-6, &opts).unwrap();
        assert!(cal.params.static_sigma > 0.0);
        assert!((cal.fitted_t2_star / 370e-6 - 1.0).abs() < CALIBRATION_TOLERANCE);
        assert!((cal.fitted_t2_hahn / 750e-6 - 1.0).abs() < CALIBRATION_TOLERANCE);
        assert!(cal.fitted_t2_star <= cal.fitted_t2_hahn);
    }

    #[test]
    fn equal_targets_need_no_static_part() {
        let opts = CalibrationOptions {
            realizations: 1000,
            seed: 5,
            n_delays: 200,
            ..Default::default()
        };
        let cal = calibrate_with(500e-6, 500e-6, &opts).unwrap();
        assert_eq!(cal.params.static_sigma, 0.0);
        assert!(cal.params.ou.unwrap().tau_c < opts.tau_c);
        assert!((cal.fitted_t2_star / 500e-6 - 1.0).abs() < CALIBRATION_TOLERANCE);
        assert!((cal.fitted_t2_hahn / 500e-6 - 1.0).abs() < CALIBRATION_TOLERANCE);
    }

    #[test]
    fn bisection_finds_root() {
        let x = solve_decreasing(|x| Some(1.0 / (1.0 + x)), 0.25, 1.0).unwrap();
        assert!((x - 3.0).abs() < 1e-4);
    }
}
