//! Classical stochastic dephasing: an Ornstein–Uhlenbeck frequency `δ(t)`
//! multiplying `S_z`, optionally on top of a static Gaussian detuning.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::rng::{derive_seed, NormalStream};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OUNoiseSpec {
    /// Stationary standard deviation of `δ`, rad/s.
    pub sigma: f64,
    /// Correlation time, seconds.
    pub tau_c: f64,
    /// Trajectory step, seconds.
    pub dt: f64,
}

impl OUNoiseSpec {
    /// Spec with the coarsest allowed step, `tau_c / 10`.
    pub fn new(sigma: f64, tau_c: f64) -> Self {
        Self {
            sigma,
            tau_c,
            dt: tau_c / 10.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(invalid(format!("OU sigma must be >= 0, got {}", self.sigma)));
        }
        if !(self.tau_c > 0.0 && self.tau_c.is_finite()) {
            return Err(invalid(format!("OU tau_c must be > 0, got {}", self.tau_c)));
        }
        // Small slack so `tau_c / 10` computed in floating point is accepted.
        if !(self.dt > 0.0 && self.dt <= self.tau_c / 10.0 * (1.0 + 1e-12)) {
            return Err(invalid(format!(
                "OU dt must satisfy 0 < dt <= tau_c/10, got dt={} tau_c={}",
                self.dt, self.tau_c
            )));
        }
        Ok(())
    }
}

/// Samples of `δ(t)` on a uniform grid starting at 0.
#[derive(Clone, Debug)]
pub struct NoiseTrajectory {
    dt: f64,
    delta: Vec<f64>,
    /// Trapezoidal running integral of `delta`, `cumulative[n] = ∫_0^{n dt} δ`.
    cumulative: Vec<f64>,
}

impl NoiseTrajectory {
    fn from_samples(dt: f64, delta: Vec<f64>) -> Self {
        let mut cumulative = Vec::with_capacity(delta.len());
        let mut acc = 0.0;
        cumulative.push(0.0);
        for w in delta.windows(2) {
            acc += 0.5 * (w[0] + w[1]) * dt;
            cumulative.push(acc);
        }
        Self {
            dt,
            delta,
            cumulative,
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.delta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.delta.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.delta.len()).map(|n| n as f64 * self.dt).collect()
    }

    pub fn delta(&self) -> &[f64] {
        &self.delta
    }

    pub fn duration(&self) -> f64 {
        (self.delta.len().saturating_sub(1)) as f64 * self.dt
    }

    fn locate(&self, t: f64) -> (usize, f64) {
        let last = self.delta.len() - 1;
        let x = (t / self.dt).max(0.0);
        let n = (x.floor() as usize).min(last.saturating_sub(1));
        (n, (x - n as f64).min(1.0))
    }

    /// `δ(t)` by linear interpolation; clamped to the grid.
    pub fn value_at(&self, t: f64) -> f64 {
        if self.delta.len() == 1 {
            return self.delta[0];
        }
        let (n, frac) = self.locate(t);
        self.delta[n] + frac * (self.delta[n + 1] - self.delta[n])
    }

    fn integral_to(&self, t: f64) -> f64 {
        if self.delta.len() == 1 {
            return self.delta[0] * t;
        }
        let (n, frac) = self.locate(t);
        let h = frac * self.dt;
        let slope = (self.delta[n + 1] - self.delta[n]) / self.dt;
        self.cumulative[n] + self.delta[n] * h + 0.5 * slope * h * h
    }

    /// `∫_a^b δ(t) dt` of the piecewise-linear interpolant.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        self.integral_to(b) - self.integral_to(a)
    }
}

/// Exact-discretization OU sampler; draw `n` of the normal stream keyed by
/// `seed` drives step `n` (draw 0 is the stationary initial value).
pub fn sample_ou_trajectory(spec: &OUNoiseSpec, total_time: f64, seed: u64) -> Result<NoiseTrajectory> {
    spec.validate()?;
    if !(total_time > 0.0 && total_time.is_finite()) {
        return Err(invalid(format!("total_time must be > 0, got {total_time}")));
    }
    let steps = (total_time / spec.dt - 1e-9).ceil().max(1.0) as usize;
    if spec.sigma == 0.0 {
        return Ok(NoiseTrajectory::from_samples(spec.dt, vec![0.0; steps + 1]));
    }
    let decay = (-spec.dt / spec.tau_c).exp();
    let kick = spec.sigma * (1.0 - decay * decay).sqrt();
    let mut normals = NormalStream::new(seed, 0);
    let mut delta = Vec::with_capacity(steps + 1);
    let mut d = spec.sigma * normals.next_normal();
    delta.push(d);
    for _ in 0..steps {
        d = d * decay + kick * normals.next_normal();
        delta.push(d);
    }
    Ok(NoiseTrajectory::from_samples(spec.dt, delta))
}

/// Classical dephasing model: OU fluctuations plus a static Gaussian detuning
/// of width `static_sigma` (rad/s), constant within one realization.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassicalDephasing {
    #[serde(default)]
    pub ou: Option<OUNoiseSpec>,
    #[serde(default)]
    pub static_sigma: f64,
}

impl ClassicalDephasing {
    pub fn validate(&self) -> Result<()> {
        if let Some(ou) = &self.ou {
            ou.validate()?;
        }
        if !(self.static_sigma >= 0.0 && self.static_sigma.is_finite()) {
            return Err(invalid(format!("static_sigma must be >= 0, got {}", self.static_sigma)));
        }
        Ok(())
    }

    pub fn is_silent(&self) -> bool {
        self.static_sigma == 0.0 && self.ou.is_none_or(|ou| ou.sigma == 0.0)
    }

    /// One noise realization covering `[0, total_time]`. `max_step` refines
    /// the OU grid below its `dt` when the caller needs finer resolution.
    pub fn realize(&self, total_time: f64, key: u64, max_step: Option<f64>) -> Result<DephasingRealization> {
        let static_detuning = if self.static_sigma > 0.0 {
            self.static_sigma * static_normal(key)
        } else {
            0.0
        };
        let trajectory = match self.ou {
            Some(ou) if ou.sigma > 0.0 && total_time > 0.0 => {
                let mut spec = ou;
                if let Some(step) = max_step {
                    spec.dt = spec.dt.min(step);
                }
                Some(sample_ou_trajectory(&spec, total_time, key)?)
            }
            _ => None,
        };
        Ok(DephasingRealization {
            trajectory,
            static_detuning,
        })
    }
}

const STATIC_STREAM: u64 = 0x57A7;

/// Unit static-detuning draw of the realization keyed by `key`.
pub(crate) fn static_normal(key: u64) -> f64 {
    NormalStream::normal_at(derive_seed(key, &[STATIC_STREAM]), 0, 0)
}

/// A single sampled history of the dephasing frequency.
#[derive(Clone, Debug)]
pub struct DephasingRealization {
    pub trajectory: Option<NoiseTrajectory>,
    pub static_detuning: f64,
}

impl DephasingRealization {
    pub fn quiet() -> Self {
        Self {
            trajectory: None,
            static_detuning: 0.0,
        }
    }

    /// Accumulated phase `∫_a^b (δ(t) + Δ) dt`.
    pub fn phase(&self, a: f64, b: f64) -> f64 {
        let fluct = self.trajectory.as_ref().map_or(0.0, |tr| tr.integral(a, b));
        fluct + self.static_detuning * (b - a)
    }

    pub fn detuning_at(&self, t: f64) -> f64 {
        self.trajectory.as_ref().map_or(0.0, |tr| tr.value_at(t)) + self.static_detuning
    }

    /// Resolution of the fluctuating part, if any.
    pub fn step(&self) -> Option<f64> {
        self.trajectory.as_ref().map(|tr| tr.dt())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_sigma_is_silent() {
        let tr = sample_ou_trajectory(&OUNoiseSpec::new(0.0, 1.0), 5.0, 3).unwrap();
        assert!(tr.delta().iter().all(|&d| d == 0.0));
        assert_eq!(tr.times()[0], 0.0);
        assert!(tr.duration() >= 5.0);
    }

    #[test]
    fn deterministic_per_seed() {
        let spec = OUNoiseSpec::new(2.0, 1.0);
        let a = sample_ou_trajectory(&spec, 10.0, 5).unwrap();
        let b = sample_ou_trajectory(&spec, 10.0, 5).unwrap();
        let c = sample_ou_trajectory(&spec, 10.0, 6).unwrap();
        assert_eq!(a.delta(), b.delta());
        assert_ne!(a.delta(), c.delta());
    }

    #[test]
    fn stationary_variance_and_autocorrelation() {
        // dt = tau_c / 100, 10^6 steps.
        let spec = OUNoiseSpec {
            sigma: 3.0,
            tau_c: 1.0,
            dt: 0.01,
        };
        let tr = sample_ou_trajectory(&spec, 1.0e4, 77).unwrap();
        let d = tr.delta();
        let n = d.len() as f64;
        let mean = d.iter().sum::<f64>() / n;
        let var = d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        assert!((var / 9.0 - 1.0).abs() < 0.02, "variance ratio {}", var / 9.0);

        let lag = 100;
        let cov = d
            .iter()
            .zip(&d[lag..])
            .map(|(a, b)| (a - mean) * (b - mean))
            .sum::<f64>()
            / (d.len() - lag) as f64;
        let ratio = cov / var / (-1.0f64).exp();
        assert!((ratio - 1.0).abs() < 0.05, "autocorrelation ratio {ratio}");
    }

    #[test]
    fn interpolated_integral_matches_quadrature() {
        let tr = sample_ou_trajectory(&OUNoiseSpec::new(1.0, 1.0), 3.0, 1).unwrap();
        let (a, b) = (0.137, 2.61);
        let m = 200_000;
        let h = (b - a) / m as f64;
        let midpoint: f64 = (0..m).map(|i| tr.value_at(a + (i as f64 + 0.5) * h) * h).sum();
        assert!((tr.integral(a, b) - midpoint).abs() < 1e-8);
        assert!(tr.integral(1.0, 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(OUNoiseSpec { sigma: -1.0, tau_c: 1.0, dt: 0.1 }.validate().is_err());
        assert!(OUNoiseSpec { sigma: 1.0, tau_c: 0.0, dt: 0.1 }.validate().is_err());
        assert!(OUNoiseSpec { sigma: 1.0, tau_c: 1.0, dt: 0.2 }.validate().is_err());
        assert!(sample_ou_trajectory(&OUNoiseSpec::new(1.0, 1.0), 0.0, 1).is_err());
    }

    #[test]
    fn refined_realization_keeps_statistics_keyed() {
        let model = ClassicalDephasing {
            ou: Some(OUNoiseSpec::new(1.0, 1.0)),
            static_sigma: 0.5,
        };
        let a = model.realize(2.0, 9, Some(0.01)).unwrap();
        let b = model.realize(2.0, 9, Some(0.01)).unwrap();
        assert_eq!(a.static_detuning, b.static_detuning);
        assert_eq!(a.step(), Some(0.01));
        assert!((a.phase(0.0, 2.0) - b.phase(0.0, 2.0)).abs() == 0.0);
        assert!(ClassicalDephasing::default().is_silent());
    }
}
