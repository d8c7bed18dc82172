//! Free-induction and Hahn-echo coherence decays of an initial `|+⟩` state.

use rayon::prelude::*;

use super::NoiseModel;
use crate::error::{invalid, Result};
use crate::linalg::{self, DensityMatrix, HermitianPropagator, Operator, C64};
use crate::noise::build_bath_hamiltonians;
use crate::rng::derive_seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Experiment {
    FreeInduction,
    HahnEcho,
}

/// `(delay, coherence)` with coherence normalized to 1 at zero delay.
pub type DecayCurve = Vec<(f64, f64)>;

pub fn fid_decay_curve(noise: &NoiseModel, delays: &[f64], n_realizations: usize, seed: u64) -> Result<DecayCurve> {
    decay_curve(noise, delays, n_realizations, seed, Experiment::FreeInduction)
}

/// Like [`fid_decay_curve`] with an ideal x π pulse at half of each delay.
pub fn hahn_decay_curve(noise: &NoiseModel, delays: &[f64], n_realizations: usize, seed: u64) -> Result<DecayCurve> {
    decay_curve(noise, delays, n_realizations, seed, Experiment::HahnEcho)
}

fn decay_curve(
    noise: &NoiseModel,
    delays: &[f64],
    n_realizations: usize,
    seed: u64,
    experiment: Experiment,
) -> Result<DecayCurve> {
    if n_realizations < 1 {
        return Err(invalid("n_realizations must be >= 1"));
    }
    if delays.iter().any(|&t| !(t >= 0.0 && t.is_finite())) || delays.windows(2).any(|w| w[1] < w[0]) {
        return Err(invalid("delays must be finite, non-negative and increasing"));
    }
    let coherence = match noise {
        NoiseModel::None => vec![1.0; delays.len()],
        NoiseModel::Classical(model) => {
            model.validate()?;
            let t_max = delays.last().copied().unwrap_or(0.0);
            let per_realization = (0..n_realizations)
                .into_par_iter()
                .map(|r| {
                    let realization = model.realize(t_max, derive_seed(seed, &[r as u64]), None)?;
                    Ok(delays
                        .iter()
                        .map(|&t| match experiment {
                            Experiment::FreeInduction => realization.phase(0.0, t),
                            Experiment::HahnEcho => realization.phase(0.5 * t, t) - realization.phase(0.0, 0.5 * t),
                        })
                        .collect::<Vec<f64>>())
                })
                .collect::<Result<Vec<_>>>()?;
            ensemble_coherence(&per_realization, delays.len())
        }
        NoiseModel::SpinBath(spec) => {
            let h = build_bath_hamiltonians(spec)?;
            let prop = HermitianPropagator::new(&h.total())?;
            let n_bath = spec.n_bath();
            let r = 1.0 / 2f64.sqrt();
            let plus = DensityMatrix::pure(&[C64::new(r, 0.0), C64::new(r, 0.0)]);
            let rho0 = plus.tensor(&DensityMatrix::maximally_mixed(1 << n_bath));
            let flip = linalg::embed_system(&linalg::rotation_unitary(0.0, std::f64::consts::PI), n_bath)?;
            delays
                .iter()
                .map(|&t| {
                    let u: Operator = match experiment {
                        Experiment::FreeInduction => prop.at(t),
                        Experiment::HahnEcho => {
                            let half = prop.at(0.5 * t);
                            &half * &flip * &half
                        }
                    };
                    let red = linalg::partial_trace_bath(&rho0.conjugate(&u))?;
                    Ok(2.0 * red.matrix()[(0, 1)].norm())
                })
                .collect::<Result<Vec<_>>>()?
        }
    };
    Ok(delays.iter().copied().zip(coherence).collect())
}

/// `|⟨e^{−iφ}⟩|` per delay, summed in realization order.
pub(crate) fn ensemble_coherence(phases: &[Vec<f64>], n_delays: usize) -> Vec<f64> {
    let n = phases.len() as f64;
    (0..n_delays)
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            for row in phases {
                let (s, c) = row[k].sin_cos();
                re += c;
                im -= s;
            }
            (re * re + im * im).sqrt() / n
        })
        .collect()
}

/// First `1/e` crossing, linearly interpolated between samples.
pub fn decay_time(curve: &[(f64, f64)]) -> Option<f64> {
    let threshold = (-1.0f64).exp();
    curve.windows(2).find_map(|w| {
        let ((t0, c0), (t1, c1)) = (w[0], w[1]);
        if c0 >= threshold && c1 < threshold {
            Some(t0 + (c0 - threshold) / (c0 - c1) * (t1 - t0))
        } else {
            None
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::{ClassicalDephasing, OUNoiseSpec, SpinBathSpec};

    fn grid(t_max: f64, n: usize) -> Vec<f64> {
        (0..n).map(|k| t_max * k as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn zero_noise_keeps_coherence() {
        for model in [
            NoiseModel::None,
            NoiseModel::Classical(ClassicalDephasing::default()),
            NoiseModel::SpinBath(SpinBathSpec::static_bath(vec![], 0.0)),
        ] {
            for c in [
                fid_decay_curve(&model, &grid(1.0, 5), 3, 1).unwrap(),
                hahn_decay_curve(&model, &grid(1.0, 5), 3, 1).unwrap(),
            ] {
                assert!(c.iter().all(|&(_, v)| (v - 1.0).abs() < 1e-12));
            }
        }
    }

    #[test]
    fn static_gaussian_spread_gives_gaussian_fid() {
        let sigma = 2.0;
        let model = NoiseModel::Classical(ClassicalDephasing {
            ou: None,
            static_sigma: sigma,
        });
        let curve = fid_decay_curve(&model, &grid(1.2, 13), 10_000, 4).unwrap();
        for &(t, c) in &curve {
            let oracle = (-sigma * sigma * t * t / 2.0).exp();
            assert!((c - oracle).abs() < 0.03, "t={t} c={c} oracle={oracle}");
        }
        let echo = hahn_decay_curve(&model, &grid(1.2, 13), 1000, 4).unwrap();
        assert!(echo.iter().all(|&(_, c)| (c - 1.0).abs() < 1e-10));
    }

    #[test]
    fn single_bath_spin_beats() {
        let b = 3.0;
        let model = NoiseModel::SpinBath(SpinBathSpec::static_bath(vec![b], 0.0));
        let curve = fid_decay_curve(&model, &grid(4.0, 41), 1, 0).unwrap();
        for &(t, c) in &curve {
            assert!((c - (b * t / 2.0).cos().abs()).abs() < 1e-12);
        }
        let echo = hahn_decay_curve(&model, &grid(4.0, 41), 1, 0).unwrap();
        assert!(echo.iter().all(|&(_, c)| (c - 1.0).abs() < 1e-10));
    }

    #[test]
    fn fast_ou_echo_outlasts_fid() {
        let model = NoiseModel::Classical(ClassicalDephasing {
            ou: Some(OUNoiseSpec::new(3.0, 0.2)),
            static_sigma: 0.0,
        });
        let delays = grid(1.0, 11);
        let fid = fid_decay_curve(&model, &delays, 4000, 8).unwrap();
        let echo = hahn_decay_curve(&model, &delays, 4000, 8).unwrap();
        for (f, e) in fid.iter().zip(&echo).skip(1) {
            assert!(e.1 > f.1, "t={} fid={} echo={}", f.0, f.1, e.1);
        }
    }

    #[test]
    fn decay_time_interpolates() {
        let curve: Vec<(f64, f64)> = grid(3.0, 31).into_iter().map(|t| (t, (-t).exp())).collect();
        assert!((decay_time(&curve).unwrap() - 1.0).abs() < 5e-3);
        assert_eq!(decay_time(&[(0.0, 1.0), (1.0, 0.9)]), None);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(fid_decay_curve(&NoiseModel::None, &[0.0, 1.0], 0, 0).is_err());
        assert!(fid_decay_curve(&NoiseModel::None, &[1.0, 0.5], 1, 0).is_err());
    }
}
