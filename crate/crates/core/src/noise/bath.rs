//! Quantum spin-bath Hamiltonians: Zeeman offset, pure-dephasing coupling and
//! secular homonuclear dipolar couplings among the bath spins.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::linalg::{self, Operator, C64, MAX_TOTAL_SPINS};
use crate::rng::{derive_seed, uniform_at};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpinBathSpec {
    /// System–bath couplings `b_k` in rad/s, one per bath spin.
    pub couplings: Vec<f64>,
    /// Symmetric intra-bath couplings `d_jk` in rad/s, zero diagonal.
    pub bath_couplings: Vec<Vec<f64>>,
    /// Residual system offset `ω_S` in rad/s.
    #[serde(default)]
    pub system_offset: f64,
}

/// `H_S`, `H_SE` and `H_E` on the full system ⊗ bath space.
#[derive(Clone, Debug)]
pub struct BathHamiltonians {
    pub system: Operator,
    pub coupling: Operator,
    pub environment: Operator,
}

impl BathHamiltonians {
    pub fn total(&self) -> Operator {
        &self.system + &self.coupling + &self.environment
    }

    pub fn dim(&self) -> usize {
        self.system.nrows()
    }
}

impl SpinBathSpec {
    pub fn n_bath(&self) -> usize {
        self.couplings.len()
    }

    /// Bath with no intra-bath couplings.
    pub fn static_bath(couplings: Vec<f64>, system_offset: f64) -> Self {
        let n = couplings.len();
        Self {
            couplings,
            bath_couplings: vec![vec![0.0; n]; n],
            system_offset,
        }
    }

    /// `b_k` log-uniform in `coupling_band`, `d_jk = d_scale (1 − 3cos²ϑ)/2`
    /// for a uniformly random orientation `cos ϑ`, all from `seed`.
    pub fn random(n_bath: usize, coupling_band: (f64, f64), d_scale: f64, seed: u64) -> Self {
        let key = derive_seed(seed, &[0xBA7B]);
        let uniform = |n: u64| uniform_at(key, 0, n);
        let (lo, hi) = coupling_band;
        let couplings = (0..n_bath)
            .map(|k| (lo.ln() + (hi.ln() - lo.ln()) * uniform(k as u64)).exp())
            .collect();
        let mut d = vec![vec![0.0; n_bath]; n_bath];
        let mut n = n_bath as u64;
        for j in 0..n_bath {
            for k in j + 1..n_bath {
                let cos = 2.0 * uniform(n) - 1.0;
                n += 1;
                let value = d_scale * 0.5 * (1.0 - 3.0 * cos * cos);
                d[j][k] = value;
                d[k][j] = value;
            }
        }
        Self {
            couplings,
            bath_couplings: d,
            system_offset: 0.0,
        }
    }

    /// Four bath spins with couplings in a 1–5 krad/s band.
    pub fn desk_default() -> Self {
        Self::random(4, (1.0e3, 5.0e3), 2.0e3, 2012)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_bath();
        if 1 + n > MAX_TOTAL_SPINS {
            return Err(crate::error::Error::TooManySpins {
                total: 1 + n,
                max: MAX_TOTAL_SPINS,
            });
        }
        if self.bath_couplings.len() != n || self.bath_couplings.iter().any(|row| row.len() != n) {
            return Err(invalid(format!("bath_couplings must be {n}×{n}")));
        }
        let all = self
            .couplings
            .iter()
            .chain(self.bath_couplings.iter().flatten())
            .chain(std::iter::once(&self.system_offset));
        if all.into_iter().any(|v| !v.is_finite()) {
            return Err(invalid("bath couplings must be finite"));
        }
        for j in 0..n {
            if self.bath_couplings[j][j] != 0.0 {
                return Err(invalid("bath_couplings must have a zero diagonal"));
            }
            for k in 0..j {
                if self.bath_couplings[j][k] != self.bath_couplings[k][j] {
                    return Err(invalid("bath_couplings must be symmetric"));
                }
            }
        }
        Ok(())
    }
}

/// Builds `H_S = ω_S S_z`, `H_SE = Σ b_k S_z I_z^k` and
/// `H_E = Σ_{j<k} d_jk (2 I_z^j I_z^k − I_x^j I_x^k − I_y^j I_y^k)`.
pub fn build_bath_hamiltonians(spec: &SpinBathSpec) -> Result<BathHamiltonians> {
    spec.validate()?;
    let n = spec.n_bath();
    let spins = n + 1;
    let dim = 1 << spins;
    let (sx, sy, sz) = linalg::spin_half_operators();
    let site = |op: &Operator, k: usize| linalg::embed_site(op, k, spins);
    let real = |v: f64| C64::new(v, 0.0);

    let sz_sys = site(&sz, 0);
    let system = &sz_sys * real(spec.system_offset);

    let mut coupling = Operator::zeros(dim, dim);
    for (k, &b) in spec.couplings.iter().enumerate() {
        coupling += &sz_sys * site(&sz, k + 1) * real(b);
    }

    let mut environment = Operator::zeros(dim, dim);
    for j in 0..n {
        for k in j + 1..n {
            let d = spec.bath_couplings[j][k];
            if d == 0.0 {
                continue;
            }
            let zz = site(&sz, j + 1) * site(&sz, k + 1);
            let xx = site(&sx, j + 1) * site(&sx, k + 1);
            let yy = site(&sy, j + 1) * site(&sy, k + 1);
            environment += (zz * real(2.0) - xx - yy) * real(d);
        }
    }

    Ok(BathHamiltonians {
        system,
        coupling,
        environment,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{commutator, hermitian_asymmetry, max_norm};

    fn is_diagonal(m: &Operator) -> bool {
        (0..m.nrows()).all(|i| (0..m.ncols()).all(|j| i == j || m[(i, j)].norm() == 0.0))
    }

    #[test]
    fn empty_bath_is_pure_offset() {
        let h = build_bath_hamiltonians(&SpinBathSpec::static_bath(vec![], 3.0)).unwrap();
        assert_eq!(h.dim(), 2);
        assert_eq!(max_norm(&h.coupling), 0.0);
        assert_eq!(max_norm(&h.environment), 0.0);
        assert_eq!(h.system[(0, 0)].re, 1.5);
        assert_eq!(h.system[(1, 1)].re, -1.5);
    }

    #[test]
    fn single_spin_coupling_diagonal() {
        let b = 2.5;
        let h = build_bath_hamiltonians(&SpinBathSpec::static_bath(vec![b], 0.0)).unwrap();
        let expected = [b / 4.0, -b / 4.0, -b / 4.0, b / 4.0];
        assert!(is_diagonal(&h.coupling));
        for (i, e) in expected.iter().enumerate() {
            assert!((h.coupling[(i, i)].re - e).abs() < 1e-15);
        }
    }

    #[test]
    fn static_limit_is_diagonal() {
        let h = build_bath_hamiltonians(&SpinBathSpec::static_bath(vec![1.0, 0.3, 2.0], 0.7)).unwrap();
        assert_eq!(max_norm(&commutator(&h.coupling, &h.environment)), 0.0);
        assert!(is_diagonal(&h.total()));
    }

    #[test]
    fn dipolar_bath_fluctuates_but_keeps_pure_dephasing() {
        let spec = SpinBathSpec::random(3, (1.0, 5.0), 2.0, 3);
        let h = build_bath_hamiltonians(&spec).unwrap();
        for m in [&h.system, &h.coupling, &h.environment] {
            assert!(hermitian_asymmetry(m) < 1e-15);
        }
        assert_eq!(max_norm(&commutator(&h.system, &h.coupling)), 0.0);
        assert!(max_norm(&commutator(&h.coupling, &h.environment)) > 1e-3);
    }

    #[test]
    fn random_spec_is_reproducible_and_valid() {
        let a = SpinBathSpec::random(4, (1e3, 5e3), 2e3, 11);
        assert_eq!(a, SpinBathSpec::random(4, (1e3, 5e3), 2e3, 11));
        a.validate().unwrap();
        assert!(a.couplings.iter().all(|&b| (1e3..=5e3).contains(&b)));
        SpinBathSpec::desk_default().validate().unwrap();
    }

    #[test]
    fn rejects_invalid_specs() {
        let mut s = SpinBathSpec::static_bath(vec![1.0, 2.0], 0.0);
        s.bath_couplings[0][1] = 1.0;
        assert!(s.validate().is_err());
        s.bath_couplings[1][0] = 1.0;
        s.validate().unwrap();
        s.bath_couplings[0][0] = 0.5;
        assert!(s.validate().is_err());
        let s = SpinBathSpec {
            couplings: vec![1.0],
            bath_couplings: vec![],
            system_offset: 0.0,
        };
        assert!(build_bath_hamiltonians(&s).is_err());
        assert!(SpinBathSpec::static_bath(vec![1.0; 7], 0.0).validate().is_err());
    }
}
