// Copyright 2026 The critquench Authors
// SPDX-License-Identifier: Apache-2.0

//! Speed-limit estimates for the mode pairs.
//!
//! The Fleming–Bhattacharyya estimate freezes the Hamiltonian at the
//! critical field and solves cos(2 ΔE_k T') = |⟨G_k(g_i)|G_k(g_f)⟩|, where
//! ΔE_k is the energy spread of |G_k(g_i)⟩ under H_k(g = 1). The Hegerfeldt
//! estimate for the slowest mode uses only its large-N reduction
//! 2 ω_{k_N} T ≈ −π/2.

use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{bogoliubov_angle, mode_hamiltonian, ChainConfig, FIELD_CRITICAL};
use crate::scalar::Real;

/// Standard deviation of H_k(g_ref) in the ground state at `g_state`.
///
/// Both Bloch vectors lie in the x–z plane at angles 2θ_k, so the spread is
/// Λ_k(g_ref)·|sin 2(θ_k(g_state) − θ_k(g_ref))|. The identity shift of H
/// does not enter.
pub fn energy_variance<T: Real>(k: T, g_ref: T, g_state: T) -> T {
    let lambda = mode_hamiltonian(k, g_ref).lambda();
    let delta = bogoliubov_angle(k, g_state) - bogoliubov_angle(k, g_ref);
    lambda * (T::lit(2.0) * delta).sin().abs()
}

/// T'_QSL(k) = arccos|⟨G_k(g_i)|G_k(g_f)⟩| / (2 ΔE_k).
pub fn fleming_qsl<T: Real>(k: T, g_i: T, g_f: T) -> Result<T> {
    let spread = energy_variance(k, T::lit(FIELD_CRITICAL), g_i);
    if spread == T::zero() {
        return Err(Error::DegenerateVariance { k: k.as_f64() });
    }
    let overlap = (bogoliubov_angle(k, g_i) - bogoliubov_angle(k, g_f))
        .cos()
        .abs()
        .min(T::one());
    Ok(overlap.acos() / (T::lit(2.0) * spread))
}

/// T_QSL(k_N) ≈ π/(4|ω_{k_N}|) = π/(8 sin(π/N)), the large-N form of the
/// condition tan(2 ω_{k_N} T) ∝ 1/ω_{k_N}.
pub fn hegerfeldt_qsl<T: Real>(chain: &ChainConfig<T>) -> T {
    let omega = mode_hamiltonian(chain.slowest_mode(), T::lit(FIELD_CRITICAL)).omega;
    T::PI() / (T::lit(4.0) * omega.abs())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeSpeedLimit<T> {
    pub k: T,
    pub time: T,
}

#[derive(Debug, Clone)]
pub struct QslReport<T> {
    pub n_spins: usize,
    /// T'_QSL(k) for every positive momentum, in increasing k.
    pub per_mode: Vec<ModeSpeedLimit<T>>,
    /// Hegerfeldt estimate T_QSL(k_N).
    pub slowest_mode_estimate: T,
}

impl<T: Real> QslReport<T> {
    /// T'_QSL(k)/N.
    pub fn tau_values(&self) -> Vec<T> {
        let n = T::from_usize_lossy(self.n_spins);
        self.per_mode.iter().map(|m| m.time / n).collect()
    }

    /// T'_QSL(k_N)/N.
    pub fn slowest_tau(&self) -> T {
        self.per_mode.last().expect("non-empty").time / T::from_usize_lossy(self.n_spins)
    }

    /// CSV with header `k,T_qsl,T_qsl_over_N`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["k", "T_qsl", "T_qsl_over_N"])?;
        for (m, tau) in self.per_mode.iter().zip(self.tau_values()) {
            wtr.write_record([m.k.to_string(), m.time.to_string(), tau.to_string()])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Evaluates [`fleming_qsl`] on every mode and checks that the profile
/// rises strictly toward k_N.
pub fn qsl_profile<T: Real>(chain: &ChainConfig<T>, g_i: T, g_f: T) -> Result<QslReport<T>> {
    let per_mode: Vec<ModeSpeedLimit<T>> = chain
        .momenta()
        .par_iter()
        .map(|&k| fleming_qsl(k, g_i, g_f).map(|time| ModeSpeedLimit { k, time }))
        .collect::<Result<_>>()?;
    if let Some(w) = per_mode.windows(2).find(|w| !(w[1].time > w[0].time)) {
        return Err(Error::ProfileNotPeaked(format!(
            "T'(k={}) = {} is not below T'(k={}) = {}",
            w[0].k, w[0].time, w[1].k, w[1].time
        )));
    }
    Ok(QslReport {
        n_spins: chain.n_spins(),
        per_mode,
        slowest_mode_estimate: hegerfeldt_qsl(chain),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ground_state, FIELD_FINAL, FIELD_INITIAL};
    use crate::op2::Op2;
    use crate::propagate::step_unitary;
    use std::f64::consts::PI;

    /// √(⟨H²⟩ − ⟨H⟩²) by explicit matrix products.
    fn spread_by_matrices(k: f64, g_ref: f64, g_state: f64, offset: f64) -> f64 {
        let h = mode_hamiltonian(k, g_ref).matrix()
            + Op2::identity().scale(num_complex::Complex::from(offset));
        let psi = ground_state(k, g_state);
        let m1 = psi.expectation(&h);
        let m2 = psi.expectation(&(h * h));
        (m2 - m1 * m1).max(0.0).sqrt()
    }

    #[test]
    fn spread_matches_matrix_route() {
        for &k in ChainConfig::<f64>::new(24).unwrap().momenta() {
            for (gr, gs) in [(1.0, 2.0), (0.3, 1.7), (1.0, 0.0)] {
                let a = energy_variance(k, gr, gs);
                let b = spread_by_matrices(k, gr, gs, 0.0);
                assert!((a - b).abs() < 1e-7 * (1.0 + b), "k={k}");
                // Identity shift leaves the spread unchanged.
                let c = spread_by_matrices(k, gr, gs, 3.7);
                assert!((b - c).abs() < 1e-6 * (1.0 + b));
            }
        }
    }

    #[test]
    fn eigenstate_has_no_spread() {
        assert_eq!(energy_variance(1.3f64, 0.7, 0.7), 0.0);
        assert!(matches!(
            fleming_qsl(1.3f64, 1.0, 0.0),
            Err(Error::DegenerateVariance { .. })
        ));
    }

    #[test]
    fn slowest_spread_is_omega() {
        let n = 1000;
        let k = ChainConfig::<f64>::new(n).unwrap().slowest_mode();
        let spread = energy_variance(k, 1.0, 2.0);
        let omega = 2.0 * (PI / n as f64).sin();
        assert!(((spread - omega) / omega).abs() < 1e-3);
    }

    #[test]
    fn equal_endpoints_need_no_time() {
        assert_eq!(fleming_qsl(2.0f64, 2.0, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn regression_values() {
        for (n, expect) in [(24usize, 0.117), (50, 0.121), (100, 0.123)] {
            let chain = ChainConfig::<f64>::new(n).unwrap();
            let t = fleming_qsl(chain.slowest_mode(), FIELD_INITIAL, FIELD_FINAL).unwrap();
            let tau = t / n as f64;
            assert!((tau - expect).abs() <= 1e-3, "N={n}: {tau}");
            assert!(tau < 0.125);
        }
    }

    #[test]
    fn hegerfeldt_limit() {
        let chain = ChainConfig::<f64>::new(100).unwrap();
        let tau = hegerfeldt_qsl(&chain) / 100.0;
        assert!((tau - PI / (800.0 * (PI / 100.0).sin())).abs() < 1e-15);
        assert!(((tau - 0.125) / 0.125).abs() < 1e-3);
        let mut prev = f64::INFINITY;
        for n in [4usize, 8, 24, 50, 100, 400, 10_000] {
            let t = hegerfeldt_qsl(&ChainConfig::<f64>::new(n).unwrap()) / n as f64;
            assert!(t < prev && t > 0.125);
            prev = t;
        }
    }

    #[test]
    fn profile_peaks_at_slowest_mode() {
        for n in [24usize, 50, 100] {
            let chain = ChainConfig::<f64>::new(n).unwrap();
            let rep = qsl_profile(&chain, FIELD_INITIAL, FIELD_FINAL).unwrap();
            assert_eq!(rep.per_mode.len(), n / 2);
            assert!(rep
                .per_mode
                .iter()
                .all(|m| m.time > 0.0 && m.time.is_finite()));
            assert!(rep.slowest_tau() < 0.125);
        }
    }

    #[test]
    fn frozen_evolution_respects_bound() {
        let chain = ChainConfig::<f64>::new(24).unwrap();
        let k = chain.slowest_mode();
        let t = fleming_qsl(k, 2.0, 0.0).unwrap();
        let spread = energy_variance(k, 1.0, 2.0);
        let u = step_unitary(k, 1.0, t);
        let evolved = ground_state(k, 2.0).evolved(&u);
        let reached = ground_state(k, 0.0).inner(&evolved).norm();
        assert!(reached >= (2.0 * spread * t).cos() - 1e-12);
    }
}
