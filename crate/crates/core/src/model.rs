// Copyright 2026 The critquench Authors
// SPDX-License-Identifier: Apache-2.0

//! The periodic transverse-field Ising chain after the Jordan–Wigner and
//! Fourier maps: independent (k, −k) mode pairs, each a two-level system in
//! the even-parity basis {|0_k⟩, c†_k c†_{−k}|0_k⟩}.
//!
//! Basis convention: the mode Hamiltonian is
//!
//! ```text
//! H_k(g) = −Γ_k·1 − (Γ_k σ_z + ω_k σ_x),   Γ_k = 2(g + cos k),  ω_k = −2 sin k
//! ```
//!
//! i.e. the Landau–Zener form with the Pauli part negated. With this sign the
//! ground state is (cos θ_k, sin θ_k) with tan 2θ_k = −sin k / (g + cos k) and
//! θ_k → 0 as g → +∞, so the vacuum |0_k⟩ is the paramagnetic ground state.
//! The spectrum, −Γ_k ± Λ_k, is unchanged.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::op2::Op2;
use crate::scalar::Real;

/// Field at the start of every quench (paramagnetic side).
pub const FIELD_INITIAL: f64 = 2.0;
/// Field at the end of every quench (ferromagnetic side).
pub const FIELD_FINAL: f64 = 0.0;
/// Location of the quantum critical point.
pub const FIELD_CRITICAL: f64 = 1.0;

/// A periodic chain of `n_spins` spins and its positive momenta
/// k_m = π(2m − 1)/N, m = 1..N/2.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainConfig<T> {
    n_spins: usize,
    momenta: Vec<T>,
}

impl<T: Real> ChainConfig<T> {
    pub fn new(n_spins: usize) -> Result<Self> {
        if n_spins < 4 || !n_spins.is_multiple_of(2) {
            return Err(Error::InvalidChainSize(n_spins));
        }
        let pi = T::PI();
        let n = T::from_usize_lossy(n_spins);
        // Written as π − π(N − 2m + 1)/N so the top mode is exactly π − π/N.
        let momenta = (1..=n_spins / 2)
            .map(|m| pi - pi * T::from_usize_lossy(n_spins - 2 * m + 1) / n)
            .collect();
        Ok(Self { n_spins, momenta })
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn n_modes(&self) -> usize {
        self.momenta.len()
    }

    /// Positive momenta in increasing order.
    pub fn momenta(&self) -> &[T] {
        &self.momenta
    }

    /// k_N = π − π/N, the mode with the smallest gap at the critical point.
    pub fn slowest_mode(&self) -> T {
        *self.momenta.last().expect("at least two modes")
    }
}

pub fn build_chain<T: Real>(n_spins: usize) -> Result<ChainConfig<T>> {
    ChainConfig::new(n_spins)
}

/// Coefficients of the even-sector Hamiltonian of one mode pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeHamiltonian<T> {
    /// Γ_k = 2(g + cos k).
    pub gamma: T,
    /// ω_k = −2 sin k.
    pub omega: T,
    /// Identity coefficient, −Γ_k.
    pub shift: T,
}

impl<T: Real> ModeHamiltonian<T> {
    /// σ_z coefficient in the working basis.
    #[inline]
    pub fn z_coefficient(&self) -> T {
        -self.gamma
    }

    /// σ_x coefficient in the working basis.
    #[inline]
    pub fn x_coefficient(&self) -> T {
        -self.omega
    }

    /// Λ_k = √(Γ_k² + ω_k²); half the spectral gap.
    #[inline]
    pub fn lambda(&self) -> T {
        self.gamma.hypot(self.omega)
    }

    pub fn gap(&self) -> T {
        T::lit(2.0) * self.lambda()
    }

    /// (lower, upper) eigenvalues.
    pub fn eigenvalues(&self) -> (T, T) {
        let l = self.lambda();
        (self.shift - l, self.shift + l)
    }

    pub fn matrix(&self) -> Op2<T> {
        let (z, x) = (self.z_coefficient(), self.x_coefficient());
        Op2::real(self.shift + z, x, x, self.shift - z)
    }
}

pub fn mode_hamiltonian<T: Real>(k: T, g: T) -> ModeHamiltonian<T> {
    let two = T::lit(2.0);
    let gamma = two * (g + k.cos());
    ModeHamiltonian {
        gamma,
        omega: -two * k.sin(),
        shift: -gamma,
    }
}

/// Λ_k(g) = 2√((g + cos k)² + sin² k).
pub fn quasiparticle_energy<T: Real>(k: T, g: T) -> T {
    mode_hamiltonian(k, g).lambda()
}

/// θ_k(g) with tan 2θ_k = −sin k/(g + cos k), on the branch continuous in g
/// with θ_k → 0 as g → +∞. For k ∈ (0, π) this is ½·atan2(−sin k, g + cos k),
/// which takes values in (−π/2, 0) and never crosses the atan2 cut.
pub fn bogoliubov_angle<T: Real>(k: T, g: T) -> T {
    T::lit(0.5) * (-k.sin()).atan2(g + k.cos())
}

/// Normalized amplitude pair of one mode in the even-parity basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeState<T> {
    pub amplitudes: [Complex<T>; 2],
}

impl<T: Real> ModeState<T> {
    pub fn new(a: Complex<T>, b: Complex<T>) -> Self {
        Self { amplitudes: [a, b] }
    }

    pub fn from_real(a: T, b: T) -> Self {
        Self::new(Complex::from(a), Complex::from(b))
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &Self) -> Complex<T> {
        let (u, v) = (&self.amplitudes, &other.amplitudes);
        u[0].conj() * v[0] + u[1].conj() * v[1]
    }

    pub fn norm(&self) -> T {
        self.inner(self).re.sqrt()
    }

    /// |⟨self|other⟩|².
    pub fn overlap_probability(&self, other: &Self) -> T {
        self.inner(other).norm_sqr()
    }

    pub fn evolved(&self, op: &Op2<T>) -> Self {
        Self {
            amplitudes: op.apply(self.amplitudes),
        }
    }

    /// ⟨self|A|self⟩, real part (A Hermitian).
    pub fn expectation(&self, op: &Op2<T>) -> T {
        op.sandwich(self.amplitudes, self.amplitudes).re
    }
}

/// Instantaneous ground state (cos θ_k, sin θ_k).
pub fn ground_state<T: Real>(k: T, g: T) -> ModeState<T> {
    let (s, c) = bogoliubov_angle(k, g).sin_cos();
    ModeState::from_real(c, s)
}

/// Instantaneous excited state (−sin θ_k, cos θ_k), orthogonal to the ground state.
pub fn excited_state<T: Real>(k: T, g: T) -> ModeState<T> {
    let (s, c) = bogoliubov_angle(k, g).sin_cos();
    ModeState::from_real(-s, c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn grid_for_four_spins() {
        let chain = ChainConfig::<f64>::new(4).unwrap();
        assert_eq!(chain.momenta().len(), 2);
        assert!((chain.momenta()[0] - PI / 4.0).abs() < 1e-15);
        assert!((chain.momenta()[1] - 3.0 * PI / 4.0).abs() < 1e-15);
    }

    #[test]
    fn slowest_mode_is_exact() {
        let chain = ChainConfig::<f64>::new(100).unwrap();
        assert_eq!(chain.slowest_mode(), PI - PI / 100.0);
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(matches!(
            ChainConfig::<f64>::new(5),
            Err(Error::InvalidChainSize(5))
        ));
        assert!(ChainConfig::<f64>::new(2).is_err());
        assert!(ChainConfig::<f64>::new(0).is_err());
    }

    #[test]
    fn grid_is_increasing_and_interior() {
        for n in (4..=200).step_by(2) {
            let chain = ChainConfig::<f64>::new(n).unwrap();
            let k = chain.momenta();
            assert_eq!(k.len(), n / 2);
            assert!(k[0] > 0.0 && *k.last().unwrap() < PI);
            assert!(k.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn hamiltonian_at_half_pi() {
        let h = mode_hamiltonian(PI / 2.0, 1.0);
        assert!((h.gamma - 2.0).abs() < 1e-15);
        assert!((h.omega + 2.0).abs() < 1e-15);
        assert!((h.lambda() - 2.0 * 2f64.sqrt()).abs() < 1e-14);
        assert_eq!(h.shift, -h.gamma);
    }

    #[test]
    fn slowest_gap_at_criticality() {
        let k = ChainConfig::<f64>::new(100).unwrap().slowest_mode();
        let lambda = quasiparticle_energy(k, 1.0);
        assert!((lambda - 4.0 * (PI / 200.0).sin()).abs() < 1e-14);
        assert!((lambda - 0.0628).abs() < 1e-4);
    }

    #[test]
    fn strong_field_dominates() {
        let h = mode_hamiltonian(1.0f64, 1e8);
        assert!(h.gamma / h.omega.abs() > 1e7);
        let gs = ground_state(1.0f64, 1e8);
        assert!((gs.amplitudes[0].re - 1.0).abs() < 1e-8);
        let ex = excited_state(1.0f64, 1e8);
        assert!((ex.amplitudes[1].re - 1.0).abs() < 1e-8);
    }

    #[test]
    fn angle_values() {
        let th = bogoliubov_angle(PI / 2.0, 2.0);
        assert!((th - 0.5 * (-0.5f64).atan()).abs() < 1e-15);
        let th0 = bogoliubov_angle(PI / 2.0, 0.0);
        assert!((th0 + PI / 4.0).abs() < 1e-15);
        let gs = ground_state(PI / 2.0, 0.0);
        assert!((gs.amplitudes[0].re - (-PI / 4.0).cos()).abs() < 1e-15);
        assert!((gs.amplitudes[1].re - (-PI / 4.0).sin()).abs() < 1e-15);
    }

    #[test]
    fn angle_is_continuous_along_quench_path() {
        // Crossing g + cos k = 0 must not jump by π/2.
        let k = 2.5f64;
        let mut prev = bogoliubov_angle(k, 3.0);
        for i in 1..=3000 {
            let g = 3.0 - i as f64 * 1e-3;
            let th = bogoliubov_angle(k, g);
            assert!((th - prev).abs() < 1e-2, "jump at g={g}");
            prev = th;
        }
    }

    #[test]
    fn minimum_gap_over_grid_at_criticality() {
        for n in [4usize, 24, 50, 100] {
            let chain = ChainConfig::<f64>::new(n).unwrap();
            let min = chain
                .momenta()
                .iter()
                .map(|&k| quasiparticle_energy(k, 1.0))
                .fold(f64::INFINITY, f64::min);
            let expect = 4.0 * (PI / (2.0 * n as f64)).sin();
            assert!((min - expect).abs() < 1e-13);
        }
    }

    #[test]
    fn eigenvector_and_angle_routes_agree() {
        for n in [4usize, 24, 100] {
            let chain = ChainConfig::<f64>::new(n).unwrap();
            for &k in chain.momenta() {
                for g in [0.0, 0.5, 1.0, 2.0] {
                    let h = mode_hamiltonian(k, g).matrix();
                    // Lowest eigenvector of a real symmetric 2x2 by direct solve.
                    let (a, b, d) = (h.m[0][0].re, h.m[0][1].re, h.m[1][1].re);
                    let emin = 0.5 * (a + d) - (0.25 * (a - d).powi(2) + b * b).sqrt();
                    let (mut x, mut y) = if b.abs() > 1e-300 {
                        (b, emin - a)
                    } else if a <= d {
                        (1.0, 0.0)
                    } else {
                        (0.0, 1.0)
                    };
                    let nrm = x.hypot(y);
                    x /= nrm;
                    y /= nrm;
                    let gs = ground_state(k, g);
                    let dot = x * gs.amplitudes[0].re + y * gs.amplitudes[1].re;
                    assert!((dot.abs() - 1.0).abs() < 1e-12, "k={k} g={g}");
                }
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn eigen_residual(k in 1e-3f64..(PI - 1e-3), g in 0.0f64..3.0) {
            let h = mode_hamiltonian(k, g);
            let (emin, emax) = h.eigenvalues();
            let m = h.matrix();
            let gs = ground_state(k, g);
            let ex = excited_state(k, g);
            let hg = gs.evolved(&m);
            let he = ex.evolved(&m);
            for i in 0..2 {
                prop_assert!((hg.amplitudes[i] - gs.amplitudes[i] * emin).norm() <= 1e-12);
                prop_assert!((he.amplitudes[i] - ex.amplitudes[i] * emax).norm() <= 1e-12);
            }
            prop_assert!(gs.inner(&ex).norm() < 1e-15);
            prop_assert!((gs.norm() - 1.0).abs() < 1e-15);
            prop_assert!((ex.norm() - 1.0).abs() < 1e-15);
            prop_assert!(gs.amplitudes[0].re >= 0.0);
            prop_assert!(h.lambda() > 0.0);
        }
    }
}
