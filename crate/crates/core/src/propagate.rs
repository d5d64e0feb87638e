// Copyright 2026 The critquench Authors
// SPDX-License-Identifier: Apache-2.0

//! Piecewise-constant propagation of each mode pair and the resulting
//! excitation probabilities, defect count D = 2 Σ_{k>0} P_k and density D/N.
//!
//! Step j (from t_j to t_{j+1}) uses the field at the step midpoint,
//! (g_j + g_{j+1})/2, and the exact 2×2 exponential of the frozen Hamiltonian.

use std::io::Write;

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{excited_state, ground_state, mode_hamiltonian, ChainConfig, ModeState};
use crate::op2::Op2;
use crate::pulse::Pulse;
use crate::scalar::Real;

/// exp(−i H_k(g) dt) in closed form.
#[inline]
pub fn step_unitary<T: Real>(k: T, g: T, dt: T) -> Op2<T> {
    let h = mode_hamiltonian(k, g);
    let lambda = h.lambda();
    let (s, c) = (lambda * dt).sin_cos();
    let sl = s / lambda;
    let (z, x) = (h.z_coefficient() * sl, h.x_coefficient() * sl);
    let phase = Complex::from_polar(T::one(), -h.shift * dt);
    let zero = T::zero();
    Op2::new(
        phase * Complex::new(c, -z),
        phase * Complex::new(zero, -x),
        phase * Complex::new(zero, -x),
        phase * Complex::new(c, z),
    )
}

/// Final (and optionally intermediate) states of one mode pair.
#[derive(Debug, Clone)]
pub struct ModeEvolution<T> {
    pub k: T,
    /// Evolved initial ground state φ_k(T).
    pub phi: ModeState<T>,
    /// Evolved initial excited state φ̄_k(T).
    pub phi_bar: ModeState<T>,
    /// (φ_k(t_i), φ̄_k(t_i)) at every grid time when recorded.
    pub trajectory: Option<Vec<(ModeState<T>, ModeState<T>)>>,
}

/// Evolves the ground and excited states at g(−T) through the pulse.
pub fn evolve_mode<T: Real>(k: T, pulse: &Pulse<T>, record: bool) -> ModeEvolution<T> {
    evolve_mode_prepared(k, pulse, pulse.initial_field(), record)
}

/// As [`evolve_mode`], but the initial states are the eigenstates at
/// `prepared_field` instead of at g(−T).
pub fn evolve_mode_prepared<T: Real>(
    k: T,
    pulse: &Pulse<T>,
    prepared_field: T,
    record: bool,
) -> ModeEvolution<T> {
    let dt = pulse.dt();
    let mut phi = ground_state(k, prepared_field);
    let mut phi_bar = excited_state(k, prepared_field);
    let mut trajectory = record.then(|| {
        let mut v = Vec::with_capacity(pulse.n_steps());
        v.push((phi, phi_bar));
        v
    });
    for j in 0..pulse.n_steps() - 1 {
        let u = step_unitary(k, pulse.step_field(j), dt);
        phi = phi.evolved(&u);
        phi_bar = phi_bar.evolved(&u);
        if let Some(tr) = trajectory.as_mut() {
            tr.push((phi, phi_bar));
        }
    }
    ModeEvolution {
        k,
        phi,
        phi_bar,
        trajectory,
    }
}

/// Final ground-branch state only; the cheap path behind objective evaluations.
pub(crate) fn evolve_ground<T: Real>(k: T, pulse: &Pulse<T>, prepared_field: T) -> ModeState<T> {
    let dt = pulse.dt();
    let mut phi = ground_state(k, prepared_field);
    for j in 0..pulse.n_steps() - 1 {
        phi = phi.evolved(&step_unitary(k, pulse.step_field(j), dt));
    }
    phi
}

/// P_k = |⟨E_k(g_f)|φ_k(T)⟩|².
pub fn excitation_probability<T: Real>(k: T, pulse: &Pulse<T>) -> T {
    let phi = evolve_ground(k, pulse, pulse.initial_field());
    excited_state(k, pulse.final_field()).overlap_probability(&phi)
}

/// Kink-counting operator of one mode pair restricted to the even sector,
/// ½[1 − cos k σ_z + sin k σ_x] in the working basis. It is the projector
/// onto the excited state at g = 0.
pub fn kink_operator<T: Real>(k: T) -> Op2<T> {
    let half = T::lit(0.5);
    let (s, c) = k.sin_cos();
    Op2::real(
        half * (T::one() - c),
        half * s,
        half * s,
        half * (T::one() + c),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeExcitation<T> {
    pub k: T,
    pub probability: T,
}

#[derive(Debug, Clone)]
pub struct QuenchResult<T> {
    pub n_spins: usize,
    pub half_duration: T,
    pub provenance: String,
    pub per_mode: Vec<ModeExcitation<T>>,
    /// Expected number of kinks, 2 Σ_{k>0} P_k.
    pub defects: T,
    /// D/N.
    pub density: T,
    /// (φ_k(T), φ̄_k(T)) in the same order as `per_mode`.
    pub final_states: Vec<(ModeState<T>, ModeState<T>)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuenchSummary {
    pub n_spins: usize,
    pub half_duration: f64,
    pub tau: f64,
    pub n_steps: usize,
    pub provenance: String,
    pub defects: f64,
    pub density: f64,
}

fn sum_defects<T: Real>(probabilities: impl Iterator<Item = T>) -> T {
    // Fixed k order regardless of how the modes were scheduled.
    T::lit(2.0) * probabilities.fold(T::zero(), |acc, p| acc + p)
}

/// D = 2 Σ_k P_k for a chain driven by `pulse` from its own initial ground state.
pub fn defect_count<T: Real>(pulse: &Pulse<T>, chain: &ChainConfig<T>) -> T {
    defect_count_prepared(pulse, chain, pulse.initial_field())
}

pub fn defect_count_prepared<T: Real>(
    pulse: &Pulse<T>,
    chain: &ChainConfig<T>,
    prepared_field: T,
) -> T {
    let g_f = pulse.final_field();
    let probs: Vec<T> = chain
        .momenta()
        .par_iter()
        .map(|&k| {
            let phi = evolve_ground(k, pulse, prepared_field);
            excited_state(k, g_f).overlap_probability(&phi)
        })
        .collect();
    sum_defects(probs.into_iter())
}

pub fn defect_density<T: Real>(pulse: &Pulse<T>, chain: &ChainConfig<T>) -> QuenchResult<T> {
    defect_density_prepared(pulse, chain, pulse.initial_field())
}

pub fn defect_density_prepared<T: Real>(
    pulse: &Pulse<T>,
    chain: &ChainConfig<T>,
    prepared_field: T,
) -> QuenchResult<T> {
    let g_f = pulse.final_field();
    let evolutions: Vec<ModeEvolution<T>> = chain
        .momenta()
        .par_iter()
        .map(|&k| evolve_mode_prepared(k, pulse, prepared_field, false))
        .collect();
    let per_mode: Vec<ModeExcitation<T>> = evolutions
        .iter()
        .map(|ev| ModeExcitation {
            k: ev.k,
            probability: excited_state(ev.k, g_f).overlap_probability(&ev.phi),
        })
        .collect();
    let defects = sum_defects(per_mode.iter().map(|m| m.probability));
    QuenchResult {
        n_spins: chain.n_spins(),
        half_duration: pulse.half_duration(),
        provenance: pulse.provenance().to_string(),
        defects,
        density: defects / T::from_usize_lossy(chain.n_spins()),
        final_states: evolutions.iter().map(|ev| (ev.phi, ev.phi_bar)).collect(),
        per_mode,
    }
}

impl<T: Real> QuenchResult<T> {
    /// CSV with header `k,P_k`, one row per positive momentum.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["k", "P_k"])?;
        for m in &self.per_mode {
            wtr.write_record([m.k.to_string(), m.probability.to_string()])?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn summary(&self, n_steps: usize) -> QuenchSummary {
        let t = self.half_duration.as_f64();
        QuenchSummary {
            n_spins: self.n_spins,
            half_duration: t,
            tau: t / self.n_spins as f64,
            n_steps,
            provenance: self.provenance.clone(),
            defects: self.defects.as_f64(),
            density: self.density.as_f64(),
        }
    }

    /// Excitation probability of the slowest mode k_N.
    pub fn slowest_mode_probability(&self) -> T {
        self.per_mode.last().expect("non-empty chain").probability
    }
}
