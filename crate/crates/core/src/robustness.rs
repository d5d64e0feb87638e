// Copyright 2026 The critquench Authors
// SPDX-License-Identifier: Apache-2.0

//! Defect density under imperfect control: random pulse noise, a shifted
//! initial state, and a wrong number of spins.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::ChainConfig;
use crate::propagate::{defect_count, defect_density_prepared};
use crate::pulse::Pulse;
use crate::scalar::Real;

/// Two-sided 95% normal quantile.
const Z95: f64 = 1.96;

#[derive(Debug, Clone)]
pub struct NoiseStudyConfig<T> {
    /// Noise strengths δ; each sample moves by u ~ U[−δ/2, δ/2].
    pub deltas: Vec<T>,
    pub n_realizations: usize,
    pub seed: u64,
    pub base_pulse: Pulse<T>,
    pub n_spins: usize,
    /// Keep every realization's density in the result.
    pub keep_samples: bool,
}

impl<T: Real> NoiseStudyConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.n_realizations == 0 {
            return Err(Error::InvalidParameter(
                "n_realizations must be >= 1".into(),
            ));
        }
        if let Some(d) = self.deltas.iter().find(|d| !(**d >= T::zero())) {
            return Err(Error::InvalidParameter(format!(
                "noise strength must be non-negative, got {d}"
            )));
        }
        ChainConfig::<T>::new(self.n_spins)?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoisePoint<T> {
    pub delta: T,
    pub mean_density: T,
    /// 1.96 × standard error of the mean.
    pub ci_half_width: T,
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<Vec<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobustnessResult<T> {
    pub per_delta: Vec<NoisePoint<T>>,
}

impl<T: Real> RobustnessResult<T> {
    /// CSV with header `delta,mean_rho,ci_halfwidth,n`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["delta", "mean_rho", "ci_halfwidth", "n"])?;
        for p in &self.per_delta {
            wtr.write_record([
                p.delta.to_string(),
                p.mean_density.to_string(),
                p.ci_half_width.to_string(),
                p.n.to_string(),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Mean and 95% half-width. Accumulates deviations from the first sample so
/// that identical samples give their common value and zero width exactly.
pub fn mean_and_ci<T: Real>(values: &[T]) -> (T, T) {
    let n = values.len();
    let x0 = values[0];
    let nf = T::from_usize_lossy(n);
    let mean = x0 + values.iter().fold(T::zero(), |a, &x| a + (x - x0)) / nf;
    if n < 2 {
        return (mean, T::zero());
    }
    let ss = values
        .iter()
        .fold(T::zero(), |a, &x| a + (x - mean) * (x - mean));
    let sd = (ss / T::from_usize_lossy(n - 1)).sqrt();
    (mean, T::lit(Z95) * sd / nf.sqrt())
}

/// Stream id for one (δ, realization) pair; the time index is the position
/// within the stream, so draws do not depend on scheduling.
fn noise_stream(delta_index: usize, realization: usize) -> u64 {
    ((delta_index as u64) << 32) | realization as u64
}

/// `base` with every interior sample shifted by an independent U[−δ/2, δ/2] draw.
pub fn noisy_pulse<T: Real>(
    base: &Pulse<T>,
    delta: T,
    seed: u64,
    delta_index: usize,
    realization: usize,
) -> Result<Pulse<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(noise_stream(delta_index, realization));
    let n = base.n_steps();
    let half = T::lit(0.5);
    let samples = base
        .samples()
        .iter()
        .enumerate()
        .map(|(i, &g)| {
            if i == 0 || i == n - 1 {
                g
            } else {
                let u = T::lit(rng.random::<f64>());
                g + (u - half) * delta
            }
        })
        .collect();
    base.with_samples(
        samples,
        format!(
            "{}+noise(delta={delta},seed={seed},r={realization})",
            base.provenance()
        ),
    )
}

pub fn dynamical_noise_study<T: Real>(cfg: &NoiseStudyConfig<T>) -> Result<RobustnessResult<T>> {
    cfg.validate()?;
    let chain = ChainConfig::<T>::new(cfg.n_spins)?;
    let n_spins = T::from_usize_lossy(cfg.n_spins);
    let per_delta = cfg
        .deltas
        .iter()
        .enumerate()
        .map(|(di, &delta)| {
            let densities: Vec<T> = (0..cfg.n_realizations)
                .into_par_iter()
                .map(|r| {
                    let p = noisy_pulse(&cfg.base_pulse, delta, cfg.seed, di, r)?;
                    Ok(defect_count(&p, &chain) / n_spins)
                })
                .collect::<Result<_>>()?;
            let (mean, ci) = mean_and_ci(&densities);
            Ok(NoisePoint {
                delta,
                mean_density: mean,
                ci_half_width: ci,
                n: densities.len(),
                samples: cfg.keep_samples.then_some(densities),
            })
        })
        .collect::<Result<_>>()?;
    Ok(RobustnessResult { per_delta })
}

/// Density when the chain starts in the ground state at g_i + δ instead of g_i.
pub fn initial_state_error<T: Real>(
    pulse: &Pulse<T>,
    chain: &ChainConfig<T>,
    delta: T,
) -> Result<T> {
    let prepared = pulse.initial_field() + delta;
    if prepared < T::zero() {
        return Err(Error::InvalidParameter(format!(
            "prepared field g_i + delta = {prepared} is negative"
        )));
    }
    Ok(defect_density_prepared(pulse, chain, prepared).density)
}

/// Nearest even integer, ties toward +∞.
pub fn round_even(x: f64) -> i64 {
    2 * (x / 2.0 + 0.5).floor() as i64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpinCountOutcome<T> {
    pub n_plus: usize,
    pub n_minus: usize,
    pub density_plus: T,
    pub density_minus: T,
    pub mean_density: T,
}

/// Runs the same pulse on chains of round_even(N(1 ± δ)) spins. The sizes are
/// computed in `f64`, so e.g. N = 100, δ = 0.15 gives 114.999… → 114 and
/// 85 → 86.
pub fn spin_count_error<T: Real>(
    pulse: &Pulse<T>,
    n_spins: usize,
    delta: T,
) -> Result<SpinCountOutcome<T>> {
    let d = delta.as_f64();
    let n = n_spins as f64;
    let sizes = [round_even(n * (1.0 + d)), round_even(n * (1.0 - d))];
    let mut out = [(0usize, T::zero()); 2];
    for (slot, size) in out.iter_mut().zip(sizes) {
        if size < 4 {
            return Err(Error::InvalidChainSize(size.max(0) as usize));
        }
        let chain = ChainConfig::<T>::new(size as usize)?;
        *slot = (
            size as usize,
            defect_count(pulse, &chain) / T::from_usize_lossy(size as usize),
        );
    }
    let [(n_plus, density_plus), (n_minus, density_minus)] = out;
    Ok(SpinCountOutcome {
        n_plus,
        n_minus,
        density_plus,
        density_minus,
        mean_density: T::lit(0.5) * (density_plus + density_minus),
    })
}
