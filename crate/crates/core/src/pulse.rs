// Copyright 2026 The critquench Authors
// SPDX-License-Identifier: Apache-2.0

//! Control fields g(t) sampled on the uniform, endpoint-inclusive grid
//! t_i = −T + i·Δt, Δt = 2T/(n − 1), with g(−T) = 2 and g(T) = 0.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::model::{ChainConfig, FIELD_FINAL, FIELD_INITIAL};
use crate::scalar::Real;

/// Number of grid points used when nothing else is requested.
pub const DEFAULT_STEPS: usize = 10_000;

const ENDPOINT_TOL: f64 = 1e-12;

/// Exponent of the power-law family g(r, t) = 1 − |t/T|^r sgn(t).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerParams<T> {
    r: T,
}

impl<T: Real> PowerParams<T> {
    pub fn new(r: T) -> Result<Self> {
        if !(r > T::zero()) || !r.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "power-law exponent must be positive and finite, got {r}"
            )));
        }
        Ok(Self { r })
    }

    pub fn r(&self) -> T {
        self.r
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pulse<T> {
    half_duration: T,
    samples: Vec<T>,
    provenance: String,
}

fn check_grid<T: Real>(half_duration: T, n_steps: usize) -> Result<()> {
    if !(half_duration > T::zero()) || !half_duration.is_finite() {
        return Err(Error::InvalidPulse(format!(
            "half-duration must be positive and finite, got {half_duration}"
        )));
    }
    if n_steps < 2 {
        return Err(Error::InvalidPulse(format!(
            "need at least 2 grid points, got {n_steps}"
        )));
    }
    Ok(())
}

/// Scaled times t_i/T = −1 + 2i/(n − 1); exact at both ends and at the midpoint.
fn scaled_times<T: Real>(n_steps: usize) -> impl Iterator<Item = T> {
    let denom = T::from_usize_lossy(n_steps - 1);
    (0..n_steps).map(move |i| T::from_usize_lossy(2 * i) / denom - T::one())
}

impl<T: Real> Pulse<T> {
    /// Builds a pulse from samples, enforcing the fixed endpoints.
    pub fn tabulated(samples: Vec<T>, half_duration: T) -> Result<Self> {
        Self::tabulated_with_provenance(samples, half_duration, "tabulated".into())
    }

    pub fn tabulated_with_provenance(
        samples: Vec<T>,
        half_duration: T,
        provenance: String,
    ) -> Result<Self> {
        check_grid(half_duration, samples.len())?;
        let (first, last) = (samples[0], samples[samples.len() - 1]);
        let tol = T::lit(ENDPOINT_TOL);
        if (first - T::lit(FIELD_INITIAL)).abs() > tol || (last - T::lit(FIELD_FINAL)).abs() > tol {
            return Err(Error::InvalidPulse(format!(
                "endpoints must be g(-T) = {FIELD_INITIAL} and g(T) = {FIELD_FINAL}, got {first} and {last}"
            )));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::InvalidPulse(format!(
                "non-finite sample at index {i}"
            )));
        }
        Ok(Self {
            half_duration,
            samples,
            provenance,
        })
    }

    /// No endpoint validation; for perturbation oracles only.
    #[cfg(test)]
    pub(crate) fn from_raw(samples: Vec<T>, half_duration: T) -> Self {
        Self {
            half_duration,
            samples,
            provenance: "raw".into(),
        }
    }

    pub fn half_duration(&self) -> T {
        self.half_duration
    }

    pub fn n_steps(&self) -> usize {
        self.samples.len()
    }

    pub fn samples(&self) -> &[T] {
        &self.samples
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn dt(&self) -> T {
        T::lit(2.0) * self.half_duration / T::from_usize_lossy(self.samples.len() - 1)
    }

    pub fn time(&self, i: usize) -> T {
        -self.half_duration + T::from_usize_lossy(i) * self.dt()
    }

    pub fn times(&self) -> impl Iterator<Item = T> + '_ {
        let dt = self.dt();
        (0..self.samples.len()).map(move |i| -self.half_duration + T::from_usize_lossy(i) * dt)
    }

    pub fn initial_field(&self) -> T {
        self.samples[0]
    }

    pub fn final_field(&self) -> T {
        self.samples[self.samples.len() - 1]
    }

    /// Field applied on step j, i.e. between t_j and t_{j+1}.
    #[inline]
    pub fn step_field(&self, j: usize) -> T {
        T::lit(0.5) * (self.samples[j] + self.samples[j + 1])
    }

    /// Same grid, new samples, endpoints re-validated.
    pub fn with_samples(&self, samples: Vec<T>, provenance: String) -> Result<Self> {
        if samples.len() != self.samples.len() {
            return Err(Error::InvalidPulse(format!(
                "expected {} samples, got {}",
                self.samples.len(),
                samples.len()
            )));
        }
        Self::tabulated_with_provenance(samples, self.half_duration, provenance)
    }

    /// FNV-1a over the sample bit patterns; identifies free-form iterates.
    pub fn checksum(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for s in &self.samples {
            for b in s.as_f64().to_bits().to_le_bytes() {
                h ^= u64::from(b);
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        }
        h
    }

    /// Two-column text: a `#` header with T, n_steps and provenance, then
    /// one `t g` row per grid point.
    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "# T={} n_steps={} provenance={}",
            self.half_duration,
            self.n_steps(),
            self.provenance
        )?;
        for (t, g) in self.times().zip(&self.samples) {
            writeln!(w, "{t} {g}")?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write_text(&mut buf)
            .expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("ASCII output")
    }

    pub fn read_text<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines.next().transpose()?.ok_or(Error::Parse {
            line: 1,
            reason: "empty input".into(),
        })?;
        let (half_duration, n_steps, provenance) = parse_header::<T>(&header)?;
        let mut samples = Vec::with_capacity(n_steps);
        for (idx, line) in lines.enumerate() {
            let line = line?;
            let lineno = idx + 2;
            if line.trim().is_empty() {
                continue;
            }
            let mut cols = line.split_whitespace();
            let (Some(_t), Some(g), None) = (cols.next(), cols.next(), cols.next()) else {
                return Err(Error::Parse {
                    line: lineno,
                    reason: "expected two columns".into(),
                });
            };
            let g = g.parse::<T>().map_err(|_| Error::Parse {
                line: lineno,
                reason: format!("bad field value {g:?}"),
            })?;
            samples.push(g);
        }
        if samples.len() != n_steps {
            return Err(Error::Parse {
                line: 1,
                reason: format!("header says {n_steps} rows, found {}", samples.len()),
            });
        }
        Self::tabulated_with_provenance(samples, half_duration, provenance)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        Self::read_text(text.as_bytes())
    }
}

fn parse_header<T: Real>(header: &str) -> Result<(T, usize, String)> {
    let bad = |reason: &str| Error::Parse {
        line: 1,
        reason: reason.into(),
    };
    let rest = header
        .strip_prefix('#')
        .ok_or_else(|| bad("missing '#' header"))?;
    let rest = rest.trim_start();
    let (t_tok, rest) = rest
        .split_once(' ')
        .ok_or_else(|| bad("truncated header"))?;
    let (n_tok, prov_tok) = rest
        .split_once(' ')
        .ok_or_else(|| bad("truncated header"))?;
    let t = t_tok
        .strip_prefix("T=")
        .and_then(|v| v.parse::<T>().ok())
        .ok_or_else(|| bad("bad T= field"))?;
    let n = n_tok
        .strip_prefix("n_steps=")
        .and_then(|v| v.parse::<usize>().ok())
        .ok_or_else(|| bad("bad n_steps= field"))?;
    let prov = prov_tok
        .strip_prefix("provenance=")
        .ok_or_else(|| bad("bad provenance= field"))?;
    Ok((t, n, prov.to_string()))
}

/// g(r, t) = 1 − |t/T|^r sgn(t).
pub fn power_pulse<T: Real>(r: T, half_duration: T, n_steps: usize) -> Result<Pulse<T>> {
    let params = PowerParams::new(r)?;
    check_grid(half_duration, n_steps)?;
    let samples = scaled_times::<T>(n_steps)
        .map(|x| power_profile(params.r(), x))
        .collect();
    Pulse::tabulated_with_provenance(samples, half_duration, format!("power(r={r})"))
}

#[inline]
pub(crate) fn power_profile<T: Real>(r: T, x: T) -> T {
    if x == T::zero() {
        T::one()
    } else {
        T::one() - x.abs().powf(r) * x.signum()
    }
}

/// g_l(t) = 1 − t/T.
pub fn linear_pulse<T: Real>(half_duration: T, n_steps: usize) -> Result<Pulse<T>> {
    check_grid(half_duration, n_steps)?;
    let samples = scaled_times::<T>(n_steps).map(|x| T::one() - x).collect();
    Pulse::tabulated_with_provenance(samples, half_duration, "linear".into())
}

/// Schedule that interpolates arctan((g + cos k_N)/sin k_N) linearly in t
/// between its values at g = 2 and g = 0, keeping the slowest mode's
/// adiabaticity parameter uniform along the path.
pub fn local_adiabatic_pulse<T: Real>(
    half_duration: T,
    n_spins: usize,
    n_steps: usize,
) -> Result<Pulse<T>> {
    check_grid(half_duration, n_steps)?;
    let k = ChainConfig::<T>::new(n_spins)?.slowest_mode();
    let (sk, ck) = k.sin_cos();
    let start = ((T::lit(FIELD_INITIAL) + ck) / sk).atan();
    let end = ((T::lit(FIELD_FINAL) + ck) / sk).atan();
    let half = T::lit(0.5);
    let mut samples: Vec<T> = scaled_times::<T>(n_steps)
        .map(|x| {
            let a = half * ((T::one() - x) * start + (T::one() + x) * end);
            sk * a.tan() - ck
        })
        .collect();
    // tan∘atan is exact only up to rounding; pin the endpoints.
    samples[0] = T::lit(FIELD_INITIAL);
    samples[n_steps - 1] = T::lit(FIELD_FINAL);
    Pulse::tabulated_with_provenance(
        samples,
        half_duration,
        format!("local_adiabatic(N={n_spins})"),
    )
}

pub fn tabulated_pulse<T: Real>(samples: Vec<T>, half_duration: T) -> Result<Pulse<T>> {
    Pulse::tabulated(samples, half_duration)
}
