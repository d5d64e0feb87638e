// Copyright 2026 The critquench Authors
// SPDX-License-Identifier: Apache-2.0

//! Descent on the final defect count D.
//!
//! The power-law optimizer follows the one-parameter flow
//! dr/ds = −dD/dr, so that dD/ds = −(dD/dr)² ≤ 0, discretized by explicit
//! steps in s with backtracking: a step that would raise D is halved until
//! it does not. After an accepted step the next trial step is the secant
//! (Barzilai–Borwein) estimate of 1/D'' when the curvature is positive and
//! double the previous step otherwise.
//!
//! The free-form optimizer applies the same scheme to every interior sample
//! of a tabulated pulse, with the endpoints frozen.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gradient::{defect_gradient, exponent_derivative, power_direction};
use crate::model::ChainConfig;
use crate::propagate::defect_count;
use crate::pulse::{power_pulse, Pulse, DEFAULT_STEPS};
use crate::scalar::Real;

const MAX_HALVINGS: usize = 60;

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig<T> {
    pub initial_r: T,
    /// Initial step in the flow parameter s.
    pub step_size: T,
    pub max_iters: usize,
    /// Stop once |dD/dr| (power law) or the interior max-norm of δD/δg
    /// (free form) falls to this value.
    pub grad_tol: T,
    /// Closed interval the exponent must stay in.
    pub r_bounds: (T, T),
    pub n_steps: usize,
    /// Weight of the Σ(g_{i+1} − g_i)²/Δt smoothness penalty in free-form
    /// descent; zero disables it.
    pub smoothness: T,
}

impl<T: Real> OptimizerConfig<T> {
    /// Defaults scaled to a chain of `n_spins` spins: grad_tol = 1e-10·N.
    pub fn for_chain(n_spins: usize) -> Self {
        Self {
            initial_r: T::one(),
            step_size: T::one(),
            max_iters: 10_000,
            grad_tol: T::lit(1e-10) * T::from_usize_lossy(n_spins),
            r_bounds: (T::lit(0.05), T::lit(200.0)),
            n_steps: DEFAULT_STEPS,
            smoothness: T::zero(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        let (lo, hi) = self.r_bounds;
        if !(self.step_size > T::zero()) {
            return bad(format!(
                "step_size must be positive, got {}",
                self.step_size
            ));
        }
        if !(self.grad_tol > T::zero()) {
            return bad(format!("grad_tol must be positive, got {}", self.grad_tol));
        }
        if !(lo > T::zero() && lo < hi && hi.is_finite()) {
            return bad(format!(
                "r_bounds must satisfy 0 < lo < hi < inf, got ({lo}, {hi})"
            ));
        }
        if !(self.initial_r >= lo && self.initial_r <= hi) {
            return bad(format!(
                "initial_r {} outside r_bounds ({lo}, {hi})",
                self.initial_r
            ));
        }
        if self.n_steps < 3 {
            return bad(format!("n_steps must be at least 3, got {}", self.n_steps));
        }
        if !(self.smoothness >= T::zero()) {
            return bad(format!(
                "smoothness must be non-negative, got {}",
                self.smoothness
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Converged,
    MaxIters,
    /// No step size reduced the objective; the iterate is a numerical minimum.
    Stalled,
    /// The exponent sits on a bound with the flow pointing outward.
    BoundReached,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Iterate<T> {
    pub iter: usize,
    /// Flow parameter.
    pub s: T,
    /// Exponent, for power-law runs.
    pub r: Option<T>,
    /// Pulse checksum, for free-form runs.
    pub checksum: u64,
    pub defects: T,
    /// dD/ds along the flow.
    pub slope: T,
    /// |dD/dr| or the interior gradient max-norm.
    pub grad_norm: T,
}

#[derive(Debug, Clone)]
pub struct OptimizationTrace<T> {
    pub iterates: Vec<Iterate<T>>,
    pub converged: bool,
    pub stop_reason: StopReason,
    /// Whether any accepted step was clipped by `r_bounds`.
    pub hit_bound: bool,
    pub final_pulse: Pulse<T>,
    pub final_defects: T,
    pub final_r: Option<T>,
}

impl<T: Real> OptimizationTrace<T> {
    pub fn iterations(&self) -> usize {
        self.iterates.len().saturating_sub(1)
    }

    /// Accepted-iterate D sequence is non-increasing.
    pub fn is_monotone(&self) -> bool {
        self.iterates
            .windows(2)
            .all(|w| w[1].defects <= w[0].defects)
    }

    /// CSV with header `iter,s,r,D,grad`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["iter", "s", "r", "D", "grad"])?;
        for it in &self.iterates {
            wtr.write_record([
                it.iter.to_string(),
                it.s.to_string(),
                it.r.map(|r| r.to_string()).unwrap_or_default(),
                it.defects.to_string(),
                it.grad_norm.to_string(),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// D for the power-law pulse with exponent r; shared by the optimizer and
/// the landscape scan.
pub fn power_objective<T: Real>(
    chain: &ChainConfig<T>,
    half_duration: T,
    r: T,
    n_steps: usize,
) -> Result<T> {
    Ok(defect_count(
        &power_pulse(r, half_duration, n_steps)?,
        chain,
    ))
}

/// dD/dr at r via the functional gradient and the chain rule.
pub fn power_slope<T: Real>(
    chain: &ChainConfig<T>,
    half_duration: T,
    r: T,
    n_steps: usize,
) -> Result<T> {
    let pulse = power_pulse(r, half_duration, n_steps)?;
    let dir = power_direction(r, half_duration, n_steps)?;
    Ok(exponent_derivative(&defect_gradient(&pulse, chain), &dir))
}

pub fn optimize_power<T: Real>(
    chain: &ChainConfig<T>,
    half_duration: T,
    cfg: &OptimizerConfig<T>,
) -> Result<OptimizationTrace<T>> {
    cfg.validate()?;
    let n = cfg.n_steps;
    let (lo, hi) = cfg.r_bounds;
    let mut r = cfg.initial_r;
    let mut d = power_objective(chain, half_duration, r, n)?;
    let mut slope = power_slope(chain, half_duration, r, n)?;
    let mut s = T::zero();
    let mut step = cfg.step_size;
    let mut hit_bound = false;
    let mut iterates = vec![Iterate {
        iter: 0,
        s,
        r: Some(r),
        checksum: 0,
        defects: d,
        slope: -slope * slope,
        grad_norm: slope.abs(),
    }];

    let stop_reason = loop {
        if slope.abs() <= cfg.grad_tol {
            break StopReason::Converged;
        }
        if iterates.len() > cfg.max_iters {
            break StopReason::MaxIters;
        }
        let velocity = -slope;
        if (r <= lo && velocity < T::zero()) || (r >= hi && velocity > T::zero()) {
            break StopReason::BoundReached;
        }
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let raw = r + step * velocity;
            let clipped = raw.max(lo).min(hi);
            if clipped == r {
                break;
            }
            let d_try = power_objective(chain, half_duration, clipped, n)?;
            if d_try <= d {
                accepted = Some((clipped, d_try, clipped != raw));
                break;
            }
            step = step * T::lit(0.5);
        }
        let Some((r_new, d_new, clipped)) = accepted else {
            break StopReason::Stalled;
        };
        hit_bound |= clipped;
        let slope_new = power_slope(chain, half_duration, r_new, n)?;
        let ds = (r_new - r) / velocity;
        let curvature = (slope_new - slope) / (r_new - r);
        step = if curvature > T::zero() {
            T::one() / curvature
        } else {
            step * T::lit(2.0)
        };
        s = s + ds;
        r = r_new;
        d = d_new;
        slope = slope_new;
        iterates.push(Iterate {
            iter: iterates.len(),
            s,
            r: Some(r),
            checksum: 0,
            defects: d,
            slope: -slope * slope,
            grad_norm: slope.abs(),
        });
    };

    Ok(OptimizationTrace {
        converged: stop_reason == StopReason::Converged,
        stop_reason,
        hit_bound,
        final_pulse: power_pulse(r, half_duration, n)?,
        final_defects: d,
        final_r: Some(r),
        iterates,
    })
}

/// Σ(g_{i+1} − g_i)²/Δt and its gradient density with respect to each sample.
fn smoothness_penalty<T: Real>(pulse: &Pulse<T>, weight: T) -> (T, Vec<T>) {
    let s = pulse.samples();
    let dt = pulse.dt();
    let n = s.len();
    let mut grad = vec![T::zero(); n];
    if weight == T::zero() {
        return (T::zero(), grad);
    }
    let mut value = T::zero();
    let two = T::lit(2.0);
    for i in 0..n - 1 {
        let diff = s[i + 1] - s[i];
        value = value + diff * diff / dt;
        grad[i] = grad[i] - two * diff / (dt * dt);
        grad[i + 1] = grad[i + 1] + two * diff / (dt * dt);
    }
    (
        weight * value,
        grad.into_iter().map(|g| weight * g).collect(),
    )
}

struct FreeEval<T> {
    pulse: Pulse<T>,
    defects: T,
    objective: T,
    /// Gradient density of the objective; endpoints zeroed.
    grad: Vec<T>,
}

fn free_eval<T: Real>(pulse: Pulse<T>, chain: &ChainConfig<T>, weight: T) -> FreeEval<T> {
    let defects = defect_count(&pulse, chain);
    let (penalty, pgrad) = smoothness_penalty(&pulse, weight);
    let mut grad: Vec<T> = defect_gradient(&pulse, chain)
        .values
        .into_iter()
        .zip(pgrad)
        .map(|(a, b)| a + b)
        .collect();
    let n = grad.len();
    grad[0] = T::zero();
    grad[n - 1] = T::zero();
    FreeEval {
        pulse,
        defects,
        objective: defects + penalty,
        grad,
    }
}

fn max_abs<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |m, x| m.max(x.abs()))
}

/// Gradient descent over all interior samples of `initial`.
pub fn optimize_free<T: Real>(
    chain: &ChainConfig<T>,
    initial: &Pulse<T>,
    cfg: &OptimizerConfig<T>,
) -> Result<OptimizationTrace<T>> {
    if !(cfg.step_size > T::zero()) || !(cfg.grad_tol > T::zero()) {
        return Err(Error::InvalidParameter(
            "step_size and grad_tol must be positive".into(),
        ));
    }
    if !(cfg.smoothness >= T::zero()) {
        return Err(Error::InvalidParameter(
            "smoothness must be non-negative".into(),
        ));
    }
    let weight = cfg.smoothness;
    let mut cur = free_eval(initial.clone(), chain, weight);
    let mut step = cfg.step_size;
    let mut s = T::zero();
    let norm0 = max_abs(&cur.grad);
    let mut iterates = vec![Iterate {
        iter: 0,
        s,
        r: None,
        checksum: cur.pulse.checksum(),
        defects: cur.defects,
        slope: -dot(&cur.grad, &cur.grad) * cur.pulse.dt(),
        grad_norm: norm0,
    }];

    let stop_reason = loop {
        if max_abs(&cur.grad) <= cfg.grad_tol {
            break StopReason::Converged;
        }
        if iterates.len() > cfg.max_iters {
            break StopReason::MaxIters;
        }
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let samples: Vec<T> = cur
                .pulse
                .samples()
                .iter()
                .zip(&cur.grad)
                .map(|(g, d)| *g - step * *d)
                .collect();
            if samples == cur.pulse.samples() {
                break;
            }
            let trial = cur
                .pulse
                .with_samples(samples, format!("free(iter={})", iterates.len()))?;
            let defects = defect_count(&trial, chain);
            let (penalty, _) = smoothness_penalty(&trial, weight);
            if defects + penalty < cur.objective {
                accepted = Some(trial);
                break;
            }
            step = step * T::lit(0.5);
        }
        let Some(trial) = accepted else {
            break StopReason::Stalled;
        };
        let next = free_eval(trial, chain, weight);
        // Barzilai–Borwein: ⟨Δx, Δx⟩ / ⟨Δx, Δgrad⟩ with Δx = −step·grad.
        let dx: Vec<T> = cur.grad.iter().map(|g| -step * *g).collect();
        let dy: Vec<T> = next
            .grad
            .iter()
            .zip(&cur.grad)
            .map(|(a, b)| *a - *b)
            .collect();
        let curv = dot(&dx, &dy);
        step = if curv > T::zero() {
            dot(&dx, &dx) / curv
        } else {
            step * T::lit(2.0)
        };
        s = s + (dot(&dx, &dx)).sqrt();
        cur = next;
        iterates.push(Iterate {
            iter: iterates.len(),
            s,
            r: None,
            checksum: cur.pulse.checksum(),
            defects: cur.defects,
            slope: -dot(&cur.grad, &cur.grad) * cur.pulse.dt(),
            grad_norm: max_abs(&cur.grad),
        });
    };

    Ok(OptimizationTrace {
        converged: stop_reason == StopReason::Converged,
        stop_reason,
        hit_bound: false,
        final_defects: cur.defects,
        final_pulse: cur.pulse,
        final_r: None,
        iterates,
    })
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (x, y)| acc + *x * *y)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LandscapePoint<T> {
    pub r: T,
    pub defects: T,
}

#[derive(Debug, Clone)]
pub struct Landscape<T> {
    pub points: Vec<LandscapePoint<T>>,
    /// Indices of interior strict local minima.
    pub minima: Vec<usize>,
}

impl<T: Real> Landscape<T> {
    pub fn global_minimum(&self) -> LandscapePoint<T> {
        *self
            .points
            .iter()
            .min_by(|a, b| a.defects.partial_cmp(&b.defects).expect("finite D"))
            .expect("non-empty scan")
    }

    /// CSV with header `r,D,is_local_min`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["r", "D", "is_local_min"])?;
        for (i, p) in self.points.iter().enumerate() {
            wtr.write_record([
                p.r.to_string(),
                p.defects.to_string(),
                u8::from(self.minima.contains(&i)).to_string(),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Interior points strictly below both neighbours.
pub fn local_minima<T: Real>(values: &[T]) -> Vec<usize> {
    (1..values.len().saturating_sub(1))
        .filter(|&i| values[i] < values[i - 1] && values[i] < values[i + 1])
        .collect()
}

/// Evaluates D(r) over `r_grid`.
pub fn landscape_scan<T: Real>(
    chain: &ChainConfig<T>,
    half_duration: T,
    r_grid: &[T],
    n_steps: usize,
) -> Result<Landscape<T>> {
    if r_grid.is_empty() {
        return Err(Error::InvalidParameter("empty exponent grid".into()));
    }
    if !(r_grid[0] > T::zero()) || r_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParameter(
            "exponent grid must be positive and strictly increasing".into(),
        ));
    }
    let defects: Vec<T> = r_grid
        .par_iter()
        .map(|&r| power_objective(chain, half_duration, r, n_steps))
        .collect::<Result<_>>()?;
    let minima = local_minima(&defects);
    Ok(Landscape {
        points: r_grid
            .iter()
            .zip(&defects)
            .map(|(&r, &d)| LandscapePoint { r, defects: d })
            .collect(),
        minima,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pulse::power_pulse;

    fn cfg(n_spins: usize, r0: f64, n_steps: usize) -> OptimizerConfig<f64> {
        OptimizerConfig {
            initial_r: r0,
            n_steps,
            max_iters: 200,
            ..OptimizerConfig::for_chain(n_spins)
        }
    }

    #[test]
    fn rejects_bad_config() {
        let chain = ChainConfig::new(8).unwrap();
        let mut c = cfg(8, 1.0, 100);
        c.step_size = 0.0;
        assert!(optimize_power(&chain, 1.0, &c).is_err());
        let mut c = cfg(8, 1.0, 100);
        c.initial_r = 500.0;
        assert!(optimize_power(&chain, 1.0, &c).is_err());
        let mut c = cfg(8, 1.0, 100);
        c.r_bounds = (0.0, 10.0);
        assert!(c.validate().is_err());
    }

    #[test]
    fn power_flow_descends_and_converges() {
        let chain = ChainConfig::new(16).unwrap();
        let trace = optimize_power(&chain, 4.0, &cfg(16, 1.0, 2000)).unwrap();
        assert!(trace.is_monotone());
        assert!(trace.converged, "{:?}", trace.stop_reason);
        let r = trace.final_r.unwrap();
        assert!(power_slope(&chain, 4.0, r, 2000).unwrap().abs() <= 16e-10);
        let d = trace.final_defects;
        for f in [0.99, 1.01] {
            assert!(power_objective(&chain, 4.0, r * f, 2000).unwrap() >= d);
        }
    }

    #[test]
    fn flow_sign_identity() {
        // dr/ds = ∫ |t/T|^r sgn(t) ln|t/T| δD/δg dt equals −dD/dr.
        let chain = ChainConfig::new(12).unwrap();
        let (r, t, n) = (2.0f64, 2.0, 4001);
        let pulse = power_pulse(r, t, n).unwrap();
        let grad = defect_gradient(&pulse, &chain);
        let flow: f64 = pulse
            .times()
            .zip(&grad.values)
            .map(|(ti, g)| {
                let x = ti / t;
                if x == 0.0 || x.abs() == 1.0 {
                    0.0
                } else {
                    x.abs().powf(r) * x.signum() * x.abs().ln() * g
                }
            })
            .sum::<f64>()
            * grad.dt;
        let slope = power_slope(&chain, t, r, n).unwrap();
        assert!((flow + slope).abs() < 1e-12 * (1.0 + slope.abs()));
    }

    #[test]
    fn stationary_start_returns_immediately() {
        let chain = ChainConfig::new(12).unwrap();
        let first = optimize_power(&chain, 3.0, &cfg(12, 2.0, 1000)).unwrap();
        assert!(first.converged);
        let mut c = cfg(12, first.final_r.unwrap(), 1000);
        c.grad_tol = first.iterates.last().unwrap().grad_norm * 1.0001;
        let again = optimize_power(&chain, 3.0, &c).unwrap();
        assert_eq!(again.iterations(), 0);
        assert!(again.converged);
    }

    #[test]
    fn bound_is_reported() {
        let chain = ChainConfig::new(8).unwrap();
        let mut c = cfg(8, 1.0, 500);
        c.r_bounds = (0.5, 1.05);
        // Optimum at this duration lies well above 1.05.
        let trace = optimize_power(&chain, 3.0, &c).unwrap();
        assert!(trace.hit_bound);
        assert_eq!(trace.stop_reason, StopReason::BoundReached);
        assert!(!trace.converged);
        assert_eq!(trace.final_r, Some(1.05));
    }

    #[test]
    fn free_descent_keeps_endpoints_and_descends() {
        let chain = ChainConfig::new(10).unwrap();
        let start = power_pulse(1.0, 2.0, 400).unwrap();
        let mut c = cfg(10, 1.0, 400);
        c.max_iters = 15;
        c.step_size = 0.05;
        let trace = optimize_free(&chain, &start, &c).unwrap();
        assert!(trace.iterations() >= 1);
        assert!(trace.is_monotone());
        assert!(trace.iterates[1].defects < trace.iterates[0].defects);
        assert_eq!(trace.final_pulse.initial_field(), 2.0);
        assert_eq!(trace.final_pulse.final_field(), 0.0);
        assert!(!trace.converged);
        assert_eq!(trace.stop_reason, StopReason::MaxIters);
    }

    #[test]
    fn smoothing_penalty_gradient() {
        let p = power_pulse(2.0f64, 1.0, 50).unwrap();
        let (_, g) = smoothness_penalty(&p, 0.3);
        let h = 1e-6;
        let shifted = |i: usize, d: f64| {
            let mut s = p.samples().to_vec();
            s[i] += d;
            smoothness_penalty(&Pulse::from_raw(s, 1.0), 0.3).0
        };
        for i in [5usize, 20, 33] {
            let fd = (shifted(i, h) - shifted(i, -h)) / (2.0 * h * p.dt());
            assert!(
                (fd - g[i]).abs() < 1e-6 * (1.0 + g[i].abs()),
                "{fd} vs {}",
                g[i]
            );
        }
    }

    #[test]
    fn smoothed_free_descent_runs() {
        let chain = ChainConfig::new(8).unwrap();
        let start = power_pulse(1.5, 1.5, 200).unwrap();
        let mut c = cfg(8, 1.0, 200);
        c.max_iters = 5;
        c.smoothness = 1e-3;
        let trace = optimize_free(&chain, &start, &c).unwrap();
        assert!(trace.iterations() >= 1);
    }

    #[test]
    fn landscape_matches_objective_bitwise() {
        let chain = ChainConfig::new(12).unwrap();
        let grid = [0.5f64, 1.0, 2.0, 4.0, 8.0];
        let scan = landscape_scan(&chain, 2.0, &grid, 1500).unwrap();
        for p in &scan.points {
            let d = power_objective(&chain, 2.0, p.r, 1500).unwrap();
            assert_eq!(d.to_bits(), p.defects.to_bits());
        }
        assert!(landscape_scan(&chain, 2.0, &[1.0, 1.0], 100).is_err());
        assert!(landscape_scan(&chain, 2.0, &[0.0, 1.0], 100).is_err());
    }

    #[test]
    fn minima_detection() {
        assert_eq!(local_minima(&[3.0, 1.0, 2.0, 0.5, 0.7, 0.1]), vec![1, 3]);
        assert!(local_minima::<f64>(&[1.0, 1.0, 1.0]).is_empty());
        assert!(local_minima::<f64>(&[]).is_empty());
    }
}
