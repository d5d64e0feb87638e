// Copyright 2026 The critquench Authors
// SPDX-License-Identifier: Apache-2.0

//! Functional gradient δD/δg(t) of the final defect count.
//!
//! For free-fermion chains the gradient reduces to a sum over mode pairs,
//!
//! ```text
//! δD/δg(t) = 2 Im Σ_k ⟨φ_k(T)|O_k|φ̄_k(T)⟩ ⟨φ̄_k(t)|F_k|φ_k(t)⟩,
//! ```
//!
//! with O_k = 2·|E_k(g_f)⟩⟨E_k(g_f)| (twice the kink projector) and
//! F_k = ∂H_k/∂g = −2·1 − 2σ_z in the working basis. The identity part of F_k
//! drops out because ⟨φ̄_k|φ_k⟩ = 0 at all times.
//!
//! The finite-difference oracle differentiates the same discretized D
//! directly, so it shares no code path with the adjoint formula beyond the
//! step propagator.

use std::io::Write;

use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{excited_state, ground_state, mode_hamiltonian, ChainConfig, ModeState};
use crate::op2::Op2;
use crate::propagate::{evolve_mode, step_unitary};
use crate::pulse::Pulse;
use crate::scalar::Real;

/// Where the gradient density is sampled on the time grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Placement {
    /// Integrand integrated exactly over each piecewise-constant step and
    /// averaged onto grid points; the exact derivative of the discretized D.
    #[default]
    Cell,
    /// Integrand evaluated at the grid states φ_k(t_i), φ̄_k(t_i).
    Point,
}

/// δD/δg(t_i) on the pulse grid. Endpoint entries are reported for
/// completeness; the endpoints are never optimized.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField<T> {
    pub values: Vec<T>,
    pub half_duration: T,
    pub dt: T,
}

impl<T: Real> GradientField<T> {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time(&self, i: usize) -> T {
        -self.half_duration + T::from_usize_lossy(i) * self.dt
    }

    pub fn interior(&self) -> &[T] {
        &self.values[1..self.values.len() - 1]
    }

    /// Max-norm over interior points.
    pub fn interior_max_norm(&self) -> T {
        self.interior()
            .iter()
            .fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// max_i |a_i − b_i| / max_i |b_i| over interior points.
    pub fn relative_error_to(&self, reference: &Self) -> T {
        let diff = self
            .interior()
            .iter()
            .zip(reference.interior())
            .fold(T::zero(), |m, (a, b)| m.max((*a - *b).abs()));
        diff / reference.interior_max_norm()
    }

    /// Two-column text `t grad` with a header row.
    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# t dD/dg")?;
        for (i, v) in self.values.iter().enumerate() {
            writeln!(w, "{} {}", self.time(i), v)?;
        }
        Ok(())
    }
}

/// ∂H_k/∂g without its identity part.
fn control_operator<T: Real>() -> Op2<T> {
    Op2::sigma_z().scale(Complex::from(T::lit(-2.0)))
}

/// ⟨φ_k(T)|O_k|φ̄_k(T)⟩ with O_k = 2|E_f⟩⟨E_f|.
fn final_weight<T: Real>(k: T, g_f: T, phi: &ModeState<T>, phi_bar: &ModeState<T>) -> Complex<T> {
    let e = excited_state(k, g_f);
    phi.inner(&e) * e.inner(phi_bar) * T::lit(2.0)
}

/// ∫_0^dt ⟨φ̄|e^{iHτ} F e^{−iHτ}|φ⟩ dτ for the frozen step Hamiltonian,
/// evaluated in its eigenbasis (eigenvalues ∓Λ about the shift).
fn step_integral<T: Real>(
    k: T,
    g: T,
    dt: T,
    phi: &ModeState<T>,
    phi_bar: &ModeState<T>,
) -> Complex<T> {
    let lambda = mode_hamiltonian(k, g).lambda();
    let gs = ground_state(k, g);
    let ex = excited_state(k, g);
    let (a_g, a_e) = (gs.inner(phi), ex.inner(phi));
    let (b_g, b_e) = (gs.inner(phi_bar), ex.inner(phi_bar));
    // F = −2σ_z expressed in {G, E}; cos/sin of 2θ recovered from the state.
    let (c, s) = (gs.amplitudes[0].re, gs.amplitudes[1].re);
    let cos2 = c * c - s * s;
    let sin2 = T::lit(2.0) * c * s;
    let two = T::lit(2.0);
    let f_gg = -two * cos2;
    let f_ee = two * cos2;
    let f_ge = two * sin2;
    // ∫ e^{−2iΛτ} dτ over [0, dt].
    let x = two * lambda * dt;
    let w = if x.abs() < T::lit(1e-8) {
        Complex::new(dt, -lambda * dt * dt)
    } else {
        Complex::new(x.sin(), x.cos() - T::one()) / (two * lambda)
    };
    (b_g.conj() * a_g * f_gg + b_e.conj() * a_e * f_ee) * dt
        + (b_g.conj() * a_e * w + b_e.conj() * a_g * w.conj()) * f_ge
}

fn mode_gradient<T: Real>(k: T, pulse: &Pulse<T>, placement: Placement) -> Vec<T> {
    let ev = evolve_mode(k, pulse, true);
    let traj = ev.trajectory.expect("trajectory requested");
    let weight = final_weight(k, pulse.final_field(), &ev.phi, &ev.phi_bar);
    let two = T::lit(2.0);
    let n = pulse.n_steps();
    match placement {
        Placement::Point => {
            let f = control_operator::<T>();
            traj.iter()
                .map(|(phi, phi_bar)| {
                    two * (weight * f.sandwich(phi_bar.amplitudes, phi.amplitudes)).im
                })
                .collect()
        }
        Placement::Cell => {
            let dt = pulse.dt();
            let cells: Vec<T> = (0..n - 1)
                .map(|j| {
                    let (phi, phi_bar) = &traj[j];
                    let i = step_integral(k, pulse.step_field(j), dt, phi, phi_bar);
                    two * (weight * i).im
                })
                .collect();
            // Sample i feeds half of steps i−1 and i.
            let half = T::lit(0.5) / dt;
            (0..n)
                .map(|i| {
                    let left = if i > 0 { cells[i - 1] } else { T::zero() };
                    let right = if i < n - 1 { cells[i] } else { T::zero() };
                    (left + right) * half
                })
                .collect()
        }
    }
}

fn reduce_modes<T: Real>(per_mode: Vec<Vec<T>>, n: usize) -> Vec<T> {
    let mut total = vec![T::zero(); n];
    for contrib in per_mode {
        for (t, c) in total.iter_mut().zip(contrib) {
            *t = *t + c;
        }
    }
    total
}

pub fn defect_gradient<T: Real>(pulse: &Pulse<T>, chain: &ChainConfig<T>) -> GradientField<T> {
    defect_gradient_with(pulse, chain, Placement::Cell)
}

pub fn defect_gradient_with<T: Real>(
    pulse: &Pulse<T>,
    chain: &ChainConfig<T>,
    placement: Placement,
) -> GradientField<T> {
    let per_mode: Vec<Vec<T>> = chain
        .momenta()
        .par_iter()
        .map(|&k| mode_gradient(k, pulse, placement))
        .collect();
    GradientField {
        values: reduce_modes(per_mode, pulse.n_steps()),
        half_duration: pulse.half_duration(),
        dt: pulse.dt(),
    }
}

/// Central differences of D with respect to each sample, divided by Δt.
///
/// Perturbing sample i only changes steps i−1 and i, so each perturbed D is
/// assembled from cached forward states and backward co-states of the
/// unperturbed run. Endpoint perturbations also move the prepared initial
/// state or the final reference state.
pub fn finite_difference_gradient<T: Real>(
    pulse: &Pulse<T>,
    chain: &ChainConfig<T>,
    h: T,
) -> Result<GradientField<T>> {
    if !(h > T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "perturbation size must be positive, got {h}"
        )));
    }
    let n = pulse.n_steps();
    let per_mode: Vec<Vec<T>> = chain
        .momenta()
        .par_iter()
        .map(|&k| mode_probability_differences(k, pulse, h))
        .collect();
    let scale = T::lit(2.0) / (T::lit(2.0) * h * pulse.dt());
    let values = reduce_modes(per_mode, n)
        .into_iter()
        .map(|d| d * scale)
        .collect();
    Ok(GradientField {
        values,
        half_duration: pulse.half_duration(),
        dt: pulse.dt(),
    })
}

/// P_k(s_i + h) − P_k(s_i − h) for every sample i.
fn mode_probability_differences<T: Real>(k: T, pulse: &Pulse<T>, h: T) -> Vec<T> {
    let n = pulse.n_steps();
    let s = pulse.samples();
    let dt = pulse.dt();
    let half = T::lit(0.5);
    let unitaries: Vec<Op2<T>> = (0..n - 1)
        .map(|j| step_unitary(k, pulse.step_field(j), dt))
        .collect();
    // forward[j] = state at t_j; backward[j]† propagates from t_j to ⟨E_f|.
    let mut forward = Vec::with_capacity(n);
    forward.push(ground_state(k, s[0]).amplitudes);
    for u in &unitaries {
        let last = *forward.last().expect("seeded");
        forward.push(u.apply(last));
    }
    let mut backward = vec![[Complex::from(T::zero()); 2]; n];
    backward[n - 1] = excited_state(k, s[n - 1]).amplitudes;
    for j in (0..n - 1).rev() {
        backward[j] = unitaries[j].adjoint().apply(backward[j + 1]);
    }
    let amp = |chi: [Complex<T>; 2], psi: [Complex<T>; 2]| {
        (chi[0].conj() * psi[0] + chi[1].conj() * psi[1]).norm_sqr()
    };
    let perturbed = |i: usize, v: T| -> T {
        let mid = |left: T, right: T| step_unitary(k, half * (left + right), dt);
        if n == 2 {
            let start = if i == 0 {
                ground_state(k, v).amplitudes
            } else {
                forward[0]
            };
            let end = if i == 1 {
                excited_state(k, v).amplitudes
            } else {
                backward[1]
            };
            let (l, r) = if i == 0 { (v, s[1]) } else { (s[0], v) };
            return amp(end, mid(l, r).apply(start));
        }
        if i == 0 {
            let start = ground_state(k, v).amplitudes;
            amp(backward[1], mid(v, s[1]).apply(start))
        } else if i == n - 1 {
            let end = excited_state(k, v).amplitudes;
            amp(end, mid(s[n - 2], v).apply(forward[n - 2]))
        } else {
            let a = mid(s[i - 1], v).apply(forward[i - 1]);
            let b = mid(v, s[i + 1]).apply(a);
            amp(backward[i + 1], b)
        }
    };
    (0..n)
        .map(|i| perturbed(i, s[i] + h) - perturbed(i, s[i] - h))
        .collect()
}

/// ∂g(r, t_i)/∂r = −|t_i/T|^r sgn(t_i) ln|t_i/T|, zero at t = 0 and t = ±T.
pub fn power_direction<T: Real>(r: T, half_duration: T, n_steps: usize) -> Result<Vec<T>> {
    if !(r > T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "power-law exponent must be positive, got {r}"
        )));
    }
    if !(half_duration > T::zero()) || n_steps < 2 {
        return Err(Error::InvalidPulse("bad grid".into()));
    }
    let denom = T::from_usize_lossy(n_steps - 1);
    Ok((0..n_steps)
        .map(|i| {
            let x = T::from_usize_lossy(2 * i) / denom - T::one();
            let a = x.abs();
            if a == T::zero() || a == T::one() {
                T::zero()
            } else {
                -a.powf(r) * x.signum() * a.ln()
            }
        })
        .collect())
}

/// dD/dr = Δt Σ_i δD/δg(t_i) ∂g/∂r(t_i). With [`Placement::Cell`] this is
/// the exact chain rule for the discretized objective.
pub fn exponent_derivative<T: Real>(gradient: &GradientField<T>, direction: &[T]) -> T {
    gradient.dt
        * gradient
            .values
            .iter()
            .zip(direction)
            .fold(T::zero(), |acc, (g, d)| acc + *g * *d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::propagate::{defect_count, evolve_mode};
    use crate::pulse::power_pulse;

    /// Full re-propagation for each perturbed sample.
    fn brute_force_fd(pulse: &Pulse<f64>, chain: &ChainConfig<f64>, h: f64) -> Vec<f64> {
        (0..pulse.n_steps())
            .map(|i| {
                let mut up = pulse.samples().to_vec();
                let mut dn = up.clone();
                up[i] += h;
                dn[i] -= h;
                let dp = defect_count(&Pulse::from_raw(up, pulse.half_duration()), chain);
                let dm = defect_count(&Pulse::from_raw(dn, pulse.half_duration()), chain);
                (dp - dm) / (2.0 * h * pulse.dt())
            })
            .collect()
    }

    #[test]
    fn cached_fd_matches_brute_force() {
        let chain = ChainConfig::new(6).unwrap();
        let pulse = power_pulse(1.7, 1.5, 41).unwrap();
        let fast = finite_difference_gradient(&pulse, &chain, 1e-5).unwrap();
        let slow = brute_force_fd(&pulse, &chain, 1e-5);
        for (a, b) in fast.values.iter().zip(&slow) {
            assert!((a - b).abs() < 1e-7 * (1.0 + b.abs()), "{a} vs {b}");
        }
        // two-point grid exercises the degenerate branch
        let tiny = Pulse::tabulated(vec![2.0, 0.0], 0.3).unwrap();
        let fast = finite_difference_gradient(&tiny, &chain, 1e-5).unwrap();
        let slow = brute_force_fd(&tiny, &chain, 1e-5);
        for (a, b) in fast.values.iter().zip(&slow) {
            assert!((a - b).abs() < 1e-7 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn cell_gradient_matches_oracle() {
        let chain = ChainConfig::new(24).unwrap();
        let pulse = power_pulse(2.0, 3.0, 10_000).unwrap();
        let analytic = defect_gradient(&pulse, &chain);
        for h in [1e-4, 1e-5, 1e-6] {
            let fd = finite_difference_gradient(&pulse, &chain, h).unwrap();
            let err = analytic.relative_error_to(&fd);
            assert!(err < 1e-6, "h={h}: relative error {err}");
        }
    }

    #[test]
    fn point_gradient_converges_to_cell() {
        let chain = ChainConfig::new(12).unwrap();
        let pulse = power_pulse(2.5, 2.0, 10_000).unwrap();
        let cell = defect_gradient_with(&pulse, &chain, Placement::Cell);
        let point = defect_gradient_with(&pulse, &chain, Placement::Point);
        assert!(point.relative_error_to(&cell) < 1e-4);
    }

    #[test]
    fn identity_term_cancels() {
        let pulse = power_pulse(3.0, 2.0f64, 500).unwrap();
        let ev = evolve_mode(2.0, &pulse, true);
        for (phi, phi_bar) in ev.trajectory.unwrap() {
            assert!(phi_bar.inner(&phi).norm() < 1e-13);
        }
    }

    #[test]
    fn power_direction_values() {
        let d = power_direction(2.0f64, 1.0, 5).unwrap();
        assert_eq!(d[0], 0.0);
        assert_eq!(d[2], 0.0);
        assert_eq!(d[4], 0.0);
        // x = 1/2: −(1/4)·ln(1/2)
        assert!((d[3] - 0.25 * 2f64.ln()).abs() < 1e-15);
        assert!((d[1] + 0.25 * 2f64.ln()).abs() < 1e-15);
        assert!(power_direction(0.0f64, 1.0, 5).is_err());
    }

    #[test]
    fn power_direction_matches_scalar_difference() {
        let (r, t, n, h) = (2.7f64, 4.0, 201, 1e-5);
        let d = power_direction(r, t, n).unwrap();
        let up = power_pulse(r + h, t, n).unwrap();
        let dn = power_pulse(r - h, t, n).unwrap();
        for (i, (a, b)) in up.samples().iter().zip(dn.samples()).enumerate() {
            let fd = (a - b) / (2.0 * h);
            assert!((fd - d[i]).abs() < 1e-8, "i={i}");
        }
    }

    #[test]
    fn chain_rule_matches_scalar_derivative() {
        let chain = ChainConfig::new(20).unwrap();
        let (r, t, n, h) = (1.8f64, 2.5, 10_000, 1e-5);
        let pulse = power_pulse(r, t, n).unwrap();
        let slope = exponent_derivative(
            &defect_gradient(&pulse, &chain),
            &power_direction(r, t, n).unwrap(),
        );
        let dp = defect_count(&power_pulse(r + h, t, n).unwrap(), &chain);
        let dm = defect_count(&power_pulse(r - h, t, n).unwrap(), &chain);
        let fd = (dp - dm) / (2.0 * h);
        assert!(((slope - fd) / fd).abs() < 1e-6, "{slope} vs {fd}");
    }

    #[test]
    fn first_order_taylor_along_a_bump() {
        let chain = ChainConfig::new(10).unwrap();
        let pulse = power_pulse(2.0f64, 2.0, 2001).unwrap();
        let grad = defect_gradient(&pulse, &chain);
        let bump: Vec<f64> = pulse
            .times()
            .map(|t| (-(t - 0.3).powi(2) * 4.0).exp() * (1.0 - (t / 2.0).powi(2)))
            .collect();
        let directional = grad.dt
            * grad
                .values
                .iter()
                .zip(&bump)
                .map(|(g, b)| g * b)
                .sum::<f64>();
        let d0 = defect_count(&pulse, &chain);
        let residual = |eps: f64| {
            let s: Vec<f64> = pulse
                .samples()
                .iter()
                .zip(&bump)
                .map(|(g, b)| g + eps * b)
                .collect();
            let p = Pulse::tabulated(s, 2.0).unwrap();
            (defect_count(&p, &chain) - d0 - eps * directional).abs()
        };
        // Remainder is O(ε²): halving ε quarters it.
        let (r1, r2) = (residual(1e-2), residual(5e-3));
        assert!((r1 / r2 - 4.0).abs() < 0.2, "ratio {}", r1 / r2);
    }

    /// The closed form −4 Im Σ⟨φ̄(t)|σ_z|φ(t)⟩⟨φ(T)|sin k σ_x + cos k (σ_x + iσ_y)|φ̄(T)⟩
    /// sometimes quoted for this gradient is not the derivative of D.
    #[test]
    fn mixed_pauli_closed_form_disagrees_with_oracle() {
        let chain = ChainConfig::new(24).unwrap();
        let pulse = power_pulse(2.0f64, 3.0, 10_000).unwrap();
        let fd = finite_difference_gradient(&pulse, &chain, 1e-5).unwrap();
        let mut values = vec![0.0; pulse.n_steps()];
        for &k in chain.momenta() {
            let ev = evolve_mode(k, &pulse, true);
            let fin = (Op2::sigma_x().scale(Complex::from(k.sin()))
                + (Op2::sigma_x() + Op2::sigma_y().scale(Complex::i()))
                    .scale(Complex::from(k.cos())))
            .sandwich(ev.phi.amplitudes, ev.phi_bar.amplitudes);
            for (v, (phi, phi_bar)) in values.iter_mut().zip(ev.trajectory.unwrap()) {
                let z = Op2::<f64>::sigma_z().sandwich(phi_bar.amplitudes, phi.amplitudes);
                *v += -4.0 * (z * fin).im;
            }
        }
        let literal = GradientField {
            values,
            half_duration: 3.0,
            dt: pulse.dt(),
        };
        assert!(literal.relative_error_to(&fd) > 1.0);
        assert!(defect_gradient(&pulse, &chain).relative_error_to(&fd) < 1e-6);
    }
}
