// Copyright 2026 The critquench Authors
// SPDX-License-Identifier: Apache-2.0

//! Locating the critical duration τ_c in a swept τ grid.
//!
//! Below τ_c the best power-law exponent sits near 1–3; at τ_c the global
//! minimum of D(r) switches to a steep pulse and r* jumps upward before
//! decreasing again with τ. The optimized density falls fastest across the
//! same interval, but on a fine grid the adjacent ratio stays well below
//! an order of magnitude, so both measures are reported.

use serde::Serialize;

use crate::config::TransitionRule;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Transition {
    pub rule: TransitionRule,
    /// Adjacent τ pair bracketing the transition under `rule`.
    pub interval: Option<(f64, f64)>,
    /// Midpoint of `interval`.
    pub tau_c: Option<f64>,
    /// Largest r*_{i+1}/r*_i over adjacent pairs.
    pub max_r_jump: f64,
    /// Largest ρ_i/ρ_{i+1} over adjacent pairs.
    pub max_drop_factor: f64,
    /// What the drop-factor rule alone gives.
    pub drop_rule_tau_c: Option<f64>,
}

fn argmax(values: impl Iterator<Item = f64>) -> Option<(usize, f64)> {
    values
        .enumerate()
        .filter(|(_, v)| v.is_finite())
        .fold(None, |best, (i, v)| match best {
            Some((_, b)) if b >= v => best,
            _ => Some((i, v)),
        })
}

/// `tau` must be strictly increasing; `rho` and `r_star` are aligned with it.
/// Non-finite entries mark failed grid points and are skipped.
pub fn locate_transition(
    tau: &[f64],
    rho: &[f64],
    r_star: &[f64],
    rule: TransitionRule,
    drop_factor: f64,
    min_r_jump: f64,
) -> Transition {
    let pairs = tau.len().saturating_sub(1);
    let jumps = argmax((0..pairs).map(|i| r_star[i + 1] / r_star[i]));
    let drops = argmax((0..pairs).map(|i| rho[i] / rho[i + 1]));
    let mid = |i: usize| 0.5 * (tau[i] + tau[i + 1]);
    let jump_pick = jumps.filter(|&(_, v)| v >= min_r_jump).map(|(i, _)| i);
    let drop_pick = drops.filter(|&(_, v)| v >= drop_factor).map(|(i, _)| i);
    let pick = match rule {
        TransitionRule::RJump => jump_pick,
        TransitionRule::DropFactor => drop_pick,
    };
    Transition {
        rule,
        interval: pick.map(|i| (tau[i], tau[i + 1])),
        tau_c: pick.map(mid),
        max_r_jump: jumps.map_or(f64::NAN, |(_, v)| v),
        max_drop_factor: drops.map_or(f64::NAN, |(_, v)| v),
        drop_rule_tau_c: drop_pick.map(mid),
    }
}
