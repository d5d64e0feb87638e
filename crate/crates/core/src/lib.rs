// Copyright 2026 The critquench Authors
// SPDX-License-Identifier: Apache-2.0

// `!(x > 0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Optimal control of a transverse-field Ising chain quenched through its
//! critical point, in the free-fermion picture.
//!
//! Everything is generic over the scalar via [`Real`]; the aliases below fix
//! it to `f64` or `f32`.

pub mod error;
pub mod gradient;
pub mod model;
pub mod op2;
pub mod optimize;
pub mod propagate;
pub mod pulse;
pub mod qsl;
pub mod robustness;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;

pub type ChainConfig64 = model::ChainConfig<f64>;
pub type Pulse64 = pulse::Pulse<f64>;
pub type QuenchResult64 = propagate::QuenchResult<f64>;
pub type GradientField64 = gradient::GradientField<f64>;
pub type OptimizerConfig64 = optimize::OptimizerConfig<f64>;
pub type OptimizationTrace64 = optimize::OptimizationTrace<f64>;
pub type Landscape64 = optimize::Landscape<f64>;
pub type QslReport64 = qsl::QslReport<f64>;
pub type NoiseStudyConfig64 = robustness::NoiseStudyConfig<f64>;
pub type RobustnessResult64 = robustness::RobustnessResult<f64>;

pub type ChainConfig32 = model::ChainConfig<f32>;
pub type Pulse32 = pulse::Pulse<f32>;
pub type QuenchResult32 = propagate::QuenchResult<f32>;
pub type GradientField32 = gradient::GradientField<f32>;
pub type OptimizerConfig32 = optimize::OptimizerConfig<f32>;
pub type OptimizationTrace32 = optimize::OptimizationTrace<f32>;
pub type Landscape32 = optimize::Landscape<f32>;
pub type QslReport32 = qsl::QslReport<f32>;
pub type NoiseStudyConfig32 = robustness::NoiseStudyConfig<f32>;
pub type RobustnessResult32 = robustness::RobustnessResult<f32>;
