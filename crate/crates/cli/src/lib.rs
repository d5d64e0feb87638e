// Copyright 2026 The critquench Authors
// SPDX-License-Identifier: Apache-2.0

// `!(x > 0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Experiment recipes behind the `critquench` binary. Each command reads a
//! [`config::Config`], writes CSV/JSON into an output directory and finishes
//! with a [`manifest::RunManifest`].

pub mod commands;
pub mod config;
pub mod manifest;
pub mod transition;

pub use commands::{run, Command};
pub use config::Config;
pub use manifest::RunManifest;
