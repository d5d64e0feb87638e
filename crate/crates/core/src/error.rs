// Copyright 2026 The critquench Authors
// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("chain size must be an even integer >= 4, got {0}")]
    InvalidChainSize(usize),

    #[error("invalid pulse: {0}")]
    InvalidPulse(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate variance, bound undefined (k = {k})")]
    DegenerateVariance { k: f64 },

    #[error("speed-limit profile is not peaked at the slowest mode: {0}")]
    ProfileNotPeaked(String),

    #[error("malformed pulse text at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
