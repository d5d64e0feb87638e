// Copyright 2026 The critquench Authors
// SPDX-License-Identifier: Apache-2.0

//! Run manifests and the output directory bookkeeping behind them.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use serde::{Deserialize, Serialize};

use crate::config::Config;

pub const MANIFEST_FILE: &str = "manifest.json";

/// Header of every CSV the tool writes, keyed by file name prefix.
pub const CSV_SCHEMAS: &[(&str, &[&str])] = &[
    ("pk", &["k", "P_k"]),
    (
        "sweep",
        &[
            "N",
            "tau",
            "half_duration",
            "rho_optimized",
            "rho_linear",
            "rho_local_adiabatic",
            "r_star",
            "stop_reason",
            "starts_ok",
        ],
    ),
    (
        "starts",
        &[
            "N",
            "tau",
            "initial_r",
            "final_r",
            "D",
            "iterations",
            "stop_reason",
        ],
    ),
    (
        "transition",
        &[
            "N",
            "rule",
            "tau_lo",
            "tau_hi",
            "tau_c",
            "max_r_jump",
            "max_drop_factor",
            "drop_rule_tau_c",
            "qsl_tau",
        ],
    ),
    ("landscape", &["r", "D", "is_local_min"]),
    ("qsl_summary", &["N", "fleming_tau", "hegerfeldt_tau"]),
    ("qsl_profile", &["k", "T_qsl", "T_qsl_over_N"]),
    ("noise_samples", &["delta", "realization", "rho"]),
    ("noise", &["delta", "mean_rho", "ci_halfwidth", "n"]),
    ("initial_state", &["delta", "rho", "rho_baseline"]),
    (
        "spin_count",
        &[
            "delta",
            "n_plus",
            "n_minus",
            "rho_plus",
            "rho_minus",
            "mean_rho",
        ],
    ),
    ("trace", &["iter", "s", "r", "D", "grad"]),
];

/// Schema for an emitted file name; the longest matching prefix wins.
pub fn schema_for(file_name: &str) -> Option<&'static [&'static str]> {
    CSV_SCHEMAS
        .iter()
        .filter(|(p, _)| file_name.starts_with(p))
        .max_by_key(|(p, _)| p.len())
        .map(|(_, h)| *h)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    /// Effective configuration after command-line overrides.
    pub config: Config,
    pub seeds: Vec<u64>,
    pub n_steps: usize,
    pub threads: usize,
    pub duration_seconds: f64,
    pub outputs: Vec<String>,
    /// Grid points that failed, one message each.
    pub failures: Vec<String>,
    /// Command-specific results worth reading without opening the CSVs.
    pub summary: serde_json::Value,
}

impl RunManifest {
    pub fn success(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
        serde_json::from_reader(f).with_context(|| format!("parsing {}", path.display()))
    }
}

/// Output directory that remembers what was written to it.
pub struct RunDir {
    root: PathBuf,
    outputs: Vec<String>,
    started: Instant,
}

impl RunDir {
    pub fn create(root: &Path) -> anyhow::Result<Self> {
        std::fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
        Ok(Self {
            root: root.to_path_buf(),
            outputs: Vec::new(),
            started: Instant::now(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Opens `name` for writing and records it.
    pub fn file(&mut self, name: &str) -> anyhow::Result<BufWriter<File>> {
        let path = self.root.join(name);
        let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        self.outputs.push(name.to_string());
        Ok(BufWriter::new(f))
    }

    /// CSV writer whose header comes from [`CSV_SCHEMAS`].
    pub fn csv(&mut self, name: &str) -> anyhow::Result<csv::Writer<BufWriter<File>>> {
        let header = schema_for(name).with_context(|| format!("no schema for {name}"))?;
        let mut w = csv::Writer::from_writer(self.file(name)?);
        w.write_record(header)?;
        Ok(w)
    }

    pub fn json<S: Serialize>(&mut self, name: &str, value: &S) -> anyhow::Result<()> {
        let mut f = self.file(name)?;
        serde_json::to_writer_pretty(&mut f, value)?;
        writeln!(f)?;
        f.flush()?;
        Ok(())
    }

    /// Writes `manifest.json` last; the run counts as finished only after this.
    pub fn finish(
        self,
        command: &str,
        config: &Config,
        seeds: Vec<u64>,
        failures: Vec<String>,
        summary: serde_json::Value,
    ) -> anyhow::Result<RunManifest> {
        let manifest = RunManifest {
            command: command.to_string(),
            version: format!("critquench {}", env!("CARGO_PKG_VERSION")),
            config: config.clone(),
            seeds,
            n_steps: config.n_steps(),
            threads: rayon::current_num_threads(),
            duration_seconds: self.started.elapsed().as_secs_f64(),
            outputs: self.outputs,
            failures,
            summary,
        };
        let path = self.root.join(MANIFEST_FILE);
        let mut f = BufWriter::new(
            File::create(&path).with_context(|| format!("creating {}", path.display()))?,
        );
        serde_json::to_writer_pretty(&mut f, &manifest)?;
        writeln!(f)?;
        f.flush()?;
        Ok(manifest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn longest_prefix_wins() {
        assert_eq!(schema_for("noise.csv").unwrap()[1], "mean_rho");
        assert_eq!(schema_for("noise_samples.csv").unwrap()[1], "realization");
        assert_eq!(schema_for("qsl_profile_N24.csv").unwrap()[0], "k");
        assert!(schema_for("pulse.txt").is_none());
    }
}
