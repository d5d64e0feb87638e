// Copyright 2026 The critquench Authors
// SPDX-License-Identifier: Apache-2.0

use std::fmt;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use critquench::gradient::defect_gradient;
use critquench::model::{FIELD_FINAL, FIELD_INITIAL};
use critquench::optimize::{
    landscape_scan, optimize_free, optimize_power, OptimizerConfig, StopReason,
};
use critquench::propagate::{defect_count, defect_density};
use critquench::pulse::{linear_pulse, local_adiabatic_pulse, power_pulse};
use critquench::qsl::{fleming_qsl, hegerfeldt_qsl, qsl_profile};
use critquench::robustness::{dynamical_noise_study, initial_state_error, spin_count_error};
use critquench::{ChainConfig64, NoiseStudyConfig64, Pulse64};

use crate::config::{
    Config, FreeConfig, FreeStart, LandscapeConfig, OptimizerSection, PulseFamily, QslConfig,
    RobustnessConfig, SimulateConfig, SweepConfig,
};
use crate::manifest::{RunDir, RunManifest};
use crate::transition::locate_transition;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Sweep,
    Landscape,
    Qsl,
    Robustness,
    OptimizeFree,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Sweep => "sweep",
            Command::Landscape => "landscape",
            Command::Qsl => "qsl",
            Command::Robustness => "robustness",
            Command::OptimizeFree => "optimize-free",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Runs `command` into `out` and returns its manifest. Grid-point failures
/// are listed in the manifest; anything else is an error.
pub fn run(command: Command, cfg: &Config, out: &Path) -> anyhow::Result<RunManifest> {
    let mut dir = RunDir::create(out)?;
    let (seeds, failures, summary) = match command {
        Command::Simulate => simulate(cfg.section(&cfg.simulate, "simulate")?, cfg, &mut dir)?,
        Command::Sweep => sweep(cfg.section(&cfg.sweep, "sweep")?, cfg, &mut dir)?,
        Command::Landscape => landscape(cfg.section(&cfg.landscape, "landscape")?, cfg, &mut dir)?,
        Command::Qsl => qsl(cfg.section(&cfg.qsl, "qsl")?, &mut dir)?,
        Command::Robustness => {
            robustness(cfg.section(&cfg.robustness, "robustness")?, cfg, &mut dir)?
        }
        Command::OptimizeFree => free(
            cfg.section(&cfg.optimize_free, "optimize_free")?,
            cfg,
            &mut dir,
        )?,
    };
    dir.finish(command.name(), cfg, seeds, failures, summary)
}

type Parts = (Vec<u64>, Vec<String>, serde_json::Value);

pub fn stop_label(reason: StopReason) -> &'static str {
    match reason {
        StopReason::Converged => "converged",
        StopReason::MaxIters => "max_iters",
        StopReason::Stalled => "stalled",
        StopReason::BoundReached => "bound_reached",
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StartOutcome {
    pub initial_r: f64,
    pub final_r: f64,
    pub defects: f64,
    pub iterations: usize,
    #[serde(serialize_with = "ser_reason")]
    pub stop_reason: StopReason,
}

fn ser_reason<S: serde::Serializer>(r: &StopReason, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(stop_label(*r))
}

#[derive(Debug, Clone)]
pub struct PowerSearch {
    pub starts: Vec<(f64, Result<StartOutcome, String>)>,
}

impl PowerSearch {
    /// Lowest-D outcome; the earliest start wins ties.
    pub fn best(&self) -> Option<StartOutcome> {
        self.starts
            .iter()
            .filter_map(|(_, s)| s.as_ref().ok())
            .fold(None, |best: Option<StartOutcome>, s| match best {
                Some(b) if b.defects <= s.defects => Some(b),
                _ => Some(*s),
            })
    }

    pub fn ok_count(&self) -> usize {
        self.starts.iter().filter(|(_, s)| s.is_ok()).count()
    }
}

/// Power-law flow from every configured start.
pub fn search_power(
    chain: &ChainConfig64,
    half_duration: f64,
    opt: &OptimizerSection,
    n_steps: usize,
) -> PowerSearch {
    let n = chain.n_spins();
    let starts = opt
        .starts()
        .par_iter()
        .map(|&r0| {
            let cfg = opt.build(n, n_steps, r0);
            let outcome = optimize_power(chain, half_duration, &cfg)
                .map(|t| StartOutcome {
                    initial_r: r0,
                    final_r: t.final_r.expect("power-law trace"),
                    defects: t.final_defects,
                    iterations: t.iterations(),
                    stop_reason: t.stop_reason,
                })
                .map_err(|e| e.to_string());
            (r0, outcome)
        })
        .collect();
    PowerSearch { starts }
}

fn best_power_pulse(
    chain: &ChainConfig64,
    half_duration: f64,
    cfg: &Config,
) -> anyhow::Result<(StartOutcome, Pulse64)> {
    let search = search_power(chain, half_duration, &cfg.optimizer(), cfg.n_steps());
    let Some(best) = search.best() else {
        let msgs: Vec<String> = search
            .starts
            .iter()
            .filter_map(|(r0, s)| s.as_ref().err().map(|e| format!("r0={r0}: {e}")))
            .collect();
        bail!("every power-law start failed: {}", msgs.join("; "));
    };
    Ok((
        best,
        power_pulse(best.final_r, half_duration, cfg.n_steps())?,
    ))
}

fn simulate(sc: &SimulateConfig, cfg: &Config, dir: &mut RunDir) -> anyhow::Result<Parts> {
    let chain = ChainConfig64::new(sc.n_spins)?;
    let t = sc.half_duration()?;
    let n_steps = cfg.n_steps();
    let mut r_used = None;
    let pulse = match sc.family {
        PulseFamily::Power => {
            let r = sc.r.context("family = \"power\" needs `r`")?;
            r_used = Some(r);
            power_pulse(r, t, n_steps)?
        }
        PulseFamily::OptimalPower => {
            let (best, p) = best_power_pulse(&chain, t, cfg)?;
            r_used = Some(best.final_r);
            p
        }
        PulseFamily::Linear => linear_pulse(t, n_steps)?,
        PulseFamily::LocalAdiabatic => local_adiabatic_pulse(t, sc.n_spins, n_steps)?,
        PulseFamily::File => {
            let path = sc
                .pulse_file
                .as_ref()
                .context("family = \"file\" needs `pulse_file`")?;
            let f =
                std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
            let p = Pulse64::read_text(std::io::BufReader::new(f))?;
            if (p.half_duration() - t).abs() > 1e-12 * t {
                bail!(
                    "pulse file has T = {}, config asks for {t}",
                    p.half_duration()
                );
            }
            p
        }
    };
    let result = defect_density(&pulse, &chain);
    result.write_csv(dir.file("pk.csv")?)?;
    let summary = result.summary(pulse.n_steps());
    dir.json("summary.json", &summary)?;
    pulse.write_text(dir.file("pulse.txt")?)?;
    Ok((
        vec![],
        vec![],
        json!({
            "density": result.density,
            "defects": result.defects,
            "r": r_used,
            "provenance": pulse.provenance(),
            "slowest_mode_probability": result.slowest_mode_probability(),
        }),
    ))
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub n_spins: usize,
    pub tau: f64,
    pub half_duration: f64,
    pub rho_optimized: f64,
    pub rho_linear: f64,
    pub rho_local_adiabatic: f64,
    pub r_star: f64,
    pub stop_reason: String,
    pub starts_ok: usize,
}

fn sweep(sc: &SweepConfig, cfg: &Config, dir: &mut RunDir) -> anyhow::Result<Parts> {
    if sc.tau.windows(2).any(|w| !(w[1] > w[0])) {
        bail!("sweep tau grid must be strictly increasing");
    }
    let n_steps = cfg.n_steps();
    let opt = cfg.optimizer();
    let mut rows = Vec::new();
    let mut starts_w = dir.csv("starts.csv")?;
    let mut failures = Vec::new();
    let mut transitions = Vec::new();
    for &n in &sc.n_spins {
        let chain = ChainConfig64::new(n)?;
        let nf = n as f64;
        let mut n_rows = Vec::new();
        for &tau in &sc.tau {
            let t = tau * nf;
            let search = search_power(&chain, t, &opt, n_steps);
            for (r0, s) in &search.starts {
                match s {
                    Ok(s) => starts_w.write_record([
                        n.to_string(),
                        tau.to_string(),
                        r0.to_string(),
                        s.final_r.to_string(),
                        s.defects.to_string(),
                        s.iterations.to_string(),
                        stop_label(s.stop_reason).to_string(),
                    ])?,
                    Err(e) => {
                        starts_w.write_record([
                            n.to_string(),
                            tau.to_string(),
                            r0.to_string(),
                            "NaN".into(),
                            "NaN".into(),
                            "0".into(),
                            "failed".into(),
                        ])?;
                        failures.push(format!("N={n} tau={tau} r0={r0}: {e}"));
                    }
                }
            }
            let baselines = linear_pulse(t, n_steps)
                .and_then(|l| Ok((l, local_adiabatic_pulse(t, n, n_steps)?)))
                .map(|(l, a)| (defect_count(&l, &chain) / nf, defect_count(&a, &chain) / nf));
            let (rho_lin, rho_la) = baselines.unwrap_or_else(|e| {
                failures.push(format!("N={n} tau={tau} baselines: {e}"));
                (f64::NAN, f64::NAN)
            });
            let best = search.best();
            if best.is_none() {
                failures.push(format!("N={n} tau={tau}: no power-law start succeeded"));
            }
            n_rows.push(SweepRow {
                n_spins: n,
                tau,
                half_duration: t,
                rho_optimized: best.map_or(f64::NAN, |b| b.defects / nf),
                rho_linear: rho_lin,
                rho_local_adiabatic: rho_la,
                r_star: best.map_or(f64::NAN, |b| b.final_r),
                stop_reason: best.map_or("failed", |b| stop_label(b.stop_reason)).into(),
                starts_ok: search.ok_count(),
            });
        }
        let rho: Vec<f64> = n_rows.iter().map(|r| r.rho_optimized).collect();
        let rs: Vec<f64> = n_rows.iter().map(|r| r.r_star).collect();
        let tr = locate_transition(&sc.tau, &rho, &rs, sc.rule, sc.drop_factor, sc.min_r_jump);
        let qsl_tau = fleming_qsl(chain.slowest_mode(), FIELD_INITIAL, FIELD_FINAL)
            .map_or(f64::NAN, |q| q / nf);
        transitions.push((n, tr, qsl_tau));
        rows.extend(n_rows);
    }
    starts_w.flush()?;

    let mut w = dir.csv("sweep.csv")?;
    for r in &rows {
        w.write_record([
            r.n_spins.to_string(),
            r.tau.to_string(),
            r.half_duration.to_string(),
            r.rho_optimized.to_string(),
            r.rho_linear.to_string(),
            r.rho_local_adiabatic.to_string(),
            r.r_star.to_string(),
            r.stop_reason.clone(),
            r.starts_ok.to_string(),
        ])?;
    }
    w.flush()?;

    let opt_str = |v: Option<f64>| v.map_or_else(|| "NaN".to_string(), |x| x.to_string());
    let mut w = dir.csv("transition.csv")?;
    for (n, tr, q) in &transitions {
        w.write_record([
            n.to_string(),
            serde_json::to_value(tr.rule)?
                .as_str()
                .unwrap_or_default()
                .to_string(),
            opt_str(tr.interval.map(|i| i.0)),
            opt_str(tr.interval.map(|i| i.1)),
            opt_str(tr.tau_c),
            tr.max_r_jump.to_string(),
            tr.max_drop_factor.to_string(),
            opt_str(tr.drop_rule_tau_c),
            q.to_string(),
        ])?;
    }
    w.flush()?;
    let summary = transitions
        .iter()
        .map(|(n, tr, q)| json!({ "n_spins": n, "transition": tr, "qsl_tau": q }))
        .collect();
    Ok((vec![], failures, serde_json::Value::Array(summary)))
}

fn landscape(lc: &LandscapeConfig, cfg: &Config, dir: &mut RunDir) -> anyhow::Result<Parts> {
    let chain = ChainConfig64::new(lc.n_spins)?;
    let t = lc.half_duration()?;
    let scan = landscape_scan(&chain, t, &lc.grid()?, cfg.n_steps())?;
    scan.write_csv(dir.file("landscape.csv")?)?;
    let minima: Vec<_> = scan.minima.iter().map(|&i| scan.points[i]).collect();
    Ok((
        vec![],
        vec![],
        json!({
            "n_minima": minima.len(),
            "minima": minima,
            "global_minimum": scan.global_minimum(),
        }),
    ))
}

fn qsl(qc: &QslConfig, dir: &mut RunDir) -> anyhow::Result<Parts> {
    let mut failures = Vec::new();
    let mut table = Vec::new();
    for &n in &qc.n_spins {
        let chain = ChainConfig64::new(n)?;
        let heg = hegerfeldt_qsl(&chain) / n as f64;
        match qsl_profile(&chain, qc.g_initial, qc.g_final) {
            Ok(rep) => {
                rep.write_csv(dir.file(&format!("qsl_profile_N{n}.csv"))?)?;
                table.push((n, rep.slowest_tau(), heg));
            }
            Err(e) => {
                failures.push(format!("N={n}: {e}"));
                table.push((n, f64::NAN, heg));
            }
        }
    }
    let mut w = dir.csv("qsl_summary.csv")?;
    for (n, f, h) in &table {
        w.write_record([n.to_string(), f.to_string(), h.to_string()])?;
    }
    w.flush()?;
    let summary = table
        .iter()
        .map(|(n, f, h)| json!({ "n_spins": n, "fleming_tau": f, "hegerfeldt_tau": h }))
        .collect();
    Ok((vec![], failures, serde_json::Value::Array(summary)))
}

fn robustness(rc: &RobustnessConfig, cfg: &Config, dir: &mut RunDir) -> anyhow::Result<Parts> {
    let chain = ChainConfig64::new(rc.n_spins)?;
    let t = rc.half_duration()?;
    let (r, pulse) = match rc.r {
        Some(r) => (r, power_pulse(r, t, cfg.n_steps())?),
        None => {
            let (best, p) = best_power_pulse(&chain, t, cfg)?;
            (best.final_r, p)
        }
    };
    let baseline = defect_density(&pulse, &chain).density;
    let seed = cfg.seed();
    let study = NoiseStudyConfig64 {
        deltas: rc.deltas.clone(),
        n_realizations: rc.n_realizations,
        seed,
        base_pulse: pulse.clone(),
        n_spins: rc.n_spins,
        keep_samples: rc.keep_samples,
    };
    let noise = dynamical_noise_study(&study)?;
    noise.write_csv(dir.file("noise.csv")?)?;
    if rc.keep_samples {
        let mut w = dir.csv("noise_samples.csv")?;
        for p in &noise.per_delta {
            for (i, v) in p.samples.iter().flatten().enumerate() {
                w.write_record([p.delta.to_string(), i.to_string(), v.to_string()])?;
            }
        }
        w.flush()?;
    }

    let mut failures = Vec::new();
    if rc.initial_state {
        let mut w = dir.csv("initial_state.csv")?;
        for &d in &rc.deltas {
            match initial_state_error(&pulse, &chain, d) {
                Ok(rho) => {
                    w.write_record([d.to_string(), rho.to_string(), baseline.to_string()])?
                }
                Err(e) => failures.push(format!("initial state delta={d}: {e}")),
            }
        }
        w.flush()?;
    }
    if rc.spin_count {
        let mut w = dir.csv("spin_count.csv")?;
        for &d in &rc.deltas {
            match spin_count_error(&pulse, rc.n_spins, d) {
                Ok(o) => w.write_record([
                    d.to_string(),
                    o.n_plus.to_string(),
                    o.n_minus.to_string(),
                    o.density_plus.to_string(),
                    o.density_minus.to_string(),
                    o.mean_density.to_string(),
                ])?,
                Err(e) => failures.push(format!("spin count delta={d}: {e}")),
            }
        }
        w.flush()?;
    }
    let points: Vec<_> = noise
        .per_delta
        .iter()
        .map(|p| json!({ "delta": p.delta, "mean_rho": p.mean_density, "ci_halfwidth": p.ci_half_width }))
        .collect();
    Ok((
        vec![seed],
        failures,
        json!({
            "r": r,
            "provenance": pulse.provenance(),
            "pulse_checksum": pulse.checksum(),
            "baseline_rho": baseline,
            "noise": points,
        }),
    ))
}

fn free(fc: &FreeConfig, cfg: &Config, dir: &mut RunDir) -> anyhow::Result<Parts> {
    let chain = ChainConfig64::new(fc.n_spins)?;
    let t = fc.half_duration()?;
    let n_steps = cfg.n_steps();
    let initial = match fc.initial {
        FreeStart::Linear => linear_pulse(t, n_steps)?,
        FreeStart::LocalAdiabatic => local_adiabatic_pulse(t, fc.n_spins, n_steps)?,
        FreeStart::Power => {
            power_pulse(fc.r.context("initial = \"power\" needs `r`")?, t, n_steps)?
        }
    };
    let base = OptimizerConfig::<f64>::for_chain(fc.n_spins);
    let oc = OptimizerConfig {
        max_iters: fc.max_iters.unwrap_or(500),
        step_size: fc.step_size.unwrap_or(base.step_size),
        grad_tol: fc.grad_tol.unwrap_or(base.grad_tol),
        smoothness: fc.smoothness,
        n_steps,
        ..base
    };
    let d0 = defect_count(&initial, &chain);
    let trace = optimize_free(&chain, &initial, &oc)?;
    trace.write_csv(dir.file("trace.csv")?)?;
    trace.final_pulse.write_text(dir.file("pulse.txt")?)?;
    let mut g = dir.file("gradient.txt")?;
    defect_gradient(&trace.final_pulse, &chain).write_text(&mut g)?;
    g.flush()?;
    Ok((
        vec![],
        vec![],
        json!({
            "initial_defects": d0,
            "final_defects": trace.final_defects,
            "iterations": trace.iterations(),
            "stop_reason": stop_label(trace.stop_reason),
            "monotone": trace.is_monotone(),
        }),
    ))
}
