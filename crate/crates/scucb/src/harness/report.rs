//! Aggregation and machine-readable output: long-format CSV rows per
//! recorded round and a JSON summary with per-cell statistics.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use super::config::ExperimentConfig;
use crate::error::Result;

/// One (policy, cell, seed) replication, flattened for reporting.
#[derive(Clone, Debug)]
pub struct RunRecord {
    pub policy: String,
    pub cell: String,
    pub seed: u64,
    pub final_regret: f64,
    pub final_reward: f64,
    pub regret_curve: Vec<f64>,
    pub reward_curve: Vec<f64>,
    /// Cumulative count of post-initialization rounds whose concentration
    /// event failed, indexed like the other curves (zero during
    /// initialization).
    pub violation_curve: Vec<u32>,
}

/// Aggregates for one (policy, cell) group.
#[derive(Clone, Debug, Serialize)]
pub struct CellSummary {
    pub policy: String,
    pub cell: String,
    pub seeds: Vec<u64>,
    pub mean_final_regret: f64,
    pub std_final_regret: f64,
    pub mean_final_reward: f64,
    pub std_final_reward: f64,
    /// Seed-averaged cumulative regret sampled every `record stride` rounds.
    pub mean_regret_curve: Vec<f64>,
    /// Seed-averaged cumulative concentration-event failures, same sampling.
    pub mean_violation_curve: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct EnvFingerprint {
    pub os: &'static str,
    pub arch: &'static str,
    pub crate_version: &'static str,
}

impl Default for EnvFingerprint {
    fn default() -> Self {
        Self {
            os: std::env::consts::OS,
            arch: std::env::consts::ARCH,
            crate_version: env!("CARGO_PKG_VERSION"),
        }
    }
}

/// Whole-sweep summary: config echo, per-cell statistics, environment.
#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub config_hash: String,
    pub config: ExperimentConfig,
    pub record_stride: usize,
    pub cells: Vec<CellSummary>,
    pub environment: EnvFingerprint,
}

fn mean_and_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Groups records by (cell, policy) in first-appearance order and computes
/// arithmetic aggregates over seeds.
pub fn summarize(config: &ExperimentConfig, records: &[RunRecord]) -> RunSummary {
    let stride = config.effective_stride();
    let mut order: Vec<(String, String)> = Vec::new();
    for r in records {
        let key = (r.cell.clone(), r.policy.clone());
        if !order.contains(&key) {
            order.push(key);
        }
    }
    let cells = order
        .into_iter()
        .map(|(cell, policy)| {
            let group: Vec<&RunRecord> = records
                .iter()
                .filter(|r| r.cell == cell && r.policy == policy)
                .collect();
            let finals: Vec<f64> = group.iter().map(|r| r.final_regret).collect();
            let rewards: Vec<f64> = group.iter().map(|r| r.final_reward).collect();
            let (mean_final_regret, std_final_regret) = mean_and_std(&finals);
            let (mean_final_reward, std_final_reward) = mean_and_std(&rewards);
            let horizon = group[0].regret_curve.len();
            let mut mean_regret_curve = Vec::new();
            let mut mean_violation_curve = Vec::new();
            let mut t = stride;
            while t <= horizon {
                let value =
                    group.iter().map(|r| r.regret_curve[t - 1]).sum::<f64>() / group.len() as f64;
                mean_regret_curve.push(value);
                let violations = group
                    .iter()
                    .map(|r| f64::from(r.violation_curve[t - 1]))
                    .sum::<f64>()
                    / group.len() as f64;
                mean_violation_curve.push(violations);
                t += stride;
            }
            CellSummary {
                policy,
                cell,
                seeds: group.iter().map(|r| r.seed).collect(),
                mean_final_regret,
                std_final_regret,
                mean_final_reward,
                std_final_reward,
                mean_regret_curve,
                mean_violation_curve,
            }
        })
        .collect();
    RunSummary {
        config_hash: config.hash(),
        config: config.clone(),
        record_stride: stride,
        cells,
        environment: EnvFingerprint::default(),
    }
}

/// Writes long-format rows: `policy,cell,seed,t,cum_regret,cum_reward`, one
/// per recorded round (every `stride` rounds).
pub fn emit_csv(records: &[RunRecord], stride: usize, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "policy,cell,seed,t,cum_regret,cum_reward")?;
    for r in records {
        let mut t = stride;
        while t <= r.regret_curve.len() {
            writeln!(
                out,
                "{},{},{},{},{:.6},{:.6}",
                r.policy,
                r.cell,
                r.seed,
                t,
                r.regret_curve[t - 1],
                r.reward_curve[t - 1]
            )?;
            t += stride;
        }
    }
    out.flush()?;
    Ok(())
}

/// Writes the JSON summary document.
pub fn emit_json(summary: &RunSummary, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, summary)
        .map_err(|e| crate::error::Error::Config(e.to_string()))?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}
