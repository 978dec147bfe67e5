//! Evaluation reports: structured JSON plus companion CSV tables for
//! plotting. Reports are deterministic given config and seeds; the wallclock
//! field is the one exception and is zeroed by `normalized_json` for
//! byte-level comparisons.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::checkpoint::atomic_write;
use crate::downstream::{ProtocolConfig, ProtocolOutcome, TaskResult};
use crate::error::{Error, Result};
use crate::plugin::VariantFlags;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub setting: String,
    pub dataset: String,
    pub variant: VariantFlags,
    pub variant_name: String,
    pub adaptation: String,
    pub k: usize,
    pub tau: f64,
    pub lr: f64,
    pub epochs: usize,
    pub loss_mode: String,
    pub n_tasks: usize,
    pub seeds: Vec<u64>,
    pub support_size: usize,
    pub max_test: usize,
    pub root_seed: u64,
    pub mean: f64,
    pub std: f64,
    pub per_task: Vec<TaskResult>,
    pub wallclock_secs: f64,
}

impl Report {
    pub fn new(
        cfg: &ProtocolConfig,
        dataset: &str,
        outcome: ProtocolOutcome,
        wallclock_secs: f64,
    ) -> Self {
        Self {
            setting: cfg.kind.name().to_string(),
            dataset: dataset.to_string(),
            variant: cfg.flags,
            variant_name: cfg.flags.name().to_string(),
            adaptation: format!("{:?}", cfg.mode).to_lowercase(),
            k: cfg.k,
            tau: cfg.tau,
            lr: cfg.lr,
            epochs: cfg.epochs,
            loss_mode: cfg.loss_mode.name().to_string(),
            n_tasks: cfg.n_tasks,
            seeds: cfg.seeds.clone(),
            support_size: cfg.support_size,
            max_test: cfg.max_test,
            root_seed: cfg.root_seed,
            mean: outcome.mean,
            std: outcome.std,
            per_task: outcome.per_task,
            wallclock_secs,
        }
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Io(std::io::Error::other(e)))?;
        atomic_write(path, json.as_bytes())
    }

    /// Pretty JSON with the wallclock zeroed, for determinism checks.
    pub fn normalized_json(&self) -> String {
        let mut r = self.clone();
        r.wallclock_secs = 0.0;
        serde_json::to_string_pretty(&r).expect("report serializes")
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::from("task_id,seed,auc,n_test,support_truncated\n");
        for r in &self.per_task {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.task_id, r.seed, r.auc, r.n_test, r.support_truncated
            ));
        }
        atomic_write(path, out.as_bytes())
    }
}

/// Table of (label, mean, std) rows, e.g. per ablation variant or per K.
pub fn write_summary_csv(
    path: &Path,
    key_header: &str,
    rows: &[(String, f64, f64)],
) -> Result<()> {
    let mut out = format!("{key_header},mean,std\n");
    for (k, mean, std) in rows {
        out.push_str(&format!("{k},{mean},{std}\n"));
    }
    atomic_write(path, out.as_bytes())
}

/// Training curve: one `epoch,loss` row per epoch.
pub fn write_loss_curve(path: &Path, curve: &[(usize, f64)]) -> Result<()> {
    let mut out = String::from("epoch,loss\n");
    for (e, l) in curve {
        out.push_str(&format!("{e},{l}\n"));
    }
    atomic_write(path, out.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::downstream::TaskKind;

    #[test]
    fn normalized_json_ignores_wallclock_only() {
        let cfg = ProtocolConfig::new(TaskKind::LinkTransductive, VariantFlags::full());
        let outcome = ProtocolOutcome {
            per_task: vec![TaskResult {
                task_id: 0,
                seed: 1,
                auc: 0.9,
                n_test: 10,
                support_truncated: false,
            }],
            mean: 0.9,
            std: 0.0,
        };
        let a = Report::new(&cfg, "synthetic", outcome.clone(), 1.5);
        let b = Report::new(&cfg, "synthetic", outcome, 99.0);
        assert_ne!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        assert_eq!(a.normalized_json(), b.normalized_json());
    }

    #[test]
    fn csv_has_one_row_per_run() {
        let cfg = ProtocolConfig::new(TaskKind::NodeClass, VariantFlags::dp());
        let outcome = ProtocolOutcome {
            per_task: (0..4)
                .map(|i| TaskResult {
                    task_id: i,
                    seed: 0,
                    auc: 0.5,
                    n_test: 3,
                    support_truncated: false,
                })
                .collect(),
            mean: 0.5,
            std: 0.0,
        };
        let r = Report::new(&cfg, "d", outcome, 0.0);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.csv");
        r.write_csv(&p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(text.lines().count(), 5);
        assert!(text.starts_with("task_id,seed,auc"));
    }
}
