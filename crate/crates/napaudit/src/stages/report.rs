use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ingest::{load_groups, GROUPS_FILE, LOCK_FILE};
use super::nap::{layer_dir, INDEX_FILE};
use super::probe::{load_meta, SWEEP_FILE};
use super::render::COMPOSITE_FILE;
use super::{rel, write_json, Pipeline, Stage, VERSION};
use crate::error::{AuditError, Result};

pub const REPORT_FILE: &str = "report.json";
pub const SUMMARY_FILE: &str = "summary.txt";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub class: usize,
    pub label: String,
    pub full_count: usize,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerReport {
    pub layer_id: u32,
    pub layer_name: String,
    pub shape: Vec<usize>,
    pub train_acc: f64,
    pub val_acc: Option<f64>,
    pub learning_curves: String,
    pub error_table: String,
    pub nap_index: String,
    pub layout: String,
    pub topomaps: String,
    pub composite: String,
}

/// Everything a run produced, with paths relative to the output root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub version: String,
    pub config: String,
    pub config_path: Option<String>,
    pub master_seed: u64,
    pub dataset_root: String,
    pub dataset_lock: String,
    pub groups_file: String,
    pub sweep: String,
    pub examples: usize,
    pub groups: Vec<GroupSummary>,
    pub empty_groups: Vec<String>,
    pub layers: Vec<LayerReport>,
    /// Wall-clock seconds of the most recent run of each stage.
    pub timings: Vec<(String, f64)>,
}

pub(super) fn run(p: &Pipeline, dir: &Path) -> Result<()> {
    let cfg = p.cfg();
    let out = &p.out;
    let lock = p.lock()?;
    let groups = load_groups(p)?;
    let mut layers = Vec::new();
    for layer in p.selected_layers()? {
        let meta = load_meta(p, &layer)?;
        let name = layer.dir_name();
        let topo = p.stage_dir(Stage::Render).join(&name);
        layers.push(LayerReport {
            layer_id: layer.layer_id,
            layer_name: layer.name.clone(),
            shape: layer.shape.clone(),
            train_acc: meta.train_acc,
            val_acc: meta.val_acc,
            learning_curves: rel(out, &p.stage_dir(Stage::Probe).join(&name).join("curves.csv")),
            error_table: rel(out, &p.stage_dir(Stage::Errors).join(format!("{name}.csv"))),
            nap_index: rel(out, &layer_dir(p, &layer).join(INDEX_FILE)),
            layout: rel(out, &p.stage_dir(Stage::Layout).join(format!("{name}.csv"))),
            composite: rel(out, &topo.join(COMPOSITE_FILE)),
            topomaps: rel(out, &topo),
        });
    }
    let report = RunReport {
        version: VERSION.into(),
        config: p.config.text.clone(),
        config_path: p.config.path.as_ref().map(|p| p.display().to_string()),
        master_seed: cfg.seed,
        dataset_root: lock.root.clone(),
        dataset_lock: rel(out, &p.stage_dir(Stage::Ingest).join(LOCK_FILE)),
        groups_file: rel(out, &p.stage_dir(Stage::Ingest).join(GROUPS_FILE)),
        sweep: rel(out, &p.stage_dir(Stage::Probe).join(SWEEP_FILE)),
        examples: lock.examples,
        groups: groups
            .groups
            .iter()
            .map(|g| GroupSummary {
                class: g.class,
                label: format!("{}, {}, {}", g.race, g.age, g.gender),
                full_count: g.full_count,
                count: g.ids.len(),
            })
            .collect(),
        empty_groups: groups
            .groups
            .iter()
            .filter(|g| g.ids.is_empty())
            .map(|g| format!("{}, {}, {}", g.race, g.age, g.gender))
            .collect(),
        layers,
        timings: Stage::ALL
            .iter()
            .filter(|&&s| s != Stage::Report)
            .filter_map(|&s| p.stamp(s).map(|st| (s.name().to_string(), st.seconds)))
            .collect(),
    };
    for path in report.paths() {
        if !out.join(path).exists() {
            return Err(AuditError::Validation(format!(
                "report references missing artifact {path}"
            )));
        }
    }
    write_json(&dir.join(REPORT_FILE), &report)?;
    let summary = dir.join(SUMMARY_FILE);
    fs::write(&summary, report.summary()).map_err(AuditError::io(&summary))
}

impl RunReport {
    pub fn paths(&self) -> Vec<&str> {
        let mut paths = vec![self.dataset_lock.as_str(), &self.groups_file, &self.sweep];
        for l in &self.layers {
            paths.extend([
                l.learning_curves.as_str(),
                &l.error_table,
                &l.nap_index,
                &l.layout,
                &l.topomaps,
                &l.composite,
            ]);
        }
        paths
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        let populated = self.groups.len() - self.empty_groups.len();
        let capped: usize = self.groups.iter().map(|g| g.count).sum();
        let _ = writeln!(s, "napaudit {} run report", self.version);
        let _ = writeln!(s, "dataset: {} ({} examples)", self.dataset_root, self.examples);
        let _ = writeln!(
            s,
            "groups: {} of {} populated, {capped} examples after capping",
            populated,
            self.groups.len()
        );
        for g in &self.empty_groups {
            let _ = writeln!(s, "  empty: {g}");
        }
        let _ = writeln!(
            s,
            "\nprobe accuracy (chance {:.4})",
            1.0 / self.groups.len().max(1) as f64
        );
        let _ = writeln!(s, "{:<32} {:>9} {:>9}", "layer", "train", "val");
        for l in &self.layers {
            let val = l.val_acc.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into());
            let _ = writeln!(
                s,
                "{:<32} {:>9.4} {:>9}",
                format!("{}_{}", l.layer_id, l.layer_name),
                l.train_acc,
                val
            );
        }
        let _ = writeln!(s, "\nartifacts");
        for l in &self.layers {
            let _ = writeln!(
                s,
                "  {}_{}: {} | {}",
                l.layer_id, l.layer_name, l.composite, l.error_table
            );
        }
        let _ = writeln!(s, "\ntimings");
        for (stage, secs) in &self.timings {
            let _ = writeln!(s, "  {stage:<8} {secs:>8.2}s");
        }
        s
    }
}
