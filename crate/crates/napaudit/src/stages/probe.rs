use std::fs;
use std::path::Path;

use napaudit_core::probe::{
    assemble_probe_dataset, evaluate, train_probe, LearningCurves, ProbeDataset, ProbeModel, Split,
};
use napaudit_core::{seed, GroupAssignment, Tensor};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ingest::{load_groups, LockedLayer};
use super::nap::open_layer;
use super::{read_json, write_json, CsvOut, Pipeline, Stage};
use crate::error::{AuditError, Result};
use crate::imaging::{line_chart, write_png, Series};
use crate::npy::{read_array_file_as, write_array_file};

pub const SWEEP_FILE: &str = "sweep.csv";
pub const META_FILE: &str = "meta.json";
const WEIGHTS_FILE: &str = "weights.npy";
const BIAS_FILE: &str = "bias.npy";
const TRAIN_COLOR: [u8; 3] = [31, 119, 180];
const VAL_COLOR: [u8; 3] = [214, 39, 40];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeMeta {
    pub layer_id: u32,
    pub layer_name: String,
    pub dim: usize,
    pub classes: usize,
    pub train_examples: usize,
    pub val_examples: usize,
    pub train_acc: f64,
    pub val_acc: Option<f64>,
    pub skipped_groups: Vec<String>,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// Rebuilds the probe dataset of a layer exactly as the probe stage saw it.
pub(super) fn dataset(p: &Pipeline, layer: &LockedLayer, assignment: &GroupAssignment) -> Result<ProbeDataset> {
    let cfg = p.cfg();
    let pc = cfg.probe_config()?;
    let src = open_layer(p, layer)?;
    Ok(assemble_probe_dataset(
        &src,
        layer.layer_id,
        assignment,
        pc.method,
        pc.max_hw,
        pc.max_per_group,
        seed::substream(cfg.probe_seed(), 0),
    )?)
}

pub(super) fn load_model(p: &Pipeline, layer: &LockedLayer) -> Result<ProbeModel> {
    let dir = p.stage_dir(Stage::Probe).join(layer.dir_name());
    let w: Tensor<f64> = read_array_file_as(&dir.join(WEIGHTS_FILE))?;
    let b: Tensor<f64> = read_array_file_as(&dir.join(BIAS_FILE))?;
    let [dim, classes] = w.shape() else {
        return Err(AuditError::parse(&dir.join(WEIGHTS_FILE), "weights must be a matrix"));
    };
    Ok(ProbeModel::from_parts(
        *dim,
        *classes,
        w.data().to_vec(),
        b.data().to_vec(),
    )?)
}

pub(super) fn load_meta(p: &Pipeline, layer: &LockedLayer) -> Result<ProbeMeta> {
    read_json(&p.stage_dir(Stage::Probe).join(layer.dir_name()).join(META_FILE))
}

fn write_curves(curves: &LearningCurves, dir: &Path, title: &str) -> Result<()> {
    let mut out = CsvOut::create(
        &dir.join("curves.csv"),
        &["epoch", "train_acc", "val_acc", "train_loss"],
    )?;
    for e in 0..curves.epochs() {
        out.row([
            (e + 1).to_string(),
            curves.train_accuracy[e].to_string(),
            fmt_opt(curves.val_accuracy[e]),
            curves.train_loss[e].to_string(),
        ])?;
    }
    out.finish()?;
    let train: Vec<Option<f64>> = curves.train_accuracy.iter().map(|&v| Some(v)).collect();
    let chart = line_chart(
        title,
        &[
            Series {
                name: "train",
                color: TRAIN_COLOR,
                values: &train,
            },
            Series {
                name: "val",
                color: VAL_COLOR,
                values: &curves.val_accuracy,
            },
        ],
        "epoch",
    );
    write_png(&chart, &dir.join("curves.png"))
}

pub(super) fn run(p: &Pipeline, dir: &Path) -> Result<()> {
    let cfg = p.cfg();
    let pc = cfg.probe_config()?;
    let assignment = load_groups(p)?.assignment()?;
    let schema = assignment.schema();
    let layers = p.selected_layers()?;
    let metas = layers
        .par_iter()
        .map(|layer| {
            let pd = dataset(p, layer, &assignment)?;
            let (model, curves) = train_probe(&pd, &pc, seed::substream(cfg.probe_seed(), 1))?;
            let out = dir.join(layer.dir_name());
            fs::create_dir_all(&out).map_err(AuditError::io(&out))?;
            write_array_file(
                &Tensor::new(vec![model.dim, model.classes], model.weights.clone())?,
                &out.join(WEIGHTS_FILE),
            )?;
            write_array_file(
                &Tensor::new(vec![model.classes], model.bias.clone())?,
                &out.join(BIAS_FILE),
            )?;
            write_curves(&curves, &out, &format!("probe accuracy, {}", layer.dir_name()))?;
            let val_examples = pd.indices(Split::Val).len();
            let meta = ProbeMeta {
                layer_id: layer.layer_id,
                layer_name: layer.name.clone(),
                dim: pd.dim,
                classes: pd.num_classes,
                train_examples: pd.len() - val_examples,
                val_examples,
                train_acc: evaluate(&model, &pd, Split::Train)?,
                val_acc: if val_examples > 0 {
                    Some(evaluate(&model, &pd, Split::Val)?)
                } else {
                    None
                },
                skipped_groups: pd.skipped.iter().map(|k| schema.display(*k)).collect(),
            };
            write_json(&out.join(META_FILE), &meta)?;
            Ok(meta)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut sweep = CsvOut::create(
        &dir.join(SWEEP_FILE),
        &["layer_id", "layer_name", "train_acc", "val_acc"],
    )?;
    for m in &metas {
        sweep.row([
            m.layer_id.to_string(),
            m.layer_name.clone(),
            m.train_acc.to_string(),
            fmt_opt(m.val_acc),
        ])?;
    }
    sweep.finish()?;
    let train: Vec<Option<f64>> = metas.iter().map(|m| Some(m.train_acc)).collect();
    let val: Vec<Option<f64>> = metas.iter().map(|m| m.val_acc).collect();
    let chart = line_chart(
        "probe accuracy by layer",
        &[
            Series {
                name: "train",
                color: TRAIN_COLOR,
                values: &train,
            },
            Series {
                name: "val",
                color: VAL_COLOR,
                values: &val,
            },
        ],
        "layer",
    );
    write_png(&chart, &dir.join("sweep.png"))
}
