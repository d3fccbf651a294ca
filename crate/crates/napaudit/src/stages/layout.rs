use std::path::Path;

use napaudit_core::layout::{initial_projection, relax, ChannelFeatureMatrix, ParticleLayout};
use napaudit_core::seed;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::nap::{layer_dir, NapIndex};
use super::{write_json, CsvOut, Pipeline};
use crate::error::{AuditError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutMeta {
    pub layer_id: u32,
    pub layer_name: String,
    pub channels: usize,
    pub seed: u64,
    pub iterations: usize,
    pub step: f64,
    pub projection: String,
    pub min_pairwise_distance: Option<f64>,
}

pub fn write_layout_csv(layout: &ParticleLayout, path: &Path) -> Result<()> {
    let mut out = CsvOut::create(path, &["channel_index", "x", "y"])?;
    for (i, p) in layout.coords.iter().enumerate() {
        out.row([i.to_string(), p[0].to_string(), p[1].to_string()])?;
    }
    out.finish()
}

pub fn read_layout_csv(path: &Path, seed: u64) -> Result<ParticleLayout> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| AuditError::parse(path, e))?;
    let mut coords = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| AuditError::parse(path, e))?;
        let field = |i: usize| -> Result<f64> {
            record
                .get(i)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| AuditError::parse(path, format!("row {row}: bad number")))
        };
        if field(0)? as usize != row {
            return Err(AuditError::parse(
                path,
                format!("row {row}: channels must be listed in order"),
            ));
        }
        coords.push([field(1)?, field(2)?]);
    }
    Ok(ParticleLayout::new(coords, seed))
}

pub(super) fn run(p: &Pipeline, dir: &Path) -> Result<()> {
    let cfg = p.cfg();
    let method = cfg.projection_method()?;
    p.selected_layers()?.par_iter().try_for_each(|layer| {
        let nap_dir = layer_dir(p, layer);
        let index = NapIndex::load(&nap_dir)?;
        let profiles = index.profiles(&nap_dir)?;
        let (g, c) = (profiles.shape()[0], profiles.shape()[1]);
        let mut data = vec![0.0; g * c];
        for (gi, row) in profiles.data().chunks_exact(c).enumerate() {
            for (ci, &v) in row.iter().enumerate() {
                data[ci * g + gi] = v;
            }
        }
        let features = ChannelFeatureMatrix::new(layer.layer_id, c, g, data)?;
        let layer_seed = seed::substream(cfg.layout_seed(), u64::from(layer.layer_id));
        let start = initial_projection(&features, method, layer_seed)?;
        let relaxed = relax(&start, cfg.layout.iterations, cfg.layout.step)?;
        write_layout_csv(&relaxed, &dir.join(format!("{}.csv", layer.dir_name())))?;
        let meta = LayoutMeta {
            layer_id: layer.layer_id,
            layer_name: layer.name.clone(),
            channels: c,
            seed: layer_seed,
            iterations: cfg.layout.iterations,
            step: cfg.layout.step,
            projection: method.name().into(),
            min_pairwise_distance: relaxed.min_pairwise_distance(),
        };
        write_json(&dir.join(format!("{}.json", layer.dir_name())), &meta)
    })
}
