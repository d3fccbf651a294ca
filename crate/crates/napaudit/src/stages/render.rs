use std::fs;
use std::path::Path;

use napaudit_core::color::{build_color_scale, render_group, ColorScale, RgbImage};
use napaudit_core::raster::Rasterizer;
use napaudit_core::{Schema, Tensor};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ingest::load_groups;
use super::layout::read_layout_csv;
use super::nap::{layer_dir, NapIndex};
use super::{write_json, Pipeline, Stage};
use crate::error::{AuditError, Result};
use crate::imaging::{composite, write_png};

pub const COMPOSITE_FILE: &str = "composite.png";
pub const SCALE_FILE: &str = "scale.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleMeta {
    pub layer_id: u32,
    pub vmax: f64,
    pub percentile: f64,
    pub resolution: usize,
}

fn render_rows(
    rasterizer: &Rasterizer,
    profiles: &Tensor<f64>,
    scale: &ColorScale,
    resolution: usize,
) -> Result<Vec<RgbImage>> {
    let c = profiles.shape()[1];
    profiles
        .data()
        .par_chunks_exact(c)
        .map(|profile| Ok(render_group(&rasterizer.rasterize(profile, c)?, resolution, scale)))
        .collect()
}

fn png_name(npy: &str) -> String {
    npy.strip_suffix(".npy").unwrap_or(npy).to_string() + ".png"
}

pub(super) fn run(p: &Pipeline, dir: &Path) -> Result<()> {
    let cfg = p.cfg();
    let schema: Schema = load_groups(p)?.schema()?;
    let res = cfg.render.resolution;
    for layer in p.selected_layers()? {
        let nap_dir = layer_dir(p, &layer);
        let index = NapIndex::load(&nap_dir)?;
        let profiles = index.profiles(&nap_dir)?;
        let layout = read_layout_csv(&p.stage_dir(Stage::Layout).join(format!("{}.csv", layer.dir_name())), 0)?;
        if layout.len() != index.channels {
            return Err(AuditError::Validation(format!(
                "layout for {} has {} channels, profiles have {}; rerun `napaudit layout`",
                layer.dir_name(),
                layout.len(),
                index.channels
            )));
        }
        let rasterizer = Rasterizer::new(&layout, res)?;
        let scale = build_color_scale(profiles.data(), cfg.render.percentile)?;
        let out = dir.join(layer.dir_name());
        fs::create_dir_all(out.join("unions")).map_err(AuditError::io(&out))?;

        let images = render_rows(&rasterizer, &profiles, &scale, res)?;
        images
            .par_iter()
            .zip(&index.groups)
            .try_for_each(|(img, e)| write_png(img, &out.join(png_name(&e.file))))?;
        if let Some(unions) = index.union_profiles(&nap_dir)? {
            let union_images = render_rows(&rasterizer, &unions, &scale, res)?;
            union_images
                .par_iter()
                .zip(&index.unions)
                .try_for_each(|(img, e)| write_png(img, &out.join(png_name(&e.file))))?;
        }

        let placed: Vec<_> = index
            .groups
            .iter()
            .zip(images)
            .map(|(e, img)| (schema.key_for_class(e.class.expect("intersectional entry")), img))
            .collect();
        write_png(&composite(&schema, &placed, res, &scale), &out.join(COMPOSITE_FILE))?;
        write_json(
            &out.join(SCALE_FILE),
            &ScaleMeta {
                layer_id: layer.layer_id,
                vmax: scale.vmax(),
                percentile: cfg.render.percentile,
                resolution: res,
            },
        )?;
    }
    Ok(())
}
