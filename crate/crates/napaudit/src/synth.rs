//! Seeded synthetic activation datasets with planted group signals, used as
//! test fixtures and for trying the pipeline without real model dumps.

use std::fs;
use std::path::Path;

use napaudit_core::groups::ExampleRecord;
use napaudit_core::{seed, Manifest, Schema, Tensor, Variable};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::dataset::{layer_file_name, write_manifest, write_schema, LAYERS_DIR, MANIFEST_FILE, SCHEMA_FILE};
use crate::error::{AuditError, Result};
use crate::npy::write_array_file;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthLayer {
    pub name: String,
    pub shape: Vec<usize>,
    /// Scale of the per-group mean offset added to unit Gaussian noise.
    pub signal: f32,
}

impl SynthLayer {
    pub fn new(name: &str, shape: &[usize], signal: f32) -> Self {
        Self {
            name: name.to_string(),
            shape: shape.to_vec(),
            signal,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub schema: Schema,
    pub per_group: usize,
    /// Group sizes vary in `per_group..=per_group + size_jitter`.
    pub size_jitter: usize,
    pub layers: Vec<SynthLayer>,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            schema: Schema::fairface(),
            per_group: 8,
            size_jitter: 4,
            layers: vec![
                SynthLayer::new("conv_a", &[8, 8, 4], 0.0),
                SynthLayer::new("conv_b", &[12, 12, 8], 1.0),
                SynthLayer::new("conv_c", &[4, 4, 16], 0.3),
                SynthLayer::new("fc", &[32], 0.0),
            ],
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthData {
    pub manifest: Manifest,
    /// Class index of every example.
    pub classes: Vec<usize>,
    pub layers: Vec<(SynthLayer, Tensor<f32>)>,
}

pub fn generate(spec: &SynthSpec) -> Result<SynthData> {
    let schema = &spec.schema;
    let mut classes: Vec<usize> = (0..schema.num_groups())
        .flat_map(|c| {
            let extra = (seed::substream(spec.seed ^ 0x5eed, c as u64) % (spec.size_jitter as u64 + 1)) as usize;
            std::iter::repeat_n(c, spec.per_group + extra)
        })
        .collect();
    classes.shuffle(&mut seed::rng(seed::stage_seed(spec.seed, "synth-order")));

    let examples = classes
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let key = schema.key_for_class(c);
            ExampleRecord {
                example_id: i as u64,
                image_path: format!("images/{i:06}.jpg"),
                race: schema.label(Variable::Race, key.race).to_string(),
                age: schema.label(Variable::Age, key.age).to_string(),
                gender: schema.label(Variable::Gender, key.gender).to_string(),
            }
        })
        .collect();
    let manifest = Manifest::new(schema.clone(), examples)?;

    let mut layers = Vec::with_capacity(spec.layers.len());
    for (l, layer) in spec.layers.iter().enumerate() {
        let len: usize = layer.shape.iter().product();
        let layer_seed = seed::substream(seed::stage_seed(spec.seed, "synth-layer"), l as u64);
        let offsets: Vec<Vec<f32>> = (0..schema.num_groups())
            .map(|c| {
                let mut rng = seed::rng(seed::substream(layer_seed, c as u64));
                (0..len)
                    .map(|_| layer.signal * rng.sample::<f32, _>(StandardNormal))
                    .collect()
            })
            .collect();
        let mut rng = seed::rng(seed::substream(layer_seed, u64::MAX));
        let mut data = Vec::with_capacity(classes.len() * len);
        for &c in &classes {
            data.extend(offsets[c].iter().map(|o| o + rng.sample::<f32, _>(StandardNormal)));
        }
        let mut shape = vec![classes.len()];
        shape.extend_from_slice(&layer.shape);
        layers.push((layer.clone(), Tensor::new(shape, data)?));
    }
    Ok(SynthData {
        manifest,
        classes,
        layers,
    })
}

/// Writes `data` in the dataset directory layout under `root`.
pub fn write_dataset(data: &SynthData, root: &Path) -> Result<()> {
    let layers_dir = root.join(LAYERS_DIR);
    fs::create_dir_all(&layers_dir).map_err(AuditError::io(&layers_dir))?;
    write_schema(&data.manifest.schema, &root.join(SCHEMA_FILE))?;
    write_manifest(&data.manifest, &root.join(MANIFEST_FILE))?;
    for (id, (layer, tensor)) in data.layers.iter().enumerate() {
        write_array_file(tensor, &layers_dir.join(layer_file_name(id as u32, &layer.name)))?;
    }
    Ok(())
}
