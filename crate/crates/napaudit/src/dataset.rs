//! On-disk activation datasets: a manifest CSV, a schema JSON sidecar and one
//! array file per layer under `layers/`.

use std::fs;
use std::path::{Path, PathBuf};

use napaudit_core::groups::ExampleRecord;
use napaudit_core::{Manifest, Schema, Variable};
use serde::{Deserialize, Serialize};

use crate::error::{AuditError, Result};
use crate::npy::NpyLayer;

pub const MANIFEST_FILE: &str = "manifest.csv";
pub const SCHEMA_FILE: &str = "schema.json";
pub const LAYERS_DIR: &str = "layers";
const MANIFEST_HEADER: [&str; 5] = ["example_id", "image_path", "race", "age", "gender"];

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SchemaVariable {
    name: String,
    categories: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SchemaFile {
    variables: Vec<SchemaVariable>,
}

pub fn read_schema(path: &Path) -> Result<Schema> {
    let text = fs::read_to_string(path).map_err(AuditError::io(path))?;
    let file: SchemaFile = serde_json::from_str(&text).map_err(|e| AuditError::parse(path, e))?;
    let mut vocab: [Option<Vec<String>>; 3] = Default::default();
    for var in file.variables {
        let v = Variable::parse(&var.name)
            .ok_or_else(|| AuditError::parse(path, format!("unknown variable `{}`", var.name)))?;
        if vocab[v as usize].replace(var.categories).is_some() {
            return Err(AuditError::parse(path, format!("variable `{v}` declared twice")));
        }
    }
    let [race, age, gender] = vocab.map(|v| v.unwrap_or_default());
    Ok(Schema::new(race, age, gender)?)
}

pub fn write_schema(schema: &Schema, path: &Path) -> Result<()> {
    let file = SchemaFile {
        variables: Variable::ALL
            .iter()
            .map(|&v| SchemaVariable {
                name: v.name().to_string(),
                categories: schema.vocab(v).to_vec(),
            })
            .collect(),
    };
    let text = serde_json::to_string_pretty(&file).expect("schema serializes");
    fs::write(path, text + "\n").map_err(AuditError::io(path))
}

/// Reads and validates a manifest against `schema`.
pub fn read_manifest(path: &Path, schema: Schema) -> Result<Manifest> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| AuditError::parse(path, e))?;
    let header = reader.headers().map_err(|e| AuditError::parse(path, e))?.clone();
    if header.iter().collect::<Vec<_>>() != MANIFEST_HEADER {
        return Err(AuditError::parse(
            path,
            format!("header must be `{}`", MANIFEST_HEADER.join(",")),
        ));
    }
    let mut examples = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| AuditError::parse(path, e))?;
        let example_id = record[0].trim().parse::<u64>().map_err(|_| {
            AuditError::parse(
                path,
                format!("row {row}: example_id `{}` is not an integer", &record[0]),
            )
        })?;
        examples.push(ExampleRecord {
            example_id,
            image_path: record[1].to_string(),
            race: record[2].to_string(),
            age: record[3].to_string(),
            gender: record[4].to_string(),
        });
    }
    Manifest::new(schema, examples).map_err(|source| AuditError::InFile {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_manifest(manifest: &Manifest, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| AuditError::parse(path, e))?;
    let err = |e: csv::Error| AuditError::parse(path, e);
    w.write_record(MANIFEST_HEADER).map_err(err)?;
    for ex in &manifest.examples {
        w.write_record([
            &ex.example_id.to_string(),
            &ex.image_path,
            &ex.race,
            &ex.age,
            &ex.gender,
        ])
        .map_err(err)?;
    }
    w.flush().map_err(AuditError::io(path))
}

/// One layer file of a dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub layer_id: u32,
    pub name: String,
    /// Per-example shape, `[H, W, C]` or `[D]`.
    pub shape: Vec<usize>,
    pub path: PathBuf,
}

impl LayerSpec {
    /// `<layer_id>_<name>`, used for output directories.
    pub fn dir_name(&self) -> String {
        format!("{}_{}", self.layer_id, self.name)
    }

    pub fn open(&self) -> Result<NpyLayer> {
        Ok(NpyLayer::open(&self.path)?)
    }

    pub fn channels(&self) -> usize {
        *self.shape.last().expect("layer shape is never empty")
    }
}

pub fn layer_file_name(layer_id: u32, name: &str) -> String {
    format!("{layer_id}_{name}.npy")
}

/// A validated dataset directory.
#[derive(Debug, Clone)]
pub struct ActivationDataset {
    pub root: PathBuf,
    pub manifest: Manifest,
    pub layers: Vec<LayerSpec>,
}

impl ActivationDataset {
    /// Loads the manifest and schema and checks every layer header against the
    /// manifest. Activations themselves stay on disk.
    pub fn open(root: &Path) -> Result<Self> {
        let schema = read_schema(&root.join(SCHEMA_FILE))?;
        let manifest = read_manifest(&root.join(MANIFEST_FILE), schema)?;
        let layers_dir = root.join(LAYERS_DIR);
        let entries = fs::read_dir(&layers_dir).map_err(AuditError::io(&layers_dir))?;
        let mut layers = Vec::new();
        for entry in entries {
            let path = entry.map_err(AuditError::io(&layers_dir))?.path();
            if path.extension().and_then(|e| e.to_str()) != Some("npy") {
                continue;
            }
            let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
            let (id, name) = stem
                .split_once('_')
                .and_then(|(id, name)| Some((id.parse::<u32>().ok()?, name)))
                .filter(|(_, name)| !name.is_empty())
                .ok_or_else(|| AuditError::parse(&path, "layer files must be named `<layer_id>_<name>.npy`"))?;
            let layer = NpyLayer::open(&path)?;
            let shape = layer.header().shape.clone();
            if shape[0] != manifest.len() {
                return Err(AuditError::InFile {
                    path,
                    source: napaudit_core::Error::Shape(format!(
                        "{} examples on the leading axis but the manifest lists {}",
                        shape[0],
                        manifest.len()
                    )),
                });
            }
            if !matches!(shape.len() - 1, 1 | 3) {
                return Err(AuditError::InFile {
                    path,
                    source: napaudit_core::Error::Shape(format!(
                        "per-example shape {:?} must be [D] or [H, W, C]",
                        &shape[1..]
                    )),
                });
            }
            layers.push(LayerSpec {
                layer_id: id,
                name: name.to_string(),
                shape: shape[1..].to_vec(),
                path,
            });
        }
        layers.sort_by_key(|l| l.layer_id);
        if let Some(w) = layers.windows(2).find(|w| w[0].layer_id == w[1].layer_id) {
            return Err(AuditError::Validation(format!(
                "layer id {} appears twice in {}",
                w[0].layer_id,
                layers_dir.display()
            )));
        }
        if layers.is_empty() {
            return Err(AuditError::Validation(format!(
                "no layer files in {}",
                layers_dir.display()
            )));
        }
        Ok(Self {
            root: root.to_path_buf(),
            manifest,
            layers,
        })
    }

    pub fn schema(&self) -> &Schema {
        &self.manifest.schema
    }

    /// Layers selected by id or name; an empty selection means all.
    pub fn select(&self, wanted: &[String]) -> Result<Vec<LayerSpec>> {
        if wanted.is_empty() {
            return Ok(self.layers.clone());
        }
        wanted
            .iter()
            .map(|w| {
                self.layers
                    .iter()
                    .find(|l| l.name == *w || l.layer_id.to_string() == *w || l.dir_name() == *w)
                    .cloned()
                    .ok_or_else(|| {
                        let available: Vec<String> = self.layers.iter().map(|l| l.dir_name()).collect();
                        AuditError::Validation(format!("unknown layer `{w}`; available: {}", available.join(", ")))
                    })
            })
            .collect()
    }
}
