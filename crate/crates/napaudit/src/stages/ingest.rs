use std::path::Path;

use napaudit_core::groups::{build_groups, cap_groups, frequency_table, FrequencyTable};
use napaudit_core::{GroupAssignment, Schema, Variable};
use serde::{Deserialize, Serialize};

use super::{read_json, sha256_file, write_json, CsvOut, Pipeline, Stage};
use crate::dataset::{ActivationDataset, MANIFEST_FILE, SCHEMA_FILE};
use crate::error::{AuditError, Result};

pub const LOCK_FILE: &str = "dataset.lock.json";
pub const GROUPS_FILE: &str = "groups.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

impl FileEntry {
    fn of(path: &Path) -> Result<Self> {
        let (sha256, bytes) = sha256_file(path)?;
        Ok(Self {
            path: path.display().to_string(),
            sha256,
            bytes,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LockedLayer {
    pub layer_id: u32,
    pub name: String,
    pub shape: Vec<usize>,
    pub file: FileEntry,
}

impl LockedLayer {
    pub fn dir_name(&self) -> String {
        format!("{}_{}", self.layer_id, self.name)
    }
}

/// Checksummed record of the dataset a run was built from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetLock {
    pub root: String,
    pub examples: usize,
    pub manifest: FileEntry,
    pub schema: FileEntry,
    pub layers: Vec<LockedLayer>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupEntry {
    pub class: usize,
    pub race: String,
    pub age: String,
    pub gender: String,
    pub full_count: usize,
    /// Example ids kept after capping, ascending.
    pub ids: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupsFile {
    pub cap: usize,
    pub seed: u64,
    pub race: Vec<String>,
    pub age: Vec<String>,
    pub gender: Vec<String>,
    pub groups: Vec<GroupEntry>,
}

impl GroupsFile {
    pub fn schema(&self) -> Result<Schema> {
        Ok(Schema::new(self.race.clone(), self.age.clone(), self.gender.clone())?)
    }

    pub fn assignment(&self) -> Result<GroupAssignment> {
        let ids = self.groups.iter().map(|g| g.ids.clone()).collect();
        Ok(GroupAssignment::from_groups(self.schema()?, ids, Some(self.seed))?)
    }
}

/// Hashes the dataset files so changed inputs invalidate the stage.
pub(super) fn fingerprint_inputs(p: &Pipeline) -> Result<serde_json::Value> {
    let cfg = p.cfg();
    let root = &cfg.dataset_root;
    let mut files = Vec::new();
    for name in [MANIFEST_FILE, SCHEMA_FILE] {
        files.push(FileEntry::of(&root.join(name)).map(|f| f.sha256).unwrap_or_default());
    }
    let layers_dir = root.join(crate::dataset::LAYERS_DIR);
    if let Ok(entries) = std::fs::read_dir(&layers_dir) {
        let mut paths: Vec<_> = entries.filter_map(|e| e.ok().map(|e| e.path())).collect();
        paths.sort();
        for path in paths {
            files.push(format!("{}:{}", path.display(), FileEntry::of(&path)?.sha256));
        }
    }
    Ok(serde_json::json!({
        "root": root.display().to_string(),
        "cap": cfg.cap,
        "seed": cfg.cap_seed(),
        "files": files,
    }))
}

pub(super) fn run(p: &Pipeline, dir: &Path) -> Result<()> {
    let cfg = p.cfg();
    let ds = ActivationDataset::open(&cfg.dataset_root)?;
    ds.select(&cfg.layers)?;
    let lock = DatasetLock {
        root: ds.root.display().to_string(),
        examples: ds.manifest.len(),
        manifest: FileEntry::of(&ds.root.join(MANIFEST_FILE))?,
        schema: FileEntry::of(&ds.root.join(SCHEMA_FILE))?,
        layers: ds
            .layers
            .iter()
            .map(|l| {
                Ok(LockedLayer {
                    layer_id: l.layer_id,
                    name: l.name.clone(),
                    shape: l.shape.clone(),
                    file: FileEntry::of(&l.path)?,
                })
            })
            .collect::<Result<_>>()?,
    };
    write_json(&dir.join(LOCK_FILE), &lock)?;

    let full = build_groups(&ds.manifest)?;
    let capped = cap_groups(&full, cfg.cap, cfg.cap_seed())?;
    let schema = ds.schema();
    let groups = GroupsFile {
        cap: cfg.cap,
        seed: cfg.cap_seed(),
        race: schema.vocab(Variable::Race).to_vec(),
        age: schema.vocab(Variable::Age).to_vec(),
        gender: schema.vocab(Variable::Gender).to_vec(),
        groups: schema
            .keys()
            .enumerate()
            .map(|(class, key)| GroupEntry {
                class,
                race: schema.label(Variable::Race, key.race).into(),
                age: schema.label(Variable::Age, key.age).into(),
                gender: schema.label(Variable::Gender, key.gender).into(),
                full_count: full.get(key).len(),
                ids: capped.get(key).to_vec(),
            })
            .collect(),
    };
    write_json(&dir.join(GROUPS_FILE), &groups)?;
    for g in groups.groups.iter().filter(|g| g.full_count == 0) {
        log::warn!("group {}, {}, {} has no examples", g.race, g.age, g.gender);
    }
    write_frequency_csv(&frequency_table(&full), &dir.join("frequency_full.csv"))?;
    write_frequency_csv(&frequency_table(&capped), &dir.join("frequency_capped.csv"))?;
    Ok(())
}

/// Frequency table in the figure layout: one row per race × gender, one column
/// per age, marginal totals in the last row and column.
pub fn write_frequency_csv(t: &FrequencyTable, path: &Path) -> Result<()> {
    let s = &t.schema;
    let mut header = vec!["race", "gender"];
    header.extend(s.vocab(Variable::Age).iter().map(String::as_str));
    header.push("total");
    let mut out = CsvOut::create(path, &header)?;
    for (r, race) in s.vocab(Variable::Race).iter().enumerate() {
        for (g, gender) in s.vocab(Variable::Gender).iter().enumerate() {
            let mut row = vec![race.clone(), gender.clone()];
            for a in 0..s.vocab(Variable::Age).len() {
                let key = napaudit_core::GroupKey {
                    race: r as u16,
                    age: a as u16,
                    gender: g as u16,
                };
                row.push(t.count(key).to_string());
            }
            row.push(t.race_gender[r][g].to_string());
            out.row(&row)?;
        }
    }
    let mut row = vec!["total".to_string(), String::new()];
    row.extend(t.per_age.iter().map(u64::to_string));
    row.push(t.total.to_string());
    out.row(&row)?;
    out.finish()
}

pub(crate) fn load_groups(p: &Pipeline) -> Result<GroupsFile> {
    let path = p.stage_dir(Stage::Ingest).join(GROUPS_FILE);
    read_json(&path).map_err(|e| match e {
        AuditError::Io { .. } => AuditError::Prerequisite {
            stage: "nap",
            needs: "ingest",
            missing: path,
        },
        e => e,
    })
}
