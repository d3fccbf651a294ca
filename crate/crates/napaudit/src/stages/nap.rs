use std::fs;
use std::path::Path;

use napaudit_core::groups::UnionKey;
use napaudit_core::nap::{group_mean, nap_set_from_means, ActivationSource, GroupMean, Nap, ProfileKey, UnionSpec};
use napaudit_core::{Schema, Tensor, Variable};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ingest::{load_groups, LockedLayer};
use super::{read_json, slug, write_json, Pipeline, Stage};
use crate::error::{AuditError, Result};
use crate::npy::{read_array_file_as, write_array_file, NpyLayer};

pub const INDEX_FILE: &str = "index.json";
pub const EXPECTATION_FILE: &str = "expectation.npy";
pub const PROFILES_FILE: &str = "channel_profiles.npy";
pub const UNION_PROFILES_FILE: &str = "union_profiles.npy";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NapIndexEntry {
    /// Class index; absent for unions.
    pub class: Option<usize>,
    pub race: Option<String>,
    pub age: Option<String>,
    pub gender: Option<String>,
    pub label: String,
    pub count: usize,
    /// Relative to the layer directory.
    pub file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NapIndex {
    pub layer_id: u32,
    pub layer_name: String,
    pub shape: Vec<usize>,
    pub channels: usize,
    pub total_count: usize,
    pub expectation: String,
    /// `[groups, channels]` array, rows in the order of `groups`.
    pub channel_profiles: String,
    pub union_profiles: Option<String>,
    /// Largest entry of `Σ |G| · NAP(G)`, a numerical health check.
    pub weighted_sum_max_abs: f64,
    pub groups: Vec<NapIndexEntry>,
    pub unions: Vec<NapIndexEntry>,
    pub empty_groups: Vec<String>,
}

impl NapIndex {
    pub fn load(dir: &Path) -> Result<Self> {
        read_json(&dir.join(INDEX_FILE))
    }

    /// Channel profiles as `[groups, channels]`.
    pub fn profiles(&self, dir: &Path) -> Result<Tensor<f64>> {
        Ok(read_array_file_as(&dir.join(&self.channel_profiles))?)
    }

    pub fn union_profiles(&self, dir: &Path) -> Result<Option<Tensor<f64>>> {
        self.union_profiles
            .as_ref()
            .map(|f| Ok(read_array_file_as(&dir.join(f))?))
            .transpose()
    }
}

pub fn group_file(schema: &Schema, class: usize) -> String {
    format!("{class:03}_{}.npy", slug(&schema.display(schema.key_for_class(class))))
}

pub fn union_file(schema: &Schema, key: &UnionKey) -> String {
    let parts: Vec<String> = Variable::ALL
        .iter()
        .filter_map(|&v| key.get(v).map(|i| format!("{v}-{}", slug(schema.label(v, i)))))
        .collect();
    format!("unions/{}.npy", parts.join("__"))
}

fn entry(schema: &Schema, nap: &Nap<f32>) -> NapIndexEntry {
    match nap.key {
        ProfileKey::Group(k) => {
            let class = schema.class_index(k);
            NapIndexEntry {
                class: Some(class),
                race: Some(schema.label(Variable::Race, k.race).into()),
                age: Some(schema.label(Variable::Age, k.age).into()),
                gender: Some(schema.label(Variable::Gender, k.gender).into()),
                label: schema.display(k),
                count: nap.count,
                file: group_file(schema, class),
            }
        }
        ProfileKey::Union(u) => NapIndexEntry {
            class: None,
            race: u.race.map(|i| schema.label(Variable::Race, i).into()),
            age: u.age.map(|i| schema.label(Variable::Age, i).into()),
            gender: u.gender.map(|i| schema.label(Variable::Gender, i).into()),
            label: schema.display_union(&u),
            count: nap.count,
            file: union_file(schema, &u),
        },
    }
}

fn profile_matrix(naps: &[Nap<f32>], channels: usize) -> Result<Tensor<f64>> {
    let data = naps.iter().flat_map(|n| n.channel_profile.iter().copied()).collect();
    Ok(Tensor::new(vec![naps.len(), channels], data)?)
}

pub(super) fn open_layer(p: &Pipeline, layer: &LockedLayer) -> Result<NpyLayer> {
    let src = NpyLayer::open(Path::new(&layer.file.path))?;
    let examples = p.lock()?.examples;
    if src.num_examples() != examples || src.example_shape() != layer.shape.as_slice() {
        return Err(napaudit_core::Error::Shape(format!(
            "{} changed since ingest; rerun `napaudit ingest`",
            layer.file.path
        ))
        .into());
    }
    Ok(src)
}

pub(super) fn run(p: &Pipeline, dir: &Path) -> Result<()> {
    let groups = load_groups(p)?;
    let assignment = groups.assignment()?;
    let schema = assignment.schema().clone();
    let unions: Vec<UnionSpec> = p
        .cfg()
        .union_variables()?
        .into_iter()
        .map(UnionSpec::Variables)
        .collect();

    for layer in p.selected_layers()? {
        let src = open_layer(p, &layer)?;
        let members: Vec<_> = assignment.non_empty().collect();
        let means = members
            .par_iter()
            .map(|(key, ids)| group_mean(&src, layer.layer_id, ProfileKey::Group(*key), ids))
            .collect::<napaudit_core::Result<Vec<GroupMean>>>()?;
        let set = nap_set_from_means::<f32>(layer.layer_id, &assignment, means, &unions)?;

        let layer_dir = dir.join(layer.dir_name());
        fs::create_dir_all(layer_dir.join("unions")).map_err(AuditError::io(&layer_dir))?;
        set.naps.par_iter().chain(set.unions.par_iter()).try_for_each(|nap| {
            write_array_file(&nap.values, &layer_dir.join(entry(&schema, nap).file)).map_err(AuditError::from)
        })?;
        write_array_file(&set.expectation.expectation, &layer_dir.join(EXPECTATION_FILE))?;
        let channels = *layer.shape.last().expect("non-empty shape");
        write_array_file(&profile_matrix(&set.naps, channels)?, &layer_dir.join(PROFILES_FILE))?;
        if !set.unions.is_empty() {
            write_array_file(
                &profile_matrix(&set.unions, channels)?,
                &layer_dir.join(UNION_PROFILES_FILE),
            )?;
        }
        for key in &set.empty_groups {
            log::warn!(
                "layer {}: no profile for empty group {}",
                layer.dir_name(),
                schema.display(*key)
            );
        }
        let index = NapIndex {
            layer_id: layer.layer_id,
            layer_name: layer.name.clone(),
            shape: layer.shape.clone(),
            channels,
            total_count: set.expectation.total_count,
            expectation: EXPECTATION_FILE.into(),
            channel_profiles: PROFILES_FILE.into(),
            union_profiles: (!set.unions.is_empty()).then(|| UNION_PROFILES_FILE.into()),
            weighted_sum_max_abs: set.weighted_sum().iter().fold(0.0f64, |m, v| m.max(v.abs())),
            groups: set.naps.iter().map(|n| entry(&schema, n)).collect(),
            unions: set.unions.iter().map(|n| entry(&schema, n)).collect(),
            empty_groups: set.empty_groups.iter().map(|k| schema.display(*k)).collect(),
        };
        write_json(&layer_dir.join(INDEX_FILE), &index)?;
    }
    Ok(())
}

pub(super) fn layer_dir(p: &Pipeline, layer: &LockedLayer) -> std::path::PathBuf {
    p.stage_dir(Stage::Nap).join(layer.dir_name())
}
