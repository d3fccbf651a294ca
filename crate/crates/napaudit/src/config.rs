//! Run configuration, read from a single TOML file.

use std::fs;
use std::path::{Path, PathBuf};

use napaudit_core::layout::ProjectionMethod;
use napaudit_core::probe::{ProbeConfig, Regularization, Split};
use napaudit_core::{seed, DownsampleMethod, Variable};
use serde::{Deserialize, Serialize};

use crate::error::{AuditError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Dataset directory; relative paths resolve against the config file.
    pub dataset_root: PathBuf,
    /// Layer ids or names; empty selects every layer.
    pub layers: Vec<String>,
    pub cap: usize,
    pub seed: u64,
    /// Union groups to profile, e.g. `"race"` or `"age+gender"`.
    pub unions: Vec<String>,
    pub probe: ProbeSection,
    pub layout: LayoutSection,
    pub render: RenderSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeSection {
    pub max_per_group: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub dropout: f64,
    pub l1: f64,
    pub l2: f64,
    pub downsample: String,
    pub max_hw: usize,
    pub learning_rate: f64,
    pub epsilon: f64,
    /// Rows kept in each error table.
    pub top_k: usize,
    /// `train` or `val`.
    pub error_split: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LayoutSection {
    pub iterations: usize,
    pub step: f64,
    pub projection: String,
    /// Overrides the seed derived from the master seed.
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenderSection {
    pub resolution: usize,
    pub percentile: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dataset_root: PathBuf::from("dataset"),
            layers: Vec::new(),
            cap: 640,
            seed: 0,
            unions: vec!["race".into(), "age".into(), "gender".into()],
            probe: ProbeSection::default(),
            layout: LayoutSection::default(),
            render: RenderSection::default(),
        }
    }
}

impl Default for ProbeSection {
    fn default() -> Self {
        let p = ProbeConfig::default();
        Self {
            max_per_group: p.max_per_group,
            epochs: p.epochs,
            batch_size: p.batch_size,
            dropout: p.regularization.dropout,
            l1: p.regularization.l1,
            l2: p.regularization.l2,
            downsample: p.method.name().into(),
            max_hw: p.max_hw,
            learning_rate: p.learning_rate,
            epsilon: p.epsilon,
            top_k: 10,
            error_split: Split::Train.name().into(),
        }
    }
}

impl Default for LayoutSection {
    fn default() -> Self {
        Self {
            iterations: napaudit_core::layout::DEFAULT_ITERATIONS,
            step: napaudit_core::layout::DEFAULT_STEP,
            projection: ProjectionMethod::Pca.name().into(),
            seed: None,
        }
    }
}

impl Default for RenderSection {
    fn default() -> Self {
        Self {
            resolution: napaudit_core::raster::DEFAULT_RESOLUTION,
            percentile: napaudit_core::color::DEFAULT_PERCENTILE,
        }
    }
}

fn invalid(msg: String) -> AuditError {
    AuditError::Validation(format!("config: {msg}"))
}

fn positive(name: &str, v: usize) -> Result<()> {
    if v == 0 {
        return Err(invalid(format!("{name} must be positive")));
    }
    Ok(())
}

fn positive_real(name: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && v > 0.0) {
        return Err(invalid(format!("{name} must be a positive number, got {v}")));
    }
    Ok(())
}

fn non_negative(name: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && v >= 0.0) {
        return Err(invalid(format!("{name} must be non-negative, got {v}")));
    }
    Ok(())
}

/// Parses a union spec such as `race` or `age+gender`.
pub fn parse_union(s: &str) -> Result<Vec<Variable>> {
    let vars = s
        .split('+')
        .map(|part| {
            Variable::parse(part.trim()).ok_or_else(|| invalid(format!("unknown variable `{part}` in union `{s}`")))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut unique = vars.clone();
    unique.sort();
    unique.dedup();
    if !(1..=2).contains(&unique.len()) || unique.len() != vars.len() {
        return Err(invalid(format!("union `{s}` must name one or two distinct variables")));
    }
    Ok(unique)
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| invalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        positive("cap", self.cap)?;
        let p = &self.probe;
        positive("probe.max_per_group", p.max_per_group)?;
        positive("probe.epochs", p.epochs)?;
        positive("probe.batch_size", p.batch_size)?;
        positive("probe.max_hw", p.max_hw)?;
        positive("probe.top_k", p.top_k)?;
        positive_real("probe.learning_rate", p.learning_rate)?;
        positive_real("probe.epsilon", p.epsilon)?;
        non_negative("probe.l1", p.l1)?;
        non_negative("probe.l2", p.l2)?;
        if !(0.0..1.0).contains(&p.dropout) {
            return Err(invalid(format!("probe.dropout must lie in [0, 1), got {}", p.dropout)));
        }
        self.downsample_method()?;
        self.error_split()?;
        positive("layout.iterations", self.layout.iterations)?;
        positive_real("layout.step", self.layout.step)?;
        self.projection_method()?;
        positive("render.resolution", self.render.resolution)?;
        if !(self.render.percentile > 50.0 && self.render.percentile <= 100.0) {
            return Err(invalid(format!(
                "render.percentile must lie in (50, 100], got {}",
                self.render.percentile
            )));
        }
        for u in &self.unions {
            parse_union(u)?;
        }
        Ok(())
    }

    pub fn downsample_method(&self) -> Result<DownsampleMethod> {
        DownsampleMethod::parse(&self.probe.downsample).ok_or_else(|| {
            invalid(format!(
                "probe.downsample `{}` is not one of subsample, avgpool",
                self.probe.downsample
            ))
        })
    }

    pub fn projection_method(&self) -> Result<ProjectionMethod> {
        ProjectionMethod::parse(&self.layout.projection).ok_or_else(|| {
            invalid(format!(
                "layout.projection `{}` is not one of pca, neighbor-embedding",
                self.layout.projection
            ))
        })
    }

    pub fn error_split(&self) -> Result<Split> {
        match self.probe.error_split.as_str() {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            other => Err(invalid(format!("probe.error_split `{other}` is not one of train, val"))),
        }
    }

    pub fn probe_config(&self) -> Result<ProbeConfig> {
        let p = &self.probe;
        Ok(ProbeConfig {
            max_per_group: p.max_per_group,
            epochs: p.epochs,
            batch_size: p.batch_size,
            regularization: Regularization {
                dropout: p.dropout,
                l1: p.l1,
                l2: p.l2,
            },
            method: self.downsample_method()?,
            max_hw: p.max_hw,
            learning_rate: p.learning_rate,
            epsilon: p.epsilon,
            ..ProbeConfig::default()
        })
    }

    pub fn union_variables(&self) -> Result<Vec<Vec<Variable>>> {
        self.unions.iter().map(|u| parse_union(u)).collect()
    }

    pub fn cap_seed(&self) -> u64 {
        seed::stage_seed(self.seed, "ingest")
    }

    pub fn probe_seed(&self) -> u64 {
        seed::stage_seed(self.seed, "probe")
    }

    pub fn layout_seed(&self) -> u64 {
        self.layout
            .seed
            .unwrap_or_else(|| seed::stage_seed(self.seed, "layout"))
    }
}

/// A configuration together with its source text and location.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: RunConfig,
    /// Verbatim file contents, echoed into the report.
    pub text: String,
    pub path: Option<PathBuf>,
}

impl LoadedConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(AuditError::io(path))?;
        let mut config = RunConfig::from_toml(&text).map_err(|e| match e {
            AuditError::Validation(m) => AuditError::Validation(format!("{}: {m}", path.display())),
            e => e,
        })?;
        if config.dataset_root.is_relative() {
            let base = path.parent().unwrap_or(Path::new("."));
            config.dataset_root = base.join(&config.dataset_root);
        }
        Ok(Self {
            config,
            text,
            path: Some(path.to_path_buf()),
        })
    }

    pub fn from_config(config: RunConfig) -> Result<Self> {
        config.validate()?;
        let text = toml::to_string_pretty(&config).map_err(|e| invalid(e.to_string()))?;
        Ok(Self {
            config,
            text,
            path: None,
        })
    }
}
