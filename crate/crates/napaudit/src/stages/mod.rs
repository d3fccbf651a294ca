//! Pipeline stages. Each stage writes into its own directory under the output
//! root and finishes by writing a `stamp.json` that fingerprints its inputs;
//! a stage whose stamp matches is skipped unless forced.

pub mod errors;
pub mod ingest;
pub mod layout;
pub mod nap;
pub mod probe;
pub mod render;
pub mod report;

use std::fmt;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{LoadedConfig, RunConfig};
use crate::error::{AuditError, Result};

pub use ingest::{DatasetLock, FileEntry, GroupEntry, GroupsFile, LockedLayer};
pub use nap::{NapIndex, NapIndexEntry};
pub use report::RunReport;

pub const STAMP_FILE: &str = "stamp.json";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    Ingest,
    Nap,
    Layout,
    Render,
    Probe,
    Errors,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 7] = [
        Stage::Ingest,
        Stage::Nap,
        Stage::Layout,
        Stage::Render,
        Stage::Probe,
        Stage::Errors,
        Stage::Report,
    ];

    /// CLI verb.
    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Nap => "nap",
            Stage::Layout => "layout",
            Stage::Render => "render",
            Stage::Probe => "probe",
            Stage::Errors => "errors",
            Stage::Report => "report",
        }
    }

    /// Output directory under the output root.
    pub fn dir_name(self) -> &'static str {
        match self {
            Stage::Nap => "naps",
            Stage::Render => "topomaps",
            s => s.name(),
        }
    }

    pub fn prerequisites(self) -> &'static [Stage] {
        match self {
            Stage::Ingest => &[],
            Stage::Nap | Stage::Probe => &[Stage::Ingest],
            Stage::Layout => &[Stage::Nap],
            Stage::Render => &[Stage::Nap, Stage::Layout],
            Stage::Errors => &[Stage::Probe],
            Stage::Report => &[
                Stage::Ingest,
                Stage::Nap,
                Stage::Layout,
                Stage::Render,
                Stage::Probe,
                Stage::Errors,
            ],
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stamp {
    pub stage: String,
    pub version: String,
    pub fingerprint: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Ran,
    UpToDate,
}

/// A configured pipeline rooted at an output directory.
#[derive(Debug, Clone)]
pub struct Pipeline {
    pub config: LoadedConfig,
    pub out: PathBuf,
    pub force: bool,
    /// Worker cap; `None` uses every core.
    pub jobs: Option<usize>,
}

impl Pipeline {
    pub fn new(config: LoadedConfig, out: impl Into<PathBuf>) -> Self {
        Self {
            config,
            out: out.into(),
            force: false,
            jobs: None,
        }
    }

    pub fn cfg(&self) -> &RunConfig {
        &self.config.config
    }

    pub fn stage_dir(&self, stage: Stage) -> PathBuf {
        self.out.join(stage.dir_name())
    }

    pub fn stamp(&self, stage: Stage) -> Option<Stamp> {
        read_json(&self.stage_dir(stage).join(STAMP_FILE)).ok()
    }

    fn require(&self, stage: Stage) -> Result<Vec<Stamp>> {
        stage
            .prerequisites()
            .iter()
            .map(|&p| {
                let path = self.stage_dir(p).join(STAMP_FILE);
                read_json::<Stamp>(&path).map_err(|_| AuditError::Prerequisite {
                    stage: stage.name(),
                    needs: p.name(),
                    missing: path.clone(),
                })
            })
            .collect()
    }

    /// Runs one stage inside a worker pool sized by `jobs`.
    pub fn run(&self, stage: Stage) -> Result<Outcome> {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(n) = self.jobs {
            builder = builder.num_threads(n.max(1));
        }
        let pool = builder
            .build()
            .map_err(|e| AuditError::Validation(format!("--jobs: {e}")))?;
        pool.install(|| self.run_in_pool(stage))
    }

    /// Runs every stage in order.
    pub fn run_all(&self) -> Result<()> {
        for stage in Stage::ALL {
            self.run(stage)?;
        }
        Ok(())
    }

    fn run_in_pool(&self, stage: Stage) -> Result<Outcome> {
        let upstream = self.require(stage)?;
        let mut inputs = serde_json::json!({
            "stage": stage.name(),
            "version": VERSION,
            "upstream": upstream.iter().map(|s| &s.fingerprint).collect::<Vec<_>>(),
        });
        let cfg = self.cfg();
        inputs["config"] = match stage {
            Stage::Ingest => ingest::fingerprint_inputs(self)?,
            Stage::Nap => serde_json::json!({ "layers": cfg.layers, "unions": cfg.unions }),
            Stage::Layout => serde_json::json!({ "layout": cfg.layout, "seed": cfg.layout_seed() }),
            Stage::Render => serde_json::json!({ "render": cfg.render }),
            Stage::Probe => {
                let mut probe = serde_json::to_value(&cfg.probe).expect("serializable");
                probe["top_k"] = serde_json::Value::Null;
                probe["error_split"] = serde_json::Value::Null;
                serde_json::json!({ "layers": cfg.layers, "probe": probe, "seed": cfg.probe_seed() })
            }
            Stage::Errors => {
                serde_json::json!({ "top_k": cfg.probe.top_k, "split": cfg.probe.error_split })
            }
            Stage::Report => serde_json::json!({ "config": self.config.text }),
        };
        let fingerprint = hex::encode(Sha256::digest(inputs.to_string().as_bytes()));

        let dir = self.stage_dir(stage);
        if !self.force {
            if let Some(stamp) = self.stamp(stage) {
                if stamp.fingerprint == fingerprint && stamp.version == VERSION {
                    log::info!("{stage}: up to date");
                    return Ok(Outcome::UpToDate);
                }
            }
        }
        if dir.exists() {
            fs::remove_dir_all(&dir).map_err(AuditError::io(&dir))?;
        }
        fs::create_dir_all(&dir).map_err(AuditError::io(&dir))?;
        log::info!("{stage}: running");
        let start = Instant::now();
        match stage {
            Stage::Ingest => ingest::run(self, &dir)?,
            Stage::Nap => nap::run(self, &dir)?,
            Stage::Layout => layout::run(self, &dir)?,
            Stage::Render => render::run(self, &dir)?,
            Stage::Probe => probe::run(self, &dir)?,
            Stage::Errors => errors::run(self, &dir)?,
            Stage::Report => report::run(self, &dir)?,
        }
        let stamp = Stamp {
            stage: stage.name().into(),
            version: VERSION.into(),
            fingerprint,
            seconds: start.elapsed().as_secs_f64(),
        };
        write_json(&dir.join(STAMP_FILE), &stamp)?;
        log::info!("{stage}: done in {:.2}s", stamp.seconds);
        Ok(Outcome::Ran)
    }

    pub(crate) fn lock(&self) -> Result<DatasetLock> {
        read_json(&self.stage_dir(Stage::Ingest).join(ingest::LOCK_FILE))
    }

    /// Layers chosen by the config, as recorded at ingest.
    pub(crate) fn selected_layers(&self) -> Result<Vec<LockedLayer>> {
        let lock = self.lock()?;
        if self.cfg().layers.is_empty() {
            return Ok(lock.layers);
        }
        self.cfg()
            .layers
            .iter()
            .map(|w| {
                lock.layers
                    .iter()
                    .find(|l| l.name == *w || l.layer_id.to_string() == *w || l.dir_name() == *w)
                    .cloned()
                    .ok_or_else(|| AuditError::Validation(format!("unknown layer `{w}`")))
            })
            .collect()
    }
}

/// File-system-safe form of a label.
pub fn slug(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for ch in text.chars() {
        let c = if ch.is_ascii_alphanumeric() || ch == '-' || ch == '.' {
            ch
        } else {
            '_'
        };
        if !(c == '_' && out.ends_with('_')) {
            out.push(c);
        }
    }
    out.trim_matches('_').to_string()
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("serializable");
    fs::write(path, text + "\n").map_err(AuditError::io(path))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(AuditError::io(path))?;
    serde_json::from_str(&text).map_err(|e| AuditError::parse(path, e))
}

pub fn sha256_file(path: &Path) -> Result<(String, u64)> {
    let mut file = fs::File::open(path).map_err(AuditError::io(path))?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    let mut total = 0u64;
    loop {
        let n = file.read(&mut buf).map_err(AuditError::io(path))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
        total += n as u64;
    }
    Ok((hex::encode(hasher.finalize()), total))
}

/// CSV writer that maps errors onto the output path.
pub(crate) struct CsvOut {
    path: PathBuf,
    writer: csv::Writer<fs::File>,
}

impl CsvOut {
    pub fn create(path: &Path, header: &[&str]) -> Result<Self> {
        let writer = csv::Writer::from_path(path).map_err(|e| AuditError::parse(path, e))?;
        let mut out = Self {
            path: path.to_path_buf(),
            writer,
        };
        out.row(header)?;
        Ok(out)
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer
            .write_record(fields)
            .map_err(|e| AuditError::parse(&self.path, e))
    }

    pub fn finish(mut self) -> Result<()> {
        self.writer.flush().map_err(AuditError::io(&self.path))
    }
}

/// Relative path from the output root, with forward slashes.
pub(crate) fn rel(out: &Path, path: &Path) -> String {
    path.strip_prefix(out)
        .unwrap_or(path)
        .components()
        .map(|c| c.as_os_str().to_string_lossy())
        .collect::<Vec<_>>()
        .join("/")
}
