pub mod annotate;
pub mod augment;
pub mod calibrate;
pub mod config_check;
pub mod evaluate;
pub mod loss_eval;
pub mod plan;

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use anyhow::Context as _;
use gazeforge_core::config::RunConfig;
use gazeforge_core::imgcore::{load_png, ImageBuffer};
use gazeforge_core::manifest::Manifest;
use gazeforge_core::Error;
use serde_json::{Map, Value};

/// Version of the `--json` summary layout.
pub const SUMMARY_VERSION: u32 = 1;

pub struct Context {
    pub config: RunConfig,
    pub config_path: Option<PathBuf>,
    pub seed: u64,
    pub workers: usize,
}

impl Context {
    pub fn pool(&self) -> anyhow::Result<rayon::ThreadPool> {
        Ok(rayon::ThreadPoolBuilder::new().num_threads(self.workers).build()?)
    }
}

pub struct Report {
    pub summary: Map<String, Value>,
    pub text: String,
}

impl Report {
    pub fn new(summary: Value, text: String) -> Self {
        let summary = match summary {
            Value::Object(m) => m,
            other => Map::from_iter([("result".to_string(), other)]),
        };
        Self { summary, text }
    }

    pub fn to_json(&self, command: &str) -> Value {
        let mut out = Map::new();
        out.insert("schema_version".into(), SUMMARY_VERSION.into());
        out.insert("command".into(), command.into());
        out.insert("ok".into(), true.into());
        out.extend(self.summary.clone());
        Value::Object(out)
    }
}

/// Loads a manifest, treating unparseable lines as a schema violation.
pub fn load_manifest_strict(path: &Path) -> anyhow::Result<Manifest> {
    let m = Manifest::load(path).with_context(|| format!("reading manifest {}", path.display()))?;
    if let Some(bad) = m.malformed.first() {
        return Err(Error::Schema(format!("{} line {}: {}", path.display(), bad.line, bad.message)).into());
    }
    Ok(m)
}

/// Every `*.png` in a directory, in file-name order.
pub fn load_png_dir(dir: &Path) -> anyhow::Result<Vec<ImageBuffer>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths = Vec::new();
    for entry in entries {
        let p = entry.map_err(|e| Error::io(dir, e))?.path();
        if p.extension().is_some_and(|e| e.eq_ignore_ascii_case("png")) {
            paths.push(p);
        }
    }
    paths.sort();
    Ok(paths.iter().map(|p| load_png(p)).collect::<gazeforge_core::Result<_>>()?)
}

/// A file-system safe stem for a sample ID.
pub fn file_stem(sample_id: &str) -> String {
    sample_id.chars().map(|c| if c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.') { c } else { '_' }).collect()
}

/// File stems for all IDs; two IDs mapping to the same stem is an error.
pub fn unique_stems<'a>(ids: impl IntoIterator<Item = &'a str>) -> anyhow::Result<Vec<String>> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for id in ids {
        let stem = file_stem(id);
        if stem.is_empty() || stem.starts_with('.') || !seen.insert(stem.clone()) {
            return Err(Error::InvalidInput(format!("sample id {id:?} does not map to a unique file name")).into());
        }
        out.push(stem);
    }
    Ok(out)
}

pub fn create_dir(dir: &Path) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    Ok(())
}

pub fn write_file(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
    Ok(())
}
