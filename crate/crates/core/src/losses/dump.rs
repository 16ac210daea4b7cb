//! Feature dump files.
//!
//! Layout: one line of JSON header terminated by `\n`, then `n × d`
//! little-endian `f32` values in row-major order. Row metadata lives in a
//! JSON-lines sidecar with one [`RowMeta`] object per row.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{FeatureBatch, FeatureMatrix, RowMeta};
use crate::error::{Error, Result};
use crate::manifest::{read_jsonl, write_jsonl};

pub const DUMP_FORMAT: &str = "gazeforge-features";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DumpHeader {
    pub format: String,
    pub version: u32,
    pub n: usize,
    pub d: usize,
    /// Metadata fields present in the sidecar, in declaration order.
    pub fields: Vec<String>,
}

pub const META_FIELDS: [&str; 9] =
    ["sample_id", "view_index", "dataset_id", "subject_id", "glasses", "mask", "pitch", "yaw", "flip"];

pub fn write_feature_dump(batch: &FeatureBatch, features_path: &Path, meta_path: &Path) -> Result<()> {
    let f = batch.features();
    let header = DumpHeader {
        format: DUMP_FORMAT.into(),
        version: 1,
        n: f.rows(),
        d: f.cols(),
        fields: META_FIELDS.iter().map(|s| s.to_string()).collect(),
    };
    let mut out = Vec::with_capacity(64 + f.data().len() * 4);
    serde_json::to_writer(&mut out, &header)?;
    out.push(b'\n');
    for v in f.data() {
        out.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    std::fs::write(features_path, out).map_err(|e| Error::io(features_path, e))?;

    let mut meta = Vec::new();
    write_jsonl(&mut meta, batch.meta())?;
    std::fs::File::create(meta_path).and_then(|mut file| file.write_all(&meta)).map_err(|e| Error::io(meta_path, e))
}

/// Reads a dump; rows are re-normalized to absorb `f32` rounding.
pub fn read_feature_dump(features_path: &Path, meta_path: &Path) -> Result<FeatureBatch> {
    let file = std::fs::File::open(features_path).map_err(|e| Error::io(features_path, e))?;
    let mut reader = BufReader::new(file);
    let mut line = String::new();
    reader.read_line(&mut line).map_err(|e| Error::io(features_path, e))?;
    let header: DumpHeader =
        serde_json::from_str(line.trim_end()).map_err(|e| Error::Schema(format!("feature header: {e}")))?;
    if header.format != DUMP_FORMAT || header.version != 1 {
        return Err(Error::Schema(format!("unsupported feature dump {} v{}", header.format, header.version)));
    }
    let mut raw = Vec::new();
    reader.read_to_end(&mut raw).map_err(|e| Error::io(features_path, e))?;
    if raw.len() != header.n * header.d * 4 {
        return Err(Error::Schema(format!(
            "feature payload has {} bytes, header declares {}x{} f32",
            raw.len(),
            header.n,
            header.d
        )));
    }
    let data: Vec<f64> = raw.chunks_exact(4).map(|c| f64::from(f32::from_le_bytes([c[0], c[1], c[2], c[3]]))).collect();
    let features = FeatureMatrix::new(header.n, header.d, data)?;

    let meta_file = std::fs::File::open(meta_path).map_err(|e| Error::io(meta_path, e))?;
    let (meta, bad): (Vec<RowMeta>, _) = read_jsonl(BufReader::new(meta_file))?;
    if let Some(b) = bad.first() {
        return Err(Error::Schema(format!("metadata line {}: {}", b.line, b.message)));
    }
    FeatureBatch::from_raw(features, meta)
}
