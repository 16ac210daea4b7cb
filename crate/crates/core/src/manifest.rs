//! Sample manifests: one JSON object per line, paths relative to the
//! manifest's directory.

use std::fmt;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::GazeAngles;

/// Source dataset of a sample: lab-captured (`X`), synthetic (`N`) or
/// crowdsourced (`C`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DatasetId {
    X,
    N,
    C,
}

impl DatasetId {
    pub const ALL: [DatasetId; 3] = [DatasetId::X, DatasetId::N, DatasetId::C];

    /// Datasets whose pitch labels are excluded from direct supervision.
    pub fn pitch_attenuated(self) -> bool {
        matches!(self, DatasetId::N | DatasetId::C)
    }

    pub fn index(self) -> u64 {
        match self {
            DatasetId::X => 0,
            DatasetId::N => 1,
            DatasetId::C => 2,
        }
    }
}

impl fmt::Display for DatasetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            DatasetId::X => "X",
            DatasetId::N => "N",
            DatasetId::C => "C",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleRecord {
    pub sample_id: String,
    pub dataset: DatasetId,
    pub subject: String,
    pub pitch: f64,
    pub yaw: f64,
    #[serde(default)]
    pub head_pitch: f64,
    #[serde(default)]
    pub head_yaw: f64,
    #[serde(default)]
    pub head_roll: f64,
    #[serde(default)]
    pub glasses: bool,
    #[serde(default)]
    pub mask: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image: Option<String>,
    /// Soft foreground matte (1-channel PNG) used for background replacement.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matte: Option<String>,
    /// Landmark JSON file (`{"<id>": [x, y], ...}`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub landmarks: Option<String>,
}

impl SampleRecord {
    pub fn gaze(&self) -> GazeAngles {
        GazeAngles::new(self.pitch, self.yaw)
    }

    pub fn head_pose(&self) -> GazeAngles {
        GazeAngles::new(self.head_pitch, self.head_yaw)
    }
}

/// A line that failed to parse.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MalformedLine {
    pub line: usize,
    pub message: String,
}

/// Parses JSONL; blank lines are skipped, unparseable lines collected.
pub fn read_jsonl<T: serde::de::DeserializeOwned>(reader: impl BufRead) -> Result<(Vec<T>, Vec<MalformedLine>)> {
    let mut rows = Vec::new();
    let mut bad = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<jsonl>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(&line) {
            Ok(r) => rows.push(r),
            Err(e) => bad.push(MalformedLine { line: i + 1, message: e.to_string() }),
        }
    }
    Ok((rows, bad))
}

pub fn write_jsonl<T: Serialize>(mut w: impl Write, rows: &[T]) -> Result<()> {
    for r in rows {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n").map_err(|e| Error::io("<jsonl>", e))?;
    }
    Ok(())
}

/// A manifest loaded from disk, remembering its directory for relative paths.
#[derive(Debug, Clone)]
pub struct Manifest {
    pub root: PathBuf,
    pub records: Vec<SampleRecord>,
    pub malformed: Vec<MalformedLine>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let (records, malformed) = read_jsonl(std::io::BufReader::new(file))?;
        Ok(Self { root: path.parent().map(Path::to_path_buf).unwrap_or_default(), records, malformed })
    }

    pub fn resolve(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }
}
