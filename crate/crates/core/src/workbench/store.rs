//! On-disk session state inside the labels directory.
//!
//! Masks live next to `session.json` as `<stem>_label.png`. The JSON file
//! carries per-label metadata and the cherry-pick flags; the mask files are
//! the source of truth for which samples are labeled.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::imageio::{self, IoError};
use crate::selector::{CherryPicks, SampleId};

pub const SESSION_FILE: &str = "session.json";
const SESSION_VERSION: u32 = 1;

pub fn label_file_name(id: &SampleId) -> String {
    format!("{id}_label.png")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledRecord {
    pub sample_id: SampleId,
    pub mask_path: PathBuf,
    /// Final inspection score of the stored mask; absent when inspection was
    /// disabled.
    pub gamma: Option<f64>,
    pub warning: Option<bool>,
    pub accepted_postprocess: bool,
    /// Milliseconds since the Unix epoch.
    pub timestamp_ms: u64,
}

#[derive(Debug, Default, Serialize, Deserialize)]
pub(crate) struct SessionFile {
    pub version: u32,
    #[serde(default)]
    pub records: Vec<StoredRecord>,
    #[serde(default)]
    pub cherry_picks: CherryPicks,
}

/// Record as written to disk; the mask path is implied by the sample id.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub(crate) struct StoredRecord {
    pub sample_id: SampleId,
    pub gamma: Option<f64>,
    pub warning: Option<bool>,
    pub accepted_postprocess: bool,
    pub timestamp_ms: u64,
}

impl StoredRecord {
    pub fn into_record(self, labels_dir: &Path) -> LabeledRecord {
        LabeledRecord {
            mask_path: labels_dir.join(label_file_name(&self.sample_id)),
            sample_id: self.sample_id,
            gamma: self.gamma,
            warning: self.warning,
            accepted_postprocess: self.accepted_postprocess,
            timestamp_ms: self.timestamp_ms,
        }
    }
}

impl From<&LabeledRecord> for StoredRecord {
    fn from(r: &LabeledRecord) -> Self {
        Self {
            sample_id: r.sample_id.clone(),
            gamma: r.gamma,
            warning: r.warning,
            accepted_postprocess: r.accepted_postprocess,
            timestamp_ms: r.timestamp_ms,
        }
    }
}

pub(crate) fn read_session(labels_dir: &Path) -> Result<SessionFile, IoError> {
    let path = labels_dir.join(SESSION_FILE);
    if !path.is_file() {
        return Ok(SessionFile {
            version: SESSION_VERSION,
            ..Default::default()
        });
    }
    let text = std::fs::read_to_string(&path).map_err(|source| IoError::Io {
        path: path.clone(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| IoError::Decode {
        path,
        message: e.to_string(),
    })
}

pub(crate) fn write_session(
    labels_dir: &Path,
    records: &BTreeMap<SampleId, LabeledRecord>,
    cherry_picks: &CherryPicks,
) -> Result<(), IoError> {
    let file = SessionFile {
        version: SESSION_VERSION,
        records: records.values().map(StoredRecord::from).collect(),
        cherry_picks: cherry_picks.clone(),
    };
    let mut text = serde_json::to_string_pretty(&file).expect("session serializes");
    text.push('\n');
    imageio::write_atomic(&labels_dir.join(SESSION_FILE), text.as_bytes())
}

pub(crate) fn now_ms() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}
