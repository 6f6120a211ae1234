use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::AcquisitionError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub image_id: String,
    /// Image location, relative paths resolved against the manifest's directory.
    pub path: PathBuf,
    pub label: bool,
}

/// Labeled image set for one binary state (e.g. "door open").
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub state_name: String,
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn validate(&self) -> Result<(), AcquisitionError> {
        if self.entries.is_empty() {
            return Err(AcquisitionError::Manifest("manifest has no entries".into()));
        }
        let mut seen = HashSet::new();
        for e in &self.entries {
            if !seen.insert(e.image_id.as_str()) {
                return Err(AcquisitionError::Manifest(format!(
                    "duplicate image_id {:?}",
                    e.image_id
                )));
            }
        }
        Ok(())
    }

    /// Optimization needs both classes present.
    pub fn has_both_classes(&self) -> bool {
        self.entries.iter().any(|e| e.label) && self.entries.iter().any(|e| !e.label)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn labels(&self) -> Vec<bool> {
        self.entries.iter().map(|e| e.label).collect()
    }

    pub fn position(&self, image_id: &str) -> Option<usize> {
        self.entries.iter().position(|e| e.image_id == image_id)
    }
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<DatasetManifest, AcquisitionError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| AcquisitionError::io(path, e))?;
    let manifest: DatasetManifest = serde_json::from_str(&text)
        .map_err(|e| AcquisitionError::Manifest(format!("{}: {e}", path.display())))?;
    manifest.validate()?;
    Ok(manifest)
}
