//! Dataset manifest: the JSON index tying matrix files to their
//! generation recipes, train/test split, and grid-search labels.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mm::read_matrix_market;
use crate::problems::ProblemSpec;
use crate::sparse::CsrMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

/// One dataset matrix: where it lives, how it was generated, and (once
/// labeled) the grid-search outcome.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub matrix_id: String,
    /// Matrix Market file, relative to the manifest's directory.
    pub matrix_path: String,
    pub split: Split,
    pub spec: ProblemSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_opt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iters_at_opt: Option<usize>,
    /// Per-matrix sweep CSV, relative to the manifest's directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_csv: Option<String>,
}

impl ManifestEntry {
    pub fn is_labeled(&self) -> bool {
        self.theta_opt.is_some()
    }

    pub fn load_matrix(&self, base: &Path) -> Result<CsrMatrix> {
        read_matrix_market(base.join(&self.matrix_path))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    /// Structural checks: ids unique, nonempty, and safe to embed in the
    /// CSV reports.
    pub fn validate(&self) -> Result<()> {
        let mut seen = std::collections::BTreeSet::new();
        for e in &self.entries {
            if e.matrix_id.is_empty() || e.matrix_id.contains([',', '\n']) {
                return Err(Error::InvalidParameter(format!(
                    "matrix id {:?} must be nonempty and free of commas and newlines",
                    e.matrix_id
                )));
            }
            if !seen.insert(&e.matrix_id) {
                return Err(Error::InvalidParameter(format!(
                    "duplicate matrix id {:?}",
                    e.matrix_id
                )));
            }
            if e.matrix_path.is_empty() {
                return Err(Error::InvalidParameter(format!(
                    "entry {:?} has an empty matrix path",
                    e.matrix_id
                )));
            }
        }
        Ok(())
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(move |e| e.split == split)
    }

    pub fn unlabeled_ids(&self) -> Vec<String> {
        self.entries
            .iter()
            .filter(|e| !e.is_labeled())
            .map(|e| e.matrix_id.clone())
            .collect()
    }

    pub fn get_mut(&mut self, matrix_id: &str) -> Option<&mut ManifestEntry> {
        self.entries.iter_mut().find(|e| e.matrix_id == matrix_id)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut text =
            serde_json::to_string_pretty(self).expect("manifest serialization cannot fail");
        text.push('\n');
        fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        let manifest: DatasetManifest = serde_json::from_str(&text)
            .map_err(|e| Error::from_json(&path.display().to_string(), &text, &e))?;
        manifest.validate()?;
        Ok(manifest)
    }
}

/// Directory of a manifest path, for resolving its relative entries.
pub fn manifest_base(path: &Path) -> PathBuf {
    path.parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{DiffusionSpec, RadiationSurrogateSpec};

    fn sample() -> DatasetManifest {
        DatasetManifest {
            entries: vec![
                ManifestEntry {
                    matrix_id: "d2_000".into(),
                    matrix_path: "matrices/d2_000.mtx".into(),
                    split: Split::Train,
                    spec: ProblemSpec::Diffusion(DiffusionSpec {
                        dim: 2,
                        nx: 8,
                        ny: 8,
                        nz: 1,
                        bx: 2,
                        by: 2,
                        bz: 1,
                        m: 3,
                        seed: 0,
                    }),
                    theta_opt: Some(0.25),
                    iters_at_opt: Some(11),
                    grid_csv: Some("grids/d2_000.csv".into()),
                },
                ManifestEntry {
                    matrix_id: "r3_001".into(),
                    matrix_path: "matrices/r3_001.mtx".into(),
                    split: Split::Test,
                    spec: ProblemSpec::RadiationSurrogate(RadiationSurrogateSpec {
                        nx: 3,
                        ny: 3,
                        nz: 3,
                        m: 2,
                        seed: 1,
                        omega_er: 0.5,
                        omega_ei: 0.1,
                    }),
                    theta_opt: None,
                    iters_at_opt: None,
                    grid_csv: None,
                },
            ],
        }
    }

    #[test]
    fn file_round_trip_preserves_everything() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.json");
        let m = sample();
        m.save(&path).unwrap();
        let loaded = DatasetManifest::load(&path).unwrap();
        assert_eq!(loaded, m);
    }

    #[test]
    fn saves_are_byte_identical_across_runs() {
        let dir = tempfile::tempdir().unwrap();
        let (p1, p2) = (dir.path().join("a.json"), dir.path().join("b.json"));
        sample().save(&p1).unwrap();
        sample().save(&p2).unwrap();
        assert_eq!(fs::read(&p1).unwrap(), fs::read(&p2).unwrap());
    }

    #[test]
    fn duplicate_ids_are_rejected() {
        let mut m = sample();
        m.entries[1].matrix_id = m.entries[0].matrix_id.clone();
        assert!(m.validate().is_err());
    }

    #[test]
    fn comma_in_id_is_rejected() {
        let mut m = sample();
        m.entries[0].matrix_id = "a,b".into();
        assert!(m.validate().is_err());
    }

    #[test]
    fn split_and_label_queries_filter_correctly() {
        let m = sample();
        assert_eq!(m.split(Split::Train).count(), 1);
        assert_eq!(m.split(Split::Test).count(), 1);
        assert_eq!(m.unlabeled_ids(), vec!["r3_001".to_string()]);
    }

    #[test]
    fn truncated_file_reports_a_byte_offset() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.json");
        let m = sample();
        m.save(&path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        fs::write(&path, &text[..text.len() / 2]).unwrap();
        match DatasetManifest::load(&path) {
            Err(Error::Json { offset, .. }) => assert!(offset > 0),
            other => panic!("expected a JSON error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.json");
        fs::write(&path, r#"{"entries": [], "extra": 1}"#).unwrap();
        assert!(DatasetManifest::load(&path).is_err());
    }
}
