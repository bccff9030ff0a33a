use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use super::DatasetError;

/// Provenance manifest written at the data set root; ignored by the scanner.
pub const MANIFEST_NAME: &str = "dataset.json";

/// Classes and their sample images, both sorted lexicographically.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetIndex {
    root: PathBuf,
    classes: Vec<String>,
    samples: BTreeMap<String, Vec<PathBuf>>,
}

impl DatasetIndex {
    /// Builds an index from explicit class lists, sorting both levels.
    /// Used by tests and by callers that assemble data sets in memory.
    pub fn from_parts(
        root: impl Into<PathBuf>,
        samples: BTreeMap<String, Vec<PathBuf>>,
    ) -> Result<Self, DatasetError> {
        let root = root.into();
        if samples.is_empty() {
            return Err(DatasetError::NoClasses(root));
        }
        let mut sorted = BTreeMap::new();
        for (class, mut paths) in samples {
            if paths.is_empty() {
                return Err(DatasetError::EmptyClass(root.join(&class)));
            }
            paths.sort();
            sorted.insert(class, paths);
        }
        Ok(Self {
            root,
            classes: sorted.keys().cloned().collect(),
            samples: sorted,
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn samples(&self, class: &str) -> &[PathBuf] {
        self.samples.get(class).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn num_samples(&self) -> usize {
        self.samples.values().map(Vec::len).sum()
    }
}

fn is_bmp(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("bmp"))
}

/// Scans `root/<class_id>/<sample>.bmp`.
pub fn scan_dataset(root: &Path) -> Result<DatasetIndex, DatasetError> {
    if !root.is_dir() {
        return Err(DatasetError::MissingRoot(root.to_path_buf()));
    }
    let mut samples = BTreeMap::new();
    for entry in fs::read_dir(root).map_err(|e| DatasetError::io(root, e))? {
        let entry = entry.map_err(|e| DatasetError::io(root, e))?;
        let path = entry.path();
        if !path.is_dir() {
            if entry.file_name() == MANIFEST_NAME {
                continue;
            }
            return Err(DatasetError::NotBmp(path));
        }
        let class = entry.file_name().to_string_lossy().into_owned();
        let mut files = Vec::new();
        for f in fs::read_dir(&path).map_err(|e| DatasetError::io(&path, e))? {
            let f = f.map_err(|e| DatasetError::io(&path, e))?;
            let fp = f.path();
            if !fp.is_file() || !is_bmp(&fp) {
                return Err(DatasetError::NotBmp(fp));
            }
            files.push(fp);
        }
        if files.is_empty() {
            return Err(DatasetError::EmptyClass(path));
        }
        samples.insert(class, files);
    }
    if samples.is_empty() {
        return Err(DatasetError::NoClasses(root.to_path_buf()));
    }
    DatasetIndex::from_parts(root, samples)
}
