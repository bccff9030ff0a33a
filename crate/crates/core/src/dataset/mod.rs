//! On-disk data sets (`root/<class>/<sample>.bmp`) and the synthetic vein
//! image generator.

mod scan;
mod synth;

pub use scan::{scan_dataset, DatasetIndex, MANIFEST_NAME};
pub use synth::{
    generate_synthetic, render_dataset_image, render_skeleton, render_vein_image, sample_perturbation, Perturbation,
    SynthSpec, TierParams, VeinSkeleton,
};

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("dataset root {0} does not exist or is not a directory")]
    MissingRoot(PathBuf),
    #[error("no classes found under {0}")]
    NoClasses(PathBuf),
    #[error("class directory {0} contains no samples")]
    EmptyClass(PathBuf),
    #[error("unexpected non-BMP file {0}")]
    NotBmp(PathBuf),
    #[error("invalid synthesis spec: {0}")]
    InvalidSpec(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Bmp(#[from] crate::imaging::BmpError),
}

impl DatasetError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        DatasetError::Io {
            path: path.into(),
            source,
        }
    }
}
