#![allow(dead_code)]

use std::collections::BTreeMap;
use std::os::unix::fs::PermissionsExt;
use std::path::{Path, PathBuf};

use veinrate::dataset::DatasetIndex;

/// Index over image paths that need not exist; classes `0000`, `0001`, ...
pub fn fake_index(sizes: &[usize]) -> DatasetIndex {
    let mut samples = BTreeMap::new();
    for (c, &n) in sizes.iter().enumerate() {
        let class = format!("{c:04}");
        let paths = (0..n).map(|s| PathBuf::from(format!("/data/{class}/{s:02}.bmp"))).collect();
        samples.insert(class, paths);
    }
    DatasetIndex::from_parts("/data", samples).unwrap()
}

/// Writes an executable `sh` script.
pub fn script(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, format!("#!/bin/sh\n{body}\n")).unwrap();
    std::fs::set_permissions(&path, std::fs::Permissions::from_mode(0o755)).unwrap();
    path
}

/// Enroll mock: copies its first argument (the image path) into the
/// template, which is the last argument.
pub const ENROLL_COPY: &str = r#"for last; do :; done
echo "$1" > "$last""#;

/// Match mock with a score that depends only on the template contents.
pub const MATCH_CHECKSUM: &str = r#"a=$(cat "$1" "$2" | cksum | cut -c1-4)
echo "0.$a""#;
