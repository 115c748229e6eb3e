//! Manifests: one image path per line, relative to the manifest's directory.
//! Blank lines and `#` comments are skipped.

use std::fs;
use std::path::{Path, PathBuf};

use mirnet_core::data::{load_ppm, ImageBuffer};

use crate::failure::{Failure, Result};

pub struct Entry {
    pub name: String,
    pub path: PathBuf,
}

pub fn read_manifest(path: &Path) -> Result<Vec<Entry>> {
    let text = fs::read_to_string(path).map_err(|e| Failure::data(format!("cannot read manifest {}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let entries: Vec<Entry> = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(|l| {
            let p = base.join(l);
            let name = p.file_stem().map_or_else(|| l.to_string(), |s| s.to_string_lossy().into_owned());
            Entry { name, path: p }
        })
        .collect();
    if entries.is_empty() {
        return Err(Failure::data(format!("manifest {} lists no images", path.display())));
    }
    Ok(entries)
}

pub fn load_images(entries: &[Entry]) -> Result<Vec<ImageBuffer>> {
    entries
        .iter()
        .map(|e| load_ppm(&e.path).map_err(|err| Failure::from(err).context(e.path.display())))
        .collect()
}
