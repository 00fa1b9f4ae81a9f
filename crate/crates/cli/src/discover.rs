//! Turning command-line paths into an ordered list of named clips.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use freqaug::io::{list_frames, TENSOR_EXTENSION};
use freqaug::{ClipSource, Sampling, ValueRange};

#[derive(Debug, Clone)]
pub struct ClipEntry {
    pub id: String,
    pub source: ClipSource,
}

fn is_frame_dir(path: &Path) -> bool {
    path.is_dir() && list_frames(path).map(|f| !f.is_empty()).unwrap_or(false)
}

fn id_of(path: &Path) -> String {
    let stem = if path.is_dir() { path.file_name() } else { path.file_stem() };
    stem.map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// Each input is a tensor file, a frame directory, or a directory whose
/// tensor files and frame subdirectories are taken in name order.
pub fn discover(
    inputs: &[PathBuf],
    sampling: Option<Sampling>,
    value_range: ValueRange,
) -> Result<Vec<ClipEntry>> {
    let mut found = Vec::new();
    for input in inputs {
        if input.is_file() {
            found.push(ClipSource::tensor_file(input));
        } else if is_frame_dir(input) {
            found.push(ClipSource::frame_dir(input));
        } else if input.is_dir() {
            let mut children: Vec<PathBuf> = fs::read_dir(input)
                .with_context(|| format!("reading {}", input.display()))?
                .map(|e| e.map(|e| e.path()))
                .collect::<std::io::Result<_>>()
                .with_context(|| format!("reading {}", input.display()))?;
            children.sort();
            for child in children {
                if child.is_file() && child.extension().is_some_and(|e| e == TENSOR_EXTENSION) {
                    found.push(ClipSource::tensor_file(child));
                } else if is_frame_dir(&child) {
                    found.push(ClipSource::frame_dir(child));
                }
            }
        } else {
            bail!("input {} does not exist", input.display());
        }
    }
    if found.is_empty() {
        bail!("no clips found in the given inputs");
    }

    let mut seen = HashSet::new();
    found
        .into_iter()
        .map(|source| {
            let id = id_of(&source.path);
            if !seen.insert(id.clone()) {
                bail!("two inputs share the clip id `{id}`");
            }
            Ok(ClipEntry {
                id,
                source: source.with_sampling(sampling).with_value_range(value_range),
            })
        })
        .collect()
}
