//! File formats, provenance headers, atomic output and run configuration.

pub mod config;
pub mod dataset;
pub mod reports;
pub mod samples;

pub use config::{OutputFormat, RunConfig};
pub use dataset::{
    read_adjacency, read_dataset, read_edge_adjacency, read_edge_flags, write_adjacency,
    write_dataset,
};
pub use reports::{
    write_boundary_csv, write_fit_report, write_prior_curve_csv, write_risk_csv, write_roc_csv,
    write_study_csv, write_truth,
};
pub use samples::{
    read_samples, read_samples_bin, read_samples_csv, read_samples_with_meta, write_samples_bin, write_samples_csv,
    SampleMeta, BIN_MAGIC, SAMPLE_FORMAT_VERSION,
};

use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const TOOL_NAME: &str = "stcar";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Tool version, seed and input digests, written as the first line of every
/// text output.
#[derive(Debug, Clone, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
pub struct Provenance {
    pub seed: u64,
    /// `(label, sha256 hex)` per input.
    pub inputs: Vec<(String, String)>,
}

impl Provenance {
    pub fn new(seed: u64) -> Self {
        Provenance { seed, inputs: Vec::new() }
    }

    pub fn with_input(mut self, label: impl Into<String>, digest: String) -> Self {
        self.inputs.push((label.into(), digest));
        self
    }

    /// Adds the digest of a file, labelled by its file name.
    pub fn with_file(self, path: &Path) -> Result<Self> {
        let label = path.file_name().map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned());
        let digest = file_digest(path)?;
        Ok(self.with_input(label, digest))
    }

    pub fn comment_line(&self) -> String {
        let inputs: Vec<String> = self.inputs.iter().map(|(l, d)| format!("{l}:sha256:{d}")).collect();
        format!("# {TOOL_NAME} {TOOL_VERSION} seed={} inputs={}\n", self.seed, inputs.join(","))
    }
}

pub fn digest_bytes(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

pub fn file_digest(path: &Path) -> Result<String> {
    Ok(digest_bytes(&read_bytes(path)?))
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |e| Error::io(path, e)
}

pub fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(io_err(path))
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(io_err(path))
}

/// Writes `bytes` to a hidden temporary next to `path`, then renames it into
/// place, so readers never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path.file_name().ok_or_else(|| Error::domain("output path", format!("{} has no file name", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.tmp", name.to_string_lossy()));
    fs::write(&tmp, bytes).map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}

/// Creates `dir` if needed. An existing non-empty directory is refused
/// unless `overwrite` is set.
pub fn prepare_output_dir(dir: &Path, overwrite: bool) -> Result<PathBuf> {
    if dir.exists() {
        if !dir.is_dir() {
            return Err(Error::domain("out", format!("{} exists and is not a directory", dir.display())));
        }
        let non_empty = fs::read_dir(dir).map_err(io_err(dir))?.next().is_some();
        if non_empty && !overwrite {
            return Err(Error::domain(
                "out",
                format!("{} is not empty (pass --overwrite to replace its contents)", dir.display()),
            ));
        }
    } else {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    Ok(dir.to_path_buf())
}
