use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::ExperimentConfig;
use crate::error::{Error, Result};

/// Files written for one run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OutputPaths {
    pub tables: Vec<PathBuf>,
    pub manifest: PathBuf,
}

#[derive(Serialize)]
struct Manifest<'a> {
    experiment: &'a str,
    timestamp: &'a str,
    package: &'static str,
    version: &'static str,
    wall_seconds: f64,
    config: &'a ExperimentConfig,
    outputs: Vec<String>,
    summary: &'a serde_json::Value,
}

/// Writes `contents` to `path` through a temporary file in the same
/// directory and a rename, so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let name = path.file_name().ok_or_else(|| {
        io(std::io::Error::new(
            std::io::ErrorKind::InvalidInput,
            "path has no file name",
        ))
    })?;
    let tmp = dir.join(format!(".{}.{}.tmp", name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map_err(io)
}

/// A UTC timestamp safe to use in file names.
pub fn timestamp() -> String {
    chrono::Utc::now().format("%Y%m%dT%H%M%S%.3fZ").to_string()
}

/// Writes each `(suffix, csv)` pair as `<out>/<experiment><suffix>_<stamp>.csv`
/// and a `manifest.json` echoing the configuration next to them. The output
/// directory must already exist.
pub fn emit_outputs(
    out_dir: &Path,
    config: &ExperimentConfig,
    tables: &[(&str, String)],
    summary: &serde_json::Value,
    wall_seconds: f64,
    stamp: &str,
) -> Result<OutputPaths> {
    if !out_dir.is_dir() {
        return Err(Error::Io {
            path: out_dir.to_path_buf(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "output directory does not exist"),
        });
    }
    let experiment = config.experiment.name();
    let mut written = Vec::with_capacity(tables.len());
    for (suffix, csv) in tables {
        let path = out_dir.join(format!("{experiment}{suffix}_{stamp}.csv"));
        write_atomic(&path, csv.as_bytes())?;
        written.push(path);
    }
    let manifest = Manifest {
        experiment,
        timestamp: stamp,
        package: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        wall_seconds,
        config,
        outputs: written
            .iter()
            .map(|p| p.file_name().unwrap_or_default().to_string_lossy().into_owned())
            .collect(),
        summary,
    };
    let manifest_path = out_dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write_atomic(&manifest_path, text.as_bytes())?;
    Ok(OutputPaths {
        tables: written,
        manifest: manifest_path,
    })
}
