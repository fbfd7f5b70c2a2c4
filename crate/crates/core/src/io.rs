//! Text formats for partitionings and ensembles.
//!
//! A label file holds one integer label per line. An ensemble directory holds
//! one label file per partitioning plus `manifest.toml`:
//!
//! ```toml
//! n = 4
//! partitionings = ["p000.txt", "p001.txt"]
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ClusterEnsemble, Partitioning};

pub const MANIFEST: &str = "manifest.toml";

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    n: usize,
    partitionings: Vec<String>,
}

pub fn parse_labels(text: &str, origin: &Path) -> Result<Vec<i64>> {
    let mut labels = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let v = line.parse::<i64>().map_err(|e| Error::Parse {
            path: origin.to_path_buf(),
            line: idx + 1,
            message: format!("bad label {line:?}: {e}"),
        })?;
        labels.push(v);
    }
    Ok(labels)
}

pub fn read_labels(path: &Path) -> Result<Partitioning> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let raw = parse_labels(&text, path)?;
    Partitioning::from_labels(&raw)
}

pub fn format_labels(pi: &Partitioning) -> String {
    let mut s = String::with_capacity(pi.n() * 3);
    for l in pi.labels() {
        s.push_str(&l.to_string());
        s.push('\n');
    }
    s
}

pub fn write_labels(path: &Path, pi: &Partitioning) -> Result<()> {
    fs::write(path, format_labels(pi)).map_err(|e| Error::io(path, e))
}

pub fn write_ensemble(dir: &Path, ensemble: &ClusterEnsemble) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut names = Vec::with_capacity(ensemble.p());
    for (t, pi) in ensemble.partitionings().iter().enumerate() {
        let name = format!("p{t:03}.txt");
        write_labels(&dir.join(&name), pi)?;
        names.push(name);
    }
    let manifest = Manifest {
        n: ensemble.n(),
        partitionings: names,
    };
    let text = toml::to_string(&manifest).map_err(|e| Error::Config(e.to_string()))?;
    let path = dir.join(MANIFEST);
    fs::write(&path, text).map_err(|e| Error::io(path, e))
}

pub fn read_ensemble(dir: &Path) -> Result<ClusterEnsemble> {
    let path = dir.join(MANIFEST);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let manifest: Manifest = toml::from_str(&text).map_err(|e| Error::Parse {
        path: path.clone(),
        line: 0,
        message: e.to_string(),
    })?;
    let mut parts = Vec::with_capacity(manifest.partitionings.len());
    for name in &manifest.partitionings {
        let pi = read_labels(&dir.join(name))?;
        if pi.n() != manifest.n {
            return Err(Error::validation(format!(
                "{name} has {} labels, manifest says n = {}",
                pi.n(),
                manifest.n
            )));
        }
        parts.push(pi);
    }
    ClusterEnsemble::new(parts)
}
