//! Manifest and corpus-state files.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use dpfeedback::clustering::Cluster;
use dpfeedback::feedback::{Section, Verdict};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub path: PathBuf,
}

/// Relative paths are resolved against the manifest's directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub problem: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constraints: Option<PathBuf>,
    #[serde(default)]
    pub submissions: Vec<ManifestEntry>,
    pub state: PathBuf,
}

/// Ids double as report file names.
pub fn valid_id(id: &str) -> bool {
    !id.is_empty() && !id.starts_with('.') && id.chars().all(|c| c.is_ascii_alphanumeric() || "_-.".contains(c))
}

impl Manifest {
    pub fn load(path: &Path) -> anyhow::Result<Manifest> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading manifest {}", path.display()))?;
        let mut m: Manifest = serde_json::from_str(&text).with_context(|| format!("parsing manifest {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &PathBuf| if p.is_relative() { base.join(p) } else { p.clone() };
        m.state = resolve(&m.state);
        m.constraints = m.constraints.as_ref().map(resolve);
        let mut seen = BTreeSet::new();
        for e in &mut m.submissions {
            if !valid_id(&e.id) {
                bail!("submission id '{}' must be non-empty and use only letters, digits, '_', '-' or '.'", e.id);
            }
            if !seen.insert(e.id.clone()) {
                bail!("duplicate submission id '{}'", e.id);
            }
            e.path = resolve(&e.path);
            if !e.path.is_file() {
                bail!("submission '{}': no such file {}", e.id, e.path.display());
            }
        }
        if let Some(c) = &m.constraints {
            if !c.is_file() {
                bail!("no such constraints file {}", c.display());
            }
        }
        Ok(m)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum Extraction {
    Extracted {
        cluster: String,
        /// Canonical update-loop bounds, used to rank representatives.
        bounds: Vec<String>,
    },
    Unlabeled {
        reason: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Submission {
    pub path: String,
    pub source: String,
    #[serde(flatten)]
    pub extraction: Extraction,
}

/// What `verify` found for one submission. Timings live in the reports,
/// not here, so the state stays reproducible.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Outcome {
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cluster: Option<String>,
    /// The cluster's reference, counted correct without checking.
    #[serde(default)]
    pub reference: bool,
    pub corrections: usize,
    pub sections: BTreeSet<Section>,
    pub feedback_size: usize,
    pub raw_feedback_size: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusState {
    pub problem: String,
    /// Input constraints text, one expression per line.
    #[serde(default)]
    pub constraints: String,
    pub submissions: BTreeMap<String, Submission>,
    pub clusters: Vec<Cluster>,
    #[serde(default)]
    pub results: BTreeMap<String, Outcome>,
}

impl CorpusState {
    pub fn load(path: &Path) -> anyhow::Result<CorpusState> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading state {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing state {}", path.display()))
    }

    pub fn save(&self, path: &Path) -> anyhow::Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        write_atomic(path, text.as_bytes())
    }
}

/// Write to a temporary file in the same directory, then rename over `path`.
/// An interrupted write leaves the old file in place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}
