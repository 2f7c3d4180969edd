//! On-disk store of bound reports: one JSON file, rewritten whole on every
//! store so stale duplicates never accumulate.

use std::fs;
use std::io::ErrorKind;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use linewald_core::{BoundReport, Rational, ReportConfig};
use serde::{Deserialize, Serialize};

pub const VERSION: &str = concat!("linewald-", env!("CARGO_PKG_VERSION"));

#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct CacheKey {
    pub s: u64,
    pub tau: Rational,
    pub grid: Rational,
    pub version: String,
    pub precision: Rational,
    pub with_l: bool,
}

impl CacheKey {
    pub fn new(s: u64, cfg: &ReportConfig) -> Self {
        CacheKey {
            s,
            tau: cfg.tau.clone(),
            grid: cfg.grid.clone(),
            version: VERSION.to_string(),
            precision: cfg.precision.clone(),
            with_l: cfg.with_l,
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct CacheEntry {
    pub key: CacheKey,
    pub report: BoundReport,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
}

#[derive(Default, Serialize, Deserialize)]
struct CacheFile {
    entries: Vec<CacheEntry>,
}

pub struct Cache {
    path: PathBuf,
    file: CacheFile,
}

impl Cache {
    /// Opens the cache at `path`; a missing file is an empty cache.
    pub fn open(path: &Path) -> Result<Self> {
        let file = match fs::read_to_string(path) {
            Ok(text) => serde_json::from_str(&text)
                .with_context(|| format!("corrupt cache file {}", path.display()))?,
            Err(e) if e.kind() == ErrorKind::NotFound => CacheFile::default(),
            Err(e) => return Err(e).with_context(|| format!("reading {}", path.display())),
        };
        Ok(Cache {
            path: path.to_path_buf(),
            file,
        })
    }

    pub fn get(&self, key: &CacheKey) -> Option<&BoundReport> {
        self.file
            .entries
            .iter()
            .find(|e| &e.key == key)
            .map(|e| &e.report)
    }

    pub fn insert(&mut self, key: CacheKey, report: BoundReport) {
        let timestamp = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_secs());
        self.file.entries.retain(|e| e.key != key);
        self.file.entries.push(CacheEntry {
            key,
            report,
            timestamp,
        });
    }

    /// Writes through a sibling temp file so a crash never leaves a torn cache.
    pub fn save(&self) -> Result<()> {
        let text = serde_json::to_string_pretty(&self.file)?;
        let tmp = self.path.with_extension("json.tmp");
        fs::write(&tmp, text).with_context(|| format!("writing {}", tmp.display()))?;
        fs::rename(&tmp, &self.path).with_context(|| format!("writing {}", self.path.display()))?;
        Ok(())
    }
}
