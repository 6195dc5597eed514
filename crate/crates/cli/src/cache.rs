//! On-disk cache of solved mode tables.

use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use droplet_qed::qnm::{ModeTable, Polarization, QnmMode, SOLVER_VERSION};
use serde::{Deserialize, Serialize};

pub const CACHE_ENV: &str = "DROPLET_QED_CACHE";

/// Everything that determines a solved table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CacheKey {
    pub pol: Polarization,
    /// `n0` in units of 1e-6.
    pub n0_micro: i64,
    pub x_min: f64,
    pub x_max: f64,
    pub max_width: f64,
}

impl CacheKey {
    pub fn new(pol: Polarization, n0: f64, x_min: f64, x_max: f64, max_width: f64) -> Self {
        Self {
            pol,
            n0_micro: (n0 * 1e6).round() as i64,
            x_min,
            x_max,
            max_width,
        }
    }

    pub fn n0(&self) -> f64 {
        self.n0_micro as f64 * 1e-6
    }

    fn file_name(&self) -> String {
        format!(
            "{}_n{}_x{:016x}-{:016x}_w{:016x}_{}.json",
            self.pol,
            self.n0_micro,
            self.x_min.to_bits(),
            self.x_max.to_bits(),
            self.max_width.to_bits(),
            SOLVER_VERSION
        )
    }
}

#[derive(Serialize, Deserialize)]
struct Entry {
    version: String,
    key: CacheKey,
    modes: Vec<QnmMode>,
}

pub fn cache_dir() -> PathBuf {
    if let Some(dir) = std::env::var_os(CACHE_ENV) {
        return PathBuf::from(dir);
    }
    if let Some(dir) = std::env::var_os("XDG_CACHE_HOME") {
        return PathBuf::from(dir).join("droplet-qed");
    }
    if let Some(home) = std::env::var_os("HOME") {
        return PathBuf::from(home).join(".cache").join("droplet-qed");
    }
    std::env::temp_dir().join("droplet-qed")
}

fn load(path: &Path, key: &CacheKey) -> Result<ModeTable> {
    let file = fs::File::open(path)?;
    let entry: Entry = serde_json::from_reader(BufReader::new(file))?;
    anyhow::ensure!(entry.version == SOLVER_VERSION, "solver version {} differs", entry.version);
    anyhow::ensure!(entry.key == *key, "stored key {:?} differs", entry.key);
    let table = ModeTable::from_modes(key.pol, key.n0(), key.x_min, key.x_max, key.max_width, entry.modes)?;
    table.verify_residuals()?;
    Ok(table)
}

fn store(dir: &Path, path: &Path, key: &CacheKey, table: &ModeTable) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    {
        let mut w = BufWriter::new(tmp.as_file_mut());
        let entry = Entry {
            version: SOLVER_VERSION.to_string(),
            key: *key,
            modes: table.modes().to_vec(),
        };
        serde_json::to_writer(&mut w, &entry)?;
        w.flush()?;
    }
    tmp.persist(path)?;
    Ok(())
}

/// Loads the table for `key` from the cache, solving and storing it on a
/// miss. Unreadable entries are reported and replaced.
pub fn table_for(key: CacheKey) -> Result<ModeTable> {
    let dir = cache_dir();
    let path = dir.join(key.file_name());
    if path.exists() {
        match load(&path, &key) {
            Ok(table) => {
                log::info!("mode cache hit: {}", path.display());
                return Ok(table);
            }
            Err(e) => log::warn!("ignoring unusable mode cache {}: {e:#}", path.display()),
        }
    }
    log::info!("solving {} modes for n0 = {} on ({}, {}]", key.pol, key.n0(), key.x_min, key.x_max);
    let table = ModeTable::solve(key.pol, key.n0(), key.x_min, key.x_max, key.max_width)
        .context("mode solve")?;
    if let Err(e) = store(&dir, &path, &key, &table) {
        log::warn!("could not write mode cache {}: {e:#}", path.display());
    }
    Ok(table)
}
