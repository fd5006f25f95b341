//! Shared run plumbing: the key=value settings file, the config echo every
//! command writes next to its results, and small path/CSV helpers.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use midlevel_core::{load_annotations, Annotations, DesignMatrix, MidLevelName};

/// Exit code for runs where some items failed but results were produced.
pub const EXIT_PARTIAL: i32 = 1;

/// Optional settings file: one `key=value` per line, `#` comments and blank
/// lines skipped. Flags override file values; unknown keys are fatal so a
/// typo can't silently fall back to a default.
pub struct FileConfig {
    values: BTreeMap<String, String>,
    path: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<FileConfig> {
        let mut values = BTreeMap::new();
        if let Some(path) = path {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            for (i, raw) in text.lines().enumerate() {
                let line = raw.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let Some((k, v)) = line.split_once('=') else {
                    bail!(
                        "{} line {}: expected key=value, got {line:?}",
                        path.display(),
                        i + 1
                    );
                };
                values.insert(k.trim().to_string(), v.trim().to_string());
            }
        }
        Ok(FileConfig { values, path: path.map(Path::to_path_buf) })
    }

    /// Flag if given, else file value, else the default.
    pub fn resolve<T>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        Ok(self.resolve_opt(key, flag)?.unwrap_or(default))
    }

    /// Flag if given, else file value, else `None`.
    pub fn resolve_opt<T>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        let file = self.values.remove(key);
        if let Some(v) = flag {
            return Ok(Some(v));
        }
        match file {
            Some(s) => s
                .parse()
                .map(Some)
                .map_err(|e| anyhow!("config key {key}: {e}")),
            None => Ok(None),
        }
    }

    /// Call after the last resolve; leftover keys are typos.
    pub fn finish(self) -> Result<()> {
        if let Some(key) = self.values.keys().next() {
            bail!(
                "unknown config key {key:?} in {}",
                self.path
                    .as_deref()
                    .map_or_else(|| "config".to_string(), |p| p.display().to_string())
            );
        }
        Ok(())
    }
}

/// Writes the resolved settings as sorted key=value lines. No timestamps:
/// a rerun with the same settings must produce the identical echo.
pub fn write_echo(path: &Path, entries: &[(&str, String)]) -> Result<()> {
    let mut sorted: Vec<&(&str, String)> = entries.iter().collect();
    sorted.sort_by_key(|(k, _)| *k);
    let mut text = String::new();
    for (k, v) in sorted {
        writeln!(text, "{k}={v}").expect("string write");
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// `report.csv` -> `report.csv.config.txt`, beside the result.
pub fn echo_path_for(out: &Path) -> PathBuf {
    let mut name = out
        .file_name()
        .map_or_else(|| "out".to_string(), |s| s.to_string_lossy().into_owned());
    name.push_str(".config.txt");
    out.with_file_name(name)
}

/// Secondary result beside the main one: `report.csv` -> `report.<tag>.csv`.
pub fn sibling(out: &Path, tag: &str) -> PathBuf {
    let stem = out
        .file_stem()
        .map_or_else(|| "out".to_string(), |s| s.to_string_lossy().into_owned());
    let ext = out
        .extension()
        .map_or_else(|| "csv".to_string(), |s| s.to_string_lossy().into_owned());
    out.with_file_name(format!("{stem}.{tag}.{ext}"))
}

/// Relative inputs that don't exist locally are retried under the
/// MIDLEVEL_DATA_DIR dataset root.
pub fn resolve_input(path: &Path) -> PathBuf {
    if path.is_absolute() || path.exists() {
        return path.to_path_buf();
    }
    if let Ok(root) = std::env::var("MIDLEVEL_DATA_DIR") {
        let candidate = Path::new(&root).join(path);
        if candidate.exists() {
            return candidate;
        }
    }
    path.to_path_buf()
}

/// RFC 4180 quoting, applied only where needed.
pub fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') || s.contains('\r') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Loads an averaged annotation table and shapes its complete rows into a
/// songs-by-qualities matrix. Returns the ids of dropped incomplete rows
/// and the loader's complaints so callers can report them.
pub fn load_midlevel_matrix(
    path: &Path,
) -> Result<(DesignMatrix, Vec<String>, Vec<String>)> {
    let loaded = load_annotations(path)
        .with_context(|| format!("loading {}", path.display()))?;
    let mut complaints: Vec<String> =
        loaded.issues.iter().map(ToString::to_string).collect();
    complaints.extend(loaded.warnings);
    let Annotations::Averaged(vectors) = loaded.value else {
        bail!(
            "{} holds raw per-worker ratings; this command needs per-song averages",
            path.display()
        );
    };
    let mut ids = Vec::new();
    let mut rows = Vec::new();
    let mut dropped = Vec::new();
    for v in &vectors {
        match v.as_array() {
            Some(a) => {
                ids.push(v.song_id.clone());
                rows.push(a.to_vec());
            }
            None => dropped.push(v.song_id.clone()),
        }
    }
    let names = MidLevelName::ALL
        .iter()
        .map(|n| n.as_str().to_string())
        .collect();
    let matrix = DesignMatrix::from_rows(ids, names, &rows)?;
    Ok((matrix, dropped, complaints))
}
