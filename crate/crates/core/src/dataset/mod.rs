//! Ingestion and serialization: annotation CSVs in the released raw and
//! averaged schemas, comparison logs, emotion-target tables, song and tag
//! manifests, feature output files, and an archive fetcher.
//!
//! Loaders validate row by row: a record is either fully valid and emitted
//! or rejected into the issue list with its line number, never half-parsed.
//! File-level contradictions (unknown schema, duplicate song ids) fail the
//! whole load.

mod adapter;
mod fetch;
mod load;
mod write;

use std::path::PathBuf;

pub use fetch::{fetch_archive, DEFAULT_DATASET_URL};
pub use load::{
    load_annotations, load_cluster_labels, load_comparisons, load_emotion_targets, load_handcrafted,
    load_song_manifest, load_tag_assignments, Annotations,
};
pub use write::{write_features, FeatureRecords, FeatureRow};

/// Canonical emotion dimension names, in table order. `energy` is the
/// arousal axis.
pub const EMOTION_DIMENSIONS: [&str; 8] = [
    "valence", "energy", "tension", "anger", "fear", "happy", "sad", "tender",
];

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv failure: {0}")]
    Csv(#[from] csv::Error),
    #[error("unknown schema: {0}")]
    UnknownSchema(String),
    #[error("duplicate song id {0:?}")]
    DuplicateSongId(String),
    #[error("bad manifest: {0}")]
    BadManifest(String),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("serialization failure: {0}")]
    Serialization(String),
    #[error("network failure: {0}")]
    NetworkFailure(String),
    #[error("checksum mismatch: expected {expected}, got {actual}")]
    ChecksumMismatch { expected: String, actual: String },
}

/// Why one row was rejected.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RowProblem {
    Malformed(String),
    OutOfRangeRating(String),
    SelfComparison(String),
    UnknownFeature(String),
}

impl std::fmt::Display for RowProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RowProblem::Malformed(m) => write!(f, "malformed: {m}"),
            RowProblem::OutOfRangeRating(m) => write!(f, "rating out of range: {m}"),
            RowProblem::SelfComparison(m) => write!(f, "self-comparison: {m}"),
            RowProblem::UnknownFeature(m) => write!(f, "unknown feature: {m}"),
        }
    }
}

/// One rejected row. `line` is the 1-based line in the source file for CSV
/// input, or the 1-based element index for JSON input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowIssue {
    pub line: u64,
    pub problem: RowProblem,
}

impl std::fmt::Display for RowIssue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "line {}: {}", self.line, self.problem)
    }
}

/// A load result: the valid records plus everything that was turned away.
/// `issues` lists rejected rows; `warnings` carries file-level notes such
/// as unknown columns or artists over the song cap.
#[derive(Debug, Clone)]
pub struct Loaded<T> {
    pub value: T,
    pub issues: Vec<RowIssue>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    pub fn as_str(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

impl std::str::FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(format!("unknown format {other:?}, expected csv or json")),
        }
    }
}

/// Where a catalog song comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SongSource {
    Jamendo,
    Magnatune,
    ReusedDataset,
}

impl SongSource {
    pub fn as_str(self) -> &'static str {
        match self {
            SongSource::Jamendo => "jamendo",
            SongSource::Magnatune => "magnatune",
            SongSource::ReusedDataset => "reused-dataset",
        }
    }
}

impl std::str::FromStr for SongSource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "jamendo" => Ok(SongSource::Jamendo),
            "magnatune" => Ok(SongSource::Magnatune),
            "reused-dataset" => Ok(SongSource::ReusedDataset),
            other => Err(format!(
                "unknown source {other:?}, expected jamendo, magnatune, or reused-dataset"
            )),
        }
    }
}

/// One catalog row. Song ids are unique per manifest; more than five songs
/// by one artist is tolerated but warned about at ingest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SongManifestEntry {
    pub song_id: String,
    pub path: Option<PathBuf>,
    pub artist_id: String,
    pub source: SongSource,
    pub url: Option<String>,
}

/// Per-song emotion targets. Only the eight canonical dimensions are
/// structured; unknown columns are kept as raw text and flagged. A missing
/// cell means "not annotated", which is different from any number.
#[derive(Debug, Clone, PartialEq)]
pub struct EmotionTargetTable {
    dimensions: Vec<String>,
    extra_columns: Vec<String>,
    song_ids: Vec<String>,
    values: Vec<Vec<Option<f64>>>,
    extras: Vec<Vec<String>>,
}

impl EmotionTargetTable {
    pub(crate) fn new(dimensions: Vec<String>, extra_columns: Vec<String>) -> Self {
        EmotionTargetTable {
            dimensions,
            extra_columns,
            song_ids: Vec::new(),
            values: Vec::new(),
            extras: Vec::new(),
        }
    }

    pub(crate) fn push_row(
        &mut self,
        song_id: String,
        values: Vec<Option<f64>>,
        extras: Vec<String>,
    ) -> Result<(), DatasetError> {
        if self.song_ids.contains(&song_id) {
            return Err(DatasetError::DuplicateSongId(song_id));
        }
        self.song_ids.push(song_id);
        self.values.push(values);
        self.extras.push(extras);
        Ok(())
    }

    pub fn n_songs(&self) -> usize {
        self.song_ids.len()
    }

    /// Canonical dimensions present in the file, in canonical order.
    pub fn dimensions(&self) -> &[String] {
        &self.dimensions
    }

    /// Columns that are not canonical dimensions, preserved verbatim.
    pub fn extra_columns(&self) -> &[String] {
        &self.extra_columns
    }

    pub fn song_ids(&self) -> &[String] {
        &self.song_ids
    }

    pub fn value(&self, song_row: usize, dimension: &str) -> Option<f64> {
        let d = self.dimensions.iter().position(|n| n == dimension)?;
        self.values[song_row][d]
    }

    pub fn extra(&self, song_row: usize, column: &str) -> Option<&str> {
        let c = self.extra_columns.iter().position(|n| n == column)?;
        Some(self.extras[song_row][c].as_str())
    }

    /// All annotated (song, value) pairs for one dimension.
    pub fn dimension_pairs(&self, dimension: &str) -> Option<Vec<(String, f64)>> {
        let d = self.dimensions.iter().position(|n| n == dimension)?;
        Some(
            self.song_ids
                .iter()
                .zip(&self.values)
                .filter_map(|(id, row)| row[d].map(|v| (id.clone(), v)))
                .collect(),
        )
    }

    /// Every dimension with its pairs, shaped for the regression harness.
    pub fn all_targets(&self) -> Vec<(String, Vec<(String, f64)>)> {
        self.dimensions
            .iter()
            .map(|d| (d.clone(), self.dimension_pairs(d).unwrap()))
            .collect()
    }
}

/// Tag vocabulary plus per-song bitvectors; only tags used by at least
/// `min_count` songs are kept. Vocabulary order is by descending song
/// count, then name, so tag head indices are reproducible.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TagManifest {
    tags: Vec<String>,
    song_ids: Vec<String>,
    bits: Vec<Vec<bool>>,
    min_count: usize,
}

impl TagManifest {
    pub fn new(
        assignments: &[(String, Vec<String>)],
        min_count: usize,
    ) -> Result<TagManifest, DatasetError> {
        let mut seen = std::collections::HashSet::new();
        for (song, _) in assignments {
            if !seen.insert(song.as_str()) {
                return Err(DatasetError::DuplicateSongId(song.clone()));
            }
        }
        let mut counts: std::collections::HashMap<&str, usize> = std::collections::HashMap::new();
        for (_, tags) in assignments {
            let mut uniq: Vec<&str> = tags.iter().map(String::as_str).collect();
            uniq.sort_unstable();
            uniq.dedup();
            for t in uniq {
                *counts.entry(t).or_insert(0) += 1;
            }
        }
        let mut kept: Vec<(&str, usize)> = counts
            .into_iter()
            .filter(|&(_, n)| n >= min_count)
            .collect();
        kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        if kept.is_empty() {
            return Err(DatasetError::BadManifest(format!(
                "no tag was applied to at least {min_count} songs"
            )));
        }
        let tags: Vec<String> = kept.iter().map(|&(t, _)| t.to_string()).collect();
        let mut song_ids = Vec::with_capacity(assignments.len());
        let mut bits = Vec::with_capacity(assignments.len());
        for (song, song_tags) in assignments {
            song_ids.push(song.clone());
            bits.push(
                tags.iter()
                    .map(|t| song_tags.iter().any(|s| s == t))
                    .collect(),
            );
        }
        Ok(TagManifest { tags, song_ids, bits, min_count })
    }

    pub fn tags(&self) -> &[String] {
        &self.tags
    }

    pub fn song_ids(&self) -> &[String] {
        &self.song_ids
    }

    pub fn n_songs(&self) -> usize {
        self.song_ids.len()
    }

    pub fn min_count(&self) -> usize {
        self.min_count
    }

    /// Tag bits for the song at `row`, aligned with [`TagManifest::tags`].
    pub fn row(&self, row: usize) -> &[bool] {
        &self.bits[row]
    }

    pub fn for_song(&self, song_id: &str) -> Option<&[bool]> {
        let i = self.song_ids.iter().position(|s| s == song_id)?;
        Some(&self.bits[i])
    }
}
