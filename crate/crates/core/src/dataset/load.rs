//! Readers for every file the toolkit consumes. All of them are whole-file
//! validators: they return the clean records plus a list of rejected rows.

use std::collections::HashMap;
use std::path::Path;
use std::str::FromStr;

use super::adapter::canonical_column;
use super::write::FeatureRow;
use super::{
    DatasetError, EmotionTargetTable, Loaded, RowIssue, RowProblem, SongManifestEntry,
    SongSource, EMOTION_DIMENSIONS,
};
use crate::annotation::{MidLevelVector, RatingRecord, Winner, RATING_MAX, RATING_MIN};
use crate::annotation::ComparisonRecord;
use crate::features::{HandcraftedFeatures, MidLevelName};

/// What an annotation file turned out to contain: per-song averages or raw
/// per-worker ratings. The two schemas share no columns beyond song_id, so
/// detection is never ambiguous.
#[derive(Debug, Clone)]
pub enum Annotations {
    Averaged(Vec<MidLevelVector>),
    Raw(Vec<RatingRecord>),
}

const RAW_COLUMNS: [&str; 4] = ["worker_id", "song_id", "feature", "rating"];

fn feature_columns() -> Vec<&'static str> {
    MidLevelName::ALL.iter().map(|n| n.as_str()).collect()
}

struct CsvTable {
    headers: Vec<String>,
    rows: Vec<(u64, Vec<String>)>,
    issues: Vec<RowIssue>,
}

/// Reads a whole CSV file up front, canonicalizing headers and rejecting
/// rows whose field count disagrees with the header.
fn read_csv(path: &Path) -> Result<CsvTable, DatasetError> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .from_path(path)?;
    let headers: Vec<String> = reader
        .headers()?
        .iter()
        .map(canonical_column)
        .collect();
    let mut rows = Vec::new();
    let mut issues = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != headers.len() {
            issues.push(RowIssue {
                line,
                problem: RowProblem::Malformed(format!(
                    "{} fields, header has {}",
                    record.len(),
                    headers.len()
                )),
            });
            continue;
        }
        rows.push((line, record.iter().map(str::to_string).collect()));
    }
    Ok(CsvTable { headers, rows, issues })
}

fn column_index(headers: &[String], name: &str) -> Option<usize> {
    headers.iter().position(|h| h == name)
}

fn unknown_column_warning(headers: &[String], known: &[&str]) -> Option<String> {
    let extra: Vec<&str> = headers
        .iter()
        .map(String::as_str)
        .filter(|h| !known.contains(h))
        .collect();
    if extra.is_empty() {
        None
    } else {
        Some(format!("ignoring unknown columns: {}", extra.join(", ")))
    }
}

fn parse_finite(cell: &str) -> Result<f64, String> {
    let v: f64 = cell
        .trim()
        .parse()
        .map_err(|_| format!("{cell:?} is not a number"))?;
    if !v.is_finite() {
        return Err(format!("{cell:?} is not finite"));
    }
    Ok(v)
}

/// Loads an annotation CSV (or a JSON array written by the feature writer),
/// auto-detecting the raw and averaged schemas by their disjoint column
/// names.
pub fn load_annotations(path: &Path) -> Result<Loaded<Annotations>, DatasetError> {
    if sniff_json(path)? {
        return load_averaged_json(path);
    }
    let table = read_csv(path)?;
    let features = feature_columns();
    let is_raw = RAW_COLUMNS
        .iter()
        .all(|c| column_index(&table.headers, c).is_some());
    let is_averaged = column_index(&table.headers, "song_id").is_some()
        && features
            .iter()
            .all(|c| column_index(&table.headers, c).is_some());
    match (is_raw, is_averaged) {
        (true, true) => Err(DatasetError::UnknownSchema(
            "file matches both the raw and the averaged schema".into(),
        )),
        (true, false) => load_raw_rows(table),
        (false, true) => load_averaged_rows(table),
        (false, false) => Err(DatasetError::UnknownSchema(format!(
            "columns [{}] fit neither worker_id,song_id,feature,rating nor song_id plus the seven qualities",
            table.headers.join(", ")
        ))),
    }
}

fn load_raw_rows(table: CsvTable) -> Result<Loaded<Annotations>, DatasetError> {
    let idx: Vec<usize> = RAW_COLUMNS
        .iter()
        .map(|c| column_index(&table.headers, c).unwrap())
        .collect();
    let mut warnings = Vec::new();
    if let Some(w) = unknown_column_warning(&table.headers, &RAW_COLUMNS) {
        warnings.push(w);
    }
    let mut issues = table.issues;
    let mut records = Vec::new();
    for (line, row) in table.rows {
        let worker_id = row[idx[0]].trim();
        let song_id = row[idx[1]].trim();
        if worker_id.is_empty() || song_id.is_empty() {
            issues.push(RowIssue {
                line,
                problem: RowProblem::Malformed("empty worker or song id".into()),
            });
            continue;
        }
        let feature = match MidLevelName::from_str(&canonical_column(&row[idx[2]])) {
            Ok(f) => f,
            Err(_) => {
                issues.push(RowIssue {
                    line,
                    problem: RowProblem::UnknownFeature(row[idx[2]].clone()),
                });
                continue;
            }
        };
        let rating: u8 = match row[idx[3]].trim().parse() {
            Ok(r) => r,
            Err(_) => {
                issues.push(RowIssue {
                    line,
                    problem: RowProblem::Malformed(format!(
                        "rating {:?} is not an integer",
                        row[idx[3]]
                    )),
                });
                continue;
            }
        };
        if !(RATING_MIN..=RATING_MAX).contains(&rating) {
            issues.push(RowIssue {
                line,
                problem: RowProblem::OutOfRangeRating(format!(
                    "rating {rating} outside {RATING_MIN}..={RATING_MAX}"
                )),
            });
            continue;
        }
        records.push(RatingRecord {
            worker_id: worker_id.to_string(),
            song_id: song_id.to_string(),
            feature,
            rating,
        });
    }
    Ok(Loaded { value: Annotations::Raw(records), issues, warnings })
}

fn load_averaged_rows(table: CsvTable) -> Result<Loaded<Annotations>, DatasetError> {
    let features = feature_columns();
    let song_col = column_index(&table.headers, "song_id").unwrap();
    let fcols: Vec<usize> = features
        .iter()
        .map(|c| column_index(&table.headers, c).unwrap())
        .collect();
    let mut known: Vec<&str> = vec!["song_id"];
    known.extend(&features);
    let mut warnings = Vec::new();
    if let Some(w) = unknown_column_warning(&table.headers, &known) {
        warnings.push(w);
    }
    let mut issues = table.issues;
    let mut records: Vec<MidLevelVector> = Vec::new();
    for (line, row) in table.rows {
        let song_id = row[song_col].trim();
        if song_id.is_empty() {
            issues.push(RowIssue {
                line,
                problem: RowProblem::Malformed("empty song id".into()),
            });
            continue;
        }
        if records.iter().any(|r| r.song_id == song_id) {
            return Err(DatasetError::DuplicateSongId(song_id.to_string()));
        }
        match averaged_row(song_id, &row, &fcols) {
            Ok(vector) => records.push(vector),
            Err(problem) => issues.push(RowIssue { line, problem }),
        }
    }
    Ok(Loaded { value: Annotations::Averaged(records), issues, warnings })
}

/// Builds one song's vector, or reports the first bad cell. Empty cells are
/// absent qualities, not zeros.
fn averaged_row(
    song_id: &str,
    row: &[String],
    fcols: &[usize],
) -> Result<MidLevelVector, RowProblem> {
    let mut vector = MidLevelVector::new(song_id);
    for (name, &col) in MidLevelName::ALL.iter().zip(fcols) {
        let cell = row[col].trim();
        if cell.is_empty() {
            continue;
        }
        let value = parse_finite(cell).map_err(RowProblem::Malformed)?;
        vector
            .set(*name, value, 1)
            .map_err(|e| RowProblem::OutOfRangeRating(e.to_string()))?;
    }
    Ok(vector)
}

fn sniff_json(path: &Path) -> Result<bool, DatasetError> {
    let bytes = std::fs::read(path)?;
    Ok(bytes
        .iter()
        .find(|b| !b.is_ascii_whitespace())
        .is_some_and(|&b| b == b'['))
}

fn load_averaged_json(path: &Path) -> Result<Loaded<Annotations>, DatasetError> {
    let text = std::fs::read_to_string(path)?;
    let rows: Vec<serde_json::Map<String, serde_json::Value>> =
        serde_json::from_str(&text)
            .map_err(|e| DatasetError::UnknownSchema(format!("bad JSON array: {e}")))?;
    let mut issues = Vec::new();
    let mut warnings = Vec::new();
    let mut records: Vec<MidLevelVector> = Vec::new();
    for (i, obj) in rows.iter().enumerate() {
        let line = i as u64 + 1;
        let Some(song_id) = obj.get("song_id").and_then(|v| v.as_str()) else {
            issues.push(RowIssue {
                line,
                problem: RowProblem::Malformed("missing song_id".into()),
            });
            continue;
        };
        if records.iter().any(|r| r.song_id == song_id) {
            return Err(DatasetError::DuplicateSongId(song_id.to_string()));
        }
        for key in obj.keys() {
            if key != "song_id"
                && MidLevelName::from_str(key).is_err()
                && !warnings.iter().any(|w: &String| w.contains(key.as_str()))
            {
                warnings.push(format!("ignoring unknown key: {key}"));
            }
        }
        match averaged_object(song_id, obj) {
            Ok(vector) => records.push(vector),
            Err(problem) => issues.push(RowIssue { line, problem }),
        }
    }
    Ok(Loaded { value: Annotations::Averaged(records), issues, warnings })
}

fn averaged_object(
    song_id: &str,
    obj: &serde_json::Map<String, serde_json::Value>,
) -> Result<MidLevelVector, RowProblem> {
    let mut vector = MidLevelVector::new(song_id);
    for name in MidLevelName::ALL {
        match obj.get(name.as_str()) {
            None | Some(serde_json::Value::Null) => {}
            Some(serde_json::Value::Number(n)) => {
                let value = n.as_f64().ok_or_else(|| {
                    RowProblem::Malformed(format!("{name}: {n} is not an f64"))
                })?;
                vector
                    .set(name, value, 1)
                    .map_err(|e| RowProblem::OutOfRangeRating(e.to_string()))?;
            }
            Some(other) => {
                return Err(RowProblem::Malformed(format!(
                    "{name}: expected a number, got {other}"
                )));
            }
        }
    }
    Ok(vector)
}

/// Loads a pairwise comparison log.
pub fn load_comparisons(path: &Path) -> Result<Loaded<Vec<ComparisonRecord>>, DatasetError> {
    let table = read_csv(path)?;
    let wanted = ["worker_id", "feature", "song_a", "song_b", "winner"];
    let idx: Vec<usize> = wanted
        .iter()
        .map(|c| {
            column_index(&table.headers, c).ok_or_else(|| {
                DatasetError::UnknownSchema(format!(
                    "comparison log is missing the {c} column"
                ))
            })
        })
        .collect::<Result<_, _>>()?;
    let mut warnings = Vec::new();
    if let Some(w) = unknown_column_warning(&table.headers, &wanted) {
        warnings.push(w);
    }
    let mut issues = table.issues;
    let mut records = Vec::new();
    for (line, row) in table.rows {
        let worker_id = row[idx[0]].trim();
        let song_a = row[idx[2]].trim();
        let song_b = row[idx[3]].trim();
        if worker_id.is_empty() || song_a.is_empty() || song_b.is_empty() {
            issues.push(RowIssue {
                line,
                problem: RowProblem::Malformed("empty worker or song id".into()),
            });
            continue;
        }
        let feature = match MidLevelName::from_str(&canonical_column(&row[idx[1]])) {
            Ok(f) => f,
            Err(_) => {
                issues.push(RowIssue {
                    line,
                    problem: RowProblem::UnknownFeature(row[idx[1]].clone()),
                });
                continue;
            }
        };
        if song_a == song_b {
            issues.push(RowIssue {
                line,
                problem: RowProblem::SelfComparison(format!(
                    "{song_a} compared with itself"
                )),
            });
            continue;
        }
        let winner = match row[idx[4]].trim().to_ascii_uppercase().parse::<Winner>() {
            Ok(w) => w,
            Err(e) => {
                issues.push(RowIssue { line, problem: RowProblem::Malformed(e) });
                continue;
            }
        };
        records.push(ComparisonRecord {
            worker_id: worker_id.to_string(),
            feature,
            song_a: song_a.to_string(),
            song_b: song_b.to_string(),
            winner,
        });
    }
    Ok(Loaded { value: records, issues, warnings })
}

/// Loads per-song emotion targets. Unknown columns are preserved as raw
/// text and flagged in the warnings.
pub fn load_emotion_targets(path: &Path) -> Result<Loaded<EmotionTargetTable>, DatasetError> {
    let table = read_csv(path)?;
    let song_col = column_index(&table.headers, "song_id").ok_or_else(|| {
        DatasetError::UnknownSchema("emotion table is missing the song_id column".into())
    })?;
    let dim_cols: Vec<(String, usize)> = EMOTION_DIMENSIONS
        .iter()
        .filter_map(|d| column_index(&table.headers, d).map(|i| (d.to_string(), i)))
        .collect();
    if dim_cols.is_empty() {
        return Err(DatasetError::UnknownSchema(format!(
            "no emotion dimension column among [{}]",
            table.headers.join(", ")
        )));
    }
    let extra_cols: Vec<(String, usize)> = table
        .headers
        .iter()
        .enumerate()
        .filter(|&(i, h)| {
            i != song_col && !EMOTION_DIMENSIONS.contains(&h.as_str())
        })
        .map(|(i, h)| (h.clone(), i))
        .collect();
    let mut warnings = Vec::new();
    for (name, _) in &extra_cols {
        warnings.push(format!("column {name} is not an emotion dimension; kept as text"));
    }
    let mut out = EmotionTargetTable::new(
        dim_cols.iter().map(|(d, _)| d.clone()).collect(),
        extra_cols.iter().map(|(c, _)| c.clone()).collect(),
    );
    let mut issues = table.issues;
    for (line, row) in table.rows {
        let song_id = row[song_col].trim();
        if song_id.is_empty() {
            issues.push(RowIssue {
                line,
                problem: RowProblem::Malformed("empty song id".into()),
            });
            continue;
        }
        let mut values = Vec::with_capacity(dim_cols.len());
        let mut bad = None;
        for (dim, col) in &dim_cols {
            let cell = row[*col].trim();
            if cell.is_empty() {
                values.push(None);
                continue;
            }
            match parse_finite(cell) {
                Ok(v) => values.push(Some(v)),
                Err(e) => {
                    bad = Some(RowProblem::Malformed(format!("{dim}: {e}")));
                    break;
                }
            }
        }
        if let Some(problem) = bad {
            issues.push(RowIssue { line, problem });
            continue;
        }
        let extras = extra_cols.iter().map(|(_, col)| row[*col].clone()).collect();
        out.push_row(song_id.to_string(), values, extras)?;
    }
    Ok(Loaded { value: out, issues, warnings })
}

/// Loads the song catalog. Artists with more than five songs are allowed
/// through with a warning; duplicate song ids are fatal.
pub fn load_song_manifest(
    path: &Path,
) -> Result<Loaded<Vec<SongManifestEntry>>, DatasetError> {
    let table = read_csv(path)?;
    let required = ["song_id", "artist_id", "source"];
    let idx: Vec<usize> = required
        .iter()
        .map(|c| {
            column_index(&table.headers, c).ok_or_else(|| {
                DatasetError::UnknownSchema(format!("manifest is missing the {c} column"))
            })
        })
        .collect::<Result<_, _>>()?;
    let path_col = column_index(&table.headers, "path");
    let url_col = column_index(&table.headers, "url");
    let known = ["song_id", "artist_id", "source", "path", "url"];
    let mut warnings = Vec::new();
    if let Some(w) = unknown_column_warning(&table.headers, &known) {
        warnings.push(w);
    }
    let mut issues = table.issues;
    let mut entries: Vec<SongManifestEntry> = Vec::new();
    for (line, row) in table.rows {
        let song_id = row[idx[0]].trim();
        let artist_id = row[idx[1]].trim();
        if song_id.is_empty() || artist_id.is_empty() {
            issues.push(RowIssue {
                line,
                problem: RowProblem::Malformed("empty song or artist id".into()),
            });
            continue;
        }
        if entries.iter().any(|e| e.song_id == song_id) {
            return Err(DatasetError::DuplicateSongId(song_id.to_string()));
        }
        let source = match row[idx[2]].trim().parse::<SongSource>() {
            Ok(s) => s,
            Err(e) => {
                issues.push(RowIssue { line, problem: RowProblem::Malformed(e) });
                continue;
            }
        };
        let opt = |col: Option<usize>| -> Option<String> {
            col.map(|c| row[c].trim()).filter(|s| !s.is_empty()).map(str::to_string)
        };
        entries.push(SongManifestEntry {
            song_id: song_id.to_string(),
            path: opt(path_col).map(Into::into),
            artist_id: artist_id.to_string(),
            source,
            url: opt(url_col),
        });
    }
    let mut per_artist: HashMap<&str, usize> = HashMap::new();
    for e in &entries {
        *per_artist.entry(e.artist_id.as_str()).or_insert(0) += 1;
    }
    let mut over: Vec<(&str, usize)> =
        per_artist.into_iter().filter(|&(_, n)| n > 5).collect();
    over.sort();
    for (artist, n) in over {
        warnings.push(format!("artist {artist} has {n} songs, cap is 5"));
    }
    Ok(Loaded { value: entries, issues, warnings })
}

/// Loads per-song tag lists: columns song_id and tags, the latter
/// semicolon-separated. Feed the result to [`super::TagManifest::new`].
pub fn load_tag_assignments(
    path: &Path,
) -> Result<Loaded<Vec<(String, Vec<String>)>>, DatasetError> {
    let table = read_csv(path)?;
    let wanted = ["song_id", "tags"];
    let idx: Vec<usize> = wanted
        .iter()
        .map(|c| {
            column_index(&table.headers, c).ok_or_else(|| {
                DatasetError::UnknownSchema(format!("tag table is missing the {c} column"))
            })
        })
        .collect::<Result<_, _>>()?;
    let mut warnings = Vec::new();
    if let Some(w) = unknown_column_warning(&table.headers, &wanted) {
        warnings.push(w);
    }
    let mut issues = table.issues;
    let mut out: Vec<(String, Vec<String>)> = Vec::new();
    for (line, row) in table.rows {
        let song_id = row[idx[0]].trim();
        if song_id.is_empty() {
            issues.push(RowIssue {
                line,
                problem: RowProblem::Malformed("empty song id".into()),
            });
            continue;
        }
        if out.iter().any(|(s, _)| s == song_id) {
            return Err(DatasetError::DuplicateSongId(song_id.to_string()));
        }
        let tags: Vec<String> = row[idx[1]]
            .split(';')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(str::to_string)
            .collect();
        out.push((song_id.to_string(), tags));
    }
    Ok(Loaded { value: out, issues, warnings })
}

/// Loads a song-to-cluster assignment table with columns song_id,cluster.
/// Cluster numbers are 1-based; the valid range is the caller's contract.
pub fn load_cluster_labels(path: &Path) -> Result<Loaded<Vec<(String, usize)>>, DatasetError> {
    let table = read_csv(path)?;
    let wanted = ["song_id", "cluster"];
    let idx: Vec<usize> = wanted
        .iter()
        .map(|c| {
            column_index(&table.headers, c).ok_or_else(|| {
                DatasetError::UnknownSchema(format!("cluster table is missing the {c} column"))
            })
        })
        .collect::<Result<_, _>>()?;
    let mut warnings = Vec::new();
    if let Some(w) = unknown_column_warning(&table.headers, &wanted) {
        warnings.push(w);
    }
    let mut issues = table.issues;
    let mut out: Vec<(String, usize)> = Vec::new();
    for (line, row) in table.rows {
        let song_id = row[idx[0]].trim();
        if song_id.is_empty() {
            issues.push(RowIssue {
                line,
                problem: RowProblem::Malformed("empty song id".into()),
            });
            continue;
        }
        if out.iter().any(|(s, _)| s == song_id) {
            return Err(DatasetError::DuplicateSongId(song_id.to_string()));
        }
        let cluster = match row[idx[1]].trim().parse::<usize>() {
            Ok(c) if c >= 1 => c,
            _ => {
                issues.push(RowIssue {
                    line,
                    problem: RowProblem::Malformed(format!(
                        "cluster {:?} is not a positive integer",
                        row[idx[1]]
                    )),
                });
                continue;
            }
        };
        out.push((song_id.to_string(), cluster));
    }
    Ok(Loaded { value: out, issues, warnings })
}

/// Loads a handcrafted-feature file written by [`super::write_features`],
/// CSV or JSON, detected by content.
pub fn load_handcrafted(path: &Path) -> Result<Loaded<Vec<FeatureRow>>, DatasetError> {
    if sniff_json(path)? {
        return load_handcrafted_json(path);
    }
    let table = read_csv(path)?;
    let wanted = super::write::HANDCRAFTED_COLUMNS;
    let idx: Vec<usize> = wanted
        .iter()
        .map(|c| {
            column_index(&table.headers, c).ok_or_else(|| {
                DatasetError::UnknownSchema(format!("feature file is missing the {c} column"))
            })
        })
        .collect::<Result<_, _>>()?;
    let mut warnings = Vec::new();
    if let Some(w) = unknown_column_warning(&table.headers, &wanted) {
        warnings.push(w);
    }
    let mut issues = table.issues;
    let mut rows: Vec<FeatureRow> = Vec::new();
    for (line, row) in table.rows {
        let song_id = row[idx[0]].trim();
        if song_id.is_empty() {
            issues.push(RowIssue {
                line,
                problem: RowProblem::Malformed("empty song id".into()),
            });
            continue;
        }
        if rows.iter().any(|r| r.song_id == song_id) {
            return Err(DatasetError::DuplicateSongId(song_id.to_string()));
        }
        let mut values = [0.0f64; 6];
        let mut bad = None;
        for (slot, &col) in values.iter_mut().zip(&idx[1..]) {
            match parse_finite(&row[col]) {
                Ok(v) => *slot = v,
                Err(e) => {
                    bad = Some(RowProblem::Malformed(e));
                    break;
                }
            }
        }
        if let Some(problem) = bad {
            issues.push(RowIssue { line, problem });
            continue;
        }
        rows.push(FeatureRow {
            song_id: song_id.to_string(),
            features: HandcraftedFeatures {
                dissonance: values[0],
                inharmonicity: values[1],
                pulse_clarity: values[2],
                attack_leap: values[3],
                hcdf_mean: values[4],
                majorness: values[5],
            },
        });
    }
    Ok(Loaded { value: rows, issues, warnings })
}

fn load_handcrafted_json(path: &Path) -> Result<Loaded<Vec<FeatureRow>>, DatasetError> {
    let text = std::fs::read_to_string(path)?;
    let objs: Vec<serde_json::Map<String, serde_json::Value>> =
        serde_json::from_str(&text)
            .map_err(|e| DatasetError::UnknownSchema(format!("bad JSON array: {e}")))?;
    let mut issues = Vec::new();
    let mut rows: Vec<FeatureRow> = Vec::new();
    for (i, obj) in objs.iter().enumerate() {
        let line = i as u64 + 1;
        let Some(song_id) = obj.get("song_id").and_then(|v| v.as_str()) else {
            issues.push(RowIssue {
                line,
                problem: RowProblem::Malformed("missing song_id".into()),
            });
            continue;
        };
        if rows.iter().any(|r| r.song_id == song_id) {
            return Err(DatasetError::DuplicateSongId(song_id.to_string()));
        }
        let mut values = [0.0f64; 6];
        let mut bad = None;
        for (slot, name) in values
            .iter_mut()
            .zip(&super::write::HANDCRAFTED_COLUMNS[1..])
        {
            match obj.get(*name).and_then(|v| v.as_f64()) {
                Some(v) if v.is_finite() => *slot = v,
                _ => {
                    bad = Some(RowProblem::Malformed(format!("{name} is missing or not finite")));
                    break;
                }
            }
        }
        if let Some(problem) = bad {
            issues.push(RowIssue { line, problem });
            continue;
        }
        rows.push(FeatureRow {
            song_id: song_id.to_string(),
            features: HandcraftedFeatures {
                dissonance: values[0],
                inharmonicity: values[1],
                pulse_clarity: values[2],
                attack_leap: values[3],
                hcdf_mean: values[4],
                majorness: values[5],
            },
        });
    }
    Ok(Loaded { value: rows, issues, warnings: Vec::new() })
}
