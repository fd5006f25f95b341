//! Feature output files. Columns are fixed, floats are printed as the
//! shortest decimal that parses back to the same bits, and every file
//! round-trips through the matching loader.

use std::path::Path;

use super::{DatasetError, OutputFormat};
use crate::annotation::MidLevelVector;
use crate::features::{HandcraftedFeatures, MidLevelName};

pub(crate) const HANDCRAFTED_COLUMNS: [&str; 7] = [
    "song_id",
    "dissonance",
    "inharmonicity",
    "pulse_clarity",
    "attack_leap",
    "hcdf_mean",
    "majorness",
];

/// One song's handcrafted descriptors, keyed for serialization.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub song_id: String,
    pub features: HandcraftedFeatures,
}

impl FeatureRow {
    fn values(&self) -> [f64; 6] {
        let f = &self.features;
        [
            f.dissonance,
            f.inharmonicity,
            f.pulse_clarity,
            f.attack_leap,
            f.hcdf_mean,
            f.majorness,
        ]
    }
}

/// What to serialize: handcrafted descriptor rows or per-song quality
/// vectors.
#[derive(Debug, Clone, Copy)]
pub enum FeatureRecords<'a> {
    Handcrafted(&'a [FeatureRow]),
    MidLevel(&'a [MidLevelVector]),
}

/// Writes feature records to `path`. An empty record list still produces a
/// valid file (header-only CSV, empty JSON array).
pub fn write_features(
    records: FeatureRecords,
    path: &Path,
    format: OutputFormat,
) -> Result<(), DatasetError> {
    if let FeatureRecords::Handcrafted(rows) = records {
        for row in rows {
            for (value, name) in row.values().iter().zip(&HANDCRAFTED_COLUMNS[1..]) {
                if !value.is_finite() {
                    return Err(DatasetError::NonFinite(format!(
                        "{} of song {} is {value}",
                        name, row.song_id
                    )));
                }
            }
        }
    }
    match format {
        OutputFormat::Csv => write_csv(records, path),
        OutputFormat::Json => write_json(records, path),
    }
}

fn write_csv(records: FeatureRecords, path: &Path) -> Result<(), DatasetError> {
    let mut w = csv::Writer::from_path(path)?;
    match records {
        FeatureRecords::Handcrafted(rows) => {
            w.write_record(HANDCRAFTED_COLUMNS)?;
            for row in rows {
                let mut fields = vec![row.song_id.clone()];
                fields.extend(row.values().iter().map(|v| format!("{v}")));
                w.write_record(&fields)?;
            }
        }
        FeatureRecords::MidLevel(vectors) => {
            let mut header = vec!["song_id"];
            header.extend(MidLevelName::ALL.iter().map(|n| n.as_str()));
            w.write_record(&header)?;
            for v in vectors {
                let mut fields = vec![v.song_id.clone()];
                for name in MidLevelName::ALL {
                    fields.push(v.get(name).map_or(String::new(), |x| format!("{x}")));
                }
                w.write_record(&fields)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn write_json(records: FeatureRecords, path: &Path) -> Result<(), DatasetError> {
    let number = |v: f64| {
        serde_json::Number::from_f64(v)
            .ok_or_else(|| DatasetError::NonFinite(format!("{v} has no JSON form")))
    };
    let mut array = Vec::new();
    match records {
        FeatureRecords::Handcrafted(rows) => {
            for row in rows {
                let mut obj = serde_json::Map::new();
                obj.insert("song_id".into(), row.song_id.clone().into());
                for (value, name) in row.values().iter().zip(&HANDCRAFTED_COLUMNS[1..]) {
                    obj.insert((*name).into(), number(*value)?.into());
                }
                array.push(serde_json::Value::Object(obj));
            }
        }
        FeatureRecords::MidLevel(vectors) => {
            for v in vectors {
                let mut obj = serde_json::Map::new();
                obj.insert("song_id".into(), v.song_id.clone().into());
                for name in MidLevelName::ALL {
                    if let Some(x) = v.get(name) {
                        obj.insert(name.as_str().into(), number(x)?.into());
                    }
                }
                array.push(serde_json::Value::Object(obj));
            }
        }
    }
    let text = serde_json::to_string_pretty(&array)
        .map_err(|e| DatasetError::Serialization(e.to_string()))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}
