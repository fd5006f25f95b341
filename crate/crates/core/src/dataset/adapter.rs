//! The one place that maps released-archive column headers onto canonical
//! names. Everything else in the crate sees canonical columns only.
//!
//! The published annotation archive spells some headers differently from
//! this crate (capitalization, spaces, "mode" for modality, "arousal" for
//! energy). Normalization is deliberately conservative: lowercase, strip a
//! BOM, squash spaces and dashes to underscores, then apply a short alias
//! table. Unrecognized names pass through unchanged so callers can flag
//! them.

pub(crate) fn canonical_column(raw: &str) -> String {
    let squashed = raw
        .trim_start_matches('\u{feff}')
        .trim()
        .to_ascii_lowercase()
        .replace([' ', '-'], "_");
    match squashed.as_str() {
        "songid" | "song" | "track_id" | "trackid" | "id" => "song_id".into(),
        "workerid" | "worker" | "annotator_id" | "rater_id" => "worker_id".into(),
        "melody" => "melodiousness".into(),
        "rhythm_complexity" => "rhythmic_complexity".into(),
        "rhythm_stability" => "rhythmic_stability".into(),
        "mode" => "modality".into(),
        "arousal" => "energy".into(),
        _ => squashed,
    }
}
