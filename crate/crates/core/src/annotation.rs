//! Aggregation of crowd annotations: pairwise-comparison rankings, anchor
//! scales, per-song rating vectors, inter-rater reliability, and worker
//! screening against a trusted golden table.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::features::MidLevelName;

/// Lowest admissible rating on the annotation scale.
pub const RATING_MIN: u8 = 1;
/// Highest admissible rating on the annotation scale.
pub const RATING_MAX: u8 = 9;
/// Anchors per scale, one per rating step.
pub const ANCHOR_COUNT: usize = 9;
/// Default ban threshold for a worker's mean absolute deviation from the
/// golden means.
pub const DEFAULT_DEV_TOLERANCE: f64 = 2.5;
/// Default ban threshold for the standard deviation of a worker's deviations.
/// A worker guessing uniformly on a 1..=9 scale lands near sqrt(80/12) = 2.58.
pub const DEFAULT_STD_TOLERANCE: f64 = 2.3;

#[derive(Debug, thiserror::Error)]
pub enum AnnotationError {
    #[error("empty input")]
    EmptyInput,
    #[error("too few songs: have {have}, need {need}")]
    TooFewSongs { have: usize, need: usize },
    #[error("incomplete matrix: {0}")]
    IncompleteMatrix(String),
    #[error("degenerate variance: {0}")]
    DegenerateVariance(String),
    #[error("invalid rating: {0}")]
    InvalidRating(String),
}

/// Which side of a pairwise comparison won.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Winner {
    A,
    B,
}

impl Winner {
    pub fn as_str(self) -> &'static str {
        match self {
            Winner::A => "A",
            Winner::B => "B",
        }
    }
}

impl std::fmt::Display for Winner {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Winner {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "A" => Ok(Winner::A),
            "B" => Ok(Winner::B),
            other => Err(format!("unknown winner {other:?}, expected \"A\" or \"B\"")),
        }
    }
}

/// One pairwise judgement: which of two songs shows more of a quality.
/// `song_a` and `song_b` must differ; loaders reject self-comparisons.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComparisonRecord {
    pub worker_id: String,
    pub feature: MidLevelName,
    pub song_a: String,
    pub song_b: String,
    pub winner: Winner,
}

/// One absolute judgement on the 1..=9 scale.
/// `rating` must lie in [`RATING_MIN`]..=[`RATING_MAX`]; loaders reject others.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatingRecord {
    pub worker_id: String,
    pub song_id: String,
    pub feature: MidLevelName,
    pub rating: u8,
}

/// Nine reference songs for one quality, ordered from least to most of it.
/// Raters hear these before rating, so a "7" means "between anchors 7 and 8".
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnchorScale {
    pub feature: MidLevelName,
    pub anchors: [String; ANCHOR_COUNT],
}

/// Per-song rating means, one slot per quality in [`MidLevelName::ALL`] order.
/// A slot is either absent (no ratings yet) or a mean in [1, 9] with the
/// count of ratings behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct MidLevelVector {
    pub song_id: String,
    values: [Option<f64>; MidLevelName::COUNT],
    counts: [u32; MidLevelName::COUNT],
}

impl MidLevelVector {
    /// A vector with every quality absent.
    pub fn new(song_id: impl Into<String>) -> Self {
        MidLevelVector {
            song_id: song_id.into(),
            values: [None; MidLevelName::COUNT],
            counts: [0; MidLevelName::COUNT],
        }
    }

    /// A complete vector; every slot gets a count of one.
    pub fn from_values(
        song_id: impl Into<String>,
        values: [f64; MidLevelName::COUNT],
    ) -> Result<Self, AnnotationError> {
        let mut v = MidLevelVector::new(song_id);
        for (name, value) in MidLevelName::ALL.iter().zip(values) {
            v.set(*name, value, 1)?;
        }
        Ok(v)
    }

    /// Stores a mean for one quality. The mean must be finite and on the
    /// rating scale, and must summarise at least one rating.
    pub fn set(
        &mut self,
        feature: MidLevelName,
        mean: f64,
        n_ratings: u32,
    ) -> Result<(), AnnotationError> {
        let lo = f64::from(RATING_MIN);
        let hi = f64::from(RATING_MAX);
        if !mean.is_finite() || !(lo..=hi).contains(&mean) {
            return Err(AnnotationError::InvalidRating(format!(
                "mean {mean} for {feature} is outside the {RATING_MIN}..={RATING_MAX} scale"
            )));
        }
        if n_ratings == 0 {
            return Err(AnnotationError::InvalidRating(format!(
                "{feature} set with zero supporting ratings"
            )));
        }
        self.values[feature.index()] = Some(mean);
        self.counts[feature.index()] = n_ratings;
        Ok(())
    }

    pub fn get(&self, feature: MidLevelName) -> Option<f64> {
        self.values[feature.index()]
    }

    /// How many ratings back the stored mean; zero when absent.
    pub fn n_ratings(&self, feature: MidLevelName) -> u32 {
        self.counts[feature.index()]
    }

    pub fn is_complete(&self) -> bool {
        self.values.iter().all(Option::is_some)
    }

    /// All seven means in [`MidLevelName::ALL`] order, or `None` if any
    /// quality is absent.
    pub fn as_array(&self) -> Option<[f64; MidLevelName::COUNT]> {
        let mut out = [0.0; MidLevelName::COUNT];
        for (slot, value) in out.iter_mut().zip(&self.values) {
            *slot = (*value)?;
        }
        Some(out)
    }
}

/// Screening verdict for one worker, compared against the golden table.
/// Both deviation statistics are taken over the worker's ratings of songs
/// present in that table; they are NaN when no rating overlaps it
/// (`n_ratings == 0`), and such workers are never banned.
#[derive(Debug, Clone)]
pub struct WorkerStats {
    pub worker_id: String,
    /// Ratings that overlapped the golden table.
    pub n_ratings: usize,
    pub mean_abs_dev_from_song_mean: f64,
    pub dev_std: f64,
    pub banned: bool,
}

/// Pairwise correlations between the seven qualities across songs.
/// `values` is symmetric with a unit diagonal; `defined[i][j]` is false where
/// a quality had zero variance, in which case `values[i][j]` is 0.
#[derive(Debug, Clone)]
pub struct CorrelationMatrix {
    pub values: [[f64; MidLevelName::COUNT]; MidLevelName::COUNT],
    pub defined: [[bool; MidLevelName::COUNT]; MidLevelName::COUNT],
}

impl CorrelationMatrix {
    /// The correlation between two qualities, or `None` where undefined.
    pub fn get(&self, a: MidLevelName, b: MidLevelName) -> Option<f64> {
        self.defined[a.index()][b.index()].then(|| self.values[a.index()][b.index()])
    }
}

/// Pairwise comparisons needed to cover every pair of `n` songs once.
pub fn comparisons_needed(n: u64) -> u64 {
    let n = u128::from(n);
    (n * n.saturating_sub(1) / 2) as u64
}

/// Ranks songs by the fraction of their comparisons they won, for one quality.
///
/// Every comparison counts as an appearance for both songs and a win for the
/// winner, so win fractions lie in [0, 1] and their weighted sum over songs
/// equals the number of comparisons. Sorted by fraction descending, ties by
/// song id ascending. An empty `comparisons` list is an error; a feature with
/// no comparisons yields an empty ranking.
pub fn win_rate_ranking(
    comparisons: &[ComparisonRecord],
    feature: MidLevelName,
) -> Result<Vec<(String, f64)>, AnnotationError> {
    if comparisons.is_empty() {
        return Err(AnnotationError::EmptyInput);
    }
    let mut tally: BTreeMap<&str, (u64, u64)> = BTreeMap::new();
    for c in comparisons.iter().filter(|c| c.feature == feature) {
        let a = tally.entry(c.song_a.as_str()).or_default();
        a.1 += 1;
        if c.winner == Winner::A {
            a.0 += 1;
        }
        let b = tally.entry(c.song_b.as_str()).or_default();
        b.1 += 1;
        if c.winner == Winner::B {
            b.0 += 1;
        }
    }
    let mut out: Vec<(String, f64)> = tally
        .into_iter()
        .map(|(id, (wins, seen))| (id.to_string(), wins as f64 / seen as f64))
        .collect();
    out.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Ok(out)
}

/// Picks nine anchors from a descending win-fraction ranking, evenly spaced
/// across the ranked list and returned from least to most of the quality.
///
/// Anchor `j` (0 = low end) is the song at rank `round((8 - j) * (n - 1) / 8)`.
/// With at least nine songs the nine positions are distinct.
pub fn build_anchor_scale(
    ranking: &[(String, f64)],
    feature: MidLevelName,
) -> Result<AnchorScale, AnnotationError> {
    let n = ranking.len();
    if n < ANCHOR_COUNT {
        return Err(AnnotationError::TooFewSongs { have: n, need: ANCHOR_COUNT });
    }
    let span = (ANCHOR_COUNT - 1) as f64;
    let anchors: Vec<String> = (0..ANCHOR_COUNT)
        .map(|j| {
            let rank = ((span - j as f64) * (n - 1) as f64 / span).round() as usize;
            ranking[rank].0.clone()
        })
        .collect();
    let anchors: [String; ANCHOR_COUNT] = anchors.try_into().expect("length checked");
    Ok(AnchorScale { feature, anchors })
}

/// Collapses raw ratings into per-song means. Songs come back sorted by id;
/// a quality nobody rated for a song stays absent in its vector.
///
/// Ratings must already be on the 1..=9 scale (loaders enforce this), so
/// every mean lands on the scale too.
pub fn aggregate_ratings(records: &[RatingRecord]) -> Vec<MidLevelVector> {
    let mut sums: BTreeMap<&str, [(f64, u32); MidLevelName::COUNT]> = BTreeMap::new();
    for r in records {
        let cell = &mut sums
            .entry(r.song_id.as_str())
            .or_insert([(0.0, 0); MidLevelName::COUNT])[r.feature.index()];
        cell.0 += f64::from(r.rating);
        cell.1 += 1;
    }
    sums.into_iter()
        .map(|(song_id, cells)| {
            let mut v = MidLevelVector::new(song_id);
            for (name, (sum, n)) in MidLevelName::ALL.iter().zip(cells) {
                if n > 0 {
                    v.set(*name, sum / f64::from(n), n)
                        .expect("mean of ratings on the 1..=9 scale stays on it");
                }
            }
            v
        })
        .collect()
}

fn population_variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n
}

/// Internal-consistency reliability of a complete raters-by-items matrix
/// (`matrix[rater][item]`).
///
/// With `k` raters this is `k / (k - 1) * (1 - sum of per-rater variances /
/// variance of per-item totals)`, using population variances throughout. It is
/// computed as a single ratio so perfect agreement yields exactly 1.0. The
/// value is invariant under shifting all cells by a constant or scaling them
/// by a positive factor, and can go negative for discordant raters.
pub fn cronbach_alpha(matrix: &[Vec<f64>]) -> Result<f64, AnnotationError> {
    let k = matrix.len();
    if k < 2 {
        return Err(AnnotationError::IncompleteMatrix(format!(
            "need at least 2 raters, have {k}"
        )));
    }
    let m = matrix[0].len();
    if m < 2 {
        return Err(AnnotationError::IncompleteMatrix(format!(
            "need at least 2 items, have {m}"
        )));
    }
    for (i, row) in matrix.iter().enumerate() {
        if row.len() != m {
            return Err(AnnotationError::IncompleteMatrix(format!(
                "rater {i} has {} items, expected {m}",
                row.len()
            )));
        }
        if let Some(j) = row.iter().position(|x| !x.is_finite()) {
            return Err(AnnotationError::IncompleteMatrix(format!(
                "non-finite cell at rater {i}, item {j}"
            )));
        }
    }
    let rater_var_sum: f64 = matrix.iter().map(|row| population_variance(row)).sum();
    let totals: Vec<f64> = (0..m)
        .map(|j| matrix.iter().map(|row| row[j]).sum())
        .collect();
    let total_var = population_variance(&totals);
    if total_var == 0.0 {
        return Err(AnnotationError::DegenerateVariance(
            "per-item totals have zero variance".into(),
        ));
    }
    let k = k as f64;
    Ok((k * (total_var - rater_var_sum)) / ((k - 1.0) * total_var))
}

/// Builds a complete raters-by-items matrix from sparse ratings of one
/// quality so [`cronbach_alpha`] can run on crowd data.
///
/// Songs with at least two ratings are the items, sorted by id. Each song's
/// ratings are shuffled with the seeded generator and dealt to `k` anonymous
/// rater slots, where `k` is the smallest eligible rating count capped at
/// `max_raters`; surplus ratings are dropped. Slot `r` of every song forms
/// pseudo-rater `r`.
pub fn pseudo_rater_matrix(
    records: &[RatingRecord],
    feature: MidLevelName,
    max_raters: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>, AnnotationError> {
    if records.is_empty() {
        return Err(AnnotationError::EmptyInput);
    }
    if max_raters < 2 {
        return Err(AnnotationError::IncompleteMatrix(format!(
            "need at least 2 rater slots, asked for {max_raters}"
        )));
    }
    let mut per_song: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.feature == feature) {
        per_song
            .entry(r.song_id.as_str())
            .or_default()
            .push(f64::from(r.rating));
    }
    per_song.retain(|_, ratings| ratings.len() >= 2);
    if per_song.len() < 2 {
        return Err(AnnotationError::TooFewSongs { have: per_song.len(), need: 2 });
    }
    let k = per_song
        .values()
        .map(Vec::len)
        .min()
        .expect("at least two songs")
        .min(max_raters);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = vec![Vec::with_capacity(per_song.len()); k];
    for ratings in per_song.values_mut() {
        ratings.shuffle(&mut rng);
        for (row, value) in rows.iter_mut().zip(ratings.iter()) {
            row.push(*value);
        }
    }
    Ok(rows)
}

/// Flags workers whose ratings stray too far from a trusted golden table.
///
/// Every rating of a golden song contributes a deviation `rating - golden
/// mean` for that quality. A worker is banned when the mean absolute
/// deviation exceeds `dev_tolerance` or the population standard deviation of
/// the deviations reaches `std_tolerance`; the second catches random guessers
/// whose errors cancel in the mean. Workers with no golden overlap come back
/// unevaluated (NaN statistics) and unbanned. Sorted by worker id.
pub fn screen_workers(
    records: &[RatingRecord],
    golden: &[MidLevelVector],
    dev_tolerance: f64,
    std_tolerance: f64,
) -> Vec<WorkerStats> {
    let table: BTreeMap<&str, &MidLevelVector> =
        golden.iter().map(|v| (v.song_id.as_str(), v)).collect();
    let mut per_worker: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for r in records {
        let devs = per_worker.entry(r.worker_id.as_str()).or_default();
        let gold = table.get(r.song_id.as_str()).and_then(|v| v.get(r.feature));
        if let Some(g) = gold {
            devs.push(f64::from(r.rating) - g);
        }
    }
    per_worker
        .into_iter()
        .map(|(worker_id, devs)| {
            if devs.is_empty() {
                return WorkerStats {
                    worker_id: worker_id.to_string(),
                    n_ratings: 0,
                    mean_abs_dev_from_song_mean: f64::NAN,
                    dev_std: f64::NAN,
                    banned: false,
                };
            }
            let n = devs.len();
            let mean_abs = devs.iter().map(|d| d.abs()).sum::<f64>() / n as f64;
            let std = population_variance(&devs).sqrt();
            WorkerStats {
                worker_id: worker_id.to_string(),
                n_ratings: n,
                mean_abs_dev_from_song_mean: mean_abs,
                dev_std: std,
                banned: mean_abs > dev_tolerance || std >= std_tolerance,
            }
        })
        .collect()
}

fn pearson_pair(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
        sxy += (x - mx) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Pairwise correlations between qualities over songs with complete vectors.
///
/// Needs at least three complete vectors. Each pair is computed once and
/// mirrored, so the matrix is exactly symmetric; the diagonal is 1. A quality
/// that is constant across the songs has no defined correlation with the
/// others; those entries are flagged rather than treated as an error.
pub fn correlation_matrix(
    vectors: &[MidLevelVector],
) -> Result<CorrelationMatrix, AnnotationError> {
    let complete: Vec<[f64; MidLevelName::COUNT]> =
        vectors.iter().filter_map(MidLevelVector::as_array).collect();
    if complete.len() < 3 {
        return Err(AnnotationError::TooFewSongs { have: complete.len(), need: 3 });
    }
    let columns: Vec<Vec<f64>> = (0..MidLevelName::COUNT)
        .map(|i| complete.iter().map(|v| v[i]).collect())
        .collect();
    let mut values = [[0.0; MidLevelName::COUNT]; MidLevelName::COUNT];
    let mut defined = [[false; MidLevelName::COUNT]; MidLevelName::COUNT];
    for i in 0..MidLevelName::COUNT {
        values[i][i] = 1.0;
        defined[i][i] = true;
        for j in (i + 1)..MidLevelName::COUNT {
            if let Some(r) = pearson_pair(&columns[i], &columns[j]) {
                values[i][j] = r;
                values[j][i] = r;
                defined[i][j] = true;
                defined[j][i] = true;
            }
        }
    }
    Ok(CorrelationMatrix { values, defined })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    use MidLevelName::{Dissonance, Melodiousness, Modality, TonalStability};

    fn cmp(worker: &str, feature: MidLevelName, a: &str, b: &str, winner: Winner) -> ComparisonRecord {
        ComparisonRecord {
            worker_id: worker.into(),
            feature,
            song_a: a.into(),
            song_b: b.into(),
            winner,
        }
    }

    fn rr(worker: &str, song: &str, feature: MidLevelName, rating: u8) -> RatingRecord {
        RatingRecord {
            worker_id: worker.into(),
            song_id: song.into(),
            feature,
            rating,
        }
    }

    fn desc_ranking(n: usize) -> Vec<(String, f64)> {
        (0..n)
            .map(|i| (format!("r{i:02}"), 1.0 - i as f64 / n as f64))
            .collect()
    }

    #[test]
    fn comparison_counts_for_full_coverage() {
        assert_eq!(comparisons_needed(0), 0);
        assert_eq!(comparisons_needed(1), 0);
        assert_eq!(comparisons_needed(2), 1);
        assert_eq!(comparisons_needed(100), 4950);
        assert_eq!(comparisons_needed(5000), 12_497_500);
    }

    #[test]
    fn win_rates_match_hand_counts() {
        let records = vec![
            cmp("w1", Dissonance, "song-a", "song-b", Winner::A),
            cmp("w1", Dissonance, "song-a", "song-c", Winner::A),
            cmp("w2", Dissonance, "song-c", "song-b", Winner::B),
        ];
        let ranking = win_rate_ranking(&records, Dissonance).unwrap();
        assert_eq!(
            ranking,
            vec![
                ("song-a".to_string(), 1.0),
                ("song-b".to_string(), 0.5),
                ("song-c".to_string(), 0.0),
            ]
        );
    }

    #[test]
    fn win_rate_ties_break_by_song_id() {
        let records = vec![
            cmp("w1", Modality, "zeta", "alpha", Winner::A),
            cmp("w2", Modality, "zeta", "alpha", Winner::B),
        ];
        let ranking = win_rate_ranking(&records, Modality).unwrap();
        assert_eq!(ranking[0], ("alpha".to_string(), 0.5));
        assert_eq!(ranking[1], ("zeta".to_string(), 0.5));
    }

    #[test]
    fn win_rate_empty_input_versus_empty_filter() {
        assert!(matches!(
            win_rate_ranking(&[], Dissonance),
            Err(AnnotationError::EmptyInput)
        ));
        let records = vec![cmp("w1", Dissonance, "a", "b", Winner::A)];
        let ranking = win_rate_ranking(&records, Modality).unwrap();
        assert!(ranking.is_empty());
    }

    #[test]
    fn anchor_scale_reverses_a_nine_song_ranking() {
        let scale = build_anchor_scale(&desc_ranking(9), Modality).unwrap();
        let expect: Vec<String> = (0..9).rev().map(|i| format!("r{i:02}")).collect();
        assert_eq!(scale.anchors.to_vec(), expect);
        assert_eq!(scale.feature, Modality);
    }

    #[test]
    fn anchor_scale_positions_for_seventeen_songs() {
        let scale = build_anchor_scale(&desc_ranking(17), Dissonance).unwrap();
        let expect: Vec<String> = (0..9).map(|j| format!("r{:02}", 16 - 2 * j)).collect();
        assert_eq!(scale.anchors.to_vec(), expect);
    }

    #[test]
    fn anchor_scale_positions_stay_distinct_above_nine_songs() {
        for n in 9..60 {
            let scale = build_anchor_scale(&desc_ranking(n), Dissonance).unwrap();
            let mut ids = scale.anchors.to_vec();
            ids.dedup();
            assert_eq!(ids.len(), 9, "duplicate anchor for n = {n}");
        }
    }

    #[test]
    fn anchor_scale_needs_nine_songs() {
        assert!(matches!(
            build_anchor_scale(&desc_ranking(8), Dissonance),
            Err(AnnotationError::TooFewSongs { have: 8, need: 9 })
        ));
    }

    #[test]
    fn aggregation_takes_means_and_marks_absent_features() {
        let records = vec![
            rr("w1", "s-b", Dissonance, 4),
            rr("w2", "s-b", Dissonance, 5),
            rr("w3", "s-b", Dissonance, 6),
            rr("w1", "s-b", Modality, 7),
            rr("w1", "s-a", Melodiousness, 9),
        ];
        let vectors = aggregate_ratings(&records);
        assert_eq!(vectors.len(), 2);
        assert_eq!(vectors[0].song_id, "s-a");
        assert_eq!(vectors[0].get(Melodiousness), Some(9.0));
        assert_eq!(vectors[0].n_ratings(Melodiousness), 1);
        assert_eq!(vectors[0].get(Dissonance), None);
        assert!(!vectors[0].is_complete());
        assert_eq!(vectors[1].song_id, "s-b");
        assert_eq!(vectors[1].get(Dissonance), Some(5.0));
        assert_eq!(vectors[1].n_ratings(Dissonance), 3);
        assert_eq!(vectors[1].get(Modality), Some(7.0));
        assert_eq!(vectors[1].get(TonalStability), None);
    }

    #[test]
    fn vector_rejects_off_scale_values() {
        let mut v = MidLevelVector::new("s");
        assert!(v.set(Dissonance, 0.5, 1).is_err());
        assert!(v.set(Dissonance, 9.1, 1).is_err());
        assert!(v.set(Dissonance, f64::NAN, 1).is_err());
        assert!(v.set(Dissonance, 5.0, 0).is_err());
        assert!(v.set(Dissonance, 5.0, 2).is_ok());
        assert!(MidLevelVector::from_values("s", [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 10.0]).is_err());
    }

    #[test]
    fn alpha_is_exactly_one_for_perfect_agreement() {
        let rows = vec![vec![1.0, 2.0, 3.0, 4.0]; 3];
        assert_eq!(cronbach_alpha(&rows).unwrap(), 1.0);
        let rows = vec![vec![1.37, 2.81, 6.055, 3.9]; 4];
        assert_eq!(cronbach_alpha(&rows).unwrap(), 1.0);
    }

    #[test]
    fn alpha_matches_hand_computed_fixture() {
        // Row variances 1.25 + 1.25 + 2.1875 = 75/16; per-item totals
        // [4, 8, 9, 14] have variance 203/16; alpha = 3/2 * (203 - 75) / 203.
        let rows = vec![
            vec![1.0, 2.0, 3.0, 4.0],
            vec![2.0, 3.0, 4.0, 5.0],
            vec![1.0, 3.0, 2.0, 5.0],
        ];
        let a = cronbach_alpha(&rows).unwrap();
        assert!((a - 0.945_812_807_881_773_4).abs() < 1e-12, "alpha = {a}");
    }

    #[test]
    fn alpha_near_zero_for_independent_raters() {
        let mut rng = ChaCha8Rng::seed_from_u64(903);
        let rows: Vec<Vec<f64>> = (0..5)
            .map(|_| (0..200).map(|_| f64::from(rng.random_range(1..=9u8))).collect())
            .collect();
        let a = cronbach_alpha(&rows).unwrap();
        assert!(a.abs() < 0.15, "alpha = {a}");
    }

    #[test]
    fn alpha_invariant_under_shift_and_positive_scale() {
        let base = vec![
            vec![1.0, 2.0, 3.0, 4.0],
            vec![2.0, 3.0, 4.0, 5.0],
            vec![1.0, 3.0, 2.0, 5.0],
        ];
        let a0 = cronbach_alpha(&base).unwrap();
        let shifted: Vec<Vec<f64>> = base
            .iter()
            .map(|r| r.iter().map(|x| x + 3.25).collect())
            .collect();
        let scaled: Vec<Vec<f64>> = base
            .iter()
            .map(|r| r.iter().map(|x| x * 2.5).collect())
            .collect();
        assert!((cronbach_alpha(&shifted).unwrap() - a0).abs() < 1e-12);
        assert!((cronbach_alpha(&scaled).unwrap() - a0).abs() < 1e-12);
    }

    #[test]
    fn alpha_rejects_malformed_matrices() {
        assert!(matches!(
            cronbach_alpha(&[vec![1.0, 2.0]]),
            Err(AnnotationError::IncompleteMatrix(_))
        ));
        assert!(matches!(
            cronbach_alpha(&[vec![1.0], vec![2.0]]),
            Err(AnnotationError::IncompleteMatrix(_))
        ));
        assert!(matches!(
            cronbach_alpha(&[vec![1.0, 2.0], vec![1.0, 2.0, 3.0]]),
            Err(AnnotationError::IncompleteMatrix(_))
        ));
        assert!(matches!(
            cronbach_alpha(&[vec![1.0, f64::NAN], vec![1.0, 2.0]]),
            Err(AnnotationError::IncompleteMatrix(_))
        ));
    }

    #[test]
    fn alpha_reports_degenerate_variance_instead_of_nan() {
        let rows = vec![vec![4.0, 4.0, 4.0]; 3];
        assert!(matches!(
            cronbach_alpha(&rows),
            Err(AnnotationError::DegenerateVariance(_))
        ));
        // Anti-correlated raters cancel in the totals: still degenerate.
        let rows = vec![vec![1.0, 2.0, 3.0], vec![3.0, 2.0, 1.0]];
        assert!(matches!(
            cronbach_alpha(&rows),
            Err(AnnotationError::DegenerateVariance(_))
        ));
    }

    #[test]
    fn pseudo_rater_matrix_deals_min_count_slots_over_sorted_songs() {
        let mut records = Vec::new();
        for (i, r) in [1u8, 2, 3, 4, 5, 6].iter().enumerate() {
            records.push(rr(&format!("w{i}"), "s-a", Dissonance, *r));
        }
        for (i, r) in [4u8, 5].iter().enumerate() {
            records.push(rr(&format!("x{i}"), "s-b", Dissonance, *r));
        }
        for (i, r) in [7u8, 8, 9].iter().enumerate() {
            records.push(rr(&format!("y{i}"), "s-c", Dissonance, *r));
        }
        records.push(rr("z0", "s-d", Dissonance, 3));
        records.push(rr("z0", "s-a", Modality, 9));

        let m = pseudo_rater_matrix(&records, Dissonance, 5, 7).unwrap();
        assert_eq!(m.len(), 2, "smallest eligible song has two ratings");
        assert!(m.iter().all(|row| row.len() == 3), "s-d has too few ratings");
        assert_eq!(m, pseudo_rater_matrix(&records, Dissonance, 5, 7).unwrap());
        for row in &m {
            assert!((1.0..=6.0).contains(&row[0]));
            assert!(row[1] == 4.0 || row[1] == 5.0);
            assert!((7.0..=9.0).contains(&row[2]));
        }
        for j in 0..3 {
            assert_ne!(m[0][j], m[1][j], "slots sample without replacement");
        }
    }

    #[test]
    fn pseudo_rater_matrix_feeds_alpha_for_perfect_crowd() {
        let mut records = Vec::new();
        for w in 0..3 {
            for (song, rating) in [("s-a", 2u8), ("s-b", 5), ("s-c", 8)] {
                records.push(rr(&format!("w{w}"), song, Dissonance, rating));
            }
        }
        let m = pseudo_rater_matrix(&records, Dissonance, 5, 1).unwrap();
        assert_eq!(m.len(), 3);
        assert_eq!(cronbach_alpha(&m).unwrap(), 1.0);
    }

    #[test]
    fn pseudo_rater_matrix_rejects_thin_input() {
        assert!(matches!(
            pseudo_rater_matrix(&[], Dissonance, 5, 0),
            Err(AnnotationError::EmptyInput)
        ));
        let singles = vec![rr("w1", "s-a", Dissonance, 3), rr("w2", "s-b", Dissonance, 4)];
        assert!(matches!(
            pseudo_rater_matrix(&singles, Dissonance, 5, 0),
            Err(AnnotationError::TooFewSongs { have: 0, need: 2 })
        ));
        let pair = vec![
            rr("w1", "s-a", Dissonance, 3),
            rr("w2", "s-a", Dissonance, 4),
            rr("w1", "s-b", Dissonance, 5),
            rr("w2", "s-b", Dissonance, 6),
        ];
        assert!(matches!(
            pseudo_rater_matrix(&pair, Dissonance, 1, 0),
            Err(AnnotationError::IncompleteMatrix(_))
        ));
    }

    /// Golden means on integer steps 1..=8 so an off-by-one worker stays on
    /// the scale.
    fn golden_grid() -> Vec<MidLevelVector> {
        (0..40)
            .map(|i| {
                let mut v = MidLevelVector::new(format!("s{i:02}"));
                for (fi, f) in MidLevelName::ALL.iter().enumerate() {
                    let mean = ((i * 7 + fi * 3) % 8 + 1) as f64;
                    v.set(*f, mean, 2).unwrap();
                }
                v
            })
            .collect()
    }

    #[test]
    fn echo_and_offset_workers_survive_screening() {
        let golden = golden_grid();
        let mut records = Vec::new();
        for v in &golden {
            for f in MidLevelName::ALL {
                let g = v.get(f).unwrap() as u8;
                records.push(rr("w-echo", &v.song_id, f, g));
                records.push(rr("w-offset", &v.song_id, f, g + 1));
            }
        }
        let stats = screen_workers(&records, &golden, DEFAULT_DEV_TOLERANCE, DEFAULT_STD_TOLERANCE);
        assert_eq!(stats.len(), 2);
        assert_eq!(stats[0].worker_id, "w-echo");
        assert_eq!(stats[0].n_ratings, 280);
        assert_eq!(stats[0].mean_abs_dev_from_song_mean, 0.0);
        assert_eq!(stats[0].dev_std, 0.0);
        assert!(!stats[0].banned);
        assert_eq!(stats[1].worker_id, "w-offset");
        assert_eq!(stats[1].mean_abs_dev_from_song_mean, 1.0);
        assert_eq!(stats[1].dev_std, 0.0);
        assert!(!stats[1].banned, "consistent bias is not random guessing");
    }

    #[test]
    fn random_guesser_gets_banned() {
        let golden: Vec<MidLevelVector> = (0..100)
            .map(|i| {
                let mut v = MidLevelVector::new(format!("g{i:03}"));
                v.set(Dissonance, 5.0, 3).unwrap();
                v
            })
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let records: Vec<RatingRecord> = (0..100)
            .map(|i| rr("w-random", &format!("g{i:03}"), Dissonance, rng.random_range(1..=9)))
            .collect();
        let stats = screen_workers(&records, &golden, DEFAULT_DEV_TOLERANCE, DEFAULT_STD_TOLERANCE);
        assert_eq!(stats[0].n_ratings, 100);
        assert!(
            stats[0].banned,
            "uniform guesses have dev std near 2.58: stats = {:?}",
            stats[0]
        );
    }

    #[test]
    fn workers_without_golden_overlap_stay_unevaluated() {
        let golden = vec![{
            let mut v = MidLevelVector::new("g-a");
            v.set(Dissonance, 5.0, 3).unwrap();
            v
        }];
        let records = vec![
            rr("w-ghost", "unknown-song", Dissonance, 9),
            rr("w-wrong-feature", "g-a", Modality, 9),
        ];
        let stats = screen_workers(&records, &golden, DEFAULT_DEV_TOLERANCE, DEFAULT_STD_TOLERANCE);
        assert_eq!(stats.len(), 2);
        for s in &stats {
            assert_eq!(s.n_ratings, 0);
            assert!(s.mean_abs_dev_from_song_mean.is_nan());
            assert!(s.dev_std.is_nan());
            assert!(!s.banned);
        }
    }

    #[test]
    fn correlations_match_hand_built_relations() {
        let arti = [3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0, 5.0, 3.0];
        let rs = [2.0, 7.0, 1.0, 8.0, 2.0, 8.0, 1.0, 8.0, 2.0, 8.0];
        let vectors: Vec<MidLevelVector> = (0..10)
            .map(|i| {
                let mel = 1.0 + i as f64 * 8.0 / 9.0;
                let rc = 5.0 + 3.0 * ((i % 3) as f64 - 1.0);
                MidLevelVector::from_values(
                    format!("t{i}"),
                    [mel, arti[i], rs[i], rc, 10.0 - mel, 5.0, mel],
                )
                .unwrap()
            })
            .collect();
        let m = correlation_matrix(&vectors).unwrap();
        let mel = Melodiousness.index();
        let moda = Modality.index();
        let dis = Dissonance.index();
        let ton = TonalStability.index();
        assert!((m.values[mel][moda] - 1.0).abs() < 1e-12);
        assert!((m.values[mel][dis] + 1.0).abs() < 1e-12);
        assert!(!m.defined[mel][ton], "constant quality is flagged, not an error");
        assert_eq!(m.values[mel][ton], 0.0);
        assert_eq!(m.get(Melodiousness, TonalStability), None);
        assert_eq!(
            m.get(Melodiousness, Dissonance),
            Some(m.values[mel][dis])
        );
        for i in 0..MidLevelName::COUNT {
            assert_eq!(m.values[i][i], 1.0);
            assert!(m.defined[i][i]);
            for j in 0..MidLevelName::COUNT {
                assert_eq!(m.values[i][j], m.values[j][i], "exact symmetry");
                assert_eq!(m.defined[i][j], m.defined[j][i]);
            }
        }
    }

    #[test]
    fn correlations_need_three_complete_vectors() {
        let mut vectors = vec![
            MidLevelVector::from_values("a", [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]).unwrap(),
            MidLevelVector::from_values("b", [2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]).unwrap(),
        ];
        let mut partial = MidLevelVector::new("c");
        partial.set(Dissonance, 5.0, 1).unwrap();
        vectors.push(partial);
        assert!(matches!(
            correlation_matrix(&vectors),
            Err(AnnotationError::TooFewSongs { have: 2, need: 3 })
        ));
    }
}
