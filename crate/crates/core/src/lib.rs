//! Mid-level perceptual music feature toolkit.
//!
//! The crate is organized around a deterministic signal-processing frontend
//! ([`audio`]), hand-crafted perceptual descriptors ([`features`]), annotation
//! mathematics for pairwise comparison and rating campaigns ([`annotation`]),
//! classical statistics and shallow models ([`stats`]), a from-scratch
//! toy-scale neural stack ([`nn`]), and dataset ingestion/serialization
//! ([`dataset`]).
//!
//! Everything is pure and seeded: identical inputs and seeds produce
//! bit-identical outputs.

pub mod annotation;
pub mod audio;
pub mod dataset;
pub mod features;
pub mod nn;
pub mod stats;

pub use annotation::{
    aggregate_ratings, build_anchor_scale, comparisons_needed, correlation_matrix, cronbach_alpha,
    pseudo_rater_matrix, screen_workers, win_rate_ranking, AnchorScale, AnnotationError,
    ComparisonRecord, CorrelationMatrix, MidLevelVector, RatingRecord, Winner, WorkerStats,
};
pub use audio::{
    chroma, crop_patch, load_wav, mel_spectrogram, onset_envelope, spectral_peaks, stft_magnitude,
    AudioClip, AudioError, ChromaGram, CropOffset, MagnitudeSpectrogram, MelPatch, MelSpectrogram,
    OnsetEnvelope, SpectralPeak, SpectralPeakList, DEFAULT_FMAX, DEFAULT_HOP, DEFAULT_N_MELS,
    DEFAULT_WINDOW, PATCH_SIZE, TARGET_SAMPLE_RATE,
};
pub use dataset::{
    fetch_archive, load_annotations, load_cluster_labels, load_comparisons, load_emotion_targets,
    load_handcrafted, load_song_manifest, load_tag_assignments, write_features, Annotations,
    DatasetError, EmotionTargetTable, FeatureRecords, FeatureRow, Loaded, OutputFormat, RowIssue,
    RowProblem, SongManifestEntry, SongSource, TagManifest, DEFAULT_DATASET_URL,
    EMOTION_DIMENSIONS,
};
pub use features::{
    attack_leap, dissonance_pair, extract_all, hcdf, inharmonicity, inharmonicity_frame,
    majorness, pulse_clarity, pulse_clarity_with_lag, sensory_dissonance, FeatureError,
    HandcraftedFeatures, MidLevelName,
};
pub use nn::{
    finetune, gradient_check, load_checkpoint, metrics_csv, save_checkpoint,
    synthetic_midlevel_data, synthetic_tag_data, train_midlevel, train_tags, AdamState,
    EpochMetric, FinetuneReport, ForwardCache, Grads, Head, InceptionSpec, Network, NetworkSpec,
    NnError, Node, Tensor, TrainConfig, TrainReport,
};
pub use stats::{
    emotion_report, f1_weighted, fit_kernel_rbf, fit_linear, fit_ovr_classifier, grouped_split,
    kfold, pca_apply, pca_fit, pearson, predict_kernel, predict_linear, roc_auc, scores,
    tune_kernel_rbf, DesignMatrix, EmotionDimensionReport, EmotionReport, FoldAssignment,
    GroupedSplit, KernelModel, LinearModel, OvrClassifier, PcaTransform, StatsError,
    MIN_EMOTION_OVERLAP,
};
