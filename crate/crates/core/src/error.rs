//! Crate-wide error type.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    // dataset
    #[error("empty text cannot be rendered")]
    EmptyText,
    #[error("unknown render style {0:?}")]
    UnknownStyle(String),
    #[error("character {ch:?} is not supported by style {style:?}")]
    UnsupportedChar { ch: char, style: String },
    #[error("zero-area image")]
    ZeroAreaImage,
    #[error("manifest {path}: line {line}: {msg}")]
    Manifest { path: PathBuf, line: usize, msg: String },
    #[error("duplicate line id {0:?}")]
    DuplicateId(String),
    #[error("image file {0} is missing or unreadable")]
    MissingImage(PathBuf),
    #[error("subset size {requested} exceeds corpus size {available}")]
    SubsetTooLarge { requested: usize, available: usize },
    #[error("character {0:?} is not in the charset")]
    CharsetMiss(char),

    // augment
    #[error("crop width {0} is not a multiple of 8")]
    CropNotFrameAligned(usize),
    #[error("image width {0} is too short for a view pair (needs >= 16)")]
    LineTooShort(usize),

    // backbone / nn
    #[error("expected image height {expected}, got {got}")]
    WrongHeight { expected: usize, got: usize },
    #[error("positional encoding dimension {0} must be even")]
    OddPeDim(usize),
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("checkpoint {path}: {msg}")]
    Checkpoint { path: PathBuf, msg: String },

    // labelgen
    #[error("feature store is empty")]
    EmptyFeatureStore,
    #[error("k={k} exceeds sample size {n}")]
    KTooLarge { k: usize, n: usize },
    #[error("codebook is empty")]
    EmptyCodebook,
    #[error("labels for line {id:?} have length {got}, expected {expected} frames")]
    LabelMisaligned { id: String, got: usize, expected: usize },
    #[error("missing asset for label method {method}: {what}")]
    MissingAsset { method: String, what: String },
    #[error("training diverged at iteration {iteration} (loss is not finite)")]
    Diverged { iteration: usize },

    // pretrain
    #[error("masking probability {0} outside [0, 1]")]
    BadMaskProb(f64),
    #[error("top-k error over an empty set is undefined")]
    EmptyTopK,
    #[error("joint-embedding batch needs at least 2 paired frames, got {0}")]
    TooFewPairs(usize),
    #[error("view pair has an empty overlap")]
    EmptyOverlap,
    #[error("zero-norm embedding cannot be l2-normalized")]
    ZeroNormEmbedding,
    #[error("collapse probe needs at least 2 distinct lines")]
    TooFewProbeLines,

    // ocr
    #[error("transcription of length {target} is infeasible for {frames} frames")]
    CtcInfeasible { target: usize, frames: usize },
    #[error("reference string is empty")]
    EmptyReference,
    #[error("corpus {0:?} has no annotated lines")]
    NoAnnotations(String),

    // viz
    #[error("query trigram at position {pos} is out of bounds for {len} labels")]
    TrigramOutOfBounds { pos: usize, len: usize },
    #[error("requested {requested} neighbors but only {available} frames exist")]
    TooFewFrames { requested: usize, available: usize },

    // schedule / experiment
    #[error("unknown schedule phase {0:?}")]
    UnknownPhase(String),
    #[error("config: {0}")]
    Config(String),
    #[error("experiment stage {stage:?} failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("image codec: {0}")]
    Image(#[from] image::ImageError),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("toml: {0}")]
    Toml(#[from] toml::de::Error),
}

impl Error {
    /// Wrap a stage failure with the stage name, preserving the cause.
    pub fn in_stage(self, stage: &str) -> Error {
        Error::Stage { stage: stage.to_string(), source: Box::new(self) }
    }
}
