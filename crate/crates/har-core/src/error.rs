//! Crate-wide error type.

use std::path::PathBuf;

/// Errors produced by the pipeline, grouped so callers can map them to
/// exit codes: usage/configuration problems, data problems, and numerical
/// failures.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at {path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("unknown activity name {name:?} at {path}:{line}")]
    UnknownActivity {
        path: PathBuf,
        line: u64,
        name: String,
    },

    #[error("duplicate sample for subject {subject} activity {activity} ordinal {ordinal} at line {line}")]
    DuplicateSample {
        subject: u32,
        activity: String,
        ordinal: u64,
        line: u64,
    },

    #[error("non-monotonic ordinal for subject {subject} activity {activity} at line {line}: {ordinal} after {previous}")]
    NonMonotonicOrdinal {
        subject: u32,
        activity: String,
        ordinal: u64,
        previous: u64,
        line: u64,
    },

    #[error("duplicate recording for subject {subject}, activity {activity}")]
    DuplicateRecording { subject: u32, activity: String },

    #[error("unknown subject id {0}")]
    UnknownSubject(u32),

    #[error("subject filter would produce an empty dataset")]
    EmptySubjectFilter,

    #[error("cutoff {cutoff_hz} Hz is not below the Nyquist frequency {nyquist_hz} Hz")]
    CutoffAboveNyquist { cutoff_hz: f64, nyquist_hz: f64 },

    #[error("decimation ratio {ratio} from {from_hz} Hz to {to_hz} Hz is not an integer")]
    NonIntegerDecimation {
        from_hz: f64,
        to_hz: f64,
        ratio: f64,
    },

    #[error("cannot extract features from an empty window")]
    EmptyWindow,

    #[error("class {class} has no training samples")]
    EmptyClass { class: usize },

    #[error("training set contains a single class; at least two are required")]
    SingleClass,

    #[error("n_neighbors ({k}) exceeds the number of training samples ({n})")]
    TooFewSamples { k: usize, n: usize },

    #[error("feature dimension mismatch: model expects {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("SVM solver did not converge within {cap} iterations (KKT gap {gap:.3e})")]
    SvmNonConvergence { cap: usize, gap: f64 },

    #[error("length mismatch: {left} predictions vs {right} truth labels")]
    LengthMismatch { left: usize, right: usize },

    #[error("metric input is empty")]
    EmptyMetricInput,

    #[error("AUC undefined: truth labels contain a single class")]
    SingleClassTruth,

    #[error("at least two subjects are required for leave-one-subject-out folds, got {0}")]
    TooFewSubjects(usize),

    #[error("AUC undefined for held-out subject {subject}: its windows carry a single class")]
    FoldAucUndefined { subject: u32 },

    #[error("unknown parameter {name:?} for algorithm {algorithm}")]
    UnknownParameter { algorithm: String, name: String },

    #[error("invalid value for parameter {name:?}: {message}")]
    InvalidParameterValue { name: String, message: String },

    #[error("grid cell {combination} failed: {source}")]
    GridCellFailed {
        combination: String,
        #[source]
        source: Box<Error>,
    },

    #[error("cell {algorithm}/{representation} fold {subject} failed: {source}")]
    CellFailed {
        algorithm: String,
        representation: String,
        subject: u32,
        #[source]
        source: Box<Error>,
    },

    #[error("unsupported model file: {0}")]
    ModelFormat(String),

    #[error("serialization error: {0}")]
    Serialize(String),
}

impl Error {
    /// True for errors caused by malformed, missing, or unusable input data.
    pub fn is_data_error(&self) -> bool {
        match self {
            Error::Io { .. }
            | Error::Parse { .. }
            | Error::UnknownActivity { .. }
            | Error::DuplicateSample { .. }
            | Error::NonMonotonicOrdinal { .. }
            | Error::DuplicateRecording { .. }
            | Error::UnknownSubject(_)
            | Error::EmptySubjectFilter
            | Error::EmptyClass { .. }
            | Error::SingleClass
            | Error::TooFewSamples { .. }
            | Error::DimensionMismatch { .. }
            | Error::TooFewSubjects(_)
            | Error::FoldAucUndefined { .. }
            | Error::SingleClassTruth
            | Error::ModelFormat(_) => true,
            Error::GridCellFailed { source, .. } | Error::CellFailed { source, .. } => {
                source.is_data_error()
            }
            _ => false,
        }
    }

    /// True for numerical failures such as solver non-convergence.
    pub fn is_numerical_error(&self) -> bool {
        match self {
            Error::SvmNonConvergence { .. } => true,
            Error::GridCellFailed { source, .. } | Error::CellFailed { source, .. } => {
                source.is_numerical_error()
            }
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
