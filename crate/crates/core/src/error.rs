use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("sample count {actual} does not match {width}x{height}")]
    SampleCount {
        width: usize,
        height: usize,
        actual: usize,
    },
    #[error("plane dimensions must be positive, got {width}x{height}")]
    EmptyPlane { width: usize, height: usize },
    #[error("non-finite sample {value} at pixel index {index}")]
    NonFinite { index: usize, value: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("{axis} dimension {size} is odd; one Haar level needs even sizes")]
    OddDimension { axis: &'static str, size: usize },
    #[error("volume has no bands")]
    EmptyVolume,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("shift s={s} exceeds the subpixel range of h={h}; decompose the shift first")]
    ShiftOutOfRange { h: u32, s: i64 },
    #[error("negative sample {value} at pixel index {index} in band {band}")]
    NegativeSample {
        band: usize,
        index: usize,
        value: f64,
    },
    #[error("plane is constant; nothing to register")]
    ConstantPlane,
    #[error("need {required} shifted frames, got {actual}")]
    TooFewFrames { required: usize, actual: usize },
    #[error("degenerate shift set, system is rank deficient (smallest singular value {smallest_singular:.3e})")]
    RankDeficient { smallest_singular: f64 },
    #[error("reconstruction diverged at iteration {iteration}")]
    Diverged { iteration: usize },
    #[error("invalid registration parameters: {0}")]
    InvalidParams(String),
    #[error("bundle manifest {path}: {message}")]
    Manifest { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
