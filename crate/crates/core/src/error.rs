use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("file not found: {}", .0.display())]
    FileNotFound(PathBuf),

    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),

    #[error("corrupt file: {0}")]
    CorruptFile(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("patch center ({row}, {col}) outside {width}x{height} image")]
    CenterOutOfBounds {
        row: usize,
        col: usize,
        width: usize,
        height: usize,
    },

    #[error("pixel ({row}, {col}) outside {width}x{height} image")]
    OutOfBounds {
        row: usize,
        col: usize,
        width: usize,
        height: usize,
    },

    #[error("side length must be odd and positive, got {0}")]
    EvenSide(usize),

    #[error("kernel standard deviation must be positive and finite, got {0}")]
    NonPositiveRho(f64),

    #[error("patch sides differ: {0} vs {1}")]
    SideMismatch(usize, usize),

    #[error("image dimensions differ: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),

    #[error("image {width}x{height} smaller than {window}x{window} window")]
    ImageTooSmall {
        width: usize,
        height: usize,
        window: usize,
    },

    #[error("degenerate normalizer in modified-kernel distance: {0}")]
    DegenerateDenominator(f64),

    #[error("invalid filter parameters: {0}")]
    InvalidParams(String),

    #[error("noise level must lie in (0, 1], got {0}")]
    InvalidNoiseLevel(f64),
}

impl Error {
    /// Stable identifier used in machine-readable error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::FileNotFound(_) => "FileNotFound",
            Error::UnsupportedFormat(_) => "UnsupportedFormat",
            Error::CorruptFile(_) => "CorruptFile",
            Error::Io(_) => "IoError",
            Error::InvalidImage(_) => "InvalidImage",
            Error::CenterOutOfBounds { .. } => "CenterOutOfBounds",
            Error::OutOfBounds { .. } => "OutOfBounds",
            Error::EvenSide(_) => "EvenSide",
            Error::NonPositiveRho(_) => "NonPositiveRho",
            Error::SideMismatch(..) => "SideMismatch",
            Error::DimensionMismatch(..) => "DimensionMismatch",
            Error::ImageTooSmall { .. } => "ImageTooSmall",
            Error::DegenerateDenominator(_) => "DegenerateDenominator",
            Error::InvalidParams(_) => "InvalidParams",
            Error::InvalidNoiseLevel(_) => "InvalidNoiseLevel",
        }
    }
}
