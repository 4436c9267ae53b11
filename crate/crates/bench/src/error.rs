use thiserror::Error;

pub type Result<T> = std::result::Result<T, BenchError>;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Core(#[from] nlm_core::Error),

    #[error("config: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error(
        "noisy input mismatch for {image} at level {level}: filters consumed different images"
    )]
    NoisyMismatch { image: String, level: f64 },
}

impl BenchError {
    pub fn kind(&self) -> &'static str {
        match self {
            BenchError::Core(e) => e.kind(),
            BenchError::Config(_) => "ConfigError",
            BenchError::Io(_) => "IoError",
            BenchError::Csv(_) => "IoError",
            BenchError::NoisyMismatch { .. } => "NoisyMismatch",
        }
    }
}
