use std::path::PathBuf;

/// Errors produced by the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("unsupported constellation size {0}")]
    UnsupportedOrder(usize),

    #[error("constellation: {0}")]
    Constellation(String),

    #[error("bit vector length {len} is not a multiple of {m}")]
    LengthMismatch { len: usize, m: usize },

    #[error("SNR must be positive, got {0}")]
    NonPositiveSnr(f64),

    #[error("empty frame")]
    EmptyFrame,

    #[error("frame contains non-binary bit value {0}")]
    NonBinaryBit(u8),

    #[error("sample count {got} is below the minimum of {min}")]
    TooFewSamples { got: usize, min: usize },

    #[error("histogram needs at least 2 bins, got {0}")]
    TooFewBins(usize),

    #[error("degenerate L-value distribution: {0}")]
    DegeneratePdf(String),

    #[error("alist: {0}")]
    Alist(String),

    #[error("parity-check matrix is rank deficient (rank {rank} < {rows} rows)")]
    RankDeficient { rank: usize, rows: usize },

    #[error("expected {expected} input values, got {got}")]
    InputLength { expected: usize, got: usize },

    #[error("unsupported turbo code rate {0}")]
    UnsupportedRate(String),

    #[error("puncture pattern: {0}")]
    PuncturePattern(String),

    #[error("fiber parameters: {0}")]
    FiberParams(String),

    #[error("WDM grid spans ±{grid_hz:.3e} Hz but the simulation bandwidth is ±{nyquist_hz:.3e} Hz")]
    GridTooWide { grid_hz: f64, nyquist_hz: f64 },

    #[error("split-step propagation produced non-finite samples at step {0}")]
    Unstable(usize),

    #[error("degenerate SNR estimate: error power is zero")]
    DegenerateSnr,

    #[error("sweep spec: {0}")]
    SweepSpec(String),

    #[error("frame length {n_code} is not divisible by {m} bits per symbol")]
    CodecMismatch { n_code: usize, m: usize },

    #[error("csv schema mismatch: {0}")]
    Schema(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("plot: {0}")]
    Plot(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
