use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid generator parameters: {0}")]
    InvalidParams(String),

    #[error("seed {seed} out of range for modulus 2^{bits}")]
    SeedOutOfRange { seed: u64, bits: u32 },

    #[error("stream index must be >= 1 (got 0)")]
    ZeroStreamIndex,

    #[error("term index {i} outside 1..={d}")]
    TermIndexOutOfRange { i: u64, d: u64 },

    #[error("sample index {j} outside 1..={n}")]
    SampleIndexOutOfRange { j: u64, n: u64 },

    #[error("n_dig ({n_dig}) exceeds word width n_PRN ({n_prn})")]
    DigitsExceedWord { n_dig: u32, n_prn: u32 },

    #[error("word {word} does not fit in {bits} bits")]
    WordOutOfRange { word: u64, bits: u32 },

    #[error("probability {0} outside the open interval (0, 1)")]
    ProbabilityOutOfRange(f64),

    #[error("amplitude {0} outside [0, 1]")]
    AmplitudeOutOfRange(f64),

    #[error("{what} returned {value}, outside [0, 1]")]
    NotAmplitudeEncodable { what: &'static str, value: f64 },

    #[error("invalid run configuration: {0}")]
    InvalidRunConfig(String),

    #[error("error bound unavailable: {0}")]
    BoundUnavailable(String),

    #[error("invalid portfolio: {0}")]
    InvalidPortfolio(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("invalid risk measure: {0}")]
    InvalidMeasure(String),

    #[error("empty tail: no sample loss exceeds {0}")]
    EmptyTail(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
