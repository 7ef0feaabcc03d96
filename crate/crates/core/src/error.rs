use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("ring size mismatch: {left} vs {right}")]
    Dimension { left: usize, right: usize },

    #[error("{what} {value} out of range [0, {bound})")]
    OutOfRange {
        what: &'static str,
        value: usize,
        bound: usize,
    },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("invalid support: {0}")]
    Support(String),

    #[error("near-codewords {first} and {second} share the same syndrome (degenerate key)")]
    DuplicateSyndrome { first: usize, second: usize },

    #[error("counters are all zero with a nonzero syndrome")]
    Stalled,

    #[error("no ({t}, {u})-almost near-codeword accepted after {attempts} attempts (acceptance rate {rate:.3e})")]
    SamplerExhausted {
        t: usize,
        u: usize,
        attempts: usize,
        rate: f64,
    },

    #[error("zero error vector has no intersection profile")]
    EmptyProfile,

    #[error(
        "decoder reported success but its estimate does not reproduce the syndrome (trial {trial})"
    )]
    InconsistentSuccess { trial: u64 },

    #[error("table file: {0}")]
    TableFormat(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
