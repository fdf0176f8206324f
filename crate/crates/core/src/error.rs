use alloc::string::String;

/// Errors raised by the core toolkit.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid distribution spec: {0}")]
    InvalidSpec(String),
    #[error("unknown distribution family `{0}`")]
    UnknownFamily(String),
    #[error("empty support after clipping to [{min}, {max}]")]
    EmptySupport { min: f64, max: f64 },
    #[error("distribution has no support")]
    EmptyPmf,
    #[error("invalid ensemble weights: {0}")]
    InvalidWeights(String),
    #[error("invalid node distribution: {0}")]
    InvalidNodeDist(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("sample cap of {cap} exceeded before reaching distance {threshold} (last distance {last_distance})")]
    SampleCapExceeded {
        cap: u64,
        threshold: f64,
        last_distance: f64,
    },
    #[error("negative inter-arrival time {value} at index {index}")]
    NegativeInterarrival { index: usize, value: f64 },
    #[error("trace duration is zero")]
    ZeroDuration,
    #[error("cannot pack flow {index} ({size} B): every endpoint pair would exceed port capacity; lower the target load")]
    PackingInfeasible { index: usize, size: u64 },
    #[error("unknown endpoint {0}")]
    UnknownEndpoint(u32),
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("empty input")]
    EmptyInput,
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
