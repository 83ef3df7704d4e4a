use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("symbol {symbol} is out of range for alphabet of size {alphabet_size}")]
    SymbolOutOfRange { symbol: u32, alphabet_size: usize },

    #[error("state {state} is out of range for {num_states} states")]
    StateOutOfRange { state: usize, num_states: usize },

    #[error("automaton is invalid: {0}")]
    InvalidAutomaton(String),

    #[error("I - M is singular or ill-conditioned (residual {residual:.3e}); the automaton has infinite expected length")]
    SingularSystem { residual: f64 },

    #[error("prefix has zero probability mass")]
    ZeroMassPrefix,

    #[error("infix has zero weight")]
    ZeroMassInfix,

    #[error("operation requires a deterministic automaton")]
    NondeterministicUnsupported,

    #[error("enumerating {required} contexts exceeds the budget of {budget}")]
    BudgetExceeded { required: u128, budget: u128 },

    #[error("every context of length {context_length} has zero weight")]
    ZeroTotalMass { context_length: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("sampled string exceeded the length cap of {cap}")]
    SampleLengthCapExceeded { cap: usize },

    #[error("requested split sizes total {requested} but the corpus has {available} strings")]
    SizesExceedCorpus { requested: usize, available: usize },

    #[error("window size must be at least 2, got {0}")]
    InvalidWindowSize(usize),

    #[error("corpus has no countable windows")]
    EmptyCorpusWindows,

    #[error("model assigned zero probability to an observed event")]
    ZeroProbabilityEvent,

    #[error("context of length {context_length} cannot be packed for alphabet of size {alphabet_size}")]
    ContextTooLong { context_length: usize, alphabet_size: usize },

    #[error("degenerate input: {0}")]
    DegenerateInput(&'static str),

    #[error("unsupported format version {found} (expected {expected})")]
    UnsupportedVersion { found: u32, expected: u32 },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
