use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("alphabet size must be at least 2, got {0}")]
    AlphabetTooSmall(usize),
    #[error("support must be nonempty")]
    EmptySupport,
    #[error("duplicate index {0} in support")]
    DuplicateIndex(i64),
    #[error("support mismatch")]
    SupportMismatch,
    #[error("support out of range")]
    SupportOutOfRange,
    #[error("word has {symbols} symbols but support has {support} indices")]
    LengthMismatch { symbols: usize, support: usize },
    #[error("symbol {symbol} outside alphabet of size {size}")]
    SymbolOutOfAlphabet { symbol: usize, size: usize },
    #[error("alphabet mismatch: expected {expected}, got {got}")]
    AlphabetMismatch { expected: usize, got: usize },
    #[error("invalid probability vector: {0}")]
    InvalidProbability(String),
    #[error("parameter out of range: {0}")]
    OutOfRange(String),
    #[error("block length exceeds enumeration budget ({blocks} blocks > {budget})")]
    BudgetExceeded { blocks: u128, budget: u128 },
    #[error("window mismatch")]
    WindowMismatch,
    #[error("shift out of range")]
    ShiftOutOfRange,
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("simplex iteration limit reached")]
    IterationLimit,
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
