use thiserror::Error;

/// Errors raised by codecs, parameter constructors, and experiments.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid symbol {symbol:?} at position {position} (alphabet size {alphabet})")]
    InvalidSymbol {
        symbol: char,
        position: usize,
        alphabet: u8,
    },

    /// The code ran out before the requested depth was resolved. `needed` is a
    /// lower bound on the number of further symbols required.
    #[error("code exhausted at level {level}: at least {needed} more symbol(s) required")]
    CodeTooShort { level: usize, needed: usize },

    #[error("node {node:?} has no child below depth {depth}")]
    DeadEndPresent { node: String, depth: usize },

    #[error("level {level} exceeds tree depth {depth}")]
    LevelOutOfRange { level: usize, depth: usize },

    #[error("depth {0} exceeds the supported maximum of 63 levels")]
    DepthTooLarge(usize),

    #[error("invalid tree: {0}")]
    InvalidTree(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid survival pair (beta0={beta0}, beta1={beta1}): {reason}")]
    InvalidSurvival { beta0: f64, beta1: f64, reason: String },

    #[error("degenerate offspring law: a2 = 0")]
    DegenerateLaw,

    #[error("offspring law is not supercritical (a2={a2} <= a3={a3})")]
    SubcriticalLaw { a2: f64, a3: f64 },

    #[error("node budget of {budget} exceeded at level {level}")]
    BudgetExceeded { level: usize, budget: usize },

    #[error("tree is extinct: no node reaches level {horizon}")]
    Extinct { horizon: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("input too short: {len} symbols, at least {min} required")]
    InputTooShort { len: usize, min: usize },

    #[error("only {survivors} surviving trials, at least {min} required")]
    InsufficientSurvivors { survivors: u64, min: u64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
