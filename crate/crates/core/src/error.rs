use thiserror::Error;

use crate::symbolic::Word;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("partition resolution must be at least 1")]
    InvalidResolution,

    #[error("value {value} lies outside [0, 1]")]
    OutOfRange { value: String },

    #[error("sample {index} = {value} lies outside [0, 1]")]
    SampleOutOfRange { index: usize, value: f64 },

    #[error("words must have length at least 1")]
    EmptyWord,

    #[error("symbol index {index} is not below the resolution {m}")]
    SymbolOutOfRange { index: usize, m: usize },

    #[error("resolution mismatch: expected m = {expected}, found m = {found}")]
    ResolutionMismatch { expected: usize, found: usize },

    #[error("word length mismatch: expected n = {expected}, found n = {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("{m}^{n} cells exceed the supported table size")]
    TooManyCells { m: usize, n: usize },

    #[error("invalid word measure: {0}")]
    InvalidMeasure(String),

    #[error("invalid Markov specification: {0}")]
    InvalidMarkov(String),

    #[error(
        "stationary vector is not fixed by the transition matrix (first mismatch at state {state})"
    )]
    NotStationary { state: usize },

    #[error("observable depth {depth} exceeds the measure's word length {n}")]
    InsufficientDepth { depth: usize, n: usize },

    #[error("invalid observable: {0}")]
    InvalidObservable(String),

    #[error("trajectory of length {len} is shorter than the window length {n}")]
    TrajectoryTooShort { len: usize, n: usize },

    #[error("measure is not shift-balanced (max imbalance {imbalance})")]
    Unbalanced { imbalance: String },

    #[error(
        "denominator N = {denominator} is too small for delta = {delta} ({reason}); try a larger N"
    )]
    DenominatorTooSmall {
        denominator: u64,
        delta: String,
        reason: String,
    },

    #[error("positive support of the de Bruijn graph has {} components: {components:?}", components.len())]
    Disconnected { components: Vec<Vec<Word>> },

    #[error("de Bruijn graph is not balanced at vertex {vertex}")]
    GraphUnbalanced { vertex: usize },

    #[error("word sequence violates the overlap condition between positions {position} and {}", position + 1)]
    MalformedSequence { position: usize },

    #[error("word sequence is not cyclically closed")]
    NotClosed,

    #[error("empty word sequence")]
    EmptySequence,

    #[error("invalid observable bound: {0}")]
    InvalidBound(String),

    #[error("callback observable declares no oscillation sequence")]
    MissingModulus,

    #[error("arity mismatch: expected {expected} entries, found {found}")]
    Arity { expected: usize, found: usize },

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("schedule arithmetic overflowed at level {level}")]
    ScheduleOverflow { level: usize },

    #[error("not enough levels to certify epsilon; best certifiable epsilon is {best_epsilon}")]
    InsufficientLevels { best_epsilon: f64 },

    #[error("empty segment [{start}, {end})")]
    EmptySegment { start: usize, end: usize },

    #[error("position {x} is outside the cycle of length {k}")]
    PositionOutOfRange { x: usize, k: usize },

    #[error("position {position} admits no stopping time below k")]
    NoCover { position: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
