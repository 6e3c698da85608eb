use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("ground set size {n} out of range (must be 1..=20)")]
    GroundSetSize { n: usize },
    #[error("labels length {got} does not match ground set size {n}")]
    LabelCount { n: usize, got: usize },
    #[error("duplicate element label `{0}`")]
    DuplicateLabel(String),
    #[error("subset index {bits:#x} out of range for ground set of size {n}")]
    SubsetOutOfRange { bits: u32, n: usize },
    #[error("value table has length {got}, expected {expected}")]
    ValueCount { expected: usize, got: usize },
    #[error("non-finite value at subset index {index}")]
    NonFiniteValue { index: usize },
    #[error("operands live on different ground sets ({left} vs {right} elements)")]
    GroundSetMismatch { left: usize, right: usize },
    #[error("buffer length {0} is not a power of two")]
    LengthNotPowerOfTwo(usize),
    #[error("buffer length {len} does not match 2^{n}")]
    LengthMismatch { len: usize, n: usize },
    #[error("filter declared {k}-localized but has support on a set of cardinality {got}")]
    LocalityViolation { k: usize, got: usize },
    #[error("{op} is not defined for the {model} shift model")]
    UnsupportedModel { op: &'static str, model: &'static str },
    #[error("restricted filter is zero; matched pattern is undefined")]
    DegenerateFilter,
    #[error("merge set must contain at least two elements")]
    MergeSetTooSmall,
    #[error("element index {x} out of range for ground set of size {n}")]
    UnknownElement { x: usize, n: usize },
    #[error("coefficient count {got} does not match ground set size {n}")]
    CoefficientCount { n: usize, got: usize },
    #[error("channel count mismatch: layer expects {expected}, tensor has {got}")]
    ChannelMismatch { expected: usize, got: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("unknown model tag `{0}`")]
    UnknownModelTag(String),
    #[error("unknown task `{0}`")]
    UnknownTask(String),
    #[error("hyperedge must be a nonempty subset of the vertex set")]
    InvalidHyperedge,
    #[error("hypergraph has {n} vertices; set-function view supports at most 20")]
    HypergraphTooLarge { n: usize },
    #[error("corrupt corpus `{name}`: {detail}")]
    CorruptCorpus { name: String, detail: String },
    #[error("corpus `{name}` not found under {dir}")]
    MissingCorpus { name: String, dir: String },
    #[error("failed to parse `{token}` as an integer in {file}")]
    CorpusParse { token: String, file: String },
    #[error("generation failed: {0}")]
    Generation(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    #[error("container error: {0}")]
    Container(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
