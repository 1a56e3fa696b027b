use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unknown graph family `{0}`")]
    UnknownFamily(String),
    #[error("invalid size parameter: {0}")]
    InvalidSize(String),
    #[error("vertex {0} is out of range")]
    InvalidVertex(usize),
    #[error("edge or slot index {0} is out of range")]
    InvalidIndex(usize),
    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),
    #[error("invalid keep set: {0}")]
    InvalidKeepSet(String),
    #[error("graph already has a ghost vertex")]
    GhostPresent,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("vectors live on different hosts ({0} vs {1} slots)")]
    HostMismatch(usize, usize),
    #[error("not a spanning tree/forest: {0}")]
    NotSpanning(String),
    #[error("forest component containing vertex {0} has no route to the wired vertex")]
    NoRouteToBoundary(usize),
    #[error("graph has no wired vertex")]
    NotWired,
    #[error("invalid boundary set: {0}")]
    InvalidBoundary(String),
    #[error("rotation system is not planar: {0}")]
    NonPlanar(String),
    #[error("degenerate face: {0}")]
    DegenerateFace(String),
    #[error("state space of {bits} bits exceeds the cap of {cap}")]
    StateSpaceTooLarge { bits: usize, cap: usize },
    #[error("partition function vanishes")]
    ZeroPartition,
    #[error("coupling from the past did not coalesce within {0} sweeps")]
    CoalescenceCap(usize),
    #[error("step cap of {0} reached")]
    StepCap(usize),
    #[error("parameter out of range: {0}")]
    ParamOutOfRange(String),
    #[error("distributions live on different universes ({0} vs {1} bits)")]
    UniverseMismatch(usize, usize),
    #[error("edge set is not a minimal end-separator: {0}")]
    InvalidCut(String),
    #[error("malformed input: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
