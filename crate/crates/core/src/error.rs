use alloc::string::String;

/// Errors produced by the core library.
#[allow(missing_docs)]
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: d={dims}, l={bits} (need d >= 1, l >= 1, d*l <= 64)")]
    InvalidGrid { dims: usize, bits: u32 },
    #[error("curve has {found} slots, expected {expected}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("dimension {dim} appears {found} times, expected {expected}")]
    DimensionCount {
        dim: usize,
        expected: usize,
        found: usize,
    },
    #[error("unknown curve token {0:?}")]
    UnknownToken(String),
    #[error("coordinate {value} in dimension {dim} is outside [0, {max}]")]
    CoordinateOutOfRange { dim: usize, value: u64, max: u64 },
    #[error("point has {found} coordinates, expected {expected}")]
    PointDimension { expected: usize, found: usize },
    #[error("curve value {0} is outside the grid")]
    ValueOutOfRange(u64),
    #[error("query lower corner exceeds upper corner in dimension {0}")]
    InvertedQuery(usize),
    #[error("geometry mismatch: expected d={expected_dims}, l={expected_bits}, found d={found_dims}, l={found_bits}")]
    GeometryMismatch {
        expected_dims: usize,
        expected_bits: u32,
        found_dims: usize,
        found_bits: u32,
    },
    #[error("arithmetic overflow while computing {0}")]
    Overflow(&'static str),
    #[error("pattern tables would need {0} entries per dimension")]
    TableTooLarge(u128),
    #[error("enumeration of {required} items exceeds the budget of {budget}")]
    BudgetExceeded { required: u128, budget: u128 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("swap at position {0} would exchange two bits of the same dimension")]
    SameDimensionSwap(usize),
    #[error("internal invariant violated: {0}")]
    Invariant(&'static str),
}

/// Result alias used throughout the crate.
pub type Result<T, E = Error> = core::result::Result<T, E>;
