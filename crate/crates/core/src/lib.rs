//! Bit-merging space-filling curves (BMCs) and constant-time range-query cost
//! estimation.
//!
//! A BMC orders the cells of a `2^l`-per-dimension grid by interleaving the
//! coordinate bits of all `d` dimensions in a fixed pattern, e.g. `XYXYXY` for
//! the Z-order curve or `XXXYYY` for the lexicographic curve. This crate
//! provides:
//!
//! - [`curve`]: curve definitions, encoding and decoding.
//! - [`workload`]: range queries, datasets and their synthetic generators.
//! - [`cost_global`] / [`cost_local`]: workload summaries that score any BMC in
//!   `O(d·l)` time, independent of the number of queries.
//! - [`oracle`]: slow, obviously-correct reference implementations.
//! - [`learner`]: a deep Q-learning search over BMCs by adjacent bit swaps.
//! - [`simulator`]: a sorted-block layout that counts block accesses.
//!
//! The crate is `no_std` and only needs `alloc`.

#![cfg_attr(not(test), no_std)]
#![warn(missing_docs)]

extern crate alloc;

pub mod cost_global;
pub mod cost_local;
pub mod curve;
mod error;
pub mod learner;
pub mod model;
pub mod oracle;
pub mod simulator;
pub mod workload;

pub use cost_global::GlobalCostAccumulator;
pub use cost_local::PatternTableSet;
pub use curve::{BmcSpec, CurveValue, Grid, GridPoint};
pub use error::{Error, Result};
pub use model::{CostModel, CurveCost};
pub use workload::{Dataset, RangeQuery, Workload};
