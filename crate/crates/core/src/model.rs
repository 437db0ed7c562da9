//! The combined query cost `C = C_global * C_local` of a workload.

use crate::cost_global::GlobalCostAccumulator;
use crate::cost_local::PatternTableSet;
use crate::curve::{BmcSpec, Grid};
use crate::error::Result;
use crate::workload::Workload;

/// Global and local cost of a workload under one curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CurveCost {
    /// Sum of curve-segment lengths.
    pub global: u128,
    /// Sum of query-section counts.
    pub local: u128,
}

impl CurveCost {
    /// `global * local` as a float; exact while the product stays below
    /// `2^53`.
    pub fn product(&self) -> f64 {
        self.global as f64 * self.local as f64
    }

    /// Exact product, if it fits.
    pub fn checked_product(&self) -> Option<u128> {
        self.global.checked_mul(self.local)
    }
}

/// Curve-independent summary of a workload: everything needed to score any
/// curve in `O(d·l)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CostModel {
    global: GlobalCostAccumulator,
    local: PatternTableSet,
}

impl CostModel {
    /// Scans the workload once for each summary.
    pub fn build(workload: &Workload) -> Result<Self> {
        Ok(CostModel {
            global: GlobalCostAccumulator::from_workload(workload),
            local: PatternTableSet::from_workload(workload)?,
        })
    }

    /// Pairs pre-built summaries; both must describe the same grid.
    pub fn from_parts(global: GlobalCostAccumulator, local: PatternTableSet) -> Result<Self> {
        global.grid().ensure_same(&local.grid())?;
        Ok(CostModel { global, local })
    }

    /// Grid of the workload.
    pub fn grid(&self) -> Grid {
        self.global.grid()
    }

    /// The global-cost accumulator.
    pub fn global(&self) -> &GlobalCostAccumulator {
        &self.global
    }

    /// The pattern tables.
    pub fn local(&self) -> &PatternTableSet {
        &self.local
    }

    /// Both costs of `curve`.
    pub fn cost(&self, curve: &BmcSpec) -> Result<CurveCost> {
        Ok(CurveCost {
            global: self.global.cost(curve)?,
            local: self.local.local_cost(curve)?,
        })
    }
}
