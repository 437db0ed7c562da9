//! Brute-force reference implementations.
//!
//! Everything here walks cells or curves one at a time. These are the naive
//! baselines the closed-form estimators are checked and timed against.

use alloc::vec;
use alloc::vec::Vec;

use crate::cost_global::global_cost_naive;
use crate::curve::{all_curves, curve_count, BmcSpec, CurveValue};
use crate::error::{Error, Result};
use crate::model::CurveCost;
use crate::workload::{RangeQuery, Workload};

/// Default cap on cells enumerated per query.
pub const DEFAULT_CELL_BUDGET: u128 = 1 << 22;

/// Default cap on curves scored by [`exhaustive_best_bmc`].
pub const DEFAULT_CURVE_BUDGET: u128 = 1 << 16;

/// Curve value computed by literally merging bit strings: walk the slots from
/// the most significant and take the next-highest unused bit of that slot's
/// dimension.
pub fn curve_value_by_merge(curve: &BmcSpec, coords: &[u64]) -> CurveValue {
    let bits = curve.grid().bits();
    let mut next_bit = vec![bits; coords.len()];
    let mut value = 0u64;
    for dim in curve.slots_msb() {
        let dim = dim as usize;
        next_bit[dim] -= 1;
        value = (value << 1) | (coords[dim] >> next_bit[dim] & 1);
    }
    value
}

/// Sorted, disjoint, non-adjacent closed intervals of curve values.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SectionList {
    sections: Vec<(CurveValue, CurveValue)>,
}

impl SectionList {
    /// Merges sorted values into maximal runs of consecutive values.
    pub fn from_sorted(values: &[CurveValue]) -> Self {
        let mut sections: Vec<(CurveValue, CurveValue)> = Vec::new();
        for &v in values {
            match sections.last_mut() {
                Some((_, end)) if *end == v || end.checked_add(1) == Some(v) => *end = v,
                _ => sections.push((v, v)),
            }
        }
        SectionList { sections }
    }

    /// The intervals.
    pub fn sections(&self) -> &[(CurveValue, CurveValue)] {
        &self.sections
    }

    /// Number of sections.
    pub fn len(&self) -> usize {
        self.sections.len()
    }

    /// Whether there are no sections.
    pub fn is_empty(&self) -> bool {
        self.sections.is_empty()
    }

    /// Total number of values covered.
    pub fn covered(&self) -> u128 {
        self.sections.iter().map(|(a, b)| (b - a) as u128 + 1).sum()
    }
}

fn check_budget(q: &RangeQuery, budget: u128) -> Result<()> {
    let required = q.cell_count();
    if required > budget {
        return Err(Error::BudgetExceeded { required, budget });
    }
    Ok(())
}

/// Calls `f` on every cell of `q` in row-major order (last dimension fastest).
pub fn for_each_cell(q: &RangeQuery, mut f: impl FnMut(&[u64])) {
    let lo = q.lo().coords();
    let hi = q.hi().coords();
    let mut cell = lo.to_vec();
    loop {
        f(&cell);
        let mut dim = cell.len();
        loop {
            if dim == 0 {
                return;
            }
            dim -= 1;
            if cell[dim] < hi[dim] {
                cell[dim] += 1;
                break;
            }
            cell[dim] = lo[dim];
        }
    }
}

/// Sections of `q` under an arbitrary cell ordering `key`.
pub fn enumerate_sections_by(
    q: &RangeQuery,
    budget: u128,
    mut key: impl FnMut(&[u64]) -> CurveValue,
) -> Result<SectionList> {
    check_budget(q, budget)?;
    let mut values = Vec::with_capacity(q.cell_count() as usize);
    for_each_cell(q, |c| values.push(key(c)));
    values.sort_unstable();
    Ok(SectionList::from_sorted(&values))
}

/// Sections of `q` under `curve`, by sorting the values of every cell.
pub fn enumerate_sections(curve: &BmcSpec, q: &RangeQuery, budget: u128) -> Result<SectionList> {
    enumerate_sections_by(q, budget, |c| curve.value_of(c))
}

/// Number of values `v` in `q` whose successor `v + 1` also decodes into `q`.
pub fn naive_edge_count(curve: &BmcSpec, q: &RangeQuery, budget: u128) -> Result<u128> {
    check_budget(q, budget)?;
    let max = curve.grid().max_value();
    let mut edges = 0u128;
    for_each_cell(q, |c| {
        let v = curve.value_of(c);
        if v < max {
            let next = curve.decode(v + 1).expect("successor is on the grid");
            if q.contains(next.coords()) {
                edges += 1;
            }
        }
    });
    Ok(edges)
}

/// Sum of per-query global costs.
pub fn naive_global_cost(curve: &BmcSpec, workload: &Workload) -> u128 {
    workload
        .queries()
        .iter()
        .map(|q| global_cost_naive(curve, q))
        .sum()
}

/// Sum of per-query section counts, by enumeration.
pub fn naive_local_cost(curve: &BmcSpec, workload: &Workload, budget: u128) -> Result<u128> {
    workload
        .queries()
        .iter()
        .map(|q| enumerate_sections(curve, q, budget).map(|s| s.len() as u128))
        .sum()
}

/// Both costs by brute force.
pub fn naive_cost(curve: &BmcSpec, workload: &Workload, budget: u128) -> Result<CurveCost> {
    Ok(CurveCost {
        global: naive_global_cost(curve, workload),
        local: naive_local_cost(curve, workload, budget)?,
    })
}

/// Scores every curve of the workload's grid with the brute-force costs and
/// returns the one minimizing `global * local`. Ties go to the
/// lexicographically smallest MSB-first slot sequence.
pub fn exhaustive_best_bmc(
    workload: &Workload,
    curve_budget: u128,
    cell_budget: u128,
) -> Result<(BmcSpec, CurveCost)> {
    let grid = workload.grid();
    let required = curve_count(grid).unwrap_or(u128::MAX);
    if required > curve_budget {
        return Err(Error::BudgetExceeded {
            required,
            budget: curve_budget,
        });
    }
    let mut best: Option<(BmcSpec, CurveCost)> = None;
    for curve in all_curves(grid) {
        let cost = naive_cost(&curve, workload, cell_budget)?;
        let better = match &best {
            None => true,
            Some((_, b)) => less(&cost, b),
        };
        if better {
            best = Some((curve, cost));
        }
    }
    Ok(best.expect("every grid has at least one curve"))
}

fn less(a: &CurveCost, b: &CurveCost) -> bool {
    match (a.checked_product(), b.checked_product()) {
        (Some(x), Some(y)) => x < y,
        _ => a.product() < b.product(),
    }
}
