//! Global cost: the length of the curve segment `[F(p_s), F(p_e)]` a query
//! spans.
//!
//! Summed over a workload, the global cost splits into a curve-independent
//! part and a curve-dependent part:
//!
//! ```text
//! sum_q (F(hi) - F(lo) + 1) = sum_dim sum_bit A[dim][bit] * 2^rank(dim, bit) + n
//! A[dim][bit] = sum_q (bit of hi[dim]) - (bit of lo[dim])
//! ```
//!
//! `A` is built once in `O(n·d·l)`; each curve is then scored in `O(d·l)`.

use alloc::vec::Vec;

use crate::curve::{BmcSpec, Grid};
use crate::error::{Error, Result};
use crate::workload::{RangeQuery, Workload};

/// Global cost of one query: `F(hi) - F(lo) + 1`.
pub fn global_cost_naive(curve: &BmcSpec, q: &RangeQuery) -> u128 {
    let hi = curve.value_of(q.hi().coords());
    let lo = curve.value_of(q.lo().coords());
    (hi - lo) as u128 + 1
}

/// The curve-independent bit-difference matrix `A` plus the query count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GlobalCostAccumulator {
    grid: Grid,
    /// Row-major `d x l`; `a[dim * l + bit]`. Stored inline since
    /// `d * l <= 64`.
    a: [i64; 64],
    n: u64,
}

impl GlobalCostAccumulator {
    /// Empty accumulator.
    pub fn new(grid: Grid) -> Self {
        GlobalCostAccumulator {
            grid,
            a: [0; 64],
            n: 0,
        }
    }

    /// Single pass over the workload.
    pub fn from_workload(workload: &Workload) -> Self {
        let mut acc = Self::new(workload.grid());
        for q in workload.queries() {
            acc.add(q);
        }
        acc
    }

    /// Folds one query into the accumulator.
    pub fn add(&mut self, q: &RangeQuery) {
        let bits = self.grid.bits() as usize;
        for (row, (&lo, &hi)) in self
            .a
            .chunks_exact_mut(bits)
            .zip(q.lo().coords().iter().zip(q.hi().coords()))
        {
            // Only bits where the corners differ contribute.
            let mut diff = lo ^ hi;
            while diff != 0 {
                let k = diff.trailing_zeros() as usize;
                row[k] += if hi >> k & 1 == 1 { 1 } else { -1 };
                diff &= diff - 1;
            }
        }
        self.n += 1;
    }

    /// Combines two accumulators built over disjoint parts of a workload.
    pub fn merge(&mut self, other: &GlobalCostAccumulator) -> Result<()> {
        self.grid.ensure_same(&other.grid)?;
        for (a, b) in self.a.iter_mut().zip(other.a) {
            *a += b;
        }
        self.n += other.n;
        Ok(())
    }

    /// Grid of the workload.
    pub fn grid(&self) -> Grid {
        self.grid
    }

    /// Number of queries folded in.
    pub fn query_count(&self) -> u64 {
        self.n
    }

    /// `A[dim][bit]`, bit 0-indexed from the least-significant.
    pub fn entry(&self, dim: usize, bit: u32) -> i64 {
        self.a[dim * self.grid.bits() as usize + bit as usize]
    }

    /// The raw matrix, row-major by dimension.
    pub fn matrix(&self) -> &[i64] {
        &self.a[..self.grid.total_bits() as usize]
    }

    /// Rebuilds an accumulator from a stored matrix.
    pub fn from_parts(grid: Grid, matrix: Vec<i64>, n: u64) -> Result<Self> {
        if matrix.len() != grid.total_bits() as usize {
            return Err(Error::LengthMismatch {
                expected: grid.total_bits() as usize,
                found: matrix.len(),
            });
        }
        if matrix.iter().any(|a| a.unsigned_abs() > n) {
            return Err(Error::InvalidParameter("accumulator entry exceeds query count".into()));
        }
        let mut a = [0; 64];
        a[..matrix.len()].copy_from_slice(&matrix);
        Ok(GlobalCostAccumulator { grid, a, n })
    }

    /// Total global cost of the workload under `curve` in `O(d·l)`.
    pub fn cost(&self, curve: &BmcSpec) -> Result<u128> {
        self.grid.ensure_same(&curve.grid())?;
        let bits = self.grid.bits() as usize;
        // Walk the slots from the least significant rank, tracking the next
        // bit of each dimension. Same work for every workload.
        let mut seen = [0usize; 64];
        let mut total: i128 = self.n as i128;
        for (rank, &s) in curve.slots_lsb().iter().enumerate() {
            let dim = s as usize;
            let a = self.a[dim * bits + seen[dim]];
            seen[dim] += 1;
            let term = (a as i128)
                .checked_mul(1i128 << rank)
                .ok_or(Error::Overflow("global cost"))?;
            total = total.checked_add(term).ok_or(Error::Overflow("global cost"))?;
        }
        u128::try_from(total).map_err(|_| Error::Invariant("negative global cost"))
    }
}

/// Closed-form total global cost; see [`GlobalCostAccumulator::cost`].
pub fn global_cost_closed(curve: &BmcSpec, acc: &GlobalCostAccumulator) -> Result<u128> {
    acc.cost(curve)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::all_curves;

    fn fixture() -> (Grid, RangeQuery) {
        let g = Grid::new(2, 3).unwrap();
        (g, RangeQuery::new(&g, vec![0, 2], vec![4, 3]).unwrap())
    }

    #[test]
    fn naive_examples() {
        let (g, q) = fixture();
        let zc = BmcSpec::parse("XYXYXY", 2, 3).unwrap();
        // 100/011 interleaved from x2: 100101; 000/010: 000100.
        assert_eq!(zc.value_of(&[4, 3]), 37);
        assert_eq!(zc.value_of(&[0, 2]), 4);
        assert_eq!(global_cost_naive(&zc, &q), 34);
        let cell = RangeQuery::new(&g, vec![3, 6], vec![3, 6]).unwrap();
        assert_eq!(global_cost_naive(&zc, &cell), 1);
        for c in all_curves(g) {
            assert_eq!(global_cost_naive(&c, &RangeQuery::full(&g)), 64);
        }
    }

    #[test]
    fn accumulator_matches_bitwise_difference() {
        let (g, q) = fixture();
        let w = Workload::new(g, vec![q.clone()]).unwrap();
        let acc = GlobalCostAccumulator::from_workload(&w);
        // x: 100 - 000, y: 011 - 010
        assert_eq!(&acc.matrix()[..3], &[0, 0, 1]);
        assert_eq!(&acc.matrix()[3..], &[1, 0, 0]);
        assert_eq!(acc.query_count(), 1);
        let zc = BmcSpec::parse("XYXYXY", 2, 3).unwrap();
        assert_eq!(acc.cost(&zc).unwrap(), 34);

        let doubled = GlobalCostAccumulator::from_workload(&Workload::new(g, vec![q.clone(), q]).unwrap());
        assert!(doubled.matrix().iter().zip(acc.matrix()).all(|(a, b)| *a == 2 * b));
        assert_eq!(doubled.query_count(), 2);
    }

    #[test]
    fn empty_workload_costs_nothing() {
        let g = Grid::new(3, 2).unwrap();
        let acc = GlobalCostAccumulator::from_workload(&Workload::new(g, vec![]).unwrap());
        assert!(acc.matrix().iter().all(|&a| a == 0));
        for c in all_curves(g) {
            assert_eq!(acc.cost(&c).unwrap(), 0);
        }
    }

    #[test]
    fn geometry_mismatch_is_rejected() {
        let (g, q) = fixture();
        let acc = GlobalCostAccumulator::from_workload(&Workload::new(g, vec![q]).unwrap());
        let other = BmcSpec::parse("XYXY", 2, 2).unwrap();
        assert!(matches!(acc.cost(&other), Err(Error::GeometryMismatch { .. })));
    }

    #[test]
    fn merge_is_additive() {
        let (g, q) = fixture();
        let mut a = GlobalCostAccumulator::from_workload(&Workload::new(g, vec![q.clone()]).unwrap());
        let b = a.clone();
        a.merge(&b).unwrap();
        let both = GlobalCostAccumulator::from_workload(&Workload::new(g, vec![q.clone(), q]).unwrap());
        assert_eq!(a, both);
    }
}
