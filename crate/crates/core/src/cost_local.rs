//! Local cost: the number of query sections, counted through directed edges.
//!
//! Two cells with consecutive curve values form a directed edge. Inside a
//! query, `edges + sections = cells`, so counting edges gives the section
//! count. An edge raises bit `i` of one dimension `b` (a *rise*, with the
//! `i - 1` bits below it dropping to zero) while every other dimension `b'`
//! drops its lowest `k_b'` bits from one to zero. Which `k_b'` pair with a
//! given rise depends only on the curve: it is the number of `b'` slots ranked
//! below the rising bit.
//!
//! Rise and drop counts inside a query depend only on the query, so they are
//! accumulated once per workload into one table per dimension, keyed by the
//! rise exponent and the full drop vector. Scoring a curve then takes `d·l`
//! lookups.

use alloc::vec;
use alloc::vec::Vec;

use crate::curve::{BmcSpec, Grid};
use crate::error::{Error, Result};
use crate::workload::{RangeQuery, Workload};

/// Upper bound on table entries per dimension.
pub const MAX_TABLE_ENTRIES: u128 = 1 << 22;

/// Number of rise patterns of exponent `k >= 1` inside `[lo, hi]`: pairs
/// `(a·2^k + 2^(k-1) - 1, a·2^k + 2^(k-1))` with both ends in the interval.
pub fn count_rise(lo: u64, hi: u64, k: u32) -> u64 {
    debug_assert!(k >= 1 && lo <= hi);
    let step = 1i128 << k;
    let half = 1i128 << (k - 1);
    let upper = (hi as i128 - half).div_euclid(step);
    let lower = ceil_div(lo as i128 - (half - 1), step);
    (upper - lower + 1).max(0) as u64
}

/// Number of drop patterns of exponent `k >= 0` inside `[lo, hi]`: aligned
/// blocks `[a·2^k, a·2^k + 2^k - 1]` contained in the interval. `k = 0` gives
/// the interval length.
pub fn count_drop(lo: u64, hi: u64, k: u32) -> u64 {
    debug_assert!(lo <= hi);
    let step = 1i128 << k;
    let upper = (hi as i128 + 1).div_euclid(step);
    let lower = ceil_div(lo as i128, step);
    (upper - lower).max(0) as u64
}

fn ceil_div(a: i128, b: i128) -> i128 {
    -(-a).div_euclid(b)
}

/// Drop exponents of the non-rising dimensions, in ascending dimension order
/// with the rising dimension skipped.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DropVector(pub Vec<u8>);

impl DropVector {
    /// Total drop `k'`.
    pub fn total(&self) -> u32 {
        self.0.iter().map(|&k| k as u32).sum()
    }
}

/// Drop vector paired with rise exponent `rise` (1-indexed) of dimension
/// `dim` under `curve`: for every other dimension, the number of its slots
/// ranked below the rising bit.
pub fn drop_vector_for(curve: &BmcSpec, dim: usize, rise: u32) -> DropVector {
    let rank = curve.rank(dim, rise - 1) as usize;
    let d = curve.grid().dims();
    let mut below = vec![0u8; d];
    for &s in &curve.slots_lsb()[..rank] {
        below[s as usize] += 1;
    }
    DropVector(
        below
            .into_iter()
            .enumerate()
            .filter(|&(other, _)| other != dim)
            .map(|(_, k)| k)
            .collect(),
    )
}

/// Pattern tables for a workload.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternTableSet {
    grid: Grid,
    /// `(l + 1)^(d - 1)`: columns per row.
    cols: usize,
    /// One dense table per rise dimension, `l` rows of `cols` entries.
    tables: Vec<Vec<u128>>,
    cells: u128,
    n: u64,
}

impl PatternTableSet {
    /// All-zero tables.
    pub fn new(grid: Grid) -> Result<Self> {
        let l = grid.bits() as u128;
        let cols = (l + 1)
            .checked_pow(grid.dims() as u32 - 1)
            .filter(|c| c.saturating_mul(l) <= MAX_TABLE_ENTRIES)
            .ok_or(Error::TableTooLarge(
                (l + 1).saturating_pow(grid.dims() as u32 - 1).saturating_mul(l),
            ))? as usize;
        Ok(PatternTableSet {
            grid,
            cols,
            tables: vec![vec![0; cols * grid.bits() as usize]; grid.dims()],
            cells: 0,
            n: 0,
        })
    }

    /// Builds the tables with one pass over the workload.
    pub fn from_workload(workload: &Workload) -> Result<Self> {
        let mut set = Self::new(workload.grid())?;
        let mut scratch = Scratch::new(workload.grid());
        for q in workload.queries() {
            set.add_with(q, &mut scratch);
        }
        Ok(set)
    }

    /// Folds one query into the tables.
    pub fn add(&mut self, q: &RangeQuery) {
        let mut scratch = Scratch::new(self.grid);
        self.add_with(q, &mut scratch);
    }

    fn add_with(&mut self, q: &RangeQuery, s: &mut Scratch) {
        let d = self.grid.dims();
        let l = self.grid.bits() as usize;
        for dim in 0..d {
            let (lo, hi) = q.interval(dim);
            let drops = &mut s.drops[dim];
            drops.clear();
            for k in 0..=l as u32 {
                let c = count_drop(lo, hi, k);
                if c == 0 {
                    break;
                }
                drops.push(c);
            }
            let rises = &mut s.rises[dim];
            rises.clear();
            rises.extend((1..=l as u32).map(|k| count_rise(lo, hi, k)));
        }
        for b in 0..d {
            if s.rises[b].iter().all(|&r| r == 0) {
                continue;
            }
            let others: Vec<usize> = (0..d).filter(|&x| x != b).collect();
            // Odometer over the drop exponents with non-zero counts.
            let digits = &mut s.digits;
            digits.clear();
            digits.resize(others.len(), 0);
            loop {
                let mut product: u128 = 1;
                let mut col = 0usize;
                let mut radix = 1usize;
                for (m, &other) in others.iter().enumerate() {
                    product *= s.drops[other][digits[m]] as u128;
                    col += digits[m] * radix;
                    radix *= l + 1;
                }
                let table = &mut self.tables[b];
                for (i, &r) in s.rises[b].iter().enumerate() {
                    if r != 0 {
                        table[i * self.cols + col] += r as u128 * product;
                    }
                }
                // Advance.
                let mut m = 0;
                loop {
                    if m == others.len() {
                        break;
                    }
                    digits[m] += 1;
                    if digits[m] < s.drops[others[m]].len() {
                        break;
                    }
                    digits[m] = 0;
                    m += 1;
                }
                if m == others.len() {
                    break;
                }
            }
        }
        self.cells += q.cell_count();
        self.n += 1;
    }

    /// Combines tables built over disjoint parts of a workload.
    pub fn merge(&mut self, other: &PatternTableSet) -> Result<()> {
        self.grid.ensure_same(&other.grid)?;
        for (mine, theirs) in self.tables.iter_mut().zip(&other.tables) {
            for (a, b) in mine.iter_mut().zip(theirs) {
                *a += b;
            }
        }
        self.cells += other.cells;
        self.n += other.n;
        Ok(())
    }

    /// Grid of the workload.
    pub fn grid(&self) -> Grid {
        self.grid
    }

    /// Total cells `V` over all queries.
    pub fn total_cells(&self) -> u128 {
        self.cells
    }

    /// Number of queries folded in.
    pub fn query_count(&self) -> u64 {
        self.n
    }

    fn column(&self, drops: &DropVector) -> usize {
        let radix = self.grid.bits() as usize + 1;
        drops
            .0
            .iter()
            .rev()
            .fold(0usize, |acc, &k| acc * radix + k as usize)
    }

    fn decode_column(&self, mut col: usize) -> DropVector {
        let radix = self.grid.bits() as usize + 1;
        let mut out = Vec::with_capacity(self.grid.dims() - 1);
        for _ in 1..self.grid.dims() {
            out.push((col % radix) as u8);
            col /= radix;
        }
        DropVector(out)
    }

    /// Accumulated count for rise exponent `rise` (1-indexed) of `dim`
    /// combined with `drops`.
    pub fn get(&self, dim: usize, rise: u32, drops: &DropVector) -> u128 {
        let l = self.grid.bits();
        if dim >= self.grid.dims()
            || rise == 0
            || rise > l
            || drops.0.len() + 1 != self.grid.dims()
            || drops.0.iter().any(|&k| k as u32 > l)
        {
            return 0;
        }
        self.tables[dim][(rise as usize - 1) * self.cols + self.column(drops)]
    }

    /// Non-zero entries of `dim`'s table as `(rise, drops, count)`.
    pub fn entries(&self, dim: usize) -> impl Iterator<Item = (u32, DropVector, u128)> + '_ {
        self.tables[dim]
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0)
            .map(move |(idx, &v)| {
                (
                    (idx / self.cols) as u32 + 1,
                    self.decode_column(idx % self.cols),
                    v,
                )
            })
    }

    /// Number of non-zero entries over all tables.
    pub fn nonzero_entries(&self) -> usize {
        self.tables.iter().flatten().filter(|&&v| v != 0).count()
    }

    /// Rebuilds tables from stored non-zero entries `(dim, rise, drops,
    /// count)`.
    pub fn from_entries(
        grid: Grid,
        entries: impl IntoIterator<Item = (usize, u32, DropVector, u128)>,
        total_cells: u128,
        query_count: u64,
    ) -> Result<Self> {
        let mut set = Self::new(grid)?;
        let l = grid.bits();
        for (dim, rise, drops, count) in entries {
            if dim >= grid.dims()
                || rise == 0
                || rise > l
                || drops.0.len() + 1 != grid.dims()
                || drops.0.iter().any(|&k| k as u32 > l)
            {
                return Err(Error::InvalidParameter(alloc::format!(
                    "table entry ({dim}, {rise}, {:?}) does not fit the grid",
                    drops.0
                )));
            }
            let col = set.column(&drops);
            set.tables[dim][(rise as usize - 1) * set.cols + col] = count;
        }
        set.cells = total_cells;
        set.n = query_count;
        Ok(set)
    }

    /// Total directed edges of the workload under `curve`, in `O(d·l)`.
    pub fn edges(&self, curve: &BmcSpec) -> Result<u128> {
        self.grid.ensure_same(&curve.grid())?;
        let d = self.grid.dims();
        let radix = self.grid.bits() as usize + 1;
        // Column contribution of each dimension depends on whether it sits
        // before or after the rising dimension in the drop vector.
        let mut seen = [0usize; 64];
        let mut total: u128 = 0;
        for &s in curve.slots_lsb() {
            let b = s as usize;
            let mut col = 0usize;
            let mut weight = 1usize;
            for (other, &count) in seen.iter().enumerate().take(d) {
                if other == b {
                    continue;
                }
                col += count * weight;
                weight *= radix;
            }
            total += self.tables[b][seen[b] * self.cols + col];
            seen[b] += 1;
        }
        Ok(total)
    }

    /// Total local cost (number of query sections) under `curve`.
    pub fn local_cost(&self, curve: &BmcSpec) -> Result<u128> {
        let edges = self.edges(curve)?;
        let sections = self
            .cells
            .checked_sub(edges)
            .ok_or(Error::Invariant("more edges than cells"))?;
        if sections < self.n as u128 {
            return Err(Error::Invariant("fewer sections than queries"));
        }
        Ok(sections)
    }
}

struct Scratch {
    drops: Vec<Vec<u64>>,
    rises: Vec<Vec<u64>>,
    digits: Vec<usize>,
}

impl Scratch {
    fn new(grid: Grid) -> Self {
        Scratch {
            drops: vec![Vec::with_capacity(grid.bits() as usize + 1); grid.dims()],
            rises: vec![Vec::with_capacity(grid.bits() as usize); grid.dims()],
            digits: Vec::with_capacity(grid.dims()),
        }
    }
}

/// Builds the pattern tables of a workload.
pub fn build_pattern_tables(workload: &Workload) -> Result<PatternTableSet> {
    PatternTableSet::from_workload(workload)
}

/// Total directed edges under `curve`; see [`PatternTableSet::edges`].
pub fn edges_via_tables(curve: &BmcSpec, tables: &PatternTableSet) -> Result<u128> {
    tables.edges(curve)
}

/// Total section count under `curve`; see [`PatternTableSet::local_cost`].
pub fn local_cost_from_tables(curve: &BmcSpec, tables: &PatternTableSet) -> Result<u128> {
    tables.local_cost(curve)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::all_curves;

    fn fixture() -> Workload {
        let g = Grid::new(2, 3).unwrap();
        Workload::new(g, vec![RangeQuery::new(&g, vec![0, 2], vec![4, 3]).unwrap()]).unwrap()
    }

    #[test]
    fn rise_counts() {
        assert_eq!(count_rise(0, 4, 1), 2);
        assert_eq!(count_rise(0, 4, 2), 1);
        assert_eq!(count_rise(0, 4, 3), 1);
        for c in 0..8 {
            for k in 1..=3 {
                assert_eq!(count_rise(c, c, k), 0);
            }
        }
        assert_eq!(count_rise(2, 3, 1), 1);
        assert_eq!(count_rise(2, 3, 2), 0);
    }

    #[test]
    fn drop_counts() {
        assert_eq!(count_drop(0, 4, 0), 5);
        assert_eq!(count_drop(2, 3, 1), 1);
        assert_eq!(count_drop(2, 3, 2), 0);
        assert_eq!(count_drop(2, 3, 3), 0);
        assert_eq!(count_drop(1, 1, 2), 0);
    }

    #[test]
    fn drop_vectors() {
        let zc = BmcSpec::parse("XYXYXY", 2, 3).unwrap();
        assert_eq!(drop_vector_for(&zc, 0, 1), DropVector(vec![1]));
        assert_eq!(drop_vector_for(&zc, 1, 1), DropVector(vec![0]));
        assert_eq!(drop_vector_for(&zc, 0, 3), DropVector(vec![3]));
        let lc = BmcSpec::parse("XXXYYY", 2, 3).unwrap();
        assert_eq!(drop_vector_for(&lc, 0, 1), DropVector(vec![3]));
        for c in all_curves(Grid::new(3, 2).unwrap()) {
            for dim in 0..3 {
                for i in 1..=2 {
                    let v = drop_vector_for(&c, dim, i);
                    assert_eq!(v.total(), c.rank(dim, i - 1) - (i - 1));
                }
            }
        }
    }

    #[test]
    fn worked_tables() {
        let t = PatternTableSet::from_workload(&fixture()).unwrap();
        assert_eq!(t.get(0, 1, &DropVector(vec![1])), 2);
        assert_eq!(t.get(0, 1, &DropVector(vec![0])), 4);
        assert_eq!(t.get(1, 1, &DropVector(vec![0])), 5);
        assert_eq!(t.total_cells(), 10);
        let zc = BmcSpec::parse("XYXYXY", 2, 3).unwrap();
        assert_eq!(t.edges(&zc).unwrap(), 7);
        assert_eq!(t.local_cost(&zc).unwrap(), 3);
    }

    #[test]
    fn empty_and_single_cell() {
        let g = Grid::new(3, 3).unwrap();
        let empty = PatternTableSet::from_workload(&Workload::new(g, vec![]).unwrap()).unwrap();
        assert_eq!(empty.nonzero_entries(), 0);
        assert_eq!(empty.total_cells(), 0);
        let cell = Workload::new(g, vec![RangeQuery::new(&g, vec![1, 2, 3], vec![1, 2, 3]).unwrap()]).unwrap();
        let t = PatternTableSet::from_workload(&cell).unwrap();
        for c in all_curves(g).take(50) {
            assert_eq!(empty.edges(&c).unwrap(), 0);
            assert_eq!(t.edges(&c).unwrap(), 0);
            assert_eq!(t.local_cost(&c).unwrap(), 1);
        }
    }

    #[test]
    fn duplicate_query_doubles_tables() {
        let w = fixture();
        let once = PatternTableSet::from_workload(&w).unwrap();
        let q = w.queries()[0].clone();
        let twice = PatternTableSet::from_workload(&Workload::new(w.grid(), vec![q.clone(), q]).unwrap()).unwrap();
        for dim in 0..2 {
            let a: Vec<_> = once.entries(dim).collect();
            let b: Vec<_> = twice.entries(dim).collect();
            assert_eq!(a.len(), b.len());
            for ((r1, d1, v1), (r2, d2, v2)) in a.into_iter().zip(b) {
                assert_eq!((r1, d1), (r2, d2));
                assert_eq!(2 * v1, v2);
            }
        }
    }

    #[test]
    fn full_grid_is_one_section() {
        let g = Grid::new(2, 3).unwrap();
        let t = PatternTableSet::from_workload(&Workload::new(g, vec![RangeQuery::full(&g)]).unwrap()).unwrap();
        for c in all_curves(g) {
            assert_eq!(t.local_cost(&c).unwrap(), 1);
        }
    }

    #[test]
    fn entries_round_trip() {
        let g = Grid::new(3, 4).unwrap();
        let w = Workload::new(
            g,
            vec![
                RangeQuery::new(&g, vec![1, 2, 3], vec![9, 5, 14]).unwrap(),
                RangeQuery::new(&g, vec![0, 0, 7], vec![15, 3, 8]).unwrap(),
            ],
        )
        .unwrap();
        let t = PatternTableSet::from_workload(&w).unwrap();
        let entries: Vec<_> = (0..3)
            .flat_map(|dim| t.entries(dim).map(move |(r, v, c)| (dim, r, v, c)).collect::<Vec<_>>())
            .collect();
        let back = PatternTableSet::from_entries(g, entries, t.total_cells(), t.query_count()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn oversized_tables_are_rejected() {
        let g = Grid::new(8, 8).unwrap();
        assert!(matches!(PatternTableSet::new(g), Err(Error::TableTooLarge(_))));
    }
}
