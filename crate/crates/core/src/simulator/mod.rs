//! Block-access simulation: points sorted by a curve and packed into
//! fixed-size blocks, standing in for the leaf level of a B+-tree.

mod hilbert;

use alloc::string::String;
use alloc::vec::Vec;

pub use hilbert::{hilbert_index, hilbert_order};

use crate::curve::{BmcSpec, CurveValue, Grid, GridPoint};
use crate::error::{Error, Result};
use crate::oracle::{enumerate_sections_by, SectionList};
use crate::workload::{Dataset, RangeQuery, Workload};

/// Default points per block.
pub const DEFAULT_BLOCK_SIZE: usize = 128;

/// Cell ordering used to lay out an index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CurveOrder {
    /// A bit-merging curve.
    Bmc(BmcSpec),
    /// The Hilbert curve on the given grid (`d` in `{2, 3}`).
    Hilbert(Grid),
}

impl CurveOrder {
    /// Grid of the ordering.
    pub fn grid(&self) -> Grid {
        match self {
            CurveOrder::Bmc(c) => c.grid(),
            CurveOrder::Hilbert(g) => *g,
        }
    }

    /// Key of a cell.
    #[inline]
    pub fn key(&self, coords: &[u64]) -> CurveValue {
        match self {
            CurveOrder::Bmc(c) => c.value_of(coords),
            CurveOrder::Hilbert(g) => hilbert_index(coords, g.bits()),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            CurveOrder::Bmc(_) => Ok(()),
            CurveOrder::Hilbert(g) => hilbert::check_dims(*g),
        }
    }
}

/// How a range query is executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QueryMode {
    /// One scan over `[F(p_s), F(p_e)]`, filtering false positives.
    FullRange,
    /// One scan per query section.
    #[default]
    PerSection,
}

/// Points sorted by curve key and cut into blocks of `block_size`.
#[derive(Debug, Clone)]
pub struct OrderedIndex {
    order: CurveOrder,
    block_size: usize,
    keys: Vec<CurveValue>,
    /// Original dataset position of each sorted point.
    ids: Vec<usize>,
    /// Sorted coordinates, `d` per point.
    coords: Vec<u64>,
}

impl OrderedIndex {
    /// Sorts `data` by `(key, original position)`.
    pub fn build(data: &Dataset, order: CurveOrder, block_size: usize) -> Result<Self> {
        if block_size == 0 {
            return Err(Error::InvalidParameter("block size must be at least 1".into()));
        }
        order.validate()?;
        data.grid().ensure_same(&order.grid())?;
        let mut keyed: Vec<(CurveValue, usize)> = data
            .points()
            .iter()
            .enumerate()
            .map(|(i, p)| (order.key(p.coords()), i))
            .collect();
        keyed.sort_unstable();
        let d = data.grid().dims();
        let mut coords = Vec::with_capacity(keyed.len() * d);
        for &(_, i) in &keyed {
            coords.extend_from_slice(data.points()[i].coords());
        }
        Ok(OrderedIndex {
            order,
            block_size,
            keys: keyed.iter().map(|k| k.0).collect(),
            ids: keyed.iter().map(|k| k.1).collect(),
            coords,
        })
    }

    /// Number of stored points.
    pub fn len(&self) -> usize {
        self.keys.len()
    }

    /// Whether the index is empty.
    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    /// Points per block.
    pub fn block_size(&self) -> usize {
        self.block_size
    }

    /// Number of blocks, `ceil(N / B)`.
    pub fn block_count(&self) -> usize {
        self.keys.len().div_ceil(self.block_size)
    }

    /// First and last key of block `b`.
    pub fn block_bounds(&self, b: usize) -> (CurveValue, CurveValue) {
        let start = b * self.block_size;
        let end = (start + self.block_size).min(self.keys.len());
        (self.keys[start], self.keys[end - 1])
    }

    /// Original dataset positions in sorted order.
    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    /// The ordering.
    pub fn order(&self) -> &CurveOrder {
        &self.order
    }

    fn point(&self, pos: usize) -> &[u64] {
        let d = self.order.grid().dims();
        &self.coords[pos * d..(pos + 1) * d]
    }

    /// Sorted positions with keys in `[lo, hi]`.
    fn positions(&self, lo: CurveValue, hi: CurveValue) -> core::ops::Range<usize> {
        let start = self.keys.partition_point(|&k| k < lo);
        let end = self.keys.partition_point(|&k| k <= hi);
        start..end.max(start)
    }

    /// Sections of `q` under this index's ordering.
    pub fn sections(&self, q: &RangeQuery, budget: u128) -> Result<SectionList> {
        enumerate_sections_by(q, budget, |c| self.order.key(c))
    }

    /// Executes `q`, counting the distinct blocks touched.
    pub fn run_query(&self, q: &RangeQuery, mode: QueryMode, budget: u128) -> Result<QueryOutcome> {
        if q.dims() != self.order.grid().dims() {
            return Err(Error::PointDimension {
                expected: self.order.grid().dims(),
                found: q.dims(),
            });
        }
        let ranges: Vec<(CurveValue, CurveValue)> = match (mode, &self.order) {
            (QueryMode::FullRange, CurveOrder::Bmc(c)) => {
                alloc::vec![(c.value_of(q.lo().coords()), c.value_of(q.hi().coords()))]
            }
            (QueryMode::FullRange, CurveOrder::Hilbert(_)) => {
                let s = self.sections(q, budget)?;
                alloc::vec![(s.sections()[0].0, s.sections()[s.len() - 1].1)]
            }
            (QueryMode::PerSection, _) => self.sections(q, budget)?.sections().to_vec(),
        };
        let b = self.block_size;
        let mut blocks: Vec<usize> = Vec::new();
        let mut results = Vec::new();
        for (lo, hi) in ranges {
            let pos = self.positions(lo, hi);
            if pos.is_empty() {
                continue;
            }
            let (first, last) = (pos.start / b, (pos.end - 1) / b);
            let from = match blocks.last() {
                Some(&prev) if prev >= first => prev + 1,
                _ => first,
            };
            blocks.extend(from..=last);
            if mode == QueryMode::PerSection {
                results.extend(pos.map(|p| self.ids[p]));
            }
        }
        let retrieved: usize = blocks
            .iter()
            .map(|&blk| (self.keys.len() - blk * b).min(b))
            .sum();
        if mode == QueryMode::FullRange {
            for &blk in &blocks {
                for p in blk * b..((blk + 1) * b).min(self.keys.len()) {
                    if q.contains(self.point(p)) {
                        results.push(self.ids[p]);
                    }
                }
            }
        }
        results.sort_unstable();
        Ok(QueryOutcome {
            results,
            blocks: blocks.len(),
            retrieved,
        })
    }
}

/// Outcome of one simulated query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryOutcome {
    /// Original positions of the matching points, ascending.
    pub results: Vec<usize>,
    /// Distinct blocks accessed.
    pub blocks: usize,
    /// Points stored in the accessed blocks.
    pub retrieved: usize,
}

impl QueryOutcome {
    /// True positives over retrieved points; 1 when nothing was retrieved.
    pub fn precision(&self) -> f64 {
        if self.retrieved == 0 {
            1.0
        } else {
            self.results.len() as f64 / self.retrieved as f64
        }
    }
}

/// Positions of the points of `data` inside `q`, by linear scan.
pub fn linear_scan(data: &Dataset, q: &RangeQuery) -> Vec<usize> {
    data.points()
        .iter()
        .enumerate()
        .filter(|(_, p)| q.contains(p.coords()))
        .map(|(i, _)| i)
        .collect()
}

/// Per-query statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueryStat {
    /// Distinct blocks accessed.
    pub blocks: usize,
    /// Matching points.
    pub result_size: usize,
    /// True positives over retrieved points.
    pub precision: f64,
}

/// Block-access statistics of one curve over a workload.
#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    /// Curve label.
    pub curve: String,
    /// Execution mode.
    pub mode: QueryMode,
    /// One entry per query, in workload order.
    pub per_query: Vec<QueryStat>,
}

impl SimReport {
    /// Average blocks accessed per query.
    pub fn mean_blocks(&self) -> f64 {
        mean(self.per_query.iter().map(|s| s.blocks as f64))
    }

    /// Median blocks accessed per query.
    pub fn median_blocks(&self) -> f64 {
        let mut v: Vec<usize> = self.per_query.iter().map(|s| s.blocks).collect();
        v.sort_unstable();
        match v.len() {
            0 => 0.0,
            n if n % 2 == 1 => v[n / 2] as f64,
            n => (v[n / 2 - 1] + v[n / 2]) as f64 / 2.0,
        }
    }

    /// Average precision per query.
    pub fn mean_precision(&self) -> f64 {
        mean(self.per_query.iter().map(|s| s.precision))
    }
}

fn mean(values: impl ExactSizeIterator<Item = f64>) -> f64 {
    let n = values.len();
    if n == 0 {
        0.0
    } else {
        values.sum::<f64>() / n as f64
    }
}

/// Runs the workload against one index per curve. Fails if any two curves
/// disagree on a result set.
pub fn compare_curves(
    data: &Dataset,
    workload: &Workload,
    curves: &[(String, CurveOrder)],
    block_size: usize,
    mode: QueryMode,
    budget: u128,
) -> Result<Vec<SimReport>> {
    data.grid().ensure_same(&workload.grid())?;
    let mut reports = Vec::with_capacity(curves.len());
    let mut reference: Option<Vec<Vec<usize>>> = None;
    for (name, order) in curves {
        let index = OrderedIndex::build(data, order.clone(), block_size)?;
        let mut stats = Vec::with_capacity(workload.len());
        let mut sets = Vec::with_capacity(workload.len());
        for q in workload.queries() {
            let out = index.run_query(q, mode, budget)?;
            stats.push(QueryStat {
                blocks: out.blocks,
                result_size: out.results.len(),
                precision: out.precision(),
            });
            sets.push(out.results);
        }
        match &reference {
            Some(r) if *r != sets => return Err(Error::Invariant("curves disagree on query results")),
            Some(_) => {}
            None => reference = Some(sets),
        }
        reports.push(SimReport {
            curve: name.clone(),
            mode,
            per_query: stats,
        });
    }
    Ok(reports)
}

/// Builds a dataset of explicit points; a convenience for tests and tools.
pub fn dataset_from_coords(grid: Grid, coords: impl IntoIterator<Item = Vec<u64>>) -> Result<Dataset> {
    Dataset::new(grid, coords.into_iter().map(GridPoint::new).collect())
}
