//! Range queries, datasets and the synthetic generators for both.

use alloc::format;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::curve::{Grid, GridPoint};
use crate::error::{Error, Result};

/// Axis-aligned range query with closed intervals `[lo[i], hi[i]]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RangeQuery {
    lo: GridPoint,
    hi: GridPoint,
}

impl RangeQuery {
    /// Validates both corners against `grid` and `lo <= hi` componentwise.
    pub fn new(grid: &Grid, lo: Vec<u64>, hi: Vec<u64>) -> Result<Self> {
        grid.check_coords(&lo)?;
        grid.check_coords(&hi)?;
        if let Some(dim) = lo.iter().zip(&hi).position(|(a, b)| a > b) {
            return Err(Error::InvertedQuery(dim));
        }
        Ok(RangeQuery {
            lo: GridPoint(lo),
            hi: GridPoint(hi),
        })
    }

    /// The query covering every cell of `grid`.
    pub fn full(grid: &Grid) -> Self {
        RangeQuery {
            lo: GridPoint(alloc::vec![0; grid.dims()]),
            hi: GridPoint(alloc::vec![grid.max_coord(); grid.dims()]),
        }
    }

    /// Lower corner `p_s`.
    pub fn lo(&self) -> &GridPoint {
        &self.lo
    }

    /// Upper corner `p_e`.
    pub fn hi(&self) -> &GridPoint {
        &self.hi
    }

    /// Number of dimensions.
    pub fn dims(&self) -> usize {
        self.lo.0.len()
    }

    /// Closed interval of dimension `dim`.
    pub fn interval(&self, dim: usize) -> (u64, u64) {
        (self.lo.0[dim], self.hi.0[dim])
    }

    /// Number of cells `V(q)`, the product of the interval lengths.
    pub fn cell_count(&self) -> u128 {
        self.lo
            .0
            .iter()
            .zip(&self.hi.0)
            .map(|(&a, &b)| (b - a) as u128 + 1)
            .product()
    }

    /// Whether the cell lies inside the query.
    #[inline]
    pub fn contains(&self, coords: &[u64]) -> bool {
        coords
            .iter()
            .zip(self.lo.0.iter().zip(&self.hi.0))
            .all(|(c, (a, b))| a <= c && c <= b)
    }
}

/// A set of range queries sharing one grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Workload {
    grid: Grid,
    queries: Vec<RangeQuery>,
}

impl Workload {
    /// Checks every query against `grid`.
    pub fn new(grid: Grid, queries: Vec<RangeQuery>) -> Result<Self> {
        for q in &queries {
            grid.check_coords(q.lo.coords())?;
            grid.check_coords(q.hi.coords())?;
        }
        Ok(Workload { grid, queries })
    }

    /// Grid of the workload.
    pub fn grid(&self) -> Grid {
        self.grid
    }

    /// The queries.
    pub fn queries(&self) -> &[RangeQuery] {
        &self.queries
    }

    /// Number of queries `n`.
    pub fn len(&self) -> usize {
        self.queries.len()
    }

    /// Whether the workload has no queries.
    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }

    /// Total number of cells over all queries.
    pub fn total_cells(&self) -> u128 {
        self.queries.iter().map(RangeQuery::cell_count).sum()
    }
}

/// A set of points on one grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    grid: Grid,
    points: Vec<GridPoint>,
}

impl Dataset {
    /// Checks every point against `grid`.
    pub fn new(grid: Grid, points: Vec<GridPoint>) -> Result<Self> {
        for p in &points {
            grid.check_coords(p.coords())?;
        }
        Ok(Dataset { grid, points })
    }

    /// Grid of the dataset.
    pub fn grid(&self) -> Grid {
        self.grid
    }

    /// The points, in insertion order.
    pub fn points(&self) -> &[GridPoint] {
        &self.points
    }

    /// Cardinality `N`.
    pub fn len(&self) -> usize {
        self.points.len()
    }

    /// Whether there are no points.
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// The first `n` points (or all of them).
    pub fn prefix(&self, n: usize) -> Dataset {
        Dataset {
            grid: self.grid,
            points: self.points[..n.min(self.points.len())].to_vec(),
        }
    }
}

/// Synthetic point distributions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataKind {
    /// Coordinates i.i.d. uniform over the grid.
    Uniform,
    /// Mixture of Gaussian clusters.
    Skewed,
}

/// Number of clusters in the skewed distribution.
pub const SKEW_CLUSTERS: usize = 5;

/// Generates `n >= 1` points. Deterministic for a given seed.
///
/// The skewed distribution draws [`SKEW_CLUSTERS`] centers uniformly over the
/// grid; each point picks a cluster uniformly and draws every coordinate from
/// a normal with standard deviation `2^l / 64` around the center, redrawing
/// until it lands on the grid.
pub fn gen_dataset(kind: DataKind, n: usize, grid: Grid, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::InvalidParameter("dataset size must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = grid.dims();
    let max = grid.max_coord();
    let mut points = Vec::with_capacity(n);
    match kind {
        DataKind::Uniform => {
            for _ in 0..n {
                points.push(GridPoint((0..d).map(|_| rng.random_range(0..=max)).collect()));
            }
        }
        DataKind::Skewed => {
            let top = max as f64;
            let std = grid.side() as f64 / 64.0;
            let centers: Vec<Vec<f64>> = (0..SKEW_CLUSTERS)
                .map(|_| (0..d).map(|_| rng.random_range(0.0..=top)).collect())
                .collect();
            for _ in 0..n {
                let center = &centers[rng.random_range(0..SKEW_CLUSTERS)];
                let coords = center
                    .iter()
                    .map(|&mu| {
                        let normal = Normal::new(mu, std).expect("positive deviation");
                        loop {
                            let x = libm::floor(normal.sample(&mut rng));
                            if (0.0..=top).contains(&x) {
                                break x as u64;
                            }
                        }
                    })
                    .collect();
                points.push(GridPoint(coords));
            }
        }
    }
    Ok(Dataset { grid, points })
}

/// Query extents for [`gen_queries`].
#[derive(Debug, Clone, PartialEq)]
pub enum QueryShape {
    /// Explicit edge length per dimension.
    Edges(Vec<u64>),
    /// Two-dimensional queries of fixed area whose sides have the ratio
    /// `ratio.0 : ratio.1` (dimension 0 : dimension 1).
    Aspect {
        /// Cells per query.
        area: u64,
        /// Side ratio, dimension 0 first.
        ratio: (u64, u64),
    },
}

impl QueryShape {
    /// Resolves the shape into one edge length per dimension.
    pub fn edges(&self, grid: &Grid) -> Result<Vec<u64>> {
        let edges = match self {
            QueryShape::Edges(e) => {
                if e.len() != grid.dims() {
                    return Err(Error::PointDimension {
                        expected: grid.dims(),
                        found: e.len(),
                    });
                }
                e.clone()
            }
            QueryShape::Aspect { area, ratio } => {
                if grid.dims() != 2 {
                    return Err(Error::InvalidParameter(
                        "aspect-ratio queries need d = 2".into(),
                    ));
                }
                if *area == 0 || ratio.0 == 0 || ratio.1 == 0 {
                    return Err(Error::InvalidParameter(
                        "area and ratio must be positive".into(),
                    ));
                }
                let x = libm::round(libm::sqrt(*area as f64 * ratio.0 as f64 / ratio.1 as f64))
                    .max(1.0) as u64;
                let y = libm::round(*area as f64 / x as f64).max(1.0) as u64;
                alloc::vec![x, y]
            }
        };
        let side = grid.side();
        if let Some(dim) = edges.iter().position(|&e| e == 0 || e as u128 > side) {
            return Err(Error::InvalidParameter(format!(
                "edge {} in dimension {dim} is outside [1, {side}]",
                edges[dim]
            )));
        }
        Ok(edges)
    }
}

/// Generates `n` queries of uniform size centered on points drawn from
/// `source`. Queries that would cross the border are shifted back inside, so
/// every query keeps its full extent.
pub fn gen_queries(source: &Dataset, n: usize, shape: &QueryShape, seed: u64) -> Result<Workload> {
    let grid = source.grid;
    let edges = shape.edges(&grid)?;
    if source.is_empty() {
        return Err(Error::InvalidParameter("cannot center queries on an empty dataset".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let max = grid.max_coord();
    let queries = (0..n)
        .map(|_| {
            let center = &source.points[rng.random_range(0..source.len())];
            let (lo, hi) = center
                .0
                .iter()
                .zip(&edges)
                .map(|(&c, &e)| {
                    let lo = c.saturating_sub(e / 2).min(max - (e - 1));
                    (lo, lo + (e - 1))
                })
                .unzip();
            RangeQuery {
                lo: GridPoint(lo),
                hi: GridPoint(hi),
            }
        })
        .collect();
    Ok(Workload { grid, queries })
}

/// Maps raw coordinates into grid columns:
/// `floor((x - min) / (max - min) * (2^l - 1))`.
#[derive(Debug, Clone, PartialEq)]
pub struct Quantizer {
    grid: Grid,
    min: Vec<f64>,
    max: Vec<f64>,
}

impl Quantizer {
    /// One `(min, max)` pair per dimension; each range must have positive
    /// width.
    pub fn new(grid: Grid, bounds: &[(f64, f64)]) -> Result<Self> {
        if bounds.len() != grid.dims() {
            return Err(Error::PointDimension {
                expected: grid.dims(),
                found: bounds.len(),
            });
        }
        if let Some(dim) = bounds
            .iter()
            .position(|(lo, hi)| !(lo.is_finite() && hi.is_finite() && hi > lo))
        {
            return Err(Error::InvalidParameter(format!(
                "bounds of dimension {dim} must be finite with max > min"
            )));
        }
        Ok(Quantizer {
            grid,
            min: bounds.iter().map(|b| b.0).collect(),
            max: bounds.iter().map(|b| b.1).collect(),
        })
    }

    /// Grid the quantizer maps into.
    pub fn grid(&self) -> Grid {
        self.grid
    }

    /// `None` for NaN or out-of-bounds values.
    pub fn quantize(&self, raw: &[f64]) -> Option<GridPoint> {
        if raw.len() != self.grid.dims() {
            return None;
        }
        let top = self.grid.max_coord();
        let scale = top as f64;
        raw.iter()
            .zip(self.min.iter().zip(&self.max))
            .map(|(&x, (&lo, &hi))| {
                if !(lo..=hi).contains(&x) {
                    return None;
                }
                let c = libm::floor((x - lo) / (hi - lo) * scale);
                Some((c as u64).min(top))
            })
            .collect::<Option<Vec<u64>>>()
            .map(GridPoint)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(d: usize, l: u32) -> Grid {
        Grid::new(d, l).unwrap()
    }

    #[test]
    fn cell_counts() {
        let g = grid(2, 3);
        assert_eq!(RangeQuery::new(&g, vec![0, 2], vec![4, 3]).unwrap().cell_count(), 10);
        assert_eq!(RangeQuery::new(&g, vec![5, 5], vec![5, 5]).unwrap().cell_count(), 1);
        assert_eq!(RangeQuery::full(&g).cell_count(), 64);
    }

    #[test]
    fn query_validation() {
        let g = grid(2, 3);
        assert_eq!(RangeQuery::new(&g, vec![3, 0], vec![2, 1]), Err(Error::InvertedQuery(0)));
        assert!(RangeQuery::new(&g, vec![0, 0], vec![8, 1]).is_err());
    }

    fn mean_var(ds: &Dataset, dim: usize) -> (f64, f64) {
        let n = ds.len() as f64;
        let mean = ds.points().iter().map(|p| p.coords()[dim] as f64).sum::<f64>() / n;
        let var = ds
            .points()
            .iter()
            .map(|p| (p.coords()[dim] as f64 - mean).powi(2))
            .sum::<f64>()
            / (n - 1.0);
        (mean, var)
    }

    #[test]
    fn uniform_mean_is_centered() {
        let g = grid(2, 10);
        let ds = gen_dataset(DataKind::Uniform, 10_000, g, 7).unwrap();
        for dim in 0..2 {
            let (mean, _) = mean_var(&ds, dim);
            assert!((mean - 512.0).abs() / 512.0 < 0.03, "mean {mean}");
        }
    }

    fn occupied_tiles(ds: &Dataset) -> usize {
        let mut seen = std::collections::HashSet::new();
        for p in ds.points() {
            seen.insert((p.coords()[0] / 64, p.coords()[1] / 64));
        }
        seen.len()
    }

    #[test]
    fn skew_concentrates_points() {
        let g = grid(2, 10);
        for seed in 0..4 {
            let uni = gen_dataset(DataKind::Uniform, 10_000, g, seed).unwrap();
            let skew = gen_dataset(DataKind::Skewed, 10_000, g, seed).unwrap();
            assert_eq!(occupied_tiles(&uni), 256);
            assert!(occupied_tiles(&skew) < 80, "seed {seed}: {}", occupied_tiles(&skew));
        }
    }

    #[test]
    fn generators_are_deterministic() {
        let g = grid(3, 8);
        let a = gen_dataset(DataKind::Skewed, 500, g, 11).unwrap();
        let b = gen_dataset(DataKind::Skewed, 500, g, 11).unwrap();
        assert_eq!(a, b);
        let shape = QueryShape::Edges(vec![4, 8, 16]);
        assert_eq!(gen_queries(&a, 50, &shape, 3).unwrap(), gen_queries(&b, 50, &shape, 3).unwrap());
        assert_ne!(a, gen_dataset(DataKind::Skewed, 500, g, 12).unwrap());
    }

    #[test]
    fn single_point_dataset() {
        let ds = gen_dataset(DataKind::Uniform, 1, grid(2, 4), 0).unwrap();
        assert_eq!(ds.len(), 1);
        assert!(gen_dataset(DataKind::Uniform, 0, grid(2, 4), 0).is_err());
    }

    #[test]
    fn full_edge_gives_full_grid() {
        let g = grid(2, 5);
        let ds = gen_dataset(DataKind::Uniform, 10, g, 1).unwrap();
        let w = gen_queries(&ds, 1, &QueryShape::Edges(vec![32, 32]), 0).unwrap();
        assert_eq!(w.queries()[0], RangeQuery::full(&g));
        assert!(gen_queries(&ds, 1, &QueryShape::Edges(vec![33, 1]), 0).is_err());
        assert!(gen_queries(&ds, 1, &QueryShape::Edges(vec![0, 1]), 0).is_err());
    }

    #[test]
    fn aspect_ratio_sides() {
        let g = grid(2, 10);
        let edges = |rx, ry| {
            QueryShape::Aspect {
                area: 4096,
                ratio: (rx, ry),
            }
            .edges(&g)
            .unwrap()
        };
        assert_eq!(edges(1, 1), vec![64, 64]);
        assert_eq!(edges(16, 1), vec![256, 16]);
        assert_eq!(edges(4, 1), vec![128, 32]);
        assert_eq!(edges(1, 16), vec![16, 256]);
        assert!(QueryShape::Aspect { area: 4096, ratio: (1, 1) }.edges(&grid(3, 10)).is_err());
    }

    #[test]
    fn queries_stay_inside_with_exact_extent() {
        let g = grid(2, 6);
        let ds = gen_dataset(DataKind::Skewed, 200, g, 5).unwrap();
        let w = gen_queries(&ds, 300, &QueryShape::Edges(vec![20, 3]), 9).unwrap();
        assert_eq!(w.len(), 300);
        for q in w.queries() {
            assert_eq!(q.interval(0).1 - q.interval(0).0 + 1, 20);
            assert_eq!(q.interval(1).1 - q.interval(1).0 + 1, 3);
            assert!(q.hi().coords().iter().all(|&c| c <= 63));
        }
    }

    #[test]
    fn quantizer_examples() {
        let g = grid(2, 10);
        let qz = Quantizer::new(g, &[(0.0, 10.0), (-5.0, 5.0)]).unwrap();
        assert_eq!(qz.quantize(&[0.0, -5.0]).unwrap().coords(), &[0, 0]);
        assert_eq!(qz.quantize(&[10.0, 5.0]).unwrap().coords(), &[1023, 1023]);
        assert_eq!(qz.quantize(&[5.0, 0.0]).unwrap().coords(), &[511, 511]);
        assert_eq!(qz.quantize(&[f64::NAN, 0.0]), None);
        assert_eq!(qz.quantize(&[11.0, 0.0]), None);
        assert!(Quantizer::new(g, &[(1.0, 1.0), (0.0, 1.0)]).is_err());
    }
}
