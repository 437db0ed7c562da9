//! Bit-merging curves and the mapping between grid cells and curve values.
//!
//! A curve is stored as its slot sequence in *rank* order: slot `r` holds the
//! dimension whose bit lands at bit position `r` of the curve value, so slot 0
//! is the least-significant (rightmost) bit. Text and JSON forms list slots
//! most-significant first, which is how curves are usually written
//! (`XYXYXY`).
//!
//! Bits of one dimension keep their relative order: the `j`-th occurrence of a
//! dimension counted from rank 0 carries bit `j` of that coordinate. This is
//! what makes every curve monotone in each coordinate.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};

/// One-dimensional key of a grid cell. Grids are capped at 64 total bits.
pub type CurveValue = u64;

const LETTERS: [char; 3] = ['X', 'Y', 'Z'];

/// Grid geometry: `dims` dimensions with `bits` bits per coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Grid {
    dims: usize,
    bits: u32,
}

impl Grid {
    /// Validates `d >= 1`, `l >= 1` and `d * l <= 64`.
    pub fn new(dims: usize, bits: u32) -> Result<Self> {
        if dims == 0 || bits == 0 || dims.saturating_mul(bits as usize) > 64 {
            return Err(Error::InvalidGrid { dims, bits });
        }
        Ok(Grid { dims, bits })
    }

    /// Number of dimensions `d`.
    pub fn dims(&self) -> usize {
        self.dims
    }

    /// Bits per dimension `l`.
    pub fn bits(&self) -> u32 {
        self.bits
    }

    /// `d * l`, the width of a curve value.
    pub fn total_bits(&self) -> u32 {
        self.dims as u32 * self.bits
    }

    /// Largest coordinate, `2^l - 1`.
    pub fn max_coord(&self) -> u64 {
        u64::MAX >> (64 - self.bits)
    }

    /// Number of columns per dimension, `2^l`.
    pub fn side(&self) -> u128 {
        1u128 << self.bits
    }

    /// Largest curve value, `2^(d*l) - 1`.
    pub fn max_value(&self) -> CurveValue {
        u64::MAX >> (64 - self.total_bits())
    }

    /// Number of cells, `2^(d*l)`.
    pub fn cell_count(&self) -> u128 {
        1u128 << self.total_bits()
    }

    /// Checks that `coords` names a cell of this grid.
    pub fn check_coords(&self, coords: &[u64]) -> Result<()> {
        if coords.len() != self.dims {
            return Err(Error::PointDimension {
                expected: self.dims,
                found: coords.len(),
            });
        }
        let max = self.max_coord();
        match coords.iter().position(|&c| c > max) {
            Some(dim) => Err(Error::CoordinateOutOfRange {
                dim,
                value: coords[dim],
                max,
            }),
            None => Ok(()),
        }
    }

    /// Builds a validated grid point.
    pub fn point(&self, coords: Vec<u64>) -> Result<GridPoint> {
        self.check_coords(&coords)?;
        Ok(GridPoint(coords))
    }

    /// Errors unless `other` has the same geometry.
    pub fn ensure_same(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GeometryMismatch {
                expected_dims: self.dims,
                expected_bits: self.bits,
                found_dims: other.dims,
                found_bits: other.bits,
            })
        }
    }
}

/// A cell of the grid, one coordinate per dimension.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GridPoint(pub(crate) Vec<u64>);

impl GridPoint {
    /// Wraps raw coordinates. Use [`Grid::point`] to validate them.
    pub fn new(coords: Vec<u64>) -> Self {
        GridPoint(coords)
    }

    /// Coordinates, dimension 0 first.
    pub fn coords(&self) -> &[u64] {
        &self.0
    }

    /// Consumes the point, returning its coordinates.
    pub fn into_coords(self) -> Vec<u64> {
        self.0
    }

    /// Componentwise `self <= other`.
    pub fn dominated_by(&self, other: &GridPoint) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }
}

impl From<Vec<u64>> for GridPoint {
    fn from(coords: Vec<u64>) -> Self {
        GridPoint(coords)
    }
}

/// Which standard curve to build with [`BmcSpec::standard`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveKind {
    /// Z-order: perfect interleaving, dimension 0 leading (`XYXY...`).
    ZOrder,
    /// Lexicographic (C-curve): all bits of dimension 0 most significant
    /// (`XX..YY..`).
    Lexicographic,
}

/// A bit-merging curve.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BmcSpec {
    grid: Grid,
    /// Dimension of each rank, least-significant first.
    slots: Vec<u8>,
    /// Bit index (within its dimension) carried by each rank.
    slot_bit: Vec<u8>,
    /// `ranks[dim * l + j]` is the rank of bit `j` of `dim`.
    ranks: Vec<u8>,
}

impl BmcSpec {
    /// Builds a curve from slots listed least-significant first.
    pub fn from_slots_lsb(grid: Grid, slots: Vec<u8>) -> Result<Self> {
        let expected = grid.total_bits() as usize;
        if slots.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                found: slots.len(),
            });
        }
        let bits = grid.bits() as usize;
        let mut seen = vec![0usize; grid.dims()];
        let mut slot_bit = Vec::with_capacity(expected);
        let mut ranks = vec![0u8; expected];
        for (rank, &dim) in slots.iter().enumerate() {
            let dim = dim as usize;
            if dim >= grid.dims() {
                return Err(Error::UnknownToken(format!("dimension {dim}")));
            }
            let j = seen[dim];
            if j >= bits {
                return Err(Error::DimensionCount {
                    dim,
                    expected: bits,
                    found: slots.iter().filter(|&&s| s as usize == dim).count(),
                });
            }
            seen[dim] += 1;
            slot_bit.push(j as u8);
            ranks[dim * bits + j] = rank as u8;
        }
        if let Some(dim) = seen.iter().position(|&c| c != bits) {
            return Err(Error::DimensionCount {
                dim,
                expected: bits,
                found: seen[dim],
            });
        }
        Ok(BmcSpec {
            grid,
            slots,
            slot_bit,
            ranks,
        })
    }

    /// Builds a curve from slots listed most-significant first.
    pub fn from_slots_msb(grid: Grid, mut slots: Vec<u8>) -> Result<Self> {
        slots.reverse();
        Self::from_slots_lsb(grid, slots)
    }

    /// Parses the text form: `XYXYXY` for `d <= 3`, or dotted tokens
    /// `d0.d1.d0...` for any `d`. The leftmost token is the most significant.
    pub fn parse(text: &str, dims: usize, bits: u32) -> Result<Self> {
        let grid = Grid::new(dims, bits)?;
        let text = text.trim();
        let mut slots = Vec::with_capacity(grid.total_bits() as usize);
        if text.contains('.') || dims > LETTERS.len() {
            for token in text.split('.') {
                slots.push(parse_token(token, dims)?);
            }
        } else {
            for c in text.chars() {
                let dim = LETTERS
                    .iter()
                    .position(|l| *l == c.to_ascii_uppercase())
                    .filter(|&d| d < dims)
                    .ok_or_else(|| Error::UnknownToken(c.to_string()))?;
                slots.push(dim as u8);
            }
        }
        Self::from_slots_msb(grid, slots)
    }

    /// Text form accepted by [`BmcSpec::parse`].
    pub fn render(&self) -> String {
        let mut out = String::new();
        let dotted = self.grid.dims() > LETTERS.len();
        for (i, &dim) in self.slots.iter().rev().enumerate() {
            if dotted {
                if i > 0 {
                    out.push('.');
                }
                out.push_str(&format!("d{dim}"));
            } else {
                out.push(LETTERS[dim as usize]);
            }
        }
        out
    }

    /// Z-order or lexicographic curve with dimension 0 leading.
    pub fn standard(kind: CurveKind, grid: Grid) -> Self {
        match kind {
            CurveKind::ZOrder => Self::z_order(grid),
            CurveKind::Lexicographic => Self::lexicographic(grid, 0),
        }
    }

    /// Perfect interleaving, dimension 0 most significant in every group.
    pub fn z_order(grid: Grid) -> Self {
        let d = grid.dims();
        let slots = (0..grid.total_bits() as usize)
            .map(|r| (d - 1 - r % d) as u8)
            .collect();
        Self::from_slots_lsb(grid, slots).expect("z-order is a valid curve")
    }

    /// All bits of `leading` most significant, then the remaining dimensions
    /// in ascending order. `leading` is taken modulo `d`.
    pub fn lexicographic(grid: Grid, leading: usize) -> Self {
        let d = grid.dims();
        let leading = leading % d;
        let order = core::iter::once(leading).chain((0..d).filter(|&x| x != leading));
        let mut msb = Vec::with_capacity(grid.total_bits() as usize);
        for dim in order {
            msb.extend(core::iter::repeat_n(dim as u8, grid.bits() as usize));
        }
        Self::from_slots_msb(grid, msb).expect("lexicographic is a valid curve")
    }

    /// Grid geometry of the curve.
    pub fn grid(&self) -> Grid {
        self.grid
    }

    /// Slot dimensions, least-significant rank first.
    pub fn slots_lsb(&self) -> &[u8] {
        &self.slots
    }

    /// Slot dimensions, most-significant rank first.
    pub fn slots_msb(&self) -> Vec<u8> {
        self.slots.iter().rev().copied().collect()
    }

    /// Rank of bit `bit` (0-indexed from the least-significant) of `dim`.
    pub fn rank(&self, dim: usize, bit: u32) -> u32 {
        self.ranks[dim * self.grid.bits() as usize + bit as usize] as u32
    }

    /// Curve value of a validated point.
    pub fn value(&self, p: &GridPoint) -> Result<CurveValue> {
        self.grid.check_coords(&p.0)?;
        Ok(self.value_of(&p.0))
    }

    /// Curve value of raw coordinates. The caller guarantees they are on the
    /// grid.
    #[inline]
    pub fn value_of(&self, coords: &[u64]) -> CurveValue {
        let bits = self.grid.bits() as usize;
        let mut v = 0u64;
        for (dim, &c) in coords.iter().enumerate() {
            let ranks = &self.ranks[dim * bits..(dim + 1) * bits];
            let mut rest = c;
            while rest != 0 {
                let j = rest.trailing_zeros() as usize;
                v |= 1u64 << ranks[j];
                rest &= rest - 1;
            }
        }
        v
    }

    /// Inverse of [`BmcSpec::value`].
    pub fn decode(&self, value: CurveValue) -> Result<GridPoint> {
        if value > self.grid.max_value() {
            return Err(Error::ValueOutOfRange(value));
        }
        let mut coords = vec![0u64; self.grid.dims()];
        let mut rest = value;
        while rest != 0 {
            let r = rest.trailing_zeros() as usize;
            coords[self.slots[r] as usize] |= 1u64 << self.slot_bit[r];
            rest &= rest - 1;
        }
        Ok(GridPoint(coords))
    }

    /// Swaps the slots at ranks `lower` and `lower + 1`.
    pub fn swap_adjacent(&self, lower: usize) -> Result<BmcSpec> {
        if lower + 1 >= self.slots.len() {
            return Err(Error::InvalidParameter(format!(
                "swap position {lower} outside [0, {})",
                self.slots.len() - 1
            )));
        }
        if self.slots[lower] == self.slots[lower + 1] {
            return Err(Error::SameDimensionSwap(lower + 1));
        }
        let mut slots = self.slots.clone();
        slots.swap(lower, lower + 1);
        BmcSpec::from_slots_lsb(self.grid, slots)
    }
}

impl fmt::Display for BmcSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

fn parse_token(token: &str, dims: usize) -> Result<u8> {
    let unknown = || Error::UnknownToken(token.to_string());
    let token = token.trim();
    if let Some(num) = token.strip_prefix('d').or_else(|| token.strip_prefix('D')) {
        let dim: usize = num.parse().map_err(|_| unknown())?;
        return if dim < dims { Ok(dim as u8) } else { Err(unknown()) };
    }
    let mut chars = token.chars();
    match (chars.next(), chars.next()) {
        (Some(c), None) => LETTERS
            .iter()
            .position(|l| *l == c.to_ascii_uppercase())
            .filter(|&d| d < dims)
            .map(|d| d as u8)
            .ok_or_else(unknown),
        _ => Err(unknown()),
    }
}

/// Every valid curve for `grid`, in lexicographic order of the MSB-first
/// slot sequence. There are `(d*l)! / (l!)^d` of them.
pub fn all_curves(grid: Grid) -> AllCurves {
    let d = grid.dims();
    let mut first = Vec::with_capacity(grid.total_bits() as usize);
    for dim in 0..d {
        first.extend(core::iter::repeat_n(dim as u8, grid.bits() as usize));
    }
    AllCurves {
        grid,
        next: Some(first),
    }
}

/// Number of distinct curves on `grid`, `(d*l)! / (l!)^d`, if it fits in
/// `u128`.
pub fn curve_count(grid: Grid) -> Option<u128> {
    // Product of binomials C(k*l, l) for k = 1..d.
    let l = grid.bits() as u128;
    let mut total: u128 = 1;
    for k in 1..=grid.dims() as u128 {
        total = total.checked_mul(binomial(k * l, l)?)?;
    }
    Some(total)
}

fn binomial(n: u128, k: u128) -> Option<u128> {
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul(n - i)? / (i + 1);
    }
    Some(acc)
}

/// Iterator returned by [`all_curves`].
#[derive(Debug, Clone)]
pub struct AllCurves {
    grid: Grid,
    next: Option<Vec<u8>>,
}

impl Iterator for AllCurves {
    type Item = BmcSpec;

    fn next(&mut self) -> Option<BmcSpec> {
        let current = self.next.take()?;
        let mut successor = current.clone();
        if next_permutation(&mut successor) {
            self.next = Some(successor);
        }
        Some(BmcSpec::from_slots_msb(self.grid, current).expect("permutation of a valid curve"))
    }
}

fn next_permutation(v: &mut [u8]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}
