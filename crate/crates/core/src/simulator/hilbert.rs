//! Hilbert curve index via Skilling's transpose construction (Gray code plus
//! per-level rotations and reflections).

use alloc::vec::Vec;

use crate::curve::{CurveValue, Grid};
use crate::error::{Error, Result};

/// Hilbert index of `coords` on a grid with `bits` bits per dimension.
/// `coords.len() * bits` must not exceed 64.
pub fn hilbert_index(coords: &[u64], bits: u32) -> CurveValue {
    let n = coords.len();
    let mut x: Vec<u64> = coords.to_vec();
    let top = 1u64 << (bits - 1);
    // Undo excess work: rotate/reflect level by level.
    let mut q = top;
    while q > 1 {
        let p = q - 1;
        for i in 0..n {
            if x[i] & q != 0 {
                x[0] ^= p;
            } else {
                let t = (x[0] ^ x[i]) & p;
                x[0] ^= t;
                x[i] ^= t;
            }
        }
        q >>= 1;
    }
    // Gray encode.
    for i in 1..n {
        x[i] ^= x[i - 1];
    }
    let mut t = 0;
    let mut q = top;
    while q > 1 {
        if x[n - 1] & q != 0 {
            t ^= q - 1;
        }
        q >>= 1;
    }
    for xi in &mut x {
        *xi ^= t;
    }
    // Interleave the transposed form, dimension 0 most significant.
    let mut h = 0u64;
    for b in (0..bits).rev() {
        for xi in &x {
            h = (h << 1) | (xi >> b & 1);
        }
    }
    h
}

/// Hilbert keys of every point, for `d` in `{2, 3}`.
pub fn hilbert_order(grid: Grid, points: &[crate::curve::GridPoint]) -> Result<Vec<CurveValue>> {
    check_dims(grid)?;
    Ok(points
        .iter()
        .map(|p| hilbert_index(p.coords(), grid.bits()))
        .collect())
}

pub(crate) fn check_dims(grid: Grid) -> Result<()> {
    if !(2..=3).contains(&grid.dims()) {
        return Err(Error::InvalidParameter(alloc::format!(
            "Hilbert ordering supports d in {{2, 3}}, got {}",
            grid.dims()
        )));
    }
    Ok(())
}
