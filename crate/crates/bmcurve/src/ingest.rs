//! Loading raw floating-point point files onto a grid.

use std::path::Path;

use bmcurve_core::workload::Quantizer;
use bmcurve_core::{Dataset, Grid};

use crate::error::Result;
use crate::formats::csv_error;

/// Points loaded from a raw file.
#[derive(Debug, Clone, PartialEq)]
pub struct Ingested {
    /// Quantized points, in file order.
    pub dataset: Dataset,
    /// Rows dropped for missing, non-numeric, NaN or out-of-bounds fields.
    pub dropped: usize,
    /// Bounds used for quantization.
    pub bounds: Vec<(f64, f64)>,
}

fn read_rows(path: &Path, dims: usize) -> Result<Vec<Option<Vec<f64>>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let fields: Vec<Option<f64>> = (0..dims)
            .map(|k| record.get(k).and_then(|f| f.parse::<f64>().ok()).filter(|x| !x.is_nan()))
            .collect();
        // A fully non-numeric first row is a header.
        if i == 0 && record.iter().all(|f| f.parse::<f64>().is_err()) {
            continue;
        }
        rows.push(fields.into_iter().collect());
    }
    Ok(rows)
}

/// Per-dimension minimum and maximum over the complete rows of a file.
pub fn scan_bounds(path: &Path, dims: usize) -> Result<Vec<(f64, f64)>> {
    let mut bounds = vec![(f64::INFINITY, f64::NEG_INFINITY); dims];
    for row in read_rows(path, dims)?.into_iter().flatten() {
        for (b, x) in bounds.iter_mut().zip(row) {
            if x.is_finite() {
                *b = (b.0.min(x), b.1.max(x));
            }
        }
    }
    Ok(bounds)
}

/// Reads the first `d` numeric fields of every CSV row and maps them onto
/// `grid` with `floor((x - min) / (max - min) * (2^l - 1))`. Bounds default
/// to the file's own extent.
pub fn load_points(path: &Path, grid: Grid, bounds: Option<Vec<(f64, f64)>>) -> Result<Ingested> {
    let bounds = match bounds {
        Some(b) => b,
        None => scan_bounds(path, grid.dims())?,
    };
    let quantizer = Quantizer::new(grid, &bounds)?;
    let mut points = Vec::new();
    let mut dropped = 0;
    for row in read_rows(path, grid.dims())? {
        match row.and_then(|r| quantizer.quantize(&r)) {
            Some(p) => points.push(p),
            None => dropped += 1,
        }
    }
    Ok(Ingested {
        dataset: Dataset::new(grid, points)?,
        dropped,
        bounds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::CliError;

    fn file(text: &str) -> (tempfile::TempDir, std::path::PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("raw.csv");
        std::fs::write(&path, text).unwrap();
        (dir, path)
    }

    #[test]
    fn quantizes_and_counts_drops() {
        let (_dir, path) = file("lon,lat\n0.0,10\n1.0,20\n0.5,15\n,12\nNaN,11\n0.2,abc\n2.0,15\n");
        let g = Grid::new(2, 10).unwrap();
        let got = load_points(&path, g, Some(vec![(0.0, 1.0), (10.0, 20.0)])).unwrap();
        let coords: Vec<&[u64]> = got.dataset.points().iter().map(|p| p.coords()).collect();
        assert_eq!(coords, [&[0, 0][..], &[1023, 1023], &[511, 511]]);
        assert_eq!(got.dropped, 4);
    }

    #[test]
    fn bounds_default_to_extent() {
        let (_dir, path) = file("3,7\n5,9\n4,x\n");
        let g = Grid::new(2, 2).unwrap();
        let got = load_points(&path, g, None).unwrap();
        assert_eq!(got.bounds, [(3.0, 5.0), (7.0, 9.0)]);
        assert_eq!(got.dataset.len(), 2);
        assert_eq!(got.dropped, 1);
    }

    #[test]
    fn zero_width_bounds_fail() {
        let (_dir, path) = file("1,1\n1,2\n");
        let g = Grid::new(2, 2).unwrap();
        assert!(load_points(&path, g, None).is_err());
    }

    #[test]
    fn missing_file_is_io() {
        let g = Grid::new(2, 2).unwrap();
        let err = load_points(Path::new("/nonexistent/raw.csv"), g, Some(vec![(0.0, 1.0); 2])).unwrap_err();
        assert!(matches!(err, CliError::Io { .. }));
        assert_eq!(err.exit_code(), 3);
    }
}
