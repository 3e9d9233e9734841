//! Chi-square test of independence with adjusted standardized residuals.

use crate::model::{CellFlag, ChiSquareCell, ChiSquareResult};

use super::dist::chi_square_sf;
use super::{stars, StatsError};

/// Two-sided 5% critical value of the standard normal.
pub const RESIDUAL_CUTOFF: f64 = 1.96;

/// `observed` is row-major; every row must have the same length.
pub fn chi_square_independence(observed: &[Vec<u64>]) -> Result<ChiSquareResult, StatsError> {
    let r = observed.len();
    let c = observed.first().map_or(0, Vec::len);
    if r < 2 || c < 2 {
        return Err(StatsError::Shape(format!("need at least 2x2, got {r}x{c}")));
    }
    if let Some(i) = observed.iter().position(|row| row.len() != c) {
        return Err(StatsError::Shape(format!(
            "row {i} has {} columns, expected {c}",
            observed[i].len()
        )));
    }
    let row_sums: Vec<u64> = observed.iter().map(|row| row.iter().sum()).collect();
    let col_sums: Vec<u64> = (0..c)
        .map(|j| observed.iter().map(|row| row[j]).sum())
        .collect();
    if let Some(i) = row_sums.iter().position(|&s| s == 0) {
        return Err(StatsError::ZeroMargin(format!("row {i}")));
    }
    if let Some(j) = col_sums.iter().position(|&s| s == 0) {
        return Err(StatsError::ZeroMargin(format!("column {j}")));
    }
    let n = row_sums.iter().sum::<u64>() as f64;

    let mut chi2 = 0.0;
    let mut cells = Vec::with_capacity(r);
    for (i, row) in observed.iter().enumerate() {
        let ri = row_sums[i] as f64;
        let mut out = Vec::with_capacity(c);
        for (j, &o) in row.iter().enumerate() {
            let cj = col_sums[j] as f64;
            let expected = ri * cj / n;
            let diff = o as f64 - expected;
            chi2 += diff * diff / expected;
            let var = expected * (1.0 - ri / n) * (1.0 - cj / n);
            let adj_residual = diff / var.sqrt();
            let flag = if adj_residual > RESIDUAL_CUTOFF {
                CellFlag::Above
            } else if adj_residual < -RESIDUAL_CUTOFF {
                CellFlag::Below
            } else {
                CellFlag::None
            };
            out.push(ChiSquareCell {
                observed: o,
                expected,
                adj_residual,
                flag,
            });
        }
        cells.push(out);
    }
    let df = ((r - 1) * (c - 1)) as u32;
    let p = chi_square_sf(chi2, df)?;
    Ok(ChiSquareResult {
        chi2,
        df,
        p,
        stars: stars(p)?,
        cells,
    })
}
