//! Inferential statistics for the frame/engagement analysis: t-tests from
//! raw data or published summaries, chi-square tests of independence with
//! per-cell residual flags, the distribution functions behind their
//! p-values, and the descriptive tables.

use thiserror::Error;

use crate::model::Stars;

mod chisq;
mod dist;
pub mod special;
mod tables;
mod ttest;

pub use chisq::{chi_square_independence, RESIDUAL_CUTOFF};
pub use dist::{chi_square_cdf, chi_square_sf, t_cdf, t_two_sided_p};
pub use tables::{
    duration_histogram, format_percent, frequency_table, length_bin, percent_hundredths, tier_of,
    FrequencyRow, LengthBin, UserTier,
};
pub use ttest::{student_t_raw, student_t_summary, welch_t_raw, welch_t_summary};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("standard error is zero")]
    ZeroStandardError,
    #[error("domain error: {0}")]
    Domain(String),
    #[error("contingency table has a zero margin: {0}")]
    ZeroMargin(String),
    #[error("bad table shape: {0}")]
    Shape(String),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
}

/// `***` below .001, `**` below .01, `*` below .05.
pub fn stars(p: f64) -> Result<Stars, StatsError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(StatsError::Domain(format!("p-value {p} outside [0, 1]")));
    }
    Ok(if p < 0.001 {
        Stars::Three
    } else if p < 0.01 {
        Stars::Two
    } else if p < 0.05 {
        Stars::One
    } else {
        Stars::None
    })
}
