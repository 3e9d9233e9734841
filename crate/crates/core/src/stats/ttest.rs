//! Two-sample t-tests from raw observations or from published summaries.

use crate::model::{GroupSummary, TTestResult};

use super::dist::t_two_sided_p;
use super::{stars, StatsError};

fn check_summary(label: &str, g: &GroupSummary) -> Result<(), StatsError> {
    if g.n < 2 {
        return Err(StatsError::InsufficientData(format!(
            "group {label} has n = {}, need at least 2",
            g.n
        )));
    }
    if !(g.sd.is_finite() && g.sd >= 0.0 && g.mean.is_finite()) {
        return Err(StatsError::Domain(format!(
            "group {label} has a non-finite summary"
        )));
    }
    Ok(())
}

fn finish(t: f64, df: f64) -> Result<TTestResult, StatsError> {
    let p = t_two_sided_p(t, df)?;
    Ok(TTestResult {
        t,
        df,
        p,
        stars: stars(p)?,
    })
}

/// Welch's unequal-variance t-test with Welch–Satterthwaite degrees of
/// freedom; `t` is positive when group `a` has the larger mean.
pub fn welch_t_summary(a: &GroupSummary, b: &GroupSummary) -> Result<TTestResult, StatsError> {
    check_summary("a", a)?;
    check_summary("b", b)?;
    let (na, nb) = (a.n as f64, b.n as f64);
    let va = a.sd * a.sd / na;
    let vb = b.sd * b.sd / nb;
    let se2 = va + vb;
    if se2 <= 0.0 {
        return Err(StatsError::ZeroStandardError);
    }
    let t = (a.mean - b.mean) / se2.sqrt();
    let df = se2 * se2 / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
    finish(t, df)
}

/// Student's pooled-variance t-test, `df = n_a + n_b - 2`.
pub fn student_t_summary(a: &GroupSummary, b: &GroupSummary) -> Result<TTestResult, StatsError> {
    check_summary("a", a)?;
    check_summary("b", b)?;
    let (na, nb) = (a.n as f64, b.n as f64);
    let df = na + nb - 2.0;
    let pooled = ((na - 1.0) * a.sd * a.sd + (nb - 1.0) * b.sd * b.sd) / df;
    let se2 = pooled * (1.0 / na + 1.0 / nb);
    if se2 <= 0.0 {
        return Err(StatsError::ZeroStandardError);
    }
    finish((a.mean - b.mean) / se2.sqrt(), df)
}

fn summarize(label: &str, xs: &[f64]) -> Result<GroupSummary, StatsError> {
    if xs.len() < 2 {
        return Err(StatsError::InsufficientData(format!(
            "sample {label} has {} value(s), need at least 2",
            xs.len()
        )));
    }
    GroupSummary::from_values(xs).ok_or_else(|| StatsError::InsufficientData(label.into()))
}

pub fn welch_t_raw(a: &[f64], b: &[f64]) -> Result<TTestResult, StatsError> {
    welch_t_summary(&summarize("a", a)?, &summarize("b", b)?)
}

pub fn student_t_raw(a: &[f64], b: &[f64]) -> Result<TTestResult, StatsError> {
    student_t_summary(&summarize("a", a)?, &summarize("b", b)?)
}
