//! Student t and chi-square distribution functions.

use super::special::{inc_beta_pair, inc_gamma_pair};
use super::StatsError;

fn check_df(df: f64) -> Result<(), StatsError> {
    if df.is_finite() && df > 0.0 {
        Ok(())
    } else {
        Err(StatsError::Domain(format!(
            "degrees of freedom must be positive, got {df}"
        )))
    }
}

/// One-sided tail mass `P(T >= |x|)`.
fn t_tail(x: f64, df: f64) -> f64 {
    let x2 = x * x;
    if x2.is_infinite() {
        return 0.0;
    }
    let z = df / (df + x2);
    let y = x2 / (df + x2);
    0.5 * inc_beta_pair(0.5 * df, 0.5, z, y).0
}

/// Cumulative distribution of Student's t.
pub fn t_cdf(x: f64, df: f64) -> Result<f64, StatsError> {
    check_df(df)?;
    if x.is_nan() {
        return Err(StatsError::Domain("t_cdf of NaN".into()));
    }
    let tail = t_tail(x, df);
    Ok(if x < 0.0 { tail } else { 1.0 - tail })
}

/// Two-sided p-value `P(|T| >= |t|)`.
pub fn t_two_sided_p(t: f64, df: f64) -> Result<f64, StatsError> {
    check_df(df)?;
    if t.is_nan() {
        return Err(StatsError::Domain("t statistic is NaN".into()));
    }
    Ok((2.0 * t_tail(t, df)).min(1.0))
}

fn check_chi(x: f64, df: u32) -> Result<(), StatsError> {
    if df == 0 {
        return Err(StatsError::Domain("chi-square df must be positive".into()));
    }
    if x.is_nan() || x < 0.0 {
        return Err(StatsError::Domain(format!(
            "chi-square statistic must be >= 0, got {x}"
        )));
    }
    Ok(())
}

/// Cumulative distribution of the chi-square distribution.
pub fn chi_square_cdf(x: f64, df: u32) -> Result<f64, StatsError> {
    check_chi(x, df)?;
    Ok(inc_gamma_pair(0.5 * f64::from(df), 0.5 * x).0)
}

/// Upper tail `P(X >= x)`, computed directly for small p-values.
pub fn chi_square_sf(x: f64, df: u32) -> Result<f64, StatsError> {
    check_chi(x, df)?;
    Ok(inc_gamma_pair(0.5 * f64::from(df), 0.5 * x).1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn t_cdf_at_zero_is_half() {
        for df in [0.5, 1.0, 2.0, 117.0, 1e6] {
            assert_eq!(t_cdf(0.0, df).unwrap(), 0.5);
        }
    }

    #[test]
    fn t_cdf_is_symmetric() {
        for df in [1.0, 3.5, 1721.0] {
            for x in [0.3, 1.96, 7.0] {
                let s = t_cdf(x, df).unwrap() + t_cdf(-x, df).unwrap();
                assert!((s - 1.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn cauchy_closed_form() {
        // df = 1 is the standard Cauchy distribution
        for x in [-20.0, -1.0, 0.25, 3.0] {
            let expected = 0.5 + f64::atan(x) / std::f64::consts::PI;
            assert!((t_cdf(x, 1.0).unwrap() - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn nonpositive_df_rejected() {
        assert!(t_cdf(1.0, 0.0).is_err());
        assert!(t_cdf(1.0, -2.0).is_err());
        assert!(chi_square_cdf(1.0, 0).is_err());
    }

    #[test]
    fn chi_square_basics() {
        assert_eq!(chi_square_cdf(0.0, 3).unwrap(), 0.0);
        assert!(chi_square_cdf(-1.0, 3).is_err());
        // df = 2 is exponential with mean 2
        for x in [0.5, 3.0, 30.0] {
            let expected = 1.0 - (-x / 2.0f64).exp();
            assert!((chi_square_cdf(x, 2).unwrap() - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn chi_square_cdf_monotone() {
        let mut prev = 0.0;
        for i in 0..400 {
            let x = f64::from(i) * 0.25;
            let c = chi_square_cdf(x, 7).unwrap();
            assert!(c >= prev);
            prev = c;
        }
    }
}
