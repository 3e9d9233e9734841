//! Recomputing published mean-comparison and contingency tables from their
//! aggregates, and lining the results up against the printed values.

use std::fmt::Write as _;
use std::io::Read;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::ingest::IngestError;
use crate::model::{ChiSquareResult, Element, GroupSummary, Stars, TTestResult};
use crate::report::{subscript, Dimension, Metric, Split, Unit};
use crate::stats::{chi_square_independence, student_t_summary, welch_t_summary, StatsError};

/// Largest |t| difference still attributed to two-decimal rounding of the
/// printed means and standard deviations.
pub const T_TOLERANCE: f64 = 0.35;
/// Largest df difference still attributed to rounding.
pub const DF_TOLERANCE: f64 = 20.0;
/// Tolerance for chi-square statistics and expected counts.
pub const CHI_TOLERANCE: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PublishedGroup {
    pub label: String,
    pub n: u64,
    pub mean: f64,
    pub sd: f64,
}

impl PublishedGroup {
    pub fn summary(&self) -> GroupSummary {
        GroupSummary {
            n: self.n,
            mean: self.mean,
            sd: self.sd,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportedT {
    pub t: Option<f64>,
    pub df: Option<f64>,
    pub stars: String,
}

/// One printed mean-comparison cell: two group summaries in display units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SummaryRow {
    pub split: String,
    pub metric: String,
    pub unit_scale: String,
    pub group_a: PublishedGroup,
    pub group_b: PublishedGroup,
    pub reported: ReportedT,
    /// Why the printed cell cannot be read unambiguously.
    #[serde(default)]
    pub ambiguous: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportedChi {
    pub chi2: f64,
    pub stars: String,
    #[serde(default)]
    pub expected: Option<Vec<Vec<f64>>>,
    /// Printed residual letters per cell (`"a"`, `"b"` or `""`).
    #[serde(default)]
    pub subscripts: Option<Vec<Vec<String>>>,
}

/// One printed contingency block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CountsBlock {
    pub dimension: String,
    pub frame: String,
    pub rows: Vec<String>,
    pub columns: Vec<String>,
    pub observed: Vec<Vec<u64>>,
    pub reported: ReportedChi,
}

fn parse_lines<T: DeserializeOwned>(
    reader: impl Read,
    check: impl Fn(&T) -> Result<(), String>,
) -> Result<Vec<T>, IngestError> {
    let mut text = String::new();
    let mut reader = reader;
    reader
        .read_to_string(&mut text)
        .map_err(|source| IngestError::Io {
            path: Default::default(),
            source,
        })?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| IngestError::Parse {
            line: i + 1,
            message,
        };
        let item: T = serde_json::from_str(line).map_err(|e| parse_err(e.to_string()))?;
        check(&item).map_err(parse_err)?;
        out.push(item);
    }
    Ok(out)
}

fn check_summary(row: &SummaryRow) -> Result<(), String> {
    if Split::parse(&row.split).is_none() {
        return Err(format!("unknown split {:?}", row.split));
    }
    if Metric::parse(&row.metric).is_none() {
        return Err(format!("unknown metric {:?}", row.metric));
    }
    if Unit::parse(&row.unit_scale).is_none() {
        return Err(format!("unknown unit_scale {:?}", row.unit_scale));
    }
    if Stars::parse(&row.reported.stars).is_none() {
        return Err(format!("bad stars {:?}", row.reported.stars));
    }
    for g in [&row.group_a, &row.group_b] {
        if !(g.mean.is_finite() && g.sd.is_finite() && g.sd >= 0.0) {
            return Err(format!(
                "group {:?} has a non-finite mean or negative sd",
                g.label
            ));
        }
    }
    Ok(())
}

fn check_counts(block: &CountsBlock) -> Result<(), String> {
    if Dimension::parse(&block.dimension).is_none() {
        return Err(format!("unknown dimension {:?}", block.dimension));
    }
    if frame_of(&block.frame).is_none() {
        return Err(format!("unknown frame {:?}", block.frame));
    }
    if Stars::parse(&block.reported.stars).is_none() {
        return Err(format!("bad stars {:?}", block.reported.stars));
    }
    let shape_ok = block.observed.len() == block.rows.len()
        && block
            .observed
            .iter()
            .all(|r| r.len() == block.columns.len());
    if !shape_ok {
        return Err("observed counts do not match the row and column labels".into());
    }
    let lens: Vec<usize> = block.observed.iter().map(Vec::len).collect();
    if let Some(e) = &block.reported.expected {
        if e.iter().map(Vec::len).ne(lens.iter().copied()) {
            return Err("reported expected counts have the wrong shape".into());
        }
    }
    if let Some(s) = &block.reported.subscripts {
        if s.iter().map(Vec::len).ne(lens.iter().copied()) {
            return Err("reported subscripts have the wrong shape".into());
        }
        if s.iter()
            .flatten()
            .any(|x| !matches!(x.as_str(), "" | "a" | "b"))
        {
            return Err("subscripts must be \"a\", \"b\" or empty".into());
        }
    }
    Ok(())
}

fn frame_of(name: &str) -> Option<Element> {
    Element::FRAMES.into_iter().find(|e| e.name() == name)
}

pub fn parse_summary_rows(reader: impl Read) -> Result<Vec<SummaryRow>, IngestError> {
    parse_lines(reader, check_summary)
}

pub fn parse_counts(reader: impl Read) -> Result<Vec<CountsBlock>, IngestError> {
    parse_lines(reader, check_counts)
}

fn open(path: &Path) -> Result<std::fs::File, IngestError> {
    std::fs::File::open(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn with_path(path: &Path, e: IngestError) -> IngestError {
    match e {
        IngestError::Io { source, .. } => IngestError::Io {
            path: path.to_path_buf(),
            source,
        },
        other => other,
    }
}

pub fn load_summary_rows(path: &Path) -> Result<Vec<SummaryRow>, IngestError> {
    parse_summary_rows(open(path)?).map_err(|e| with_path(path, e))
}

pub fn load_counts(path: &Path) -> Result<Vec<CountsBlock>, IngestError> {
    parse_counts(open(path)?).map_err(|e| with_path(path, e))
}

/// Which two-sample test a printed row is compared against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TVariant {
    Welch,
    /// Pooled-variance Student t.
    Pooled,
}

impl TVariant {
    pub fn name(self) -> &'static str {
        match self {
            TVariant::Welch => "welch",
            TVariant::Pooled => "pooled",
        }
    }
}

/// A printed df equal to `n_a + n_b - 2` identifies the pooled test; any
/// other value the Welch test.
pub fn variant_for(row: &SummaryRow) -> TVariant {
    let pooled_df = (row.group_a.n + row.group_b.n) as f64 - 2.0;
    match row.reported.df {
        Some(df) if (df - pooled_df).abs() < 0.5 => TVariant::Pooled,
        _ => TVariant::Welch,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    WithinRounding,
    OutsideTolerance,
    AmbiguousSource,
}

impl Verdict {
    pub fn label(self) -> &'static str {
        match self {
            Verdict::WithinRounding => "within rounding",
            Verdict::OutsideTolerance => "outside tolerance",
            Verdict::AmbiguousSource => "ambiguous source",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TReplication {
    pub row: SummaryRow,
    pub variant: TVariant,
    pub recomputed: TTestResult,
    pub delta_t: Option<f64>,
    pub delta_df: Option<f64>,
    pub stars_match: bool,
    pub verdict: Verdict,
}

/// Recomputes one printed row. Display units do not affect t or df, so the
/// printed summaries are used as they are.
pub fn replicate_t(row: &SummaryRow) -> Result<TReplication, StatsError> {
    let a = row.group_a.summary();
    let b = row.group_b.summary();
    let variant = variant_for(row);
    let recomputed = match variant {
        TVariant::Welch => welch_t_summary(&a, &b)?,
        TVariant::Pooled => student_t_summary(&a, &b)?,
    };
    let delta_t = row.reported.t.map(|t| recomputed.t - t);
    let delta_df = row.reported.df.map(|df| recomputed.df - df);
    let stars_match = Stars::parse(&row.reported.stars) == Some(recomputed.stars);
    let verdict = if row.ambiguous.is_some() {
        Verdict::AmbiguousSource
    } else {
        match (delta_t, delta_df) {
            (Some(dt), Some(ddf)) if dt.abs() <= T_TOLERANCE && ddf.abs() <= DF_TOLERANCE => {
                Verdict::WithinRounding
            }
            (None, _) | (_, None) => Verdict::AmbiguousSource,
            _ => Verdict::OutsideTolerance,
        }
    };
    Ok(TReplication {
        row: row.clone(),
        variant,
        recomputed,
        delta_t,
        delta_df,
        stars_match,
        verdict,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiReplication {
    pub block: CountsBlock,
    pub recomputed: ChiSquareResult,
    pub delta_chi2: f64,
    /// Largest |recomputed - printed| expected count, when printed.
    pub max_expected_delta: Option<f64>,
    /// Recomputed residual flags equal the printed letters in every cell.
    pub flags_match: Option<bool>,
    pub stars_match: bool,
    pub verdict: Verdict,
}

pub fn replicate_chi(block: &CountsBlock) -> Result<ChiReplication, StatsError> {
    let recomputed = chi_square_independence(&block.observed)?;
    let delta_chi2 = recomputed.chi2 - block.reported.chi2;
    let max_expected_delta = block.reported.expected.as_ref().map(|e| {
        e.iter()
            .flatten()
            .zip(recomputed.cells.iter().flatten())
            .map(|(p, c)| (c.expected - p).abs())
            .fold(0.0, f64::max)
    });
    let flags_match = block.reported.subscripts.as_ref().map(|s| {
        s.iter().zip(&recomputed.cells).all(|(printed, cells)| {
            printed
                .iter()
                .zip(cells)
                .enumerate()
                .all(|(j, (p, c))| *p == subscript(c.flag, j))
        })
    });
    let stars_match = Stars::parse(&block.reported.stars) == Some(recomputed.stars);
    let ok = delta_chi2.abs() <= CHI_TOLERANCE
        && max_expected_delta.is_none_or(|d| d <= CHI_TOLERANCE)
        && flags_match.unwrap_or(true);
    Ok(ChiReplication {
        block: block.clone(),
        recomputed,
        delta_chi2,
        max_expected_delta,
        flags_match,
        stars_match,
        verdict: if ok {
            Verdict::WithinRounding
        } else {
            Verdict::OutsideTolerance
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Replication {
    pub ttests: Vec<TReplication>,
    pub chi_square: Vec<ChiReplication>,
}

pub fn replicate_tables(
    summaries: &[SummaryRow],
    counts: &[CountsBlock],
) -> Result<Replication, StatsError> {
    Ok(Replication {
        ttests: summaries
            .iter()
            .map(replicate_t)
            .collect::<Result<_, _>>()?,
        chi_square: counts.iter().map(replicate_chi).collect::<Result<_, _>>()?,
    })
}

fn opt(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{x:.digits$}"))
}

pub fn ttest_replication_tsv(rep: &Replication) -> String {
    let mut out = String::from(
        "split\tmetric\tvariant\treported_t\trecomputed_t\tdelta_t\treported_df\trecomputed_df\tdelta_df\treported_stars\trecomputed_stars\tverdict\tnote\n",
    );
    for r in &rep.ttests {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{:.4}\t{}\t{}\t{:.2}\t{}\t{}\t{}\t{}\t{}",
            r.row.split,
            r.row.metric,
            r.variant.name(),
            opt(r.row.reported.t, 2),
            r.recomputed.t,
            opt(r.delta_t, 4),
            opt(r.row.reported.df, 0),
            r.recomputed.df,
            opt(r.delta_df, 2),
            r.row.reported.stars,
            r.recomputed.stars,
            r.verdict.label(),
            r.row.ambiguous.as_deref().unwrap_or("")
        );
    }
    out
}

pub fn chi_replication_tsv(rep: &Replication) -> String {
    let mut out = String::from(
        "dimension\tframe\treported_chi2\trecomputed_chi2\tdelta_chi2\tmax_expected_delta\tflags_match\treported_stars\trecomputed_stars\tverdict\n",
    );
    for r in &rep.chi_square {
        let _ = writeln!(
            out,
            "{}\t{}\t{:.2}\t{:.4}\t{:.4}\t{}\t{}\t{}\t{}\t{}",
            r.block.dimension,
            r.block.frame,
            r.block.reported.chi2,
            r.recomputed.chi2,
            r.delta_chi2,
            opt(r.max_expected_delta, 4),
            r.flags_match.map_or("-", |m| if m { "yes" } else { "no" }),
            r.block.reported.stars,
            r.recomputed.stars,
            r.verdict.label()
        );
    }
    out
}

/// Side-by-side fixed-width comparison.
pub fn render_replication(rep: &Replication) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "Mean comparisons: reported vs recomputed");
    let _ = writeln!(
        out,
        "  {:<15}{:<10}{:<8}{:>16}{:>18}{:>10}{:>10}  verdict",
        "split", "metric", "test", "reported", "recomputed", "dt", "ddf"
    );
    for r in &rep.ttests {
        let reported = format!(
            "{}{} ({})",
            r.row.reported.stars,
            opt(r.row.reported.t, 2),
            opt(r.row.reported.df, 0)
        );
        let recomputed = format!(
            "{}{:.2} ({:.0})",
            r.recomputed.stars, r.recomputed.t, r.recomputed.df
        );
        let _ = writeln!(
            out,
            "  {:<15}{:<10}{:<8}{:>16}{:>18}{:>10}{:>10}  {}",
            r.row.split,
            r.row.metric,
            r.variant.name(),
            reported,
            recomputed,
            opt(r.delta_t, 2),
            opt(r.delta_df, 1),
            r.verdict.label()
        );
    }
    let _ = writeln!(out, "\nContingency tables: reported vs recomputed");
    let _ = writeln!(
        out,
        "  {:<14}{:<15}{:>12}{:>14}{:>10}{:>12}{:>8}  verdict",
        "dimension", "frame", "reported", "recomputed", "dchi2", "max dE", "flags"
    );
    for r in &rep.chi_square {
        let _ = writeln!(
            out,
            "  {:<14}{:<15}{:>12}{:>14}{:>10.2}{:>12}{:>8}  {}",
            r.block.dimension,
            r.block.frame,
            format!("{}{:.2}", r.block.reported.stars, r.block.reported.chi2),
            format!("{}{:.2}", r.recomputed.stars, r.recomputed.chi2),
            r.delta_chi2,
            opt(r.max_expected_delta, 2),
            r.flags_match
                .map_or("-", |m| if m { "match" } else { "differ" }),
            r.verdict.label()
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const RIOT_FOLLOWER: &str = r#"{"split": "riot", "metric": "follower", "unit_scale": "million", "group_a": {"label": "Riot", "n": 648, "mean": 0.17, "sd": 0.67}, "group_b": {"label": "Non-riot", "n": 7525, "mean": 0.39, "sd": 1.86}, "reported": {"t": -6.68, "df": 1721, "stars": "***"}}"#;

    #[test]
    fn riot_follower_within_rounding() {
        let rows = parse_summary_rows(RIOT_FOLLOWER.as_bytes()).unwrap();
        let r = replicate_t(&rows[0]).unwrap();
        assert_eq!(r.variant, TVariant::Welch);
        assert!((r.recomputed.t + 6.48).abs() < 0.01, "{}", r.recomputed.t);
        assert!((r.delta_t.unwrap() - 0.20).abs() < 0.01);
        assert_eq!(r.verdict, Verdict::WithinRounding);
        assert!(r.stars_match);
    }

    #[test]
    fn pooled_df_selects_pooled_variant() {
        let line = RIOT_FOLLOWER.replace("1721", "8171");
        let rows = parse_summary_rows(line.as_bytes()).unwrap();
        let r = replicate_t(&rows[0]).unwrap();
        assert_eq!(r.variant, TVariant::Pooled);
        assert_eq!(r.recomputed.df, 8171.0);
    }

    #[test]
    fn malformed_rows_name_the_line() {
        let text = format!(
            "{RIOT_FOLLOWER}\n\n{}\n",
            RIOT_FOLLOWER.replace("\"riot\"", "\"rioting\"")
        );
        match parse_summary_rows(text.as_bytes()) {
            Err(IngestError::Parse { line, message }) => {
                assert_eq!(line, 3);
                assert!(message.contains("rioting"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn fractional_counts_rejected() {
        let line = r#"{"dimension": "user_type", "frame": "riot", "rows": ["a", "b"], "columns": ["yes", "non"], "observed": [[1.5, 2], [3, 4]], "reported": {"chi2": 1.0, "stars": ""}}"#;
        assert!(matches!(
            parse_counts(line.as_bytes()),
            Err(IngestError::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn debate_length_block() {
        let line = r#"{"dimension": "video_length", "frame": "debate", "rows": ["1 ~ 15s", "16 ~ 45s", "46 ~ 60s"], "columns": ["yes", "non"], "observed": [[1281, 2346], [990, 1373], [1438, 745]], "reported": {"chi2": 529.56, "stars": "***", "expected": [[1646, 1981], [1072, 1291], [991, 1192]], "subscripts": [["a", "b"], ["a", "b"], ["a", "b"]]}}"#;
        let blocks = parse_counts(line.as_bytes()).unwrap();
        let r = replicate_chi(&blocks[0]).unwrap();
        assert!(r.delta_chi2.abs() < 0.05, "{}", r.recomputed.chi2);
        assert!(r.max_expected_delta.unwrap() < 1.0);
        assert_eq!(r.flags_match, Some(true));
        assert_eq!(r.verdict, Verdict::WithinRounding);
    }
}
