//! Assembling the analysis tables for a labeled corpus and rendering them as
//! tab-separated files and a fixed-width text report.
//!
//! Everything is computed in raw units. Millions and thousands appear only
//! in the rendered output.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    CellFlag, ChiSquareResult, Element, FrameLabelSet, GroupSummary, TTestResult, VideoMeta,
};
use crate::stats::{
    chi_square_independence, duration_histogram, format_percent, frequency_table, length_bin,
    tier_of, welch_t_raw, FrequencyRow, LengthBin, StatsError, UserTier,
};

#[derive(Debug, Error, PartialEq)]
pub enum JoinError {
    #[error("labels without metadata: {}", .0.join(", "))]
    LabelsWithoutMeta(Vec<String>),
    #[error("metadata without labels: {}", .0.join(", "))]
    MetaWithoutLabels(Vec<String>),
    #[error("duplicate video_id in metadata: {0}")]
    DuplicateMeta(String),
}

/// Pairs labels with metadata by video id, in metadata order. Any id present
/// on only one side is an error.
pub fn join_labels(
    labels: &BTreeMap<String, FrameLabelSet>,
    meta: &[VideoMeta],
) -> Result<(Vec<FrameLabelSet>, Vec<VideoMeta>), JoinError> {
    let mut seen = BTreeSet::new();
    for m in meta {
        if !seen.insert(m.video_id.as_str()) {
            return Err(JoinError::DuplicateMeta(m.video_id.clone()));
        }
    }
    let orphans: Vec<String> = labels
        .keys()
        .filter(|id| !seen.contains(id.as_str()))
        .cloned()
        .collect();
    if !orphans.is_empty() {
        return Err(JoinError::LabelsWithoutMeta(orphans));
    }
    let missing: Vec<String> = meta
        .iter()
        .filter(|m| !labels.contains_key(&m.video_id))
        .map(|m| m.video_id.clone())
        .collect();
    if !missing.is_empty() {
        return Err(JoinError::MetaWithoutLabels(missing));
    }
    let joined = meta.iter().map(|m| labels[&m.video_id]).collect();
    Ok((joined, meta.to_vec()))
}

/// Engagement and size measures compared across splits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Follower,
    Duration,
    Play,
    Like,
    Comment,
    Share,
}

impl Metric {
    pub const ALL: [Metric; 6] = [
        Metric::Follower,
        Metric::Duration,
        Metric::Play,
        Metric::Like,
        Metric::Comment,
        Metric::Share,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Follower => "follower",
            Metric::Duration => "duration",
            Metric::Play => "play",
            Metric::Like => "like",
            Metric::Comment => "comment",
            Metric::Share => "share",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == s)
    }

    pub fn unit(self) -> Unit {
        match self {
            Metric::Follower | Metric::Play | Metric::Like => Unit::Million,
            Metric::Duration => Unit::Second,
            Metric::Comment | Metric::Share => Unit::Thousand,
        }
    }

    pub fn value(self, m: &VideoMeta) -> f64 {
        match self {
            Metric::Follower => m.follower_count as f64,
            Metric::Duration => f64::from(m.duration_s),
            Metric::Play => m.play_count as f64,
            Metric::Like => m.like_count as f64,
            Metric::Comment => m.comment_count as f64,
            Metric::Share => m.share_count as f64,
        }
    }
}

/// Display unit of a metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Unit {
    Million,
    Thousand,
    Second,
}

impl Unit {
    pub fn name(self) -> &'static str {
        match self {
            Unit::Million => "million",
            Unit::Thousand => "thousand",
            Unit::Second => "second",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "million" => Some(Unit::Million),
            "thousand" => Some(Unit::Thousand),
            "second" => Some(Unit::Second),
            _ => None,
        }
    }

    /// Factor converting raw values into this unit.
    pub fn factor(self) -> f64 {
        match self {
            Unit::Million => 1e-6,
            Unit::Thousand => 1e-3,
            Unit::Second => 1.0,
        }
    }
}

/// Binary partition of the corpus compared in the t-test battery.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Riot,
    Confrontation,
    Spectacle,
    Debate,
    Verified,
    Black,
}

impl Split {
    pub const ALL: [Split; 6] = [
        Split::Riot,
        Split::Confrontation,
        Split::Spectacle,
        Split::Debate,
        Split::Verified,
        Split::Black,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Split::Riot => "riot",
            Split::Confrontation => "confrontation",
            Split::Spectacle => "spectacle",
            Split::Debate => "debate",
            Split::Verified => "verified",
            Split::Black => "black",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|x| x.name() == s)
    }

    pub fn labels(self) -> (&'static str, &'static str) {
        match self {
            Split::Riot => ("riot", "non-riot"),
            Split::Confrontation => ("confrontation", "non-confrontation"),
            Split::Spectacle => ("spectacle", "non-spectacle"),
            Split::Debate => ("debate", "non-debate"),
            Split::Verified => ("official", "unofficial"),
            Split::Black => ("black", "non-black"),
        }
    }

    pub fn member(self, labels: &FrameLabelSet, meta: &VideoMeta) -> bool {
        match self {
            Split::Riot => labels.riot,
            Split::Confrontation => labels.confrontation,
            Split::Spectacle => labels.spectacle,
            Split::Debate => labels.debate,
            Split::Verified => meta.verified,
            Split::Black => labels.black_presence,
        }
    }
}

/// Result of one split-by-metric comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TTestRow {
    pub split: Split,
    pub metric: Metric,
    /// Raw-unit summaries; `None` when the group is empty.
    pub group_a: Option<GroupSummary>,
    pub group_b: Option<GroupSummary>,
    pub outcome: TTestOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TTestOutcome {
    Test(TTestResult),
    /// The test could not be run; the reason is printed in its place.
    Insufficient(String),
}

/// Which margin a chi-square block crosses with the frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dimension {
    UserType,
    VideoLength,
}

impl Dimension {
    pub fn name(self) -> &'static str {
        match self {
            Dimension::UserType => "user_type",
            Dimension::VideoLength => "video_length",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "user_type" => Some(Dimension::UserType),
            "video_length" => Some(Dimension::VideoLength),
            _ => None,
        }
    }
}

/// Category-by-frame contingency table and its test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareBlock {
    pub dimension: Dimension,
    pub frame: Element,
    pub rows: Vec<String>,
    /// Row-major counts with columns (frame present, frame absent).
    pub observed: Vec<Vec<u64>>,
    pub outcome: ChiSquareOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChiSquareOutcome {
    Test(ChiSquareResult),
    Insufficient(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportBundle {
    pub n: usize,
    pub frequencies: Vec<FrequencyRow>,
    pub ttests: Vec<TTestRow>,
    pub chi_square: Vec<ChiSquareBlock>,
    /// Videos per whole-second duration.
    pub histogram: Vec<(u32, u64)>,
    /// Videos longer than 60 s, left out of the length blocks.
    pub length_overflow: u64,
}

fn ttest_row(
    split: Split,
    metric: Metric,
    labels: &[FrameLabelSet],
    meta: &[VideoMeta],
) -> TTestRow {
    let mut a = Vec::new();
    let mut b = Vec::new();
    for (l, m) in labels.iter().zip(meta) {
        if split.member(l, m) {
            a.push(metric.value(m));
        } else {
            b.push(metric.value(m));
        }
    }
    let outcome = match welch_t_raw(&a, &b) {
        Ok(r) => TTestOutcome::Test(r),
        Err(StatsError::InsufficientData(_)) => {
            TTestOutcome::Insufficient(format!("insufficient n ({} vs {})", a.len(), b.len()))
        }
        Err(StatsError::ZeroStandardError) => {
            TTestOutcome::Insufficient("insufficient n (zero variance)".into())
        }
        Err(e) => TTestOutcome::Insufficient(e.to_string()),
    };
    TTestRow {
        split,
        metric,
        group_a: GroupSummary::from_values(&a),
        group_b: GroupSummary::from_values(&b),
        outcome,
    }
}

fn chi_block(
    dimension: Dimension,
    frame: Element,
    rows: Vec<String>,
    observed: Vec<Vec<u64>>,
) -> ChiSquareBlock {
    let outcome = match chi_square_independence(&observed) {
        Ok(r) => ChiSquareOutcome::Test(r),
        Err(StatsError::ZeroMargin(which)) => {
            ChiSquareOutcome::Insufficient(format!("insufficient n (empty {which})"))
        }
        Err(e) => ChiSquareOutcome::Insufficient(e.to_string()),
    };
    ChiSquareBlock {
        dimension,
        frame,
        rows,
        observed,
        outcome,
    }
}

/// Builds every table. `labels[i]` belongs to `meta[i]`.
pub fn build_report(
    labels: &[FrameLabelSet],
    meta: &[VideoMeta],
) -> Result<ReportBundle, StatsError> {
    if labels.len() != meta.len() {
        return Err(StatsError::LengthMismatch(labels.len(), meta.len()));
    }
    let frequencies = frequency_table(labels, meta)?;

    let ttests = Split::ALL
        .iter()
        .flat_map(|&s| Metric::ALL.iter().map(move |&m| (s, m)))
        .map(|(s, m)| ttest_row(s, m, labels, meta))
        .collect();

    let mut bins = Vec::with_capacity(meta.len());
    for m in meta {
        bins.push(length_bin(m.duration_s)?);
    }
    let length_overflow = bins.iter().filter(|&&b| b == LengthBin::Overflow).count() as u64;

    let mut chi_square = Vec::new();
    for frame in Element::FRAMES {
        let mut observed = vec![vec![0u64; 2]; UserTier::ALL.len()];
        for (l, m) in labels.iter().zip(meta) {
            let row = UserTier::ALL
                .iter()
                .position(|&t| t == tier_of(m.follower_count))
                .unwrap();
            observed[row][usize::from(!l.get(frame))] += 1;
        }
        let rows = UserTier::ALL
            .iter()
            .map(|t| t.label().to_string())
            .collect();
        chi_square.push(chi_block(Dimension::UserType, frame, rows, observed));
    }
    for frame in Element::FRAMES {
        let mut observed = vec![vec![0u64; 2]; LengthBin::REPORTED.len()];
        for (l, b) in labels.iter().zip(&bins) {
            if let Some(row) = LengthBin::REPORTED.iter().position(|x| x == b) {
                observed[row][usize::from(!l.get(frame))] += 1;
            }
        }
        let rows = LengthBin::REPORTED
            .iter()
            .map(|b| b.label().to_string())
            .collect();
        chi_square.push(chi_block(Dimension::VideoLength, frame, rows, observed));
    }

    Ok(ReportBundle {
        n: meta.len(),
        frequencies,
        ttests,
        chi_square,
        histogram: duration_histogram(meta),
        length_overflow,
    })
}

/// Subscript for a cell: the letter of its column (`a`, `b`, ...) when the
/// adjusted residual is significant, empty otherwise. Whether the count is
/// above or below expectation is carried by the flag itself.
pub fn subscript(flag: CellFlag, column: usize) -> String {
    match flag {
        CellFlag::None => String::new(),
        CellFlag::Below | CellFlag::Above => char::from(b'a' + (column % 26) as u8).to_string(),
    }
}

pub fn direction(flag: CellFlag) -> &'static str {
    match flag {
        CellFlag::None => "",
        CellFlag::Below => "below",
        CellFlag::Above => "above",
    }
}

pub fn frequency_tsv(bundle: &ReportBundle) -> String {
    let mut out = String::from("label\tcount\tpercent\n");
    for r in &bundle.frequencies {
        let _ = writeln!(out, "{}\t{}\t{:.2}", r.label, r.count, r.percent);
    }
    out
}

fn summary_cells(g: Option<&GroupSummary>, unit: Unit) -> String {
    match g {
        Some(g) => {
            let s = g.scaled(unit.factor());
            format!("{}\t{:.4}\t{:.4}", s.n, s.mean, s.sd)
        }
        None => "0\t\t".into(),
    }
}

pub fn ttest_tsv(bundle: &ReportBundle) -> String {
    let mut out = String::from(
        "split\tmetric\tunit\tn_a\tmean_a\tsd_a\tn_b\tmean_b\tsd_b\tt\tdf\tp\tstars\tnote\n",
    );
    for r in &bundle.ttests {
        let unit = r.metric.unit();
        let _ = write!(
            out,
            "{}\t{}\t{}\t{}\t{}\t",
            r.split.name(),
            r.metric.name(),
            unit.name(),
            summary_cells(r.group_a.as_ref(), unit),
            summary_cells(r.group_b.as_ref(), unit),
        );
        match &r.outcome {
            TTestOutcome::Test(t) => {
                let _ = writeln!(out, "{:.4}\t{:.2}\t{:.6e}\t{}\t", t.t, t.df, t.p, t.stars);
            }
            TTestOutcome::Insufficient(why) => {
                let _ = writeln!(out, "\t\t\t\t{why}");
            }
        }
    }
    out
}

pub fn chi_square_tsv(bundle: &ReportBundle) -> String {
    let mut out = String::from(
        "dimension\tframe\trow\tcolumn\tobserved\texpected\tadj_residual\tsubscript\tdirection\tchi2\tdf\tp\tstars\tnote\n",
    );
    for b in &bundle.chi_square {
        for (i, row) in b.rows.iter().enumerate() {
            for (j, column) in ["yes", "non"].iter().enumerate() {
                let observed = b.observed[i][j];
                let _ = write!(
                    out,
                    "{}\t{}\t{row}\t{column}\t{observed}\t",
                    b.dimension.name(),
                    b.frame
                );
                match &b.outcome {
                    ChiSquareOutcome::Test(r) => {
                        let c = &r.cells[i][j];
                        let _ = writeln!(
                            out,
                            "{:.4}\t{:.4}\t{}\t{}\t{:.4}\t{}\t{:.6e}\t{}\t",
                            c.expected,
                            c.adj_residual,
                            subscript(c.flag, j),
                            direction(c.flag),
                            r.chi2,
                            r.df,
                            r.p,
                            r.stars
                        );
                    }
                    ChiSquareOutcome::Insufficient(why) => {
                        let _ = writeln!(out, "\t\t\t\t\t\t\t\t{why}");
                    }
                }
            }
        }
    }
    out
}

pub fn histogram_tsv(bundle: &ReportBundle) -> String {
    let mut out = String::from("duration_s\tcount\n");
    for (d, c) in &bundle.histogram {
        let _ = writeln!(out, "{d}\t{c}");
    }
    out
}

fn render_summary(g: Option<&GroupSummary>, unit: Unit) -> String {
    match g {
        Some(g) => {
            let s = g.scaled(unit.factor());
            format!("{:.2} ({:.2})", s.mean, s.sd)
        }
        None => "-".into(),
    }
}

/// Human-readable report with every table in fixed-width columns.
pub fn render_text(bundle: &ReportBundle) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "N = {}\n", bundle.n);

    let _ = writeln!(out, "Frequencies");
    for r in &bundle.frequencies {
        let _ = writeln!(
            out,
            "  {:<26}{:>8}{:>10}",
            r.label,
            r.count,
            format_percent(r.percent)
        );
    }

    let _ = writeln!(out, "\nMean comparisons (Welch t, two-sided)");
    let _ = writeln!(
        out,
        "  {:<15}{:<10}{:<10}{:>8}{:>22}{:>8}{:>22}{:>20}",
        "split", "metric", "unit", "n_a", "M_a (SD_a)", "n_b", "M_b (SD_b)", "t (df)"
    );
    for r in &bundle.ttests {
        let unit = r.metric.unit();
        let stat = match &r.outcome {
            TTestOutcome::Test(t) => format!("{}{:.2} ({:.0})", t.stars, t.t, t.df),
            TTestOutcome::Insufficient(why) => why.clone(),
        };
        let _ = writeln!(
            out,
            "  {:<15}{:<10}{:<10}{:>8}{:>22}{:>8}{:>22}{:>20}",
            r.split.name(),
            r.metric.name(),
            unit.name(),
            r.group_a.map_or(0, |g| g.n),
            render_summary(r.group_a.as_ref(), unit),
            r.group_b.map_or(0, |g| g.n),
            render_summary(r.group_b.as_ref(), unit),
            stat
        );
    }

    let _ = writeln!(
        out,
        "\nContingency tables (observed, expected; a subscript marks |adjusted residual| > 1.96)"
    );
    for b in &bundle.chi_square {
        let head = match &b.outcome {
            ChiSquareOutcome::Test(r) => format!("chi2 = {}{:.2}, df = {}", r.stars, r.chi2, r.df),
            ChiSquareOutcome::Insufficient(why) => why.clone(),
        };
        let _ = writeln!(out, "  {} x {}: {}", b.dimension.name(), b.frame, head);
        for (i, row) in b.rows.iter().enumerate() {
            let mut line = format!("    {row:<24}");
            for j in 0..2 {
                let cell = match &b.outcome {
                    ChiSquareOutcome::Test(r) => {
                        let c = &r.cells[i][j];
                        format!("{}{}, {:.0}", c.observed, subscript(c.flag, j), c.expected)
                    }
                    ChiSquareOutcome::Insufficient(_) => b.observed[i][j].to_string(),
                };
                let _ = write!(line, "{cell:>18}");
            }
            let _ = writeln!(out, "{line}");
        }
    }
    if bundle.length_overflow > 0 {
        let _ = writeln!(
            out,
            "  ({} videos longer than 60 s excluded from video_length tables)",
            bundle.length_overflow
        );
    }

    let _ = writeln!(out, "\nDuration histogram");
    for (d, c) in &bundle.histogram {
        let _ = writeln!(out, "  {d:>4}s{c:>8}");
    }
    out
}
