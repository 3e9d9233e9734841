//! Frequency tables, follower tiers, duration bins and the duration
//! histogram.

use serde::{Deserialize, Serialize};

use crate::model::{FrameLabelSet, VideoMeta};

use super::StatsError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyRow {
    pub label: String,
    pub count: u64,
    /// Percent of N, rounded half-up to two decimals.
    pub percent: f64,
}

/// `100 * count / n` in hundredths of a percent, rounded half-up with
/// integer arithmetic.
pub fn percent_hundredths(count: u64, n: u64) -> u64 {
    assert!(n > 0, "percent of an empty total");
    let scaled = u128::from(count) * 10_000;
    ((2 * scaled + u128::from(n)) / (2 * u128::from(n))) as u64
}

pub fn format_percent(p: f64) -> String {
    format!("{p:.2}%")
}

const SPLITS: [(&str, &str); 7] = [
    ("riot", "non-riot"),
    ("confrontation", "non-confrontation"),
    ("spectacle", "non-spectacle"),
    ("debate", "non-debate"),
    ("official source", "unofficial source"),
    ("black presence", "no black presence"),
    ("black group presence", "no black group presence"),
];

/// Count and percent of every element and its complement. `labels[i]`
/// belongs to `meta[i]`.
pub fn frequency_table(
    labels: &[FrameLabelSet],
    meta: &[VideoMeta],
) -> Result<Vec<FrequencyRow>, StatsError> {
    if labels.len() != meta.len() {
        return Err(StatsError::LengthMismatch(labels.len(), meta.len()));
    }
    let n = labels.len() as u64;
    if n == 0 {
        return Ok(Vec::new());
    }
    let flags: [fn(&FrameLabelSet, &VideoMeta) -> bool; 7] = [
        |l, _| l.riot,
        |l, _| l.confrontation,
        |l, _| l.spectacle,
        |l, _| l.debate,
        |_, m| m.verified,
        |l, _| l.black_presence,
        |l, _| l.black_group_presence,
    ];
    let mut rows = Vec::with_capacity(14);
    for ((yes, no), flag) in SPLITS.iter().zip(flags.iter()) {
        let count = labels.iter().zip(meta).filter(|(l, m)| flag(l, m)).count() as u64;
        for (label, c) in [(yes, count), (no, n - count)] {
            rows.push(FrequencyRow {
                label: label.to_string(),
                count: c,
                percent: percent_hundredths(c, n) as f64 / 100.0,
            });
        }
    }
    Ok(rows)
}

/// Creator tier by follower count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UserTier {
    /// Fewer than 50,000 followers.
    Ordinary,
    /// 50,000 to 2,500,000 followers inclusive.
    MidTier,
    /// More than 2,500,000 followers.
    Celebrity,
}

impl UserTier {
    pub const ALL: [UserTier; 3] = [UserTier::Ordinary, UserTier::MidTier, UserTier::Celebrity];

    pub fn label(self) -> &'static str {
        match self {
            UserTier::Ordinary => "ordinary user",
            UserTier::MidTier => "mid-tier influencer",
            UserTier::Celebrity => "celebrity influencer",
        }
    }
}

pub fn tier_of(follower_count: u64) -> UserTier {
    match follower_count {
        0..=49_999 => UserTier::Ordinary,
        50_000..=2_500_000 => UserTier::MidTier,
        _ => UserTier::Celebrity,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LengthBin {
    S1To15,
    S16To45,
    S46To60,
    /// Longer than 60 s; left out of length-by-frame tables.
    Overflow,
}

impl LengthBin {
    /// The bins used in length-by-frame tables.
    pub const REPORTED: [LengthBin; 3] =
        [LengthBin::S1To15, LengthBin::S16To45, LengthBin::S46To60];

    pub fn label(self) -> &'static str {
        match self {
            LengthBin::S1To15 => "1 ~ 15s",
            LengthBin::S16To45 => "16 ~ 45s",
            LengthBin::S46To60 => "46 ~ 60s",
            LengthBin::Overflow => "> 60s",
        }
    }
}

pub fn length_bin(duration_s: u32) -> Result<LengthBin, StatsError> {
    match duration_s {
        0 => Err(StatsError::Domain("duration_s must be >= 1".into())),
        1..=15 => Ok(LengthBin::S1To15),
        16..=45 => Ok(LengthBin::S16To45),
        46..=60 => Ok(LengthBin::S46To60),
        _ => Ok(LengthBin::Overflow),
    }
}

/// Video count for every whole-second duration from 1 to the longest video.
pub fn duration_histogram(meta: &[VideoMeta]) -> Vec<(u32, u64)> {
    let max = meta.iter().map(|m| m.duration_s).max().unwrap_or(0);
    let mut counts = vec![0u64; max as usize + 1];
    for m in meta {
        counts[m.duration_s as usize] += 1;
    }
    (1..=max).map(|d| (d, counts[d as usize])).collect()
}
