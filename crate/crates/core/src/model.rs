//! Shared domain types: video metadata, per-second detector scores, the
//! video-level label set, and the records produced by the statistics module.
//!
//! Metadata and score records are parsed through "raw" mirrors that accept
//! any JSON number so that a negative count or an out-of-range confidence
//! becomes a field-naming [`ValidationError`] instead of a generic parse
//! failure.

use std::collections::BTreeSet;
use std::fmt;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A field-level validation failure.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{field}: {message}")]
pub struct ValidationError {
    pub field: &'static str,
    pub message: String,
}

impl ValidationError {
    pub fn new(field: &'static str, message: impl Into<String>) -> Self {
        Self {
            field,
            message: message.into(),
        }
    }
}

/// A validation failure inside a score stream, located by position.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("frame {index}: {source}")]
pub struct StreamError {
    /// Zero-based position of the offending frame within the stream.
    pub index: usize,
    #[source]
    pub source: ValidationError,
}

/// Metadata for one video in the corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawVideoMeta")]
pub struct VideoMeta {
    pub video_id: String,
    pub author_id: String,
    /// Official-source flag.
    pub verified: bool,
    pub follower_count: u64,
    pub duration_s: u32,
    pub play_count: u64,
    pub like_count: u64,
    pub comment_count: u64,
    pub share_count: u64,
    pub hashtags: BTreeSet<String>,
    pub posted_at: NaiveDate,
}

/// Unvalidated metadata as it appears on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawVideoMeta {
    pub video_id: String,
    pub author_id: String,
    pub verified: bool,
    pub follower_count: i64,
    pub duration_s: i64,
    pub play_count: i64,
    pub like_count: i64,
    pub comment_count: i64,
    pub share_count: i64,
    pub hashtags: Vec<String>,
    pub posted_at: NaiveDate,
}

impl From<VideoMeta> for RawVideoMeta {
    fn from(m: VideoMeta) -> Self {
        Self {
            video_id: m.video_id,
            author_id: m.author_id,
            verified: m.verified,
            follower_count: m.follower_count as i64,
            duration_s: i64::from(m.duration_s),
            play_count: m.play_count as i64,
            like_count: m.like_count as i64,
            comment_count: m.comment_count as i64,
            share_count: m.share_count as i64,
            hashtags: m.hashtags.into_iter().collect(),
            posted_at: m.posted_at,
        }
    }
}

impl TryFrom<RawVideoMeta> for VideoMeta {
    type Error = ValidationError;

    fn try_from(raw: RawVideoMeta) -> Result<Self, Self::Error> {
        validate_video_meta(raw)
    }
}

fn count(field: &'static str, value: i64) -> Result<u64, ValidationError> {
    u64::try_from(value).map_err(|_| ValidationError::new(field, "negative count"))
}

/// Checks every metadata invariant and returns the typed record.
///
/// Errors name the offending field.
pub fn validate_video_meta(raw: RawVideoMeta) -> Result<VideoMeta, ValidationError> {
    if raw.video_id.is_empty() {
        return Err(ValidationError::new("video_id", "empty video_id"));
    }
    if raw.duration_s < 1 {
        return Err(ValidationError::new("duration_s", "duration_s < 1"));
    }
    let duration_s = u32::try_from(raw.duration_s)
        .map_err(|_| ValidationError::new("duration_s", "duration_s too large"))?;
    let follower_count = count("follower_count", raw.follower_count)?;
    let play_count = count("play_count", raw.play_count)?;
    let like_count = count("like_count", raw.like_count)?;
    let comment_count = count("comment_count", raw.comment_count)?;
    let share_count = count("share_count", raw.share_count)?;
    let mut hashtags = BTreeSet::new();
    for tag in raw.hashtags {
        if tag.is_empty() || tag.chars().any(char::is_uppercase) {
            return Err(ValidationError::new(
                "hashtags",
                format!("hashtag {tag:?} is not a nonempty lowercase string"),
            ));
        }
        hashtags.insert(tag);
    }
    Ok(VideoMeta {
        video_id: raw.video_id,
        author_id: raw.author_id,
        verified: raw.verified,
        follower_count,
        duration_s,
        play_count,
        like_count,
        comment_count,
        share_count,
        hashtags,
        posted_at: raw.posted_at,
    })
}

/// One detected face in a sampled image.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaceObservation {
    /// Face bounding-box area divided by the full image area.
    pub head_area_fraction: f64,
    pub is_black: bool,
}

/// Detector outputs for the image sampled at second `t_index`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameScore {
    pub t_index: u32,
    pub violence: f64,
    pub police_conf: f64,
    pub protest_conf: Option<f64>,
    pub crowd_count: u32,
    pub faces: Vec<FaceObservation>,
}

impl FrameScore {
    /// A frame with every score at zero and no faces.
    pub fn blank(t_index: u32) -> Self {
        Self {
            t_index,
            violence: 0.0,
            police_conf: 0.0,
            protest_conf: None,
            crowd_count: 0,
            faces: Vec::new(),
        }
    }

    /// Area fraction of the largest head in the image, 0 when no face was found.
    pub fn largest_head_area(&self) -> f64 {
        self.faces
            .iter()
            .map(|f| f.head_area_fraction)
            .fold(0.0, f64::max)
    }

    pub fn black_face_count(&self) -> usize {
        self.faces.iter().filter(|f| f.is_black).count()
    }
}

fn unit_interval(field: &'static str, value: f64) -> Result<(), ValidationError> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(ValidationError::new(
            field,
            format!("confidence out of range: {value}"),
        ))
    }
}

/// Checks the per-frame range invariants of a single score.
pub fn validate_frame(frame: &FrameScore) -> Result<(), ValidationError> {
    unit_interval("violence", frame.violence)?;
    unit_interval("police_conf", frame.police_conf)?;
    if let Some(p) = frame.protest_conf {
        unit_interval("protest_conf", p)?;
    }
    for face in &frame.faces {
        if !(0.0..=1.0).contains(&face.head_area_fraction) {
            return Err(ValidationError::new(
                "head_area_fraction",
                format!("area fraction out of range: {}", face.head_area_fraction),
            ));
        }
    }
    Ok(())
}

/// Accepts a stream iff `t_index` is strictly increasing and every
/// confidence lies in `[0, 1]`.
pub fn validate_score_stream(frames: Vec<FrameScore>) -> Result<Vec<FrameScore>, StreamError> {
    let mut prev: Option<u32> = None;
    for (index, frame) in frames.iter().enumerate() {
        if let Some(p) = prev {
            if frame.t_index <= p {
                return Err(StreamError {
                    index,
                    source: ValidationError::new(
                        "t_index",
                        format!("t_index {} not greater than previous {}", frame.t_index, p),
                    ),
                });
            }
        }
        validate_frame(frame).map_err(|source| StreamError { index, source })?;
        prev = Some(frame.t_index);
    }
    Ok(frames)
}

/// The per-video classification result.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FrameLabelSet {
    pub riot: bool,
    pub confrontation: bool,
    pub spectacle: bool,
    pub debate: bool,
    pub black_presence: bool,
    pub black_group_presence: bool,
}

/// The five coded visual elements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Element {
    Riot,
    Confrontation,
    Spectacle,
    Debate,
    BlackIdentity,
}

impl Element {
    pub const ALL: [Element; 5] = [
        Element::Riot,
        Element::Confrontation,
        Element::Spectacle,
        Element::Debate,
        Element::BlackIdentity,
    ];

    pub const FRAMES: [Element; 4] = [
        Element::Riot,
        Element::Confrontation,
        Element::Spectacle,
        Element::Debate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Element::Riot => "riot",
            Element::Confrontation => "confrontation",
            Element::Spectacle => "spectacle",
            Element::Debate => "debate",
            Element::BlackIdentity => "black_identity",
        }
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FrameLabelSet {
    /// Label for one element; black identity maps to presence.
    pub fn get(&self, element: Element) -> bool {
        match element {
            Element::Riot => self.riot,
            Element::Confrontation => self.confrontation,
            Element::Spectacle => self.spectacle,
            Element::Debate => self.debate,
            Element::BlackIdentity => self.black_presence,
        }
    }
}

/// Mean, sample standard deviation and size of one group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub n: u64,
    pub mean: f64,
    /// Sample (n - 1 denominator) standard deviation.
    pub sd: f64,
}

impl GroupSummary {
    /// Summary of raw observations; `None` for an empty slice.
    pub fn from_values(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let sd = if values.len() < 2 {
            0.0
        } else {
            let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
            (ss / (n - 1.0)).sqrt()
        };
        Some(Self {
            n: values.len() as u64,
            mean,
            sd,
        })
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            n: self.n,
            mean: self.mean * factor,
            sd: self.sd * factor,
        }
    }
}

/// Significance annotation at the .05 / .01 / .001 cutpoints.
#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum Stars {
    #[default]
    None,
    One,
    Two,
    Three,
}

impl Stars {
    pub fn as_str(self) -> &'static str {
        match self {
            Stars::None => "",
            Stars::One => "*",
            Stars::Two => "**",
            Stars::Three => "***",
        }
    }

    /// Parses the printed form (`""`, `"*"`, `"**"`, `"***"`).
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "" => Some(Stars::None),
            "*" => Some(Stars::One),
            "**" => Some(Stars::Two),
            "***" => Some(Stars::Three),
            _ => None,
        }
    }
}

impl fmt::Display for Stars {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTestResult {
    pub t: f64,
    pub df: f64,
    /// Two-sided p-value.
    pub p: f64,
    pub stars: Stars,
}

/// Direction of a significant adjusted residual.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellFlag {
    #[default]
    None,
    Below,
    Above,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareCell {
    pub observed: u64,
    pub expected: f64,
    pub adj_residual: f64,
    pub flag: CellFlag,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareResult {
    pub chi2: f64,
    pub df: u32,
    pub p: f64,
    pub stars: Stars,
    pub cells: Vec<Vec<ChiSquareCell>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KappaResult {
    pub kappa: f64,
    pub observed_agreement: f64,
    pub expected_agreement: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw() -> RawVideoMeta {
        RawVideoMeta {
            video_id: "v1".into(),
            author_id: "a1".into(),
            verified: false,
            follower_count: 10,
            duration_s: 15,
            play_count: 100,
            like_count: 5,
            comment_count: 1,
            share_count: 0,
            hashtags: vec!["blm".into()],
            posted_at: NaiveDate::from_ymd_opt(2020, 6, 1).unwrap(),
        }
    }

    #[test]
    fn well_formed_meta_passes_through() {
        let meta = validate_video_meta(raw()).unwrap();
        assert_eq!(RawVideoMeta::from(meta), raw());
    }

    #[test]
    fn zero_duration_rejected() {
        let mut r = raw();
        r.duration_s = 0;
        let err = validate_video_meta(r).unwrap_err();
        assert_eq!(err.field, "duration_s");
        assert_eq!(err.message, "duration_s < 1");
    }

    #[test]
    fn negative_play_count_rejected() {
        let mut r = raw();
        r.play_count = -1;
        let err = validate_video_meta(r).unwrap_err();
        assert_eq!(err.field, "play_count");
        assert_eq!(err.message, "negative count");
    }

    #[test]
    fn empty_id_rejected() {
        let mut r = raw();
        r.video_id.clear();
        assert_eq!(validate_video_meta(r).unwrap_err().field, "video_id");
    }

    #[test]
    fn uppercase_hashtag_rejected() {
        let mut r = raw();
        r.hashtags.push("BLM".into());
        assert_eq!(validate_video_meta(r).unwrap_err().field, "hashtags");
    }

    fn frames(ts: &[u32]) -> Vec<FrameScore> {
        ts.iter().map(|&t| FrameScore::blank(t)).collect()
    }

    #[test]
    fn increasing_stream_accepted() {
        assert_eq!(validate_score_stream(frames(&[0, 1, 2])).unwrap().len(), 3);
    }

    #[test]
    fn repeated_t_index_rejected_at_index_one() {
        let err = validate_score_stream(frames(&[0, 0, 1])).unwrap_err();
        assert_eq!(err.index, 1);
        assert_eq!(err.source.field, "t_index");
    }

    #[test]
    fn violence_above_one_rejected() {
        let mut s = frames(&[0, 1]);
        s[1].violence = 1.2;
        let err = validate_score_stream(s).unwrap_err();
        assert_eq!(err.index, 1);
        assert!(err.source.message.starts_with("confidence out of range"));
    }

    #[test]
    fn nan_confidence_rejected() {
        let mut s = frames(&[0]);
        s[0].police_conf = f64::NAN;
        assert!(validate_score_stream(s).is_err());
    }

    #[test]
    fn largest_head_area_of_faceless_frame_is_zero() {
        assert_eq!(FrameScore::blank(0).largest_head_area(), 0.0);
    }

    #[test]
    fn group_summary_uses_sample_sd() {
        let s = GroupSummary::from_values(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(s.n, 4);
        assert!((s.mean - 2.5).abs() < 1e-15);
        assert!((s.sd - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn stars_round_trip_through_printed_form() {
        for s in [Stars::None, Stars::One, Stars::Two, Stars::Three] {
            assert_eq!(Stars::parse(s.as_str()), Some(s));
        }
        assert_eq!(Stars::parse("****"), None);
    }
}
