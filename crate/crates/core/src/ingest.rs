//! Corpus files: line-delimited metadata and score streams, deduplication,
//! date/hashtag filtering, and per-second frame sampling through an
//! external `ffmpeg`/`ffprobe` pair.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::process::Command;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    validate_score_stream, validate_video_meta, FaceObservation, FrameLabelSet, FrameScore,
    RawVideoMeta, ValidationError, VideoMeta,
};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: {source}")]
    Field {
        line: usize,
        #[source]
        source: ValidationError,
    },
    #[error(
        "{total} invalid record(s) ({}); first at line {first_line}: {first}",
        summarize(by_field)
    )]
    Invalid {
        total: usize,
        by_field: BTreeMap<&'static str, usize>,
        first_line: usize,
        first: ValidationError,
    },
    #[error("frame extraction tool `{tool}` not found")]
    ToolMissing { tool: String },
    #[error("`{tool}` failed on {} ({status}): {stderr}", video.display())]
    ToolFailed {
        tool: String,
        video: PathBuf,
        status: String,
        stderr: String,
    },
    #[error("{}: {message}", video.display())]
    Extraction { video: PathBuf, message: String },
}

fn summarize(by_field: &BTreeMap<&'static str, usize>) -> String {
    by_field
        .iter()
        .map(|(f, n)| format!("{f}: {n}"))
        .collect::<Vec<_>>()
        .join(", ")
}

fn open(path: &Path) -> Result<BufReader<fs::File>, IngestError> {
    fs::File::open(path)
        .map(BufReader::new)
        .map_err(|source| IngestError::Io {
            path: path.to_path_buf(),
            source,
        })
}

/// Nonblank lines with their 1-based line numbers.
fn numbered_lines(reader: impl Read) -> impl Iterator<Item = (usize, io::Result<String>)> {
    BufReader::new(reader)
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| l.as_ref().map_or(true, |s| !s.trim().is_empty()))
}

/// Reads a metadata file. Parse errors stop at the offending line;
/// validation errors are collected and reported together.
pub fn load_corpus(path: &Path) -> Result<Vec<VideoMeta>, IngestError> {
    parse_corpus(open(path)?).map_err(|e| match e {
        IngestError::Io { source, .. } => IngestError::Io {
            path: path.to_path_buf(),
            source,
        },
        other => other,
    })
}

pub fn parse_corpus(reader: impl Read) -> Result<Vec<VideoMeta>, IngestError> {
    let mut records = Vec::new();
    let mut by_field = BTreeMap::new();
    let mut first: Option<(usize, ValidationError)> = None;
    let mut total = 0;
    for (line, text) in numbered_lines(reader) {
        let text = text.map_err(|source| IngestError::Io {
            path: PathBuf::new(),
            source,
        })?;
        let raw: RawVideoMeta = serde_json::from_str(&text).map_err(|e| IngestError::Parse {
            line,
            message: e.to_string(),
        })?;
        match validate_video_meta(raw) {
            Ok(meta) => records.push(meta),
            Err(err) => {
                total += 1;
                *by_field.entry(err.field).or_insert(0) += 1;
                first.get_or_insert((line, err));
            }
        }
    }
    match first {
        None => Ok(records),
        Some((first_line, first)) => Err(IngestError::Invalid {
            total,
            by_field,
            first_line,
            first,
        }),
    }
}

/// Writes `bytes` to a sibling temp file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), IngestError> {
    let io_err = |source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file_name = path
        .file_name()
        .ok_or_else(|| io_err(io::Error::new(io::ErrorKind::InvalidInput, "no file name")))?;
    let tmp = path.with_file_name(format!(".{}.tmp", file_name.to_string_lossy()));
    let mut f = fs::File::create(&tmp).map_err(io_err)?;
    f.write_all(bytes).map_err(io_err)?;
    f.sync_all().map_err(io_err)?;
    fs::rename(&tmp, path).map_err(io_err)
}

/// One JSON object per line.
pub fn to_json_lines<T: Serialize>(items: impl IntoIterator<Item = T>) -> String {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(&item).expect("record serializes"));
        out.push('\n');
    }
    out
}

pub fn write_corpus(path: &Path, records: &[VideoMeta]) -> Result<(), IngestError> {
    let lines = to_json_lines(records.iter().cloned().map(RawVideoMeta::from));
    write_atomic(path, lines.as_bytes())
}

/// Keeps the first occurrence of each `video_id`.
pub fn dedupe(records: Vec<VideoMeta>) -> Vec<VideoMeta> {
    let mut seen = HashSet::new();
    records
        .into_iter()
        .filter(|r| seen.insert(r.video_id.clone()))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusFilter {
    /// Inclusive.
    pub date_from: NaiveDate,
    /// Inclusive.
    pub date_to: NaiveDate,
    /// Empty means no hashtag filter.
    pub hashtags_any: BTreeSet<String>,
    /// Per-hashtag cap, ranked by play count.
    pub top_n_per_hashtag: Option<usize>,
}

impl CorpusFilter {
    pub fn window(date_from: NaiveDate, date_to: NaiveDate) -> Self {
        Self {
            date_from,
            date_to,
            hashtags_any: BTreeSet::new(),
            top_n_per_hashtag: None,
        }
    }

    pub fn validate(&self) -> Result<(), ValidationError> {
        if self.date_from > self.date_to {
            return Err(ValidationError::new(
                "date_from",
                "date_from is after date_to",
            ));
        }
        if self.top_n_per_hashtag == Some(0) {
            return Err(ValidationError::new(
                "top_n_per_hashtag",
                "must be positive",
            ));
        }
        Ok(())
    }
}

/// Date window, hashtag match, then top-N by play count within each listed
/// hashtag (ties by ascending `video_id`). A video that qualifies under
/// several hashtags is kept once. Input order is preserved.
///
/// With no hashtags listed, `top_n_per_hashtag` caps the whole window.
pub fn apply_filter(records: &[VideoMeta], filter: &CorpusFilter) -> Vec<VideoMeta> {
    let candidates: Vec<&VideoMeta> = records
        .iter()
        .filter(|r| r.posted_at >= filter.date_from && r.posted_at <= filter.date_to)
        .filter(|r| {
            filter.hashtags_any.is_empty()
                || r.hashtags.iter().any(|h| filter.hashtags_any.contains(h))
        })
        .collect();
    let Some(top_n) = filter.top_n_per_hashtag else {
        return candidates.into_iter().cloned().collect();
    };

    let rank = |pool: &mut Vec<&VideoMeta>| {
        pool.sort_by(|a, b| {
            b.play_count
                .cmp(&a.play_count)
                .then_with(|| a.video_id.cmp(&b.video_id))
        });
        pool.truncate(top_n);
    };
    let mut keep: HashSet<&str> = HashSet::new();
    if filter.hashtags_any.is_empty() {
        let mut pool = candidates.clone();
        rank(&mut pool);
        keep.extend(pool.iter().map(|r| r.video_id.as_str()));
    } else {
        for tag in &filter.hashtags_any {
            let mut pool: Vec<&VideoMeta> = candidates
                .iter()
                .copied()
                .filter(|r| r.hashtags.contains(tag))
                .collect();
            rank(&mut pool);
            keep.extend(pool.iter().map(|r| r.video_id.as_str()));
        }
    }
    let mut emitted = HashSet::new();
    candidates
        .into_iter()
        .filter(|r| keep.contains(r.video_id.as_str()) && emitted.insert(r.video_id.as_str()))
        .cloned()
        .collect()
}

/// One line of a score-stream file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreRecord {
    pub video_id: String,
    pub t_index: i64,
    pub violence: f64,
    pub police_conf: f64,
    #[serde(default)]
    pub protest_conf: Option<f64>,
    pub crowd_count: i64,
    pub faces: Vec<FaceObservation>,
}

impl ScoreRecord {
    pub fn new(video_id: &str, frame: &FrameScore) -> Self {
        Self {
            video_id: video_id.to_string(),
            t_index: i64::from(frame.t_index),
            violence: frame.violence,
            police_conf: frame.police_conf,
            protest_conf: frame.protest_conf,
            crowd_count: i64::from(frame.crowd_count),
            faces: frame.faces.clone(),
        }
    }

    fn into_frame(self) -> Result<(String, FrameScore), ValidationError> {
        let t_index = u32::try_from(self.t_index)
            .map_err(|_| ValidationError::new("t_index", "t_index out of range"))?;
        let crowd_count = u32::try_from(self.crowd_count)
            .map_err(|_| ValidationError::new("crowd_count", "negative count"))?;
        Ok((
            self.video_id,
            FrameScore {
                t_index,
                violence: self.violence,
                police_conf: self.police_conf,
                protest_conf: self.protest_conf,
                crowd_count,
                faces: self.faces,
            },
        ))
    }
}

pub type ScoreStreams = BTreeMap<String, Vec<FrameScore>>;

pub fn read_score_stream(path: &Path) -> Result<ScoreStreams, IngestError> {
    parse_score_stream(open(path)?).map_err(|e| match e {
        IngestError::Io { source, .. } => IngestError::Io {
            path: path.to_path_buf(),
            source,
        },
        other => other,
    })
}

/// Groups lines by `video_id` (file order within each video) and validates
/// each group as a stream.
pub fn parse_score_stream(reader: impl Read) -> Result<ScoreStreams, IngestError> {
    let mut grouped: BTreeMap<String, (Vec<usize>, Vec<FrameScore>)> = BTreeMap::new();
    for (line, text) in numbered_lines(reader) {
        let text = text.map_err(|source| IngestError::Io {
            path: PathBuf::new(),
            source,
        })?;
        let record: ScoreRecord = serde_json::from_str(&text).map_err(|e| IngestError::Parse {
            line,
            message: e.to_string(),
        })?;
        if record.video_id.is_empty() {
            return Err(IngestError::Field {
                line,
                source: ValidationError::new("video_id", "empty video_id"),
            });
        }
        let (id, frame) = record
            .into_frame()
            .map_err(|source| IngestError::Field { line, source })?;
        let entry = grouped.entry(id).or_default();
        entry.0.push(line);
        entry.1.push(frame);
    }
    let mut streams = BTreeMap::new();
    for (id, (lines, frames)) in grouped {
        let frames = validate_score_stream(frames).map_err(|e| IngestError::Field {
            line: lines[e.index],
            source: e.source,
        })?;
        streams.insert(id, frames);
    }
    Ok(streams)
}

pub fn score_stream_lines(streams: &ScoreStreams) -> String {
    to_json_lines(
        streams
            .iter()
            .flat_map(|(id, frames)| frames.iter().map(move |f| ScoreRecord::new(id, f))),
    )
}

pub fn write_score_stream(path: &Path, streams: &ScoreStreams) -> Result<(), IngestError> {
    write_atomic(path, score_stream_lines(streams).as_bytes())
}

/// One line of a classifier output file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelRecord {
    pub video_id: String,
    pub riot: bool,
    pub confrontation: bool,
    pub spectacle: bool,
    pub debate: bool,
    pub black_presence: bool,
    pub black_group_presence: bool,
}

impl LabelRecord {
    pub fn new(video_id: &str, l: &FrameLabelSet) -> Self {
        Self {
            video_id: video_id.to_string(),
            riot: l.riot,
            confrontation: l.confrontation,
            spectacle: l.spectacle,
            debate: l.debate,
            black_presence: l.black_presence,
            black_group_presence: l.black_group_presence,
        }
    }

    pub fn labels(&self) -> FrameLabelSet {
        FrameLabelSet {
            riot: self.riot,
            confrontation: self.confrontation,
            spectacle: self.spectacle,
            debate: self.debate,
            black_presence: self.black_presence,
            black_group_presence: self.black_group_presence,
        }
    }
}

pub fn label_lines(labels: &BTreeMap<String, FrameLabelSet>) -> String {
    to_json_lines(labels.iter().map(|(id, l)| LabelRecord::new(id, l)))
}

/// Reads a label file; a repeated `video_id` is an error.
pub fn parse_labels(reader: impl Read) -> Result<BTreeMap<String, FrameLabelSet>, IngestError> {
    let mut out = BTreeMap::new();
    for (line, text) in numbered_lines(reader) {
        let text = text.map_err(|source| IngestError::Io {
            path: PathBuf::new(),
            source,
        })?;
        let record: LabelRecord = serde_json::from_str(&text).map_err(|e| IngestError::Parse {
            line,
            message: e.to_string(),
        })?;
        if out
            .insert(record.video_id.clone(), record.labels())
            .is_some()
        {
            return Err(IngestError::Parse {
                line,
                message: format!("duplicate video_id {}", record.video_id),
            });
        }
    }
    Ok(out)
}

pub fn load_labels(path: &Path) -> Result<BTreeMap<String, FrameLabelSet>, IngestError> {
    parse_labels(open(path)?).map_err(|e| match e {
        IngestError::Io { source, .. } => IngestError::Io {
            path: path.to_path_buf(),
            source,
        },
        other => other,
    })
}

/// `<out_dir>/<video_id>/<t_index:05>.jpg`
pub fn frame_image_path(out_dir: &Path, video_id: &str, t_index: u32) -> PathBuf {
    out_dir.join(video_id).join(format!("{t_index:05}.jpg"))
}

/// Cuts videos into one JPEG per whole second using external tools.
/// Images are written at native resolution.
#[derive(Debug, Clone)]
pub struct FrameSampler {
    pub ffmpeg: PathBuf,
    pub ffprobe: PathBuf,
}

impl Default for FrameSampler {
    fn default() -> Self {
        Self {
            ffmpeg: PathBuf::from("ffmpeg"),
            ffprobe: PathBuf::from("ffprobe"),
        }
    }
}

impl FrameSampler {
    fn run(
        &self,
        tool: &Path,
        video: &Path,
        args: &[&std::ffi::OsStr],
    ) -> Result<String, IngestError> {
        let tool_name = tool.display().to_string();
        let output = Command::new(tool).args(args).output().map_err(|e| {
            if e.kind() == io::ErrorKind::NotFound {
                IngestError::ToolMissing {
                    tool: tool_name.clone(),
                }
            } else {
                IngestError::ToolFailed {
                    tool: tool_name.clone(),
                    video: video.to_path_buf(),
                    status: "spawn failed".into(),
                    stderr: e.to_string(),
                }
            }
        })?;
        if !output.status.success() {
            return Err(IngestError::ToolFailed {
                tool: tool_name,
                video: video.to_path_buf(),
                status: output.status.to_string(),
                stderr: String::from_utf8_lossy(&output.stderr).trim().to_string(),
            });
        }
        Ok(String::from_utf8_lossy(&output.stdout).into_owned())
    }

    /// Container duration in seconds.
    pub fn probe_duration(&self, video: &Path) -> Result<f64, IngestError> {
        let out = self.run(
            &self.ffprobe,
            video,
            &[
                "-v".as_ref(),
                "error".as_ref(),
                "-show_entries".as_ref(),
                "format=duration".as_ref(),
                "-of".as_ref(),
                "default=noprint_wrappers=1:nokey=1".as_ref(),
                video.as_os_str(),
            ],
        )?;
        let text = out.trim();
        text.parse::<f64>()
            .ok()
            .filter(|d| d.is_finite() && *d >= 0.0)
            .ok_or_else(|| IngestError::Extraction {
                video: video.to_path_buf(),
                message: format!("unreadable duration from ffprobe: {text:?}"),
            })
    }

    /// Writes `floor(duration)` images named by second into
    /// `<out_dir>/<video stem>/` and returns their paths in time order.
    pub fn sample_frames(&self, video: &Path, out_dir: &Path) -> Result<Vec<PathBuf>, IngestError> {
        let video_id = video
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .filter(|s| !s.is_empty())
            .ok_or_else(|| IngestError::Extraction {
                video: video.to_path_buf(),
                message: "cannot derive a video id from the file name".into(),
            })?;
        let duration = self.probe_duration(video)?;
        let count = duration.floor() as u32;
        if count == 0 {
            log::warn!(
                "{}: duration {duration}s is shorter than one second; no images sampled",
                video.display()
            );
            return Ok(Vec::new());
        }
        let dir = out_dir.join(&video_id);
        fs::create_dir_all(&dir).map_err(|source| IngestError::Io {
            path: dir.clone(),
            source,
        })?;
        let pattern = dir.join("%05d.jpg");
        let count_arg = count.to_string();
        self.run(
            &self.ffmpeg,
            video,
            &[
                "-nostdin".as_ref(),
                "-v".as_ref(),
                "error".as_ref(),
                "-y".as_ref(),
                "-i".as_ref(),
                video.as_os_str(),
                "-vf".as_ref(),
                "fps=1".as_ref(),
                "-frames:v".as_ref(),
                count_arg.as_ref(),
                "-start_number".as_ref(),
                "0".as_ref(),
                "-q:v".as_ref(),
                "2".as_ref(),
                pattern.as_os_str(),
            ],
        )?;
        let paths: Vec<PathBuf> = (0..count)
            .map(|t| frame_image_path(out_dir, &video_id, t))
            .collect();
        let missing = paths.iter().filter(|p| !p.is_file()).count();
        if missing > 0 {
            return Err(IngestError::Extraction {
                video: video.to_path_buf(),
                message: format!("expected {count} images, {missing} missing after extraction"),
            });
        }
        Ok(paths)
    }

    /// One subprocess per video, run concurrently. Results follow input order.
    pub fn sample_many(
        &self,
        videos: &[PathBuf],
        out_dir: &Path,
    ) -> Vec<Result<Vec<PathBuf>, IngestError>> {
        videos
            .par_iter()
            .map(|v| self.sample_frames(v, out_dir))
            .collect()
    }
}
