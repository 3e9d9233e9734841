//! Threshold-and-consecutiveness rules that turn a per-second score stream
//! into video-level frame labels.
//!
//! Every rule reduces to the same question: does some run of images at
//! consecutive seconds satisfy a predicate for at least `min_run` images?
//! A missing second breaks the run.

use std::collections::BTreeMap;

use rayon::prelude::*;
use thiserror::Error;

use crate::model::{FrameLabelSet, FrameScore};

mod config;
pub mod oracle;

pub use config::RuleConfig;

/// Confidence above which an image counts as a protest scene when the
/// confrontation rule requires one.
pub const PROTEST_SCENE_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RuleError {
    #[error("invalid rule configuration: {0}")]
    InvalidConfig(String),
    #[error(
        "confront_requires_protest is set but the frame at t_index {t_index} has no protest_conf"
    )]
    MissingProtestConf { t_index: u32 },
}

/// A per-image threshold comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Predicate {
    /// `violence > threshold`
    ViolenceAbove(f64),
    /// `police_conf > threshold`
    PoliceAbove(f64),
    /// `protest_conf > threshold`; a missing value never satisfies it.
    ProtestAbove(f64),
    /// `crowd_count >= threshold`
    CrowdAtLeast(u32),
    /// largest `head_area_fraction > threshold`
    LargestHeadAbove(f64),
}

impl Predicate {
    pub fn holds(&self, frame: &FrameScore) -> bool {
        match *self {
            Predicate::ViolenceAbove(t) => frame.violence > t,
            Predicate::PoliceAbove(t) => frame.police_conf > t,
            Predicate::ProtestAbove(t) => frame.protest_conf.is_some_and(|p| p > t),
            Predicate::CrowdAtLeast(t) => frame.crowd_count >= t,
            Predicate::LargestHeadAbove(t) => frame.largest_head_area() > t,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunQuery {
    pub predicate: Predicate,
    /// At least 1.
    pub min_run: u32,
}

impl RunQuery {
    pub fn new(predicate: Predicate, min_run: u32) -> Self {
        Self {
            predicate,
            min_run: min_run.max(1),
        }
    }
}

/// True iff some run of frames at consecutive `t_index` values all
/// satisfying the predicate has length `>= min_run`. Single pass.
pub fn has_run(frames: &[FrameScore], query: &RunQuery) -> bool {
    let mut run = 0u32;
    let mut prev_t: Option<u32> = None;
    for frame in frames {
        if query.predicate.holds(frame) {
            let continues =
                run > 0 && prev_t.is_some_and(|p| p.checked_add(1) == Some(frame.t_index));
            run = if continues { run + 1 } else { 1 };
            if run >= query.min_run {
                return true;
            }
        } else {
            run = 0;
        }
        prev_t = Some(frame.t_index);
    }
    false
}

pub fn classify_riot(frames: &[FrameScore], cfg: &RuleConfig) -> bool {
    has_run(
        frames,
        &RunQuery::new(
            Predicate::ViolenceAbove(cfg.riot_violence_threshold),
            cfg.riot_min_run,
        ),
    )
}

pub fn classify_spectacle(frames: &[FrameScore], cfg: &RuleConfig) -> bool {
    has_run(
        frames,
        &RunQuery::new(
            Predicate::CrowdAtLeast(cfg.spectacle_crowd_threshold),
            cfg.spectacle_min_run,
        ),
    )
}

/// Largest number of faces detected in any one image.
pub fn max_people(frames: &[FrameScore]) -> usize {
    frames.iter().map(|f| f.faces.len()).max().unwrap_or(0)
}

/// Few people overall, and one prominent face held for long enough. The
/// person gate applies to both the low-area and high-area branches.
pub fn classify_debate(frames: &[FrameScore], cfg: &RuleConfig) -> bool {
    if max_people(frames) >= cfg.debate_max_people as usize {
        return false;
    }
    has_run(
        frames,
        &RunQuery::new(
            Predicate::LargestHeadAbove(cfg.debate_area_low),
            cfg.debate_run_low,
        ),
    ) || has_run(
        frames,
        &RunQuery::new(
            Predicate::LargestHeadAbove(cfg.debate_area_high),
            cfg.debate_run_high,
        ),
    )
}

pub fn classify_confrontation(
    frames: &[FrameScore],
    debate: bool,
    cfg: &RuleConfig,
) -> Result<bool, RuleError> {
    if cfg.confront_requires_protest {
        if let Some(f) = frames.iter().find(|f| f.protest_conf.is_none()) {
            return Err(RuleError::MissingProtestConf { t_index: f.t_index });
        }
    }
    let police = has_run(
        frames,
        &RunQuery::new(
            Predicate::PoliceAbove(cfg.confront_police_threshold),
            cfg.confront_min_run,
        ),
    );
    if !police || (cfg.confront_excludes_debate && debate) {
        return Ok(false);
    }
    if cfg.confront_requires_protest {
        return Ok(has_run(
            frames,
            &RunQuery::new(
                Predicate::ProtestAbove(PROTEST_SCENE_THRESHOLD),
                cfg.confront_min_run,
            ),
        ));
    }
    Ok(true)
}

/// `(presence, group)`: any image with at least one Black face, and any
/// image with at least `black_group_min` of them.
pub fn classify_black_identity(frames: &[FrameScore], cfg: &RuleConfig) -> (bool, bool) {
    let most = frames
        .iter()
        .map(FrameScore::black_face_count)
        .max()
        .unwrap_or(0);
    (most >= 1, most >= cfg.black_group_min as usize)
}

/// Applies every rule. Debate is decided first because confrontation
/// consumes its verdict.
pub fn classify_video(frames: &[FrameScore], cfg: &RuleConfig) -> Result<FrameLabelSet, RuleError> {
    let debate = classify_debate(frames, cfg);
    let confrontation = classify_confrontation(frames, debate, cfg)?;
    let (black_presence, black_group_presence) = classify_black_identity(frames, cfg);
    Ok(FrameLabelSet {
        riot: classify_riot(frames, cfg),
        confrontation,
        spectacle: classify_spectacle(frames, cfg),
        debate,
        black_presence,
        black_group_presence,
    })
}

/// Classifies many videos in parallel. The result does not depend on
/// scheduling: it is keyed and ordered by video id.
pub fn classify_batch(
    streams: &BTreeMap<String, Vec<FrameScore>>,
    cfg: &RuleConfig,
) -> Result<BTreeMap<String, FrameLabelSet>, (String, RuleError)> {
    streams
        .par_iter()
        .map(|(id, frames)| {
            classify_video(frames, cfg)
                .map(|labels| (id.clone(), labels))
                .map_err(|e| (id.clone(), e))
        })
        .collect::<Result<Vec<_>, _>>()
        .map(|v| v.into_iter().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::FaceObservation;

    fn violence(vals: &[f64]) -> Vec<FrameScore> {
        vals.iter()
            .enumerate()
            .map(|(i, &v)| FrameScore {
                violence: v,
                ..FrameScore::blank(i as u32)
            })
            .collect()
    }

    fn police(vals: &[f64]) -> Vec<FrameScore> {
        vals.iter()
            .enumerate()
            .map(|(i, &v)| FrameScore {
                police_conf: v,
                ..FrameScore::blank(i as u32)
            })
            .collect()
    }

    fn crowd(vals: &[u32]) -> Vec<FrameScore> {
        vals.iter()
            .enumerate()
            .map(|(i, &c)| FrameScore {
                crowd_count: c,
                ..FrameScore::blank(i as u32)
            })
            .collect()
    }

    fn faces(n_frames: usize, per_frame: &[(f64, bool)]) -> Vec<FrameScore> {
        (0..n_frames)
            .map(|i| FrameScore {
                faces: per_frame
                    .iter()
                    .map(|&(a, b)| FaceObservation {
                        head_area_fraction: a,
                        is_black: b,
                    })
                    .collect(),
                ..FrameScore::blank(i as u32)
            })
            .collect()
    }

    fn cfg() -> RuleConfig {
        RuleConfig::default()
    }

    #[test]
    fn run_of_three_detected() {
        let q = RunQuery::new(Predicate::ViolenceAbove(0.5), 3);
        assert!(has_run(&violence(&[0.6, 0.7, 0.55]), &q));
        assert!(!has_run(&violence(&[0.6, 0.7]), &q));
    }

    #[test]
    fn gap_breaks_run() {
        let frames: Vec<_> = [0, 1, 3, 4, 5]
            .iter()
            .map(|&t| FrameScore {
                violence: 1.0,
                ..FrameScore::blank(t)
            })
            .collect();
        assert!(has_run(
            &frames,
            &RunQuery::new(Predicate::ViolenceAbove(0.5), 3)
        ));
        assert!(!has_run(
            &frames,
            &RunQuery::new(Predicate::ViolenceAbove(0.5), 4)
        ));
    }

    #[test]
    fn empty_stream_has_no_run() {
        assert!(!has_run(
            &[],
            &RunQuery::new(Predicate::ViolenceAbove(0.0), 1)
        ));
    }

    #[test]
    fn riot_boundaries() {
        assert!(classify_riot(&violence(&[0.51, 0.52, 0.53]), &cfg()));
        assert!(!classify_riot(&violence(&[0.50, 0.50, 0.50]), &cfg()));
        assert!(classify_riot(&violence(&[0.9, 0.1, 0.9, 0.9, 0.9]), &cfg()));
    }

    #[test]
    fn spectacle_boundaries() {
        assert!(classify_spectacle(&crowd(&[150, 150, 150]), &cfg()));
        assert!(!classify_spectacle(&crowd(&[149, 200, 200]), &cfg()));
        assert!(classify_spectacle(&crowd(&[200; 10]), &cfg()));
    }

    #[test]
    fn debate_low_area_branch_needs_six() {
        assert!(classify_debate(&faces(6, &[(0.05, false)]), &cfg()));
        assert!(!classify_debate(&faces(5, &[(0.05, false)]), &cfg()));
    }

    #[test]
    fn debate_high_area_branch() {
        assert!(classify_debate(&faces(3, &[(0.25, false)]), &cfg()));
    }

    #[test]
    fn debate_person_gate_applies_to_both_branches() {
        let crowded = [
            (0.5, false),
            (0.01, false),
            (0.01, false),
            (0.01, false),
            (0.01, false),
        ];
        assert!(!classify_debate(&faces(10, &crowded), &cfg()));
        let four = &crowded[..4];
        assert!(classify_debate(&faces(10, four), &cfg()));
    }

    #[test]
    fn debate_gate_uses_max_over_whole_video() {
        let mut frames = faces(6, &[(0.3, false)]);
        frames.push(FrameScore {
            faces: vec![
                FaceObservation {
                    head_area_fraction: 0.01,
                    is_black: false
                };
                5
            ],
            ..FrameScore::blank(6)
        });
        assert!(!classify_debate(&frames, &cfg()));
    }

    #[test]
    fn confrontation_cases() {
        let p = police(&[0.9; 4]);
        assert!(classify_confrontation(&p, false, &cfg()).unwrap());
        assert!(!classify_confrontation(&p, true, &cfg()).unwrap());
        assert!(!classify_confrontation(&police(&[0.85; 4]), false, &cfg()).unwrap());
        let mut no_exclusion = cfg();
        no_exclusion.confront_excludes_debate = false;
        assert!(classify_confrontation(&p, true, &no_exclusion).unwrap());
    }

    #[test]
    fn confrontation_requiring_protest_needs_protest_scores() {
        let mut c = cfg();
        c.confront_requires_protest = true;
        let p = police(&[0.9; 4]);
        assert_eq!(
            classify_confrontation(&p, false, &c),
            Err(RuleError::MissingProtestConf { t_index: 0 })
        );
        let with_protest: Vec<_> = p
            .iter()
            .cloned()
            .map(|f| FrameScore {
                protest_conf: Some(0.8),
                ..f
            })
            .collect();
        assert!(classify_confrontation(&with_protest, false, &c).unwrap());
        let weak: Vec<_> = p
            .into_iter()
            .map(|f| FrameScore {
                protest_conf: Some(0.5),
                ..f
            })
            .collect();
        assert!(!classify_confrontation(&weak, false, &c).unwrap());
    }

    #[test]
    fn black_identity_cases() {
        assert_eq!(
            classify_black_identity(&faces(1, &[(0.1, true)]), &cfg()),
            (true, false)
        );
        assert_eq!(
            classify_black_identity(&faces(1, &[(0.1, true); 3]), &cfg()),
            (true, true)
        );
        assert_eq!(
            classify_black_identity(&faces(4, &[]), &cfg()),
            (false, false)
        );
    }

    #[test]
    fn black_group_counts_faces_within_one_image() {
        let mut frames = faces(1, &[(0.1, true), (0.1, true)]);
        frames.extend(
            faces(1, &[(0.1, true)])
                .into_iter()
                .map(|f| FrameScore { t_index: 1, ..f }),
        );
        assert_eq!(classify_black_identity(&frames, &cfg()), (true, false));
    }

    #[test]
    fn all_zero_stream_has_no_labels() {
        let frames: Vec<_> = (0..60).map(FrameScore::blank).collect();
        assert_eq!(
            classify_video(&frames, &cfg()).unwrap(),
            FrameLabelSet::default()
        );
    }

    #[test]
    fn riot_and_debate_with_police_run_excludes_confrontation() {
        let frames: Vec<_> = (0..8)
            .map(|t| FrameScore {
                violence: 0.9,
                police_conf: 0.95,
                faces: vec![FaceObservation {
                    head_area_fraction: 0.25,
                    is_black: false,
                }],
                ..FrameScore::blank(t)
            })
            .collect();
        let labels = classify_video(&frames, &cfg()).unwrap();
        assert!(labels.riot && labels.debate && !labels.confrontation);
        assert_eq!(labels, oracle::oracle_classify(&frames, &cfg()).unwrap());
    }

    #[test]
    fn batch_matches_sequential() {
        let mut streams = BTreeMap::new();
        streams.insert("b".to_string(), violence(&[0.9, 0.9, 0.9]));
        streams.insert("a".to_string(), police(&[0.9; 4]));
        let out = classify_batch(&streams, &cfg()).unwrap();
        assert_eq!(out.keys().collect::<Vec<_>>(), ["a", "b"]);
        assert!(out["b"].riot && out["a"].confrontation);
    }
}
