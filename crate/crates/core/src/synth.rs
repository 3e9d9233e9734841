//! Synthetic score streams for demos and calibration tests.
//!
//! Each video gets low background scores plus, with some probability per
//! signal, one sustained stretch at a random level and length. Gold labels
//! are whatever the reference classifier says under a planted config, so a
//! grid containing the planted values can reproduce them exactly.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::calibrate::{GoldLabels, LabeledVideo};
use crate::ingest::ScoreStreams;
use crate::model::{FaceObservation, FrameScore};
use crate::rules::oracle::oracle_classify;
use crate::rules::{RuleConfig, RuleError};

/// Stretch placement: random start, `len` images, values from `level` to
/// `level + jitter`.
fn stretch(rng: &mut impl Rng, n: usize, max_len: usize) -> std::ops::Range<usize> {
    let len = rng.gen_range(1..=max_len.min(n));
    let start = rng.gen_range(0..=n - len);
    start..start + len
}

/// One synthetic video of `n` seconds (some seconds may be dropped).
pub fn synthetic_stream(rng: &mut impl Rng, n: usize) -> Vec<FrameScore> {
    let mut frames: Vec<FrameScore> = (0..n as u32)
        .map(|t| {
            let faces = (0..rng.gen_range(0..=2))
                .map(|_| FaceObservation {
                    head_area_fraction: rng.gen_range(0.0..0.02),
                    is_black: rng.gen_bool(0.3),
                })
                .collect();
            FrameScore {
                t_index: t,
                violence: rng.gen_range(0.0..0.35),
                police_conf: rng.gen_range(0.0..0.5),
                protest_conf: Some(rng.gen_range(0.0..1.0)),
                crowd_count: rng.gen_range(0..40),
                faces,
            }
        })
        .collect();

    if rng.gen_bool(0.6) {
        let level = rng.gen_range(0.3..0.85);
        for i in stretch(rng, n, 8) {
            frames[i].violence = (level + rng.gen_range(0.0..0.01f64)).min(1.0);
        }
    }
    if rng.gen_bool(0.5) {
        let level = rng.gen_range(0.6..0.99);
        for i in stretch(rng, n, 8) {
            frames[i].police_conf = (level + rng.gen_range(0.0..0.01f64)).min(1.0);
        }
    }
    if rng.gen_bool(0.5) {
        let level: u32 = rng.gen_range(40..320);
        for i in stretch(rng, n, 8) {
            frames[i].crowd_count = level + rng.gen_range(0..5);
        }
    }
    if rng.gen_bool(0.6) {
        let level = rng.gen_range(0.01..0.35);
        for i in stretch(rng, n, 10) {
            let area = (level + rng.gen_range(0.0..0.005f64)).min(1.0);
            frames[i].faces.insert(
                0,
                FaceObservation {
                    head_area_fraction: area,
                    is_black: rng.gen_bool(0.5),
                },
            );
        }
    }
    if rng.gen_bool(0.3) {
        let i = rng.gen_range(0..n);
        let extra = rng.gen_range(2..6);
        for _ in 0..extra {
            frames[i].faces.push(FaceObservation {
                head_area_fraction: rng.gen_range(0.0..0.02),
                is_black: rng.gen_bool(0.5),
            });
        }
    }
    if n > 4 && rng.gen_bool(0.15) {
        let drop = rng.gen_range(1..n - 1);
        frames.remove(drop);
    }
    frames
}

/// `n_videos` streams with gold labels produced by the reference classifier
/// under `planted`. Video ids are `syn00000`, `syn00001`, ...
pub fn planted_corpus(
    n_videos: usize,
    planted: &RuleConfig,
    seed: u64,
) -> Result<(ScoreStreams, Vec<LabeledVideo>), RuleError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut streams = ScoreStreams::new();
    let mut labeled = Vec::with_capacity(n_videos);
    for i in 0..n_videos {
        let id = format!("syn{i:05}");
        let len = rng.gen_range(12..=60);
        let frames = synthetic_stream(&mut rng, len);
        let labels = oracle_classify(&frames, planted)?;
        labeled.push(LabeledVideo {
            video_id: id.clone(),
            gold: GoldLabels::from_labels(&labels),
        });
        streams.insert(id, frames);
    }
    Ok((streams, labeled))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_score_stream;

    #[test]
    fn synthetic_streams_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let n = rng.gen_range(5..70);
            validate_score_stream(synthetic_stream(&mut rng, n)).unwrap();
        }
    }

    #[test]
    fn planted_corpus_is_deterministic() {
        let a = planted_corpus(20, &RuleConfig::default(), 9).unwrap();
        let b = planted_corpus(20, &RuleConfig::default(), 9).unwrap();
        assert_eq!(a, b);
    }
}
