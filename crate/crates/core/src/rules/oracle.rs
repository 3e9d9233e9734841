//! Brute-force reference classifier used to check the rule engine.
//!
//! Shares no code with the run scanner: each rule is decided by looking at
//! every contiguous window of every length and asking whether all its
//! images pass the threshold and sit at consecutive seconds. Quadratic in
//! the stream length (cubic counting the inner check), which is fine for
//! test-sized streams.

use crate::model::{FrameLabelSet, FrameScore};

use super::{RuleConfig, RuleError, PROTEST_SCENE_THRESHOLD};

fn any_window(frames: &[FrameScore], min_run: u32, pass: impl Fn(&FrameScore) -> bool) -> bool {
    let n = frames.len();
    for start in 0..n {
        for end in start..n {
            let window = &frames[start..=end];
            if (window.len() as u64) < u64::from(min_run) {
                continue;
            }
            let all_pass = window.iter().all(&pass);
            let consecutive = window
                .windows(2)
                .all(|w| u64::from(w[1].t_index) == u64::from(w[0].t_index) + 1);
            if all_pass && consecutive {
                return true;
            }
        }
    }
    false
}

fn biggest_head(frame: &FrameScore) -> f64 {
    let mut best = 0.0;
    for face in &frame.faces {
        if face.head_area_fraction > best {
            best = face.head_area_fraction;
        }
    }
    best
}

/// Same contract as [`super::classify_video`].
pub fn oracle_classify(
    frames: &[FrameScore],
    cfg: &RuleConfig,
) -> Result<FrameLabelSet, RuleError> {
    let riot = any_window(frames, cfg.riot_min_run, |f| {
        f.violence > cfg.riot_violence_threshold
    });
    let spectacle = any_window(frames, cfg.spectacle_min_run, |f| {
        f.crowd_count >= cfg.spectacle_crowd_threshold
    });

    let mut people = 0usize;
    for f in frames {
        people = people.max(f.faces.len());
    }
    let few_people = (people as u64) < u64::from(cfg.debate_max_people);
    let debate = few_people
        && (any_window(frames, cfg.debate_run_low, |f| {
            biggest_head(f) > cfg.debate_area_low
        }) || any_window(frames, cfg.debate_run_high, |f| {
            biggest_head(f) > cfg.debate_area_high
        }));

    if cfg.confront_requires_protest {
        for f in frames {
            if f.protest_conf.is_none() {
                return Err(RuleError::MissingProtestConf { t_index: f.t_index });
            }
        }
    }
    let police = any_window(frames, cfg.confront_min_run, |f| {
        f.police_conf > cfg.confront_police_threshold
    });
    let protest = !cfg.confront_requires_protest
        || any_window(
            frames,
            cfg.confront_min_run,
            |f| matches!(f.protest_conf, Some(p) if p > PROTEST_SCENE_THRESHOLD),
        );
    let confrontation = police && !(cfg.confront_excludes_debate && debate) && protest;

    let mut most_black = 0u64;
    for f in frames {
        let k = f.faces.iter().filter(|face| face.is_black).count() as u64;
        most_black = most_black.max(k);
    }

    Ok(FrameLabelSet {
        riot,
        confrontation,
        spectacle,
        debate,
        black_presence: most_black > 0,
        black_group_presence: most_black >= u64::from(cfg.black_group_min),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_stream_all_false() {
        assert_eq!(
            oracle_classify(&[], &RuleConfig::default()).unwrap(),
            FrameLabelSet::default()
        );
    }

    #[test]
    fn single_frame_riot_with_unit_run() {
        let cfg = RuleConfig {
            riot_min_run: 1,
            ..RuleConfig::default()
        };
        let frames = [FrameScore {
            violence: 0.9,
            ..FrameScore::blank(0)
        }];
        assert!(oracle_classify(&frames, &cfg).unwrap().riot);
    }
}
