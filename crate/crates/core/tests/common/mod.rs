//! Random streams and configs that hit rule boundaries often.
#![allow(dead_code)]

use std::path::PathBuf;

use protest_frames::model::{FaceObservation, FrameScore};
use protest_frames::rules::RuleConfig;
use rand::seq::SliceRandom;
use rand::Rng;

/// Confidence values that coincide with likely thresholds.
const CONF_STOPS: [f64; 9] = [0.0, 0.3, 0.5, 0.6, 0.7, 0.85, 0.9, 0.95, 1.0];
const AREA_STOPS: [f64; 7] = [0.0, 0.01, 0.03, 0.05, 0.1, 0.2, 0.3];
const CROWD_STOPS: [u32; 6] = [0, 50, 100, 149, 150, 151];

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn conf(rng: &mut impl Rng) -> f64 {
    if rng.gen_bool(0.5) {
        *CONF_STOPS.choose(rng).unwrap()
    } else {
        rng.gen_range(0.0..=1.0)
    }
}

fn area(rng: &mut impl Rng) -> f64 {
    if rng.gen_bool(0.5) {
        *AREA_STOPS.choose(rng).unwrap()
    } else {
        rng.gen_range(0.0..0.4)
    }
}

fn crowd(rng: &mut impl Rng) -> u32 {
    if rng.gen_bool(0.5) {
        *CROWD_STOPS.choose(rng).unwrap()
    } else {
        rng.gen_range(0..400)
    }
}

pub fn random_frame(rng: &mut impl Rng, t_index: u32, protest: bool) -> FrameScore {
    let faces = (0..rng.gen_range(0..=7))
        .map(|_| FaceObservation {
            head_area_fraction: area(rng),
            is_black: rng.gen_bool(0.3),
        })
        .collect();
    FrameScore {
        t_index,
        violence: conf(rng),
        police_conf: conf(rng),
        protest_conf: if protest { Some(conf(rng)) } else { None },
        crowd_count: crowd(rng),
        faces,
    }
}

/// Up to `max_len` frames with strictly increasing t_index and occasional
/// gaps. With `sticky`, consecutive frames often repeat the previous
/// frame's scores so that long runs are common.
pub fn random_stream(rng: &mut impl Rng, max_len: usize) -> Vec<FrameScore> {
    let n = rng.gen_range(0..=max_len);
    let protest_mode = rng.gen_range(0..3);
    let mut t = rng.gen_range(0..3u32);
    let mut out: Vec<FrameScore> = Vec::with_capacity(n);
    for _ in 0..n {
        let protest = match protest_mode {
            0 => true,
            1 => false,
            _ => rng.gen_bool(0.9),
        };
        let frame = match out.last() {
            Some(prev) if rng.gen_bool(0.6) => FrameScore {
                t_index: t,
                ..prev.clone()
            },
            _ => random_frame(rng, t, protest),
        };
        out.push(frame);
        t += if rng.gen_bool(0.1) {
            rng.gen_range(2..4)
        } else {
            1
        };
    }
    out
}

pub fn random_config(rng: &mut impl Rng) -> RuleConfig {
    let low = area(rng);
    RuleConfig {
        riot_violence_threshold: conf(rng),
        riot_min_run: rng.gen_range(1..=6),
        confront_police_threshold: conf(rng),
        confront_min_run: rng.gen_range(1..=6),
        confront_excludes_debate: rng.gen_bool(0.7),
        confront_requires_protest: rng.gen_bool(0.3),
        spectacle_crowd_threshold: crowd(rng).max(1),
        spectacle_min_run: rng.gen_range(1..=6),
        debate_max_people: rng.gen_range(1..=8),
        debate_area_low: low,
        debate_run_low: rng.gen_range(1..=8),
        debate_area_high: (low + area(rng)).min(1.0),
        debate_run_high: rng.gen_range(1..=6),
        black_group_min: rng.gen_range(1..=4),
    }
}

/// Rows of a three-column `x  df  value` reference table.
pub fn reference_table(name: &str) -> Vec<(f64, f64, f64)> {
    let text = std::fs::read_to_string(fixture(name)).unwrap();
    text.lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let v: Vec<f64> = l.split('\t').map(|c| c.parse().unwrap()).collect();
            (v[0], v[1], v[2])
        })
        .collect()
}

pub fn jsonl(name: &str) -> Vec<serde_json::Value> {
    let text = std::fs::read_to_string(fixture(name)).unwrap();
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

pub fn floats(v: &serde_json::Value) -> Vec<f64> {
    v.as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect()
}

pub fn bools(v: &serde_json::Value) -> Vec<bool> {
    v.as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_i64().unwrap() != 0)
        .collect()
}
