//! Fitting rule parameters to hand-coded labels.
//!
//! Covers the annotation side as well: drawing a stratified sample for
//! coding, splitting coded videos into train and validation sets, and
//! intercoder agreement via Cohen's kappa.

use std::collections::{BTreeMap, HashSet};
use std::io::Read;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{IngestError, ScoreStreams};
use crate::model::{Element, FrameLabelSet, FrameScore, KappaResult};
use crate::rules::{
    classify_confrontation, classify_debate, classify_riot, classify_spectacle, classify_video,
    RuleConfig, RuleError,
};

#[derive(Debug, Error)]
pub enum CalibrateError {
    #[error("no score stream for labeled video {0}")]
    MissingStream(String),
    #[error("grid is empty: {0}")]
    EmptyGrid(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("no labeled videos to evaluate")]
    NoData,
    #[error(
        "stratified sample infeasible for {element}: need more than {needed_above} positives, at most {attainable} attainable"
    )]
    Infeasible {
        element: Element,
        needed_above: usize,
        attainable: usize,
    },
    #[error("sample size {k} exceeds corpus size {n}")]
    SampleTooLarge { k: usize, n: usize },
    #[error("n_train {n_train} must be smaller than the {n} labeled videos")]
    BadSplit { n_train: usize, n: usize },
    #[error("coder label vectors differ in length: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("kappa needs at least one coded item")]
    EmptyCoding,
    #[error("kappa undefined: chance agreement is 1 but the coders disagree")]
    KappaUndefined,
    #[error("video {video_id}: {source}")]
    Rule {
        video_id: String,
        #[source]
        source: RuleError,
    },
    #[error(transparent)]
    Ingest(#[from] IngestError),
}

/// Human-coded presence of the five elements.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GoldLabels {
    pub riot: bool,
    pub confrontation: bool,
    pub spectacle: bool,
    pub debate: bool,
    pub black_identity: bool,
}

impl GoldLabels {
    pub fn get(&self, element: Element) -> bool {
        match element {
            Element::Riot => self.riot,
            Element::Confrontation => self.confrontation,
            Element::Spectacle => self.spectacle,
            Element::Debate => self.debate,
            Element::BlackIdentity => self.black_identity,
        }
    }

    pub fn from_labels(labels: &FrameLabelSet) -> Self {
        Self {
            riot: labels.riot,
            confrontation: labels.confrontation,
            spectacle: labels.spectacle,
            debate: labels.debate,
            black_identity: labels.black_presence,
        }
    }
}

/// One line of the labeled-video file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LabeledRecord {
    video_id: String,
    riot: bool,
    confrontation: bool,
    spectacle: bool,
    debate: bool,
    black_identity: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "LabeledRecord", into = "LabeledRecord")]
pub struct LabeledVideo {
    pub video_id: String,
    pub gold: GoldLabels,
}

impl From<LabeledRecord> for LabeledVideo {
    fn from(r: LabeledRecord) -> Self {
        Self {
            video_id: r.video_id,
            gold: GoldLabels {
                riot: r.riot,
                confrontation: r.confrontation,
                spectacle: r.spectacle,
                debate: r.debate,
                black_identity: r.black_identity,
            },
        }
    }
}

impl From<LabeledVideo> for LabeledRecord {
    fn from(v: LabeledVideo) -> Self {
        Self {
            video_id: v.video_id,
            riot: v.gold.riot,
            confrontation: v.gold.confrontation,
            spectacle: v.gold.spectacle,
            debate: v.gold.debate,
            black_identity: v.gold.black_identity,
        }
    }
}

pub fn parse_labeled(reader: impl Read) -> Result<Vec<LabeledVideo>, IngestError> {
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
        let v: LabeledVideo = serde_json::from_str(line).map_err(|e| IngestError::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(v);
    }
    Ok(out)
}

pub fn load_labeled(path: &Path) -> Result<Vec<LabeledVideo>, IngestError> {
    let file = std::fs::File::open(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_labeled(file)
}

/// How per-element accuracy is computed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccuracyMode {
    /// Fraction of videos whose predicted label equals the gold label.
    #[default]
    Plain,
    /// Mean of the true-positive and true-negative rates; when gold has only
    /// one class, the rate for that class.
    Balanced,
}

/// Confusion counts for one element.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl Tally {
    pub fn record(&mut self, predicted: bool, gold: bool) {
        match (predicted, gold) {
            (true, true) => self.tp += 1,
            (false, false) => self.tn += 1,
            (true, false) => self.fp += 1,
            (false, true) => self.fn_ += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.tp + self.tn + self.fp + self.fn_
    }

    pub fn accuracy(&self, mode: AccuracyMode) -> f64 {
        match mode {
            AccuracyMode::Plain => (self.tp + self.tn) as f64 / self.total() as f64,
            AccuracyMode::Balanced => {
                let pos = self.tp + self.fn_;
                let neg = self.tn + self.fp;
                match (pos, neg) {
                    (0, 0) => f64::NAN,
                    (0, _) => self.tn as f64 / neg as f64,
                    (_, 0) => self.tp as f64 / pos as f64,
                    _ => 0.5 * (self.tp as f64 / pos as f64 + self.tn as f64 / neg as f64),
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub riot: f64,
    pub confrontation: f64,
    pub spectacle: f64,
    pub debate: f64,
    pub black_identity: f64,
    /// Unweighted mean of the five element accuracies.
    pub overall: f64,
}

impl AccuracyReport {
    /// Accuracies in [`Element::ALL`] order.
    pub fn from_accuracies(acc: [f64; 5]) -> Self {
        Self {
            riot: acc[0],
            confrontation: acc[1],
            spectacle: acc[2],
            debate: acc[3],
            black_identity: acc[4],
            overall: acc.iter().sum::<f64>() / 5.0,
        }
    }

    pub fn get(&self, element: Element) -> f64 {
        match element {
            Element::Riot => self.riot,
            Element::Confrontation => self.confrontation,
            Element::Spectacle => self.spectacle,
            Element::Debate => self.debate,
            Element::BlackIdentity => self.black_identity,
        }
    }
}

fn stream_for<'a>(
    streams: &'a ScoreStreams,
    video: &LabeledVideo,
) -> Result<&'a [FrameScore], CalibrateError> {
    streams
        .get(&video.video_id)
        .map(Vec::as_slice)
        .ok_or_else(|| CalibrateError::MissingStream(video.video_id.clone()))
}

/// Confusion counts per element, in [`Element::ALL`] order.
pub fn tally(
    cfg: &RuleConfig,
    labeled: &[LabeledVideo],
    streams: &ScoreStreams,
) -> Result<[Tally; 5], CalibrateError> {
    let mut tallies = [Tally::default(); 5];
    for video in labeled {
        let frames = stream_for(streams, video)?;
        let predicted = classify_video(frames, cfg).map_err(|source| CalibrateError::Rule {
            video_id: video.video_id.clone(),
            source,
        })?;
        for (t, e) in tallies.iter_mut().zip(Element::ALL) {
            t.record(predicted.get(e), video.gold.get(e));
        }
    }
    Ok(tallies)
}

/// Per-element and overall accuracy of `cfg` against the gold labels.
pub fn evaluate(
    cfg: &RuleConfig,
    labeled: &[LabeledVideo],
    streams: &ScoreStreams,
    mode: AccuracyMode,
) -> Result<AccuracyReport, CalibrateError> {
    if labeled.is_empty() {
        return Err(CalibrateError::NoData);
    }
    let t = tally(cfg, labeled, streams)?;
    Ok(AccuracyReport::from_accuracies(t.map(|t| t.accuracy(mode))))
}

/// Candidate values per parameter. An absent list keeps the base value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub riot_violence_threshold: Option<Vec<f64>>,
    pub riot_min_run: Option<Vec<u32>>,
    pub confront_police_threshold: Option<Vec<f64>>,
    pub confront_min_run: Option<Vec<u32>>,
    pub spectacle_crowd_threshold: Option<Vec<u32>>,
    pub spectacle_min_run: Option<Vec<u32>>,
    pub debate_max_people: Option<Vec<u32>>,
    pub debate_area_low: Option<Vec<f64>>,
    pub debate_run_low: Option<Vec<u32>>,
    pub debate_area_high: Option<Vec<f64>>,
    pub debate_run_high: Option<Vec<u32>>,
    /// Frames to tune; black identity has no tunable parameters.
    pub target_elements: Vec<Element>,
}

type Setter = fn(&mut RuleConfig, f64);
type Getter = fn(&RuleConfig) -> f64;

/// A tunable parameter: name, candidates (widened to f64), setter, getter.
struct Axis {
    name: &'static str,
    values: Vec<f64>,
    set: Setter,
    get: Getter,
}

fn floats(v: &Option<Vec<f64>>) -> Option<Vec<f64>> {
    v.clone()
}

fn ints(v: &Option<Vec<u32>>) -> Option<Vec<f64>> {
    v.as_ref()
        .map(|v| v.iter().map(|&x| f64::from(x)).collect())
}

macro_rules! axis {
    ($name:ident, f64, $spec:expr) => {
        (
            stringify!($name),
            floats(&$spec.$name),
            (|c: &mut RuleConfig, v: f64| c.$name = v) as Setter,
            (|c: &RuleConfig| c.$name) as Getter,
        )
    };
    ($name:ident, u32, $spec:expr) => {
        (
            stringify!($name),
            ints(&$spec.$name),
            (|c: &mut RuleConfig, v: f64| c.$name = v as u32) as Setter,
            (|c: &RuleConfig| f64::from(c.$name)) as Getter,
        )
    };
}

impl GridSpec {
    /// Wide default grid: confidence steps of 0.05, run lengths 1..=8,
    /// crowd thresholds {50, 100, 150, 200, 300}, head areas from 0.01 to
    /// 0.30 on a coarse ladder.
    pub fn default_grid() -> Self {
        let conf: Vec<f64> = (1..=19).map(|i| f64::from(i) * 0.05).collect();
        let runs: Vec<u32> = (1..=8).collect();
        Self {
            riot_violence_threshold: Some(conf.clone()),
            riot_min_run: Some(runs.clone()),
            confront_police_threshold: Some(conf),
            confront_min_run: Some(runs.clone()),
            spectacle_crowd_threshold: Some(vec![50, 100, 150, 200, 300]),
            spectacle_min_run: Some(runs.clone()),
            debate_max_people: Some(vec![3, 4, 5, 6]),
            debate_area_low: Some(vec![0.01, 0.02, 0.03, 0.05, 0.08, 0.10]),
            debate_run_low: Some(runs.clone()),
            debate_area_high: Some(vec![0.10, 0.15, 0.20, 0.25, 0.30]),
            debate_run_high: Some(runs),
            target_elements: Element::FRAMES.to_vec(),
        }
    }

    /// Grid that contains only the values of `cfg`.
    pub fn single_point(cfg: &RuleConfig) -> Self {
        Self {
            riot_violence_threshold: Some(vec![cfg.riot_violence_threshold]),
            riot_min_run: Some(vec![cfg.riot_min_run]),
            confront_police_threshold: Some(vec![cfg.confront_police_threshold]),
            confront_min_run: Some(vec![cfg.confront_min_run]),
            spectacle_crowd_threshold: Some(vec![cfg.spectacle_crowd_threshold]),
            spectacle_min_run: Some(vec![cfg.spectacle_min_run]),
            debate_max_people: Some(vec![cfg.debate_max_people]),
            debate_area_low: Some(vec![cfg.debate_area_low]),
            debate_run_low: Some(vec![cfg.debate_run_low]),
            debate_area_high: Some(vec![cfg.debate_area_high]),
            debate_run_high: Some(vec![cfg.debate_run_high]),
            target_elements: Element::FRAMES.to_vec(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self, CalibrateError> {
        let spec: GridSpec =
            toml::from_str(text).map_err(|e| CalibrateError::InvalidGrid(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self, CalibrateError> {
        let text = std::fs::read_to_string(path).map_err(|source| IngestError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    fn axes(&self, element: Element) -> Vec<Axis> {
        let raw = match element {
            Element::Riot => vec![
                axis!(riot_violence_threshold, f64, self),
                axis!(riot_min_run, u32, self),
            ],
            Element::Confrontation => vec![
                axis!(confront_police_threshold, f64, self),
                axis!(confront_min_run, u32, self),
            ],
            Element::Spectacle => vec![
                axis!(spectacle_crowd_threshold, u32, self),
                axis!(spectacle_min_run, u32, self),
            ],
            Element::Debate => vec![
                axis!(debate_max_people, u32, self),
                axis!(debate_area_low, f64, self),
                axis!(debate_run_low, u32, self),
                axis!(debate_area_high, f64, self),
                axis!(debate_run_high, u32, self),
            ],
            Element::BlackIdentity => Vec::new(),
        };
        raw.into_iter()
            .map(|(name, values, set, get)| Axis {
                name,
                values: values.unwrap_or_default(),
                set,
                get,
            })
            .collect()
    }

    /// Every listed value must be a legal config value, and no list may be
    /// empty.
    pub fn validate(&self) -> Result<(), CalibrateError> {
        if self.target_elements.is_empty() {
            return Err(CalibrateError::EmptyGrid("no target elements".into()));
        }
        if self.target_elements.contains(&Element::BlackIdentity) {
            return Err(CalibrateError::InvalidGrid(
                "black_identity has no tunable parameters".into(),
            ));
        }
        let listed = |name: &str| -> bool {
            match name {
                "riot_violence_threshold" => self.riot_violence_threshold.is_some(),
                "riot_min_run" => self.riot_min_run.is_some(),
                "confront_police_threshold" => self.confront_police_threshold.is_some(),
                "confront_min_run" => self.confront_min_run.is_some(),
                "spectacle_crowd_threshold" => self.spectacle_crowd_threshold.is_some(),
                "spectacle_min_run" => self.spectacle_min_run.is_some(),
                "debate_max_people" => self.debate_max_people.is_some(),
                "debate_area_low" => self.debate_area_low.is_some(),
                "debate_run_low" => self.debate_run_low.is_some(),
                "debate_area_high" => self.debate_area_high.is_some(),
                "debate_run_high" => self.debate_run_high.is_some(),
                _ => false,
            }
        };
        for element in Element::FRAMES {
            for axis in self.axes(element) {
                if !listed(axis.name) {
                    continue;
                }
                if axis.values.is_empty() {
                    return Err(CalibrateError::EmptyGrid(format!(
                        "{} has no values",
                        axis.name
                    )));
                }
                for &v in &axis.values {
                    let mut cfg = RuleConfig::default();
                    (axis.set)(&mut cfg, v);
                    cfg.validate().map_err(|e| {
                        CalibrateError::InvalidGrid(format!("{} = {v}: {e}", axis.name))
                    })?;
                }
            }
        }
        Ok(())
    }

    /// Number of grid points evaluated for one element.
    pub fn point_count(&self, element: Element) -> usize {
        self.axes(element)
            .iter()
            .map(|a| a.values.len().max(1))
            .product()
    }
}

/// Outcome of a grid search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub config: RuleConfig,
    /// Accuracy of `config` on the training videos.
    pub report: AccuracyReport,
    /// Train accuracy of the best point per tuned element.
    pub tuned: BTreeMap<Element, f64>,
    pub warnings: Vec<String>,
}

/// Cartesian product of the element's axes applied to `base`; returns the
/// configs together with their axis values (for tie-breaking).
fn grid_points(axes: &[Axis], base: &RuleConfig) -> Vec<(RuleConfig, Vec<f64>)> {
    let mut points = vec![(base.clone(), Vec::new())];
    for axis in axes {
        let values = if axis.values.is_empty() {
            vec![(axis.get)(base)]
        } else {
            axis.values.clone()
        };
        points = points
            .into_iter()
            .flat_map(|(cfg, key)| {
                values.iter().map(move |&v| {
                    let mut next = cfg.clone();
                    (axis.set)(&mut next, v);
                    let mut key = key.clone();
                    key.push(v);
                    (next, key)
                })
            })
            .collect();
    }
    points
}

fn predict(
    element: Element,
    frames: &[FrameScore],
    cfg: &RuleConfig,
    debate: bool,
) -> Result<bool, RuleError> {
    Ok(match element {
        Element::Riot => classify_riot(frames, cfg),
        Element::Spectacle => classify_spectacle(frames, cfg),
        Element::Debate => classify_debate(frames, cfg),
        Element::Confrontation => classify_confrontation(frames, debate, cfg)?,
        Element::BlackIdentity => crate::rules::classify_black_identity(frames, cfg).0,
    })
}

/// Exhaustive per-element search.
///
/// Riot, spectacle and debate are tuned independently; confrontation is
/// tuned last, with the debate verdicts of the already chosen debate
/// parameters. Among equally accurate points the one with fewest
/// departures from the default configuration wins, then the one with the
/// smallest parameter values in declaration order.
pub fn grid_search(
    train: &[LabeledVideo],
    streams: &ScoreStreams,
    grid: &GridSpec,
    base: &RuleConfig,
    mode: AccuracyMode,
) -> Result<Calibration, CalibrateError> {
    if train.is_empty() {
        return Err(CalibrateError::NoData);
    }
    grid.validate()?;
    base.validate()
        .map_err(|e| CalibrateError::InvalidGrid(format!("base config: {e}")))?;
    let frames: Vec<&[FrameScore]> = train
        .iter()
        .map(|v| stream_for(streams, v))
        .collect::<Result<_, _>>()?;

    let mut warnings = Vec::new();
    for e in Element::ALL {
        let positives = train.iter().filter(|v| v.gold.get(e)).count();
        if positives == 0 || positives == train.len() {
            warnings.push(format!(
                "gold labels for {e} have no variation ({positives} of {} positive)",
                train.len()
            ));
        }
    }
    for w in &warnings {
        log::warn!("{w}");
    }

    let defaults = RuleConfig::default();
    let mut best = base.clone();
    let mut tuned = BTreeMap::new();
    let order = [
        Element::Riot,
        Element::Spectacle,
        Element::Debate,
        Element::Confrontation,
    ];
    for element in order {
        if !grid.target_elements.contains(&element) {
            continue;
        }
        let axes = grid.axes(element);
        let debate: Vec<bool> = if element == Element::Confrontation {
            frames.iter().map(|f| classify_debate(f, &best)).collect()
        } else {
            vec![false; frames.len()]
        };
        let mut points = grid_points(&axes, &best);
        let scores: Vec<f64> = points
            .par_iter()
            .map(|(cfg, _)| {
                let mut t = Tally::default();
                for (i, video) in train.iter().enumerate() {
                    let p = predict(element, frames[i], cfg, debate[i]).map_err(|source| {
                        CalibrateError::Rule {
                            video_id: video.video_id.clone(),
                            source,
                        }
                    })?;
                    t.record(p, video.gold.get(element));
                }
                Ok(t.accuracy(mode))
            })
            .collect::<Result<_, CalibrateError>>()?;

        // sequential reduction in grid order keeps the choice scheduling-independent
        let departures = |key: &[f64]| {
            axes.iter()
                .zip(key)
                .filter(|(a, &v)| (a.get)(&defaults) != v)
                .count()
        };
        let mut winner = 0;
        for i in 1..points.len() {
            let (a, b) = (scores[i], scores[winner]);
            let better = if a != b {
                a > b
            } else {
                let (ka, kb) = (&points[i].1, &points[winner].1);
                match departures(ka).cmp(&departures(kb)) {
                    std::cmp::Ordering::Less => true,
                    std::cmp::Ordering::Greater => false,
                    std::cmp::Ordering::Equal => {
                        ka.partial_cmp(kb) == Some(std::cmp::Ordering::Less)
                    }
                }
            };
            if better {
                winner = i;
            }
        }
        tuned.insert(element, scores[winner]);
        best = points.swap_remove(winner).0;
    }

    let report = evaluate(&best, train, streams, mode)?;
    Ok(Calibration {
        config: best,
        report,
        tuned,
        warnings,
    })
}

/// Disjoint, exhaustive train/test split; deterministic given `seed`.
/// Both halves keep the input order.
pub fn split(
    labeled: &[LabeledVideo],
    n_train: usize,
    seed: u64,
) -> Result<(Vec<LabeledVideo>, Vec<LabeledVideo>), CalibrateError> {
    if n_train >= labeled.len() {
        return Err(CalibrateError::BadSplit {
            n_train,
            n: labeled.len(),
        });
    }
    let mut idx: Vec<usize> = (0..labeled.len()).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let chosen: HashSet<usize> = idx[..n_train].iter().copied().collect();
    let (train, test): (Vec<_>, Vec<_>) = labeled
        .iter()
        .enumerate()
        .partition(|(i, _)| chosen.contains(i));
    Ok((
        train.into_iter().map(|(_, v)| v.clone()).collect(),
        test.into_iter().map(|(_, v)| v.clone()).collect(),
    ))
}

/// Draws `k` videos for hand coding such that each of the five elements is
/// provisionally present in more than `min_prevalence * k` of them.
///
/// Greedy: repeatedly take the candidate (in seeded random order) that
/// covers the most still-unmet quotas, then fill up at random.
pub fn stratified_sample(
    candidates: &[(String, FrameLabelSet)],
    k: usize,
    min_prevalence: f64,
    seed: u64,
) -> Result<Vec<String>, CalibrateError> {
    if k > candidates.len() {
        return Err(CalibrateError::SampleTooLarge {
            k,
            n: candidates.len(),
        });
    }
    let floor = (min_prevalence * k as f64).floor() as usize;
    let required = floor + 1;
    for e in Element::ALL {
        let available = candidates.iter().filter(|(_, l)| l.get(e)).count();
        if available < required {
            return Err(CalibrateError::Infeasible {
                element: e,
                needed_above: floor,
                attainable: available.min(k),
            });
        }
    }

    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut need = [required; 5];
    let mut taken = vec![false; candidates.len()];
    let mut picked = Vec::with_capacity(k);
    while need.iter().any(|&n| n > 0) && picked.len() < k {
        let mut best: Option<(usize, usize)> = None;
        for &i in &order {
            if taken[i] {
                continue;
            }
            let gain = Element::ALL
                .iter()
                .zip(&need)
                .filter(|(e, &n)| n > 0 && candidates[i].1.get(**e))
                .count();
            if gain > best.map_or(0, |(_, g)| g) {
                best = Some((i, gain));
                if gain == 5 {
                    break;
                }
            }
        }
        let Some((i, _)) = best else { break };
        taken[i] = true;
        picked.push(i);
        for (n, e) in need.iter_mut().zip(Element::ALL) {
            if candidates[i].1.get(e) {
                *n = n.saturating_sub(1);
            }
        }
    }
    if let Some(pos) = (0..5).filter(|&j| need[j] > 0).max_by_key(|&j| need[j]) {
        let element = Element::ALL[pos];
        let got = picked
            .iter()
            .filter(|&&i| candidates[i].1.get(element))
            .count();
        return Err(CalibrateError::Infeasible {
            element,
            needed_above: floor,
            attainable: got,
        });
    }
    for &i in &order {
        if picked.len() == k {
            break;
        }
        if !taken[i] {
            taken[i] = true;
            picked.push(i);
        }
    }
    Ok(picked
        .into_iter()
        .map(|i| candidates[i].0.clone())
        .collect())
}

/// Cohen's kappa for two coders' binary labels.
pub fn cohen_kappa(coder_a: &[bool], coder_b: &[bool]) -> Result<KappaResult, CalibrateError> {
    if coder_a.len() != coder_b.len() {
        return Err(CalibrateError::LengthMismatch(coder_a.len(), coder_b.len()));
    }
    if coder_a.is_empty() {
        return Err(CalibrateError::EmptyCoding);
    }
    let n = coder_a.len() as f64;
    let agree = coder_a.iter().zip(coder_b).filter(|(a, b)| a == b).count() as f64;
    let pa = coder_a.iter().filter(|&&x| x).count() as f64 / n;
    let pb = coder_b.iter().filter(|&&x| x).count() as f64 / n;
    let p_o = agree / n;
    let p_e = pa * pb + (1.0 - pa) * (1.0 - pb);
    let kappa = if p_e >= 1.0 {
        if coder_a != coder_b {
            return Err(CalibrateError::KappaUndefined);
        }
        1.0
    } else {
        (p_o - p_e) / (1.0 - p_e)
    };
    Ok(KappaResult {
        kappa,
        observed_agreement: p_o,
        expected_agreement: p_e,
    })
}
