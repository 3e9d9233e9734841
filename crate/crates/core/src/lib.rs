//! Classification of short protest videos into visual frames (riot,
//! confrontation, spectacle, debate) from per-second detector scores, plus
//! the calibration and statistics used to analyse a labeled corpus.
//!
//! The pipeline:
//!
//! * [`ingest`] reads metadata and score-stream files and cuts videos into
//!   one image per second.
//! * [`rules`] applies threshold-and-run rules to each score stream.
//! * [`calibrate`] fits rule parameters to hand-coded labels.
//! * [`stats`] provides t-tests, chi-square tests and descriptive tables.
//! * [`report`] and [`replicate`] assemble those into report files.

pub mod calibrate;
pub mod ingest;
pub mod model;
pub mod replicate;
pub mod report;
pub mod rules;
pub mod stats;
pub mod synth;

pub use model::{
    ChiSquareResult, Element, FaceObservation, FrameLabelSet, FrameScore, GroupSummary,
    KappaResult, Stars, TTestResult, VideoMeta,
};
pub use rules::{classify_video, RuleConfig};
