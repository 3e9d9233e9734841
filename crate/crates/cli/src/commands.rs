use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;

use protest_frames::calibrate::{
    cohen_kappa, evaluate, grid_search, load_labeled, split, stratified_sample, AccuracyMode,
    AccuracyReport, CalibrateError, GridSpec, LabeledVideo,
};
use protest_frames::ingest::{
    label_lines, load_corpus, load_labels, read_score_stream, write_atomic, FrameSampler,
    ScoreStreams,
};
use protest_frames::model::{Element, FrameLabelSet};
use protest_frames::replicate::{
    chi_replication_tsv, load_counts, load_summary_rows, render_replication, replicate_tables,
    ttest_replication_tsv,
};
use protest_frames::report::{
    build_report, chi_square_tsv, frequency_tsv, histogram_tsv, join_labels, render_text,
    ttest_tsv, ChiSquareOutcome, ReportBundle, TTestOutcome,
};
use protest_frames::rules::{classify_batch, RuleConfig};
use protest_frames::stats::stars;

use crate::{
    CalibrateArgs, ClassifyArgs, Cli, Command, KappaArgs, ReplicateArgs, SampleArgs, StatsArgs,
    StratifyArgs,
};

/// An internal consistency check failed; maps to exit status 2.
#[derive(Debug)]
pub struct InvariantViolation(pub String);

impl std::error::Error for InvariantViolation {}

impl std::fmt::Display for InvariantViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "internal invariant violated: {}", self.0)
    }
}

struct Ctx {
    config: RuleConfig,
    seed: u64,
    out: PathBuf,
}

impl Ctx {
    fn write(&self, name: &str, contents: &str) -> Result<PathBuf> {
        let path = self.out.join(name);
        write_atomic(&path, contents.as_bytes())?;
        log::info!("wrote {}", path.display());
        Ok(path)
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let config = match &cli.config {
        Some(path) => RuleConfig::load(path)?,
        None => RuleConfig::default(),
    };
    fs::create_dir_all(&cli.out)
        .with_context(|| format!("cannot create output directory {}", cli.out.display()))?;
    let ctx = Ctx {
        config,
        seed: cli.seed,
        out: cli.out,
    };
    match cli.command {
        Command::Classify(a) => classify(&ctx, a),
        Command::Calibrate(a) => calibrate(&ctx, a),
        Command::Stats(a) => stats(&ctx, a),
        Command::ReplicateTables(a) => replicate(&ctx, a),
        Command::SampleFrames(a) => sample_frames(&ctx, a),
        Command::Kappa(a) => kappa(&ctx, a),
        Command::Stratify(a) => stratify(&ctx, a),
    }
}

/// Merges score files; a video appearing in two files is an error.
fn load_streams(paths: &[PathBuf]) -> Result<ScoreStreams> {
    let mut all = ScoreStreams::new();
    for path in paths {
        let streams =
            read_score_stream(path).with_context(|| format!("reading {}", path.display()))?;
        for (id, frames) in streams {
            if all.contains_key(&id) {
                bail!(
                    "video {id} appears in more than one score file (again in {})",
                    path.display()
                );
            }
            all.insert(id, frames);
        }
    }
    Ok(all)
}

fn classify(ctx: &Ctx, args: ClassifyArgs) -> Result<()> {
    let streams = load_streams(&args.scores)?;
    let labels = classify_batch(&streams, &ctx.config)
        .map_err(|(id, e)| anyhow::anyhow!("video {id}: {e}"))?;
    let path = ctx.write("labels.jsonl", &label_lines(&labels))?;
    println!("{} videos labeled -> {}", labels.len(), path.display());
    Ok(())
}

fn load_labeled_file(path: &Path) -> Result<Vec<LabeledVideo>> {
    let labeled = load_labeled(path).with_context(|| format!("reading {}", path.display()))?;
    let mut seen = BTreeSet::new();
    for v in &labeled {
        if !seen.insert(v.video_id.as_str()) {
            bail!("{}: duplicate video_id {}", path.display(), v.video_id);
        }
    }
    Ok(labeled)
}

#[derive(Serialize)]
struct CalibrationOutput<'a> {
    config: &'a RuleConfig,
    mode: AccuracyMode,
    n_train: usize,
    train: &'a AccuracyReport,
    n_validation: usize,
    validation: Option<AccuracyReport>,
    tuned: &'a BTreeMap<Element, f64>,
    warnings: &'a [String],
}

/// Plain and balanced accuracy of `cfg` on one set.
fn accuracy_lines(
    name: &str,
    cfg: &RuleConfig,
    set: &[LabeledVideo],
    streams: &ScoreStreams,
) -> Result<String> {
    let plain = evaluate(cfg, set, streams, AccuracyMode::Plain)?;
    let balanced = evaluate(cfg, set, streams, AccuracyMode::Balanced)?;
    let mut s = String::new();
    for e in Element::ALL {
        let _ = writeln!(
            s,
            "{name}\t{e}\t{:.4}\t{:.4}",
            plain.get(e),
            balanced.get(e)
        );
    }
    let _ = writeln!(
        s,
        "{name}\toverall\t{:.4}\t{:.4}",
        plain.overall, balanced.overall
    );
    Ok(s)
}

fn calibrate(ctx: &Ctx, args: CalibrateArgs) -> Result<()> {
    let labeled = load_labeled_file(&args.labeled)?;
    let streams = load_streams(&args.scores)?;
    let grid = match &args.grid {
        Some(path) => GridSpec::load(path)?,
        None => GridSpec::default_grid(),
    };
    let mode = if args.balanced {
        AccuracyMode::Balanced
    } else {
        AccuracyMode::Plain
    };
    let (train, validation) = match (args.train_size, &args.validation) {
        (Some(n), _) => split(&labeled, n, ctx.seed)?,
        (None, Some(path)) => (labeled, load_labeled_file(path)?),
        (None, None) => (labeled, Vec::new()),
    };
    let cal = grid_search(&train, &streams, &grid, &ctx.config, mode)?;
    let validation_report = if validation.is_empty() {
        None
    } else {
        Some(evaluate(&cal.config, &validation, &streams, mode)?)
    };

    ctx.write("calibrated_config.toml", &cal.config.to_toml_string())?;
    let output = CalibrationOutput {
        config: &cal.config,
        mode,
        n_train: train.len(),
        train: &cal.report,
        n_validation: validation.len(),
        validation: validation_report,
        tuned: &cal.tuned,
        warnings: &cal.warnings,
    };
    let mut json = serde_json::to_string_pretty(&output)?;
    json.push('\n');
    ctx.write("calibration.json", &json)?;

    let mut summary = String::from("set\telement\tplain\tbalanced\n");
    summary.push_str(&accuracy_lines("train", &cal.config, &train, &streams)?);
    if !validation.is_empty() {
        summary.push_str(&accuracy_lines(
            "validation",
            &cal.config,
            &validation,
            &streams,
        )?);
    }
    ctx.write("accuracy.tsv", &summary)?;
    print!("{summary}");
    Ok(())
}

/// Rendered statistics must agree with the numbers they came from.
fn check_report(bundle: &ReportBundle) -> Result<()> {
    let total: u64 = bundle.histogram.iter().map(|(_, c)| c).sum();
    if total != bundle.n as u64 {
        return Err(InvariantViolation(format!(
            "histogram counts sum to {total}, corpus has {}",
            bundle.n
        ))
        .into());
    }
    for r in &bundle.ttests {
        if let TTestOutcome::Test(t) = &r.outcome {
            if stars(t.p)? != t.stars {
                return Err(InvariantViolation(format!(
                    "{} x {}: stars do not match p = {}",
                    r.split.name(),
                    r.metric.name(),
                    t.p
                ))
                .into());
            }
        }
    }
    for b in &bundle.chi_square {
        if let ChiSquareOutcome::Test(r) = &b.outcome {
            if stars(r.p)? != r.stars {
                return Err(InvariantViolation(format!(
                    "{} x {}: stars do not match p = {}",
                    b.dimension.name(),
                    b.frame,
                    r.p
                ))
                .into());
            }
        }
    }
    Ok(())
}

fn stats(ctx: &Ctx, args: StatsArgs) -> Result<()> {
    let labels =
        load_labels(&args.labels).with_context(|| format!("reading {}", args.labels.display()))?;
    let meta =
        load_corpus(&args.meta).with_context(|| format!("reading {}", args.meta.display()))?;
    let (labels, meta) = join_labels(&labels, &meta)?;
    let bundle = build_report(&labels, &meta)?;
    check_report(&bundle)?;
    ctx.write("frequencies.tsv", &frequency_tsv(&bundle))?;
    ctx.write("ttests.tsv", &ttest_tsv(&bundle))?;
    ctx.write("chi_square.tsv", &chi_square_tsv(&bundle))?;
    ctx.write("duration_histogram.tsv", &histogram_tsv(&bundle))?;
    let text = render_text(&bundle);
    ctx.write("report.txt", &text)?;
    print!("{text}");
    Ok(())
}

fn replicate(ctx: &Ctx, args: ReplicateArgs) -> Result<()> {
    let summaries = load_summary_rows(&args.summaries)
        .with_context(|| format!("reading {}", args.summaries.display()))?;
    let counts =
        load_counts(&args.counts).with_context(|| format!("reading {}", args.counts.display()))?;
    let rep = replicate_tables(&summaries, &counts)?;
    ctx.write("replication_ttests.tsv", &ttest_replication_tsv(&rep))?;
    ctx.write("replication_chi_square.tsv", &chi_replication_tsv(&rep))?;
    let text = render_replication(&rep);
    ctx.write("replication.txt", &text)?;
    print!("{text}");
    Ok(())
}

fn sample_frames(ctx: &Ctx, args: SampleArgs) -> Result<()> {
    let sampler = FrameSampler {
        ffmpeg: args.ffmpeg,
        ffprobe: args.ffprobe,
    };
    let results = sampler.sample_many(&args.videos, &ctx.out);
    let mut manifest = String::from("video\timages\n");
    let mut failures = Vec::new();
    for (video, result) in args.videos.iter().zip(results) {
        match result {
            Ok(paths) => {
                let _ = writeln!(manifest, "{}\t{}", video.display(), paths.len());
            }
            Err(e) => failures.push(e.to_string()),
        }
    }
    ctx.write("frames.tsv", &manifest)?;
    print!("{manifest}");
    if !failures.is_empty() {
        bail!(
            "{} of {} videos failed:\n  {}",
            failures.len(),
            args.videos.len(),
            failures.join("\n  ")
        );
    }
    Ok(())
}

fn kappa(ctx: &Ctx, args: KappaArgs) -> Result<()> {
    let a = load_labeled_file(&args.coder_a)?;
    let b = load_labeled_file(&args.coder_b)?;
    let b_by_id: BTreeMap<&str, &LabeledVideo> =
        b.iter().map(|v| (v.video_id.as_str(), v)).collect();
    let a_ids: BTreeSet<&str> = a.iter().map(|v| v.video_id.as_str()).collect();
    let only_a: Vec<&str> = a_ids
        .iter()
        .copied()
        .filter(|id| !b_by_id.contains_key(id))
        .collect();
    let only_b: Vec<&str> = b_by_id
        .keys()
        .copied()
        .filter(|id| !a_ids.contains(id))
        .collect();
    if !only_a.is_empty() || !only_b.is_empty() {
        bail!(
            "coders labeled different videos; only in {}: [{}]; only in {}: [{}]",
            args.coder_a.display(),
            only_a.join(", "),
            args.coder_b.display(),
            only_b.join(", ")
        );
    }
    let mut out = String::from("element\tn\tkappa\tobserved_agreement\texpected_agreement\n");
    for e in Element::ALL {
        let xa: Vec<bool> = a.iter().map(|v| v.gold.get(e)).collect();
        let xb: Vec<bool> = a
            .iter()
            .map(|v| b_by_id[v.video_id.as_str()].gold.get(e))
            .collect();
        match cohen_kappa(&xa, &xb) {
            Ok(k) => {
                let _ = writeln!(
                    out,
                    "{e}\t{}\t{:.4}\t{:.4}\t{:.4}",
                    xa.len(),
                    k.kappa,
                    k.observed_agreement,
                    k.expected_agreement
                );
            }
            Err(CalibrateError::KappaUndefined) => {
                let _ = writeln!(out, "{e}\t{}\tundefined\t\t", xa.len());
            }
            Err(err) => return Err(err.into()),
        }
    }
    ctx.write("kappa.tsv", &out)?;
    print!("{out}");
    Ok(())
}

fn stratify(ctx: &Ctx, args: StratifyArgs) -> Result<()> {
    let labels =
        load_labels(&args.labels).with_context(|| format!("reading {}", args.labels.display()))?;
    let candidates: Vec<(String, FrameLabelSet)> = labels.into_iter().collect();
    let ids = stratified_sample(&candidates, args.k, args.min_prevalence, ctx.seed)?;
    let mut out = String::new();
    for id in &ids {
        out.push_str(id);
        out.push('\n');
    }
    let path = ctx.write("sample.txt", &out)?;
    println!("{} videos sampled -> {}", ids.len(), path.display());
    Ok(())
}
