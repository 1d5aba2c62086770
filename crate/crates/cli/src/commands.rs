//! Subcommand implementations.

use std::io::Write;
use std::path::{Path, PathBuf};

use pge_core::checkpoint::{load_checkpoint, save_checkpoint, ModelCheckpoint};
use pge_core::config::RunConfig;
use pge_core::encoder::load_word_vectors;
use pge_core::eval::{
    confidence_report, fuse_ranks, pr_metrics, select_threshold, time_training, write_timing_csv, FusionOrder,
    PositiveClass, ScoredTriple,
};
use pge_core::kg::{
    build_inductive_split, inject_noise as inject, load_triples_with, read_corruption_log, read_triples,
    write_corruption_log, write_raw_triples, AttributeTriple, Label, NoiseMode, RawTriple, Stopwords,
};
use pge_core::model::Model;
use pge_core::rng::{stream, Stream};
use pge_core::scoring::{normalize_phase, ScoreKind};
use pge_core::synth::{generate, SynthSpec};
use pge_core::train::{train as run_training, write_epoch_log};
use pge_core::{Error, Result};

use crate::tables::{io_err, read_ranking, read_scored, Sink};
use crate::{
    Common, ConfidenceArgs, DetectArgs, EvalArgs, FuseArgs, InjectArgs, Mode, Order, Positive, SplitArgs, SynthArgs,
    TimeArgs, TrainArgs,
};

const DEFAULT_SEED: u64 = 42;

fn config_error(msg: impl Into<String>) -> Error {
    Error::Config(vec![msg.into()])
}

/// Config file (or defaults) with the common flags applied.
fn run_config(common: &Common) -> Result<RunConfig> {
    let mut run = match &common.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        run.train.seed = seed;
    }
    if common.deterministic {
        run.train.deterministic = true;
    }
    if let Some(out) = &common.out {
        run.out_dir = Some(out.clone());
    }
    Ok(run)
}

fn seed(common: &Common) -> Result<u64> {
    match (common.seed, &common.config) {
        (Some(s), _) => Ok(s),
        (None, Some(_)) => Ok(run_config(common)?.train.seed),
        (None, None) => Ok(DEFAULT_SEED),
    }
}

fn stopwords(common: &Common) -> Result<Stopwords> {
    match &common.config {
        Some(_) => run_config(common)?.stopwords.load(),
        None => Ok(Stopwords::english()),
    }
}

fn require_out(common: &Common) -> Result<&Path> {
    common
        .out
        .as_deref()
        .ok_or_else(|| config_error("this command writes several files; pass --out DIR"))
}

fn write_file(path: &Path, f: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    Sink::open(Some(dir.unwrap_or(Path::new("."))), name)?.write_with(f)
}

/// Resolve raw triples against a model's attribute list.
fn resolve(model: &Model, raw: &[RawTriple]) -> Result<Vec<AttributeTriple>> {
    raw.iter()
        .map(|r| {
            let attribute = model
                .attribute_id(&r.attribute)
                .ok_or_else(|| Error::UnknownAttribute(r.attribute.clone()))?;
            Ok(AttributeTriple {
                title: r.title.clone(),
                attribute,
                value: r.value.clone(),
                label: r.label,
            })
        })
        .collect()
}

fn score_labeled(model: &Model, raw: &[RawTriple]) -> Result<Vec<ScoredTriple>> {
    let triples = resolve(model, raw)?;
    let scores = model.score_all(&triples);
    Ok(triples.into_iter().zip(scores).map(|(t, s)| ScoredTriple::new(t, s)).collect())
}

fn threshold_from(model: &Model, valid: &Path) -> Result<f64> {
    let scored = score_labeled(model, &read_triples(valid)?)?;
    Ok(select_threshold(&scored)?.theta)
}

pub fn train(common: &Common, args: &TrainArgs) -> Result<()> {
    let mut run = run_config(common)?;
    if let Some(p) = &args.train {
        run.train_path = Some(p.clone());
    }
    if let Some(p) = &args.valid {
        run.valid_path = Some(p.clone());
    }
    if let Some(e) = args.epochs {
        run.train.epochs = e;
    }
    let mut errs = run.validate();
    if run.train_path.is_none() {
        errs.push("a training file is required (--train or train = PATH)".into());
    }
    if run.out_dir.is_none() {
        errs.push("an output directory is required (--out or out = DIR)".into());
    }
    if !errs.is_empty() {
        return Err(Error::Config(errs));
    }
    let (train_path, out) = (run.train_path.clone().unwrap_or_default(), run.out_dir.clone().unwrap_or_default());

    let graph = load_triples_with(&train_path, run.stopwords.load()?)?;
    let valid = match &run.valid_path {
        Some(p) => read_triples(p)?.iter().map(|r| graph.resolve(r)).collect::<Result<Vec<_>>>()?,
        None => Vec::new(),
    };
    let words = match &run.word_vectors {
        Some(p) => Some(load_word_vectors(
            p,
            graph.vocab(),
            run.model.d_word,
            &mut stream(run.train.seed, Stream::WordVectors),
        )?),
        None => None,
    };
    std::fs::create_dir_all(&out).map_err(|e| io_err(&out, e))?;
    let echo = run.with_absolute_paths().map_err(|e| io_err(&out, e))?;
    write_file(&out.join("config.txt"), |w| w.write_all(echo.to_text().as_bytes()))?;

    let output = match run_training(&graph, &run, &valid, words) {
        Ok(o) => o,
        Err(Error::NumericFault { triple, last_good }) => {
            if let Some(ckpt) = &last_good {
                let path = out.join("last_good.ckpt");
                save_checkpoint(ckpt, &path)?;
                eprintln!("saved last finite state to {}", path.display());
            }
            return Err(Error::NumericFault { triple, last_good });
        }
        Err(e) => return Err(e),
    };
    let ckpt_path = out.join("model.ckpt");
    save_checkpoint(&output.checkpoint, &ckpt_path)?;
    write_file(&out.join("epoch_log.csv"), |w| write_epoch_log(&output.log, w))?;
    if run.model.score.kind == ScoreKind::RotatE {
        write_file(&out.join("relation_phases.tsv"), |w| write_phases(&output.checkpoint, w))?;
    }
    println!(
        "trained {} triples for {} epochs; kept epoch {}; checkpoint {}",
        graph.len(),
        output.log.len(),
        output.best_epoch,
        ckpt_path.display()
    );
    Ok(())
}

/// Relation phases wrapped into [-π, π), one row per attribute and dimension.
fn write_phases(ckpt: &ModelCheckpoint, w: &mut dyn Write) -> std::io::Result<()> {
    let table = &ckpt.model.params.attributes;
    writeln!(w, "attribute\tindex\tphase")?;
    for (a, name) in ckpt.model.attribute_names.iter().enumerate() {
        for (j, &p) in table.row(a as u32).iter().enumerate() {
            writeln!(w, "{name}\t{j}\t{}", normalize_phase(p))?;
        }
    }
    Ok(())
}

pub fn detect(common: &Common, args: &DetectArgs) -> Result<()> {
    let ckpt = load_checkpoint(&args.checkpoint)?;
    let model = &ckpt.model;
    let raw = read_triples(&args.input)?;
    let theta = match (args.theta, &args.valid) {
        (Some(t), _) => t,
        (None, Some(v)) => threshold_from(model, v)?,
        (None, None) => return Err(config_error("pass --valid PATH or --theta VALUE")),
    };
    let scores = model.score_raw(&raw)?;
    let mut order: Vec<usize> = (0..raw.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    Sink::open(common.out.as_deref(), "detections.tsv")?.write_with(|w| {
        if raw.is_empty() {
            return Ok(());
        }
        writeln!(w, "score\tprediction\ttitle\tattribute\tvalue")?;
        for i in order {
            let t = &raw[i];
            let prediction = if scores[i] > theta { "correct" } else { "incorrect" };
            writeln!(w, "{}\t{prediction}\t{}\t{}\t{}", scores[i], t.title, t.attribute, t.value)?;
        }
        Ok(())
    })
}

pub fn eval(common: &Common, args: &EvalArgs) -> Result<()> {
    let positive = match args.positive {
        Positive::Incorrect => PositiveClass::Incorrect,
        Positive::Correct => PositiveClass::Correct,
    };
    let (test, valid) = match (&args.scored, &args.checkpoint, &args.test) {
        (Some(path), _, _) => {
            let scored = read_scored(path)?
                .into_iter()
                .map(|(score, (title, _, value), label)| {
                    ScoredTriple::new(
                        AttributeTriple {
                            title,
                            attribute: 0,
                            value,
                            label,
                        },
                        score,
                    )
                })
                .collect::<Vec<_>>();
            if args.valid.is_some() {
                return Err(config_error("--valid needs --checkpoint to score the validation set"));
            }
            (scored, None)
        }
        (None, Some(ckpt), Some(test)) => {
            let ckpt = load_checkpoint(ckpt)?;
            let scored = score_labeled(&ckpt.model, &read_triples(test)?)?;
            let theta = args.valid.as_deref().map(|v| threshold_from(&ckpt.model, v)).transpose()?;
            (scored, theta)
        }
        _ => return Err(config_error("pass --checkpoint and --test, or --scored")),
    };
    if !test.iter().any(|s| s.gold() != Label::Unlabeled) {
        return Err(config_error("the test set has no labeled triples"));
    }
    let mut report = pr_metrics(&test, positive, &args.precision);
    if let Some(theta) = valid {
        report = report.with_threshold(&test, theta);
    }
    match common.out.as_deref() {
        Some(dir) => {
            Sink::open(Some(dir), "eval_report.txt")?.write_with(|w| report.write_text(w))?;
            Sink::open(Some(dir), "pr_curve.csv")?.write_with(|w| report.write_curve_csv(w))
        }
        None => Sink::open(None, "")?.write_with(|w| report.write_text(w)),
    }
}

pub fn synth(common: &Common, args: &SynthArgs) -> Result<()> {
    let out = require_out(common)?;
    let mut spec = match &args.spec {
        Some(p) => SynthSpec::parse(&std::fs::read_to_string(p).map_err(|e| io_err(p, e))?)?,
        None => SynthSpec::default(),
    };
    if let Some(s) = common.seed {
        spec.seed = s;
    }
    if let Some(n) = args.products {
        spec.n_products = n;
    }
    if let Some(r) = args.noise {
        spec.noise_ratio = r;
    }
    let data = generate(&spec)?;
    data.write(out)?;
    println!(
        "{} triples ({} corrupted), {} valid, {} test written to {}",
        data.train.len(),
        data.corruptions.len(),
        data.valid.len(),
        data.test.len(),
        out.display()
    );
    Ok(())
}

pub fn inject_noise(common: &Common, args: &InjectArgs) -> Result<()> {
    let out = require_out(common)?;
    let graph = load_triples_with(&args.input, stopwords(common)?)?;
    let mode = match args.mode {
        Mode::Value => NoiseMode::Value,
        Mode::HeadOrTail => NoiseMode::HeadOrTail,
    };
    let (noisy, log) = inject(&graph, args.ratio, mode, &mut stream(seed(common)?, Stream::Noise))?;
    let unlabeled: Vec<RawTriple> = noisy.to_raw().into_iter().map(|r| r.with_label(Label::Unlabeled)).collect();
    Sink::open(Some(out), "train.tsv")?.write_with(|w| write_raw_triples(&unlabeled, w))?;
    Sink::open(Some(out), "corruptions.tsv")?.write_with(|w| write_corruption_log(&log, w))?;
    println!("added {} corrupted triples to {}", log.len(), graph.len());
    Ok(())
}

pub fn split_inductive(common: &Common, args: &SplitArgs) -> Result<()> {
    let graph = load_triples_with(&args.input, stopwords(common)?)?;
    let test = read_triples(&args.test)?;
    let train = build_inductive_split(&graph, &test);
    eprintln!("kept {} of {} triples", train.len(), graph.len());
    let raw = train.to_raw();
    Sink::open(common.out.as_deref(), "train.tsv")?.write_with(|w| write_raw_triples(&raw, w))
}

pub fn fuse(common: &Common, args: &FuseArgs) -> Result<()> {
    let a = read_ranking(&args.a)?;
    let b = read_ranking(&args.b)?;
    let order = match args.order {
        Order::Descending => FusionOrder::Descending,
        Order::Ascending => FusionOrder::Ascending,
    };
    let fused = fuse_ranks(&a, &b, order)?;
    Sink::open(common.out.as_deref(), "fused.tsv")?.write_with(|w| {
        writeln!(w, "r_avg\trank_a\trank_b\ttitle\tattribute\tvalue")?;
        for f in &fused {
            let (t, a, v) = &f.key;
            writeln!(w, "{}\t{}\t{}\t{t}\t{a}\t{v}", f.r_avg, f.rank_a, f.rank_b)?;
        }
        Ok(())
    })
}

pub fn confidence(common: &Common, args: &ConfidenceArgs) -> Result<()> {
    let ckpt = load_checkpoint(&args.checkpoint)?;
    let log = args.log.as_deref().map(read_corruption_log).transpose()?;
    let report = confidence_report(&ckpt, log.as_deref());
    match common.out.as_deref() {
        Some(dir) => {
            Sink::open(Some(dir), "confidence_report.txt")?.write_with(|w| report.write_text(w))?;
            Sink::open(Some(dir), "confidence_histogram.csv")?.write_with(|w| report.write_histogram_csv(w))?;
            let mut order: Vec<usize> = (0..ckpt.triples.len()).collect();
            order.sort_by(|&a, &b| ckpt.confidence[a].total_cmp(&ckpt.confidence[b]));
            Sink::open(Some(dir), "confidences.tsv")?.write_with(|w| {
                writeln!(w, "confidence\ttitle\tattribute\tvalue")?;
                for i in order {
                    let t = &ckpt.triples[i];
                    writeln!(w, "{}\t{}\t{}\t{}", ckpt.confidence[i], t.title, t.attribute, t.value)?;
                }
                Ok(())
            })
        }
        None => Sink::open(None, "")?.write_with(|w| report.write_text(w)),
    }
}

pub fn time(common: &Common, args: &TimeArgs) -> Result<()> {
    let mut run = run_config(common)?;
    if let Some(p) = &args.train {
        run.train_path = Some(p.clone());
    }
    let path: PathBuf = run
        .train_path
        .clone()
        .ok_or_else(|| config_error("a training file is required (--train or train = PATH)"))?;
    let errs = run.validate();
    if !errs.is_empty() {
        return Err(Error::Config(errs));
    }
    let graph = load_triples_with(&path, run.stopwords.load()?)?;
    let rows = time_training(&graph, &run, &args.ratios)?;
    Sink::open(common.out.as_deref(), "timing.csv")?.write_with(|w| write_timing_csv(&rows, w))
}
