//! Flat `key = value` run configuration with `#` comments.
//!
//! Unknown keys and unparsable values are collected and reported together with
//! every violated constraint. [`RunConfig::to_text`] writes the fully resolved
//! configuration; feeding it back reproduces the same run.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::kg::Stopwords;
use crate::model::{default_n_filters, ModelConfig};
use crate::scoring::{Norm, ScoreKind};
use crate::train::TrainConfig;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum StopwordSource {
    #[default]
    English,
    None,
    File(PathBuf),
}

impl StopwordSource {
    pub fn load(&self) -> Result<Stopwords> {
        match self {
            StopwordSource::English => Ok(Stopwords::english()),
            StopwordSource::None => Ok(Stopwords::none()),
            StopwordSource::File(p) => Stopwords::from_file(p),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub word_vectors: Option<PathBuf>,
    pub stopwords: StopwordSource,
    pub train_path: Option<PathBuf>,
    pub valid_path: Option<PathBuf>,
    pub test_path: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
}

fn parse_bool(v: &str) -> std::result::Result<bool, String> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(format!("expected a boolean, got {v:?}")),
    }
}

fn parse_num<T: std::str::FromStr>(v: &str) -> std::result::Result<T, String> {
    v.parse().map_err(|_| format!("cannot parse {v:?}"))
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path.parent())
    }

    /// Parse config text. Relative paths are resolved against `base` when given.
    pub fn parse(text: &str, base: Option<&Path>) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut errs = Vec::new();
        let mut n_filters_set = false;
        let resolve = |v: &str| -> PathBuf {
            let p = PathBuf::from(v);
            match base {
                Some(b) if p.is_relative() && !b.as_os_str().is_empty() => b.join(p),
                _ => p,
            }
        };

        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                errs.push(format!("line {}: expected key = value", i + 1));
                continue;
            };
            let (key, value) = (key.trim(), value.trim());
            let m = &mut cfg.model;
            let t = &mut cfg.train;
            let res: std::result::Result<(), String> = (|| {
                match key {
                    "score" => {
                        m.score.kind = match value {
                            "transe" => ScoreKind::TransE,
                            "rotate" => ScoreKind::RotatE,
                            _ => return Err(format!("expected transe or rotate, got {value:?}")),
                        }
                    }
                    "norm" => {
                        m.score.norm = match value {
                            "l1" => Norm::L1,
                            "l2" => Norm::L2,
                            _ => return Err(format!("expected l1 or l2, got {value:?}")),
                        }
                    }
                    "squared" => m.score.squared = parse_bool(value)?,
                    "gamma" => m.score.gamma = parse_num(value)?,
                    "d_embed" => m.d_embed = parse_num(value)?,
                    "d_word" => m.d_word = parse_num(value)?,
                    "filter_widths" => {
                        m.filter_widths = value
                            .split(',')
                            .map(|w| parse_num(w.trim()))
                            .collect::<std::result::Result<_, _>>()?
                    }
                    "n_filters" => {
                        m.n_filters = parse_num(value)?;
                        n_filters_set = true;
                    }
                    "max_len" => m.max_len = parse_num(value)?,
                    "learning_rate" => t.learning_rate = parse_num(value)?,
                    "confidence_lr" => {
                        t.confidence_lr = if value.is_empty() { None } else { Some(parse_num(value)?) }
                    }
                    "k_neg" => t.k_neg = parse_num(value)?,
                    "batch_size" => t.batch_size = parse_num(value)?,
                    "epochs" => t.epochs = parse_num(value)?,
                    "alpha" => t.alpha = parse_num(value)?,
                    "beta" => t.beta = parse_num(value)?,
                    "noise_aware" => t.noise_aware = parse_bool(value)?,
                    "seed" => t.seed = parse_num(value)?,
                    "deterministic" => t.deterministic = parse_bool(value)?,
                    "adam_beta1" => t.adam_beta1 = parse_num(value)?,
                    "adam_beta2" => t.adam_beta2 = parse_num(value)?,
                    "adam_eps" => t.adam_eps = parse_num(value)?,
                    "filtered_negatives" => t.filtered_negatives = parse_bool(value)?,
                    "freeze_words" => t.freeze_words = parse_bool(value)?,
                    "freeze_confidence" => t.freeze_confidence = parse_bool(value)?,
                    "word_vectors" => cfg.word_vectors = (!value.is_empty()).then(|| resolve(value)),
                    "stopwords" => {
                        cfg.stopwords = match value {
                            "english" | "" => StopwordSource::English,
                            "none" => StopwordSource::None,
                            p => StopwordSource::File(resolve(p)),
                        }
                    }
                    "train" => cfg.train_path = Some(resolve(value)),
                    "valid" => cfg.valid_path = (!value.is_empty()).then(|| resolve(value)),
                    "test" => cfg.test_path = (!value.is_empty()).then(|| resolve(value)),
                    "out" => cfg.out_dir = Some(resolve(value)),
                    _ => return Err("unknown key".into()),
                }
                Ok(())
            })();
            if let Err(e) = res {
                errs.push(format!("line {} ({key}): {e}", i + 1));
            }
        }
        if !n_filters_set {
            cfg.model.n_filters = default_n_filters(cfg.model.d_embed);
        }
        errs.extend(cfg.validate());
        if errs.is_empty() {
            Ok(cfg)
        } else {
            Err(Error::Config(errs))
        }
    }

    pub fn validate(&self) -> Vec<String> {
        let mut errs = self.model.validate();
        errs.extend(self.train.validate());
        errs
    }

    /// Copy without the data and output locations, which do not affect the model.
    pub fn without_locations(&self) -> Self {
        Self {
            train_path: None,
            valid_path: None,
            test_path: None,
            out_dir: None,
            ..self.clone()
        }
    }

    /// Copy with every path made absolute against the working directory.
    pub fn with_absolute_paths(&self) -> std::io::Result<Self> {
        let abs = |p: &Option<PathBuf>| p.as_deref().map(std::path::absolute).transpose();
        Ok(Self {
            word_vectors: abs(&self.word_vectors)?,
            stopwords: match &self.stopwords {
                StopwordSource::File(p) => StopwordSource::File(std::path::absolute(p)?),
                other => other.clone(),
            },
            train_path: abs(&self.train_path)?,
            valid_path: abs(&self.valid_path)?,
            test_path: abs(&self.test_path)?,
            out_dir: abs(&self.out_dir)?,
            ..self.clone()
        })
    }

    pub fn to_text(&self) -> String {
        let m = &self.model;
        let t = &self.train;
        let mut s = String::new();
        let kind = match m.score.kind {
            ScoreKind::TransE => "transe",
            ScoreKind::RotatE => "rotate",
        };
        let norm = match m.score.norm {
            Norm::L1 => "l1",
            Norm::L2 => "l2",
        };
        let widths: Vec<String> = m.filter_widths.iter().map(|w| w.to_string()).collect();
        let _ = writeln!(s, "score = {kind}");
        let _ = writeln!(s, "norm = {norm}");
        let _ = writeln!(s, "squared = {}", m.score.squared);
        let _ = writeln!(s, "gamma = {}", m.score.gamma);
        let _ = writeln!(s, "d_embed = {}", m.d_embed);
        let _ = writeln!(s, "d_word = {}", m.d_word);
        let _ = writeln!(s, "filter_widths = {}", widths.join(","));
        let _ = writeln!(s, "n_filters = {}", m.n_filters);
        let _ = writeln!(s, "max_len = {}", m.max_len);
        let _ = writeln!(s, "learning_rate = {}", t.learning_rate);
        let _ = writeln!(
            s,
            "confidence_lr = {}",
            t.confidence_lr.map(|x| x.to_string()).unwrap_or_default()
        );
        let _ = writeln!(s, "k_neg = {}", t.k_neg);
        let _ = writeln!(s, "batch_size = {}", t.batch_size);
        let _ = writeln!(s, "epochs = {}", t.epochs);
        let _ = writeln!(s, "alpha = {}", t.alpha);
        let _ = writeln!(s, "beta = {}", t.beta);
        let _ = writeln!(s, "noise_aware = {}", t.noise_aware);
        let _ = writeln!(s, "seed = {}", t.seed);
        let _ = writeln!(s, "deterministic = {}", t.deterministic);
        let _ = writeln!(s, "adam_beta1 = {}", t.adam_beta1);
        let _ = writeln!(s, "adam_beta2 = {}", t.adam_beta2);
        let _ = writeln!(s, "adam_eps = {}", t.adam_eps);
        let _ = writeln!(s, "filtered_negatives = {}", t.filtered_negatives);
        let _ = writeln!(s, "freeze_words = {}", t.freeze_words);
        let _ = writeln!(s, "freeze_confidence = {}", t.freeze_confidence);
        let stop = match &self.stopwords {
            StopwordSource::English => "english".to_owned(),
            StopwordSource::None => "none".to_owned(),
            StopwordSource::File(p) => p.display().to_string(),
        };
        let _ = writeln!(s, "stopwords = {stop}");
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        let _ = writeln!(s, "word_vectors = {}", path(&self.word_vectors));
        if self.train_path.is_some() {
            let _ = writeln!(s, "train = {}", path(&self.train_path));
        }
        let _ = writeln!(s, "valid = {}", path(&self.valid_path));
        let _ = writeln!(s, "test = {}", path(&self.test_path));
        if self.out_dir.is_some() {
            let _ = writeln!(s, "out = {}", path(&self.out_dir));
        }
        s
    }
}
