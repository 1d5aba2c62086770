//! Synthetic noise injection: corrupted copies of sampled triples are added to a graph.

use std::collections::HashSet;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::seq::index;
use rand::Rng as _;

use super::{AttributeTriple, Label, ProductGraph};
use crate::error::{Error, Result};
use crate::rng::Rng;

const MAX_REJECTIONS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseMode {
    /// Replace the value text only.
    #[default]
    Value,
    /// Replace either the title or the value, each with probability one half.
    HeadOrTail,
}

/// One injected corruption. `corrupt_title` equals `title` in value mode.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Corruption {
    pub title: String,
    pub attribute: String,
    pub original_value: String,
    pub corrupt_title: String,
    pub corrupt_value: String,
}

impl Corruption {
    /// The (title, attribute, value) texts of the injected triple.
    pub fn corrupted_key(&self) -> (&str, &str, &str) {
        (&self.corrupt_title, &self.attribute, &self.corrupt_value)
    }
}

/// Number of corruptions for `ratio` of `n` triples: the ceiling of `ratio * n`,
/// tolerant of representation error in `ratio` (0.1 * 600 is 60, not 61).
pub fn corruption_count(ratio: f64, n: usize) -> usize {
    let exact = ratio * n as f64;
    let rounded = exact.round();
    if (exact - rounded).abs() < 1e-9 * exact.max(1.0) {
        rounded as usize
    } else {
        exact.ceil() as usize
    }
}

/// Add `ceil(ratio * |O|)` corrupted triples. Each corruption copies a distinct,
/// uniformly sampled original triple and swaps its value (or, in head-or-tail
/// mode, possibly its title) for a different one drawn uniformly among those
/// that do not already form an existing triple. Originals are kept.
pub fn inject_noise(
    graph: &ProductGraph,
    ratio: f64,
    mode: NoiseMode,
    rng: &mut Rng,
) -> Result<(ProductGraph, Vec<Corruption>)> {
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(Error::Config(vec![format!("noise ratio must be in (0, 1], got {ratio}")]));
    }
    let n = graph.len();
    let count = corruption_count(ratio, n).min(n);
    let picked = index::sample(rng, n, count).into_vec();

    let mut existing: HashSet<(String, u32, String)> = graph
        .triples()
        .iter()
        .map(|t| (t.title.clone(), t.attribute, t.value.clone()))
        .collect();
    let mut added = Vec::with_capacity(count);
    let mut log = Vec::with_capacity(count);

    for &i in &picked {
        let orig = &graph.triples()[i];
        let replace_title = mode == NoiseMode::HeadOrTail && rng.gen_bool(0.5);
        let (new_title, new_value) = if replace_title {
            let pool = graph.titles();
            let t = draw_excluding(pool, rng, |cand| {
                cand == orig.title || existing.contains(&(cand.to_owned(), orig.attribute, orig.value.clone()))
            })
            .ok_or(Error::SamplingExhausted { triple: i })?;
            (t.to_owned(), orig.value.clone())
        } else {
            let pool = graph.values();
            let v = draw_excluding(pool, rng, |cand| {
                cand == orig.value || existing.contains(&(orig.title.clone(), orig.attribute, cand.to_owned()))
            })
            .ok_or(Error::SamplingExhausted { triple: i })?;
            (orig.title.clone(), v.to_owned())
        };
        existing.insert((new_title.clone(), orig.attribute, new_value.clone()));
        log.push(Corruption {
            title: orig.title.clone(),
            attribute: graph.attributes()[orig.attribute as usize].clone(),
            original_value: orig.value.clone(),
            corrupt_title: new_title.clone(),
            corrupt_value: new_value.clone(),
        });
        added.push(AttributeTriple {
            title: new_title,
            attribute: orig.attribute,
            value: new_value,
            label: Label::Incorrect,
        });
    }

    let mut triples = graph.triples().to_vec();
    triples.extend(added);
    let noisy = ProductGraph::assemble(triples, graph.attributes().to_vec(), graph.stopwords().clone());
    Ok((noisy, log))
}

fn draw_excluding<'a>(pool: &'a [String], rng: &mut Rng, reject: impl Fn(&str) -> bool) -> Option<&'a str> {
    for _ in 0..MAX_REJECTIONS {
        let cand = &pool[rng.gen_range(0..pool.len())];
        if !reject(cand) {
            return Some(cand);
        }
    }
    let allowed: Vec<&String> = pool.iter().filter(|c| !reject(c)).collect();
    if allowed.is_empty() {
        None
    } else {
        Some(allowed[rng.gen_range(0..allowed.len())])
    }
}

/// Corruption log TSV: `orig_title \t attribute \t orig_value \t corrupt_value`,
/// with a fifth `corrupt_title` column when the title was replaced.
pub fn write_corruption_log(log: &[Corruption], mut out: impl Write) -> std::io::Result<()> {
    for c in log {
        write!(out, "{}\t{}\t{}\t{}", c.title, c.attribute, c.original_value, c.corrupt_value)?;
        if c.corrupt_title != c.title {
            write!(out, "\t{}", c.corrupt_title)?;
        }
        writeln!(out)?;
    }
    Ok(())
}

pub fn read_corruption_log(path: &Path) -> Result<Vec<Corruption>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if !(4..=5).contains(&f.len()) {
            return Err(Error::parse(i + 1, format!("expected 4 or 5 fields, found {}", f.len())));
        }
        out.push(Corruption {
            title: f[0].to_owned(),
            attribute: f[1].to_owned(),
            original_value: f[2].to_owned(),
            corrupt_value: f[3].to_owned(),
            corrupt_title: f.get(4).unwrap_or(&f[0]).to_string(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::{RawTriple, Stopwords};
    use crate::rng::{stream, Stream};
    use proptest::prelude::*;

    fn graph(n: usize) -> ProductGraph {
        let raw = (0..n)
            .map(|i| RawTriple::new(format!("product {i}"), if i % 2 == 0 { "flavor" } else { "size" }, format!("value {}", i % 7)))
            .collect();
        ProductGraph::from_raw(raw, Stopwords::none()).unwrap()
    }

    #[test]
    fn ten_percent_of_ten() {
        let g = graph(10);
        let (noisy, log) = inject_noise(&g, 0.1, NoiseMode::Value, &mut stream(1, Stream::Noise)).unwrap();
        assert_eq!(noisy.len(), 11);
        assert_eq!(log.len(), 1);
    }

    #[test]
    fn ceiling_rule() {
        let g = graph(15);
        let (noisy, log) = inject_noise(&g, 0.1, NoiseMode::Value, &mut stream(1, Stream::Noise)).unwrap();
        assert_eq!(log.len(), 2);
        assert_eq!(noisy.len(), 17);
        assert_eq!(corruption_count(0.1, 600), 60);
        assert_eq!(corruption_count(0.1, 15), 2);
    }

    #[test]
    fn deterministic_log() {
        let g = graph(40);
        let a = inject_noise(&g, 0.2, NoiseMode::Value, &mut stream(9, Stream::Noise)).unwrap().1;
        let b = inject_noise(&g, 0.2, NoiseMode::Value, &mut stream(9, Stream::Noise)).unwrap().1;
        assert_eq!(a, b);
    }

    #[test]
    fn single_value_exhausts() {
        let raw = vec![RawTriple::new("p", "a", "x"), RawTriple::new("q", "a", "x")];
        let g = ProductGraph::from_raw(raw, Stopwords::none()).unwrap();
        assert!(matches!(
            inject_noise(&g, 0.5, NoiseMode::Value, &mut stream(1, Stream::Noise)),
            Err(Error::SamplingExhausted { .. })
        ));
    }

    #[test]
    fn log_round_trip() {
        let g = graph(30);
        let (_, log) = inject_noise(&g, 0.3, NoiseMode::HeadOrTail, &mut stream(2, Stream::Noise)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("log.tsv");
        let mut buf = Vec::new();
        write_corruption_log(&log, &mut buf).unwrap();
        std::fs::write(&path, buf).unwrap();
        assert_eq!(read_corruption_log(&path).unwrap(), log);
    }

    proptest! {
        #[test]
        fn grows_by_ceiling_and_changes_only_value(seed in any::<u64>(), n in 2usize..60, ratio in 0.01f64..=1.0) {
            let g = graph(n);
            let (noisy, log) = inject_noise(&g, ratio, NoiseMode::Value, &mut stream(seed, Stream::Noise)).unwrap();
            let expected = corruption_count(ratio, n);
            prop_assert_eq!(noisy.len(), n + expected);
            prop_assert_eq!(log.len(), expected);
            for c in &log {
                prop_assert_eq!(&c.title, &c.corrupt_title);
                prop_assert_ne!(&c.original_value, &c.corrupt_value);
                let a = g.attribute_id(&c.attribute).unwrap();
                prop_assert!(g.contains(&c.title, a, &c.original_value));
                prop_assert!(noisy.contains(&c.title, a, &c.corrupt_value));
            }
        }
    }
}
