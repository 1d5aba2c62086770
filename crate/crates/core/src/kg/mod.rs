//! Product graph data model: attribute triples, their entity texts, and TSV I/O.

mod noise;
mod sampling;
mod split;
mod vocab;

use std::collections::{HashMap, HashSet};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

pub use noise::{inject_noise, read_corruption_log, write_corruption_log, Corruption, NoiseMode};
pub use sampling::sample_negatives;
pub use split::build_inductive_split;
pub use vocab::{tokenize, Stopwords, TokenSequence, Vocabulary, PAD, UNK};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Label {
    Correct,
    Incorrect,
    #[default]
    Unlabeled,
}

impl Label {
    fn parse(field: &str, line: usize) -> Result<Self> {
        match field.trim() {
            "1" => Ok(Label::Correct),
            "0" => Ok(Label::Incorrect),
            other => Err(Error::parse(line, format!("label must be 0 or 1, got {other:?}"))),
        }
    }

    fn as_field(self) -> Option<&'static str> {
        match self {
            Label::Correct => Some("1"),
            Label::Incorrect => Some("0"),
            Label::Unlabeled => None,
        }
    }
}

/// A triple as read from a file, before its attribute is resolved to an index.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RawTriple {
    pub title: String,
    pub attribute: String,
    pub value: String,
    pub label: Label,
}

impl RawTriple {
    pub fn new(title: impl Into<String>, attribute: impl Into<String>, value: impl Into<String>) -> Self {
        RawTriple {
            title: title.into(),
            attribute: attribute.into(),
            value: value.into(),
            label: Label::Unlabeled,
        }
    }

    pub fn with_label(mut self, label: Label) -> Self {
        self.label = label;
        self
    }
}

/// One (title, attribute, value) fact.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AttributeTriple {
    pub title: String,
    pub attribute: u32,
    pub value: String,
    pub label: Label,
}

/// Parse triple TSV from a reader. Blank lines and `#` comments are skipped.
pub fn parse_triples(reader: impl BufRead) -> Result<Vec<RawTriple>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::parse(lineno, e.to_string()))?;
        let line = line.trim_end_matches(['\r', '\n']);
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if !(3..=4).contains(&fields.len()) {
            return Err(Error::parse(
                lineno,
                format!("expected 3 or 4 tab-separated fields, found {}", fields.len()),
            ));
        }
        let (title, attribute, value) = (fields[0].trim(), fields[1].trim(), fields[2].trim());
        if title.is_empty() || attribute.is_empty() || value.is_empty() {
            return Err(Error::parse(lineno, "empty title, attribute or value"));
        }
        let label = match fields.get(3) {
            Some(f) => Label::parse(f, lineno)?,
            None => Label::Unlabeled,
        };
        out.push(RawTriple {
            title: title.to_owned(),
            attribute: attribute.to_owned(),
            value: value.to_owned(),
            label,
        });
    }
    Ok(out)
}

pub fn read_triples(path: &Path) -> Result<Vec<RawTriple>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_triples(BufReader::new(file))
}

pub fn write_raw_triples(triples: &[RawTriple], mut out: impl Write) -> std::io::Result<()> {
    for t in triples {
        write!(out, "{}\t{}\t{}", t.title, t.attribute, t.value)?;
        if let Some(label) = t.label.as_field() {
            write!(out, "\t{label}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Load a triple TSV into a graph using the bundled English stopword list.
pub fn load_triples(path: &Path) -> Result<ProductGraph> {
    load_triples_with(path, Stopwords::english())
}

pub fn load_triples_with(path: &Path, stopwords: Stopwords) -> Result<ProductGraph> {
    ProductGraph::from_raw(read_triples(path)?, stopwords)
}

/// Indexed store of attribute triples and the texts they mention.
#[derive(Debug, Clone)]
pub struct ProductGraph {
    triples: Vec<AttributeTriple>,
    attributes: Vec<String>,
    titles: Vec<String>,
    values: Vec<String>,
    vocab: Vocabulary,
    title_ids: HashMap<String, u32>,
    value_ids: HashMap<String, u32>,
    /// Per triple: (title id, value id).
    entity_ids: Vec<(u32, u32)>,
    /// (title id, attribute) -> value ids observed with that pair.
    known_values: HashMap<(u32, u32), Vec<u32>>,
}

impl PartialEq for ProductGraph {
    fn eq(&self, other: &Self) -> bool {
        self.triples == other.triples
            && self.attributes == other.attributes
            && self.titles == other.titles
            && self.values == other.values
            && self.vocab == other.vocab
    }
}

impl ProductGraph {
    /// Build from parsed records: attributes in first-seen order, duplicates
    /// dropped (first occurrence wins).
    pub fn from_raw(raw: Vec<RawTriple>, stopwords: Stopwords) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::EmptyInput);
        }
        let mut attributes: Vec<String> = Vec::new();
        let mut attr_ids: HashMap<String, u32> = HashMap::new();
        let triples = raw
            .into_iter()
            .map(|r| {
                let next = attributes.len() as u32;
                let attribute = *attr_ids.entry(r.attribute.clone()).or_insert_with(|| {
                    attributes.push(r.attribute.clone());
                    next
                });
                AttributeTriple {
                    title: r.title,
                    attribute,
                    value: r.value,
                    label: r.label,
                }
            })
            .collect();
        Ok(Self::assemble(triples, attributes, stopwords))
    }

    /// Build from already-resolved triples over a fixed attribute list.
    /// Deduplicates and rebuilds entity sets and the vocabulary.
    pub fn assemble(triples: Vec<AttributeTriple>, attributes: Vec<String>, stopwords: Stopwords) -> Self {
        let mut seen = HashSet::new();
        let triples: Vec<AttributeTriple> = triples
            .into_iter()
            .filter(|t| seen.insert((t.title.clone(), t.attribute, t.value.clone())))
            .collect();

        let mut titles = Vec::new();
        let mut values = Vec::new();
        let mut title_ids = HashMap::new();
        let mut value_ids = HashMap::new();
        let mut entity_ids = Vec::with_capacity(triples.len());
        let mut known_values: HashMap<(u32, u32), Vec<u32>> = HashMap::new();
        for t in &triples {
            debug_assert!((t.attribute as usize) < attributes.len());
            let tid = *title_ids.entry(t.title.clone()).or_insert_with(|| {
                titles.push(t.title.clone());
                titles.len() as u32 - 1
            });
            let vid = *value_ids.entry(t.value.clone()).or_insert_with(|| {
                values.push(t.value.clone());
                values.len() as u32 - 1
            });
            entity_ids.push((tid, vid));
            known_values.entry((tid, t.attribute)).or_default().push(vid);
        }

        let vocab = Vocabulary::build(
            titles.iter().chain(values.iter()).map(String::as_str),
            stopwords,
        );

        ProductGraph {
            triples,
            attributes,
            titles,
            values,
            vocab,
            title_ids,
            value_ids,
            entity_ids,
            known_values,
        }
    }

    pub fn triples(&self) -> &[AttributeTriple] {
        &self.triples
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn attributes(&self) -> &[String] {
        &self.attributes
    }

    pub fn attribute_id(&self, name: &str) -> Option<u32> {
        self.attributes.iter().position(|a| a == name).map(|i| i as u32)
    }

    pub fn titles(&self) -> &[String] {
        &self.titles
    }

    pub fn values(&self) -> &[String] {
        &self.values
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn stopwords(&self) -> &Stopwords {
        self.vocab.stopwords()
    }

    /// (title id, value id) of triple `index`.
    pub fn entity_ids(&self, index: usize) -> (u32, u32) {
        self.entity_ids[index]
    }

    pub fn title_id(&self, text: &str) -> Option<u32> {
        self.title_ids.get(text).copied()
    }

    pub fn value_id(&self, text: &str) -> Option<u32> {
        self.value_ids.get(text).copied()
    }

    pub fn contains(&self, title: &str, attribute: u32, value: &str) -> bool {
        match (self.title_id(title), self.value_id(value)) {
            (Some(t), Some(v)) => self
                .known_values
                .get(&(t, attribute))
                .is_some_and(|vs| vs.contains(&v)),
            _ => false,
        }
    }

    /// Value ids observed together with (title, attribute).
    pub fn known_values(&self, title_id: u32, attribute: u32) -> &[u32] {
        self.known_values
            .get(&(title_id, attribute))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn to_raw(&self) -> Vec<RawTriple> {
        self.triples
            .iter()
            .map(|t| RawTriple {
                title: t.title.clone(),
                attribute: self.attributes[t.attribute as usize].clone(),
                value: t.value.clone(),
                label: t.label,
            })
            .collect()
    }

    pub fn write_tsv(&self, out: impl Write) -> std::io::Result<()> {
        write_raw_triples(&self.to_raw(), out)
    }

    pub fn save_tsv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        self.write_tsv(&mut w).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Resolve a file record against this graph's attribute set.
    pub fn resolve(&self, raw: &RawTriple) -> Result<AttributeTriple> {
        let attribute = self
            .attribute_id(&raw.attribute)
            .ok_or_else(|| Error::UnknownAttribute(raw.attribute.clone()))?;
        Ok(AttributeTriple {
            title: raw.title.clone(),
            attribute,
            value: raw.value.clone(),
            label: raw.label,
        })
    }
}
