//! Binary checkpoint format.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! magic    8 bytes  "PGECKPT\0"
//! version  u32
//! count    u32      number of sections
//! section* tag [u8; 4] | len u64 | payload [len] | crc32(payload) u32
//! ```
//!
//! Sections: `CNFG` config echo, `VOCB` stopwords and tokens, `ATTR` attribute
//! names, `WEMB` word table, `CONV` convolution bank, `PROJ` projection, `AREL`
//! attribute table, `TRIP` training triples, `CONF` confidences, `ADAM`
//! optimizer moments, `RNGS` sampling and shuffling stream positions, `META`
//! epoch. Floats are stored as raw bit patterns, so a round trip is exact.

use std::collections::HashMap;
use std::path::Path;

use crate::config::RunConfig;
use crate::encoder::{ConvBranch, Projection, TextEncoder, WordEmbeddingTable};
use crate::error::{Error, Result};
use crate::kg::{Label, RawTriple, Stopwords, Vocabulary};
use crate::model::{Model, Params};
use crate::rng::RngState;
use crate::scoring::AttributeTable;
use crate::train::AdamState;

pub const MAGIC: &[u8; 8] = b"PGECKPT\0";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct ModelCheckpoint {
    pub config: RunConfig,
    pub model: Model,
    /// Training triples, aligned with `confidence`.
    pub triples: Vec<RawTriple>,
    pub confidence: Vec<f64>,
    pub optimizer: AdamState,
    pub sampling_rng: RngState,
    pub shuffle_rng: RngState,
    pub epoch: u32,
}

#[derive(Default)]
struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, x: u8) {
        self.0.push(x);
    }
    fn u32(&mut self, x: u32) {
        self.0.extend_from_slice(&x.to_le_bytes());
    }
    fn u64(&mut self, x: u64) {
        self.0.extend_from_slice(&x.to_le_bytes());
    }
    fn str(&mut self, s: &str) {
        self.u64(s.len() as u64);
        self.0.extend_from_slice(s.as_bytes());
    }
    fn strs<'a>(&mut self, items: impl ExactSizeIterator<Item = &'a str>) {
        self.u64(items.len() as u64);
        for s in items {
            self.str(s);
        }
    }
    fn f64s(&mut self, xs: &[f64]) {
        self.u64(xs.len() as u64);
        for x in xs {
            self.0.extend_from_slice(&x.to_bits().to_le_bytes());
        }
    }
    fn blocks(&mut self, p: &Params) {
        let blocks = p.blocks();
        self.u32(blocks.len() as u32);
        for b in blocks {
            self.f64s(b);
        }
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
    what: &'static str,
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8], what: &'static str) -> Self {
        Reader { buf, pos: 0, what }
    }
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::CorruptCheckpoint(format!("section {} truncated", self.what)));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn len(&mut self, elem: usize) -> Result<usize> {
        let n = self.u64()? as usize;
        if n.checked_mul(elem).is_none_or(|b| b > self.buf.len() - self.pos) {
            return Err(Error::CorruptCheckpoint(format!("section {} length out of range", self.what)));
        }
        Ok(n)
    }
    fn str(&mut self) -> Result<String> {
        let n = self.len(1)?;
        String::from_utf8(self.take(n)?.to_vec())
            .map_err(|_| Error::CorruptCheckpoint(format!("section {} holds invalid UTF-8", self.what)))
    }
    fn strs(&mut self) -> Result<Vec<String>> {
        let n = self.len(8)?;
        (0..n).map(|_| self.str()).collect()
    }
    fn f64s(&mut self) -> Result<Vec<f64>> {
        let n = self.len(8)?;
        Ok(self
            .take(n * 8)?
            .chunks_exact(8)
            .map(|c| f64::from_bits(u64::from_le_bytes(c.try_into().unwrap())))
            .collect())
    }
    fn f64s_exact(&mut self, expected: usize) -> Result<Vec<f64>> {
        let v = self.f64s()?;
        if v.len() != expected {
            return Err(Error::CorruptCheckpoint(format!(
                "section {}: expected {expected} values, found {}",
                self.what,
                v.len()
            )));
        }
        Ok(v)
    }
    fn blocks_into(&mut self, p: &mut Params) -> Result<()> {
        let n = self.u32()? as usize;
        let mut blocks = p.blocks_mut();
        if n != blocks.len() {
            return Err(Error::CorruptCheckpoint(format!("section {}: block count mismatch", self.what)));
        }
        for b in blocks.iter_mut() {
            let v = self.f64s_exact(b.len())?;
            b.copy_from_slice(&v);
        }
        Ok(())
    }
    fn rng(&mut self) -> Result<RngState> {
        let seed: [u8; 32] = self.take(32)?.try_into().unwrap();
        let stream = self.u64()?;
        let lo = self.u64()? as u128;
        let hi = self.u64()? as u128;
        Ok(RngState {
            seed,
            stream,
            word_pos: lo | (hi << 64),
        })
    }
}

fn label_byte(l: Label) -> u8 {
    match l {
        Label::Unlabeled => 0,
        Label::Correct => 1,
        Label::Incorrect => 2,
    }
}

impl ModelCheckpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut sections: Vec<([u8; 4], Writer)> = Vec::new();
        let mut section = |tag: &[u8; 4], f: &dyn Fn(&mut Writer)| {
            let mut w = Writer::default();
            f(&mut w);
            sections.push((*tag, w));
        };
        let m = &self.model;
        let enc = &m.params.encoder;

        section(b"CNFG", &|w| w.str(&self.config.without_locations().to_text()));
        section(b"VOCB", &|w| {
            let stop: Vec<&str> = m.vocab.stopwords().iter().collect();
            w.strs(stop.into_iter());
            let toks: Vec<&str> = m.vocab.ordinary_tokens().collect();
            w.strs(toks.into_iter());
        });
        section(b"ATTR", &|w| w.strs(m.attribute_names.iter().map(String::as_str)));
        section(b"WEMB", &|w| {
            w.u64(enc.words.d_word as u64);
            w.f64s(&enc.words.rows);
        });
        section(b"CONV", &|w| {
            w.u32(enc.branches.len() as u32);
            for b in &enc.branches {
                w.u64(b.width as u64);
                w.f64s(&b.filters);
                w.f64s(&b.bias);
            }
        });
        section(b"PROJ", &|w| {
            w.u64(enc.projection.d_out as u64);
            w.u64(enc.projection.d_in as u64);
            w.f64s(&enc.projection.weight);
            w.f64s(&enc.projection.bias);
        });
        section(b"AREL", &|w| {
            w.u64(m.params.attributes.dim as u64);
            w.f64s(&m.params.attributes.data);
        });
        section(b"TRIP", &|w| {
            w.u64(self.triples.len() as u64);
            for t in &self.triples {
                w.str(&t.title);
                w.str(&t.attribute);
                w.str(&t.value);
                w.u8(label_byte(t.label));
            }
        });
        section(b"CONF", &|w| w.f64s(&self.confidence));
        section(b"ADAM", &|w| {
            let o = &self.optimizer;
            w.u64(o.step);
            w.blocks(&o.m);
            w.blocks(&o.v);
            w.f64s(&o.conf_m);
            w.f64s(&o.conf_v);
            w.u64(o.conf_steps.len() as u64);
            for &s in &o.conf_steps {
                w.u64(s);
            }
        });
        section(b"RNGS", &|w| {
            for r in [&self.sampling_rng, &self.shuffle_rng] {
                w.0.extend_from_slice(&r.seed);
                w.u64(r.stream);
                w.u64(r.word_pos as u64);
                w.u64((r.word_pos >> 64) as u64);
            }
        });
        section(b"META", &|w| w.u32(self.epoch));

        let mut out = Writer::default();
        out.0.extend_from_slice(MAGIC);
        out.u32(VERSION);
        out.u32(sections.len() as u32);
        for (tag, w) in sections {
            out.0.extend_from_slice(&tag);
            out.u64(w.0.len() as u64);
            out.0.extend_from_slice(&w.0);
            out.u32(crc32fast::hash(&w.0));
        }
        out.0
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut head = Reader::new(bytes, "header");
        if head.take(8).ok() != Some(&MAGIC[..]) {
            return Err(Error::CorruptCheckpoint("bad magic number".into()));
        }
        let version = head.u32()?;
        if version != VERSION {
            return Err(Error::UnsupportedVersion {
                found: version,
                supported: VERSION,
            });
        }
        let count = head.u32()?;
        let mut sections: HashMap<[u8; 4], &[u8]> = HashMap::new();
        for _ in 0..count {
            let tag: [u8; 4] = head.take(4)?.try_into().unwrap();
            let len = head.u64()? as usize;
            if len > bytes.len() {
                return Err(Error::CorruptCheckpoint("section length out of range".into()));
            }
            let payload = head.take(len)?;
            let crc = head.u32()?;
            if crc != crc32fast::hash(payload) {
                return Err(Error::CorruptCheckpoint(format!(
                    "checksum mismatch in section {}",
                    String::from_utf8_lossy(&tag)
                )));
            }
            sections.insert(tag, payload);
        }
        let get = |tag: &'static [u8; 4], name: &'static str| -> Result<Reader<'_>> {
            sections
                .get(tag)
                .map(|p| Reader::new(p, name))
                .ok_or_else(|| Error::CorruptCheckpoint(format!("missing section {name}")))
        };

        let config = RunConfig::parse(&get(b"CNFG", "CNFG")?.str()?, None)
            .map_err(|e| Error::CorruptCheckpoint(format!("config echo: {e}")))?;

        let mut r = get(b"VOCB", "VOCB")?;
        let stopwords: Stopwords = r.strs()?.into_iter().collect();
        let vocab = Vocabulary::from_tokens(r.strs()?, stopwords)?;
        let attribute_names = get(b"ATTR", "ATTR")?.strs()?;

        let mut r = get(b"WEMB", "WEMB")?;
        let d_word = r.u64()? as usize;
        let words = WordEmbeddingTable {
            d_word,
            rows: r.f64s_exact(vocab.len() * d_word)?,
        };

        let mut r = get(b"CONV", "CONV")?;
        let n_branches = r.u32()? as usize;
        let mut branches = Vec::with_capacity(n_branches.min(16));
        for _ in 0..n_branches {
            let width = r.u64()? as usize;
            let filters = r.f64s()?;
            let bias = r.f64s()?;
            if filters.len() != bias.len() * width * d_word {
                return Err(Error::CorruptCheckpoint("convolution shape mismatch".into()));
            }
            branches.push(ConvBranch { width, filters, bias });
        }

        let mut r = get(b"PROJ", "PROJ")?;
        let d_out = r.u64()? as usize;
        let d_in = r.u64()? as usize;
        let projection = Projection {
            d_out,
            d_in,
            weight: r.f64s_exact(d_out * d_in)?,
            bias: r.f64s_exact(d_out)?,
        };

        let mut r = get(b"AREL", "AREL")?;
        let dim = r.u64()? as usize;
        let attributes = AttributeTable {
            dim,
            data: r.f64s_exact(dim * attribute_names.len())?,
        };

        let mut r = get(b"TRIP", "TRIP")?;
        let n = r.len(25)?;
        let mut triples = Vec::with_capacity(n);
        for _ in 0..n {
            let title = r.str()?;
            let attribute = r.str()?;
            let value = r.str()?;
            let label = match r.u8()? {
                0 => Label::Unlabeled,
                1 => Label::Correct,
                2 => Label::Incorrect,
                b => return Err(Error::CorruptCheckpoint(format!("bad label byte {b}"))),
            };
            triples.push(RawTriple {
                title,
                attribute,
                value,
                label,
            });
        }
        let confidence = get(b"CONF", "CONF")?.f64s_exact(triples.len())?;

        let params = Params {
            encoder: TextEncoder {
                words,
                branches,
                projection,
            },
            attributes,
        };
        let mut r = get(b"ADAM", "ADAM")?;
        let step = r.u64()?;
        let mut m = params.zeros_like();
        r.blocks_into(&mut m)?;
        let mut v = params.zeros_like();
        r.blocks_into(&mut v)?;
        let conf_m = r.f64s_exact(triples.len())?;
        let conf_v = r.f64s_exact(triples.len())?;
        let n_steps = r.len(8)?;
        let conf_steps = (0..n_steps).map(|_| r.u64()).collect::<Result<Vec<_>>>()?;
        if conf_steps.len() != triples.len() {
            return Err(Error::CorruptCheckpoint("confidence step count mismatch".into()));
        }

        let mut r = get(b"RNGS", "RNGS")?;
        let sampling_rng = r.rng()?;
        let shuffle_rng = r.rng()?;
        let epoch = get(b"META", "META")?.u32()?;

        let model = Model {
            config: config.model.clone(),
            vocab,
            attribute_names,
            params,
        };
        Ok(ModelCheckpoint {
            config,
            model,
            triples,
            confidence,
            optimizer: AdamState {
                step,
                m,
                v,
                conf_m,
                conf_v,
                conf_steps,
            },
            sampling_rng,
            shuffle_rng,
            epoch,
        })
    }
}

pub fn save_checkpoint(ckpt: &ModelCheckpoint, path: &Path) -> Result<()> {
    std::fs::write(path, ckpt.to_bytes()).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<ModelCheckpoint> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    ModelCheckpoint::from_bytes(&bytes)
}
