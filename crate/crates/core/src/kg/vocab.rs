//! Tokenization and the token vocabulary shared by titles and values.

use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use crate::error::{Error, Result};

pub const PAD: u32 = 0;
pub const UNK: u32 = 1;

const PAD_TOKEN: &str = "<pad>";
const UNK_TOKEN: &str = "<unk>";

const ENGLISH_STOPWORDS: &str = include_str!("../../data/stopwords.txt");

/// Tokens dropped during preprocessing.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Stopwords(BTreeSet<String>);

impl Stopwords {
    pub fn none() -> Self {
        Stopwords(BTreeSet::new())
    }

    /// The bundled English list.
    pub fn english() -> Self {
        Self::parse(ENGLISH_STOPWORDS)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::parse(&text))
    }

    pub fn parse(text: &str) -> Self {
        Stopwords(
            text.lines()
                .map(|l| l.trim().to_lowercase())
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .collect(),
        )
    }

    pub fn contains(&self, token: &str) -> bool {
        self.0.contains(token)
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl FromIterator<String> for Stopwords {
    fn from_iter<I: IntoIterator<Item = String>>(iter: I) -> Self {
        Stopwords(iter.into_iter().collect())
    }
}

/// Lowercase, replace every non-alphanumeric character with a space, split on
/// whitespace, and drop stopwords.
pub fn tokenize(text: &str, stopwords: &Stopwords) -> Vec<String> {
    let cleaned: String = text
        .chars()
        .map(|c| if c.is_alphanumeric() { c } else { ' ' })
        .collect::<String>()
        .to_lowercase();
    cleaned
        .split_whitespace()
        .filter(|tok| !stopwords.contains(tok))
        .map(str::to_owned)
        .collect()
}

/// Padded token indices for one text. Always at least as long as the widest
/// convolution filter it was built for.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TokenSequence(Vec<u32>);

impl TokenSequence {
    pub fn new(ids: Vec<u32>) -> Self {
        assert!(!ids.is_empty(), "token sequence must not be empty");
        TokenSequence(ids)
    }

    pub fn ids(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Number of non-padding positions.
    pub fn content_len(&self) -> usize {
        self.0.iter().filter(|&&id| id != PAD).count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, u32>,
    stopwords: Stopwords,
}

impl Vocabulary {
    pub fn new(stopwords: Stopwords) -> Self {
        let mut vocab = Vocabulary {
            tokens: Vec::new(),
            index: HashMap::new(),
            stopwords,
        };
        vocab.push(PAD_TOKEN.to_owned());
        vocab.push(UNK_TOKEN.to_owned());
        vocab
    }

    /// Build from texts, assigning indices in first-seen token order.
    pub fn build<'a>(texts: impl IntoIterator<Item = &'a str>, stopwords: Stopwords) -> Self {
        let mut vocab = Vocabulary::new(stopwords);
        for text in texts {
            for tok in tokenize(text, &vocab.stopwords) {
                vocab.insert(tok);
            }
        }
        vocab
    }

    /// Rebuild from an explicit token list (non-special tokens, in index order).
    pub fn from_tokens(tokens: impl IntoIterator<Item = String>, stopwords: Stopwords) -> Result<Self> {
        let mut vocab = Vocabulary::new(stopwords);
        for tok in tokens {
            if vocab.index.contains_key(&tok) {
                return Err(Error::CorruptCheckpoint(format!("duplicate vocabulary token {tok:?}")));
            }
            vocab.push(tok);
        }
        Ok(vocab)
    }

    fn push(&mut self, tok: String) -> u32 {
        let id = self.tokens.len() as u32;
        self.index.insert(tok.clone(), id);
        self.tokens.push(tok);
        id
    }

    pub fn insert(&mut self, tok: String) -> u32 {
        match self.index.get(&tok) {
            Some(&id) => id,
            None => self.push(tok),
        }
    }

    pub fn get(&self, tok: &str) -> Option<u32> {
        self.index.get(tok).copied().filter(|&id| id > UNK)
    }

    pub fn token(&self, id: u32) -> &str {
        &self.tokens[id as usize]
    }

    /// Total row count, including the pad and unknown slots.
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.len() <= 2
    }

    /// Ordinary tokens in index order, specials excluded.
    pub fn ordinary_tokens(&self) -> impl Iterator<Item = &str> {
        self.tokens[2..].iter().map(String::as_str)
    }

    pub fn stopwords(&self) -> &Stopwords {
        &self.stopwords
    }

    /// Tokenize, map to indices, truncate to `max_len` and right-pad to `min_len`.
    ///
    /// Text that is empty after stopword removal becomes a single unknown token.
    pub fn preprocess(&self, text: &str, max_len: usize, min_len: usize) -> TokenSequence {
        let mut ids: Vec<u32> = tokenize(text, &self.stopwords)
            .iter()
            .take(max_len)
            .map(|tok| self.get(tok).unwrap_or(UNK))
            .collect();
        if ids.is_empty() {
            ids.push(UNK);
        }
        if ids.len() < min_len {
            ids.resize(min_len, PAD);
        }
        TokenSequence::new(ids)
    }
}
