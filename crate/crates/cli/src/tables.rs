//! Small TSV formats used only by the command-line tool.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use pge_core::kg::Label;
use pge_core::{Error, Result};

pub fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Destination for one output: `dir/name` when an output directory is set,
/// stdout otherwise.
pub struct Sink {
    path: Option<PathBuf>,
    inner: Box<dyn Write>,
}

impl Sink {
    pub fn open(dir: Option<&Path>, name: &str) -> Result<Self> {
        match dir {
            Some(dir) => {
                std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
                let path = dir.join(name);
                let file = File::create(&path).map_err(|e| io_err(&path, e))?;
                Ok(Sink {
                    path: Some(path),
                    inner: Box::new(BufWriter::new(file)),
                })
            }
            None => Ok(Sink {
                path: None,
                inner: Box::new(BufWriter::new(std::io::stdout().lock())),
            }),
        }
    }

    /// Run `f` against the sink and flush, mapping failures to the sink's path.
    pub fn write_with(mut self, f: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<()> {
        let path = self.path.clone().unwrap_or_else(|| PathBuf::from("<stdout>"));
        f(&mut self.inner).and_then(|_| self.inner.flush()).map_err(|e| io_err(&path, e))
    }
}

fn lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        let trimmed = line.trim_end_matches('\r');
        if trimmed.trim().is_empty() || trimmed.starts_with('#') {
            continue;
        }
        out.push((i + 1, trimmed.to_owned()));
    }
    Ok(out)
}

pub type Key = (String, String, String);

/// A ranking file: TSV with `title`, `attribute` and `value` columns and an
/// optional `rank` column. Without a `rank` column, row order is the ranking.
/// A file without a header row is read as `title, attribute, value` in rank order.
pub fn read_ranking(path: &Path) -> Result<Vec<(Key, usize)>> {
    let rows = lines(path)?;
    let Some((_, first)) = rows.first() else {
        return Ok(Vec::new());
    };
    let header: Vec<&str> = first.split('\t').map(str::trim).collect();
    let col = |name: &str| header.iter().position(|h| *h == name);
    let (cols, rank_col, body) = match (col("title"), col("attribute"), col("value")) {
        (Some(t), Some(a), Some(v)) => ((t, a, v), col("rank"), &rows[1..]),
        _ => ((0, 1, 2), None, &rows[..]),
    };
    let width = [cols.0, cols.1, cols.2].into_iter().chain(rank_col).max().unwrap_or(0) + 1;
    body.iter()
        .enumerate()
        .map(|(pos, (lineno, line))| {
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() < width {
                return Err(Error::Parse {
                    line: *lineno,
                    message: format!("expected at least {width} tab-separated fields, found {}", fields.len()),
                });
            }
            let rank = match rank_col {
                Some(c) => fields[c].trim().parse().map_err(|_| Error::Parse {
                    line: *lineno,
                    message: format!("rank must be a positive integer, got {:?}", fields[c]),
                })?,
                None => pos + 1,
            };
            let key = (fields[cols.0].to_owned(), fields[cols.1].to_owned(), fields[cols.2].to_owned());
            Ok((key, rank))
        })
        .collect()
}

/// Pre-scored labeled triples: `score, title, attribute, value, label` with an
/// optional header row starting with `score`.
pub fn read_scored(path: &Path) -> Result<Vec<(f64, Key, Label)>> {
    let mut out = Vec::new();
    for (lineno, line) in lines(path)? {
        let fields: Vec<&str> = line.split('\t').collect();
        if fields[0].trim() == "score" {
            continue;
        }
        let parse = |message: String| Error::Parse { line: lineno, message };
        if fields.len() != 5 {
            return Err(parse(format!("expected 5 tab-separated fields, found {}", fields.len())));
        }
        let score: f64 = fields[0]
            .trim()
            .parse()
            .map_err(|_| parse(format!("cannot parse score {:?}", fields[0])))?;
        let label = match fields[4].trim() {
            "1" => Label::Correct,
            "0" => Label::Incorrect,
            other => return Err(parse(format!("label must be 0 or 1, got {other:?}"))),
        };
        out.push((score, (fields[1].to_owned(), fields[2].to_owned(), fields[3].to_owned()), label));
    }
    Ok(out)
}
