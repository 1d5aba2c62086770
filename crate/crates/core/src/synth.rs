//! Synthetic product graphs with rule-linked attribute values.
//!
//! Every product belongs to a hidden theme (say, "spicy"). Its flavor,
//! ingredient and category are all drawn from that theme's value lists, so
//! values co-occur the way pepper-family ingredients co-occur with
//! spicy-family flavors. Titles are built from a template that embeds some of
//! the attribute values. Noise is then injected by value replacement and
//! balanced labeled validation and test sets are drawn from the noisy graph.

use std::collections::{HashMap, HashSet};
use std::io::Write;
use std::path::Path;

use rand::seq::{index, SliceRandom};

use crate::error::{Error, Result};
use crate::kg::{
    inject_noise, write_corruption_log, write_raw_triples, AttributeTriple, Corruption, Label, NoiseMode, ProductGraph, RawTriple,
    Stopwords,
};
use crate::rng::{stream, Stream};

#[derive(Debug, Clone, PartialEq)]
pub struct Theme {
    pub name: String,
    /// One value list per attribute, aligned with [`SynthSpec::attributes`].
    pub values: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub n_products: usize,
    pub attributes: Vec<String>,
    pub themes: Vec<Theme>,
    pub brands: Vec<String>,
    pub sizes: Vec<String>,
    /// Placeholders: `{brand}`, `{size}`, `{id}` and `{<attribute>}`.
    pub title_template: String,
    pub noise_ratio: f64,
    pub seed: u64,
}

fn list(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

impl Default for SynthSpec {
    fn default() -> Self {
        let theme = |name: &str, flavor: &[&str], ingredient: &[&str], category: &[&str]| Theme {
            name: name.into(),
            values: vec![list(flavor), list(ingredient), list(category)],
        };
        SynthSpec {
            n_products: 200,
            attributes: list(&["flavor", "ingredient", "category"]),
            themes: vec![
                theme(
                    "spicy",
                    &["spicy", "hot chili", "fiery habanero"],
                    &["chili pepper", "jalapeno", "cayenne pepper"],
                    &["tortilla chips", "potato chips", "salsa"],
                ),
                theme(
                    "sweet",
                    &["sweet", "honey glazed", "caramel"],
                    &["honey", "cane sugar", "maple syrup"],
                    &["granola bars", "cookies", "trail mix"],
                ),
                theme(
                    "cheesy",
                    &["cheesy", "nacho cheese", "white cheddar"],
                    &["cheddar cheese", "parmesan", "whey"],
                    &["cheese puffs", "crackers", "popcorn"],
                ),
                theme(
                    "tangy",
                    &["tangy", "sour cream onion", "salt vinegar"],
                    &["vinegar", "onion powder", "lemon juice"],
                    &["kettle chips", "pretzels", "veggie straws"],
                ),
                theme(
                    "smoky",
                    &["smoky", "barbecue", "hickory smoked"],
                    &["paprika", "smoked salt", "molasses"],
                    &["beef jerky", "pork rinds", "roasted nuts"],
                ),
                theme(
                    "fruity",
                    &["fruity", "mixed berry", "tropical"],
                    &["strawberry", "mango", "blueberry"],
                    &["fruit snacks", "dried fruit", "gummies"],
                ),
            ],
            brands: list(&["Crunchtown", "Happy Pantry", "Golden Field", "Snackwise", "Blue Mesa", "Harvest Lane"]),
            sizes: list(&["4 oz", "8 oz", "12 oz", "family size", "variety pack"]),
            title_template: "{brand} {flavor} {category}, {size}, item {id}".into(),
            noise_ratio: 0.1,
            seed: 42,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if self.n_products == 0 {
            errs.push("n_products must be >= 1".into());
        }
        if self.attributes.is_empty() {
            errs.push("at least one attribute is required".into());
        }
        if self.themes.is_empty() {
            errs.push("at least one theme is required".into());
        }
        if self.brands.is_empty() {
            errs.push("brand list is empty".into());
        }
        if self.sizes.is_empty() {
            errs.push("size list is empty".into());
        }
        if !(0.0..=1.0).contains(&self.noise_ratio) {
            errs.push(format!("noise_ratio must be in [0, 1], got {}", self.noise_ratio));
        }
        for t in &self.themes {
            if t.values.len() != self.attributes.len() {
                errs.push(format!("theme {} has {} value lists for {} attributes", t.name, t.values.len(), self.attributes.len()));
            }
            for (a, vals) in self.attributes.iter().zip(&t.values) {
                if vals.is_empty() {
                    errs.push(format!("theme {} has an empty {a} vocabulary", t.name));
                }
            }
        }
        errs
    }

    /// Parse `key = value` lines. `theme.<name>.<attribute> = v1 | v2` lines
    /// replace the built-in themes; list values are `|`-separated.
    pub fn parse(text: &str) -> Result<Self> {
        let mut spec = SynthSpec::default();
        let mut errs = Vec::new();
        let mut theme_lines: Vec<(String, String, Vec<String>)> = Vec::new();
        let split_list = |v: &str| -> Vec<String> {
            v.split('|').map(str::trim).filter(|s| !s.is_empty()).map(str::to_owned).collect()
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
            let bad = |what: &str| format!("line {} ({key}): cannot parse {what} {value:?}", i + 1);
            match key {
                "n_products" => match value.parse() {
                    Ok(n) => spec.n_products = n,
                    Err(_) => errs.push(bad("count")),
                },
                "noise_ratio" => match value.parse() {
                    Ok(r) => spec.noise_ratio = r,
                    Err(_) => errs.push(bad("ratio")),
                },
                "seed" => match value.parse() {
                    Ok(s) => spec.seed = s,
                    Err(_) => errs.push(bad("seed")),
                },
                "attributes" => spec.attributes = value.split(',').map(|s| s.trim().to_owned()).filter(|s| !s.is_empty()).collect(),
                "brands" => spec.brands = split_list(value),
                "sizes" => spec.sizes = split_list(value),
                "title_template" => spec.title_template = value.to_owned(),
                k if k.starts_with("theme.") => {
                    let parts: Vec<&str> = k.splitn(3, '.').collect();
                    if parts.len() != 3 {
                        errs.push(format!("line {}: expected theme.<name>.<attribute>", i + 1));
                    } else {
                        theme_lines.push((parts[1].to_owned(), parts[2].to_owned(), split_list(value)));
                    }
                }
                _ => errs.push(format!("line {} ({key}): unknown key", i + 1)),
            }
        }
        if !theme_lines.is_empty() {
            let mut order: Vec<String> = Vec::new();
            let mut by_name: HashMap<String, HashMap<String, Vec<String>>> = HashMap::new();
            for (name, attr, vals) in theme_lines {
                if !by_name.contains_key(&name) {
                    order.push(name.clone());
                }
                by_name.entry(name).or_default().insert(attr, vals);
            }
            spec.themes = order
                .into_iter()
                .map(|name| {
                    let attrs = &by_name[&name];
                    Theme {
                        values: spec.attributes.iter().map(|a| attrs.get(a).cloned().unwrap_or_default()).collect(),
                        name,
                    }
                })
                .collect();
        }
        errs.extend(spec.validate());
        if errs.is_empty() {
            Ok(spec)
        } else {
            Err(Error::Config(errs))
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthData {
    /// Clean plus corrupted triples; labels mark the corruptions.
    pub train: ProductGraph,
    pub corruptions: Vec<Corruption>,
    pub valid: Vec<RawTriple>,
    pub test: Vec<RawTriple>,
    /// Hidden theme per clean triple title.
    pub themes: HashMap<String, String>,
}

pub fn generate(spec: &SynthSpec) -> Result<SynthData> {
    let errs = spec.validate();
    if !errs.is_empty() {
        return Err(Error::Config(errs));
    }
    let mut rng = stream(spec.seed, Stream::Synth);
    let mut raw = Vec::with_capacity(spec.n_products * spec.attributes.len());
    let mut themes = HashMap::new();
    let mut used_titles = HashSet::new();
    for id in 1..=spec.n_products {
        let theme = spec.themes.choose(&mut rng).expect("validated non-empty");
        let picks: Vec<&String> = theme.values.iter().map(|vals| vals.choose(&mut rng).expect("validated non-empty")).collect();
        let mut title = spec
            .title_template
            .replace("{brand}", spec.brands.choose(&mut rng).expect("validated non-empty"))
            .replace("{size}", spec.sizes.choose(&mut rng).expect("validated non-empty"))
            .replace("{id}", &id.to_string());
        for (attr, value) in spec.attributes.iter().zip(&picks) {
            title = title.replace(&format!("{{{attr}}}"), value);
        }
        let title = title.split_whitespace().collect::<Vec<_>>().join(" ");
        let title = if used_titles.insert(title.clone()) { title } else { format!("{title} #{id}") };
        used_titles.insert(title.clone());
        themes.insert(title.clone(), theme.name.clone());
        for (attr, value) in spec.attributes.iter().zip(picks) {
            raw.push(RawTriple::new(title.clone(), attr.clone(), value.clone()).with_label(Label::Correct));
        }
    }
    let clean = ProductGraph::from_raw(raw, Stopwords::english())?;

    let (train, corruptions) = if spec.noise_ratio > 0.0 {
        inject_noise(&clean, spec.noise_ratio, NoiseMode::Value, &mut stream(spec.seed, Stream::Noise))?
    } else {
        (clean.clone(), Vec::new())
    };

    // Balanced labeled sets: half of the corruptions each for valid and test,
    // paired with as many clean triples.
    let mut split_rng = stream(spec.seed, Stream::Split);
    let to_raw = |t: &AttributeTriple| RawTriple {
        title: t.title.clone(),
        attribute: train.attributes()[t.attribute as usize].clone(),
        value: t.value.clone(),
        label: t.label,
    };
    let mut corrupt: Vec<RawTriple> = train.triples().iter().filter(|t| t.label == Label::Incorrect).map(to_raw).collect();
    let clean_rows: Vec<RawTriple> = train.triples().iter().filter(|t| t.label != Label::Incorrect).map(to_raw).collect();
    corrupt.shuffle(&mut split_rng);
    let n_eval = corrupt.len().min(clean_rows.len());
    let clean_pick: Vec<RawTriple> = index::sample(&mut split_rng, clean_rows.len(), n_eval)
        .into_iter()
        .map(|i| clean_rows[i].clone())
        .collect();
    let half = n_eval / 2;
    let mut valid: Vec<RawTriple> = corrupt[..half].iter().chain(&clean_pick[..half]).cloned().collect();
    let mut test: Vec<RawTriple> = corrupt[half..n_eval].iter().chain(&clean_pick[half..]).cloned().collect();
    valid.shuffle(&mut split_rng);
    test.shuffle(&mut split_rng);

    Ok(SynthData {
        train,
        corruptions,
        valid,
        test,
        themes,
    })
}

impl SynthData {
    /// Write `train.tsv` (unlabeled), `valid.tsv`, `test.tsv` and `corruptions.tsv`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let unlabeled: Vec<RawTriple> = self
            .train
            .to_raw()
            .into_iter()
            .map(|t| t.with_label(Label::Unlabeled))
            .collect();
        write_file(&dir.join("train.tsv"), |w| write_raw_triples(&unlabeled, w))?;
        write_file(&dir.join("valid.tsv"), |w| write_raw_triples(&self.valid, w))?;
        write_file(&dir.join("test.tsv"), |w| write_raw_triples(&self.test, w))?;
        write_file(&dir.join("corruptions.tsv"), |w| write_corruption_log(&self.corruptions, w))
    }
}

fn write_file(path: &Path, f: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    f(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}
