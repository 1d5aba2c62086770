//! File-level round trips through the synthetic generator, noise log and loaders.

use pge_core::kg::{load_triples, read_corruption_log, read_triples, Label};
use pge_core::synth::{generate, SynthSpec};

#[test]
fn synthetic_files_reload_consistently() {
    let data = generate(&SynthSpec::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    data.write(dir.path()).unwrap();

    let train = load_triples(&dir.path().join("train.tsv")).unwrap();
    assert_eq!(train.len(), data.train.len());
    assert!(train.triples().iter().all(|t| t.label == Label::Unlabeled));

    let log = read_corruption_log(&dir.path().join("corruptions.tsv")).unwrap();
    assert_eq!(log, data.corruptions);
    for c in &log {
        let attr = train.attribute_id(&c.attribute).unwrap();
        assert!(train.contains(&c.corrupt_title, attr, &c.corrupt_value));
        assert!(train.contains(&c.title, attr, &c.original_value));
        assert_eq!(c.title, c.corrupt_title);
        assert_ne!(c.original_value, c.corrupt_value);
    }

    for name in ["valid.tsv", "test.tsv"] {
        let rows = read_triples(&dir.path().join(name)).unwrap();
        let bad = rows.iter().filter(|r| r.label == Label::Incorrect).count();
        assert_eq!(bad * 2, rows.len(), "{name} is not balanced");
        for r in &rows {
            train.resolve(r).unwrap();
        }
    }
}

#[test]
fn noise_grows_graph_by_ceiling() {
    let spec = SynthSpec::default();
    let clean = generate(&SynthSpec { noise_ratio: 0.0, ..spec.clone() }).unwrap();
    let noisy = generate(&spec).unwrap();
    let expected = (0.1 * clean.train.len() as f64).ceil() as usize;
    assert_eq!(noisy.train.len(), clean.train.len() + expected);
    assert_eq!(noisy.corruptions.len(), expected);
}
