//! End-to-end training on synthetic product graphs.

use pge_core::checkpoint::{load_checkpoint, save_checkpoint};
use pge_core::config::RunConfig;
use pge_core::eval::{confidence_report, pr_metrics, PositiveClass, ScoredTriple};
use pge_core::kg::AttributeTriple;
use pge_core::synth::{generate, SynthSpec};
use pge_core::train::train;
use pge_core::Error;

fn small_run(seed: u64, epochs: usize) -> RunConfig {
    let mut run = RunConfig::default();
    run.model.d_word = 16;
    run.model.d_embed = 16;
    run.model.n_filters = 8;
    run.model.max_len = 16;
    run.model.score.gamma = 4.0;
    run.train.learning_rate = 0.01;
    run.train.confidence_lr = Some(0.05);
    run.train.alpha = 0.7;
    run.train.epochs = epochs;
    run.train.seed = seed;
    run
}

#[test]
fn epoch_loss_falls_over_first_five_epochs() {
    let mut monotone = 0;
    for seed in [1, 2, 3] {
        let data = generate(&SynthSpec { seed, ..SynthSpec::default() }).unwrap();
        let out = train(&data.train, &small_run(seed, 5), &[], None).unwrap();
        let losses: Vec<f64> = out.log.iter().map(|l| l.loss).collect();
        if losses.windows(2).all(|w| w[1] <= w[0]) {
            monotone += 1;
        }
    }
    assert!(monotone >= 2, "{monotone}/3 seeds had non-increasing loss");
}

#[test]
fn trained_model_ranks_corruptions_first() {
    let data = generate(&SynthSpec { seed: 11, ..SynthSpec::default() }).unwrap();
    let resolve = |rows: &[pge_core::kg::RawTriple]| -> Vec<AttributeTriple> { rows.iter().map(|r| data.train.resolve(r).unwrap()).collect() };
    let (valid, test) = (resolve(&data.valid), resolve(&data.test));
    let out = train(&data.train, &small_run(11, 20), &valid, None).unwrap();
    assert!(out.best_epoch >= 1);
    let scores = out.checkpoint.model.score_all(&test);
    let scored: Vec<ScoredTriple> = test.iter().zip(scores).map(|(t, s)| ScoredTriple::new(t.clone(), s)).collect();
    let auc = pr_metrics(&scored, PositiveClass::Incorrect, &[]).pr_auc;
    // A balanced test set puts chance at 0.5.
    assert!(auc > 0.8, "{auc}");
    let report = confidence_report(&out.checkpoint, Some(&data.corruptions));
    assert_eq!(report.n_corrupt, data.corruptions.len());
    assert!(report.mean_clean >= report.mean_corrupt);
}

#[test]
fn trained_checkpoint_round_trips_and_resumes_scoring() {
    let data = generate(&SynthSpec { seed: 5, n_products: 40, ..SynthSpec::default() }).unwrap();
    let out = train(&data.train, &small_run(5, 2), &[], None).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.ckpt");
    save_checkpoint(&out.checkpoint, &path).unwrap();
    let loaded = load_checkpoint(&path).unwrap();
    assert_eq!(loaded.model.params, out.checkpoint.model.params);
    assert_eq!(loaded.confidence, out.checkpoint.confidence);
    assert_eq!(loaded.epoch, 2);
    let raw = data.train.to_raw();
    let a = out.checkpoint.model.score_raw(&raw).unwrap();
    let b = loaded.model.score_raw(&raw).unwrap();
    assert_eq!(a.iter().map(|x| x.to_bits()).collect::<Vec<_>>(), b.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
}

#[test]
fn divergence_reports_numeric_fault_with_last_good_state() {
    let data = generate(&SynthSpec { seed: 2, n_products: 30, ..SynthSpec::default() }).unwrap();
    let mut run = small_run(2, 3);
    run.train.learning_rate = 1e300;
    run.model.score.squared = true;
    match train(&data.train, &run, &[], None) {
        Err(Error::NumericFault { last_good: Some(ckpt), .. }) => {
            assert!(ckpt.model.params.all_finite());
            assert_eq!(Error::NumericFault { triple: 0, last_good: None }.exit_code(), 3);
        }
        other => panic!("expected a numeric fault, got {:?}", other.map(|o| o.best_epoch)),
    }
}
