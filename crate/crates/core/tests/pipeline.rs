mod common;

use std::io::Write;

use intent_core::corpus::{Record, Split};
use intent_core::embeddings::EmbeddingTable;
use intent_core::experiments::grid::{grid_search, GridSpec, SolverSettings, WeightCandidates};
use intent_core::experiments::synthetic::{separable_corpus, synthetic_corpus};
use intent_core::experiments::{
    load_model, preset, preset_names, presets, run_experiment, save_model, score_records,
    train_bundle, ExperimentConfig, ModelBundle, NgramInterpretation,
};
use intent_core::linear_models::{ClassWeightMode, ClassifierKind};
use proptest::prelude::*;

fn split(records: Vec<Record>) -> (Vec<Record>, Vec<Record>) {
    records.into_iter().partition(|r| r.split == Split::Train)
}

/// One-hot class direction plus small deterministic noise, keyed by record id.
fn class_embeddings(records: &[Record], classes: usize) -> EmbeddingTable {
    let mut table = EmbeddingTable::new(classes + 2).unwrap();
    for (i, r) in records.iter().enumerate() {
        let class: usize = r.intent.as_deref().unwrap()["intent_".len()..]
            .parse()
            .unwrap();
        let mut v = vec![0.0; classes + 2];
        v[class] = 1.0;
        v[classes] = (i as f64 * 0.37).sin() * 0.1;
        v[classes + 1] = (i as f64 * 0.91).cos() * 0.1;
        table.insert(r.id.clone(), v).unwrap();
    }
    table
}

#[test]
fn separable_corpus_scores_perfectly_under_every_preset() {
    let docs = separable_corpus();
    let table = class_embeddings(&docs, 3);
    let (train, dev) = split(docs);
    for interp in [NgramInterpretation::RangeFrom1, NgramInterpretation::ExactN] {
        for p in presets(interp) {
            let outcome = run_experiment(&p.config, &train, &dev, Some(&table)).unwrap();
            assert_eq!(outcome.report.micro_f1, 1.0, "{} ({interp:?})", p.name);
        }
    }
}

#[test]
fn every_table_row_has_a_preset() {
    let names = preset_names();
    for row in 1..=5 {
        assert!(names.contains(&format!("exp1-row{row}").as_str()));
    }
    for row in 6..=9 {
        assert!(names.contains(&format!("exp2-row{row}").as_str()));
    }
    assert!(names.contains(&"exp4-row4") && names.contains(&"exp4-row5"));
    for p in presets(NgramInterpretation::RangeFrom1) {
        let back = ExperimentConfig::from_json(&p.config.to_json()).unwrap();
        assert_eq!(back, p.config);
    }
}

#[test]
fn eval_data_never_reaches_the_model() {
    let (train, dev) = split(synthetic_corpus(150, 5, 3));
    let config = preset("exp2-row7", NgramInterpretation::RangeFrom1)
        .unwrap()
        .config;
    let alone = train_bundle(&config, &train, None).unwrap().0;
    let with_dev = run_experiment(&config, &train, &dev, None).unwrap().bundle;
    let other_dev: Vec<Record> = dev.iter().rev().take(5).cloned().collect();
    let with_other = run_experiment(&config, &train, &other_dev, None)
        .unwrap()
        .bundle;
    assert_eq!(alone.to_bytes(), with_dev.to_bytes());
    assert_eq!(alone.to_bytes(), with_other.to_bytes());
}

#[test]
fn unseen_dev_labels_count_as_errors() {
    let (train, mut dev) = split(synthetic_corpus(100, 4, 9));
    for r in dev.iter_mut().take(3) {
        r.intent = Some("brand_new_intent".into());
    }
    let config = preset("exp1-row1", NgramInterpretation::RangeFrom1)
        .unwrap()
        .config;
    let report = run_experiment(&config, &train, &dev, None).unwrap().report;
    assert_eq!(report.unseen_labels, vec!["brand_new_intent".to_owned()]);
    assert!(report.micro_f1 <= 1.0 - 3.0 / dev.len() as f64 + 1e-12);
    let row = report
        .per_class
        .iter()
        .find(|c| c.label == "brand_new_intent")
        .unwrap();
    assert_eq!(row.score.recall, 0.0);
}

#[test]
fn embedding_preset_round_trips_through_disk() {
    let docs = synthetic_corpus(100, 4, 5);
    let table = class_embeddings(&docs, 4);
    let (train, dev) = split(docs);
    let config = preset("exp4-row4", NgramInterpretation::RangeFrom1)
        .unwrap()
        .config;
    let outcome = run_experiment(&config, &train, &dev, Some(&table)).unwrap();
    assert_eq!(outcome.report.micro_f1, 1.0);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("emb.model");
    save_model(&outcome.bundle, &path).unwrap();
    let loaded = load_model(&path).unwrap();
    assert_eq!(loaded, outcome.bundle);
    assert!(
        score_records(&loaded, &dev, None).is_err(),
        "embeddings are required"
    );
}

fn grid_spec(triples: Vec<[usize; 3]>, weights: Vec<[f64; 3]>, c_values: Vec<f64>) -> GridSpec {
    GridSpec {
        schema_version: 1,
        ngram_triples: triples,
        weights: WeightCandidates::Explicit(weights),
        c_values,
        classifier: ClassifierKind::LinearSvc,
        class_weight: ClassWeightMode::Uniform,
        interpretation: NgramInterpretation::RangeFrom1,
        solver: SolverSettings::default(),
    }
}

#[test]
fn singleton_grid_equals_run_experiment() {
    let (train, dev) = split(synthetic_corpus(120, 4, 21));
    let spec = grid_spec(vec![[4, 4, 4]], vec![[0.45, 0.5, 0.75]], vec![5.0]);
    let results = grid_search(&spec, &train, &dev, None).unwrap();
    assert_eq!(results.len(), 1);
    let direct = run_experiment(&results[0].config, &train, &dev, None)
        .unwrap()
        .report;
    assert_eq!(results[0].micro_f1, Some(direct.micro_f1));
    assert_eq!(results[0].macro_f1, Some(direct.macro_f1));

    let preset_config = preset("exp2-row8", NgramInterpretation::RangeFrom1)
        .unwrap()
        .config;
    assert_eq!(results[0].config.features, preset_config.features);
    assert_eq!(results[0].config.train, preset_config.train);
}

#[test]
fn separable_grid_falls_back_to_enumeration_order() {
    let (train, dev) = split(separable_corpus());
    let spec = grid_spec(
        vec![[1, 2, 2], [2, 3, 3]],
        vec![[0.2, 0.5, 1.0], [1.0, 1.0, 1.0]],
        vec![1.0, 4.0],
    );
    let results = grid_search(&spec, &train, &dev, None).unwrap();
    assert_eq!(results.len(), 8);
    for (i, r) in results.iter().enumerate() {
        assert_eq!(r.micro_f1, Some(1.0));
        assert_eq!(r.index, i);
    }
}

#[test]
fn grid_is_deterministic_and_records_failures() {
    let (train, dev) = split(synthetic_corpus(100, 4, 13));
    let mut spec = grid_spec(
        vec![[1, 3, 3], [10, 1, 1]],
        vec![[0.3, 0.6, 0.9], [1.0, 0.1, 0.5]],
        vec![0.5, 2.0],
    );
    // no query is ten words long, so the word block of the second triple is empty
    spec.interpretation = NgramInterpretation::ExactN;
    let a = grid_search(&spec, &train, &dev, None).unwrap();
    let b = grid_search(&spec, &train, &dev, None).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.len(), 8);
    let failed: Vec<_> = a.iter().filter(|r| r.error.is_some()).collect();
    assert_eq!(failed.len(), 4);
    assert!(failed.iter().all(|r| r.index >= 4 && r.micro_f1.is_none()));
    assert!(a[..4].iter().all(|r| r.micro_f1.is_some()));
    assert!(a
        .windows(2)
        .all(|w| w[0].micro_f1.unwrap_or(-1.0) >= w[1].micro_f1.unwrap_or(-1.0)));
}

#[test]
fn interrupted_grid_resumes() {
    let (train, dev) = split(synthetic_corpus(80, 4, 17));
    let spec = grid_spec(
        vec![[2, 3, 3]],
        vec![[0.5, 0.5, 0.5], [1.0, 0.3, 0.7]],
        vec![1.0, 3.0],
    );
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("grid.jsonl");
    let full = grid_search(&spec, &train, &dev, Some(&path)).unwrap();
    let lines: Vec<String> = std::fs::read_to_string(&path)
        .unwrap()
        .lines()
        .map(String::from)
        .collect();
    assert_eq!(lines.len(), 4);

    // keep two finished rows and a torn third line
    let mut f = std::fs::File::create(&path).unwrap();
    writeln!(f, "{}\n{}", lines[0], lines[1]).unwrap();
    write!(f, "{}", &lines[2][..lines[2].len() / 2]).unwrap();
    drop(f);
    let resumed = grid_search(&spec, &train, &dev, Some(&path)).unwrap();
    assert_eq!(resumed, full);

    // a complete file means nothing is rerun
    let before = std::fs::read_to_string(&path).unwrap();
    let again = grid_search(&spec, &train, &dev, Some(&path)).unwrap();
    assert_eq!(again, full);
    assert_eq!(std::fs::read_to_string(&path).unwrap(), before);
}

#[test]
fn thousand_weight_combinations() {
    let spec = GridSpec {
        weights: WeightCandidates::Sweep,
        ..grid_spec(vec![[4, 4, 4]], vec![], vec![5.0])
    };
    assert_eq!(spec.combinations().len(), 1000);
}

fn trained() -> &'static (ModelBundle, Vec<u8>) {
    static CELL: std::sync::OnceLock<(ModelBundle, Vec<u8>)> = std::sync::OnceLock::new();
    CELL.get_or_init(|| {
        let (train, _) = split(synthetic_corpus(100, 4, 31));
        let config = preset("exp2-row6", NgramInterpretation::RangeFrom1)
            .unwrap()
            .config;
        let bundle = train_bundle(&config, &train, None).unwrap().0;
        let bytes = bundle.to_bytes();
        (bundle, bytes)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn reloaded_bundles_score_identically(texts in proptest::collection::vec("[a-zا-ي ]{1,30}", 1..10)) {
        let (bundle, bytes) = trained();
        let loaded = ModelBundle::from_bytes(bytes).unwrap();
        let records: Vec<Record> = texts
            .iter()
            .filter(|t| !t.trim().is_empty())
            .enumerate()
            .map(|(i, t)| common::labelled(&format!("p{i}"), t, "intent_0"))
            .collect();
        let a = score_records(bundle, &records, None).unwrap();
        let b = score_records(&loaded, &records, None).unwrap();
        let bits = |s: &Vec<Vec<f64>>| s.iter().flatten().map(|v| v.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(&a), bits(&b));
    }

    #[test]
    fn any_single_byte_flip_is_detected(pos in any::<prop::sample::Index>(), mask in 1u8..=255) {
        let (_, bytes) = trained();
        let mut corrupt = bytes.clone();
        let i = pos.index(corrupt.len());
        corrupt[i] ^= mask;
        prop_assert!(ModelBundle::from_bytes(&corrupt).is_err());
    }
}
