use std::path::Path;

use intent_core::corpus::{
    corpus_stats, encode_with, load_corpus, read_corpus, Corpus, CorpusFormat, LabelIndex, Record,
    Split, SplitSelector,
};
use proptest::prelude::*;

fn word() -> impl Strategy<Value = String> {
    "[a-zب-ي]{1,8}"
}

fn sentence() -> impl Strategy<Value = String> {
    proptest::collection::vec(word(), 1..10).prop_map(|ws| ws.join(" "))
}

fn records() -> impl Strategy<Value = Vec<Record>> {
    proptest::collection::vec(
        (
            sentence(),
            0usize..4,
            prop::sample::select(vec![Split::Train, Split::Dev, Split::Test]),
        ),
        1..40,
    )
    .prop_map(|rows| {
        rows.into_iter()
            .enumerate()
            .map(|(i, (text, label, split))| Record {
                id: format!("r{i}"),
                text,
                intent: Some(format!("label{label}")),
                dialect: None,
                split,
            })
            .collect()
    })
}

fn to_tsv(records: &[Record]) -> String {
    let mut out = String::from("id\ttext\tintent\tsplit\n");
    for r in records {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\n",
            r.id,
            r.text,
            r.intent.as_deref().unwrap(),
            r.split
        ));
    }
    out
}

fn format() -> CorpusFormat {
    CorpusFormat {
        id_col: Some("id".into()),
        split_col: Some("split".into()),
        ..CorpusFormat::default()
    }
}

proptest! {
    #[test]
    fn total_stats_are_weighted_split_means(records in records()) {
        let corpus = Corpus::new(records);
        let all = corpus_stats(&corpus, SplitSelector::All).unwrap();
        let parts: Vec<_> = [Split::Train, Split::Dev, Split::Test]
            .into_iter()
            .filter_map(|s| corpus_stats(&corpus, SplitSelector::Only(s)).ok())
            .collect();
        let n: usize = parts.iter().map(|p| p.n_sentences).sum();
        prop_assert_eq!(n, all.n_sentences);
        let words = parts.iter().map(|p| p.avg_words * p.n_sentences as f64).sum::<f64>() / n as f64;
        let chars = parts.iter().map(|p| p.avg_chars * p.n_sentences as f64).sum::<f64>() / n as f64;
        prop_assert!((words - all.avg_words).abs() <= 1e-9);
        prop_assert!((chars - all.avg_chars).abs() <= 1e-9);
        prop_assert!(all.avg_chars >= all.avg_words && all.avg_words >= 1.0);
    }

    #[test]
    fn parsing_is_deterministic_and_lossless(records in records()) {
        let tsv = to_tsv(&records);
        let a = read_corpus(tsv.as_bytes(), Path::new("mem.tsv"), &format()).unwrap();
        let b = read_corpus(tsv.as_bytes(), Path::new("mem.tsv"), &format()).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(a.records(), records.as_slice());
    }

    #[test]
    fn label_ids_follow_their_records(records in records(), seed in any::<u64>()) {
        use rand::{seq::SliceRandom, SeedableRng};
        let labels = LabelIndex::from_records(&records);
        let ids = encode_with(&labels, &records).unwrap();
        let mut order: Vec<usize> = (0..records.len()).collect();
        order.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let permuted: Vec<Record> = order.iter().map(|&i| records[i].clone()).collect();
        let permuted_ids = encode_with(&labels, &permuted).unwrap();
        let expected: Vec<usize> = order.iter().map(|&i| ids[i]).collect();
        prop_assert_eq!(permuted_ids, expected);
    }

    #[test]
    fn labels_cover_every_non_test_record(records in records()) {
        let corpus = Corpus::new(records);
        for r in corpus.records().iter().filter(|r| r.split != Split::Test) {
            prop_assert!(corpus.labels().get(r.intent.as_deref().unwrap()).is_some());
        }
    }
}

#[test]
fn loads_from_disk_in_file_order() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pal.csv");
    std::fs::write(
        &path,
        "\u{feff}query,label,dialect\n\"كم رسوم, التحويل\",fees,PAL\nوين الصراف,atm,PAL\n",
    )
    .unwrap();
    let format = CorpusFormat {
        delimiter: "comma".parse().unwrap(),
        text_col: "query".into(),
        label_col: Some("label".into()),
        dialect_col: Some("dialect".into()),
        ..CorpusFormat::default()
    }
    .with_split(Split::Train);
    let corpus = load_corpus(&path, &format).unwrap();
    assert_eq!(corpus.len(), 2);
    assert_eq!(corpus.records()[0].text, "كم رسوم, التحويل");
    assert_eq!(corpus.records()[1].dialect.as_deref(), Some("PAL"));
    assert_eq!(corpus.labels().labels(), ["fees", "atm"]);
    assert_eq!(corpus, load_corpus(&path, &format).unwrap());
}

#[test]
fn missing_file_is_a_data_error() {
    let err = load_corpus("/definitely/not/here.tsv", &CorpusFormat::default()).unwrap_err();
    assert_eq!(err.class(), intent_core::ErrorClass::Data);
    assert!(err.to_string().contains("/definitely/not/here.tsv"));
}
