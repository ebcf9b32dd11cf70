//! Seeded synthetic intent corpora for smoke tests and demos.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Record, Split};

const LETTERS: &[char] = &[
    'ا', 'ب', 'ت', 'ث', 'ج', 'ح', 'خ', 'د', 'ر', 'س', 'ش', 'ص', 'ط', 'ع', 'ف', 'ق', 'ك', 'ل', 'م',
    'ن', 'ه', 'و', 'ي',
];

fn word(rng: &mut ChaCha8Rng) -> String {
    let len = rng.gen_range(3..=6);
    (0..len).map(|_| *LETTERS.choose(rng).unwrap()).collect()
}

/// `n_docs` short queries over `n_classes` intents. Each class has its own
/// keyword pool and all classes share a pool of filler words. Every fifth
/// document of each class goes to the dev split, the rest to train.
pub fn synthetic_corpus(n_docs: usize, n_classes: usize, seed: u64) -> Vec<Record> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shared: Vec<String> = (0..20).map(|_| word(&mut rng)).collect();
    let pools: Vec<Vec<String>> = (0..n_classes)
        .map(|_| (0..8).map(|_| word(&mut rng)).collect())
        .collect();

    (0..n_docs)
        .map(|i| {
            let class = i % n_classes;
            let n_key = rng.gen_range(2..=4);
            let n_fill = rng.gen_range(2..=5);
            let mut words: Vec<&str> = Vec::with_capacity(n_key + n_fill);
            for _ in 0..n_key {
                words.push(pools[class].choose(&mut rng).unwrap());
            }
            for _ in 0..n_fill {
                words.push(shared.choose(&mut rng).unwrap());
            }
            words.shuffle(&mut rng);
            Record {
                id: format!("syn-{i}"),
                text: words.join(" "),
                intent: Some(format!("intent_{class}")),
                dialect: Some("SYN".into()),
                split: if (i / n_classes) % 5 == 4 {
                    Split::Dev
                } else {
                    Split::Train
                },
            }
        })
        .collect()
}

/// Twelve documents over three intents whose words share no letters across
/// intents, so every word and character n-gram belongs to one intent only.
/// Three documents per intent are train, the fourth is dev.
pub fn separable_corpus() -> Vec<Record> {
    const ALPHABETS: [&str; 3] = ["ابتث", "جحخد", "رسشص"];
    let mut out = Vec::with_capacity(12);
    for (class, alphabet) in ALPHABETS.iter().enumerate() {
        let letters: Vec<char> = alphabet.chars().collect();
        let vocab: Vec<String> = (0..4)
            .map(|i| (0..3).map(|j| letters[(i + j) % 4]).collect())
            .collect();
        for doc in 0..4 {
            let text = (0..5)
                .map(|j| vocab[(doc + j) % 4].as_str())
                .collect::<Vec<_>>()
                .join(" ");
            out.push(Record {
                id: format!("sep-{class}-{doc}"),
                text,
                intent: Some(format!("intent_{class}")),
                dialect: None,
                split: if doc == 3 { Split::Dev } else { Split::Train },
            });
        }
    }
    out
}
