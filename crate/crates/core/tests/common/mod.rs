//! Reference implementations written directly from the textbook formulas,
//! sharing no code with the library, plus small data builders.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use intent_core::corpus::Record;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Brute-force TF-IDF over pre-tokenized documents: explicit count tables,
/// `idf = ln((1 + n) / (1 + df)) + 1`, rows L2-normalized, columns sorted.
pub fn oracle_tfidf(docs: &[Vec<String>]) -> (Vec<String>, Vec<Vec<f64>>) {
    let vocab: Vec<String> = docs
        .iter()
        .flatten()
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let n = docs.len() as f64;
    let counts: Vec<BTreeMap<&str, f64>> = docs
        .iter()
        .map(|d| {
            let mut m = BTreeMap::new();
            for t in d {
                *m.entry(t.as_str()).or_insert(0.0) += 1.0;
            }
            m
        })
        .collect();
    let idf: Vec<f64> = vocab
        .iter()
        .map(|t| {
            let df = counts.iter().filter(|c| c.contains_key(t.as_str())).count() as f64;
            ((1.0 + n) / (1.0 + df)).ln() + 1.0
        })
        .collect();
    let rows = counts
        .iter()
        .map(|c| {
            let raw: Vec<f64> = vocab
                .iter()
                .zip(&idf)
                .map(|(t, w)| c.get(t.as_str()).copied().unwrap_or(0.0) * w)
                .collect();
            let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm == 0.0 {
                raw
            } else {
                raw.iter().map(|v| v / norm).collect()
            }
        })
        .collect();
    (vocab, rows)
}

/// Character n-grams of a string whose whitespace is already single spaces.
pub fn oracle_char_ngrams(text: &str, lo: usize, hi: usize) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    for n in lo..=hi {
        if n <= chars.len() {
            for start in 0..=chars.len() - n {
                out.push(chars[start..start + n].iter().collect());
            }
        }
    }
    out
}

/// Random documents of space-separated words drawn from `pool`.
pub fn random_docs(rng: &mut ChaCha8Rng, n_docs: usize, pool: &[&str]) -> Vec<String> {
    (0..n_docs)
        .map(|_| {
            let len = rng.gen_range(1..=6);
            (0..len)
                .map(|_| pool[rng.gen_range(0..pool.len())])
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Relative error `|a - b| / max(|a|, |b|)` of two vectors, 0 when both vanish.
pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt();
    let scale = a
        .iter()
        .map(|x| x * x)
        .sum::<f64>()
        .sqrt()
        .max(b.iter().map(|x| x * x).sum::<f64>().sqrt());
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

/// Central finite-difference gradient.
pub fn numeric_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut p = x.to_vec();
    (0..x.len())
        .map(|i| {
            p[i] = x[i] + h;
            let up = f(&p);
            p[i] = x[i] - h;
            let down = f(&p);
            p[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Multinomial logistic objective written out from its definition.
pub fn oracle_softmax_loss(params: &[f64], x: &[Vec<f64>], y: &[usize], k: usize, c: f64) -> f64 {
    let dim = x[0].len();
    let mut loss = 0.0;
    for (row, &label) in x.iter().zip(y) {
        let z: Vec<f64> = (0..k)
            .map(|j| {
                (0..dim).map(|f| params[j * dim + f] * row[f]).sum::<f64>() + params[k * dim + j]
            })
            .collect();
        let denom: f64 = z.iter().map(|v| v.exp()).sum();
        loss -= (z[label].exp() / denom).ln();
    }
    loss + params[..k * dim].iter().map(|w| w * w).sum::<f64>() / (2.0 * c)
}

pub fn sorted(mut v: Vec<String>) -> Vec<String> {
    v.sort();
    v
}

pub fn labelled(id: &str, text: &str, intent: &str) -> Record {
    Record {
        id: id.to_owned(),
        text: text.to_owned(),
        intent: Some(intent.to_owned()),
        dialect: None,
        split: intent_core::corpus::Split::Train,
    }
}
