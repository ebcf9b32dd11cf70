//! TF-IDF blocks and their weighted union.
//!
//! Each block owns one analyzer, a vocabulary fitted on the training texts and
//! a smoothed IDF vector `ln((1 + n) / (1 + df)) + 1`. A document is encoded
//! per block as raw term counts times IDF, L2-normalized. The union multiplies
//! each normalized block by its weight and concatenates the blocks; the
//! concatenation is not renormalized, so block weights act directly as
//! block norms.

use std::collections::{HashMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analyzers::{analyze, AnalyzerConfig};
use crate::error::{Error, Result};
use crate::sparse::SparseVector;

/// Smoothed inverse document frequency.
pub fn smoothed_idf(n_docs: u64, df: u64) -> f64 {
    ((1.0 + n_docs as f64) / (1.0 + df as f64)).ln() + 1.0
}

/// Optional document-frequency limits applied when fitting a block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DfPruning {
    /// Keep features occurring in at least this many documents.
    pub min_df: u64,
    /// Keep features occurring in at most this fraction of documents.
    pub max_df: f64,
}

impl Default for DfPruning {
    fn default() -> Self {
        Self {
            min_df: 1,
            max_df: 1.0,
        }
    }
}

impl DfPruning {
    fn is_default(&self) -> bool {
        *self == Self::default()
    }

    fn validate(&self) -> Result<()> {
        if self.min_df < 1 || !(self.max_df > 0.0 && self.max_df <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "df pruning needs min_df >= 1 and max_df in (0, 1], got {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    features: Vec<String>,
    index: HashMap<String, usize>,
    df: Vec<u64>,
    n_docs: u64,
}

impl Vocabulary {
    fn from_parts(features: Vec<String>, df: Vec<u64>, n_docs: u64) -> Result<Self> {
        if features.len() != df.len() {
            return Err(Error::CorruptBundle(format!(
                "{} vocabulary entries but {} df counts",
                features.len(),
                df.len()
            )));
        }
        if let Some(bad) = df.iter().find(|&&d| d < 1 || d > n_docs) {
            return Err(Error::CorruptBundle(format!(
                "document frequency {bad} outside [1, {n_docs}]"
            )));
        }
        let index: HashMap<String, usize> = features
            .iter()
            .enumerate()
            .map(|(i, f)| (f.clone(), i))
            .collect();
        if index.len() != features.len() {
            return Err(Error::CorruptBundle("duplicate vocabulary entry".into()));
        }
        Ok(Self {
            features,
            index,
            df,
            n_docs,
        })
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn column(&self, feature: &str) -> Option<usize> {
        self.index.get(feature).copied()
    }

    /// Features in column order.
    pub fn features(&self) -> &[String] {
        &self.features
    }

    pub fn df(&self) -> &[u64] {
        &self.df
    }

    pub fn n_docs(&self) -> u64 {
        self.n_docs
    }
}

#[derive(Serialize, Deserialize)]
struct VocabularyRepr {
    features: Vec<String>,
    df: Vec<u64>,
    n_docs: u64,
}

impl Serialize for Vocabulary {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        VocabularyRepr {
            features: self.features.clone(),
            df: self.df.clone(),
            n_docs: self.n_docs,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Vocabulary {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let r = VocabularyRepr::deserialize(d)?;
        Vocabulary::from_parts(r.features, r.df, r.n_docs).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfidfBlock {
    config: AnalyzerConfig,
    vocab: Vocabulary,
    idf: Vec<f64>,
}

impl TfidfBlock {
    pub fn config(&self) -> &AnalyzerConfig {
        &self.config
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn idf(&self) -> &[f64] {
        &self.idf
    }

    pub fn width(&self) -> usize {
        self.vocab.len()
    }

    fn check(&self) -> Result<()> {
        if self.idf.len() != self.vocab.len() {
            return Err(Error::CorruptBundle(format!(
                "block {} has {} idf values for {} features",
                self.config,
                self.idf.len(),
                self.vocab.len()
            )));
        }
        Ok(())
    }

    pub fn transform(&self, text: &str) -> SparseVector {
        transform_block(self, text)
    }
}

pub fn fit_block(texts: &[impl AsRef<str> + Sync], config: &AnalyzerConfig) -> Result<TfidfBlock> {
    fit_block_with(texts, config, &DfPruning::default())
}

pub fn fit_block_with(
    texts: &[impl AsRef<str> + Sync],
    config: &AnalyzerConfig,
    pruning: &DfPruning,
) -> Result<TfidfBlock> {
    config.validate()?;
    pruning.validate()?;
    if texts.is_empty() {
        return Err(Error::InvalidConfig(
            "cannot fit a TF-IDF block on zero texts".into(),
        ));
    }
    let per_doc: Vec<HashSet<String>> = texts
        .par_iter()
        .map(|t| analyze(t.as_ref(), config).into_iter().collect())
        .collect();
    let mut df: HashMap<String, u64> = HashMap::new();
    for features in per_doc {
        for f in features {
            *df.entry(f).or_insert(0) += 1;
        }
    }

    let n_docs = texts.len() as u64;
    let max_count = pruning.max_df * n_docs as f64;
    let mut kept: Vec<(String, u64)> = df
        .into_iter()
        .filter(|&(_, d)| d >= pruning.min_df && d as f64 <= max_count)
        .collect();
    if kept.is_empty() {
        return Err(Error::EmptyVocabulary {
            block: 0,
            analyzer: config.to_string(),
        });
    }
    kept.sort_unstable_by(|a, b| a.0.cmp(&b.0));

    let (features, dfs): (Vec<String>, Vec<u64>) = kept.into_iter().unzip();
    let idf = dfs.iter().map(|&d| smoothed_idf(n_docs, d)).collect();
    Ok(TfidfBlock {
        config: *config,
        vocab: Vocabulary::from_parts(features, dfs, n_docs)?,
        idf,
    })
}

/// Counts times IDF, L2-normalized. Documents with no known feature map to zero.
pub fn transform_block(block: &TfidfBlock, text: &str) -> SparseVector {
    let mut counts: HashMap<usize, u32> = HashMap::new();
    for f in analyze(text, &block.config) {
        if let Some(col) = block.vocab.column(&f) {
            *counts.entry(col).or_insert(0) += 1;
        }
    }
    let mut cols: Vec<(usize, f64)> = counts
        .into_iter()
        .map(|(c, n)| (c, n as f64 * block.idf[c]))
        .collect();
    cols.sort_unstable_by_key(|&(c, _)| c);

    let mut out = SparseVector::zeros(block.width());
    let norm = cols.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        for (c, v) in cols {
            out.push_unchecked(c, v / norm);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnionBlock {
    pub analyzer: AnalyzerConfig,
    pub weight: f64,
    #[serde(default, skip_serializing_if = "DfPruning::is_default")]
    pub pruning: DfPruning,
}

/// Ordered analyzer blocks with their weights; order fixes the column layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnionSpec {
    pub blocks: Vec<UnionBlock>,
}

impl UnionSpec {
    pub fn new(blocks: impl IntoIterator<Item = (AnalyzerConfig, f64)>) -> Self {
        Self {
            blocks: blocks
                .into_iter()
                .map(|(analyzer, weight)| UnionBlock {
                    analyzer,
                    weight,
                    pruning: DfPruning::default(),
                })
                .collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.blocks.is_empty() {
            return Err(Error::InvalidConfig(
                "union needs at least one block".into(),
            ));
        }
        for b in &self.blocks {
            b.analyzer.validate()?;
            b.pruning.validate()?;
            if !(b.weight > 0.0 && b.weight <= 1.0) {
                return Err(Error::InvalidConfig(format!(
                    "block weight {} for {} outside (0, 1]",
                    b.weight, b.analyzer
                )));
            }
        }
        Ok(())
    }

    pub fn weights(&self) -> Vec<f64> {
        self.blocks.iter().map(|b| b.weight).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "UnionRepr", try_from = "UnionRepr")]
pub struct UnionVectorizer {
    blocks: Vec<TfidfBlock>,
    weights: Vec<f64>,
    offsets: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct UnionRepr {
    blocks: Vec<TfidfBlock>,
    weights: Vec<f64>,
}

impl From<UnionVectorizer> for UnionRepr {
    fn from(u: UnionVectorizer) -> Self {
        Self {
            blocks: u.blocks,
            weights: u.weights,
        }
    }
}

impl TryFrom<UnionRepr> for UnionVectorizer {
    type Error = Error;

    fn try_from(r: UnionRepr) -> Result<Self> {
        UnionVectorizer::from_blocks(r.blocks, r.weights)
    }
}

pub fn fit_union(texts: &[impl AsRef<str> + Sync], spec: &UnionSpec) -> Result<UnionVectorizer> {
    spec.validate()?;
    let blocks = spec
        .blocks
        .iter()
        .enumerate()
        .map(|(i, b)| {
            fit_block_with(texts, &b.analyzer, &b.pruning).map_err(|e| match e {
                Error::EmptyVocabulary { analyzer, .. } => {
                    Error::EmptyVocabulary { block: i, analyzer }
                }
                other => other,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    UnionVectorizer::from_blocks(blocks, spec.weights())
}

pub fn transform_union(vec: &UnionVectorizer, text: &str) -> SparseVector {
    vec.transform(text)
}

impl UnionVectorizer {
    pub fn from_blocks(blocks: Vec<TfidfBlock>, weights: Vec<f64>) -> Result<Self> {
        if blocks.len() != weights.len() || blocks.is_empty() {
            return Err(Error::InvalidConfig(format!(
                "{} blocks but {} weights",
                blocks.len(),
                weights.len()
            )));
        }
        let mut offsets = vec![0];
        for b in &blocks {
            b.check()?;
            offsets.push(offsets.last().unwrap() + b.width());
        }
        Ok(Self {
            blocks,
            weights,
            offsets,
        })
    }

    pub fn blocks(&self) -> &[TfidfBlock] {
        &self.blocks
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Cumulative column offsets; the last entry is the total width.
    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn width(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    /// The same fitted blocks under different weights.
    pub fn reweighted(&self, weights: &[f64]) -> Result<Self> {
        Self::from_blocks(self.blocks.clone(), weights.to_vec())
    }

    /// Unweighted per-block encodings of `text`.
    pub fn transform_blocks(&self, text: &str) -> Vec<SparseVector> {
        self.blocks
            .iter()
            .map(|b| transform_block(b, text))
            .collect()
    }

    pub fn transform(&self, text: &str) -> SparseVector {
        combine_blocks(&self.transform_blocks(text), &self.weights)
    }

    /// Transforms every text in parallel; output order follows input order.
    pub fn transform_batch(&self, texts: &[impl AsRef<str> + Sync]) -> Vec<SparseVector> {
        texts
            .par_iter()
            .map(|t| self.transform(t.as_ref()))
            .collect()
    }
}

/// Scales each block by its weight and concatenates.
pub fn combine_blocks(parts: &[SparseVector], weights: &[f64]) -> SparseVector {
    let mut out = SparseVector::zeros(0);
    for (part, &w) in parts.iter().zip(weights) {
        let mut scaled = part.clone();
        scaled.scale(w);
        out.extend_shifted(&scaled);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::FeatureRow;

    #[test]
    fn idf_of_ubiquitous_term_is_one() {
        let b = fit_block(&["ab", "ab"], &AnalyzerConfig::char(2, 2)).unwrap();
        assert_eq!(b.vocab().features(), ["ab"]);
        assert_eq!(b.vocab().df(), [2]);
        assert_eq!(b.idf(), [1.0]);
    }

    #[test]
    fn idf_smoothing() {
        let b = fit_block(&["ab", "cd", "cd"], &AnalyzerConfig::char(2, 2)).unwrap();
        let col = b.vocab().column("ab").unwrap();
        assert!((b.idf()[col] - 1.693_147_180_559_945).abs() < 1e-12);
    }

    #[test]
    fn lexicographic_columns() {
        let b = fit_block(&["cd", "ab"], &AnalyzerConfig::char(2, 2)).unwrap();
        assert_eq!(b.vocab().features(), ["ab", "cd"]);
    }

    #[test]
    fn empty_vocabulary_is_an_error() {
        let err = fit_block(&["a b", "c"], &AnalyzerConfig::word(1, 1)).unwrap_err();
        assert!(matches!(err, Error::EmptyVocabulary { .. }));
        let spec = UnionSpec::new([
            (AnalyzerConfig::char(1, 1), 1.0),
            (AnalyzerConfig::word(1, 1), 1.0),
        ]);
        let err = fit_union(&["a b"], &spec).unwrap_err();
        assert!(
            matches!(err, Error::EmptyVocabulary { block: 1, .. }),
            "{err:?}"
        );
    }

    #[test]
    fn transform_edge_cases() {
        let b = fit_block(&["ab", "cd", "xy"], &AnalyzerConfig::char(2, 2)).unwrap();
        let one = b.transform("ab");
        assert_eq!(one.values(), [1.0]);
        assert_eq!(b.transform("zz").nnz(), 0);
        let two = b.transform("ab cd");
        assert_eq!(two.nnz(), 2);
        for v in two.values() {
            assert!((v - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        }
    }

    #[test]
    fn pruning_limits() {
        let texts = ["aa bb", "aa cc", "aa bb"];
        let cfg = AnalyzerConfig::word(1, 1);
        let b = fit_block_with(
            &texts,
            &cfg,
            &DfPruning {
                min_df: 2,
                max_df: 1.0,
            },
        )
        .unwrap();
        assert_eq!(b.vocab().features(), ["aa", "bb"]);
        let b = fit_block_with(
            &texts,
            &cfg,
            &DfPruning {
                min_df: 1,
                max_df: 0.9,
            },
        )
        .unwrap();
        assert_eq!(b.vocab().features(), ["bb", "cc"]);
    }

    #[test]
    fn single_block_union_matches_block() {
        let texts = ["pay my bill", "lost card", "card bill"];
        let cfg = AnalyzerConfig::char_wb(1, 3);
        let block = fit_block(&texts, &cfg).unwrap();
        let union = fit_union(&texts, &UnionSpec::new([(cfg, 1.0)])).unwrap();
        for t in texts.iter().chain(&["unseen text"]) {
            assert_eq!(union.transform(t), block.transform(t));
        }
    }

    #[test]
    fn offsets_and_weighted_norms() {
        let texts = ["pay my bill now", "lost my card", "card bill fee"];
        let spec = UnionSpec::new([
            (AnalyzerConfig::word(1, 4), 0.45),
            (AnalyzerConfig::char(1, 4), 0.5),
            (AnalyzerConfig::char_wb(1, 4), 0.75),
        ]);
        let u = fit_union(&texts, &spec).unwrap();
        let offs = u.offsets();
        assert_eq!(offs[0], 0);
        assert!(offs.windows(2).all(|w| w[0] < w[1]));
        let v = u.transform("pay my card");
        for (b, expect) in [0.45, 0.5, 0.75].into_iter().enumerate() {
            let norm: f64 = v
                .iter()
                .filter(|&(i, _)| i >= offs[b] && i < offs[b + 1])
                .map(|(_, x)| x * x)
                .sum::<f64>()
                .sqrt();
            assert!((norm - expect).abs() < 1e-12, "block {b}: {norm}");
        }
        assert!((v.squared_norm() - (0.45f64.powi(2) + 0.25 + 0.5625)).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_weights() {
        for w in [0.0, -0.1, 1.5, f64::NAN] {
            let spec = UnionSpec::new([(AnalyzerConfig::word(1, 1), w)]);
            assert!(spec.validate().is_err(), "{w}");
        }
        assert!(UnionSpec { blocks: vec![] }.validate().is_err());
    }

    #[test]
    fn serde_round_trip() {
        let texts = ["حساب بنكي", "بطاقة ضائعة"];
        let spec = UnionSpec::new([
            (AnalyzerConfig::word(1, 2), 0.3),
            (AnalyzerConfig::char_wb(2, 3), 0.9),
        ]);
        let u = fit_union(&texts, &spec).unwrap();
        let json = serde_json::to_string(&u).unwrap();
        let back: UnionVectorizer = serde_json::from_str(&json).unwrap();
        assert_eq!(back, u);
    }
}
