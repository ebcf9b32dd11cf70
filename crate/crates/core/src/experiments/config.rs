use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analyzers::AnalyzerConfig;
use crate::corpus::CorpusFormat;
use crate::embeddings::EmbeddingSpec;
use crate::error::{Error, Result};
use crate::linear_models::TrainConfig;
use crate::vectorizer::{UnionBlock, UnionSpec};

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

fn schema_version() -> u32 {
    CONFIG_SCHEMA_VERSION
}

/// How an n-gram order `k` from a (word, char, char_wb) triple becomes a range.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NgramInterpretation {
    /// `k` means orders 1 through k.
    #[default]
    #[serde(rename = "range_from_1")]
    RangeFrom1,
    /// `k` means exactly order k.
    ExactN,
}

impl NgramInterpretation {
    pub fn range(self, k: usize) -> (usize, usize) {
        match self {
            NgramInterpretation::RangeFrom1 => (1, k),
            NgramInterpretation::ExactN => (k, k),
        }
    }
}

impl std::str::FromStr for NgramInterpretation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "range-from-1" | "range_from_1" => Ok(Self::RangeFrom1),
            "exact-n" | "exact_n" => Ok(Self::ExactN),
            other => Err(format!(
                "unknown n-gram mode `{other}` (expected range-from-1 or exact-n)"
            )),
        }
    }
}

/// Word, char and char_wb n-gram orders, in that block order.
pub type NgramTriple = [usize; 3];

/// Union of word, char and char_wb blocks for a triple of n-gram orders.
pub fn union_for_triple(
    triple: NgramTriple,
    weights: [f64; 3],
    interpretation: NgramInterpretation,
) -> UnionSpec {
    let [w, c, cwb] = triple.map(|k| interpretation.range(k));
    UnionSpec::new([
        (AnalyzerConfig::word(w.0, w.1), weights[0]),
        (AnalyzerConfig::char(c.0, c.1), weights[1]),
        (AnalyzerConfig::char_wb(cwb.0, cwb.1), weights[2]),
    ])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum FeatureConfig {
    Tfidf {
        union: UnionSpec,
        #[serde(default)]
        interpretation: NgramInterpretation,
    },
    Embeddings(EmbeddingSpec),
}

impl FeatureConfig {
    /// Re-reads every block's n-gram order under `interpretation`.
    ///
    /// The order `k` of a block is its `ngram_max`, which both readings share.
    pub fn with_interpretation(&self, interpretation: NgramInterpretation) -> Self {
        match self {
            FeatureConfig::Tfidf { union, .. } => FeatureConfig::Tfidf {
                union: UnionSpec {
                    blocks: union
                        .blocks
                        .iter()
                        .map(|b| {
                            let (lo, hi) = interpretation.range(b.analyzer.ngram_max);
                            UnionBlock {
                                analyzer: AnalyzerConfig {
                                    ngram_min: lo,
                                    ngram_max: hi,
                                    ..b.analyzer
                                },
                                ..b.clone()
                            }
                        })
                        .collect(),
                },
                interpretation,
            },
            other => other.clone(),
        }
    }
}

/// Input locations. Empty for presets; filled from the command line.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DataConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub train: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dev: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub test: Option<PathBuf>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub embeddings: Vec<PathBuf>,
    pub format: CorpusFormat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    pub name: String,
    pub features: FeatureConfig,
    pub train: TrainConfig,
    #[serde(default)]
    pub data: DataConfig,
}

impl ExperimentConfig {
    pub fn new(name: impl Into<String>, features: FeatureConfig, train: TrainConfig) -> Self {
        Self {
            schema_version: CONFIG_SCHEMA_VERSION,
            name: name.into(),
            features,
            train,
            data: DataConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(Error::InvalidConfig(format!(
                "config schema version {} (expected {CONFIG_SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        self.train.validate()?;
        if let FeatureConfig::Tfidf { union, .. } = &self.features {
            union.validate()?;
        }
        Ok(())
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let cfg: Self =
            serde_json::from_str(json).map_err(|e| Error::json("experiment config", e))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}
