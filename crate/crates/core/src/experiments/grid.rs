//! Exhaustive search over n-gram triples, block weights and C.
//!
//! Combinations are enumerated triple-major, then weights, then C. Each one
//! is scored with the same fit-on-train / score-on-dev protocol as
//! [`run_experiment`](super::run_experiment). Results are appended to a JSON
//! Lines file as they finish; rerunning with the same file skips every
//! combination already recorded.

use std::collections::HashMap;
use std::fs::OpenOptions;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::Record;
use crate::error::{Error, Result};
use crate::linear_models::{ClassWeightMode, ClassifierKind, TrainConfig};
use crate::vectorizer::fit_union;

use super::config::{
    union_for_triple, ExperimentConfig, FeatureConfig, NgramInterpretation, NgramTriple,
};
use super::runner::PreparedUnion;

pub const GRID_SCHEMA_VERSION: u32 = 1;

fn schema_version() -> u32 {
    GRID_SCHEMA_VERSION
}

fn linear_svc() -> ClassifierKind {
    ClassifierKind::LinearSvc
}

/// The block weights 0.1, 0.2, ..., 1.0.
pub fn weight_steps() -> Vec<f64> {
    (1..=10).map(|i| i as f64 / 10.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightCandidates {
    /// Every triple drawn from [`weight_steps`] (1000 combinations).
    Sweep,
    Explicit(Vec<[f64; 3]>),
}

impl WeightCandidates {
    pub fn expand(&self) -> Vec<[f64; 3]> {
        match self {
            WeightCandidates::Sweep => {
                let steps = weight_steps();
                let mut out = Vec::with_capacity(1000);
                for &a in &steps {
                    for &b in &steps {
                        for &c in &steps {
                            out.push([a, b, c]);
                        }
                    }
                }
                out
            }
            WeightCandidates::Explicit(list) => list.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    pub tol: f64,
    pub max_epochs: usize,
    pub seed: u64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        let base = TrainConfig::linear_svc(1.0, ClassWeightMode::Uniform);
        Self {
            tol: base.tol,
            max_epochs: base.max_epochs,
            seed: base.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    pub ngram_triples: Vec<NgramTriple>,
    pub weights: WeightCandidates,
    pub c_values: Vec<f64>,
    #[serde(default = "linear_svc")]
    pub classifier: ClassifierKind,
    #[serde(default)]
    pub class_weight: ClassWeightMode,
    #[serde(default)]
    pub interpretation: NgramInterpretation,
    #[serde(default)]
    pub solver: SolverSettings,
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != GRID_SCHEMA_VERSION {
            return Err(Error::InvalidConfig(format!(
                "grid schema version {} (expected {GRID_SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        let weights = self.weights.expand();
        if self.ngram_triples.is_empty() || weights.is_empty() || self.c_values.is_empty() {
            return Err(Error::InvalidConfig(
                "every grid axis needs at least one candidate".into(),
            ));
        }
        if let Some(w) = weights.iter().flatten().find(|&&w| !(w > 0.0 && w <= 1.0)) {
            return Err(Error::InvalidConfig(format!(
                "grid weight {w} outside (0, 1]"
            )));
        }
        for c in self.combinations() {
            c.config.validate()?;
        }
        Ok(())
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(json).map_err(|e| Error::json("grid spec", e))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Every combination in enumeration order.
    pub fn combinations(&self) -> Vec<Combination> {
        let weights = self.weights.expand();
        let mut out = Vec::new();
        for &triple in &self.ngram_triples {
            for w in &weights {
                for &c in &self.c_values {
                    let index = out.len();
                    let train = TrainConfig {
                        classifier: self.classifier,
                        c,
                        class_weight: self.class_weight,
                        tol: self.solver.tol,
                        max_epochs: self.solver.max_epochs,
                        seed: self.solver.seed,
                        multi_class: match self.classifier {
                            ClassifierKind::LinearSvc => {
                                crate::linear_models::MultiClass::OneVsRest
                            }
                            ClassifierKind::LogisticRegression => Default::default(),
                        },
                    };
                    let config = ExperimentConfig::new(
                        format!("grid-{index}"),
                        FeatureConfig::Tfidf {
                            union: union_for_triple(triple, *w, self.interpretation),
                            interpretation: self.interpretation,
                        },
                        train,
                    );
                    out.push(Combination {
                        index,
                        triple,
                        weights: *w,
                        config,
                    });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Combination {
    pub index: usize,
    pub triple: NgramTriple,
    pub weights: [f64; 3],
    pub config: ExperimentConfig,
}

impl Combination {
    /// Content key used to match persisted rows on resume.
    pub fn key(&self) -> String {
        let json = serde_json::to_vec(&self.config).expect("config serializes");
        hex::encode(&Sha256::digest(json)[..12])
    }
}

/// One persisted grid row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub index: usize,
    pub key: String,
    pub config: ExperimentConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub micro_f1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub macro_f1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

fn read_existing(path: &Path) -> Result<HashMap<String, GridResult>> {
    let file = match std::fs::File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(HashMap::new()),
        Err(e) => return Err(Error::io(path, e)),
    };
    let mut out = HashMap::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        // a partially written last line from an interrupted run is ignored
        if let Ok(row) = serde_json::from_str::<GridResult>(&line) {
            out.insert(row.key.clone(), row);
        }
    }
    Ok(out)
}

/// Opens the results file for appending, first terminating a torn last line
/// so that new rows start on a line of their own.
fn open_for_append(path: &Path) -> Result<std::fs::File> {
    let mut file = OpenOptions::new()
        .create(true)
        .read(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    let len = file.metadata().map_err(|e| Error::io(path, e))?.len();
    if len > 0 {
        use std::io::{Read, Seek, SeekFrom};
        let mut last = [0u8; 1];
        file.seek(SeekFrom::End(-1))
            .and_then(|_| file.read_exact(&mut last))
            .map_err(|e| Error::io(path, e))?;
        if last[0] != b'\n' {
            file.write_all(b"\n").map_err(|e| Error::io(path, e))?;
        }
    }
    Ok(file)
}

/// Runs every combination and returns results best-first (ties keep
/// enumeration order; failed combinations last).
pub fn grid_search(
    grid: &GridSpec,
    train: &[Record],
    dev: &[Record],
    results_path: Option<&Path>,
) -> Result<Vec<GridResult>> {
    grid.validate()?;
    if train.is_empty() || dev.is_empty() {
        return Err(Error::EmptySelection(
            "grid search needs train and dev records".into(),
        ));
    }
    let mut existing = match results_path {
        Some(p) => read_existing(p)?,
        None => HashMap::new(),
    };
    let sink = match results_path {
        Some(p) => Some(Mutex::new(open_for_append(p)?)),
        None => None,
    };
    let persist = |row: &GridResult| -> Result<()> {
        if let (Some(sink), Some(path)) = (&sink, results_path) {
            let mut line = serde_json::to_string(row).expect("grid row serializes");
            line.push('\n');
            let mut f = sink.lock().unwrap_or_else(|p| p.into_inner());
            f.write_all(line.as_bytes())
                .and_then(|_| f.flush())
                .map_err(|e| Error::io(path, e))?;
        }
        Ok(())
    };

    let combos = grid.combinations();
    let mut results: Vec<GridResult> = Vec::with_capacity(combos.len());
    let mut pending: Vec<(Combination, String)> = Vec::new();
    for combo in combos {
        let key = combo.key();
        match existing.remove(&key) {
            Some(row) if row.index == combo.index => results.push(row),
            _ => pending.push((combo, key)),
        }
    }
    if !results.is_empty() {
        log::info!(
            "resuming grid: {} of {} combinations already done",
            results.len(),
            results.len() + pending.len()
        );
    }

    // group pending combinations by n-gram triple so each union is fitted once
    let mut groups: Vec<(NgramTriple, Vec<(Combination, String)>)> = Vec::new();
    for item in pending {
        match groups.iter_mut().find(|(t, _)| *t == item.0.triple) {
            Some((_, members)) => members.push(item),
            None => groups.push((item.0.triple, vec![item])),
        }
    }

    let train_texts: Vec<&str> = train.iter().map(|r| r.text.as_str()).collect();
    for (triple, members) in groups {
        let prepared = fit_union(
            &train_texts,
            &union_for_triple(triple, [1.0; 3], grid.interpretation),
        )
        .map(|v| PreparedUnion::new(v, train, dev));
        let rows: Vec<GridResult> = members
            .into_par_iter()
            .map(|(combo, key)| {
                let outcome = prepared.as_ref().map_err(|e| e.to_string()).and_then(|p| {
                    p.run(&combo.weights, &combo.config.train, train, dev)
                        .map_err(|e| e.to_string())
                });
                let row = match outcome {
                    Ok(report) => GridResult {
                        index: combo.index,
                        key,
                        config: combo.config,
                        micro_f1: Some(report.micro_f1),
                        macro_f1: Some(report.macro_f1),
                        error: None,
                    },
                    Err(message) => {
                        log::warn!("grid combination {} failed: {message}", combo.index);
                        GridResult {
                            index: combo.index,
                            key,
                            config: combo.config,
                            micro_f1: None,
                            macro_f1: None,
                            error: Some(message),
                        }
                    }
                };
                persist(&row).map(|_| row)
            })
            .collect::<Result<Vec<_>>>()?;
        results.extend(rows);
    }

    rank(&mut results);
    Ok(results)
}

pub fn rank(results: &mut [GridResult]) {
    results.sort_by(|a, b| {
        let fa = a.micro_f1.unwrap_or(f64::NEG_INFINITY);
        let fb = b.micro_f1.unwrap_or(f64::NEG_INFINITY);
        fb.total_cmp(&fa).then(a.index.cmp(&b.index))
    });
}
