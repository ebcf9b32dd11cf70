use crate::corpus::{encode_with, LabelIndex, Record};
use crate::embeddings::EmbeddingTable;
use crate::error::{Error, Result};
use crate::evaluation::{evaluate, EvalReport};
use crate::linear_models::{
    class_counts, compute_class_weights, train_linear_svc, train_logreg, ClassifierKind, Fitted,
    LinearModel, SolverTrace, TrainConfig,
};
use crate::sparse::{FeatureRow, SparseVector};
use crate::vectorizer::{fit_union, UnionVectorizer};

use super::bundle::{FittedFeatures, ModelBundle};
use super::config::{ExperimentConfig, FeatureConfig};

/// Encoded feature rows of a batch of records.
pub enum FeatureRows {
    Sparse(Vec<SparseVector>),
    Dense(Vec<Vec<f64>>),
}

impl FeatureRows {
    pub fn len(&self) -> usize {
        match self {
            FeatureRows::Sparse(r) => r.len(),
            FeatureRows::Dense(r) => r.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn texts(records: &[Record]) -> Vec<&str> {
    records.iter().map(|r| r.text.as_str()).collect()
}

fn need_embeddings(table: Option<&EmbeddingTable>) -> Result<&EmbeddingTable> {
    table.ok_or_else(|| {
        Error::InvalidConfig(
            "this model reads sentence embeddings; supply an embeddings file".into(),
        )
    })
}

/// Encodes `records` with a fitted feature extractor.
pub fn encode_records(
    features: &FittedFeatures,
    records: &[Record],
    embeddings: Option<&EmbeddingTable>,
) -> Result<FeatureRows> {
    match features {
        FittedFeatures::Tfidf { vectorizer } => Ok(FeatureRows::Sparse(
            vectorizer.transform_batch(&texts(records)),
        )),
        FittedFeatures::Embeddings { spec } => {
            let table = need_embeddings(embeddings)?;
            if let Some(dim) = spec.dim {
                if dim != table.dim() {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        found: table.dim(),
                    });
                }
            }
            Ok(FeatureRows::Dense(table.rows_for(records, spec.normalize)?))
        }
    }
}

pub fn train_classifier(
    rows: &FeatureRows,
    y: &[usize],
    labels: &LabelIndex,
    config: &TrainConfig,
) -> Result<Fitted> {
    fn dispatch<R: FeatureRow>(
        x: &[R],
        y: &[usize],
        labels: &LabelIndex,
        config: &TrainConfig,
    ) -> Result<Fitted> {
        match config.classifier {
            ClassifierKind::LinearSvc => {
                let counts = class_counts(y, labels.len())?;
                let weights = compute_class_weights(&counts, config.class_weight)?;
                train_linear_svc(x, y, labels, config, &weights)
            }
            ClassifierKind::LogisticRegression => train_logreg(x, y, labels, config),
        }
    }
    match rows {
        FeatureRows::Sparse(x) => dispatch(x, y, labels, config),
        FeatureRows::Dense(x) => dispatch(x, y, labels, config),
    }
}

/// Fits the feature extractor and classifier on `train` only.
pub fn train_bundle(
    config: &ExperimentConfig,
    train: &[Record],
    embeddings: Option<&EmbeddingTable>,
) -> Result<(ModelBundle, Vec<SolverTrace>)> {
    config.validate()?;
    if train.is_empty() {
        return Err(Error::EmptySelection("train".into()));
    }
    let labels = LabelIndex::from_records(train);
    let y = encode_with(&labels, train)?;

    let features = match &config.features {
        FeatureConfig::Tfidf { union, .. } => FittedFeatures::Tfidf {
            vectorizer: fit_union(&texts(train), union)?,
        },
        FeatureConfig::Embeddings(spec) => FittedFeatures::Embeddings {
            spec: crate::embeddings::EmbeddingSpec {
                dim: Some(need_embeddings(embeddings)?.dim()),
                ..spec.clone()
            },
        },
    };
    let rows = encode_records(&features, train, embeddings)?;
    let fitted = train_classifier(&rows, &y, &labels, &config.train)?;
    Ok((
        ModelBundle {
            config: config.clone(),
            features,
            model: fitted.model,
        },
        fitted.traces,
    ))
}

/// Decision scores of every record, in record order.
pub fn score_records(
    bundle: &ModelBundle,
    records: &[Record],
    embeddings: Option<&EmbeddingTable>,
) -> Result<Vec<Vec<f64>>> {
    fn scores<R: FeatureRow>(model: &LinearModel, x: &[R]) -> Result<Vec<Vec<f64>>> {
        x.iter().map(|r| model.decision_function(r)).collect()
    }
    match encode_records(&bundle.features, records, embeddings)? {
        FeatureRows::Sparse(x) => scores(&bundle.model, &x),
        FeatureRows::Dense(x) => scores(&bundle.model, &x),
    }
}

pub fn predict_records(
    bundle: &ModelBundle,
    records: &[Record],
    embeddings: Option<&EmbeddingTable>,
) -> Result<Vec<usize>> {
    Ok(score_records(bundle, records, embeddings)?
        .iter()
        .map(|s| crate::linear_models::argmax(s))
        .collect())
}

pub fn evaluate_bundle(
    bundle: &ModelBundle,
    records: &[Record],
    embeddings: Option<&EmbeddingTable>,
) -> Result<EvalReport> {
    if records.is_empty() {
        return Err(Error::EmptySelection("evaluation".into()));
    }
    let gold = records
        .iter()
        .map(|r| {
            r.intent
                .as_deref()
                .ok_or_else(|| Error::Unlabeled { id: r.id.clone() })
        })
        .collect::<Result<Vec<_>>>()?;
    let pred = predict_records(bundle, records, embeddings)?;
    evaluate(&gold, &pred, bundle.model.labels())
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub report: EvalReport,
    pub bundle: ModelBundle,
    pub traces: Vec<SolverTrace>,
}

/// Fit on `train`, score on `eval`. The eval records are never seen by the
/// vectorizer or the classifier.
pub fn run_experiment(
    config: &ExperimentConfig,
    train: &[Record],
    eval: &[Record],
    embeddings: Option<&EmbeddingTable>,
) -> Result<ExperimentOutcome> {
    if eval.is_empty() {
        return Err(Error::EmptySelection("evaluation".into()));
    }
    let (bundle, traces) = train_bundle(config, train, embeddings)?;
    let report = evaluate_bundle(&bundle, eval, embeddings)?;
    Ok(ExperimentOutcome {
        report,
        bundle,
        traces,
    })
}

/// A vectorizer fitted once per n-gram setting, with every training and
/// evaluation document pre-encoded per block, so that many weightings can be
/// tried without refitting.
pub struct PreparedUnion {
    pub vectorizer: UnionVectorizer,
    train_blocks: Vec<Vec<SparseVector>>,
    eval_blocks: Vec<Vec<SparseVector>>,
}

impl PreparedUnion {
    pub fn new(vectorizer: UnionVectorizer, train: &[Record], eval: &[Record]) -> Self {
        use rayon::prelude::*;
        let encode = |records: &[Record]| -> Vec<Vec<SparseVector>> {
            records
                .par_iter()
                .map(|r| vectorizer.transform_blocks(&r.text))
                .collect()
        };
        let train_blocks = encode(train);
        let eval_blocks = encode(eval);
        Self {
            vectorizer,
            train_blocks,
            eval_blocks,
        }
    }

    /// Same result as [`run_experiment`] with this union reweighted.
    pub fn run(
        &self,
        weights: &[f64],
        config: &TrainConfig,
        train: &[Record],
        eval: &[Record],
    ) -> Result<EvalReport> {
        use crate::vectorizer::combine_blocks;
        let labels = LabelIndex::from_records(train);
        let y = encode_with(&labels, train)?;
        let x: Vec<SparseVector> = self
            .train_blocks
            .iter()
            .map(|b| combine_blocks(b, weights))
            .collect();
        let fitted = train_classifier(&FeatureRows::Sparse(x), &y, &labels, config)?;
        let pred = self
            .eval_blocks
            .iter()
            .map(|b| fitted.model.predict_id(&combine_blocks(b, weights)))
            .collect::<Result<Vec<_>>>()?;
        let gold = eval
            .iter()
            .map(|r| {
                r.intent
                    .as_deref()
                    .ok_or_else(|| Error::Unlabeled { id: r.id.clone() })
            })
            .collect::<Result<Vec<_>>>()?;
        evaluate(&gold, &pred, &labels)
    }
}
