//! Linear classifiers over sparse or dense feature rows.
//!
//! * [`train_linear_svc`]: one-vs-rest L2-regularized squared-hinge SVM,
//!   solved in the dual by coordinate descent, with an intercept learned as
//!   the weight of a constant 1.0 feature.
//! * [`train_logreg`]: L2-regularized logistic regression, multinomial
//!   (softmax) or one-vs-rest, minimized with L-BFGS.
//!
//! Both return a [`LinearModel`] holding one weight row and bias per class.

mod lbfgs;
mod logreg;
mod svc;

use serde::{Deserialize, Serialize};

use crate::corpus::LabelIndex;
use crate::error::{Error, Result};
use crate::sparse::FeatureRow;

pub use lbfgs::{minimize, LbfgsOptions};
pub use logreg::{binary_logistic_objective, multinomial_objective, train_logreg};
pub use svc::{solve_squared_hinge_dual, train_linear_svc, BinaryProblem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    LinearSvc,
    LogisticRegression,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassWeightMode {
    #[default]
    Uniform,
    Balanced,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MultiClass {
    /// Softmax over all classes (logistic regression only).
    #[default]
    Multinomial,
    OneVsRest,
}

fn default_c() -> f64 {
    1.0
}
fn default_tol() -> f64 {
    1e-4
}
fn default_max_epochs() -> usize {
    1000
}
fn default_seed() -> u64 {
    42
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub classifier: ClassifierKind,
    #[serde(default = "default_c")]
    pub c: f64,
    #[serde(default)]
    pub class_weight: ClassWeightMode,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_epochs")]
    pub max_epochs: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Ignored by the SVM, which is always one-vs-rest.
    #[serde(default)]
    pub multi_class: MultiClass,
}

impl TrainConfig {
    pub fn linear_svc(c: f64, class_weight: ClassWeightMode) -> Self {
        Self {
            classifier: ClassifierKind::LinearSvc,
            c,
            class_weight,
            tol: default_tol(),
            max_epochs: default_max_epochs(),
            seed: default_seed(),
            multi_class: MultiClass::OneVsRest,
        }
    }

    pub fn logistic_regression() -> Self {
        Self {
            classifier: ClassifierKind::LogisticRegression,
            c: 1.0,
            class_weight: ClassWeightMode::Uniform,
            tol: default_tol(),
            max_epochs: default_max_epochs(),
            seed: default_seed(),
            multi_class: MultiClass::Multinomial,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "C must be positive, got {}",
                self.c
            )));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        if self.max_epochs == 0 {
            return Err(Error::InvalidConfig("max_epochs must be at least 1".into()));
        }
        Ok(())
    }
}

/// Per-class multipliers of the penalty parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassWeights(pub Vec<f64>);

impl ClassWeights {
    pub fn uniform(n_classes: usize) -> Self {
        Self(vec![1.0; n_classes])
    }

    pub fn get(&self, class: usize) -> f64 {
        self.0[class]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// `balanced`: `n / (K * count[c])`; `uniform`: all ones.
pub fn compute_class_weights(
    class_counts: &[usize],
    mode: ClassWeightMode,
) -> Result<ClassWeights> {
    match mode {
        ClassWeightMode::Uniform => Ok(ClassWeights::uniform(class_counts.len())),
        ClassWeightMode::Balanced => {
            if let Some(class) = class_counts.iter().position(|&c| c == 0) {
                return Err(Error::EmptyClass { class });
            }
            let n: usize = class_counts.iter().sum();
            let k = class_counts.len() as f64;
            Ok(ClassWeights(
                class_counts
                    .iter()
                    .map(|&c| n as f64 / (k * c as f64))
                    .collect(),
            ))
        }
    }
}

pub fn class_counts(y: &[usize], n_classes: usize) -> Result<Vec<usize>> {
    let mut counts = vec![0; n_classes];
    for &c in y {
        *counts.get_mut(c).ok_or(Error::ClassOutOfRange {
            id: c,
            classes: n_classes,
        })? += 1;
    }
    Ok(counts)
}

/// Convergence record of one optimization run (one per binary subproblem for
/// one-vs-rest training).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverTrace {
    pub iterations: usize,
    pub converged: bool,
    /// Largest projected-gradient violation (SVM) or gradient infinity norm
    /// (logistic regression) at termination.
    pub final_violation: f64,
    /// Dual objective after every epoch (SVM, starting with the initial
    /// point) or primal objective after every iteration (logistic regression).
    pub objective: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Fitted {
    pub model: LinearModel,
    pub traces: Vec<SolverTrace>,
}

impl Fitted {
    pub fn converged(&self) -> bool {
        self.traces.iter().all(|t| t.converged)
    }
}

/// Per-class weight rows and biases.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    weights: Vec<f64>,
    bias: Vec<f64>,
    n_features: usize,
    labels: LabelIndex,
    config: TrainConfig,
}

impl LinearModel {
    /// `weights` is row-major, one row of `n_features` values per class.
    pub fn from_parts(
        weights: Vec<f64>,
        bias: Vec<f64>,
        n_features: usize,
        labels: LabelIndex,
        config: TrainConfig,
    ) -> Result<Self> {
        let k = labels.len();
        if bias.len() != k || weights.len() != k * n_features {
            return Err(Error::CorruptBundle(format!(
                "model shape mismatch: {} classes, {} biases, {} weights for {} features",
                k,
                bias.len(),
                weights.len(),
                n_features
            )));
        }
        Ok(Self {
            weights,
            bias,
            n_features,
            labels,
            config,
        })
    }

    pub fn zeros(n_features: usize, labels: LabelIndex, config: TrainConfig) -> Self {
        let k = labels.len();
        Self {
            weights: vec![0.0; k * n_features],
            bias: vec![0.0; k],
            n_features,
            labels,
            config,
        }
    }

    pub fn n_classes(&self) -> usize {
        self.bias.len()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn row(&self, class: usize) -> &[f64] {
        &self.weights[class * self.n_features..(class + 1) * self.n_features]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn bias_mut(&mut self) -> &mut [f64] {
        &mut self.bias
    }

    pub fn labels(&self) -> &LabelIndex {
        &self.labels
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn decision_function(&self, x: &impl FeatureRow) -> Result<Vec<f64>> {
        if x.dim() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                found: x.dim(),
            });
        }
        Ok((0..self.n_classes())
            .map(|c| x.dot(self.row(c)) + self.bias[c])
            .collect())
    }

    pub fn predict_id(&self, x: &impl FeatureRow) -> Result<usize> {
        Ok(argmax(&self.decision_function(x)?))
    }

    pub fn predict(&self, x: &impl FeatureRow) -> Result<&str> {
        let id = self.predict_id(x)?;
        Ok(self.labels.label(id).expect("class id within label index"))
    }

    /// Class probabilities; `None` for the SVM, which is not calibrated.
    pub fn predict_proba(&self, x: &impl FeatureRow) -> Result<Option<Vec<f64>>> {
        let scores = self.decision_function(x)?;
        Ok(match (self.config.classifier, self.config.multi_class) {
            (ClassifierKind::LinearSvc, _) => None,
            (ClassifierKind::LogisticRegression, MultiClass::Multinomial) => Some(softmax(&scores)),
            (ClassifierKind::LogisticRegression, MultiClass::OneVsRest) => {
                let p: Vec<f64> = scores.iter().map(|&s| sigmoid(s)).collect();
                let total: f64 = p.iter().sum();
                Some(p.into_iter().map(|v| v / total).collect())
            }
        })
    }
}

/// Index of the largest score; ties go to the lowest index.
pub fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn check_inputs<R: FeatureRow>(x: &[R], y: &[usize], n_classes: usize) -> Result<usize> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            rows: x.len(),
            labels: y.len(),
        });
    }
    let dim = x.first().map(|r| r.dim()).unwrap_or(0);
    for (i, row) in x.iter().enumerate() {
        if row.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: row.dim(),
            });
        }
        if !row.all_finite() {
            return Err(Error::NonFinite { row: i });
        }
    }
    let counts = class_counts(y, n_classes)?;
    let present = counts.iter().filter(|&&c| c > 0).count();
    if present < 2 {
        return Err(Error::TooFewClasses(present));
    }
    Ok(dim)
}

/// Stable 64-bit FNV-1a hash, used to derive per-class seeds from labels.
pub(crate) fn label_seed(seed: u64, label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    seed ^ h
}
