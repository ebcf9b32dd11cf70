mod common;

use common::{numeric_gradient, oracle_softmax_loss, rel_err, rng};
use intent_core::corpus::LabelIndex;
use intent_core::linear_models::{
    class_counts, compute_class_weights, multinomial_objective, train_linear_svc, train_logreg,
    ClassWeightMode, ClassWeights, MultiClass, TrainConfig,
};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

/// Three Gaussian-ish blobs with some overlap.
fn blobs(seed: u64, n: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut r = rng(seed);
    let centers = [[2.0, 0.0, 1.0], [-1.0, 1.5, 0.0], [0.0, -2.0, -1.0]];
    let mut x = Vec::new();
    let mut y = Vec::new();
    for i in 0..n {
        let c = i % 3;
        x.push(
            centers[c]
                .iter()
                .map(|m| m + r.gen_range(-1.2..1.2))
                .collect(),
        );
        y.push(c);
    }
    (x, y)
}

fn labels() -> LabelIndex {
    LabelIndex::from_labels(["a", "b", "c"]).unwrap()
}

fn tight(c: f64) -> TrainConfig {
    TrainConfig {
        tol: 1e-10,
        max_epochs: 20_000,
        ..TrainConfig::linear_svc(c, ClassWeightMode::Uniform)
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

#[test]
fn svm_solution_does_not_depend_on_seed() {
    let (x, y) = blobs(1, 90);
    let mut a_cfg = tight(2.0);
    let mut b_cfg = tight(2.0);
    a_cfg.seed = 1;
    b_cfg.seed = 99;
    let w = ClassWeights::uniform(3);
    let a = train_linear_svc(&x, &y, &labels(), &a_cfg, &w).unwrap();
    let b = train_linear_svc(&x, &y, &labels(), &b_cfg, &w).unwrap();
    assert!(a.converged() && b.converged());
    assert!(max_abs_diff(a.model.weights(), b.model.weights()) < 1e-6);
    assert!(max_abs_diff(a.model.bias(), b.model.bias()) < 1e-6);
}

#[test]
fn duplicating_samples_matches_doubling_cost() {
    // sum_i C (xi_i)^2 over a doubled set equals sum_i 2C (xi_i)^2 over the original
    let (x, y) = blobs(2, 60);
    let x2: Vec<Vec<f64>> = x.iter().chain(&x).cloned().collect();
    let y2: Vec<usize> = y.iter().chain(&y).copied().collect();
    let w = ClassWeights::uniform(3);
    let doubled = train_linear_svc(&x2, &y2, &labels(), &tight(1.5), &w).unwrap();
    let single = train_linear_svc(&x, &y, &labels(), &tight(3.0), &w).unwrap();
    assert!(max_abs_diff(doubled.model.weights(), single.model.weights()) < 1e-6);
    assert!(max_abs_diff(doubled.model.bias(), single.model.bias()) < 1e-6);
}

#[test]
fn class_weight_equals_cost_scaling_for_one_class() {
    // weighting class c by 2 is the same as doubling C for its samples only
    let (x, y) = blobs(3, 60);
    let weights = ClassWeights(vec![2.0, 1.0, 1.0]);
    let weighted = train_linear_svc(&x, &y, &labels(), &tight(1.0), &weights).unwrap();
    let x_dup: Vec<Vec<f64>> = x
        .iter()
        .chain(x.iter().zip(&y).filter(|(_, &c)| c == 0).map(|(r, _)| r))
        .cloned()
        .collect();
    let y_dup: Vec<usize> = y
        .iter()
        .copied()
        .chain(y.iter().copied().filter(|&c| c == 0))
        .collect();
    let duplicated = train_linear_svc(
        &x_dup,
        &y_dup,
        &labels(),
        &tight(1.0),
        &ClassWeights::uniform(3),
    )
    .unwrap();
    assert!(max_abs_diff(weighted.model.weights(), duplicated.model.weights()) < 1e-6);
}

#[test]
fn renaming_classes_permutes_rows_exactly() {
    let (x, y) = blobs(4, 45);
    let w = ClassWeights::uniform(3);
    let a = train_linear_svc(&x, &y, &labels(), &tight(1.0), &w).unwrap();
    // same classes listed in another order: class ids change, labels do not
    let perm = [1usize, 2, 0];
    let relabelled = LabelIndex::from_labels(["c", "a", "b"]).unwrap();
    let y2: Vec<usize> = y.iter().map(|&c| perm[c]).collect();
    let b = train_linear_svc(&x, &y2, &relabelled, &tight(1.0), &w).unwrap();
    for (c, &p) in perm.iter().enumerate() {
        assert_eq!(a.model.row(c), b.model.row(p));
        assert_eq!(a.model.bias()[c], b.model.bias()[p]);
    }
}

#[test]
fn sample_order_does_not_change_the_optimum() {
    let (x, y) = blobs(5, 60);
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.shuffle(&mut rng(6));
    let xs: Vec<Vec<f64>> = order.iter().map(|&i| x[i].clone()).collect();
    let ys: Vec<usize> = order.iter().map(|&i| y[i]).collect();
    let w = ClassWeights::uniform(3);
    let a = train_linear_svc(&x, &y, &labels(), &tight(1.0), &w).unwrap();
    let b = train_linear_svc(&xs, &ys, &labels(), &tight(1.0), &w).unwrap();
    assert!(max_abs_diff(a.model.weights(), b.model.weights()) < 1e-6);
}

#[test]
fn logreg_probabilities_agree_with_decisions() {
    let (x, y) = blobs(7, 90);
    for multi_class in [MultiClass::Multinomial, MultiClass::OneVsRest] {
        let config = TrainConfig {
            multi_class,
            ..TrainConfig::logistic_regression()
        };
        let fitted = train_logreg(&x, &y, &labels(), &config).unwrap();
        assert!(fitted.converged());
        let mut correct = 0;
        for (row, &gold) in x.iter().zip(&y) {
            let p = fitted.model.predict_proba(row).unwrap().unwrap();
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            let best = p
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .unwrap()
                .0;
            assert_eq!(best, fitted.model.predict_id(row).unwrap());
            correct += usize::from(best == gold);
        }
        assert!(correct >= 80, "{multi_class:?}: {correct}/90");
    }
}

#[test]
fn logreg_reaches_a_stationary_point() {
    let (x, y) = blobs(8, 60);
    let config = TrainConfig {
        tol: 1e-8,
        ..TrainConfig::logistic_regression()
    };
    let fitted = train_logreg(&x, &y, &labels(), &config).unwrap();
    let k = 3;
    let mut params: Vec<f64> = fitted.model.weights().to_vec();
    params.extend_from_slice(fitted.model.bias());
    let (_, grad) = multinomial_objective(&params, &x, &y, k, config.c);
    assert!(grad.iter().all(|g| g.abs() < 1e-6), "{grad:?}");
}

proptest! {
    #[test]
    fn softmax_gradient_matches_finite_differences(seed in any::<u64>(), c in 0.05f64..20.0) {
        let mut r = rng(seed);
        let (x, y) = blobs(seed, 9);
        let p: Vec<f64> = (0..12).map(|_| r.gen_range(-1.5..1.5)).collect();
        let (value, grad) = multinomial_objective(&p, &x, &y, 3, c);
        prop_assert!((value - oracle_softmax_loss(&p, &x, &y, 3, c)).abs() <= 1e-10 * value.abs().max(1.0));
        let fd = numeric_gradient(|q| oracle_softmax_loss(q, &x, &y, 3, c), &p, 1e-5);
        prop_assert!(rel_err(&grad, &fd) <= 1e-4);
    }

    #[test]
    fn balanced_weights_sum_to_n(counts in proptest::collection::vec(1usize..1000, 1..80)) {
        let w = compute_class_weights(&counts, ClassWeightMode::Balanced).unwrap();
        let n: usize = counts.iter().sum();
        let total: f64 = counts.iter().enumerate().map(|(c, &m)| w.get(c) * m as f64).sum();
        prop_assert!((total - n as f64).abs() <= 1e-9 * n as f64);
    }

    #[test]
    fn class_counts_add_up(y in proptest::collection::vec(0usize..6, 0..100)) {
        let counts = class_counts(&y, 6).unwrap();
        prop_assert_eq!(counts.iter().sum::<usize>(), y.len());
    }
}

#[test]
fn balanced_weights_reject_empty_classes() {
    assert!(compute_class_weights(&[3, 0, 2], ClassWeightMode::Balanced).is_err());
    assert!(class_counts(&[0, 4], 3).is_err());
}
