use rayon::prelude::*;

use super::lbfgs::{minimize, LbfgsOptions};
use super::{check_inputs, sigmoid, Fitted, LinearModel, MultiClass, TrainConfig};
use crate::corpus::LabelIndex;
use crate::error::{Error, Result};
use crate::sparse::FeatureRow;

/// Rows per parallel chunk; fixed so that reductions are order-stable.
const CHUNK: usize = 256;

fn add_into(acc: &mut (f64, Vec<f64>), part: (f64, Vec<f64>)) {
    acc.0 += part.0;
    for (a, b) in acc.1.iter_mut().zip(part.1) {
        *a += b;
    }
}

/// Softmax cross-entropy summed over samples plus `|W|^2 / (2C)`.
///
/// `params` holds the `k x dim` weight matrix row-major followed by `k`
/// biases; biases are not penalized. Returns the objective and its gradient.
pub fn multinomial_objective<R: FeatureRow>(
    params: &[f64],
    x: &[R],
    y: &[usize],
    k: usize,
    c: f64,
) -> (f64, Vec<f64>) {
    let dim = (params.len() - k) / k;
    let (w, b) = params.split_at(k * dim);
    let n_params = params.len();

    let parts: Vec<(f64, Vec<f64>)> = x
        .par_chunks(CHUNK)
        .zip(y.par_chunks(CHUNK))
        .map(|(rows, labels)| {
            let mut loss = 0.0;
            let mut grad = vec![0.0; n_params];
            let mut z = vec![0.0; k];
            for (row, &label) in rows.iter().zip(labels) {
                for (class, zc) in z.iter_mut().enumerate() {
                    *zc = row.dot(&w[class * dim..(class + 1) * dim]) + b[class];
                }
                let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let sum: f64 = z.iter().map(|v| (v - max).exp()).sum();
                let lse = max + sum.ln();
                loss += lse - z[label];
                for class in 0..k {
                    let p = (z[class] - lse).exp();
                    let residual = p - if class == label { 1.0 } else { 0.0 };
                    row.add_scaled_to(residual, &mut grad[class * dim..(class + 1) * dim]);
                    grad[k * dim + class] += residual;
                }
            }
            (loss, grad)
        })
        .collect();

    let mut total = (0.0, vec![0.0; n_params]);
    for part in parts {
        add_into(&mut total, part);
    }
    let (mut loss, mut grad) = total;
    loss += 0.5 / c * w.iter().map(|v| v * v).sum::<f64>();
    for (g, wi) in grad.iter_mut().zip(w) {
        *g += wi / c;
    }
    (loss, grad)
}

/// Binary logistic loss with labels `signs[i]` in {-1, +1}; `params` is the
/// weight vector followed by the bias.
pub fn binary_logistic_objective<R: FeatureRow>(
    params: &[f64],
    x: &[R],
    signs: &[f64],
    c: f64,
) -> (f64, Vec<f64>) {
    let dim = params.len() - 1;
    let (w, b) = (&params[..dim], params[dim]);
    let parts: Vec<(f64, Vec<f64>)> = x
        .par_chunks(CHUNK)
        .zip(signs.par_chunks(CHUNK))
        .map(|(rows, ss)| {
            let mut loss = 0.0;
            let mut grad = vec![0.0; dim + 1];
            for (row, &s) in rows.iter().zip(ss) {
                let margin = s * (row.dot(w) + b);
                // log(1 + exp(-m)), stable in both tails
                loss += if margin > 0.0 {
                    (-margin).exp().ln_1p()
                } else {
                    -margin + margin.exp().ln_1p()
                };
                let coef = -s * sigmoid(-margin);
                row.add_scaled_to(coef, &mut grad[..dim]);
                grad[dim] += coef;
            }
            (loss, grad)
        })
        .collect();

    let mut total = (0.0, vec![0.0; dim + 1]);
    for part in parts {
        add_into(&mut total, part);
    }
    let (mut loss, mut grad) = total;
    loss += 0.5 / c * w.iter().map(|v| v * v).sum::<f64>();
    for (g, wi) in grad.iter_mut().zip(w) {
        *g += wi / c;
    }
    (loss, grad)
}

/// L2-regularized logistic regression (penalty `1/(2C)` on weights only).
///
/// Training stops at gradient infinity norm `< tol` or after `max_epochs`
/// L-BFGS iterations; an unconverged result is still returned with its trace
/// flagged.
pub fn train_logreg<R: FeatureRow>(
    x: &[R],
    y: &[usize],
    labels: &LabelIndex,
    config: &TrainConfig,
) -> Result<Fitted> {
    config.validate()?;
    let k = labels.len();
    let dim = check_inputs(x, y, k)?;
    let opts = LbfgsOptions {
        tol: config.tol,
        max_iter: config.max_epochs,
        ..Default::default()
    };

    let (weights, bias, traces) = match config.multi_class {
        MultiClass::Multinomial => {
            let (params, trace) = minimize(
                vec![0.0; k * dim + k],
                |p| multinomial_objective(p, x, y, k, config.c),
                &opts,
            );
            let (w, b) = params.split_at(k * dim);
            (w.to_vec(), b.to_vec(), vec![trace])
        }
        MultiClass::OneVsRest => {
            let mut weights = Vec::with_capacity(k * dim);
            let mut bias = Vec::with_capacity(k);
            let mut traces = Vec::with_capacity(k);
            for class in 0..k {
                let signs: Vec<f64> = y
                    .iter()
                    .map(|&c| if c == class { 1.0 } else { -1.0 })
                    .collect();
                let (mut params, trace) = minimize(
                    vec![0.0; dim + 1],
                    |p| binary_logistic_objective(p, x, &signs, config.c),
                    &opts,
                );
                bias.push(params.pop().expect("bias entry"));
                weights.extend(params);
                traces.push(trace);
            }
            (weights, bias, traces)
        }
    };

    if weights.iter().chain(&bias).any(|v| !v.is_finite()) {
        return Err(Error::Diverged(
            "logistic regression produced non-finite weights".into(),
        ));
    }
    for t in traces.iter().filter(|t| !t.converged) {
        log::warn!(
            "logistic regression stopped after {} iterations with gradient norm {:.3e}",
            t.iterations,
            t.final_violation
        );
    }
    Ok(Fitted {
        model: LinearModel::from_parts(weights, bias, dim, labels.clone(), *config)?,
        traces,
    })
}
