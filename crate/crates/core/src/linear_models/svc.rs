use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{
    check_inputs, label_seed, ClassWeights, Fitted, LinearModel, SolverTrace, TrainConfig,
};
use crate::corpus::LabelIndex;
use crate::error::{Error, Result};
use crate::sparse::FeatureRow;

/// One binary squared-hinge problem: `signs[i]` is +1 or -1, `costs[i]` the
/// per-sample penalty `C_i`.
pub struct BinaryProblem<'a, R> {
    pub rows: &'a [R],
    pub signs: &'a [f64],
    pub costs: &'a [f64],
    pub dim: usize,
}

/// Dual coordinate descent for
/// `min_w 1/2 |w|^2 + sum_i C_i max(0, 1 - s_i (w.x_i + b))^2`,
/// with `b` folded in as the weight of a constant 1.0 feature.
///
/// Returns the weight vector with the bias as its last entry.
pub fn solve_squared_hinge_dual<R: FeatureRow>(
    problem: &BinaryProblem<'_, R>,
    tol: f64,
    max_epochs: usize,
    seed: u64,
) -> Result<(Vec<f64>, SolverTrace)> {
    let n = problem.rows.len();
    let d = problem.dim;
    let mut w = vec![0.0; d + 1];
    let mut alpha = vec![0.0; n];
    let diag: Vec<f64> = problem.costs.iter().map(|c| 0.5 / c).collect();
    let qd: Vec<f64> = problem
        .rows
        .iter()
        .zip(&diag)
        .map(|(x, dii)| x.squared_norm() + 1.0 + dii)
        .collect();

    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut objective = vec![0.0];
    let mut violation = f64::INFINITY;
    let mut epochs = 0;
    let mut converged = false;

    while epochs < max_epochs {
        order.shuffle(&mut rng);
        violation = 0.0;
        for &i in &order {
            let x = &problem.rows[i];
            let s = problem.signs[i];
            let g = s * (x.dot(&w[..d]) + w[d]) - 1.0 + diag[i] * alpha[i];
            let pg = if alpha[i] == 0.0 { g.min(0.0) } else { g };
            violation = violation.max(pg.abs());
            if pg.abs() > 1e-12 {
                let updated = (alpha[i] - g / qd[i]).max(0.0);
                let step = (updated - alpha[i]) * s;
                x.add_scaled_to(step, &mut w[..d]);
                w[d] += step;
                alpha[i] = updated;
            }
        }
        epochs += 1;

        let dual = alpha.iter().sum::<f64>()
            - 0.5 * w.iter().map(|v| v * v).sum::<f64>()
            - 0.5
                * alpha
                    .iter()
                    .zip(&diag)
                    .map(|(a, dii)| dii * a * a)
                    .sum::<f64>();
        if !dual.is_finite() {
            return Err(Error::Diverged(format!(
                "dual objective became {dual} at epoch {epochs}"
            )));
        }
        objective.push(dual);

        if violation < tol {
            converged = true;
            break;
        }
    }

    Ok((
        w,
        SolverTrace {
            iterations: epochs,
            converged,
            final_violation: violation,
            objective,
        },
    ))
}

/// One-vs-rest squared-hinge SVM. Sample `i` carries cost `C * weights[y_i]`
/// in every subproblem.
pub fn train_linear_svc<R: FeatureRow>(
    x: &[R],
    y: &[usize],
    labels: &LabelIndex,
    config: &TrainConfig,
    weights: &ClassWeights,
) -> Result<Fitted> {
    config.validate()?;
    let k = labels.len();
    let dim = check_inputs(x, y, k)?;
    if weights.len() != k {
        return Err(Error::InvalidConfig(format!(
            "{} class weights for {k} classes",
            weights.len()
        )));
    }
    let costs: Vec<f64> = y.iter().map(|&c| config.c * weights.get(c)).collect();

    let solved = (0..k)
        .into_par_iter()
        .map(|class| {
            let signs: Vec<f64> = y
                .iter()
                .map(|&c| if c == class { 1.0 } else { -1.0 })
                .collect();
            let problem = BinaryProblem {
                rows: x,
                signs: &signs,
                costs: &costs,
                dim,
            };
            let label = labels.label(class).unwrap_or_default();
            solve_squared_hinge_dual(
                &problem,
                config.tol,
                config.max_epochs,
                label_seed(config.seed, label),
            )
        })
        .collect::<Result<Vec<_>>>()?;

    let mut model_weights = Vec::with_capacity(k * dim);
    let mut bias = Vec::with_capacity(k);
    let mut traces = Vec::with_capacity(k);
    for (class, (mut w, trace)) in solved.into_iter().enumerate() {
        if !trace.converged {
            log::warn!(
                "linear SVC subproblem for `{}` stopped after {} epochs (violation {:.3e})",
                labels.label(class).unwrap_or_default(),
                trace.iterations,
                trace.final_violation
            );
        }
        bias.push(w.pop().expect("bias entry"));
        model_weights.extend(w);
        traces.push(trace);
    }
    Ok(Fitted {
        model: LinearModel::from_parts(model_weights, bias, dim, labels.clone(), *config)?,
        traces,
    })
}
