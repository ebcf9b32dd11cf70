use std::collections::VecDeque;

use super::SolverTrace;

#[derive(Debug, Clone, Copy)]
pub struct LbfgsOptions {
    /// Stop once the gradient infinity norm falls below this.
    pub tol: f64,
    pub max_iter: usize,
    pub memory: usize,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        Self {
            tol: 1e-4,
            max_iter: 1000,
            memory: 10,
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Limited-memory BFGS with Armijo backtracking.
///
/// `f` returns the objective and its gradient. The search is deterministic.
pub fn minimize(
    mut x: Vec<f64>,
    f: impl Fn(&[f64]) -> (f64, Vec<f64>),
    opts: &LbfgsOptions,
) -> (Vec<f64>, SolverTrace) {
    const ARMIJO: f64 = 1e-4;
    const MAX_BACKTRACK: usize = 60;

    let (mut fx, mut g) = f(&x);
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut objective = vec![fx];
    let mut iterations = 0;
    let mut gnorm = inf_norm(&g);

    while gnorm >= opts.tol && iterations < opts.max_iter && fx.is_finite() {
        // two-loop recursion
        let mut q = g.clone();
        let mut coefs = Vec::with_capacity(history.len());
        for (s, y, rho) in history.iter().rev() {
            let a = rho * dot(s, &q);
            for (qi, yi) in q.iter_mut().zip(y) {
                *qi -= a * yi;
            }
            coefs.push(a);
        }
        let gamma = match history.back() {
            Some((s, y, _)) => dot(s, y) / dot(y, y),
            None => 1.0 / dot(&g, &g).sqrt().max(1.0),
        };
        for qi in &mut q {
            *qi *= gamma;
        }
        for ((s, y, rho), a) in history.iter().zip(coefs.iter().rev()) {
            let b = rho * dot(y, &q);
            for (qi, si) in q.iter_mut().zip(s) {
                *qi += (a - b) * si;
            }
        }
        let mut dir: Vec<f64> = q.into_iter().map(|v| -v).collect();
        let mut slope = dot(&g, &dir);
        if slope >= 0.0 {
            // not a descent direction; fall back to steepest descent
            history.clear();
            let scale = 1.0 / dot(&g, &g).sqrt().max(1.0);
            dir = g.iter().map(|v| -v * scale).collect();
            slope = dot(&g, &dir);
        }

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACK {
            let trial: Vec<f64> = x.iter().zip(&dir).map(|(xi, di)| xi + step * di).collect();
            let (ft, gt) = f(&trial);
            if ft.is_finite() && ft <= fx + ARMIJO * step * slope {
                accepted = Some((trial, ft, gt));
                break;
            }
            step *= 0.5;
        }
        let Some((trial, ft, gt)) = accepted else {
            break;
        };

        let s: Vec<f64> = trial.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gt.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&y, &y).max(f64::MIN_POSITIVE) {
            if history.len() == opts.memory {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }
        x = trial;
        fx = ft;
        g = gt;
        gnorm = inf_norm(&g);
        objective.push(fx);
        iterations += 1;
    }

    let trace = SolverTrace {
        iterations,
        converged: gnorm < opts.tol,
        final_violation: gnorm,
        objective,
    };
    (x, trace)
}
