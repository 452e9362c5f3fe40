//! Levenberg–Marquardt nonlinear least squares.
//!
//! Damped Gauss–Newton: each step solves
//! `(JᵀJ + λ·diag(JᵀJ)) δ = −Jᵀr` and the damping factor λ shrinks on
//! accepted steps and grows on rejected ones.

use super::linalg;
use super::FitError;

#[derive(Debug, Clone, Copy)]
pub struct LmOptions {
    pub max_iter: usize,
    pub lambda0: f64,
    pub lambda_up: f64,
    pub lambda_down: f64,
    pub tol: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        LmOptions { max_iter: 200, lambda0: 1e-3, lambda_up: 10.0, lambda_down: 0.1, tol: 1e-12 }
    }
}

#[derive(Debug, Clone)]
pub struct LmOutcome {
    pub params: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
}

// Consecutive rejected trial steps allowed before giving up on the current
// iterate (covers both singular normal matrices and non-finite residuals).
const MAX_DAMP_RETRIES: usize = 60;

/// Minimizes `Σ rᵢ(θ)²`. `residual(θ)` returns the residual vector and
/// `jacobian(θ)` its `m x n` row-major derivative matrix.
pub fn levenberg_marquardt<R, J>(
    residual: R,
    jacobian: J,
    init: &[f64],
    opts: &LmOptions,
) -> Result<LmOutcome, FitError>
where
    R: Fn(&[f64]) -> Vec<f64>,
    J: Fn(&[f64]) -> Vec<f64>,
{
    let n = init.len();
    let mut params = init.to_vec();
    if params.iter().any(|p| !p.is_finite()) {
        return Err(FitError::NonFiniteResidual);
    }

    let mut res = residual(&params);
    if !all_finite(&res) {
        return Err(FitError::NonFiniteResidual);
    }
    let m = res.len();
    let mut cost = dot(&res, &res);
    let mut lambda = opts.lambda0;

    for iteration in 1..=opts.max_iter {
        let jac = jacobian(&params);
        if jac.len() != m * n || !all_finite(&jac) {
            return Err(FitError::NonFiniteResidual);
        }

        // Normal equations pieces: JᵀJ and g = Jᵀr.
        let mut jtj = vec![0.0; n * n];
        let mut g = vec![0.0; n];
        for row in 0..m {
            for i in 0..n {
                let ji = jac[row * n + i];
                g[i] += ji * res[row];
                for j in i..n {
                    jtj[i * n + j] += ji * jac[row * n + j];
                }
            }
        }
        for i in 0..n {
            for j in 0..i {
                jtj[i * n + j] = jtj[j * n + i];
            }
        }

        let mut accepted = false;
        let mut last_failure = None;
        for _ in 0..MAX_DAMP_RETRIES {
            let mut damped = jtj.clone();
            for i in 0..n {
                // Floor keeps the damping effective when a column is flat.
                let diag = jtj[i * n + i];
                damped[i * n + i] = diag + lambda * diag.max(1e-12);
            }
            let mut rhs: Vec<f64> = g.iter().map(|v| -v).collect();
            let Some(step) = linalg::solve(n, &mut damped, &mut rhs) else {
                last_failure = Some(FitError::SingularNormalMatrix);
                lambda *= opts.lambda_up;
                continue;
            };

            let step_norm = dot(&step, &step).sqrt();
            if step_norm < opts.tol {
                return Ok(LmOutcome { params, converged: true, iterations: iteration });
            }

            let trial: Vec<f64> = params.iter().zip(&step).map(|(p, d)| p + d).collect();
            let trial_res = residual(&trial);
            if trial_res.len() != m || !all_finite(&trial_res) {
                last_failure = Some(FitError::NonFiniteResidual);
                lambda *= opts.lambda_up;
                continue;
            }
            let trial_cost = dot(&trial_res, &trial_res);
            if trial_cost <= cost {
                let improvement = cost - trial_cost;
                params = trial;
                res = trial_res;
                cost = trial_cost;
                lambda = (lambda * opts.lambda_down).max(1e-300);
                accepted = true;
                if improvement <= opts.tol * cost.max(opts.tol) {
                    return Ok(LmOutcome { params, converged: true, iterations: iteration });
                }
                break;
            }
            lambda *= opts.lambda_up;
        }

        if !accepted {
            return Err(last_failure.unwrap_or(FitError::SingularNormalMatrix));
        }
    }

    Ok(LmOutcome { params, converged: false, iterations: opts.max_iter })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn all_finite(values: &[f64]) -> bool {
    values.iter().all(|v| v.is_finite())
}
