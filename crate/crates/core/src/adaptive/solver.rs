//! Solvers for the adaptive ridge problem.
//!
//! `Squared` minimizes `‖y − Aθ‖² + μ‖Fθ‖²` with `μ = λ` by a Cholesky solve.
//! `Faithful` minimizes `‖y − Aθ‖ + λ‖Fθ‖` by majorize-minimize: each step is
//! a squared-mode solve with `μ = λ‖r‖/‖Fθ‖` taken at the previous iterate.
//! The faithful solver whitens the regularizer and diagonalizes the normal
//! matrix once, so every `μ` along the path costs `O(p)`.

use std::fmt;
use std::str::FromStr;

use faer::Mat;
use serde::{Deserialize, Serialize};

use super::problem::AdaptiveFitProblem;
use crate::error::{Error, Result};
use crate::linalg::{cholesky_lower_jittered, forward_substitute, norm2, spd_solve_jittered, symmetric_eigen};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveMode {
    Faithful,
    Squared,
}

impl fmt::Display for SolveMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolveMode::Faithful => "faithful",
            SolveMode::Squared => "squared",
        })
    }
}

impl FromStr for SolveMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "faithful" => Ok(SolveMode::Faithful),
            "squared" => Ok(SolveMode::Squared),
            other => Err(Error::InvalidParameter(format!("unknown solve mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub max_iter: usize,
    /// Relative change in `μ` below which the iteration stops.
    pub tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { max_iter: 100, tol: 1e-9 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub theta: Vec<f64>,
    pub mode: SolveMode,
    pub lambda: f64,
    /// Weight of `‖Fθ‖²` in the last squared solve. Infinite when `θ = 0`.
    pub mu: f64,
    /// Objective of the chosen mode at `theta`.
    pub objective: f64,
    pub iterations: usize,
    /// Faithful objective after each iteration.
    pub history: Vec<f64>,
    /// Diagonal jitter added to make a factorization succeed.
    pub jitter: f64,
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!("lambda must be finite and >= 0, got {lambda}")));
    }
    Ok(())
}

/// Normal equations of the squared problem, reusable across `μ`.
pub struct SquaredSystem {
    m: usize,
    g: Mat<f64>,
    h: Mat<f64>,
    b: Vec<f64>,
}

impl SquaredSystem {
    pub fn new(problem: &AdaptiveFitProblem) -> Self {
        let a = problem.design_matrix();
        let g = a.transpose() * &a;
        let b = crate::linalg::mat_t_vec(&a, problem.targets());
        Self { m: problem.n_members(), g, h: problem.regularizer_gram(), b }
    }

    fn solve_block(&self, n: usize, mu: f64) -> Result<(Vec<f64>, f64)> {
        let lhs = Mat::from_fn(n, n, |i, j| self.g[(i, j)] + mu * self.h[(i, j)]);
        spd_solve_jittered(&lhs, &self.b[..n])
    }

    fn finish(&self, problem: &AdaptiveFitProblem, theta: Vec<f64>, mu: f64, jitter: f64) -> Solution {
        if jitter > 0.0 {
            log::warn!("squared solve needed diagonal jitter {jitter:e} at mu = {mu}");
        }
        let objective = problem.squared_objective(&theta, mu);
        Solution {
            theta,
            mode: SolveMode::Squared,
            lambda: mu,
            mu,
            objective,
            iterations: 1,
            history: Vec::new(),
            jitter,
        }
    }

    /// `(AᵀA + μFᵀF)θ = Aᵀy`.
    pub fn solve(&self, problem: &AdaptiveFitProblem, mu: f64) -> Result<Solution> {
        check_lambda(mu)?;
        let (theta, jitter) = self.solve_block(self.b.len(), mu)?;
        Ok(self.finish(problem, theta, mu, jitter))
    }

    /// Same problem with `V0` held at zero: `(XᵀX + μT·I)β0 = Xᵀy`.
    pub fn solve_static(&self, problem: &AdaptiveFitProblem, mu: f64) -> Result<Solution> {
        check_lambda(mu)?;
        let (beta0, jitter) = self.solve_block(self.m, mu)?;
        let mut theta = vec![0.0; self.b.len()];
        theta[..self.m].copy_from_slice(&beta0);
        Ok(self.finish(problem, theta, mu, jitter))
    }
}

/// Spectral form of the squared problem in whitened coordinates.
///
/// With `K = L Lᵀ` the per-member regularizer Gram, `φ' = Lᵀφ` turns
/// `‖Fθ‖` into `‖φ'‖`, and `M = A'ᵀA' = QΛQᵀ` makes the ridge path explicit:
/// `Qᵀφ'(μ) = c / (Λ + μ)` with `c = QᵀA'ᵀy`.
pub struct SpectralFactor {
    m: usize,
    q: usize,
    l_inv: Mat<f64>,
    lambda: Vec<f64>,
    vectors: Mat<f64>,
    c: Vec<f64>,
    positive: Vec<bool>,
    /// `‖y − A'φ'_LS‖²` for the minimum-norm least-squares fit.
    ls_residual2: f64,
    y_norm: f64,
    jitter: f64,
}

impl SpectralFactor {
    pub fn new(problem: &AdaptiveFitProblem) -> Result<Self> {
        let (m, rows) = (problem.n_members(), problem.rows());
        let q = 1 + problem.context_dim();
        let p = m * q;
        let (l, jitter) = cholesky_lower_jittered(&problem.context_gram())?;
        if jitter > 0.0 {
            log::debug!("context Gram needed jitter {jitter:e}");
        }
        let mut l_inv = Mat::zeros(q, q);
        for j in 0..q {
            let mut e = vec![0.0; q];
            e[j] = 1.0;
            forward_substitute(&l, &mut e);
            for i in 0..q {
                l_inv[(i, j)] = e[i];
            }
        }
        let w = Mat::from_fn(rows, q, |t, j| if j == 0 { 1.0 } else { problem.z_row(t)[j - 1] });
        let w_hat = &w * l_inv.transpose();
        let a = Mat::from_fn(rows, p, |t, k| problem.x_row(t)[k / q] * w_hat[(t, k % q)]);
        let y = crate::linalg::vec_to_col(problem.targets());
        let aty = a.transpose() * &y;
        let gram = a.transpose() * &a;
        let (lambda, vectors) = symmetric_eigen(&gram);
        let c_col = vectors.transpose() * &aty;
        let c: Vec<f64> = (0..p).map(|i| c_col[i]).collect();
        let top = lambda.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        let cutoff = top * p.max(rows) as f64 * f64::EPSILON;
        let positive: Vec<bool> = lambda.iter().map(|&v| v > cutoff).collect();

        let s_ls: Vec<f64> = (0..p).map(|i| if positive[i] { c[i] / lambda[i] } else { 0.0 }).collect();
        let fitted = &a * (&vectors * crate::linalg::vec_to_col(&s_ls));
        let ls_residual2 = (0..rows).map(|t| (y[t] - fitted[t]).powi(2)).sum();
        Ok(Self {
            m,
            q,
            l_inv,
            lambda,
            vectors,
            c,
            positive,
            ls_residual2,
            y_norm: norm2(problem.targets()),
            jitter,
        })
    }

    fn coords(&self, mu: f64) -> Vec<f64> {
        self.c
            .iter()
            .zip(&self.lambda)
            .zip(&self.positive)
            .map(|((c, l), &pos)| if pos { c / (l + mu) } else { 0.0 })
            .collect()
    }

    /// `(‖y − Aθ(μ)‖, ‖Fθ(μ)‖)` along the ridge path; `μ = 0` gives the
    /// minimum-norm least-squares fit.
    pub fn norms_at(&self, mu: f64) -> (f64, f64) {
        let mut r2 = self.ls_residual2;
        let mut f2 = 0.0;
        for i in 0..self.c.len() {
            if !self.positive[i] {
                continue;
            }
            let (c, l) = (self.c[i], self.lambda[i]);
            let s = c / (l + mu);
            f2 += s * s;
            let gap = c / l - s;
            r2 += l * gap * gap;
        }
        (r2.max(0.0).sqrt(), f2.sqrt())
    }

    /// `θ(μ)` mapped back to `[β0 | V0 row-major]`.
    pub fn theta_at(&self, mu: f64) -> Vec<f64> {
        let s = crate::linalg::vec_to_col(&self.coords(mu));
        let white = &self.vectors * s;
        let (m, q) = (self.m, self.q);
        let d = q - 1;
        let mut theta = vec![0.0; m + m * d];
        for i in 0..m {
            for a in 0..q {
                // φ_i = L⁻ᵀ φ'_i
                let v: f64 = (a..q).map(|b| self.l_inv[(b, a)] * white[i * q + b]).sum();
                if a == 0 {
                    theta[i] = v;
                } else {
                    theta[m + i * d + a - 1] = v;
                }
            }
        }
        theta
    }

    /// `‖A'ᵀy‖ ≤ λ‖y‖` means `θ = 0` is optimal for the faithful objective.
    pub fn zero_is_optimal(&self, lambda: f64) -> bool {
        norm2(&self.c) <= lambda * self.y_norm
    }

    pub fn solve_squared(&self, problem: &AdaptiveFitProblem, mu: f64) -> Result<Solution> {
        check_lambda(mu)?;
        let theta = self.theta_at(mu);
        Ok(Solution {
            objective: problem.squared_objective(&theta, mu),
            theta,
            mode: SolveMode::Squared,
            lambda: mu,
            mu,
            iterations: 1,
            history: Vec::new(),
            jitter: self.jitter,
        })
    }

    /// Minimizes `‖y − Aθ‖ + λ‖Fθ‖`.
    pub fn solve_faithful(&self, problem: &AdaptiveFitProblem, lambda: f64, opts: &SolverOptions) -> Result<Solution> {
        check_lambda(lambda)?;
        let done = |mu: f64, iterations: usize, history: Vec<f64>| {
            let theta = if mu.is_infinite() { vec![0.0; problem.n_params()] } else { self.theta_at(mu) };
            Solution {
                objective: problem.objective(&theta, lambda),
                theta,
                mode: SolveMode::Faithful,
                lambda,
                mu,
                iterations,
                history,
                jitter: self.jitter,
            }
        };
        if self.zero_is_optimal(lambda) {
            return Ok(done(f64::INFINITY, 0, vec![self.y_norm]));
        }
        let (r0, f0) = self.norms_at(0.0);
        let interp = r0 + lambda * f0;
        if lambda == 0.0 {
            return Ok(done(0.0, 0, vec![interp]));
        }
        let floor = 1e-14 * self.lambda.iter().fold(1.0f64, |acc, v| acc.max(*v));
        let path_obj = |mu: f64| {
            let (r, f) = self.norms_at(mu);
            r + lambda * f
        };
        let step_map = |mu: f64| {
            let (r, f) = self.norms_at(mu);
            lambda * r / f
        };
        let mut mu = lambda;
        let mut history = Vec::with_capacity(opts.max_iter);
        let mut last_step = f64::NAN;
        for iter in 1..=opts.max_iter {
            let (r, f) = self.norms_at(mu);
            let obj = r + lambda * f;
            history.push(obj);
            let g1 = lambda * r / f;
            if g1 <= floor {
                // The path heads for the interpolating end.
                if interp <= obj {
                    history.push(interp);
                    return Ok(done(0.0, iter, history));
                }
                mu = floor;
                continue;
            }
            last_step = (g1 - mu).abs() / mu;
            if last_step <= opts.tol {
                let o1 = path_obj(g1);
                if o1 <= obj {
                    history.push(o1);
                    return Ok(done(g1, iter, history));
                }
                return Ok(done(mu, iter, history));
            }
            // Aitken extrapolation of the scalar map, kept only when it
            // lowers the objective below the plain step.
            let mut best = (g1, path_obj(g1));
            let g2 = step_map(g1);
            let denom = g2 - 2.0 * g1 + mu;
            let mut candidates = vec![g2];
            if denom != 0.0 {
                candidates.push(mu - (g1 - mu).powi(2) / denom);
            }
            for c in candidates {
                if c.is_finite() && c > floor {
                    let o = path_obj(c);
                    if o < best.1 {
                        best = (c, o);
                    }
                }
            }
            mu = best.0;
        }
        Err(Error::NonConvergence {
            iterations: opts.max_iter,
            last_mu: mu,
            objective: history.last().copied().unwrap_or(f64::NAN),
            last_step,
        })
    }
}

/// One-shot solve. Reuse [`SquaredSystem`] or [`SpectralFactor`] when
/// sweeping several `λ`.
pub fn solve_adaptive_ridge(
    problem: &AdaptiveFitProblem,
    lambda: f64,
    mode: SolveMode,
    opts: &SolverOptions,
) -> Result<Solution> {
    match mode {
        SolveMode::Squared => SquaredSystem::new(problem).solve(problem, lambda),
        SolveMode::Faithful => SpectralFactor::new(problem)?.solve_faithful(problem, lambda, opts),
    }
}
