//! The regression behind the adaptive rule, flattened over parameters
//! `θ = [β0 | vec(V0)]` with `V0` stored row-major (`m × mτ`).

use faer::Mat;

use super::context::context_matrix;
use crate::error::{Error, Result};
use crate::linalg::norm2;
use crate::panel::ForecastPanel;

#[derive(Debug, Clone)]
pub struct AdaptiveFitProblem {
    m: usize,
    tau: usize,
    rows: usize,
    x: Vec<f64>,
    z: Vec<f64>,
    y: Vec<f64>,
}

pub fn n_params(m: usize, tau: usize) -> usize {
    m + m * m * tau
}

impl AdaptiveFitProblem {
    /// Builds the problem from a (standardized) training panel. Unless
    /// `allow_overparameterized` is set, requires at least as many rows as
    /// parameters.
    pub fn assemble(train: &ForecastPanel, tau: usize, allow_overparameterized: bool) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::EmptySplit("train"));
        }
        let z = context_matrix(train, tau, train.lead_time())?;
        let problem = Self::from_parts(
            train.forecasts().to_vec(),
            z,
            train.targets().to_vec(),
            train.n_members(),
            tau,
        )?;
        problem.check_guard(allow_overparameterized)?;
        Ok(problem)
    }

    /// `x` is `T × m`, `z` is `T × mτ`, both row-major.
    pub fn from_parts(x: Vec<f64>, z: Vec<f64>, y: Vec<f64>, m: usize, tau: usize) -> Result<Self> {
        if m == 0 || tau == 0 {
            return Err(Error::InvalidParameter("need at least one member and tau >= 1".into()));
        }
        let rows = y.len();
        if x.len() != rows * m {
            return Err(Error::DimensionMismatch { what: "forecast matrix", expected: rows * m, found: x.len() });
        }
        if z.len() != rows * m * tau {
            return Err(Error::DimensionMismatch {
                what: "context matrix",
                expected: rows * m * tau,
                found: z.len(),
            });
        }
        Ok(Self { m, tau, rows, x, z, y })
    }

    pub fn check_guard(&self, allow_overparameterized: bool) -> Result<()> {
        let params = self.n_params();
        if !allow_overparameterized && self.rows < params {
            return Err(Error::ParameterGuard { params, rows: self.rows, tau: self.tau });
        }
        if self.rows < params {
            log::warn!("{} parameters fitted on {} rows (tau = {})", params, self.rows, self.tau);
        }
        Ok(())
    }

    pub fn n_members(&self) -> usize {
        self.m
    }

    pub fn tau(&self) -> usize {
        self.tau
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn n_params(&self) -> usize {
        n_params(self.m, self.tau)
    }

    pub fn context_dim(&self) -> usize {
        self.m * self.tau
    }

    pub fn x_row(&self, t: usize) -> &[f64] {
        &self.x[t * self.m..(t + 1) * self.m]
    }

    pub fn z_row(&self, t: usize) -> &[f64] {
        let d = self.context_dim();
        &self.z[t * d..(t + 1) * d]
    }

    pub fn targets(&self) -> &[f64] {
        &self.y
    }

    /// Index of `V0[i][j]` inside `θ`.
    pub fn v0_index(&self, i: usize, j: usize) -> usize {
        self.m + i * self.context_dim() + j
    }

    /// Row `t` of the design matrix: `[X_t | X_t ⊗ Z_t]`.
    pub fn design_row(&self, t: usize) -> Vec<f64> {
        let (x, z) = (self.x_row(t), self.z_row(t));
        let mut row = Vec::with_capacity(self.n_params());
        row.extend_from_slice(x);
        for &xi in x {
            row.extend(z.iter().map(|zj| xi * zj));
        }
        row
    }

    pub fn design_matrix(&self) -> Mat<f64> {
        let p = self.n_params();
        let mut a = Mat::zeros(self.rows, p);
        for t in 0..self.rows {
            for (j, v) in self.design_row(t).into_iter().enumerate() {
                a[(t, j)] = v;
            }
        }
        a
    }

    /// `β_t = β0 + V0 Z_t` for row `t`.
    pub fn coefficients(&self, theta: &[f64], t: usize) -> Vec<f64> {
        coefficients(theta, self.m, self.z_row(t))
    }

    /// `Aθ`, the in-sample combined forecasts.
    pub fn apply_design(&self, theta: &[f64]) -> Vec<f64> {
        assert_eq!(theta.len(), self.n_params());
        (0..self.rows)
            .map(|t| self.x_row(t).iter().zip(self.coefficients(theta, t)).map(|(x, b)| x * b).sum())
            .collect()
    }

    /// `Fθ`: the stacked `β_t`, row after row.
    pub fn apply_regularizer(&self, theta: &[f64]) -> Vec<f64> {
        assert_eq!(theta.len(), self.n_params());
        (0..self.rows).flat_map(|t| self.coefficients(theta, t)).collect()
    }

    /// Explicit `F` (`T·m × p`); only sensible for small problems.
    pub fn regularizer_matrix(&self) -> Mat<f64> {
        let (m, d) = (self.m, self.context_dim());
        let mut f = Mat::zeros(self.rows * m, self.n_params());
        for t in 0..self.rows {
            let z = self.z_row(t);
            for i in 0..m {
                f[(t * m + i, i)] = 1.0;
                for j in 0..d {
                    f[(t * m + i, self.v0_index(i, j))] = z[j];
                }
            }
        }
        f
    }

    /// `K = Σ_t w_t w_tᵀ` with `w_t = [1; Z_t]`. `FᵀF` is block diagonal
    /// with one copy of `K` per member.
    pub fn context_gram(&self) -> Mat<f64> {
        let q = 1 + self.context_dim();
        let w = Mat::from_fn(self.rows, q, |t, j| if j == 0 { 1.0 } else { self.z_row(t)[j - 1] });
        w.transpose() * &w
    }

    /// `FᵀF` in `θ` ordering.
    pub fn regularizer_gram(&self) -> Mat<f64> {
        let (m, d) = (self.m, self.context_dim());
        let k = self.context_gram();
        let idx = |i: usize, a: usize| if a == 0 { i } else { m + i * d + a - 1 };
        let mut h = Mat::zeros(self.n_params(), self.n_params());
        for i in 0..m {
            for a in 0..=d {
                for b in 0..=d {
                    h[(idx(i, a), idx(i, b))] = k[(a, b)];
                }
            }
        }
        h
    }

    pub fn residual(&self, theta: &[f64]) -> Vec<f64> {
        self.apply_design(theta).iter().zip(&self.y).map(|(f, y)| y - f).collect()
    }

    /// `‖y − Aθ‖₂ + λ‖Fθ‖₂`.
    pub fn objective(&self, theta: &[f64], lambda: f64) -> f64 {
        norm2(&self.residual(theta)) + lambda * norm2(&self.apply_regularizer(theta))
    }

    /// `‖y − Aθ‖₂² + μ‖Fθ‖₂²`.
    pub fn squared_objective(&self, theta: &[f64], mu: f64) -> f64 {
        let r = norm2(&self.residual(theta));
        let f = norm2(&self.apply_regularizer(theta));
        r * r + mu * f * f
    }
}

/// `β0 + V0 z` for `θ = [β0 | V0 row-major]`.
pub fn coefficients(theta: &[f64], m: usize, z: &[f64]) -> Vec<f64> {
    let d = z.len();
    debug_assert_eq!(theta.len(), m + m * d);
    (0..m)
        .map(|i| {
            let row = &theta[m + i * d..m + (i + 1) * d];
            theta[i] + row.iter().zip(z).map(|(v, z)| v * z).sum::<f64>()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{mat_vec, norm2};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_problem(rows: usize, m: usize, tau: usize, seed: u64) -> AdaptiveFitProblem {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let fc: Vec<Vec<f64>> = (0..rows).map(|_| (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let y: Vec<f64> = (0..rows).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let p = ForecastPanel::from_rows(&fc, y, 1).unwrap();
        AdaptiveFitProblem::assemble(&p, tau, true).unwrap()
    }

    #[test]
    fn operators_agree_with_explicit_matrices() {
        let prob = random_problem(9, 3, 2, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let theta: Vec<f64> = (0..prob.n_params()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let a = mat_vec(&prob.design_matrix(), &theta);
        for (u, v) in a.iter().zip(prob.apply_design(&theta)) {
            assert!((u - v).abs() < 1e-12);
        }
        let f = mat_vec(&prob.regularizer_matrix(), &theta);
        for (u, v) in f.iter().zip(prob.apply_regularizer(&theta)) {
            assert!((u - v).abs() < 1e-12);
        }
        let fm = prob.regularizer_matrix();
        let h = fm.transpose() * &fm;
        let hk = prob.regularizer_gram();
        for i in 0..h.nrows() {
            for j in 0..h.ncols() {
                assert!((h[(i, j)] - hk[(i, j)]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_v0_is_static_combination() {
        let prob = random_problem(6, 2, 3, 1);
        let mut theta = vec![0.0; prob.n_params()];
        theta[0] = 0.3;
        theta[1] = 0.7;
        for t in 0..prob.rows() {
            let x = prob.x_row(t);
            let expect = 0.3 * x[0] + 0.7 * x[1];
            assert!((prob.apply_design(&theta)[t] - expect).abs() < 1e-15);
        }
        let f = norm2(&prob.apply_regularizer(&theta));
        let expect = (prob.rows() as f64 * (0.09 + 0.49)).sqrt();
        assert!((f - expect).abs() < 1e-12);
    }

    #[test]
    fn guard_rejects_small_samples() {
        let fc = vec![vec![1.0, 2.0]; 5];
        let p = ForecastPanel::from_rows(&fc, vec![0.0; 5], 1).unwrap();
        // 2 + 4·1 = 6 parameters on 5 rows
        let err = AdaptiveFitProblem::assemble(&p, 1, false).unwrap_err();
        assert!(matches!(err, Error::ParameterGuard { params: 6, rows: 5, tau: 1 }));
        assert!(AdaptiveFitProblem::assemble(&p, 1, true).is_ok());
    }

    #[test]
    fn v0_index_layout() {
        let prob = random_problem(4, 2, 2, 0);
        assert_eq!(prob.n_params(), 2 + 2 * 4);
        assert_eq!(prob.v0_index(0, 0), 2);
        assert_eq!(prob.v0_index(1, 0), 6);
        assert_eq!(prob.v0_index(1, 3), 9);
    }
}
