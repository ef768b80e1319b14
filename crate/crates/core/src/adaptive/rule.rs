//! A fitted adaptive combination rule.

use serde::{Deserialize, Serialize};

use super::context::fill_context;
use super::problem::AdaptiveFitProblem;
use super::solver::{SolveMode, Solution, SolverOptions, SpectralFactor, SquaredSystem};
use crate::error::{Error, Result};
use crate::panel::{ForecastPanel, Standardizer, TargetView};

pub const FORMAT_VERSION: u32 = 1;

/// `β_t = β0 + V0 Z_t`, fitted on standardized data. Inputs to
/// [`AdaptiveRule::predict`] and outputs are on the original scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveRule {
    pub format_version: u32,
    pub members: Vec<String>,
    pub tau: usize,
    pub lead_time: usize,
    pub lambda: f64,
    pub mode: SolveMode,
    pub beta0: Vec<f64>,
    /// `m` rows of length `m·τ`.
    pub v0: Vec<Vec<f64>>,
    pub standardizer: Standardizer,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveConfig {
    pub tau: usize,
    pub lambda: f64,
    pub mode: SolveMode,
    pub solver: SolverOptions,
    pub allow_overparameterized: bool,
}

impl Default for AdaptiveConfig {
    fn default() -> Self {
        Self {
            tau: 1,
            lambda: 0.1,
            mode: SolveMode::Faithful,
            solver: SolverOptions::default(),
            allow_overparameterized: false,
        }
    }
}

impl AdaptiveRule {
    pub fn from_theta(
        theta: &[f64],
        members: Vec<String>,
        tau: usize,
        lead_time: usize,
        lambda: f64,
        mode: SolveMode,
        standardizer: Standardizer,
    ) -> Result<Self> {
        let m = members.len();
        let d = m * tau;
        if theta.len() != m + m * d {
            return Err(Error::DimensionMismatch { what: "parameter vector", expected: m + m * d, found: theta.len() });
        }
        Ok(Self {
            format_version: FORMAT_VERSION,
            members,
            tau,
            lead_time,
            lambda,
            mode,
            beta0: theta[..m].to_vec(),
            v0: (0..m).map(|i| theta[m + i * d..m + (i + 1) * d].to_vec()).collect(),
            standardizer,
        })
    }

    pub fn from_solution(
        solution: &Solution,
        panel: &ForecastPanel,
        tau: usize,
        standardizer: Standardizer,
    ) -> Result<Self> {
        Self::from_theta(
            &solution.theta,
            panel.member_names().to_vec(),
            tau,
            panel.lead_time(),
            solution.lambda,
            solution.mode,
            standardizer,
        )
    }

    pub fn n_members(&self) -> usize {
        self.members.len()
    }

    pub fn context_dim(&self) -> usize {
        self.n_members() * self.tau
    }

    pub fn theta(&self) -> Vec<f64> {
        let mut t = self.beta0.clone();
        for row in &self.v0 {
            t.extend_from_slice(row);
        }
        t
    }

    /// `β_t` for a context on the standardized scale.
    pub fn coefficients(&self, z_std: &[f64]) -> Vec<f64> {
        self.beta0
            .iter()
            .zip(&self.v0)
            .map(|(b, row)| b + row.iter().zip(z_std).map(|(v, z)| v * z).sum::<f64>())
            .collect()
    }

    fn check_dims(&self, x: &[f64], z: &[f64]) -> Result<()> {
        if x.len() != self.n_members() {
            return Err(Error::DimensionMismatch { what: "member forecasts", expected: self.n_members(), found: x.len() });
        }
        if z.len() != self.context_dim() {
            return Err(Error::DimensionMismatch { what: "error context", expected: self.context_dim(), found: z.len() });
        }
        Ok(())
    }

    /// Combined forecast on the original scale from original-scale member
    /// forecasts and errors.
    pub fn predict(&self, x: &[f64], z: &[f64]) -> Result<f64> {
        self.check_dims(x, z)?;
        let s = &self.standardizer;
        let z_std: Vec<f64> = z.iter().map(|&v| s.apply_difference(v)).collect();
        let beta = self.coefficients(&z_std);
        let combined: f64 = x.iter().zip(&beta).map(|(&xi, b)| s.apply_value(xi) * b).sum();
        Ok(s.invert_value(combined))
    }

    fn check_panel(&self, panel: &ForecastPanel) -> Result<()> {
        if panel.n_members() != self.n_members() {
            return Err(Error::DimensionMismatch {
                what: "panel members",
                expected: self.n_members(),
                found: panel.n_members(),
            });
        }
        if panel.lead_time() != self.lead_time {
            return Err(Error::InvalidParameter(format!(
                "rule fitted with lead time {} applied to panel with lead time {}",
                self.lead_time,
                panel.lead_time()
            )));
        }
        Ok(())
    }

    /// Forecasts for `rows`, with contexts built from targets read through
    /// `targets` (only rows at least one lead time back are touched).
    pub fn predict_rows(
        &self,
        panel: &ForecastPanel,
        targets: &dyn TargetView,
        rows: std::ops::Range<usize>,
    ) -> Result<Vec<f64>> {
        self.check_panel(panel)?;
        let mut z = vec![0.0; self.context_dim()];
        rows.map(|t| {
            targets.begin_prediction(t);
            fill_context(panel, targets, t, self.tau, self.lead_time, &mut z);
            self.predict(panel.row(t), &z)
        })
        .collect()
    }

    /// `β_t` at every row of `panel`.
    pub fn weights_trace(&self, panel: &ForecastPanel) -> Result<Vec<Vec<f64>>> {
        self.check_panel(panel)?;
        let mut z = vec![0.0; self.context_dim()];
        Ok((0..panel.len())
            .map(|t| {
                fill_context(panel, panel, t, self.tau, self.lead_time, &mut z);
                let z_std: Vec<f64> = z.iter().map(|&v| self.standardizer.apply_difference(v)).collect();
                self.coefficients(&z_std)
            })
            .collect())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let rule: Self = serde_json::from_str(s)?;
        if rule.format_version != FORMAT_VERSION {
            return Err(Error::Unsupported(format!("rule format version {}", rule.format_version)));
        }
        let d = rule.context_dim();
        if rule.beta0.len() != rule.n_members() || rule.v0.len() != rule.n_members() {
            return Err(Error::DimensionMismatch { what: "beta0/v0 rows", expected: rule.n_members(), found: rule.beta0.len() });
        }
        if let Some(bad) = rule.v0.iter().find(|r| r.len() != d) {
            return Err(Error::DimensionMismatch { what: "v0 row", expected: d, found: bad.len() });
        }
        Ok(rule)
    }
}

/// Standardizes `train`, fits, and returns the rule with its solver report.
pub fn fit_adaptive(train: &ForecastPanel, cfg: &AdaptiveConfig) -> Result<(AdaptiveRule, Solution)> {
    let standardizer = Standardizer::fit(train)?;
    let std_panel = standardizer.apply(train);
    let problem = AdaptiveFitProblem::assemble(&std_panel, cfg.tau, cfg.allow_overparameterized)?;
    let solution = match cfg.mode {
        SolveMode::Squared => SquaredSystem::new(&problem).solve(&problem, cfg.lambda)?,
        SolveMode::Faithful => SpectralFactor::new(&problem)?.solve_faithful(&problem, cfg.lambda, &cfg.solver)?,
    };
    let rule = AdaptiveRule::from_solution(&solution, train, cfg.tau, standardizer)?;
    Ok((rule, solution))
}
