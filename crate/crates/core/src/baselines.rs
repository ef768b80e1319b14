//! Comparison ensemblers: best member in hindsight, ensemble mean, Exp3,
//! passive-aggressive, and static ridge.

use std::ops::Range;

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, spd_solve};
use crate::metrics::{mape, MetricsReport};
use crate::panel::{ForecastPanel, TargetView};

/// Member with the lowest MAPE on `panel`, lowest index on ties, and its
/// full report.
pub fn best_in_hindsight(panel: &ForecastPanel) -> Result<(usize, MetricsReport)> {
    if panel.is_empty() {
        return Err(Error::EmptySplit("test"));
    }
    let mut best: Option<(usize, f64)> = None;
    for k in 0..panel.n_members() {
        let score = mape(panel.targets(), &panel.member(k))?;
        if best.map_or(true, |(_, b)| score < b) {
            best = Some((k, score));
        }
    }
    let (k, _) = best.ok_or_else(|| Error::InvalidParameter("panel has no members".into()))?;
    let report = MetricsReport::compute(panel.targets(), &panel.member(k))?;
    Ok((k, report))
}

pub fn ensemble_mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// `exp(−η·R_i) / Σ_j exp(−η·R_j)`, shifted by the smallest regret for
/// stability.
pub fn softmax_weights(regrets: &[f64], eta: f64) -> Vec<f64> {
    let lo = regrets.iter().copied().fold(f64::INFINITY, f64::min);
    let raw: Vec<f64> = regrets.iter().map(|r| (-eta * (r - lo)).exp()).collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|v| v / total).collect()
}

pub fn exp3_eta(m: usize, window: usize) -> f64 {
    (8.0 * (m as f64).ln() / window as f64).sqrt()
}

/// Windowed softmax weighting over squared-error regrets.
#[derive(Debug, Clone, PartialEq)]
pub struct Exp3 {
    pub window: usize,
    weights: Vec<f64>,
}

impl Exp3 {
    pub fn new(m: usize, window: usize) -> Result<Self> {
        if window == 0 || m == 0 {
            return Err(Error::InvalidParameter("Exp3 needs a window >= 1 and at least one member".into()));
        }
        Ok(Self { window, weights: vec![1.0 / m as f64; m] })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Recomputes the weights from the revealed rows `s ∈ revealed`.
    /// An empty window keeps the current weights.
    pub fn refresh(&mut self, panel: &ForecastPanel, targets: &dyn TargetView, revealed: Range<usize>) {
        if revealed.is_empty() {
            return;
        }
        let lo = revealed.end.saturating_sub(self.window).max(revealed.start);
        let m = self.weights.len();
        let mut regrets = vec![0.0; m];
        for s in lo..revealed.end {
            let y = targets.target(s);
            for (r, x) in regrets.iter_mut().zip(panel.row(s)) {
                *r += (x - y).powi(2);
            }
        }
        self.weights = softmax_weights(&regrets, exp3_eta(m, self.window));
    }
}

/// Passive-aggressive regression with margin `ε`, starting from uniform
/// weights.
#[derive(Debug, Clone, PartialEq)]
pub struct PassiveAggressive {
    pub epsilon: f64,
    weights: Vec<f64>,
}

impl PassiveAggressive {
    pub fn new(m: usize, epsilon: f64) -> Result<Self> {
        if !(epsilon >= 0.0) || m == 0 {
            return Err(Error::InvalidParameter(format!("PA margin must be >= 0, got {epsilon}")));
        }
        Ok(Self { epsilon, weights: vec![1.0 / m as f64; m] })
    }

    pub fn with_weights(weights: Vec<f64>, epsilon: f64) -> Self {
        Self { epsilon, weights }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        dot(x, &self.weights)
    }

    /// One update on a revealed `(x, y)`. Returns whether the weights moved.
    pub fn update(&mut self, x: &[f64], y: f64) -> bool {
        let residual = y - self.predict(x);
        let excess = residual.abs() - self.epsilon;
        if excess <= 0.0 {
            return false;
        }
        let nx = dot(x, x);
        if nx == 0.0 {
            log::warn!("passive-aggressive update skipped: all member forecasts are zero");
            return false;
        }
        let step = residual.signum() * excess / nx;
        for (w, xi) in self.weights.iter_mut().zip(x) {
            *w += step * xi;
        }
        true
    }
}

/// Static ridge weights `(XᵀX + λI)β = Xᵀy` for row-major `x` (`T × m`).
pub fn ridge_fit(x: &[f64], y: &[f64], m: usize, lambda: f64) -> Result<Vec<f64>> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!("ridge lambda must be finite and >= 0, got {lambda}")));
    }
    if m == 0 || x.len() != y.len() * m {
        return Err(Error::DimensionMismatch { what: "ridge design", expected: y.len() * m, found: x.len() });
    }
    let mut lhs = Mat::<f64>::zeros(m, m);
    let mut rhs = vec![0.0; m];
    for (row, &yt) in x.chunks_exact(m).zip(y) {
        for i in 0..m {
            rhs[i] += row[i] * yt;
            for j in 0..=i {
                lhs[(i, j)] += row[i] * row[j];
            }
        }
    }
    for i in 0..m {
        for j in 0..i {
            lhs[(j, i)] = lhs[(i, j)];
        }
        lhs[(i, i)] += lambda;
    }
    spd_solve(&lhs, &rhs).map_err(|_| Error::Singular(format!("ridge normal equations singular at lambda = {lambda}")))
}

pub fn ridge_fit_panel(panel: &ForecastPanel, lambda: f64) -> Result<Vec<f64>> {
    ridge_fit(panel.forecasts(), panel.targets(), panel.n_members(), lambda)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OnlineMethod {
    Exp3 { window: usize },
    PassiveAggressive { epsilon: f64 },
}

/// Predictions and the weights used at each row of an online pass.
#[derive(Debug, Clone, PartialEq)]
pub struct OnlineRun {
    pub predictions: Vec<f64>,
    pub weights: Vec<Vec<f64>>,
}

/// Runs an online method over rows `0..end`. Before predicting row `t`
/// every row `s ≤ t − k` not yet seen is revealed; nothing fresher is read.
/// State carries over from one series to the next.
pub fn run_online(
    method: OnlineMethod,
    panel: &ForecastPanel,
    targets: &dyn TargetView,
    end: usize,
) -> Result<OnlineRun> {
    if end > panel.len() {
        return Err(Error::InvalidParameter(format!("online pass to row {end} beyond panel of {}", panel.len())));
    }
    let m = panel.n_members();
    let k = panel.lead_time();
    let mut predictions = Vec::with_capacity(end);
    let mut weights = Vec::with_capacity(end);
    match method {
        OnlineMethod::Exp3 { window } => {
            let mut state = Exp3::new(m, window)?;
            for t in 0..end {
                targets.begin_prediction(t);
                let newest = t.checked_sub(k).map_or(0, |s| s + 1);
                let start = panel.series_start(t);
                state.refresh(panel, targets, start..newest.max(start));
                predictions.push(dot(panel.row(t), state.weights()));
                weights.push(state.weights().to_vec());
            }
        }
        OnlineMethod::PassiveAggressive { epsilon } => {
            let mut state = PassiveAggressive::new(m, epsilon)?;
            let mut revealed = 0;
            for t in 0..end {
                targets.begin_prediction(t);
                while revealed + k <= t {
                    state.update(panel.row(revealed), targets.target(revealed));
                    revealed += 1;
                }
                predictions.push(state.predict(panel.row(t)));
                weights.push(state.weights().to_vec());
            }
        }
    }
    Ok(OnlineRun { predictions, weights })
}
