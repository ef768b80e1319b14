//! Grid search on validation, refit on train + validation, one pass over test.

use std::cmp::Ordering;
use std::fmt;
use std::ops::Range;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::audit::{AuditedTargets, LeakReport, Phase, StandardizedView};
use crate::adaptive::{AdaptiveFitProblem, AdaptiveRule, SolveMode, SolverOptions, SpectralFactor};
use crate::baselines::{best_in_hindsight, ensemble_mean, ridge_fit, run_online, OnlineMethod};
use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::metrics::{Metric, MetricsReport};
use crate::panel::{ForecastPanel, SplitBounds, Standardizer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Hindsight,
    Mean,
    Exp3,
    #[serde(rename = "pa")]
    PassiveAggressive,
    Ridge,
    AdaptiveRidge,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Hindsight,
        Method::Mean,
        Method::Exp3,
        Method::PassiveAggressive,
        Method::Ridge,
        Method::AdaptiveRidge,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Hindsight => "hindsight",
            Method::Mean => "mean",
            Method::Exp3 => "exp3",
            Method::PassiveAggressive => "pa",
            Method::Ridge => "ridge",
            Method::AdaptiveRidge => "adaptive_ridge",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Method::Hindsight => "Best Model in Hindsight",
            Method::Mean => "Ensemble Mean",
            Method::Exp3 => "Exp3",
            Method::PassiveAggressive => "Passive-Aggressive",
            Method::Ridge => "Ridge",
            Method::AdaptiveRidge => "Adaptive Ridge",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        match key.as_str() {
            "hindsight" | "best" | "best_in_hindsight" => Ok(Method::Hindsight),
            "mean" | "ensemble_mean" => Ok(Method::Mean),
            "exp3" => Ok(Method::Exp3),
            "pa" | "passive_aggressive" => Ok(Method::PassiveAggressive),
            "ridge" => Ok(Method::Ridge),
            "adaptive_ridge" | "adaptive" => Ok(Method::AdaptiveRidge),
            _ => Err(Error::InvalidParameter(format!("unknown method `{s}`"))),
        }
    }
}

/// Hyperparameter grids and the validation criterion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSpec {
    /// Regularization grid shared by adaptive ridge, ridge and the PA margin.
    pub lambdas: Vec<f64>,
    pub taus: Vec<usize>,
    pub exp3_windows: Vec<usize>,
    pub pa_margins: Vec<f64>,
    pub metric: Metric,
    pub mode: SolveMode,
    pub solver: SolverOptions,
    pub allow_overparameterized: bool,
}

impl Default for GridSpec {
    fn default() -> Self {
        let lambdas = vec![0.0, 1e-4, 1e-3, 1e-2, 1e-1, 1.0, 2.0];
        Self {
            pa_margins: lambdas.clone(),
            lambdas,
            taus: (1..=10).collect(),
            exp3_windows: vec![5, 10, 25, 50, 100, 200],
            metric: Metric::Mae,
            mode: SolveMode::Faithful,
            solver: SolverOptions::default(),
            allow_overparameterized: false,
        }
    }
}

impl GridSpec {
    /// The grid used for synthetic experiments: window fixed at 5.
    pub fn synthetic() -> Self {
        let lambdas = vec![1e-4, 1e-3, 1e-2, 1e-1, 1.0];
        Self {
            pa_margins: lambdas.clone(),
            lambdas,
            taus: vec![5],
            allow_overparameterized: true,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |v: &f64| !(v.is_finite() && *v >= 0.0);
        if self.lambdas.is_empty() || self.lambdas.iter().any(bad) {
            return Err(Error::InvalidParameter("lambda grid must be non-empty, finite and >= 0".into()));
        }
        if self.pa_margins.is_empty() || self.pa_margins.iter().any(bad) {
            return Err(Error::InvalidParameter("PA margin grid must be non-empty, finite and >= 0".into()));
        }
        if self.taus.is_empty() || self.taus.contains(&0) {
            return Err(Error::InvalidParameter("window grid must be non-empty with every tau >= 1".into()));
        }
        if self.exp3_windows.is_empty() || self.exp3_windows.contains(&0) {
            return Err(Error::InvalidParameter("Exp3 window grid must be non-empty with every t0 >= 1".into()));
        }
        Ok(())
    }

    /// Adaptive-ridge λ values actually searched: zero is dropped in
    /// faithful mode.
    pub fn adaptive_lambdas(&self) -> Vec<f64> {
        self.lambdas.iter().copied().filter(|&l| self.mode == SolveMode::Squared || l > 0.0).collect()
    }
}

/// Hyperparameters picked on validation; unused fields stay empty.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ChosenParams {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub member: Option<String>,
}

impl ChosenParams {
    fn tie_key(&self) -> [f64; 4] {
        [
            self.lambda.unwrap_or(0.0),
            self.tau.unwrap_or(0) as f64,
            self.epsilon.unwrap_or(0.0),
            self.window.unwrap_or(0) as f64,
        ]
    }

    pub fn describe(&self) -> String {
        let mut parts = Vec::new();
        if let Some(v) = self.lambda {
            parts.push(format!("lambda={v}"));
        }
        if let Some(v) = self.tau {
            parts.push(format!("tau={v}"));
        }
        if let Some(v) = self.window {
            parts.push(format!("t0={v}"));
        }
        if let Some(v) = self.epsilon {
            parts.push(format!("epsilon={v}"));
        }
        if let Some(v) = &self.member {
            parts.push(format!("member={v}"));
        }
        parts.join(" ")
    }
}

/// One validation grid point: its score, or why it failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub params: ChosenParams,
    pub score: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct MethodOutcome {
    pub method: Method,
    pub report: MetricsReport,
    pub chosen: ChosenParams,
    pub grid: Vec<GridPoint>,
    /// Combined forecasts on the test rows, original scale.
    pub predictions: Vec<f64>,
    /// Fitted adaptive rule (adaptive ridge only).
    pub rule: Option<AdaptiveRule>,
    /// Weights applied to the standardized forecasts at each test row
    /// (ridge and the online methods).
    pub weights: Option<Vec<Vec<f64>>>,
    pub fit_seconds: f64,
    pub leaks: LeakReport,
}

struct Fitted {
    predictions: Vec<f64>,
    chosen: ChosenParams,
    grid: Vec<GridPoint>,
    rule: Option<AdaptiveRule>,
    weights: Option<Vec<Vec<f64>>>,
}

struct Ctx<'a> {
    panel: &'a ForecastPanel,
    blind: ForecastPanel,
    view: AuditedTargets<'a>,
    split: &'a SplitBounds,
    grid: &'a GridSpec,
}

impl Ctx<'_> {
    /// Rows `range` with targets read through the audited view.
    fn observed(&self, range: Range<usize>) -> Result<ForecastPanel> {
        let y = self.view.read_range(range.clone());
        self.blind.slice(range)?.with_targets(y)
    }
}

/// Runs one method through selection, refit and test evaluation on the
/// first `split.len()` rows of `panel`.
pub fn run_algorithm1(
    panel: &ForecastPanel,
    split: &SplitBounds,
    grid: &GridSpec,
    method: Method,
) -> Result<MethodOutcome> {
    grid.validate()?;
    if split.len() > panel.len() || split.train.start != 0 {
        return Err(Error::InvalidParameter(format!(
            "split over {} rows does not fit a panel of {} rows",
            split.len(),
            panel.len()
        )));
    }
    let ctx = Ctx { panel, blind: panel.without_targets(), view: AuditedTargets::new(panel), split, grid };
    let start = Instant::now();
    let fitted = match method {
        Method::Hindsight => fit_hindsight(&ctx)?,
        Method::Mean => fit_mean(&ctx),
        Method::Exp3 | Method::PassiveAggressive => fit_online(&ctx, method)?,
        Method::Ridge => fit_ridge(&ctx)?,
        Method::AdaptiveRidge => fit_adaptive_ridge(&ctx)?,
    };
    let fit_seconds = start.elapsed().as_secs_f64();
    ctx.view.set_phase(Phase::Scoring);
    let y_test = ctx.view.read_range(split.test.clone());
    let report = MetricsReport::compute(&y_test, &fitted.predictions)?;
    let leaks = ctx.view.check(&split.test);
    Ok(MethodOutcome {
        method,
        report,
        chosen: fitted.chosen,
        grid: fitted.grid,
        predictions: fitted.predictions,
        rule: fitted.rule,
        weights: fitted.weights,
        fit_seconds,
        leaks,
    })
}

/// Every requested method on the same panel and split. A failing method
/// does not stop the others.
pub fn run_backtest(
    panel: &ForecastPanel,
    split: &SplitBounds,
    grid: &GridSpec,
    methods: &[Method],
) -> Vec<(Method, Result<MethodOutcome>)> {
    methods.iter().map(|&m| (m, run_algorithm1(panel, split, grid, m))).collect()
}

/// Picks the lowest score; ties go to the smallest (λ, τ, ε, t0).
fn select(mut points: Vec<GridPoint>) -> Result<(ChosenParams, Vec<GridPoint>)> {
    points.sort_by(|a, b| {
        let (ka, kb) = (a.params.tie_key(), b.params.tie_key());
        ka.iter().zip(&kb).map(|(x, y)| x.total_cmp(y)).find(|o| *o != Ordering::Equal).unwrap_or(Ordering::Equal)
    });
    let mut best: Option<(usize, f64)> = None;
    for (i, p) in points.iter().enumerate() {
        if let Some(s) = p.score {
            if best.map_or(true, |(_, b)| s < b) {
                best = Some((i, s));
            }
        }
    }
    match best {
        Some((i, _)) => Ok((points[i].params.clone(), points)),
        None => Err(Error::AllGridPointsFailed(
            points
                .iter()
                .map(|p| format!("{}: {}", p.params.describe(), p.error.as_deref().unwrap_or("no score")))
                .collect(),
        )),
    }
}

fn score(metric: Metric, y: &[f64], preds: Result<Vec<f64>>, params: ChosenParams) -> GridPoint {
    let result = preds.and_then(|p| {
        if let Some(i) = p.iter().position(|v| !v.is_finite()) {
            return Err(Error::Singular(format!("non-finite validation forecast at offset {i}")));
        }
        metric.evaluate(y, &p)
    });
    match result {
        Ok(s) if s.is_finite() => GridPoint { params, score: Some(s), error: None },
        Ok(s) => GridPoint { params, score: None, error: Some(format!("non-finite score {s}")) },
        Err(e) => GridPoint { params, score: None, error: Some(e.to_string()) },
    }
}

fn fit_hindsight(ctx: &Ctx) -> Result<Fitted> {
    ctx.view.set_phase(Phase::Scoring);
    let test = ctx.observed(ctx.split.test.clone())?;
    let (k, _) = best_in_hindsight(&test)?;
    Ok(Fitted {
        predictions: test.member(k),
        chosen: ChosenParams { member: Some(test.member_names()[k].clone()), ..Default::default() },
        grid: Vec::new(),
        rule: None,
        weights: None,
    })
}

fn fit_mean(ctx: &Ctx) -> Fitted {
    Fitted {
        predictions: ctx.split.test.clone().map(|t| ensemble_mean(ctx.blind.row(t))).collect(),
        chosen: ChosenParams::default(),
        grid: Vec::new(),
        rule: None,
        weights: None,
    }
}

fn fit_online(ctx: &Ctx, method: Method) -> Result<Fitted> {
    let candidates: Vec<(OnlineMethod, ChosenParams)> = if method == Method::Exp3 {
        ctx.grid
            .exp3_windows
            .iter()
            .map(|&w| (OnlineMethod::Exp3 { window: w }, ChosenParams { window: Some(w), ..Default::default() }))
            .collect()
    } else {
        ctx.grid
            .pa_margins
            .iter()
            .map(|&e| {
                (OnlineMethod::PassiveAggressive { epsilon: e }, ChosenParams { epsilon: Some(e), ..Default::default() })
            })
            .collect()
    };
    let split = ctx.split;

    ctx.view.set_phase(Phase::Selection);
    let std = Standardizer::fit_targets(&ctx.view.read_range(split.train.clone()))?;
    let y_val = ctx.view.read_range(split.val.clone());
    let std_blind = std.apply(&ctx.blind);
    let scaled = StandardizedView { inner: &ctx.view, standardizer: std };
    let mut points = Vec::new();
    for (m, params) in &candidates {
        let preds = run_online(*m, &std_blind, &scaled, split.val.end)
            .map(|run| run.predictions[split.val.clone()].iter().map(|&v| std.invert_value(v)).collect());
        ctx.view.set_phase(Phase::Selection);
        points.push(score(ctx.grid.metric, &y_val, preds, params.clone()));
    }
    let (chosen, points) = select(points)?;
    let m = candidates.iter().find(|(_, p)| *p == chosen).map(|(m, _)| *m).expect("chosen point is a candidate");

    ctx.view.set_phase(Phase::Refit);
    let std = Standardizer::fit_targets(&ctx.view.read_range(split.train_val()))?;
    let std_blind = std.apply(&ctx.blind);
    let scaled = StandardizedView { inner: &ctx.view, standardizer: std };
    let run = run_online(m, &std_blind, &scaled, split.test.end)?;
    Ok(Fitted {
        predictions: run.predictions[split.test.clone()].iter().map(|&v| std.invert_value(v)).collect(),
        chosen,
        grid: points,
        rule: None,
        weights: Some(run.weights[split.test.clone()].to_vec()),
    })
}

fn ridge_predict(blind: &ForecastPanel, std: &Standardizer, beta: &[f64], rows: Range<usize>) -> Vec<f64> {
    rows.map(|t| {
        let x: Vec<f64> = blind.row(t).iter().map(|&v| std.apply_value(v)).collect();
        std.invert_value(dot(&x, beta))
    })
    .collect()
}

fn ridge_on(ctx: &Ctx, rows: Range<usize>, lambda: f64) -> Result<(Standardizer, Vec<f64>)> {
    let train = ctx.observed(rows)?;
    let std = Standardizer::fit(&train)?;
    let s = std.apply(&train);
    let beta = ridge_fit(s.forecasts(), s.targets(), s.n_members(), lambda)?;
    Ok((std, beta))
}

fn fit_ridge(ctx: &Ctx) -> Result<Fitted> {
    let split = ctx.split;
    ctx.view.set_phase(Phase::Selection);
    let y_val = ctx.view.read_range(split.val.clone());
    let mut points = Vec::new();
    for &lambda in &ctx.grid.lambdas {
        let preds = ridge_on(ctx, split.train.clone(), lambda)
            .map(|(std, beta)| ridge_predict(&ctx.blind, &std, &beta, split.val.clone()));
        points.push(score(ctx.grid.metric, &y_val, preds, ChosenParams { lambda: Some(lambda), ..Default::default() }));
    }
    let (chosen, points) = select(points)?;

    ctx.view.set_phase(Phase::Refit);
    let (std, beta) = ridge_on(ctx, split.train_val(), chosen.lambda.expect("ridge point has lambda"))?;
    Ok(Fitted {
        predictions: ridge_predict(&ctx.blind, &std, &beta, split.test.clone()),
        chosen,
        grid: points,
        rule: None,
        weights: Some(vec![beta; split.test.len()]),
    })
}

/// Factors the problem for `rows` at window `tau` and returns one rule per λ.
fn adaptive_rules(
    ctx: &Ctx,
    rows: Range<usize>,
    tau: usize,
    lambdas: &[f64],
) -> Result<Vec<(f64, Result<AdaptiveRule>)>> {
    let train = ctx.observed(rows)?;
    let std = Standardizer::fit(&train)?;
    let problem = AdaptiveFitProblem::assemble(&std.apply(&train), tau, ctx.grid.allow_overparameterized)?;
    let factor = SpectralFactor::new(&problem)?;
    Ok(lambdas
        .iter()
        .map(|&lambda| {
            let sol = match ctx.grid.mode {
                SolveMode::Faithful => factor.solve_faithful(&problem, lambda, &ctx.grid.solver),
                SolveMode::Squared => factor.solve_squared(&problem, lambda),
            };
            let rule = sol.and_then(|s| AdaptiveRule::from_solution(&s, ctx.panel, tau, std));
            (lambda, rule)
        })
        .collect())
}

fn fit_adaptive_ridge(ctx: &Ctx) -> Result<Fitted> {
    let split = ctx.split;
    let lambdas = ctx.grid.adaptive_lambdas();
    if lambdas.is_empty() {
        return Err(Error::InvalidParameter("no positive lambda in the grid for faithful adaptive ridge".into()));
    }
    ctx.view.set_phase(Phase::Selection);
    let y_val = ctx.view.read_range(split.val.clone());
    let mut points = Vec::new();
    for &tau in &ctx.grid.taus {
        ctx.view.set_phase(Phase::Selection);
        let params = |lambda| ChosenParams { lambda: Some(lambda), tau: Some(tau), ..Default::default() };
        match adaptive_rules(ctx, split.train.clone(), tau, &lambdas) {
            Err(e) => points.extend(lambdas.iter().map(|&l| GridPoint {
                params: params(l),
                score: None,
                error: Some(e.to_string()),
            })),
            Ok(rules) => {
                for (lambda, rule) in rules {
                    let preds = rule.and_then(|r| r.predict_rows(&ctx.blind, &ctx.view, split.val.clone()));
                    ctx.view.set_phase(Phase::Selection);
                    points.push(score(ctx.grid.metric, &y_val, preds, params(lambda)));
                }
            }
        }
    }
    let (chosen, points) = select(points)?;
    let (lambda, tau) = (chosen.lambda.expect("adaptive point has lambda"), chosen.tau.expect("adaptive point has tau"));

    ctx.view.set_phase(Phase::Refit);
    let (_, rule) = adaptive_rules(ctx, split.train_val(), tau, &[lambda])?.pop().expect("one lambda requested");
    let rule = rule?;
    let predictions = rule.predict_rows(&ctx.blind, &ctx.view, split.test.clone())?;
    Ok(Fitted { predictions, chosen, grid: points, rule: Some(rule), weights: None })
}
