use std::path::PathBuf;

use adaptive_ensemble::adaptive::SolveMode;
use adaptive_ensemble::metrics::Metric;
use adaptive_ensemble::panel::{load_panel, PanelSchema, SplitSpec};
use adaptive_ensemble::pipeline::{
    run_backtest, write_backtest_csv, write_backtest_timing_csv, write_weights_csv, GridPoint, GridSpec, LeakReport,
    Method, MethodOutcome,
};
use clap::Args;
use serde::{Deserialize, Serialize};

use crate::config::{int_list, list, parse, require};
use crate::error::{CliError, CliResult};
use crate::manifest::OutputDir;

macro_rules! grid_flags {
    ($a:expr) => {
        $crate::backtest_cmd::GridFlags {
            lambdas: $a.lambdas.clone(),
            taus: $a.taus.clone(),
            exp3_windows: $a.exp3_windows.clone(),
            pa_margins: $a.pa_margins.clone(),
            metric: $a.metric.clone(),
            mode: $a.mode.clone(),
            allow_overparameterized: $a.allow_overparameterized,
        }
    };
}
pub(crate) use grid_flags;

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct BacktestArgs {
    /// Panel CSV: timestamp, member columns, target.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub timestamp_col: Option<String>,
    #[arg(long)]
    pub target_col: Option<String>,
    /// Column labelling independent series.
    #[arg(long)]
    pub series_col: Option<String>,
    /// Comma-separated member columns (default: every other column).
    #[arg(long)]
    pub members: Option<String>,
    /// Forecast lead time k in rows.
    #[arg(long)]
    pub lead_time: Option<usize>,
    /// Comma-separated: hindsight, mean, exp3, pa, ridge, adaptive_ridge.
    #[arg(long)]
    pub methods: Option<String>,
    #[arg(long)]
    pub train_frac: Option<f64>,
    #[arg(long)]
    pub val_frac: Option<f64>,
    /// Regularization grid (adaptive ridge, ridge, PA margin).
    #[arg(long)]
    pub lambdas: Option<String>,
    /// Window grid, e.g. `1..=10` or `2,5`.
    #[arg(long)]
    pub taus: Option<String>,
    /// Exp3 window grid.
    #[arg(long)]
    pub exp3_windows: Option<String>,
    /// PA margin grid (defaults to the lambda grid).
    #[arg(long)]
    pub pa_margins: Option<String>,
    /// Validation metric: mae, rmse, mape, cvar05, cvar15.
    #[arg(long)]
    pub metric: Option<String>,
    /// faithful or squared.
    #[arg(long)]
    pub mode: Option<String>,
    /// Fit adaptive rules with more parameters than training rows.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub allow_overparameterized: Option<bool>,
    /// Write per-row combination weights for plotting.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub emit_weights: bool,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

/// Grid overrides shared by `backtest` and `campaign`.
#[derive(Debug, Clone, Default)]
pub struct GridFlags {
    pub lambdas: Option<String>,
    pub taus: Option<String>,
    pub exp3_windows: Option<String>,
    pub pa_margins: Option<String>,
    pub metric: Option<String>,
    pub mode: Option<String>,
    pub allow_overparameterized: Option<bool>,
}

impl GridFlags {
    pub fn apply(&self, base: GridSpec) -> CliResult<GridSpec> {
        let mut g = base;
        if let Some(s) = &self.lambdas {
            g.lambdas = list(s, "lambdas")?;
            if self.pa_margins.is_none() {
                g.pa_margins = g.lambdas.clone();
            }
        }
        if let Some(s) = &self.taus {
            g.taus = int_list(s, "taus")?.into_iter().map(|v| v as usize).collect();
        }
        if let Some(s) = &self.exp3_windows {
            g.exp3_windows = int_list(s, "exp3-windows")?.into_iter().map(|v| v as usize).collect();
        }
        if let Some(s) = &self.pa_margins {
            g.pa_margins = list(s, "pa-margins")?;
        }
        if let Some(s) = &self.metric {
            g.metric = parse::<Metric>(s, "metric")?;
        }
        if let Some(s) = &self.mode {
            g.mode = parse::<SolveMode>(s, "mode")?;
        }
        if let Some(b) = self.allow_overparameterized {
            g.allow_overparameterized = b;
        }
        g.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(g)
    }
}

pub fn methods(s: Option<&str>) -> CliResult<Vec<Method>> {
    match s {
        None => Ok(Method::ALL.to_vec()),
        Some(s) => {
            let mut m = list::<Method>(s, "methods")?;
            let mut seen = Vec::new();
            m.retain(|x| !seen.contains(x) && {
                seen.push(*x);
                true
            });
            if m.is_empty() {
                return Err(CliError::Usage("--methods is empty".into()));
            }
            Ok(m)
        }
    }
}

pub fn split_spec(train: Option<f64>, val: Option<f64>) -> CliResult<SplitSpec> {
    let d = SplitSpec::default();
    let s = SplitSpec { train_frac: train.unwrap_or(d.train_frac), val_frac: val.unwrap_or(d.val_frac) };
    s.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(s)
}

#[derive(Serialize)]
struct Resolved<'a> {
    input: &'a PathBuf,
    schema: &'a PanelSchema,
    lead_time: usize,
    methods: &'a [Method],
    split: SplitSpec,
    grid: &'a GridSpec,
    emit_weights: bool,
}

#[derive(Serialize)]
struct MethodEntry<'a> {
    method: Method,
    label: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    report: Option<&'a adaptive_ensemble::metrics::MetricsReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    chosen: Option<&'a adaptive_ensemble::pipeline::ChosenParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    grid: Option<&'a [GridPoint]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    leaks: Option<&'a LeakReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

pub fn run(args: &BacktestArgs) -> CliResult<()> {
    let input = require(&args.input, "input")?;
    let out_dir = require(&args.out_dir, "out-dir")?;
    let d = PanelSchema::default();
    let schema = PanelSchema {
        timestamp: args.timestamp_col.clone().unwrap_or(d.timestamp),
        target: args.target_col.clone().unwrap_or(d.target),
        members: args.members.as_deref().map(|s| list::<String>(s, "members")).transpose()?,
        series: args.series_col.clone(),
    };
    let lead_time = args.lead_time.unwrap_or(1);
    let methods = methods(args.methods.as_deref())?;
    let split_spec = split_spec(args.train_frac, args.val_frac)?;
    let grid = grid_flags!(args).apply(GridSpec::default())?;

    let panel = load_panel(&input, &schema, lead_time)?;
    let split = split_spec.resolve(panel.len())?;
    log::info!("backtest on {} rows: train {:?}, validation {:?}, test {:?}", panel.len(), split.train, split.val, split.test);
    let results = run_backtest(&panel, &split, &grid, &methods);

    let mut out = OutputDir::create(&out_dir)?;
    let outcomes: Vec<&MethodOutcome> = results.iter().filter_map(|(_, r)| r.as_ref().ok()).collect();
    let owned: Vec<MethodOutcome> = outcomes.iter().map(|o| (*o).clone()).collect();
    write_backtest_csv(&owned, out.file("report.csv", false)?)?;
    write_backtest_timing_csv(&owned, out.file("timing.csv", true)?)?;

    let entries: Vec<MethodEntry> = results
        .iter()
        .map(|(m, r)| match r {
            Ok(o) => MethodEntry {
                method: *m,
                label: m.label(),
                report: Some(&o.report),
                chosen: Some(&o.chosen),
                grid: Some(&o.grid),
                leaks: Some(&o.leaks),
                error: None,
            },
            Err(e) => MethodEntry {
                method: *m,
                label: m.label(),
                report: None,
                chosen: None,
                grid: None,
                leaks: None,
                error: Some(e.to_string()),
            },
        })
        .collect();
    let json = serde_json::to_string_pretty(&serde_json::json!({ "schema_version": 1, "split": split, "methods": entries }))
        .map_err(|e| CliError::Usage(e.to_string()))?;
    out.write_text("report.json", &(json + "\n"))?;

    for o in &owned {
        if let Some(rule) = &o.rule {
            out.write_text("rule.json", &(rule.to_json()? + "\n"))?;
        }
        if args.emit_weights {
            let name = format!("weights_{}.csv", o.method.name());
            if let Some(rule) = &o.rule {
                let trace = rule.weights_trace(&panel)?;
                write_weights_csv(panel.member_names(), &trace, 0, out.file(&name, false)?)?;
            } else if let Some(w) = &o.weights {
                write_weights_csv(panel.member_names(), w, split.test.start, out.file(&name, false)?)?;
            }
        }
    }
    let resolved = Resolved {
        input: &input,
        schema: &schema,
        lead_time,
        methods: &methods,
        split: split_spec,
        grid: &grid,
        emit_weights: args.emit_weights,
    };
    out.finish("backtest", &resolved, Vec::new(), &[input.as_path()])?;

    print_table(&owned);
    for o in &owned {
        if !o.leaks.is_clean() {
            return Err(CliError::Verification(format!("{}: target access outside the allowed window", o.method)));
        }
    }
    if let Some((m, Err(e))) = results.into_iter().find(|(_, r)| r.is_err()) {
        eprintln!("{m} failed: {e}");
        return Err(e.into());
    }
    Ok(())
}

fn print_table(outcomes: &[MethodOutcome]) {
    println!("{:<24} {:>10} {:>10} {:>10} {:>10} {:>10}  params", "method", "MAE", "RMSE", "MAPE%", "CVaR5", "CVaR15");
    for o in outcomes {
        let r = &o.report;
        println!(
            "{:<24} {:>10.4} {:>10.4} {:>10.2} {:>10.4} {:>10.4}  {}",
            o.method.label(),
            r.mae,
            r.rmse,
            r.mape_percent,
            r.cvar05,
            r.cvar15,
            o.chosen.describe()
        );
    }
}
