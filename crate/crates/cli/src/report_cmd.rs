use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use crate::config::require;
use crate::error::{CliError, CliResult};
use crate::svg::{line_chart, Series};

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct ReportArgs {
    /// Output directory of a `campaign` or `backtest` run.
    #[arg(long)]
    pub dir: Option<PathBuf>,
    /// mae, rmse, mape_percent, cvar05 or cvar15.
    #[arg(long)]
    pub metric: Option<String>,
    /// Write a line chart: metric against the varied value for a campaign,
    /// adaptive weights over time for a backtest.
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

fn read_csv(path: &Path) -> CliResult<(Vec<String>, Vec<Vec<String>>)> {
    let text = fs::read_to_string(path).map_err(CliError::io(path))?;
    let mut lines = text.lines();
    let header: Vec<String> = lines.next().unwrap_or("").split(',').map(String::from).collect();
    let rows = lines.filter(|l| !l.is_empty()).map(|l| l.split(',').map(String::from).collect()).collect();
    Ok((header, rows))
}

fn col(header: &[String], name: &str) -> CliResult<usize> {
    header.iter().position(|h| h == name).ok_or_else(|| CliError::Usage(format!("column `{name}` not in file")))
}

pub fn run(args: &ReportArgs) -> CliResult<()> {
    let dir = require(&args.dir, "dir")?;
    let metric = args.metric.clone().unwrap_or_else(|| "rmse".into());
    if dir.join("results.csv").exists() {
        campaign_report(&dir, &metric, args.svg.as_deref())
    } else if dir.join("report.csv").exists() {
        backtest_report(&dir, args.svg.as_deref())
    } else {
        Err(CliError::Usage(format!("{} holds neither results.csv nor report.csv", dir.display())))
    }
}

fn campaign_report(dir: &Path, metric: &str, svg: Option<&Path>) -> CliResult<()> {
    let (header, rows) = read_csv(&dir.join("results.csv"))?;
    let vary = header.get(1).cloned().unwrap_or_default();
    let (mc, sc) = (col(&header, &format!("mean_{metric}"))?, col(&header, &format!("std_{metric}"))?);
    let mut table: BTreeMap<String, Vec<(f64, String, f64)>> = BTreeMap::new();
    let mut values: Vec<f64> = Vec::new();
    for r in &rows {
        let v: f64 = r[1].parse().map_err(|_| CliError::Usage(format!("bad {vary} value `{}`", r[1])))?;
        if !values.contains(&v) {
            values.push(v);
        }
        let mean = r[mc].parse().unwrap_or(f64::NAN);
        let sd = r[sc].parse().unwrap_or(f64::NAN);
        table.entry(r[0].clone()).or_default().push((v, format!("{mean:.4} ± {sd:.4}"), mean));
    }
    values.sort_by(f64::total_cmp);
    println!("| method | {} |", values.iter().map(|v| format!("{vary}={v}")).collect::<Vec<_>>().join(" | "));
    println!("|---|{}", "---|".repeat(values.len()));
    for (method, cells) in &table {
        let line: Vec<String> = values
            .iter()
            .map(|v| cells.iter().find(|c| c.0 == *v).map_or(String::from("-"), |c| c.1.clone()))
            .collect();
        println!("| {method} | {} |", line.join(" | "));
    }
    if let Some(path) = svg {
        let series: Vec<Series> = table
            .iter()
            .map(|(m, cells)| Series { name: m.clone(), points: cells.iter().map(|c| (c.0, c.2)).collect() })
            .collect();
        let doc = line_chart(&format!("mean test {metric}"), &vary, metric, &series);
        fs::write(path, doc).map_err(CliError::io(path))?;
    }
    Ok(())
}

fn backtest_report(dir: &Path, svg: Option<&Path>) -> CliResult<()> {
    let text = fs::read_to_string(dir.join("report.csv")).map_err(CliError::io(dir.join("report.csv")))?;
    for (i, line) in text.lines().enumerate() {
        let cells: Vec<&str> = line.split(',').collect();
        println!("| {} |", cells.join(" | "));
        if i == 0 {
            println!("|{}", "---|".repeat(cells.len()));
        }
    }
    if let Some(path) = svg {
        let weights = dir.join("weights_adaptive_ridge.csv");
        if !weights.exists() {
            return Err(CliError::Usage("no weights_adaptive_ridge.csv; rerun backtest with --emit-weights".into()));
        }
        let (header, rows) = read_csv(&weights)?;
        let series: Vec<Series> = (1..header.len())
            .map(|j| Series {
                name: header[j].clone(),
                points: rows
                    .iter()
                    .filter_map(|r| Some((r[0].parse().ok()?, r[j].parse().ok()?)))
                    .collect(),
            })
            .collect();
        let doc = line_chart("adaptive ridge weights", "row", "weight", &series);
        fs::write(path, doc).map_err(CliError::io(path))?;
    }
    Ok(())
}
