//! CSV and JSON writers for backtests and campaigns.
//!
//! `results.csv`: `method,<vary>,n_ok,n_failed,` then `mean_<metric>` and
//! `std_<metric>` for mae, rmse, mape_percent, cvar05, cvar15.
//! `raw.csv`: `method,<vary>,seed,status,` the five metrics, `n_cases`,
//! `leak_free`, `error`.
//! `chosen_params.json`: `{schema_version, vary, rows: [{method, value,
//! seed, params}]}`.
//! `timing.csv`: `source,method,value,seed,n,tau,m,mode,params,seconds`.
//! Only `timing.csv` holds wall-clock values; the other files are
//! byte-identical across reruns.

use std::io::Write;

use serde::Serialize;

use super::algorithm::{ChosenParams, Method, MethodOutcome};
use super::campaign::CampaignResult;
use super::timing::TimingRecord;
use crate::error::Result;
use crate::metrics::MetricsReport;

pub const SCHEMA_VERSION: u32 = 1;

const METRICS: [&str; 5] = ["mae", "rmse", "mape_percent", "cvar05", "cvar15"];

fn fmt_value(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        v.to_string()
    }
}

pub fn write_results_csv<W: Write>(res: &CampaignResult, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["method".to_string(), res.vary.name().to_string(), "n_ok".into(), "n_failed".into()];
    header.extend(METRICS.iter().map(|m| format!("mean_{m}")));
    header.extend(METRICS.iter().map(|m| format!("std_{m}")));
    out.write_record(&header)?;
    for a in &res.aggregate {
        let mut rec = vec![a.method.name().to_string(), a.value.to_string(), a.n_ok.to_string(), a.n_failed.to_string()];
        rec.extend(a.mean.iter().map(|&v| fmt_value(v)));
        rec.extend(a.std.iter().map(|&v| fmt_value(v)));
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_raw_csv<W: Write>(res: &CampaignResult, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["method".to_string(), res.vary.name().to_string(), "seed".into(), "status".into()];
    header.extend(METRICS.iter().map(|m| m.to_string()));
    header.extend(["n_cases", "leak_free", "error"].map(String::from));
    out.write_record(&header)?;
    for r in &res.raw {
        let mut rec = vec![r.method.name().to_string(), r.value.to_string(), r.seed.to_string()];
        match &r.report {
            Some(rep) => {
                rec.push("ok".into());
                rec.extend(rep.values().iter().map(|v| v.to_string()));
                rec.push(rep.n_cases.to_string());
            }
            None => {
                rec.push("failed".into());
                rec.extend(std::iter::repeat(String::new()).take(6));
            }
        }
        rec.push(r.leak_free.to_string());
        rec.push(r.error.clone().unwrap_or_default());
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct ChosenRow<'a> {
    method: Method,
    value: f64,
    seed: u64,
    params: &'a ChosenParams,
}

#[derive(Serialize)]
struct ChosenDoc<'a> {
    schema_version: u32,
    vary: &'a str,
    rows: Vec<ChosenRow<'a>>,
}

pub fn write_chosen_json<W: Write>(res: &CampaignResult, mut w: W) -> Result<()> {
    let doc = ChosenDoc {
        schema_version: SCHEMA_VERSION,
        vary: res.vary.name(),
        rows: res
            .raw
            .iter()
            .map(|r| ChosenRow { method: r.method, value: r.value, seed: r.seed, params: &r.chosen })
            .collect(),
    };
    serde_json::to_writer_pretty(&mut w, &doc)?;
    writeln!(w)?;
    Ok(())
}

/// Per-cell fit times from a campaign followed by probe records.
pub fn write_timing_csv<W: Write>(res: Option<&CampaignResult>, probes: &[TimingRecord], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["source", "method", "value", "seed", "n", "tau", "m", "mode", "params", "seconds"])?;
    if let Some(res) = res {
        for r in &res.raw {
            out.write_record([
                "campaign",
                r.method.name(),
                &r.value.to_string(),
                &r.seed.to_string(),
                "",
                "",
                "",
                "",
                "",
                &r.fit_seconds.to_string(),
            ])?;
        }
    }
    for p in probes {
        out.write_record([
            "probe",
            "adaptive_ridge",
            "",
            "",
            &p.n.to_string(),
            &p.tau.to_string(),
            &p.m.to_string(),
            &p.mode.to_string(),
            &p.params.to_string(),
            &p.seconds.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Rows = methods, columns = metrics and chosen hyperparameters.
pub fn write_backtest_csv<W: Write>(outcomes: &[MethodOutcome], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["method".to_string()];
    header.extend(MetricsReport::FIELDS.iter().map(|s| s.to_string()));
    header.push("params".into());
    out.write_record(&header)?;
    for o in outcomes {
        let mut rec = vec![o.method.label().to_string()];
        rec.extend(o.report.values().iter().map(|v| v.to_string()));
        rec.push(o.report.n_cases.to_string());
        rec.push(o.chosen.describe());
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

/// `row,<name_1>,…,<name_m>` with one line per row of `weights`.
pub fn write_weights_csv<W: Write>(names: &[String], weights: &[Vec<f64>], first_row: usize, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["row".to_string()];
    header.extend(names.iter().cloned());
    out.write_record(&header)?;
    for (i, row) in weights.iter().enumerate() {
        let mut rec = vec![(first_row + i).to_string()];
        rec.extend(row.iter().map(|v| v.to_string()));
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

/// `method,seconds` for each backtest outcome.
pub fn write_backtest_timing_csv<W: Write>(outcomes: &[MethodOutcome], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["method", "seconds"])?;
    for o in outcomes {
        out.write_record([o.method.name(), &o.fit_seconds.to_string()])?;
    }
    out.flush()?;
    Ok(())
}
