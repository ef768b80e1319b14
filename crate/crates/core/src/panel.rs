//! Forecast panels: aligned member forecasts, targets and timestamps.
//!
//! Row `t` holds the `m` member forecasts issued `lead_time` steps before
//! the target at row `t` is realized. Multi-series panels (one storm per
//! series, say) store a per-row label; series are contiguous blocks of rows
//! and nothing that walks history ever crosses into the previous series.

use std::io::{Read, Write};
use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Read access to realized targets.
///
/// Anything that consumes ground truth while walking forward in time goes
/// through this trait, so an auditing implementation can record which rows
/// were read and when.
pub trait TargetView {
    fn target(&self, row: usize) -> f64;

    /// Called by forward-walking consumers before they produce the forecast
    /// for `row`. Reads that follow belong to that prediction.
    fn begin_prediction(&self, _row: usize) {}
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForecastPanel {
    timestamps: Vec<i64>,
    /// Row-major `T × m`.
    forecasts: Vec<f64>,
    targets: Vec<f64>,
    members: Vec<String>,
    series: Option<Vec<String>>,
    /// First row of the series each row belongs to.
    series_start: Vec<usize>,
    lead_time: usize,
}

impl TargetView for ForecastPanel {
    fn target(&self, row: usize) -> f64 {
        self.targets[row]
    }
}

impl ForecastPanel {
    /// Builds a panel from row-major forecasts, validating every invariant.
    pub fn new(
        timestamps: Vec<i64>,
        forecasts: Vec<f64>,
        targets: Vec<f64>,
        members: Vec<String>,
        series: Option<Vec<String>>,
        lead_time: usize,
    ) -> Result<Self> {
        let t = targets.len();
        let m = members.len();
        if t == 0 {
            return Err(Error::InvalidParameter("panel needs at least one row".into()));
        }
        if m == 0 {
            return Err(Error::InvalidParameter("panel needs at least one member".into()));
        }
        if lead_time == 0 {
            return Err(Error::InvalidParameter("lead time must be at least 1".into()));
        }
        if timestamps.len() != t {
            return Err(Error::DimensionMismatch {
                what: "timestamp count",
                expected: t,
                found: timestamps.len(),
            });
        }
        if forecasts.len() != t * m {
            return Err(Error::DimensionMismatch {
                what: "forecast cell count",
                expected: t * m,
                found: forecasts.len(),
            });
        }
        if let Some(s) = &series {
            if s.len() != t {
                return Err(Error::DimensionMismatch {
                    what: "series label count",
                    expected: t,
                    found: s.len(),
                });
            }
        }
        for row in 0..t {
            if !targets[row].is_finite() {
                return Err(Error::MissingValue {
                    row,
                    column: "target".into(),
                });
            }
            for (j, v) in forecasts[row * m..(row + 1) * m].iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::MissingValue {
                        row,
                        column: members[j].clone(),
                    });
                }
            }
        }
        let series_start = series_starts(&timestamps, series.as_deref())?;
        Ok(Self {
            timestamps,
            forecasts,
            targets,
            members,
            series,
            series_start,
            lead_time,
        })
    }

    /// Convenience constructor for a single series with timestamps `1..=T`.
    pub fn from_rows(rows: &[Vec<f64>], targets: Vec<f64>, lead_time: usize) -> Result<Self> {
        let m = rows.first().map_or(0, Vec::len);
        let mut forecasts = Vec::with_capacity(rows.len() * m);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != m {
                return Err(Error::MalformedRow {
                    row: i,
                    reason: format!("expected {m} forecasts, found {}", r.len()),
                });
            }
            forecasts.extend_from_slice(r);
        }
        let timestamps = (1..=rows.len() as i64).collect();
        let members = (1..=m).map(|k| format!("member_{k}")).collect();
        Self::new(timestamps, forecasts, targets, members, None, lead_time)
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn n_members(&self) -> usize {
        self.members.len()
    }

    pub fn lead_time(&self) -> usize {
        self.lead_time
    }

    pub fn with_lead_time(mut self, lead_time: usize) -> Result<Self> {
        if lead_time == 0 {
            return Err(Error::InvalidParameter("lead time must be at least 1".into()));
        }
        self.lead_time = lead_time;
        Ok(self)
    }

    /// Member forecasts at row `t`.
    pub fn row(&self, t: usize) -> &[f64] {
        let m = self.n_members();
        &self.forecasts[t * m..(t + 1) * m]
    }

    pub fn forecasts(&self) -> &[f64] {
        &self.forecasts
    }

    /// Column `k` as an owned vector.
    pub fn member(&self, k: usize) -> Vec<f64> {
        (0..self.len()).map(|t| self.row(t)[k]).collect()
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn timestamps(&self) -> &[i64] {
        &self.timestamps
    }

    pub fn member_names(&self) -> &[String] {
        &self.members
    }

    pub fn series_labels(&self) -> Option<&[String]> {
        self.series.as_deref()
    }

    /// First row of the series containing row `t`.
    pub fn series_start(&self, t: usize) -> usize {
        self.series_start[t]
    }

    /// Contiguous row ranges, one per series.
    pub fn segments(&self) -> Vec<Range<usize>> {
        let mut out = Vec::new();
        let mut start = 0;
        for t in 1..=self.len() {
            if t == self.len() || self.series_start[t] == t {
                out.push(start..t);
                start = t;
            }
        }
        out
    }

    /// Rows `range` as a standalone panel. A series cut by the range start
    /// begins at the first retained row.
    pub fn slice(&self, range: Range<usize>) -> Result<Self> {
        if range.start >= range.end || range.end > self.len() {
            return Err(Error::InvalidParameter(format!(
                "row range {range:?} invalid for panel of {} rows",
                self.len()
            )));
        }
        let m = self.n_members();
        Self::new(
            self.timestamps[range.clone()].to_vec(),
            self.forecasts[range.start * m..range.end * m].to_vec(),
            self.targets[range.clone()].to_vec(),
            self.members.clone(),
            self.series.as_ref().map(|s| s[range.clone()].to_vec()),
            self.lead_time,
        )
    }

    /// Stacks panels in order. Members and lead time must agree.
    pub fn concat(parts: &[&ForecastPanel]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::InvalidParameter("nothing to concatenate".into()))?;
        let mut timestamps = Vec::new();
        let mut forecasts = Vec::new();
        let mut targets = Vec::new();
        let mut series: Option<Vec<String>> = first.series.as_ref().map(|_| Vec::new());
        for p in parts {
            if p.members != first.members {
                return Err(Error::InvalidParameter("member columns differ".into()));
            }
            if p.series.is_some() != series.is_some() {
                return Err(Error::InvalidParameter("series labels present in only some parts".into()));
            }
            timestamps.extend_from_slice(&p.timestamps);
            forecasts.extend_from_slice(&p.forecasts);
            targets.extend_from_slice(&p.targets);
            if let (Some(dst), Some(src)) = (series.as_mut(), p.series.as_ref()) {
                dst.extend(src.iter().cloned());
            }
        }
        Self::new(
            timestamps,
            forecasts,
            targets,
            first.members.clone(),
            series,
            first.lead_time,
        )
    }

    /// Same panel with the targets replaced.
    pub fn with_targets(&self, targets: Vec<f64>) -> Result<Self> {
        if targets.len() != self.len() {
            return Err(Error::DimensionMismatch { what: "target count", expected: self.len(), found: targets.len() });
        }
        if let Some(row) = targets.iter().position(|v| !v.is_finite()) {
            return Err(Error::MissingValue { row, column: "target".into() });
        }
        let mut out = self.clone();
        out.targets = targets;
        Ok(out)
    }

    /// Same panel with every target set to zero, for code that must only
    /// see forecasts.
    pub fn without_targets(&self) -> Self {
        let mut out = self.clone();
        out.targets.iter_mut().for_each(|v| *v = 0.0);
        out
    }

    /// Same panel with every forecast and target mapped through `f`.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Self {
        let mut out = self.clone();
        out.forecasts.iter_mut().for_each(|v| *v = f(*v));
        out.targets.iter_mut().for_each(|v| *v = f(*v));
        out
    }
}

fn series_starts(timestamps: &[i64], series: Option<&[String]>) -> Result<Vec<usize>> {
    let mut starts = Vec::with_capacity(timestamps.len());
    let mut seen: Vec<&str> = Vec::new();
    let mut current = 0;
    for t in 0..timestamps.len() {
        let label = series.map_or("", |s| s[t].as_str());
        let new_series = t == 0 || series.is_some_and(|s| s[t] != s[t - 1]);
        if new_series {
            if seen.contains(&label) {
                return Err(Error::MalformedRow {
                    row: t,
                    reason: format!("series `{label}` is not contiguous"),
                });
            }
            seen.push(label);
            current = t;
        } else if timestamps[t] <= timestamps[t - 1] {
            return Err(Error::NonMonotoneTimestamp {
                row: t,
                timestamp: timestamps[t],
                series: label.to_string(),
            });
        }
        starts.push(current);
    }
    Ok(starts)
}

/// Column mapping for CSV ingestion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelSchema {
    pub timestamp: String,
    pub target: String,
    /// Member columns in the order they should appear; `None` takes every
    /// column that is not the timestamp, target or series column, in file order.
    pub members: Option<Vec<String>>,
    pub series: Option<String>,
}

impl Default for PanelSchema {
    fn default() -> Self {
        Self {
            timestamp: "timestamp".into(),
            target: "target".into(),
            members: None,
            series: None,
        }
    }
}

fn column_index(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| Error::InvalidParameter(format!("column `{name}` not found in header")))
}

/// Reads a panel from CSV. Row indices in errors are zero-based data rows
/// (the header is not counted).
pub fn read_panel<R: Read>(reader: R, schema: &PanelSchema, lead_time: usize) -> Result<ForecastPanel> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let ts_idx = column_index(&headers, &schema.timestamp)?;
    let y_idx = column_index(&headers, &schema.target)?;
    let series_idx = schema
        .series
        .as_deref()
        .map(|s| column_index(&headers, s))
        .transpose()?;
    let member_idx: Vec<usize> = match &schema.members {
        Some(cols) => cols
            .iter()
            .map(|c| column_index(&headers, c))
            .collect::<Result<_>>()?,
        None => (0..headers.len())
            .filter(|&i| i != ts_idx && i != y_idx && Some(i) != series_idx)
            .collect(),
    };
    let members: Vec<String> = member_idx.iter().map(|&i| headers[i].to_string()).collect();

    let mut timestamps = Vec::new();
    let mut forecasts = Vec::new();
    let mut targets = Vec::new();
    let mut series = series_idx.map(|_| Vec::new());
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::MalformedRow {
            row,
            reason: e.to_string(),
        })?;
        if rec.len() != headers.len() {
            return Err(Error::MalformedRow {
                row,
                reason: format!("expected {} fields, found {}", headers.len(), rec.len()),
            });
        }
        let ts = rec[ts_idx].trim();
        let ts: i64 = ts.parse().map_err(|_| Error::MalformedRow {
            row,
            reason: format!("timestamp `{ts}` is not an integer step"),
        })?;
        timestamps.push(ts);
        for &i in &member_idx {
            forecasts.push(parse_cell(&rec[i], row, &headers[i])?);
        }
        targets.push(parse_cell(&rec[y_idx], row, &headers[y_idx])?);
        if let (Some(s), Some(i)) = (series.as_mut(), series_idx) {
            s.push(rec[i].to_string());
        }
    }
    ForecastPanel::new(timestamps, forecasts, targets, members, series, lead_time)
}

fn parse_cell(cell: &str, row: usize, column: &str) -> Result<f64> {
    let cell = cell.trim();
    let missing = || Error::MissingValue {
        row,
        column: column.to_string(),
    };
    if cell.is_empty() {
        return Err(missing());
    }
    let v: f64 = cell.parse().map_err(|_| Error::MalformedRow {
        row,
        reason: format!("`{cell}` in column `{column}` is not a number"),
    })?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(missing())
    }
}

pub fn load_panel(path: impl AsRef<Path>, schema: &PanelSchema, lead_time: usize) -> Result<ForecastPanel> {
    let file = std::fs::File::open(path)?;
    read_panel(std::io::BufReader::new(file), schema, lead_time)
}

/// Writes the panel in the ingestion schema: timestamp, members, target and
/// (when labelled) series. Values use the shortest round-trip representation.
pub fn write_panel<W: Write>(panel: &ForecastPanel, writer: W, schema: &PanelSchema) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec![schema.timestamp.clone()];
    header.extend(panel.member_names().iter().cloned());
    header.push(schema.target.clone());
    if panel.series_labels().is_some() {
        header.push(schema.series.clone().unwrap_or_else(|| "series".into()));
    }
    w.write_record(&header)?;
    for t in 0..panel.len() {
        let mut rec = vec![panel.timestamps()[t].to_string()];
        rec.extend(panel.row(t).iter().map(|v| v.to_string()));
        rec.push(panel.targets()[t].to_string());
        if let Some(s) = panel.series_labels() {
            rec.push(s[t].clone());
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Chronological split fractions; the test split takes the remainder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_frac: f64,
    pub val_frac: f64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train_frac: 0.5,
            val_frac: 0.25,
        }
    }
}

/// Resolved row ranges of a chronological split.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitBounds {
    pub train: Range<usize>,
    pub val: Range<usize>,
    pub test: Range<usize>,
}

impl SplitBounds {
    /// Explicit sizes, laid out back to back from row 0.
    pub fn from_counts(train: usize, val: usize, test: usize) -> Result<Self> {
        let b = Self {
            train: 0..train,
            val: train..train + val,
            test: train + val..train + val + test,
        };
        b.check()?;
        Ok(b)
    }

    fn check(&self) -> Result<()> {
        if self.train.is_empty() {
            return Err(Error::EmptySplit("train"));
        }
        if self.val.is_empty() {
            return Err(Error::EmptySplit("validation"));
        }
        if self.test.is_empty() {
            return Err(Error::EmptySplit("test"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.test.end
    }

    pub fn is_empty(&self) -> bool {
        self.test.end == 0
    }

    /// Train and validation rows together.
    pub fn train_val(&self) -> Range<usize> {
        self.train.start..self.val.end
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = |f: f64| f > 0.0 && f < 1.0;
        if !ok(self.train_frac) || !ok(self.val_frac) || self.train_frac + self.val_frac >= 1.0 {
            return Err(Error::InvalidParameter(format!(
                "split fractions ({}, {}) must lie in (0,1) and sum below 1",
                self.train_frac, self.val_frac
            )));
        }
        Ok(())
    }

    /// Boundaries for a panel of `t` rows: cumulative fractions rounded to
    /// the nearest row.
    pub fn resolve(&self, t: usize) -> Result<SplitBounds> {
        self.validate()?;
        let n = t as f64;
        let train_end = (self.train_frac * n).round() as usize;
        let val_end = (((self.train_frac + self.val_frac) * n).round() as usize).min(t);
        let b = SplitBounds {
            train: 0..train_end,
            val: train_end..val_end.max(train_end),
            test: val_end.max(train_end)..t,
        };
        b.check()?;
        Ok(b)
    }
}

pub fn split_chronological(
    panel: &ForecastPanel,
    spec: &SplitSpec,
) -> Result<(ForecastPanel, ForecastPanel, ForecastPanel)> {
    let b = spec.resolve(panel.len())?;
    Ok((panel.slice(b.train)?, panel.slice(b.val)?, panel.slice(b.test)?))
}

/// Affine rescaling by the training targets' mean and sample standard
/// deviation (denominator `T − 1`), applied to targets and every member
/// column alike.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mu: f64,
    pub sigma: f64,
}

impl Standardizer {
    pub fn fit_targets(y: &[f64]) -> Result<Self> {
        if y.len() < 2 {
            return Err(Error::InvalidParameter(
                "standardizing needs at least two training rows".into(),
            ));
        }
        let n = y.len() as f64;
        let mu = y.iter().sum::<f64>() / n;
        let var = y.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / (n - 1.0);
        let sigma = var.sqrt();
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::ConstantTarget);
        }
        Ok(Self { mu, sigma })
    }

    pub fn fit(train: &ForecastPanel) -> Result<Self> {
        Self::fit_targets(train.targets())
    }

    pub fn identity() -> Self {
        Self { mu: 0.0, sigma: 1.0 }
    }

    pub fn apply_value(&self, v: f64) -> f64 {
        (v - self.mu) / self.sigma
    }

    pub fn invert_value(&self, v: f64) -> f64 {
        v * self.sigma + self.mu
    }

    /// Differences (errors) only scale; the shift cancels.
    pub fn apply_difference(&self, d: f64) -> f64 {
        d / self.sigma
    }

    pub fn apply(&self, panel: &ForecastPanel) -> ForecastPanel {
        panel.map_values(|v| self.apply_value(v))
    }

    pub fn invert(&self, panel: &ForecastPanel) -> ForecastPanel {
        panel.map_values(|v| self.invert_value(v))
    }
}
