//! Seed-replicated synthetic experiments.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::algorithm::{run_algorithm1, ChosenParams, GridSpec, Method};
use crate::error::{Error, Result};
use crate::metrics::MetricsReport;
use crate::panel::{ForecastPanel, SplitBounds, SplitSpec};
use crate::synth::{generate, DriftKind, SynthConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Vary {
    Members,
    /// Gaussian drift with `sigma_drift = s_drift = value`.
    Drift,
    /// Bernoulli-gated drift with `p_drift = value`.
    PDrift,
    Window,
    TrainSize,
}

impl Vary {
    pub fn name(self) -> &'static str {
        match self {
            Vary::Members => "members",
            Vary::Drift => "drift",
            Vary::PDrift => "p_drift",
            Vary::Window => "window",
            Vary::TrainSize => "train_size",
        }
    }

    fn integral(self) -> bool {
        matches!(self, Vary::Members | Vary::Window | Vary::TrainSize)
    }
}

impl fmt::Display for Vary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Vary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "members" | "m" => Ok(Vary::Members),
            "drift" => Ok(Vary::Drift),
            "p_drift" | "pdrift" => Ok(Vary::PDrift),
            "window" | "tau" => Ok(Vary::Window),
            "train_size" | "n" => Ok(Vary::TrainSize),
            other => Err(Error::InvalidParameter(format!("unknown campaign dimension `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentCampaign {
    pub template: SynthConfig,
    pub vary: Vary,
    pub values: Vec<f64>,
    pub seeds: Vec<u64>,
    pub methods: Vec<Method>,
    pub grid: GridSpec,
    pub split: SplitSpec,
    /// Test rows at the end of the panel in a train-size campaign.
    pub test_rows: usize,
}

impl ExperimentCampaign {
    /// Defaults of the synthetic study: 4000 steps, 10 members, Gaussian
    /// drift 0.5, window 5, 50/25/25 split, seeds `0..n_seeds`.
    pub fn synthetic(vary: Vary, values: Vec<f64>, n_seeds: u64) -> Self {
        Self {
            template: SynthConfig { drift: DriftKind::Gaussian, ..SynthConfig::default() },
            vary,
            values,
            seeds: (0..n_seeds).collect(),
            methods: Method::ALL.to_vec(),
            grid: GridSpec::synthetic(),
            split: SplitSpec::default(),
            test_rows: 1000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::InvalidParameter("campaign needs at least one value".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::InvalidParameter("campaign needs at least one seed".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidParameter("campaign needs at least one method".into()));
        }
        for &v in &self.values {
            if !(v.is_finite() && v >= 0.0) || (self.vary.integral() && (v.fract() != 0.0 || v < 1.0)) {
                return Err(Error::InvalidParameter(format!("bad {} value {v}", self.vary)));
            }
        }
        if self.vary == Vary::PDrift && self.values.iter().any(|&v| v > 1.0) {
            return Err(Error::InvalidParameter("drift probabilities must lie in [0, 1]".into()));
        }
        if self.vary == Vary::TrainSize {
            if let Some(&v) = self.values.iter().find(|&&v| v as usize + self.test_rows > self.template.horizon || v < 3.0) {
                return Err(Error::InvalidParameter(format!(
                    "train size {v} plus {} test rows does not fit horizon {}",
                    self.test_rows, self.template.horizon
                )));
            }
        }
        self.grid.validate()?;
        self.split.validate()?;
        self.template.validate()
    }

    /// Panel, split and grid of one (value, seed) cell.
    pub fn cell(&self, value: f64, seed: u64) -> Result<(ForecastPanel, SplitBounds, GridSpec)> {
        let mut cfg = SynthConfig { seed, ..self.template.clone() };
        let mut grid = self.grid.clone();
        match self.vary {
            Vary::Members => cfg.members = value as usize,
            Vary::Drift => {
                cfg.drift = DriftKind::Gaussian;
                cfg.sigma_drift = value;
                cfg.s_drift = value;
            }
            Vary::PDrift => {
                cfg.drift = DriftKind::Bernoulli;
                cfg.p_drift = value;
            }
            Vary::Window => grid.taus = vec![value as usize],
            Vary::TrainSize => {}
        }
        let panel = generate(&cfg)?.panel;
        if self.vary == Vary::TrainSize {
            let n = value as usize;
            let start = cfg.horizon - self.test_rows - n;
            let val = (n as f64 / 3.0).round() as usize;
            let split = SplitBounds::from_counts(n - val, val, self.test_rows)?;
            return Ok((panel.slice(start..cfg.horizon)?, split, grid));
        }
        let split = self.split.resolve(panel.len())?;
        Ok((panel, split, grid))
    }
}

/// One (method, value, seed) result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawRow {
    pub method: Method,
    pub value: f64,
    pub seed: u64,
    pub report: Option<MetricsReport>,
    pub chosen: ChosenParams,
    pub error: Option<String>,
    pub fit_seconds: f64,
    pub leak_free: bool,
}

/// Mean and sample standard deviation of each metric over the seeds that
/// succeeded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub method: Method,
    pub value: f64,
    pub n_ok: usize,
    pub n_failed: usize,
    pub mean: [f64; 5],
    pub std: [f64; 5],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignResult {
    pub vary: Vary,
    pub raw: Vec<RawRow>,
    pub aggregate: Vec<AggregateRow>,
    pub failures: usize,
}

impl CampaignResult {
    pub fn find(&self, method: Method, value: f64) -> Option<&AggregateRow> {
        self.aggregate.iter().find(|a| a.method == method && a.value == value)
    }

    pub fn raw_for(&self, method: Method, value: f64) -> impl Iterator<Item = &RawRow> {
        self.raw.iter().filter(move |r| r.method == method && r.value == value)
    }
}

fn run_cell(c: &ExperimentCampaign, value: f64, seed: u64) -> Vec<RawRow> {
    let fail = |e: &Error| -> Vec<RawRow> {
        c.methods
            .iter()
            .map(|&method| RawRow {
                method,
                value,
                seed,
                report: None,
                chosen: ChosenParams::default(),
                error: Some(e.to_string()),
                fit_seconds: 0.0,
                leak_free: true,
            })
            .collect()
    };
    let (panel, split, grid) = match c.cell(value, seed) {
        Ok(x) => x,
        Err(e) => return fail(&e),
    };
    c.methods
        .iter()
        .map(|&method| match run_algorithm1(&panel, &split, &grid, method) {
            Ok(o) => RawRow {
                method,
                value,
                seed,
                report: Some(o.report),
                chosen: o.chosen,
                error: None,
                fit_seconds: o.fit_seconds,
                leak_free: o.leaks.is_clean(),
            },
            Err(e) => {
                log::warn!("{method} failed at {}={value}, seed {seed}: {e}", c.vary);
                RawRow {
                    method,
                    value,
                    seed,
                    report: None,
                    chosen: ChosenParams::default(),
                    error: Some(e.to_string()),
                    fit_seconds: 0.0,
                    leak_free: true,
                }
            }
        })
        .collect()
}

/// Large dense eigendecompositions overflow the default 2 MiB worker stack.
const WORKER_STACK: usize = 256 << 20;

/// Runs every (value, seed) cell in parallel and aggregates per
/// (method, value). Failed cells are recorded, not fatal.
pub fn run_campaign(c: &ExperimentCampaign) -> Result<CampaignResult> {
    c.validate()?;
    let cells: Vec<(f64, u64)> = c.values.iter().flat_map(|&v| c.seeds.iter().map(move |&s| (v, s))).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .stack_size(WORKER_STACK)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    let mut raw: Vec<RawRow> =
        pool.install(|| cells.par_iter().flat_map_iter(|&(v, s)| run_cell(c, v, s)).collect());
    raw.sort_by(|a, b| {
        a.method.cmp(&b.method).then(a.value.total_cmp(&b.value)).then(a.seed.cmp(&b.seed))
    });
    let failures = raw.iter().filter(|r| r.report.is_none()).count();
    Ok(CampaignResult { vary: c.vary, aggregate: aggregate(&raw), raw, failures })
}

/// Mean and sample standard deviation per (method, value), sorted.
pub fn aggregate(raw: &[RawRow]) -> Vec<AggregateRow> {
    let mut groups: BTreeMap<(Method, u64), (f64, Vec<[f64; 5]>, usize)> = BTreeMap::new();
    for r in raw {
        let key = (r.method, ordered_bits(r.value));
        let entry = groups.entry(key).or_insert((r.value, Vec::new(), 0));
        match &r.report {
            Some(rep) => entry.1.push(rep.values()),
            None => entry.2 += 1,
        }
    }
    groups
        .into_iter()
        .map(|((method, _), (value, rows, n_failed))| {
            let n = rows.len();
            let mut mean = [f64::NAN; 5];
            let mut std = [f64::NAN; 5];
            for j in 0..5 {
                if n > 0 {
                    mean[j] = rows.iter().map(|r| r[j]).sum::<f64>() / n as f64;
                }
                if n > 1 {
                    std[j] = (rows.iter().map(|r| (r[j] - mean[j]).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
                }
            }
            AggregateRow { method, value, n_ok: n, n_failed, mean, std }
        })
        .collect()
}

/// Bit pattern that sorts like the float for non-negative and negative
/// values alike.
fn ordered_bits(v: f64) -> u64 {
    let b = v.to_bits();
    if b >> 63 == 1 {
        !b
    } else {
        b | (1 << 63)
    }
}
