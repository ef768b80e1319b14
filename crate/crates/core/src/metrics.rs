//! Point-forecast accuracy and tail-risk metrics.
//!
//! `CVaR_α` is the expected absolute error beyond the α-quantile breakpoint,
//! i.e. `min_τ τ + 1/(αT) Σ max(0, |e_t| − τ)`. The closed form used here is
//! the fractional-tail average of the `αT` largest absolute errors; the
//! brute-force [`cvar_oracle`] evaluates the objective at every breakpoint
//! and exists to check it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Targets with `|y| <` this are rejected by MAPE.
pub const MAPE_GUARD: f64 = 1e-8;

fn check_lengths(y: &[f64], yhat: &[f64]) -> Result<()> {
    if y.len() != yhat.len() {
        return Err(Error::DimensionMismatch {
            what: "prediction length",
            expected: y.len(),
            found: yhat.len(),
        });
    }
    if y.is_empty() {
        return Err(Error::InvalidParameter("metrics need at least one case".into()));
    }
    Ok(())
}

fn abs_errors(y: &[f64], yhat: &[f64]) -> Vec<f64> {
    y.iter().zip(yhat).map(|(a, b)| (a - b).abs()).collect()
}

pub fn mae(y: &[f64], yhat: &[f64]) -> Result<f64> {
    check_lengths(y, yhat)?;
    Ok(abs_errors(y, yhat).iter().sum::<f64>() / y.len() as f64)
}

pub fn rmse(y: &[f64], yhat: &[f64]) -> Result<f64> {
    check_lengths(y, yhat)?;
    let mse = y.iter().zip(yhat).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / y.len() as f64;
    Ok(mse.sqrt())
}

/// Mean absolute percentage error, in percent.
pub fn mape(y: &[f64], yhat: &[f64]) -> Result<f64> {
    check_lengths(y, yhat)?;
    let bad: Vec<usize> = y
        .iter()
        .enumerate()
        .filter(|(_, v)| !(v.abs() >= MAPE_GUARD))
        .map(|(i, _)| i)
        .collect();
    if !bad.is_empty() {
        return Err(Error::MapeGuard { indices: bad });
    }
    let s: f64 = y.iter().zip(yhat).map(|(a, b)| ((a - b) / a).abs()).sum();
    Ok(100.0 * s / y.len() as f64)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("CVaR level {alpha} outside (0, 1]")))
    }
}

/// Closed-form `CVaR_α` of absolute errors.
///
/// With `K = αT` and absolute errors sorted in decreasing order, this is
/// `(Σ_{i<⌊K⌋} e_(i) + (K − ⌊K⌋)·e_(⌊K⌋)) / K`, which reduces to the mean of
/// the `K` largest errors when `K` is integral.
pub fn cvar(y: &[f64], yhat: &[f64], alpha: f64) -> Result<f64> {
    check_lengths(y, yhat)?;
    check_alpha(alpha)?;
    let mut e = abs_errors(y, yhat);
    let k = alpha * e.len() as f64;
    // αT computed in floating point can land a hair off an integer.
    let k_round = k.round();
    let k = if (k - k_round).abs() <= 1e-9 * k_round.max(1.0) { k_round } else { k };
    let whole = (k.floor() as usize).min(e.len());
    if whole == e.len() {
        // full tail; summed in input order so it is bitwise the MAE
        return Ok(e.iter().sum::<f64>() / e.len() as f64);
    }
    e.sort_by(|a, b| b.total_cmp(a));
    let frac = k - whole as f64;
    let mut tail: f64 = e[..whole].iter().sum();
    if frac > 0.0 && whole < e.len() {
        tail += frac * e[whole];
    }
    Ok(tail / k)
}

/// `CVaR_α` by direct minimization of the Rockafellar–Uryasev objective over
/// its breakpoints. Quadratic in `T`; meant as a reference for tests.
pub fn cvar_oracle(y: &[f64], yhat: &[f64], alpha: f64) -> Result<f64> {
    check_lengths(y, yhat)?;
    check_alpha(alpha)?;
    let e = abs_errors(y, yhat);
    let scale = 1.0 / (alpha * e.len() as f64);
    let objective = |tau: f64| tau + scale * e.iter().map(|v| (v - tau).max(0.0)).sum::<f64>();
    Ok(e.iter().map(|&tau| objective(tau)).fold(f64::INFINITY, f64::min))
}

/// One method's scores on one evaluation window. Field order is the
/// serialized column order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub mae: f64,
    pub rmse: f64,
    pub mape_percent: f64,
    pub cvar05: f64,
    pub cvar15: f64,
    pub n_cases: usize,
}

impl MetricsReport {
    pub const FIELDS: [&'static str; 6] = ["mae", "rmse", "mape_percent", "cvar05", "cvar15", "n_cases"];

    pub fn compute(y: &[f64], yhat: &[f64]) -> Result<Self> {
        Ok(Self {
            mae: mae(y, yhat)?,
            rmse: rmse(y, yhat)?,
            mape_percent: mape(y, yhat)?,
            cvar05: cvar(y, yhat, 0.05)?,
            cvar15: cvar(y, yhat, 0.15)?,
            n_cases: y.len(),
        })
    }

    /// Values in [`Self::FIELDS`] order, the count last.
    pub fn values(&self) -> [f64; 5] {
        [self.mae, self.rmse, self.mape_percent, self.cvar05, self.cvar15]
    }

    pub fn get(&self, metric: Metric) -> f64 {
        match metric {
            Metric::Mae => self.mae,
            Metric::Rmse => self.rmse,
            Metric::Mape => self.mape_percent,
            Metric::Cvar05 => self.cvar05,
            Metric::Cvar15 => self.cvar15,
        }
    }

    pub fn csv_header() -> String {
        Self::FIELDS.join(",")
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.mae, self.rmse, self.mape_percent, self.cvar05, self.cvar15, self.n_cases
        )
    }
}

/// Selector for a single scalar metric, e.g. the validation criterion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Mae,
    Rmse,
    Mape,
    Cvar05,
    Cvar15,
}

impl Metric {
    pub const ALL: [Metric; 5] = [Metric::Mae, Metric::Rmse, Metric::Mape, Metric::Cvar05, Metric::Cvar15];

    pub fn evaluate(self, y: &[f64], yhat: &[f64]) -> Result<f64> {
        match self {
            Metric::Mae => mae(y, yhat),
            Metric::Rmse => rmse(y, yhat),
            Metric::Mape => mape(y, yhat),
            Metric::Cvar05 => cvar(y, yhat, 0.05),
            Metric::Cvar15 => cvar(y, yhat, 0.15),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Metric::Mae => "mae",
            Metric::Rmse => "rmse",
            Metric::Mape => "mape",
            Metric::Cvar05 => "cvar05",
            Metric::Cvar15 => "cvar15",
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown metric `{s}`")))
    }
}
