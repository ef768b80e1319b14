//! Lagged-error contexts `Z_t`.

use crate::error::{Error, Result};
use crate::panel::{ForecastPanel, TargetView};

/// Concatenated member errors `X_s − y_s·e` over the `τ` most recent steps
/// usable at row `t`, oldest first. With lead time `k` those are the steps
/// `t−k−τ+1 ..= t−k`. Steps before the start of `t`'s series are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorContext {
    pub values: Vec<f64>,
    /// How many of the `τ` slots were padded.
    pub padded: usize,
}

impl ErrorContext {
    pub fn is_fully_padded(&self, tau: usize) -> bool {
        self.padded == tau
    }
}

fn check(panel: &ForecastPanel, t: usize, tau: usize, lead: usize) -> Result<()> {
    if t >= panel.len() {
        return Err(Error::InvalidParameter(format!(
            "row {t} outside panel of {} rows",
            panel.len()
        )));
    }
    if tau == 0 {
        return Err(Error::InvalidParameter("context window must be at least 1".into()));
    }
    if lead == 0 {
        return Err(Error::InvalidParameter("lead time must be at least 1".into()));
    }
    Ok(())
}

/// Writes `Z_t` into `out` (length `m·τ`), reading targets through `targets`.
/// Returns the number of padded slots.
pub(crate) fn fill_context(
    panel: &ForecastPanel,
    targets: &dyn TargetView,
    t: usize,
    tau: usize,
    lead: usize,
    out: &mut [f64],
) -> usize {
    let m = panel.n_members();
    debug_assert_eq!(out.len(), m * tau);
    let start = panel.series_start(t) as isize;
    let newest = t as isize - lead as isize;
    let mut padded = 0;
    for slot in 0..tau {
        let s = newest - (tau - 1 - slot) as isize;
        let dst = &mut out[slot * m..(slot + 1) * m];
        if s < start {
            dst.fill(0.0);
            padded += 1;
        } else {
            let s = s as usize;
            let y = targets.target(s);
            for (d, x) in dst.iter_mut().zip(panel.row(s)) {
                *d = x - y;
            }
        }
    }
    padded
}

pub fn build_context(panel: &ForecastPanel, t: usize, tau: usize, lead: usize) -> Result<ErrorContext> {
    build_context_from(panel, panel, t, tau, lead)
}

/// As [`build_context`], with ground truth read through `targets`.
pub fn build_context_from(
    panel: &ForecastPanel,
    targets: &dyn TargetView,
    t: usize,
    tau: usize,
    lead: usize,
) -> Result<ErrorContext> {
    check(panel, t, tau, lead)?;
    let mut values = vec![0.0; panel.n_members() * tau];
    let padded = fill_context(panel, targets, t, tau, lead, &mut values);
    if padded == tau {
        log::debug!("row {t}: no history in series, context fully padded");
    }
    Ok(ErrorContext { values, padded })
}

/// Contexts for every row, row-major `T × m·τ`.
pub fn context_matrix(panel: &ForecastPanel, tau: usize, lead: usize) -> Result<Vec<f64>> {
    if panel.is_empty() {
        return Ok(Vec::new());
    }
    check(panel, 0, tau, lead)?;
    let width = panel.n_members() * tau;
    let mut out = vec![0.0; panel.len() * width];
    for t in 0..panel.len() {
        fill_context(panel, panel, t, tau, lead, &mut out[t * width..(t + 1) * width]);
    }
    Ok(out)
}
