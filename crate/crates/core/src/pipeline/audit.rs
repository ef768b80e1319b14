//! Access logging for ground-truth reads.

use std::cell::{Cell, RefCell};
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::panel::{ForecastPanel, Standardizer, TargetView};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "phase", rename_all = "snake_case")]
pub enum Phase {
    /// Fitting on train and scoring on validation.
    Selection,
    /// Fitting on train + validation with the chosen hyperparameters.
    Refit,
    /// Producing the forecast for `row`.
    Predict { row: usize },
    /// Computing test metrics after every forecast is made.
    Scoring,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Access {
    pub phase: Phase,
    pub row: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeakReport {
    pub accesses: usize,
    /// Test targets read while fitting or selecting.
    pub early_test_reads: Vec<Access>,
    /// Targets newer than `t − k` read while forecasting row `t`.
    pub future_reads: Vec<Access>,
}

impl LeakReport {
    pub fn is_clean(&self) -> bool {
        self.early_test_reads.is_empty() && self.future_reads.is_empty()
    }

    pub fn merge(&mut self, other: LeakReport) {
        self.accesses += other.accesses;
        self.early_test_reads.extend(other.early_test_reads);
        self.future_reads.extend(other.future_reads);
    }
}

/// A [`TargetView`] over a panel that records every read with the phase it
/// happened in.
pub struct AuditedTargets<'a> {
    panel: &'a ForecastPanel,
    phase: Cell<Phase>,
    log: RefCell<Vec<Access>>,
}

impl<'a> AuditedTargets<'a> {
    pub fn new(panel: &'a ForecastPanel) -> Self {
        Self { panel, phase: Cell::new(Phase::Selection), log: RefCell::new(Vec::new()) }
    }

    pub fn set_phase(&self, phase: Phase) {
        self.phase.set(phase);
    }

    pub fn phase(&self) -> Phase {
        self.phase.get()
    }

    pub fn read_range(&self, range: Range<usize>) -> Vec<f64> {
        range.map(|r| self.target(r)).collect()
    }

    pub fn accesses(&self) -> Vec<Access> {
        self.log.borrow().clone()
    }

    pub fn check(&self, test: &Range<usize>) -> LeakReport {
        check_accesses(&self.log.borrow(), test, self.panel.lead_time())
    }
}

impl TargetView for AuditedTargets<'_> {
    fn target(&self, row: usize) -> f64 {
        self.log.borrow_mut().push(Access { phase: self.phase.get(), row });
        self.panel.target(row)
    }

    fn begin_prediction(&self, row: usize) {
        self.phase.set(Phase::Predict { row });
    }
}

pub fn check_accesses(log: &[Access], test: &Range<usize>, lead: usize) -> LeakReport {
    let mut report = LeakReport { accesses: log.len(), early_test_reads: Vec::new(), future_reads: Vec::new() };
    for &a in log {
        match a.phase {
            Phase::Selection | Phase::Refit if test.contains(&a.row) => report.early_test_reads.push(a),
            Phase::Predict { row } if a.row + lead > row => report.future_reads.push(a),
            _ => {}
        }
    }
    report
}

/// Targets of `inner` on the standardized scale.
pub struct StandardizedView<'a> {
    pub inner: &'a dyn TargetView,
    pub standardizer: Standardizer,
}

impl TargetView for StandardizedView<'_> {
    fn target(&self, row: usize) -> f64 {
        self.standardizer.apply_value(self.inner.target(row))
    }

    fn begin_prediction(&self, row: usize) {
        self.inner.begin_prediction(row);
    }
}
