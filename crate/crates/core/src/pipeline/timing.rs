//! Wall-clock cost of a single adaptive fit.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::adaptive::{n_params, AdaptiveFitProblem, SolveMode, SolverOptions, SpectralFactor};
use crate::error::{Error, Result};
use crate::panel::Standardizer;
use crate::synth::{generate, DriftKind, SynthConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingProbe {
    /// Training rows.
    pub n: usize,
    pub tau: usize,
    pub m: usize,
    pub mode: SolveMode,
    pub lambda: f64,
    pub seed: u64,
    pub repeats: usize,
}

impl Default for TimingProbe {
    fn default() -> Self {
        Self { n: 3000, tau: 5, m: 10, mode: SolveMode::Squared, lambda: 0.1, seed: 0, repeats: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRecord {
    pub n: usize,
    pub tau: usize,
    pub m: usize,
    pub mode: SolveMode,
    pub params: usize,
    /// Median over repeats.
    pub seconds: f64,
    pub runs: Vec<f64>,
}

/// Times assembly, factorization and one solve on a Gaussian-drift
/// synthetic panel of `n` rows.
pub fn timing_probe(p: &TimingProbe) -> Result<TimingRecord> {
    if p.repeats == 0 || p.n < 2 || p.tau == 0 || p.m == 0 {
        return Err(Error::InvalidParameter("timing probe needs n >= 2, tau >= 1, m >= 1, repeats >= 1".into()));
    }
    let cfg = SynthConfig { horizon: p.n, members: p.m, drift: DriftKind::Gaussian, seed: p.seed, ..SynthConfig::default() };
    let panel = generate(&cfg)?.panel;
    let std_panel = Standardizer::fit(&panel)?.apply(&panel);
    let mut runs = Vec::with_capacity(p.repeats);
    for _ in 0..p.repeats {
        let start = Instant::now();
        let problem = AdaptiveFitProblem::assemble(&std_panel, p.tau, true)?;
        let factor = SpectralFactor::new(&problem)?;
        match p.mode {
            SolveMode::Squared => factor.solve_squared(&problem, p.lambda)?,
            SolveMode::Faithful => factor.solve_faithful(&problem, p.lambda, &SolverOptions::default())?,
        };
        runs.push(start.elapsed().as_secs_f64());
    }
    let mut sorted = runs.clone();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    let seconds = if sorted.len() % 2 == 1 { sorted[mid] } else { 0.5 * (sorted[mid - 1] + sorted[mid]) };
    Ok(TimingRecord { n: p.n, tau: p.tau, m: p.m, mode: p.mode, params: n_params(p.m, p.tau), seconds, runs })
}
