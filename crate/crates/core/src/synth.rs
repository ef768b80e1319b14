//! Synthetic forecast panels with controllable member drift.
//!
//! The ground truth is a noisy sine. Each member adds Gaussian error with
//! its own bias and spread, drawn once per experiment. Drift is layered on
//! top either as a linear-in-time ramp of a per-member Gaussian shift, or as
//! the same shift switched on per step by a Bernoulli gate.
//!
//! Every stage and member draws from its own ChaCha stream derived from the
//! seed, so adding members leaves earlier members' draws untouched.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::panel::ForecastPanel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum DriftKind {
    #[default]
    None,
    Gaussian,
    Bernoulli,
}

impl std::str::FromStr for DriftKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" => Ok(DriftKind::None),
            "gaussian" => Ok(DriftKind::Gaussian),
            "bernoulli" => Ok(DriftKind::Bernoulli),
            other => Err(Error::InvalidParameter(format!("unknown drift kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub horizon: usize,
    pub members: usize,
    pub period: f64,
    pub noise_sd: f64,
    /// Member error bias is drawn from `Uniform(bias_range)`.
    pub bias_range: (f64, f64),
    /// Member error spread is `|s|` with `s ~ Uniform(sd_range)`.
    pub sd_range: (f64, f64),
    pub drift: DriftKind,
    /// Drift bias per member is drawn from `N(0, sigma_drift)`.
    pub sigma_drift: f64,
    /// Drift spread per member is drawn from `Uniform(0, s_drift)`.
    pub s_drift: f64,
    /// Per-step probability that the drift term is switched on (Bernoulli drift).
    pub p_drift: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            horizon: 4000,
            members: 10,
            period: 500.0,
            noise_sd: 0.1,
            bias_range: (-0.5, 0.5),
            sd_range: (-0.5, 0.5),
            drift: DriftKind::None,
            sigma_drift: 0.5,
            s_drift: 0.5,
            p_drift: 0.5,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.horizon == 0 {
            return bad("horizon must be at least 1".into());
        }
        if self.members == 0 {
            return bad("at least one member is required".into());
        }
        if !(self.period > 0.0 && self.period.is_finite()) {
            return bad(format!("period {} must be positive", self.period));
        }
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return bad(format!("noise_sd {} must be non-negative", self.noise_sd));
        }
        for (name, (lo, hi)) in [("bias_range", self.bias_range), ("sd_range", self.sd_range)] {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return bad(format!("{name} ({lo}, {hi}) is not an ordered finite interval"));
            }
        }
        for (name, v) in [
            ("sigma_drift", self.sigma_drift),
            ("s_drift", self.s_drift),
            ("p_drift", self.p_drift),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} = {v} outside [0, 1]"));
            }
        }
        Ok(())
    }
}

const STREAM_GROUND_TRUTH: u64 = 1;
const STREAM_MEMBER_PARAMS: u64 = 2;
const STREAM_MEMBER_NOISE: u64 = 3;
const STREAM_DRIFT_PARAMS: u64 = 4;
const STREAM_DRIFT_NOISE: u64 = 5;
const STREAM_DRIFT_GATE: u64 = 6;

fn stream(seed: u64, stage: u64, member: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((stage << 32) | member as u64);
    rng
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.gen::<f64>()
}

fn normal(rng: &mut ChaCha8Rng, mean: f64, sd: f64) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    mean + sd * z
}

/// `sin(2π·x)` with the argument reduced to a quarter period first, so
/// quarter points land exactly on 0 and ±1.
fn sin_turns(x: f64) -> f64 {
    let r = x - x.floor();
    let tau = std::f64::consts::TAU;
    if r < 0.25 {
        (tau * r).sin()
    } else if r < 0.5 {
        (tau * (0.5 - r)).sin()
    } else if r < 0.75 {
        -(tau * (r - 0.5)).sin()
    } else {
        -(tau * (1.0 - r)).sin()
    }
}

/// `y(t) = sin(2πt / period) + ε(t)` for `t = 1..=T`.
pub fn gen_ground_truth(cfg: &SynthConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let mut rng = stream(cfg.seed, STREAM_GROUND_TRUTH, 0);
    Ok((1..=cfg.horizon)
        .map(|t| sin_turns(t as f64 / cfg.period) + normal(&mut rng, 0.0, cfg.noise_sd))
        .collect())
}

/// Per-member error distribution parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorParams {
    pub bias: Vec<f64>,
    pub sd: Vec<f64>,
}

/// Members' forecasts before drift, row-major `T × m`.
#[derive(Debug, Clone, PartialEq)]
pub struct Members {
    pub forecasts: Vec<f64>,
    pub params: ErrorParams,
}

pub fn gen_members(cfg: &SynthConfig, y: &[f64]) -> Result<Members> {
    cfg.validate()?;
    let m = cfg.members;
    let t_len = y.len();
    let mut forecasts = vec![0.0; t_len * m];
    let mut params = ErrorParams {
        bias: Vec::with_capacity(m),
        sd: Vec::with_capacity(m),
    };
    for k in 0..m {
        let mut prng = stream(cfg.seed, STREAM_MEMBER_PARAMS, k);
        let b = uniform(&mut prng, cfg.bias_range.0, cfg.bias_range.1);
        // A spread drawn below zero is used by magnitude.
        let s = uniform(&mut prng, cfg.sd_range.0, cfg.sd_range.1).abs();
        params.bias.push(b);
        params.sd.push(s);
        let mut nrng = stream(cfg.seed, STREAM_MEMBER_NOISE, k);
        for (t, &yt) in y.iter().enumerate() {
            forecasts[t * m + k] = yt + normal(&mut nrng, b, s);
        }
    }
    Ok(Members { forecasts, params })
}

/// Drift parameters, plus the gate pattern for Bernoulli drift (row-major).
#[derive(Debug, Clone, PartialEq)]
pub struct Drift {
    pub forecasts: Vec<f64>,
    pub params: ErrorParams,
    pub gates: Option<Vec<bool>>,
}

fn drift_params(cfg: &SynthConfig, k: usize) -> (f64, f64) {
    let mut rng = stream(cfg.seed, STREAM_DRIFT_PARAMS, k);
    let b = normal(&mut rng, 0.0, cfg.sigma_drift);
    let s = uniform(&mut rng, 0.0, cfg.s_drift);
    (b, s)
}

/// `X_k(t) = X̃_k(t) + (t/T)·drift_k(t)` with `drift_k(t) ~ N(b′_k, σ′_k)`.
pub fn add_gaussian_drift(cfg: &SynthConfig, base: &[f64]) -> Result<Drift> {
    cfg.validate()?;
    let m = cfg.members;
    if base.len() % m != 0 {
        return Err(Error::DimensionMismatch {
            what: "forecast cell count (multiple of members)",
            expected: base.len() / m * m,
            found: base.len(),
        });
    }
    let t_len = base.len() / m;
    let mut out = base.to_vec();
    let mut params = ErrorParams {
        bias: Vec::with_capacity(m),
        sd: Vec::with_capacity(m),
    };
    for k in 0..m {
        let (b, s) = drift_params(cfg, k);
        params.bias.push(b);
        params.sd.push(s);
        let mut rng = stream(cfg.seed, STREAM_DRIFT_NOISE, k);
        for t in 0..t_len {
            let ramp = (t + 1) as f64 / cfg.horizon as f64;
            out[t * m + k] += ramp * normal(&mut rng, b, s);
        }
    }
    Ok(Drift {
        forecasts: out,
        params,
        gates: None,
    })
}

/// `X_k(t) = X̃_k(t) + g_k(t)·drift_k(t)` with `g_k(t) ~ Bernoulli(p_drift)`.
pub fn add_bernoulli_drift(cfg: &SynthConfig, base: &[f64]) -> Result<Drift> {
    cfg.validate()?;
    let m = cfg.members;
    let t_len = base.len() / m;
    let mut out = base.to_vec();
    let mut gates = vec![false; base.len()];
    let mut params = ErrorParams {
        bias: Vec::with_capacity(m),
        sd: Vec::with_capacity(m),
    };
    for k in 0..m {
        let (b, s) = drift_params(cfg, k);
        params.bias.push(b);
        params.sd.push(s);
        let mut noise = stream(cfg.seed, STREAM_DRIFT_NOISE, k);
        let mut gate = stream(cfg.seed, STREAM_DRIFT_GATE, k);
        for t in 0..t_len {
            let on = gate.gen::<f64>() < cfg.p_drift;
            let d = normal(&mut noise, b, s);
            if on {
                out[t * m + k] += d;
                gates[t * m + k] = true;
            }
        }
    }
    Ok(Drift {
        forecasts: out,
        params,
        gates: Some(gates),
    })
}

/// A generated panel with the parameters that produced it.
#[derive(Debug, Clone)]
pub struct SynthPanel {
    pub panel: ForecastPanel,
    pub member_params: ErrorParams,
    pub drift: Option<Drift>,
}

/// Ground truth, members and the configured drift, assembled into a panel
/// with timestamps `1..=T` and lead time 1.
pub fn generate(cfg: &SynthConfig) -> Result<SynthPanel> {
    let y = gen_ground_truth(cfg)?;
    let members = gen_members(cfg, &y)?;
    let drift = match cfg.drift {
        DriftKind::None => None,
        DriftKind::Gaussian => Some(add_gaussian_drift(cfg, &members.forecasts)?),
        DriftKind::Bernoulli => Some(add_bernoulli_drift(cfg, &members.forecasts)?),
    };
    let forecasts = drift.as_ref().map_or_else(|| members.forecasts.clone(), |d| d.forecasts.clone());
    let names = (1..=cfg.members).map(|k| format!("member_{k}")).collect();
    let panel = ForecastPanel::new(
        (1..=cfg.horizon as i64).collect(),
        forecasts,
        y,
        names,
        None,
        1,
    )?;
    Ok(SynthPanel {
        panel,
        member_params: members.params,
        drift,
    })
}
