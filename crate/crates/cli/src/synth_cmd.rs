use std::path::PathBuf;

use adaptive_ensemble::panel::{write_panel, PanelSchema};
use adaptive_ensemble::synth::{generate, DriftKind, SynthConfig};
use clap::Args;
use serde::{Deserialize, Serialize};

use crate::config::{parse, require};
use crate::error::CliResult;
use crate::manifest::OutputDir;

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct SynthArgs {
    /// Number of time steps.
    #[arg(long = "T", alias = "horizon")]
    pub horizon: Option<usize>,
    /// Number of ensemble members.
    #[arg(long = "m", alias = "members")]
    pub members: Option<usize>,
    /// none, gaussian or bernoulli.
    #[arg(long)]
    pub drift: Option<String>,
    #[arg(long)]
    pub sigma_drift: Option<f64>,
    #[arg(long)]
    pub s_drift: Option<f64>,
    #[arg(long)]
    pub p_drift: Option<f64>,
    #[arg(long)]
    pub noise_sd: Option<f64>,
    #[arg(long)]
    pub period: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Directory for panel.csv and manifest.json.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

/// Generator settings from flags over `base`.
pub fn synth_config(
    base: SynthConfig,
    horizon: Option<usize>,
    members: Option<usize>,
    drift: Option<&str>,
    sigma_drift: Option<f64>,
    s_drift: Option<f64>,
    p_drift: Option<f64>,
    noise_sd: Option<f64>,
    period: Option<f64>,
) -> CliResult<SynthConfig> {
    let mut cfg = base;
    if let Some(v) = horizon {
        cfg.horizon = v;
    }
    if let Some(v) = members {
        cfg.members = v;
    }
    if let Some(v) = drift {
        cfg.drift = parse::<DriftKind>(v, "drift")?;
    }
    if let Some(v) = sigma_drift {
        cfg.sigma_drift = v;
    }
    if let Some(v) = s_drift {
        cfg.s_drift = v;
    }
    if let Some(v) = p_drift {
        cfg.p_drift = v;
    }
    if let Some(v) = noise_sd {
        cfg.noise_sd = v;
    }
    if let Some(v) = period {
        cfg.period = v;
    }
    Ok(cfg)
}

pub fn run(args: &SynthArgs) -> CliResult<()> {
    let seed = require(&args.seed, "seed")?;
    let out_dir = require(&args.out_dir, "out-dir")?;
    let mut cfg = synth_config(
        SynthConfig::default(),
        args.horizon,
        args.members,
        args.drift.as_deref(),
        args.sigma_drift,
        args.s_drift,
        args.p_drift,
        args.noise_sd,
        args.period,
    )?;
    cfg.seed = seed;
    let synth = generate(&cfg)?;
    let mut out = OutputDir::create(&out_dir)?;
    write_panel(&synth.panel, out.file("panel.csv", false)?, &PanelSchema::default())?;
    let path = out.path("panel.csv");
    out.finish("synth", &cfg, vec![seed], &[])?;
    println!("wrote {} rows x {} members to {}", synth.panel.len(), synth.panel.n_members(), path.display());
    Ok(())
}
