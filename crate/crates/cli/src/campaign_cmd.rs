use std::path::PathBuf;

use adaptive_ensemble::adaptive::SolveMode;
use adaptive_ensemble::panel::SplitSpec;
use adaptive_ensemble::pipeline::{
    run_campaign, timing_probe, write_chosen_json, write_raw_csv, write_results_csv, write_timing_csv,
    ExperimentCampaign, TimingProbe, Vary,
};
use clap::Args;
use serde::{Deserialize, Serialize};

use crate::backtest_cmd::{grid_flags, methods};
use crate::config::{int_list, list, parse, require, seeds};
use crate::error::{CliError, CliResult};
use crate::manifest::OutputDir;
use crate::synth_cmd::synth_config;

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct CampaignArgs {
    /// members, drift, p_drift, window or train_size.
    #[arg(long)]
    pub vary: Option<String>,
    /// Comma-separated values of the varied dimension.
    #[arg(long)]
    pub values: Option<String>,
    /// `N` for seeds 0..N, or a list such as `3,7,10..20`. Required.
    #[arg(long)]
    pub seeds: Option<String>,
    #[arg(long)]
    pub methods: Option<String>,
    #[arg(long = "T", alias = "horizon")]
    pub horizon: Option<usize>,
    #[arg(long = "m", alias = "members")]
    pub members: Option<usize>,
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
    pub train_frac: Option<f64>,
    #[arg(long)]
    pub val_frac: Option<f64>,
    /// Test rows kept at the end of the panel when varying train size.
    #[arg(long)]
    pub test_rows: Option<usize>,
    #[arg(long)]
    pub lambdas: Option<String>,
    #[arg(long)]
    pub taus: Option<String>,
    #[arg(long)]
    pub exp3_windows: Option<String>,
    #[arg(long)]
    pub pa_margins: Option<String>,
    #[arg(long)]
    pub metric: Option<String>,
    #[arg(long)]
    pub mode: Option<String>,
    /// Fit adaptive rules with more parameters than training rows
    /// (default true here; pass `false` to enforce the guard).
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub allow_overparameterized: Option<bool>,
    /// Also time single adaptive fits at these windows on the template.
    #[arg(long)]
    pub timing_taus: Option<String>,
    /// Exit 0 even when some cells failed.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub allow_partial: bool,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

pub fn build(args: &CampaignArgs) -> CliResult<ExperimentCampaign> {
    let vary = parse::<Vary>(&require(&args.vary, "vary")?, "vary")?;
    let values = list::<f64>(&require(&args.values, "values")?, "values")?;
    let seed_list = seeds(&require(&args.seeds, "seeds")?)?;
    let mut c = ExperimentCampaign::synthetic(vary, values, 0);
    c.seeds = seed_list;
    c.methods = methods(args.methods.as_deref())?;
    c.template = synth_config(
        c.template,
        args.horizon,
        args.members,
        args.drift.as_deref(),
        args.sigma_drift,
        args.s_drift,
        args.p_drift,
        args.noise_sd,
        args.period,
    )?;
    let d = c.split;
    c.split = SplitSpec { train_frac: args.train_frac.unwrap_or(d.train_frac), val_frac: args.val_frac.unwrap_or(d.val_frac) };
    if let Some(t) = args.test_rows {
        c.test_rows = t;
    }
    c.grid = grid_flags!(args).apply(c.grid)?;
    c.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(c)
}

pub fn run(args: &CampaignArgs) -> CliResult<()> {
    let out_dir = require(&args.out_dir, "out-dir")?;
    let campaign = build(args)?;
    let timing_taus: Vec<usize> = match &args.timing_taus {
        Some(s) => int_list(s, "timing-taus")?.into_iter().map(|v| v as usize).collect(),
        None => Vec::new(),
    };
    log::info!(
        "campaign over {} = {:?}, {} seeds, methods {:?}",
        campaign.vary,
        campaign.values,
        campaign.seeds.len(),
        campaign.methods
    );
    let res = run_campaign(&campaign)?;
    let train_rows = campaign.split.resolve(campaign.template.horizon)?.train.len();
    let probes = timing_taus
        .iter()
        .map(|&tau| {
            timing_probe(&TimingProbe {
                n: train_rows,
                tau,
                m: campaign.template.members,
                mode: campaign.grid.mode,
                lambda: 0.1,
                seed: campaign.seeds[0],
                repeats: 1,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut out = OutputDir::create(&out_dir)?;
    write_results_csv(&res, out.file("results.csv", false)?)?;
    write_raw_csv(&res, out.file("raw.csv", false)?)?;
    write_chosen_json(&res, out.file("chosen_params.json", false)?)?;
    write_timing_csv(Some(&res), &probes, out.file("timing.csv", true)?)?;
    let seeds = campaign.seeds.clone();
    out.finish("campaign", &campaign, seeds, &[])?;

    println!("{:<16} {:>8} {:>6} {:>10} {:>10}", "method", campaign.vary.name(), "ok", "RMSE", "sd");
    for a in &res.aggregate {
        println!("{:<16} {:>8} {:>6} {:>10.4} {:>10.4}", a.method.name(), a.value, a.n_ok, a.mean[1], a.std[1]);
    }
    if campaign.grid.mode == SolveMode::Faithful && campaign.grid.lambdas.contains(&0.0) {
        log::info!("lambda = 0 skipped for faithful adaptive ridge");
    }
    if res.failures > 0 {
        let msg = format!("{} of {} cells failed; see raw.csv", res.failures, res.raw.len());
        eprintln!("{msg}");
        if !args.allow_partial {
            return Err(CliError::Partial(msg));
        }
    }
    Ok(())
}
