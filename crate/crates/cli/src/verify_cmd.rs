use std::path::PathBuf;

use adaptive_ensemble::robustcheck::{random_instance, verify_equivalence, EquivalenceReport, Norm, UncertaintySet};
use clap::Args;
use serde::{Deserialize, Serialize};

use crate::config::{list, parse, seeds};
use crate::error::{CliError, CliResult};
use crate::manifest::OutputDir;

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct VerifyArgs {
    /// `residual,regularizer` norms of an induced set, each l1, l2 or linf.
    #[arg(long, conflicts_with = "frobenius")]
    pub norms: Option<String>,
    /// Frobenius set with exponent p (1, 2 or inf).
    #[arg(long)]
    pub frobenius: Option<String>,
    /// Set radius, equal to the regularization weight.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// `N` for instances 0..N, or a list. Default 20.
    #[arg(long)]
    pub seeds: Option<String>,
    /// Random feasible perturbations tried per instance.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub rows: Option<usize>,
    #[arg(long = "m", alias = "members")]
    pub members: Option<usize>,
    #[arg(long)]
    pub tau: Option<usize>,
    /// Directory for verify.json and manifest.json.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Serialize)]
struct Resolved {
    set: String,
    radius: f64,
    seeds: Vec<u64>,
    samples: usize,
    rows: usize,
    members: usize,
    tau: usize,
}

pub fn set_from(args: &VerifyArgs, radius: f64) -> CliResult<UncertaintySet> {
    if let Some(p) = &args.frobenius {
        return Ok(UncertaintySet::frobenius(parse::<Norm>(p, "frobenius")?, radius));
    }
    let norms = list::<Norm>(args.norms.as_deref().unwrap_or("l2,l2"), "norms")?;
    match norms[..] {
        [g, h] => Ok(UncertaintySet::induced(h, g, radius)),
        _ => Err(CliError::Usage("--norms takes exactly two norms: residual,regularizer".into())),
    }
}

pub fn run(args: &VerifyArgs) -> CliResult<()> {
    let radius = args.lambda.unwrap_or(0.1);
    if !(radius >= 0.0 && radius.is_finite()) {
        return Err(CliError::Usage(format!("--lambda must be finite and >= 0, got {radius}")));
    }
    let set = set_from(args, radius)?;
    let seed_list = seeds(args.seeds.as_deref().unwrap_or("20"))?;
    let samples = args.samples.unwrap_or(10_000);
    let (rows, members, tau) = (args.rows.unwrap_or(8), args.members.unwrap_or(2), args.tau.unwrap_or(2));
    let mut reports: Vec<(u64, EquivalenceReport)> = Vec::new();
    for &seed in &seed_list {
        let inst = random_instance(rows, members, tau, seed)?;
        let rep = verify_equivalence(&inst, &set, samples, seed)?;
        println!(
            "{} seed {seed}: {} regularized {:.12} constructive {:.12} worst sampled {:.12} ({} samples, set size {:.3e}{})",
            if rep.passed { "PASS" } else { "FAIL" },
            set.label(),
            rep.regularized,
            rep.constructive,
            rep.sampled_max,
            rep.samples,
            rep.constructive_norm,
            if rep.constructive_norm_exact { "" } else { ", lower bound" }
        );
        reports.push((seed, rep));
    }
    if let Some(dir) = &args.out_dir {
        let mut out = OutputDir::create(dir)?;
        let doc: Vec<serde_json::Value> =
            reports.iter().map(|(s, r)| serde_json::json!({ "seed": s, "report": r })).collect();
        let text = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Usage(e.to_string()))?;
        out.write_text("verify.json", &(text + "\n"))?;
        let resolved = Resolved { set: set.label(), radius, seeds: seed_list.clone(), samples, rows, members, tau };
        out.finish("verify", &resolved, seed_list, &[])?;
    }
    let failed = reports.iter().filter(|(_, r)| !r.passed).count();
    if failed > 0 {
        return Err(CliError::Verification(format!("{failed} of {} instances violated the equivalence", reports.len())));
    }
    Ok(())
}
