//! Train/validate/test driver, synthetic campaigns, and their artifacts.

mod algorithm;
mod audit;
mod campaign;
mod output;
mod timing;

pub use algorithm::{run_algorithm1, run_backtest, ChosenParams, GridPoint, GridSpec, Method, MethodOutcome};
pub use audit::{check_accesses, Access, AuditedTargets, LeakReport, Phase, StandardizedView};
pub use campaign::{aggregate, run_campaign, AggregateRow, CampaignResult, ExperimentCampaign, RawRow, Vary};
pub use output::{
    write_backtest_csv, write_backtest_timing_csv, write_chosen_json, write_raw_csv, write_results_csv, write_timing_csv, write_weights_csv,
    SCHEMA_VERSION,
};
pub use timing::{timing_probe, TimingProbe, TimingRecord};
