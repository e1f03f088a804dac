//! Monte Carlo experiments and CSV output.
//!
//! Trials are independent: each draws its data, channel and noise from
//! streams keyed by `(seed, trial)`, and every scheme in a sweep sees the
//! same draws. Results are gathered in trial order, so the output does not
//! depend on the number of workers.

mod complexity;
mod config;
mod engine;
mod record;
mod sweep;

pub use complexity::{complexity_probe, fit_n_log_n, run_complexity_probe, ProbePoint, ProbeResult};
pub use config::{parse_mimo, parse_snr_range, parse_switch, Estimator, Prior, SimConfig, DEFAULT_CCDF_GAMMA};
pub use engine::CellSample;
pub use record::{to_csv_string, write_csv, Metric, MetricRecord, CSV_HEADER};
pub use sweep::{
    ber_sweep, ccdf_sweep, mse_sweep, paired_ber_diff, paired_nmse_diff, run_ber_sweep, run_ccdf, run_mse_sweep,
    run_success_rate, success_rate_sweep, worker_count, CcdfResult, PairedDiff, PointSamples, SweepResult,
    WORKERS_ENV,
};
