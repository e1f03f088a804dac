use rayon::prelude::*;

use super::config::{SimConfig, DEFAULT_CCDF_GAMMA};
use super::engine::{CellSample, Link};
use super::record::{Metric, MetricRecord};
use crate::error::{Error, Result};
use crate::estimate::SelectionMode;
use crate::nonlinear::{ccdf_crossing, empirical_ccdf, gcc_compand, GccParams};
use crate::ofdm::{map_bits, oversampled_inverse, papr_db, Constellation, FrameConfig};
use crate::rng::{stream, stream_rng};
use rand::Rng;

pub const WORKERS_ENV: &str = "DACE_SIM_WORKERS";

/// Worker cap from `DACE_SIM_WORKERS`; unset, unparsable or 0 means one
/// worker per available core.
pub fn worker_count() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Maps `f` over `0..n` on `workers` threads, results in index order.
pub(crate) fn par_map<T, F>(n: u64, workers: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    if workers <= 1 {
        return (0..n).map(f).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {workers} workers: {e}")))?;
    pool.install(|| (0..n).into_par_iter().map(f).collect())
}

/// Per-trial samples of one (estimator, scheme, SNR, pilot count) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSamples {
    pub scheme: SelectionMode,
    pub estimator: super::config::Estimator,
    pub snr_db: f64,
    pub n_pilots: usize,
    pub samples: Vec<CellSample>,
}

impl PointSamples {
    pub fn trials(&self) -> usize {
        self.samples.len()
    }

    /// `Σ‖ĥ − h‖² / Σ‖h‖²` over trials and antenna pairs.
    pub fn nmse(&self) -> f64 {
        let (e, p) = self.samples.iter().fold((0.0, 0.0), |(e, p), s| (e + s.err, p + s.energy));
        e / p
    }

    pub fn ber(&self) -> f64 {
        let (e, t) = self.bit_totals();
        e as f64 / t as f64
    }

    pub fn ser(&self) -> f64 {
        let (e, t) = self
            .samples
            .iter()
            .fold((0u64, 0u64), |(e, t), s| (e + s.counts.symbol_errors, t + s.counts.total_symbols));
        e as f64 / t as f64
    }

    fn bit_totals(&self) -> (u64, u64) {
        self.samples
            .iter()
            .fold((0u64, 0u64), |(e, t), s| (e + s.counts.bit_errors, t + s.counts.total_bits))
    }

    /// Fraction of trials whose own NMSE is below `target`.
    pub fn success_fraction(&self, target: f64) -> f64 {
        let hits = self.samples.iter().filter(|s| s.err / s.energy < target).count();
        hits as f64 / self.samples.len() as f64
    }
}

/// Mean and standard error of a paired per-trial difference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairedDiff {
    pub mean: f64,
    pub std_err: f64,
}

fn paired(d: &[f64]) -> PairedDiff {
    let n = d.len() as f64;
    let mean = d.iter().sum::<f64>() / n;
    let var = if d.len() > 1 {
        d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    PairedDiff { mean, std_err: (var / n).sqrt() }
}

/// `nmse(a) − nmse(b)` as a paired per-trial statistic. Each trial's error
/// difference is divided by the mean channel energy, so the mean equals the
/// difference of the two ratio-of-sums NMSE values.
pub fn paired_nmse_diff(a: &PointSamples, b: &PointSamples) -> PairedDiff {
    let mean_energy = a.samples.iter().map(|s| s.energy).sum::<f64>() / a.samples.len() as f64;
    let d: Vec<f64> = a.samples.iter().zip(&b.samples).map(|(x, y)| (x.err - y.err) / mean_energy).collect();
    paired(&d)
}

/// `ber(a) − ber(b)` as a paired per-trial statistic.
pub fn paired_ber_diff(a: &PointSamples, b: &PointSamples) -> PairedDiff {
    let d: Vec<f64> = a
        .samples
        .iter()
        .zip(&b.samples)
        .map(|(x, y)| (x.counts.bit_errors as f64 - y.counts.bit_errors as f64) / x.counts.total_bits.max(1) as f64)
        .collect();
    paired(&d)
}

/// Records plus the per-trial samples behind them.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub records: Vec<MetricRecord>,
    pub points: Vec<PointSamples>,
    /// Non-fatal notes, e.g. rounded pilot combs.
    pub warnings: Vec<String>,
}

impl SweepResult {
    pub fn point(&self, scheme: SelectionMode, estimator: super::config::Estimator, snr_db: f64) -> Option<&PointSamples> {
        self.points
            .iter()
            .find(|p| p.scheme == scheme && p.estimator == estimator && p.snr_db == snr_db)
    }

    pub fn point_at_pilots(&self, scheme: SelectionMode, estimator: super::config::Estimator, n_pilots: usize) -> Option<&PointSamples> {
        self.points
            .iter()
            .find(|p| p.scheme == scheme && p.estimator == estimator && p.n_pilots == n_pilots)
    }
}

fn base_record(cfg: &SimConfig, frame: &FrameConfig, metric: Metric, scheme: &str, estimator: &str) -> MetricRecord {
    MetricRecord {
        metric,
        scheme: scheme.to_string(),
        estimator: estimator.to_string(),
        modulation: cfg.modulation,
        n_tx: frame.n_tx(),
        n_rx: frame.n_rx(),
        n_subcarriers: frame.n_subcarriers(),
        n_pilots: frame.n_pilots(),
        n_reliable: cfg.n_reliable,
        gamma: cfg.gamma,
        snr_db: None,
        x: 0.0,
        y: 0.0,
        trials: cfg.trials,
        seed: cfg.seed,
    }
}

/// Runs every trial at every SNR of `snr_grid` and regroups the samples per cell.
fn collect_points(cfg: &SimConfig, frame: FrameConfig, snr_grid: &[f64], count_bits: bool, workers: usize) -> Result<Vec<PointSamples>> {
    let n_pilots = frame.n_pilots();
    let link = Link::new(cfg, frame)?;
    let per_trial = par_map(cfg.trials as u64, workers, |trial| link.run_trial(trial, snr_grid, count_bits))?;
    let mut points = Vec::with_capacity(per_trial.first().map_or(0, Vec::len));
    let mut cell = 0;
    for &snr_db in snr_grid {
        for &estimator in &cfg.estimators {
            for &scheme in &cfg.schemes {
                points.push(PointSamples {
                    scheme,
                    estimator,
                    snr_db,
                    n_pilots,
                    samples: per_trial.iter().map(|t| t[cell]).collect(),
                });
                cell += 1;
            }
        }
    }
    Ok(points)
}

fn sweep(cfg: &SimConfig, count_bits: bool, workers: usize) -> Result<SweepResult> {
    cfg.validate()?;
    let frame = cfg.frame()?;
    let points = collect_points(cfg, frame.clone(), &cfg.snr_grid, count_bits, workers)?;
    let mut records = Vec::new();
    for p in &points {
        let metrics: &[(Metric, f64)] = if count_bits {
            &[(Metric::Ber, p.ber()), (Metric::Ser, p.ser())]
        } else {
            &[(Metric::Nmse, p.nmse())]
        };
        for &(metric, y) in metrics {
            records.push(MetricRecord {
                snr_db: Some(p.snr_db),
                x: p.snr_db,
                y,
                ..base_record(cfg, &frame, metric, p.scheme.name(), p.estimator.name())
            });
        }
    }
    Ok(SweepResult { records, points, warnings: comb_warning(&frame).into_iter().collect() })
}

fn comb_warning(frame: &FrameConfig) -> Option<String> {
    (!frame.is_equispaced()).then(|| {
        format!(
            "{} pilots x {} antennas do not divide {} tones; pilot indices rounded to the nearest equispaced comb",
            frame.n_pilots(),
            frame.n_tx(),
            frame.n_subcarriers()
        )
    })
}

/// NMSE against SNR for every configured estimator and scheme.
pub fn mse_sweep(cfg: &SimConfig, workers: usize) -> Result<SweepResult> {
    sweep(cfg, false, workers)
}

/// BER and SER against SNR for every configured estimator and scheme.
pub fn ber_sweep(cfg: &SimConfig, workers: usize) -> Result<SweepResult> {
    sweep(cfg, true, workers)
}

pub fn run_mse_sweep(cfg: &SimConfig) -> Result<Vec<MetricRecord>> {
    Ok(mse_sweep(cfg, worker_count())?.records)
}

pub fn run_ber_sweep(cfg: &SimConfig) -> Result<Vec<MetricRecord>> {
    Ok(ber_sweep(cfg, worker_count())?.records)
}

/// Percentage of trials meeting `target_mse` at `fixed_snr_db`, per pilot count.
pub fn success_rate_sweep(cfg: &SimConfig, pilot_grid: &[usize], workers: usize) -> Result<SweepResult> {
    cfg.validate()?;
    if pilot_grid.is_empty() {
        return Err(Error::Config("pilot grid is empty".into()));
    }
    let mut records = Vec::new();
    let mut points = Vec::new();
    let mut warnings = Vec::new();
    for &np in pilot_grid {
        let frame = cfg.frame_with_pilots(np)?;
        if cfg.schemes.iter().any(|&s| s != SelectionMode::PilotOnly) && cfg.n_reliable > frame.n_data() {
            return Err(Error::Config(format!("{} reliable carriers exceed {} data tones", cfg.n_reliable, frame.n_data())));
        }
        warnings.extend(comb_warning(&frame));
        let pts = collect_points(cfg, frame.clone(), &[cfg.fixed_snr_db], false, workers)?;
        for p in &pts {
            records.push(MetricRecord {
                snr_db: Some(p.snr_db),
                x: np as f64,
                y: 100.0 * p.success_fraction(cfg.target_mse),
                ..base_record(cfg, &frame, Metric::SuccessRate, p.scheme.name(), p.estimator.name())
            });
        }
        points.extend(pts);
    }
    Ok(SweepResult { records, points, warnings })
}

pub fn run_success_rate(cfg: &SimConfig, pilot_grid: &[usize]) -> Result<Vec<MetricRecord>> {
    Ok(success_rate_sweep(cfg, pilot_grid, worker_count())?.records)
}

/// PAPR samples and CCDF curves of plain and companded OFDM.
#[derive(Debug, Clone, PartialEq)]
pub struct CcdfResult {
    pub records: Vec<MetricRecord>,
    pub gamma: f64,
    pub thresholds: Vec<f64>,
    pub plain: Vec<f64>,
    pub companded: Vec<f64>,
}

impl CcdfResult {
    /// PAPR threshold where each curve crosses `level`: `(plain, companded)`.
    pub fn crossings(&self, level: f64) -> (Option<f64>, Option<f64>) {
        (
            ccdf_crossing(&self.thresholds, &self.plain, level),
            ccdf_crossing(&self.thresholds, &self.companded, level),
        )
    }
}

/// CCDF of the per-symbol PAPR over `n_symbols` random all-data OFDM symbols
/// of the configured size and modulation. Companding uses the configured
/// exponent, or 2.0 when companding is off.
pub fn ccdf_sweep(cfg: &SimConfig, n_symbols: usize, papr0_grid: &[f64], workers: usize) -> Result<CcdfResult> {
    if papr0_grid.is_empty() {
        return Err(Error::Input("PAPR threshold grid is empty".into()));
    }
    if n_symbols == 0 {
        return Err(Error::Config("need at least one symbol".into()));
    }
    if cfg.n_subcarriers == 0 || !cfg.n_subcarriers.is_power_of_two() {
        return Err(Error::Config(format!("{} subcarriers is not a power of two", cfg.n_subcarriers)));
    }
    if cfg.oversample == 0 || !cfg.oversample.is_power_of_two() {
        return Err(Error::Config(format!("oversampling factor {} is not a power of two", cfg.oversample)));
    }
    let gamma = cfg.gamma.unwrap_or(DEFAULT_CCDF_GAMMA);
    GccParams::new(gamma, 1.0)?;
    let c = Constellation::new(cfg.modulation);
    let n = cfg.n_subcarriers;
    let pairs = par_map(n_symbols as u64, workers, |sym| {
        let mut rng = stream_rng(cfg.seed, sym, stream::DATA);
        let bits: Vec<u8> = (0..n * c.bits_per_symbol()).map(|_| rng.random_range(0..2u8)).collect();
        let x = map_bits(&bits, &c)?;
        let s = oversampled_inverse(&x, cfg.oversample)?;
        // papr is invariant to the normalization constant
        let comp = gcc_compand(&s, &GccParams::new(gamma, 1.0)?);
        Ok((papr_db(&s)?, papr_db(&comp)?))
    })?;
    let plain_papr: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let comp_papr: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let plain = empirical_ccdf(&plain_papr, papr0_grid)?;
    let companded = empirical_ccdf(&comp_papr, papr0_grid)?;
    let mut records = Vec::with_capacity(2 * papr0_grid.len());
    let frame_like = |gamma: Option<f64>, scheme: &str| MetricRecord {
        metric: Metric::Ccdf,
        scheme: scheme.to_string(),
        estimator: "none".into(),
        modulation: cfg.modulation,
        n_tx: 1,
        n_rx: 1,
        n_subcarriers: n,
        n_pilots: 0,
        n_reliable: 0,
        gamma,
        snr_db: None,
        x: 0.0,
        y: 0.0,
        trials: n_symbols,
        seed: cfg.seed,
    };
    for (curve, gamma, name) in [(&plain, None, "plain"), (&companded, Some(gamma), "gcc")] {
        for (&x, &y) in papr0_grid.iter().zip(curve.iter()) {
            records.push(MetricRecord { x, y, ..frame_like(gamma, name) });
        }
    }
    Ok(CcdfResult { records, gamma, thresholds: papr0_grid.to_vec(), plain, companded })
}

pub fn run_ccdf(cfg: &SimConfig, n_symbols: usize, papr0_grid: &[f64]) -> Result<Vec<MetricRecord>> {
    Ok(ccdf_sweep(cfg, n_symbols, papr0_grid, worker_count())?.records)
}
