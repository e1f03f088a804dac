//! Instrumented selection cost of transmitter-side and receiver-side schemes.
//!
//! Both sides are charged for what they must do beyond ordinary OFDM
//! modulation and pilot-only estimation before the re-estimate can start:
//!
//! * transmitter: the peak search and scoring of every data tone, ranking,
//!   and, at the receiver, equalizing and slicing the `k` signalled tones;
//! * receiver: equalizing every data tone, the two-nearest-point search and
//!   margin of each, and ranking.
//!
//! A one-tap equalization `conj(h)·y / (|h|² + σ²)` costs 12 flops; a
//! distance to one constellation point costs 5 flops and one comparison.

use super::config::{Estimator, SimConfig};
use super::engine::Link;
use super::record::{Metric, MetricRecord};
use super::sweep::worker_count;
use crate::error::{Error, Result};
use crate::estimate::{
    select_peak_carriers_counted, select_reliable_rx_counted, OpCounter, OpTally, RankStrategy, Selection,
    SelectionMode,
};
use crate::ofdm::{FrameConfig, Modulation};

const EQUALIZE_FLOPS: u64 = 12;
const DISTANCE_FLOPS: u64 = 5;
/// Pilot spacing used for every probed size.
const PILOT_STRIDE: usize = 16;

/// Mean operations per frame for one (size, modulation) point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbePoint {
    pub n_subcarriers: usize,
    pub modulation: Modulation,
    pub tx_ops: f64,
    pub tx_ops_partial: f64,
    pub rx_ops: f64,
    pub rx_ops_partial: f64,
}

impl ProbePoint {
    /// Receiver over transmitter cost with full sorting.
    pub fn ratio(&self) -> f64 {
        self.rx_ops / self.tx_ops
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeResult {
    pub records: Vec<MetricRecord>,
    pub points: Vec<ProbePoint>,
}

impl ProbeResult {
    pub fn point(&self, n: usize, m: Modulation) -> Option<&ProbePoint> {
        self.points.iter().find(|p| p.n_subcarriers == n && p.modulation == m)
    }
}

fn frame_ops(link: &Link, trial: u64, snr_db: f64, k: usize, strategy: RankStrategy) -> Result<(u64, u64)> {
    let (grid, det) = link.first_pass(trial, snr_db)?;
    let m = link.constellation.order() as u64;
    let sigma2 = 10f64.powf(-snr_db / 10.0);

    let mut tx = OpTally::default();
    let sel = Selection::new(SelectionMode::TxPeakPhaseAlign, k);
    let chosen = select_peak_carriers_counted(&grid, 0, &sel, strategy, &mut tx)?;
    tx.flops(chosen.len() as u64 * (EQUALIZE_FLOPS + DISTANCE_FLOPS * m));
    tx.compares(chosen.len() as u64 * m);

    let mut rx = OpTally::default();
    let data = link.frame.data_indices();
    rx.flops(data.len() as u64 * EQUALIZE_FLOPS);
    select_reliable_rx_counted(&det.equalized[0], data, &link.constellation, sigma2, k, strategy, &mut rx)?;
    Ok((tx.total(), rx.total()))
}

/// Counts selection work over `cfg.trials` SISO frames at `fixed_snr_db` for
/// every size in `probe_sizes` and every modulation, with `N/16` pilots and
/// `N/16` reliable carriers.
pub fn complexity_probe(cfg: &SimConfig, workers: usize) -> Result<ProbeResult> {
    if cfg.probe_sizes.is_empty() {
        return Err(Error::Config("probe_sizes is empty".into()));
    }
    if cfg.trials == 0 {
        return Err(Error::Config("trials must be >= 1".into()));
    }
    let mut points = Vec::new();
    let mut records = Vec::new();
    for &n in &cfg.probe_sizes {
        if n < 2 * PILOT_STRIDE || !n.is_power_of_two() {
            return Err(Error::Config(format!("probe size {n} must be a power of two >= {}", 2 * PILOT_STRIDE)));
        }
        let np = n / PILOT_STRIDE;
        for m in Modulation::ALL {
            let pcfg = SimConfig {
                n_subcarriers: n,
                n_pilots: np,
                n_taps: cfg.n_taps.min(np),
                cp_len: cfg.cp_len.max(cfg.n_taps.min(np)),
                modulation: m,
                n_tx: 1,
                n_rx: 1,
                estimators: vec![Estimator::Ls],
                schemes: vec![SelectionMode::PilotOnly],
                n_reliable: np,
                gamma: None,
                sspa_ibo_db: None,
                ..cfg.clone()
            };
            let frame = FrameConfig::new(n, np, pcfg.cp_len, 1, 1)?;
            let link = Link::new(&pcfg, frame)?;
            let snr = cfg.fixed_snr_db;
            let counts = super::sweep::par_map(cfg.trials as u64, workers, |trial| {
                let full = frame_ops(&link, trial, snr, np, RankStrategy::FullSort)?;
                let part = frame_ops(&link, trial, snr, np, RankStrategy::Partial)?;
                Ok([full.0, part.0, full.1, part.1])
            })?;
            let mut sums = [0u64; 4];
            for c in &counts {
                for (s, v) in sums.iter_mut().zip(c) {
                    *s += v;
                }
            }
            let mean = |i: usize| sums[i] as f64 / cfg.trials as f64;
            let p = ProbePoint {
                n_subcarriers: n,
                modulation: m,
                tx_ops: mean(0),
                tx_ops_partial: mean(1),
                rx_ops: mean(2),
                rx_ops_partial: mean(3),
            };
            let base = MetricRecord {
                metric: Metric::OpCount,
                scheme: String::new(),
                estimator: "none".into(),
                modulation: m,
                n_tx: 1,
                n_rx: 1,
                n_subcarriers: n,
                n_pilots: np,
                n_reliable: np,
                gamma: None,
                snr_db: Some(snr),
                x: n as f64,
                y: 0.0,
                trials: cfg.trials,
                seed: cfg.seed,
            };
            for (scheme, y) in [
                ("tx-peak", p.tx_ops),
                ("tx-peak-partial", p.tx_ops_partial),
                ("rx-rel", p.rx_ops),
                ("rx-rel-partial", p.rx_ops_partial),
            ] {
                records.push(MetricRecord { scheme: scheme.into(), y, ..base.clone() });
            }
            records.push(MetricRecord { metric: Metric::OpRatio, scheme: "measured".into(), y: p.ratio(), ..base.clone() });
            records.push(MetricRecord { metric: Metric::OpRatio, scheme: "model".into(), y: m.order() as f64, ..base });
            points.push(p);
        }
    }
    Ok(ProbeResult { records, points })
}

pub fn run_complexity_probe(cfg: &SimConfig) -> Result<Vec<MetricRecord>> {
    Ok(complexity_probe(cfg, worker_count())?.records)
}

/// Least-squares fit `ops ≈ c·N·log₂N` through the origin; returns `c` and
/// the largest relative deviation of a point from the fitted curve.
pub fn fit_n_log_n(points: &[(usize, f64)]) -> (f64, f64) {
    let basis: Vec<f64> = points.iter().map(|&(n, _)| n as f64 * (n as f64).log2()).collect();
    let num: f64 = basis.iter().zip(points).map(|(b, p)| b * p.1).sum();
    let den: f64 = basis.iter().map(|b| b * b).sum();
    let c = num / den;
    let worst = basis
        .iter()
        .zip(points)
        .map(|(b, p)| (p.1 / (c * b) - 1.0).abs())
        .fold(0.0, f64::max);
    (c, worst)
}
