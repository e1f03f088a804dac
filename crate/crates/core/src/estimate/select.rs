//! Reliable-carrier selection strategies.
//!
//! Operation counts for the complexity probe use one unit per real add, sub,
//! mul, div or sqrt and one unit per comparison. Twiddle factors are table
//! lookups and cost nothing; the transmitter's inverse transform is part of
//! ordinary OFDM modulation and is not charged to selection.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::fourier::twiddle;
use crate::error::{Error, Result};
use crate::ofdm::{with_fft, Constellation, Direction, FrequencyGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SelectionMode {
    #[serde(rename = "pilot-only")]
    PilotOnly,
    /// Data tones whose phasor best aligns with the dominant time-domain peak.
    #[serde(rename = "tx-peak")]
    TxPeakPhaseAlign,
    /// Data tones ranked by `|X_n|²`.
    #[serde(rename = "tx-peak-literal")]
    TxPeakLiteral,
    /// Receiver-side ranking by decision margin.
    #[serde(rename = "rx-rel")]
    RxReliability,
    #[serde(rename = "random")]
    RandomCarriers,
}

impl SelectionMode {
    pub const ALL: [SelectionMode; 5] = [
        SelectionMode::PilotOnly,
        SelectionMode::TxPeakPhaseAlign,
        SelectionMode::TxPeakLiteral,
        SelectionMode::RxReliability,
        SelectionMode::RandomCarriers,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SelectionMode::PilotOnly => "pilot-only",
            SelectionMode::TxPeakPhaseAlign => "tx-peak",
            SelectionMode::TxPeakLiteral => "tx-peak-literal",
            SelectionMode::RxReliability => "rx-rel",
            SelectionMode::RandomCarriers => "random",
        }
    }

    /// Stable id used to key scheme-private random streams.
    pub fn id(self) -> u64 {
        match self {
            SelectionMode::PilotOnly => 0,
            SelectionMode::TxPeakPhaseAlign => 1,
            SelectionMode::TxPeakLiteral => 2,
            SelectionMode::RxReliability => 3,
            SelectionMode::RandomCarriers => 4,
        }
    }

    pub fn is_transmitter_side(self) -> bool {
        matches!(self, SelectionMode::TxPeakPhaseAlign | SelectionMode::TxPeakLiteral)
    }
}

impl fmt::Display for SelectionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SelectionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SelectionMode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown scheme '{s}' (pilot-only | tx-peak | tx-peak-literal | rx-rel | random)"
                ))
            })
    }
}

/// A selection strategy with its carrier budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Selection {
    pub mode: SelectionMode,
    pub count: usize,
    /// Extra requirement `score > threshold` for transmitter-side modes.
    pub threshold: Option<f64>,
}

impl Selection {
    pub fn new(mode: SelectionMode, count: usize) -> Self {
        Selection { mode, count, threshold: None }
    }
}

/// Receives operation counts from instrumented selection routines.
pub trait OpCounter {
    fn flops(&mut self, n: u64);
    fn compares(&mut self, n: u64);
}

/// Discards counts.
#[derive(Debug, Default, Clone, Copy)]
pub struct NoCount;

impl OpCounter for NoCount {
    #[inline(always)]
    fn flops(&mut self, _: u64) {}
    #[inline(always)]
    fn compares(&mut self, _: u64) {}
}

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct OpTally {
    pub flops: u64,
    pub compares: u64,
}

impl OpTally {
    pub fn total(&self) -> u64 {
        self.flops + self.compares
    }
}

impl OpCounter for OpTally {
    fn flops(&mut self, n: u64) {
        self.flops += n;
    }
    fn compares(&mut self, n: u64) {
        self.compares += n;
    }
}

/// How the top `count` candidates are extracted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RankStrategy {
    /// Sort every candidate, then take the head.
    #[default]
    FullSort,
    /// Partition around the `count`-th element, then sort only the head.
    Partial,
}

/// Scores closer than 1e-9 are ties. Symmetric constellations produce many
/// exact ties that rounding would otherwise break arbitrarily.
#[inline]
fn snap(score: f64) -> f64 {
    (score * 1e9).round() / 1e9
}

/// Highest-scoring `count` tones, ties to the lowest index, returned ascending.
fn top_by_score<O: OpCounter>(
    mut cand: Vec<(usize, f64)>,
    count: usize,
    strategy: RankStrategy,
    ops: &mut O,
) -> Vec<usize> {
    let mut cmp_count = 0u64;
    let mut cmp = |a: &(usize, f64), b: &(usize, f64)| -> Ordering {
        cmp_count += 1;
        b.1.total_cmp(&a.1).then(a.0.cmp(&b.0))
    };
    let take = count.min(cand.len());
    match strategy {
        RankStrategy::FullSort => cand.sort_by(&mut cmp),
        RankStrategy::Partial => {
            if take > 0 && take < cand.len() {
                cand.select_nth_unstable_by(take - 1, &mut cmp);
            }
            cand[..take].sort_by(&mut cmp);
        }
    }
    ops.compares(cmp_count);
    let mut out: Vec<usize> = cand[..take].iter().map(|c| c.0).collect();
    out.sort_unstable();
    out
}

/// Transmitter-side peak-power carriers of one antenna.
pub fn select_peak_carriers(grid: &FrequencyGrid, antenna: usize, sel: &Selection) -> Result<Vec<usize>> {
    select_peak_carriers_counted(grid, antenna, sel, RankStrategy::FullSort, &mut NoCount)
}

pub fn select_peak_carriers_counted<O: OpCounter>(
    grid: &FrequencyGrid,
    antenna: usize,
    sel: &Selection,
    strategy: RankStrategy,
    ops: &mut O,
) -> Result<Vec<usize>> {
    if !sel.mode.is_transmitter_side() {
        return Err(Error::Input(format!("{} is not a transmitter-side mode", sel.mode)));
    }
    if antenna >= grid.n_tx() {
        return Err(Error::Input(format!("antenna {antenna} out of range")));
    }
    let data = &grid.data_indices;
    if sel.count > data.len() {
        return Err(Error::Input(format!(
            "{} reliable carriers requested from {} data tones",
            sel.count,
            data.len()
        )));
    }
    let row = &grid.symbols[antenna];
    let n = row.len();
    let scores: Vec<(usize, f64)> = match sel.mode {
        SelectionMode::TxPeakLiteral => {
            ops.flops(3 * data.len() as u64);
            data.iter().map(|&k| (k, snap(row[k].norm_sqr()))).collect()
        }
        _ => {
            let s = with_fft(n, |fft| {
                let mut buf = row.clone();
                fft.process(&mut buf, Direction::Inverse);
                buf
            })?;
            let mut peak = 0usize;
            let mut peak_pow = f64::NEG_INFINITY;
            for (k, z) in s.iter().enumerate() {
                let p = z.norm_sqr();
                if p > peak_pow {
                    peak_pow = p;
                    peak = k;
                }
            }
            ops.flops(3 * n as u64 + 3);
            ops.compares(n as u64);
            let u = if peak_pow > 0.0 { s[peak] / peak_pow.sqrt() } else { Complex64::new(1.0, 0.0) };
            let u_conj = u.conj();
            ops.flops(9 * data.len() as u64);
            data.iter()
                .map(|&k| {
                    // e^{+j2πkk*/N} is the conjugate of the forward twiddle
                    let w = twiddle(k, peak, n).conj() * u_conj;
                    (k, snap((row[k] * w).re))
                })
                .collect()
        }
    };
    let scores = match sel.threshold {
        Some(th) => {
            ops.compares(scores.len() as u64);
            scores.into_iter().filter(|s| s.1 > th).collect()
        }
        None => scores,
    };
    Ok(top_by_score(scores, sel.count, strategy, ops))
}

/// Receiver-side ranking by decision margin `(d₂ − d₁)/σ`.
///
/// `equalized[i]` is the equalized observation of tone `data_indices[i]`.
/// Non-finite observations (erasures) are never selected. Returns the chosen
/// tones in ascending order with their hard decisions.
pub fn select_reliable_rx(
    equalized: &[Complex64],
    data_indices: &[usize],
    c: &Constellation,
    sigma2: f64,
    count: usize,
) -> Result<(Vec<usize>, Vec<Complex64>)> {
    select_reliable_rx_counted(equalized, data_indices, c, sigma2, count, RankStrategy::FullSort, &mut NoCount)
}

pub fn select_reliable_rx_counted<O: OpCounter>(
    equalized: &[Complex64],
    data_indices: &[usize],
    c: &Constellation,
    sigma2: f64,
    count: usize,
    strategy: RankStrategy,
    ops: &mut O,
) -> Result<(Vec<usize>, Vec<Complex64>)> {
    if equalized.len() != data_indices.len() {
        return Err(Error::InputShape(format!(
            "{} equalized symbols for {} data tones",
            equalized.len(),
            data_indices.len()
        )));
    }
    let inv_sigma = if sigma2 > 0.0 { 1.0 / sigma2.sqrt() } else { 1.0 };
    let points = c.points();
    let mut decisions = Vec::with_capacity(equalized.len());
    let mut cand = Vec::with_capacity(equalized.len());
    for (i, (&z, &tone)) in equalized.iter().zip(data_indices).enumerate() {
        if !(z.re.is_finite() && z.im.is_finite()) {
            decisions.push(Complex64::default());
            continue;
        }
        let mut best = 0;
        let mut d1 = f64::INFINITY;
        let mut d2 = f64::INFINITY;
        let mut compares = 0u64;
        for (label, p) in points.iter().enumerate() {
            let d = (z - p).norm_sqr();
            compares += 1;
            if d < d1 {
                d2 = d1;
                d1 = d;
                best = label;
            } else {
                compares += 1;
                if d < d2 {
                    d2 = d;
                }
            }
        }
        ops.flops(5 * points.len() as u64 + 4);
        ops.compares(compares);
        decisions.push(points[best]);
        cand.push((i, (d2.sqrt() - d1.sqrt()) * inv_sigma, tone));
    }
    // rank on tone index so ties resolve to the lowest tone
    let ranked: Vec<(usize, f64)> = cand.iter().map(|&(_, r, tone)| (tone, r)).collect();
    let chosen = top_by_score(ranked, count, strategy, ops);
    let pos: std::collections::HashMap<usize, usize> = cand.iter().map(|&(i, _, tone)| (tone, i)).collect();
    let symbols = chosen.iter().map(|t| decisions[pos[t]]).collect();
    Ok((chosen, symbols))
}

/// Uniform sample of `count` data tones without replacement, ascending.
pub fn select_random<R: Rng + ?Sized>(data_indices: &[usize], count: usize, rng: &mut R) -> Result<Vec<usize>> {
    if count > data_indices.len() {
        return Err(Error::Input(format!(
            "{count} random carriers requested from {} data tones",
            data_indices.len()
        )));
    }
    let mut out: Vec<usize> = sample(rng, data_indices.len(), count)
        .into_iter()
        .map(|i| data_indices[i])
        .collect();
    out.sort_unstable();
    Ok(out)
}

/// Side-information cost of signalling a `count`-subset of `n_data` tones:
/// `⌈log₂ C(n_data, count)⌉` bits.
pub fn signaling_bits(n_data: usize, count: usize) -> u32 {
    if count == 0 || count >= n_data {
        return 0;
    }
    let k = count.min(n_data - count);
    let bits: f64 = (1..=k)
        .map(|i| ((n_data - k + i) as f64 / i as f64).log2())
        .sum();
    (bits - 1e-9).ceil() as u32
}
