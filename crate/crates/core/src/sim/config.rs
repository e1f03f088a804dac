use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::PowerDelayProfile;
use crate::error::{Error, Result};
use crate::estimate::SelectionMode;
use crate::ofdm::{FrameConfig, Modulation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Estimator {
    #[serde(rename = "ls")]
    Ls,
    #[serde(rename = "lmmse")]
    Lmmse,
}

impl Estimator {
    pub fn name(self) -> &'static str {
        match self {
            Estimator::Ls => "ls",
            Estimator::Lmmse => "lmmse",
        }
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ls" => Ok(Estimator::Ls),
            "lmmse" => Ok(Estimator::Lmmse),
            _ => Err(Error::Config(format!("unknown estimator '{s}' (ls | lmmse)"))),
        }
    }
}

/// Tap covariance handed to the LMMSE estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Prior {
    /// The power-delay profile the channel is actually drawn from.
    #[serde(rename = "true")]
    True,
    /// Flat `1/L` per tap.
    #[serde(rename = "uniform")]
    Uniform,
}

/// Everything a sweep needs. JSON keys mirror the field names; missing keys
/// take the defaults below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub n_subcarriers: usize,
    pub n_pilots: usize,
    pub n_taps: usize,
    pub cp_len: usize,
    /// `"uniform"` or `"exp:<tau>"`.
    pub pdp: String,
    pub modulation: Modulation,
    pub n_tx: usize,
    pub n_rx: usize,
    pub estimators: Vec<Estimator>,
    pub schemes: Vec<SelectionMode>,
    /// Reliable carriers per transmit antenna.
    pub n_reliable: usize,
    pub threshold: Option<f64>,
    /// Companding exponent; `None` disables companding.
    pub gamma: Option<f64>,
    /// Amplifier input back-off in dB; `None` bypasses the amplifier.
    pub sspa_ibo_db: Option<f64>,
    pub sspa_gain: f64,
    pub sspa_knee: f64,
    pub prior: Prior,
    /// Use the transmitted symbols on reliable tones instead of decisions.
    pub genie: bool,
    pub snr_grid: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub target_mse: f64,
    /// SNR of the success-rate and complexity experiments.
    pub fixed_snr_db: f64,
    pub pilot_grid: Vec<usize>,
    pub ccdf_symbols: usize,
    pub papr_grid: Vec<f64>,
    /// Oversampling factor of the PAPR measurement.
    pub oversample: usize,
    pub probe_sizes: Vec<usize>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n_subcarriers: 256,
            n_pilots: 16,
            n_taps: 16,
            cp_len: 16,
            pdp: "exp:4".into(),
            modulation: Modulation::Qam4,
            n_tx: 1,
            n_rx: 1,
            estimators: vec![Estimator::Ls, Estimator::Lmmse],
            schemes: vec![
                SelectionMode::PilotOnly,
                SelectionMode::TxPeakPhaseAlign,
                SelectionMode::RxReliability,
                SelectionMode::RandomCarriers,
            ],
            n_reliable: 16,
            threshold: None,
            gamma: None,
            sspa_ibo_db: None,
            sspa_gain: 1.0,
            sspa_knee: 2.0,
            prior: Prior::True,
            genie: false,
            snr_grid: (0..=6).map(|i| 5.0 * i as f64).collect(),
            trials: 10_000,
            seed: 1,
            target_mse: 0.02,
            fixed_snr_db: 20.0,
            pilot_grid: vec![16, 32, 52, 64, 96, 128],
            ccdf_symbols: 100_000,
            papr_grid: (0..=130).map(|i| i as f64 / 10.0).collect(),
            oversample: 1,
            probe_sizes: vec![64, 256, 1024],
        }
    }
}

/// Companding exponent of the CCDF experiment when companding is off.
pub const DEFAULT_CCDF_GAMMA: f64 = 2.0;

impl SimConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("bad config: {e}")))
    }

    pub fn frame(&self) -> Result<FrameConfig> {
        self.frame_with_pilots(self.n_pilots)
    }

    pub fn frame_with_pilots(&self, n_pilots: usize) -> Result<FrameConfig> {
        FrameConfig::new(self.n_subcarriers, n_pilots, self.cp_len, self.n_tx, self.n_rx)
    }

    pub fn power_delay_profile(&self) -> Result<PowerDelayProfile> {
        PowerDelayProfile::parse(&self.pdp, self.n_taps)
    }

    /// Checks everything that would otherwise fail part-way through a sweep.
    pub fn validate(&self) -> Result<()> {
        let frame = self.frame()?;
        self.power_delay_profile()?;
        if self.n_taps == 0 || self.n_taps > self.n_subcarriers {
            return Err(Error::Config(format!("{} taps invalid for {} subcarriers", self.n_taps, self.n_subcarriers)));
        }
        if self.cp_len + 1 < self.n_taps {
            return Err(Error::Config(format!(
                "cyclic prefix {} shorter than channel memory {}",
                self.cp_len,
                self.n_taps - 1
            )));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be >= 1".into()));
        }
        if self.snr_grid.is_empty() {
            return Err(Error::Config("snr_grid is empty".into()));
        }
        if let Some(s) = self.snr_grid.iter().find(|s| !s.is_finite()) {
            return Err(Error::Config(format!("SNR {s} is not finite")));
        }
        if self.estimators.is_empty() {
            return Err(Error::Config("no estimator selected".into()));
        }
        if self.schemes.is_empty() {
            return Err(Error::Config("no scheme selected".into()));
        }
        let uses_carriers = self.schemes.iter().any(|&s| s != SelectionMode::PilotOnly);
        if uses_carriers && self.n_reliable > frame.n_data() {
            return Err(Error::Config(format!(
                "{} reliable carriers exceed {} data tones",
                self.n_reliable,
                frame.n_data()
            )));
        }
        if let Some(g) = self.gamma {
            if !(g.is_finite() && g >= 1.0) {
                return Err(Error::Config(format!("companding exponent {g} must be >= 1")));
            }
        }
        if let Some(ibo) = self.sspa_ibo_db {
            if !ibo.is_finite() {
                return Err(Error::Config("amplifier back-off must be finite".into()));
            }
            if !(self.sspa_gain > 0.0 && self.sspa_knee > 0.0) {
                return Err(Error::Config("amplifier gain and knee must be positive".into()));
            }
        }
        if !(self.target_mse > 0.0) {
            return Err(Error::Config(format!("target_mse {} must be positive", self.target_mse)));
        }
        if !self.fixed_snr_db.is_finite() {
            return Err(Error::Config("fixed_snr_db must be finite".into()));
        }
        if self.oversample == 0 || !self.oversample.is_power_of_two() {
            return Err(Error::Config(format!("oversampling factor {} is not a power of two", self.oversample)));
        }
        Ok(())
    }
}

/// Parses `start:step:stop` (inclusive) or a single value.
pub fn parse_snr_range(s: &str) -> Result<Vec<f64>> {
    let bad = || Error::Config(format!("bad SNR range '{s}' (expected start:step:stop)"));
    let parts: Vec<f64> = s
        .split(':')
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    match parts[..] {
        [v] if v.is_finite() => Ok(vec![v]),
        [start, step, stop] if start.is_finite() && stop.is_finite() && step > 0.0 && step.is_finite() => {
            if stop < start {
                return Err(bad());
            }
            let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
            // snap to a decimal grid so 0.1 steps do not print as 0.30000000000000004
            Ok((0..count)
                .map(|i| ((start + step * i as f64) * 1e9).round() / 1e9)
                .collect())
        }
        _ => Err(bad()),
    }
}

/// Parses `TxR`, e.g. `2x4`.
pub fn parse_mimo(s: &str) -> Result<(usize, usize)> {
    let bad = || Error::Config(format!("bad MIMO size '{s}' (expected e.g. 2x4)"));
    let (t, r) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    let t: usize = t.parse().map_err(|_| bad())?;
    let r: usize = r.parse().map_err(|_| bad())?;
    if t == 0 || r == 0 {
        return Err(bad());
    }
    Ok((t, r))
}

/// `off` or a number.
pub fn parse_switch(s: &str, what: &str) -> Result<Option<f64>> {
    if s.eq_ignore_ascii_case("off") {
        return Ok(None);
    }
    s.parse::<f64>()
        .map(Some)
        .map_err(|_| Error::Config(format!("bad {what} '{s}' (a number or off)")))
}
