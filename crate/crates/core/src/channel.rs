//! Rayleigh block fading, circular channel application and AWGN.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::ofdm::{with_fft, Direction, TimeSignal};

/// Average tap powers, normalized to unit total energy.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerDelayProfile {
    weights: Vec<f64>,
    shape: PdpShape,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PdpShape {
    Uniform,
    Exponential(f64),
    Custom,
}

impl PowerDelayProfile {
    pub fn uniform(taps: usize) -> Result<Self> {
        Self::build(vec![1.0; taps], PdpShape::Uniform)
    }

    /// `weights[l] ∝ e^{-l/τ}`.
    pub fn exponential(taps: usize, tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::Config(format!("decay constant {tau} must be positive")));
        }
        Self::build((0..taps).map(|l| (-(l as f64) / tau).exp()).collect(), PdpShape::Exponential(tau))
    }

    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        Self::build(weights, PdpShape::Custom)
    }

    fn build(mut weights: Vec<f64>, shape: PdpShape) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Config("power-delay profile needs at least one tap".into()));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::Config("power-delay profile weights must be finite and >= 0".into()));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::Config("power-delay profile has zero energy".into()));
        }
        weights.iter_mut().for_each(|w| *w /= total);
        Ok(PowerDelayProfile { weights, shape })
    }

    /// Parses `"uniform"` or `"exp:<tau>"` for `taps` taps.
    pub fn parse(s: &str, taps: usize) -> Result<Self> {
        match PdpShape::from_str(s)? {
            PdpShape::Uniform => Self::uniform(taps),
            PdpShape::Exponential(tau) => Self::exponential(taps, tau),
            PdpShape::Custom => unreachable!(),
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn shape(&self) -> PdpShape {
        self.shape
    }
}

impl FromStr for PdpShape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "uniform" {
            return Ok(PdpShape::Uniform);
        }
        if let Some(tau) = s.strip_prefix("exp:") {
            let tau: f64 = tau
                .parse()
                .map_err(|_| Error::Config(format!("bad decay constant in '{s}'")))?;
            if tau > 0.0 && tau.is_finite() {
                return Ok(PdpShape::Exponential(tau));
            }
        }
        Err(Error::Config(format!("unknown power-delay profile '{s}' (uniform | exp:<tau>)")))
    }
}

impl fmt::Display for PdpShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PdpShape::Uniform => f.write_str("uniform"),
            PdpShape::Exponential(tau) => write!(f, "exp:{tau}"),
            PdpShape::Custom => f.write_str("custom"),
        }
    }
}

/// Channel taps for every antenna pair, `taps[rx][tx][l]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub taps: Vec<Vec<Vec<Complex64>>>,
}

impl ChannelRealization {
    pub fn n_rx(&self) -> usize {
        self.taps.len()
    }

    pub fn n_tx(&self) -> usize {
        self.taps.first().map_or(0, Vec::len)
    }

    pub fn n_taps(&self) -> usize {
        self.taps
            .first()
            .and_then(|r| r.first())
            .map_or(0, Vec::len)
    }

    pub fn pair(&self, rx: usize, tx: usize) -> &[Complex64] {
        &self.taps[rx][tx]
    }
}

/// Circular complex Gaussian sample with variance `var`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, var: f64) -> Complex64 {
    let s = (var / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re * s, im * s)
}

/// Independent Rayleigh taps for every antenna pair.
pub fn draw_channel<R: Rng + ?Sized>(
    pdp: &PowerDelayProfile,
    n_tx: usize,
    n_rx: usize,
    rng: &mut R,
) -> ChannelRealization {
    let taps = (0..n_rx)
        .map(|_| {
            (0..n_tx)
                .map(|_| pdp.weights.iter().map(|&w| complex_gaussian(rng, w)).collect())
                .collect()
        })
        .collect();
    ChannelRealization { taps }
}

/// Passes every transmit stream through its taps and sums per receive antenna.
///
/// Convolution output is truncated to the frame length; with the prefix at
/// least `L - 1` long the symbol body sees a circular convolution.
pub fn apply_channel(tx: &TimeSignal, ch: &ChannelRealization) -> Result<Vec<Vec<Complex64>>> {
    let l = ch.n_taps();
    if l == 0 {
        return Err(Error::Config("channel has no taps".into()));
    }
    if tx.cp_len + 1 < l {
        return Err(Error::Config(format!(
            "cyclic prefix {} shorter than channel memory {}",
            tx.cp_len,
            l - 1
        )));
    }
    if tx.samples.len() != ch.n_tx() {
        return Err(Error::InputShape(format!(
            "{} transmit streams for a channel with {} inputs",
            tx.samples.len(),
            ch.n_tx()
        )));
    }
    let len = tx.samples.first().map_or(0, Vec::len);
    Ok(ch
        .taps
        .iter()
        .map(|row| {
            let mut out = vec![Complex64::default(); len];
            for (stream, h) in tx.samples.iter().zip(row) {
                for (k, o) in out.iter_mut().enumerate() {
                    let mut acc = Complex64::default();
                    for (tap, &hl) in h.iter().enumerate().take(k + 1) {
                        acc += hl * stream[k - tap];
                    }
                    *o += acc;
                }
            }
            out
        })
        .collect())
}

/// Noise level of the received tones.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseParams {
    /// Complex noise variance per sample.
    pub sigma2: f64,
    pub snr_db: f64,
}

impl NoiseParams {
    /// `sigma2 = 10^{-snr/10}`, i.e. SNR per receive tone at unit received power.
    pub fn from_snr_db(snr_db: f64) -> Self {
        NoiseParams { sigma2: 10f64.powf(-snr_db / 10.0), snr_db }
    }
}

/// Adds circular white Gaussian noise in place.
pub fn add_awgn<R: Rng + ?Sized>(samples: &mut [Complex64], np: &NoiseParams, rng: &mut R) {
    if np.sigma2 == 0.0 {
        return;
    }
    for z in samples.iter_mut() {
        *z += complex_gaussian(rng, np.sigma2);
    }
}

/// Frequency response `H(n) = Σ_l h_l e^{-j2πnl/N}`.
pub fn cfr_from_cir(taps: &[Complex64], n: usize) -> Result<Vec<Complex64>> {
    if taps.len() > n {
        return Err(Error::Config(format!("{} taps exceed {n} subcarriers", taps.len())));
    }
    let mut buf = vec![Complex64::default(); n];
    buf[..taps.len()].copy_from_slice(taps);
    with_fft(n, |fft| fft.process_unscaled(&mut buf, Direction::Forward))?;
    Ok(buf)
}
