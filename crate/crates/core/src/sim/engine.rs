//! One Monte Carlo trial: transmit, propagate, estimate with every scheme.

use num_complex::Complex64;
use rand::Rng;

use super::config::{Estimator, Prior, SimConfig};
use crate::channel::{apply_channel, cfr_from_cir, complex_gaussian, draw_channel, ChannelRealization, PowerDelayProfile};
use crate::detect::{count_errors, equalize_detect, DetectorOutput, ErrorCounts};
use crate::error::Result;
use crate::estimate::{
    lmmse_estimate, ls_estimate, select_peak_carriers, select_random, select_reliable_rx, stack_system,
    CovariancePriors, Selection, SelectionMode,
};
use crate::nonlinear::{gcc_compand, gcc_expand, sspa_apply, GccParams, SspaParams};
use crate::ofdm::{add_cp, assemble_frame, map_bits, remove_cp, with_fft, Constellation, Direction, FrameConfig, FrequencyGrid};
use crate::rng::{stream, stream_rng, stream_seed};

/// Frames used to fix the companding normalization and amplifier drive level.
const CALIBRATION_FRAMES: u64 = 64;

/// Per-trial outcome of one (SNR, estimator, scheme) cell.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CellSample {
    /// `Σ‖ĥ − h‖²` over antenna pairs.
    pub err: f64,
    /// `Σ‖h‖²` over antenna pairs.
    pub energy: f64,
    pub counts: ErrorCounts,
}

/// Transmitted frame of one trial.
pub(crate) struct TxFrame {
    pub bits: Vec<u8>,
    pub grid: FrequencyGrid,
    pub samples: Vec<Vec<Complex64>>,
}

/// Sweep-invariant link state.
pub(crate) struct Link {
    pub frame: FrameConfig,
    pub constellation: Constellation,
    pub pdp: PowerDelayProfile,
    pub gcc: Option<GccParams>,
    pub sspa: Option<SspaParams>,
    prior_weights: Vec<f64>,
    pilot_seed: u64,
    seed: u64,
    n_taps: usize,
    n_reliable: usize,
    threshold: Option<f64>,
    genie: bool,
    estimators: Vec<Estimator>,
    schemes: Vec<SelectionMode>,
    /// Position of each tone in the data list, `usize::MAX` for pilot tones.
    data_pos: Vec<usize>,
    /// Pilot symbols as transmitted, amplitude included, per antenna.
    pilots: Vec<Vec<Complex64>>,
}

impl Link {
    pub fn new(cfg: &SimConfig, frame: FrameConfig) -> Result<Self> {
        let pdp = cfg.power_delay_profile()?;
        let prior_weights = match cfg.prior {
            Prior::True => pdp.weights().to_vec(),
            Prior::Uniform => vec![1.0 / cfg.n_taps as f64; cfg.n_taps],
        };
        let mut data_pos = vec![usize::MAX; frame.n_subcarriers()];
        for (i, &n) in frame.data_indices().iter().enumerate() {
            data_pos[n] = i;
        }
        let pilot_seed = stream_seed(cfg.seed, 0, stream::PILOTS);
        let mut link = Link {
            constellation: Constellation::new(cfg.modulation),
            pdp,
            gcc: None,
            sspa: None,
            prior_weights,
            pilot_seed,
            seed: cfg.seed,
            n_taps: cfg.n_taps,
            n_reliable: cfg.n_reliable,
            threshold: cfg.threshold,
            genie: cfg.genie,
            estimators: cfg.estimators.clone(),
            schemes: cfg.schemes.clone(),
            data_pos,
            pilots: Vec::new(),
            frame,
        };
        let probe = assemble_frame(&vec![vec![Complex64::default(); link.frame.n_data()]; link.frame.n_tx()], &link.frame, pilot_seed)?;
        let amp = link.frame.tx_amplitude();
        link.pilots = (0..link.frame.n_tx())
            .map(|t| probe.pilot_symbols(t).into_iter().map(|p| p * amp).collect())
            .collect();
        link.calibrate(cfg)?;
        Ok(link)
    }

    /// Fixes the companding normalization and the amplifier saturation level
    /// from a batch of frames drawn on reserved trial indices.
    fn calibrate(&mut self, cfg: &SimConfig) -> Result<()> {
        if cfg.gamma.is_none() && cfg.sspa_ibo_db.is_none() {
            return Ok(());
        }
        let mut samples = Vec::new();
        for i in 0..CALIBRATION_FRAMES {
            let (_, grid) = self.draw_grid(u64::MAX - i)?;
            samples.extend(self.synthesize(&grid)?.into_iter().flatten());
        }
        if let Some(gamma) = cfg.gamma {
            let p = GccParams::calibrate(gamma, &samples)?;
            samples = gcc_compand(&samples, &p);
            self.gcc = Some(p);
        }
        if let Some(ibo) = cfg.sspa_ibo_db {
            let rms = (samples.iter().map(|z| z.norm_sqr()).sum::<f64>() / samples.len() as f64).sqrt();
            self.sspa = Some(SspaParams::from_backoff(cfg.sspa_gain, cfg.sspa_knee, ibo, rms)?);
        }
        Ok(())
    }

    fn draw_grid(&self, trial: u64) -> Result<(Vec<u8>, FrequencyGrid)> {
        let mut rng = stream_rng(self.seed, trial, stream::DATA);
        let per_stream = self.frame.n_data() * self.constellation.bits_per_symbol();
        let bits: Vec<u8> = (0..per_stream * self.frame.n_tx()).map(|_| rng.random_range(0..2u8)).collect();
        let syms = bits
            .chunks(per_stream)
            .map(|b| map_bits(b, &self.constellation))
            .collect::<Result<Vec<_>>>()?;
        let grid = assemble_frame(&syms, &self.frame, self.pilot_seed)?;
        Ok((bits, grid))
    }

    /// Inverse transform at the per-antenna amplitude, no prefix.
    fn synthesize(&self, grid: &FrequencyGrid) -> Result<Vec<Vec<Complex64>>> {
        let amp = self.frame.tx_amplitude();
        with_fft(self.frame.n_subcarriers(), |fft| {
            grid.symbols
                .iter()
                .map(|row| {
                    let mut buf: Vec<Complex64> = row.iter().map(|&x| x * amp).collect();
                    fft.process(&mut buf, Direction::Inverse);
                    buf
                })
                .collect()
        })
    }

    pub fn transmit(&self, trial: u64) -> Result<TxFrame> {
        let (bits, grid) = self.draw_grid(trial)?;
        let samples = self
            .synthesize(&grid)?
            .into_iter()
            .map(|mut body| {
                if let Some(p) = &self.gcc {
                    body = gcc_compand(&body, p);
                }
                if let Some(p) = &self.sspa {
                    body = sspa_apply(&body, p);
                }
                add_cp(&body, self.frame.cp_len())
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(TxFrame { bits, grid, samples })
    }

    pub fn channel(&self, trial: u64) -> ChannelRealization {
        let mut rng = stream_rng(self.seed, trial, stream::CHANNEL);
        draw_channel(&self.pdp, self.frame.n_tx(), self.frame.n_rx(), &mut rng)
    }

    /// Unit-variance noise for every receive sample; scaled per SNR point so
    /// all SNR points of a trial share one noise shape.
    fn unit_noise(&self, trial: u64, len: usize) -> Vec<Vec<Complex64>> {
        let mut rng = stream_rng(self.seed, trial, stream::NOISE);
        (0..self.frame.n_rx())
            .map(|_| (0..len).map(|_| complex_gaussian(&mut rng, 1.0)).collect())
            .collect()
    }

    fn demodulate(&self, rx: &[Vec<Complex64>]) -> Result<Vec<Vec<Complex64>>> {
        rx.iter()
            .map(|s| {
                let mut body = remove_cp(s, self.frame.cp_len())?;
                if let Some(p) = &self.gcc {
                    body = gcc_expand(&body, p);
                }
                with_fft(body.len(), |fft| fft.process(&mut body, Direction::Forward))?;
                Ok(body)
            })
            .collect()
    }

    fn estimate(&self, est: Estimator, y: &[Complex64], t: usize, rel: &[usize], rel_syms: &[Complex64], priors: &CovariancePriors) -> Result<Vec<Complex64>> {
        let sys = stack_system(y, self.frame.pilot_indices(t), &self.pilots[t], rel, rel_syms, self.n_taps)?;
        match est {
            Estimator::Ls => ls_estimate(&sys),
            Estimator::Lmmse => lmmse_estimate(&sys, priors),
        }
    }

    /// Runs one trial at every SNR point. The result is indexed
    /// `[snr][estimator][scheme]`, flattened in that order.
    pub fn run_trial(&self, trial: u64, snr_grid: &[f64], count_bits: bool) -> Result<Vec<CellSample>> {
        let tx = self.transmit(trial)?;
        let ch = self.channel(trial);
        let clean = apply_channel(
            &crate::ofdm::TimeSignal { samples: tx.samples.clone(), cp_len: self.frame.cp_len() },
            &ch,
        )?;
        let noise = self.unit_noise(trial, clean[0].len());
        let energy: f64 = ch.taps.iter().flatten().flatten().map(|z| z.norm_sqr()).sum();
        let n_tx = self.frame.n_tx();
        let n_rx = self.frame.n_rx();
        let nsc = self.frame.n_subcarriers();
        let data = self.frame.data_indices();
        let amp = self.frame.tx_amplitude();

        // selections that depend on neither noise nor estimator
        let mut fixed_sel: Vec<Option<Vec<Vec<usize>>>> = Vec::with_capacity(self.schemes.len());
        for &mode in &self.schemes {
            fixed_sel.push(match mode {
                SelectionMode::TxPeakPhaseAlign | SelectionMode::TxPeakLiteral => {
                    let sel = Selection { mode, count: self.n_reliable, threshold: self.threshold };
                    Some((0..n_tx).map(|t| select_peak_carriers(&tx.grid, t, &sel)).collect::<Result<_>>()?)
                }
                SelectionMode::RandomCarriers => {
                    let mut rng = stream_rng(self.seed, trial, stream::SCHEME_BASE + mode.id());
                    Some((0..n_tx).map(|_| select_random(data, self.n_reliable, &mut rng)).collect::<Result<_>>()?)
                }
                _ => None,
            });
        }
        let needs_detection = count_bits || self.schemes.iter().any(|&m| m != SelectionMode::PilotOnly);

        let mut out = Vec::with_capacity(snr_grid.len() * self.estimators.len() * self.schemes.len());
        for &snr in snr_grid {
            let sigma2 = 10f64.powf(-snr / 10.0);
            let sigma = sigma2.sqrt();
            let rx: Vec<Vec<Complex64>> = clean
                .iter()
                .zip(&noise)
                .map(|(c, w)| c.iter().zip(w).map(|(&a, &b)| a + b * sigma).collect())
                .collect();
            let y = self.demodulate(&rx)?;
            let priors = CovariancePriors::diagonal(&self.prior_weights, sigma2)?;

            for &est in &self.estimators {
                // pilot-only estimate, [rx][tx] taps
                let init: Vec<Vec<Vec<Complex64>>> = (0..n_rx)
                    .map(|j| (0..n_tx).map(|t| self.estimate(est, &y[j], t, &[], &[], &priors)).collect())
                    .collect::<Result<_>>()?;
                let init_cfr = to_cfr(&init, nsc)?;
                let det0 = if needs_detection {
                    Some(equalize_detect(&y, &init_cfr, sigma2, &self.constellation, data)?)
                } else {
                    None
                };

                for (s, &mode) in self.schemes.iter().enumerate() {
                    let taps = if mode == SelectionMode::PilotOnly {
                        init.clone()
                    } else {
                        let det0 = det0.as_ref().expect("detection ran");
                        let chosen: Vec<Vec<usize>> = match &fixed_sel[s] {
                            Some(sel) => sel.clone(),
                            None => (0..n_tx)
                                .map(|t| {
                                    select_reliable_rx(&det0.equalized[t], data, &self.constellation, sigma2, self.n_reliable)
                                        .map(|r| r.0)
                                })
                                .collect::<Result<_>>()?,
                        };
                        self.reestimate(est, &y, &tx.grid, det0, &init_cfr, &chosen, &priors, amp)?
                    };
                    let err: f64 = (0..n_rx)
                        .flat_map(|j| (0..n_tx).map(move |t| (j, t)))
                        .map(|(j, t)| {
                            taps[j][t].iter().zip(ch.pair(j, t)).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>()
                        })
                        .sum();
                    let counts = if count_bits {
                        let det = if mode == SelectionMode::PilotOnly {
                            None
                        } else {
                            Some(equalize_detect(&y, &to_cfr(&taps, nsc)?, sigma2, &self.constellation, data)?)
                        };
                        let det = det.as_ref().or(det0.as_ref()).expect("detection ran");
                        count_errors(&tx.bits, &det.detected_bits, self.constellation.bits_per_symbol())?
                    } else {
                        ErrorCounts::default()
                    };
                    out.push(CellSample { err, energy, counts });
                }
            }
        }
        Ok(out)
    }

    /// Transmitted grid and pilot-only detector output of one trial, the
    /// inputs of both selection strategies.
    pub fn first_pass(&self, trial: u64, snr_db: f64) -> Result<(FrequencyGrid, DetectorOutput)> {
        let tx = self.transmit(trial)?;
        let ch = self.channel(trial);
        let clean = apply_channel(
            &crate::ofdm::TimeSignal { samples: tx.samples, cp_len: self.frame.cp_len() },
            &ch,
        )?;
        let noise = self.unit_noise(trial, clean[0].len());
        let sigma2 = 10f64.powf(-snr_db / 10.0);
        let rx: Vec<Vec<Complex64>> = clean
            .iter()
            .zip(&noise)
            .map(|(c, w)| c.iter().zip(w).map(|(&a, &b)| a + b * sigma2.sqrt()).collect())
            .collect();
        let y = self.demodulate(&rx)?;
        let priors = CovariancePriors::diagonal(&self.prior_weights, sigma2)?;
        let est = self.estimators[0];
        let init: Vec<Vec<Vec<Complex64>>> = (0..self.frame.n_rx())
            .map(|j| (0..self.frame.n_tx()).map(|t| self.estimate(est, &y[j], t, &[], &[], &priors)).collect())
            .collect::<Result<_>>()?;
        let det = equalize_detect(&y, &to_cfr(&init, self.frame.n_subcarriers())?, sigma2, &self.constellation, self.frame.data_indices())?;
        Ok((tx.grid, det))
    }

    /// Re-estimates every antenna pair from pilots plus the chosen data tones.
    /// On chosen tones the other streams are cancelled with the pilot-only
    /// response and their symbol decisions.
    #[allow(clippy::too_many_arguments)]
    fn reestimate(
        &self,
        est: Estimator,
        y: &[Vec<Complex64>],
        grid: &FrequencyGrid,
        det0: &DetectorOutput,
        init_cfr: &[Vec<Vec<Complex64>>],
        chosen: &[Vec<usize>],
        priors: &CovariancePriors,
        amp: f64,
    ) -> Result<Vec<Vec<Vec<Complex64>>>> {
        let n_tx = self.frame.n_tx();
        let symbol = |t: usize, n: usize| -> Complex64 {
            if self.genie {
                grid.symbols[t][n]
            } else {
                det0.detected_symbols[t][self.data_pos[n]]
            }
        };
        y.iter()
            .enumerate()
            .map(|(j, yj)| {
                (0..n_tx)
                    .map(|t| {
                        let mut yc = yj.clone();
                        if n_tx > 1 {
                            for &n in &chosen[t] {
                                for u in (0..n_tx).filter(|&u| u != t) {
                                    yc[n] -= init_cfr[j][u][n] * symbol(u, n) * amp;
                                }
                            }
                        }
                        let syms: Vec<Complex64> = chosen[t].iter().map(|&n| symbol(t, n) * amp).collect();
                        self.estimate(est, &yc, t, &chosen[t], &syms, priors)
                    })
                    .collect()
            })
            .collect()
    }
}

fn to_cfr(taps: &[Vec<Vec<Complex64>>], n: usize) -> Result<Vec<Vec<Vec<Complex64>>>> {
    taps.iter()
        .map(|row| row.iter().map(|h| cfr_from_cir(h, n)).collect())
        .collect()
}
