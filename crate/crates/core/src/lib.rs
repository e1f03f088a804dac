//! Link-level MIMO-OFDM simulator for data-aided channel estimation.
//!
//! The crate models a comb-pilot MIMO-OFDM link with gamma-correction
//! companding, a Rapp solid-state amplifier and a Rayleigh block-fading
//! channel, and compares four ways of choosing extra "reliable" data carriers
//! for LS/LMMSE re-estimation of the channel taps:
//!
//! * transmitter-side peak-power carriers (`tx-peak`, `tx-peak-literal`),
//! * receiver-side decision-margin ranking (`rx-rel`),
//! * uniformly random data carriers (`random`),
//! * no extra carriers at all (`pilot-only`).
//!
//! The [`sim`] module drives Monte Carlo sweeps and writes CSV records.

pub mod channel;
pub mod detect;
pub mod error;
pub mod estimate;
pub mod nonlinear;
pub mod ofdm;
pub mod rng;
pub mod sim;

pub use num_complex::Complex64;

pub use channel::{
    add_awgn, apply_channel, cfr_from_cir, draw_channel, ChannelRealization, NoiseParams,
    PowerDelayProfile,
};
pub use detect::{count_errors, equalize_detect, DetectorOutput, ErrorCounts};
pub use error::{Error, Result};
pub use estimate::{
    select_peak_carriers_counted,
    build_partial_fourier, lmmse_estimate, ls_estimate, select_peak_carriers,
    select_reliable_rx, select_random, stack_system, CovariancePriors, PartialFourierMatrix,
    Selection, SelectionMode, StackedSystem,
};
pub use nonlinear::{
    empirical_ccdf, gcc_compand, gcc_expand, sspa_apply, GccParams, SspaParams,
};
pub use ofdm::{
    add_cp, assemble_frame, hard_demap, map_bits, papr_db, remove_cp, transform, Constellation,
    Direction, FrameConfig, FrequencyGrid, Modulation, TimeSignal,
};
