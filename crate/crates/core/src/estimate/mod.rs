//! Partial-Fourier systems, LS/LMMSE tap estimation and reliable-carrier
//! selection.

mod fourier;
mod select;
mod solve;
mod stack;

pub use fourier::{build_partial_fourier, PartialFourierMatrix};
pub use select::{
    select_peak_carriers, select_peak_carriers_counted, select_random, select_reliable_rx,
    select_reliable_rx_counted, signaling_bits, NoCount, OpCounter, OpTally, RankStrategy,
    Selection, SelectionMode,
};
pub use solve::{lmmse_estimate, ls_estimate, CovariancePriors, CONDITION_LIMIT};
pub use stack::{stack_system, StackedSystem};
