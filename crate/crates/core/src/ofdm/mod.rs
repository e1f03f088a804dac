//! Constellations, comb-pilot frames, unitary transforms and PAPR.

mod constellation;
mod frame;
mod transform;

pub use constellation::{hard_demap, map_bits, Constellation, Modulation};
pub use frame::{assemble_frame, FrameConfig, FrequencyGrid, TimeSignal};
pub use transform::{
    add_cp, oversampled_inverse, papr_db, remove_cp, transform, with_fft, Direction, UnitaryFft,
};
