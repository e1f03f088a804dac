use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::fourier::{check_indices, twiddle};
use crate::error::{Error, Result};

/// Observation rows gathered from pilot and reliable tones.
#[derive(Debug, Clone, PartialEq)]
pub struct StackedSystem {
    /// Tone index of each row, ascending.
    pub indices: Vec<usize>,
    pub x_sel: Vec<Complex64>,
    pub y_sel: DVector<Complex64>,
    /// `√N · diag(x_sel) · F_sel`, rows × taps.
    pub c_matrix: DMatrix<Complex64>,
}

impl StackedSystem {
    pub fn rows(&self) -> usize {
        self.indices.len()
    }

    pub fn taps(&self) -> usize {
        self.c_matrix.ncols()
    }
}

/// Stacks pilot and reliable-carrier observations into one system.
///
/// `y` holds all N received tones of one receive antenna. `pilot_syms` and
/// `reliable_syms` are the symbols as they reach the channel (amplitude
/// scaling included).
pub fn stack_system(
    y: &[Complex64],
    pilot_idx: &[usize],
    pilot_syms: &[Complex64],
    reliable_idx: &[usize],
    reliable_syms: &[Complex64],
    taps: usize,
) -> Result<StackedSystem> {
    let n = y.len();
    if pilot_idx.len() != pilot_syms.len() || reliable_idx.len() != reliable_syms.len() {
        return Err(Error::InputShape("index and symbol lists differ in length".into()));
    }
    if taps == 0 || taps > n {
        return Err(Error::Config(format!("{taps} taps invalid for {n} subcarriers")));
    }
    let mut rows: Vec<(usize, Complex64)> = pilot_idx
        .iter()
        .copied()
        .zip(pilot_syms.iter().copied())
        .chain(reliable_idx.iter().copied().zip(reliable_syms.iter().copied()))
        .collect();
    let all: Vec<usize> = rows.iter().map(|r| r.0).collect();
    if let Err(e) = check_indices(&all, n) {
        return Err(match e {
            Error::Input(msg) if msg.starts_with("duplicate") => {
                Error::Input(format!("pilot and reliable sets overlap: {msg}"))
            }
            other => other,
        });
    }
    rows.sort_by_key(|r| r.0);
    let indices: Vec<usize> = rows.iter().map(|r| r.0).collect();
    let x_sel: Vec<Complex64> = rows.iter().map(|r| r.1).collect();
    let y_sel = DVector::from_iterator(rows.len(), indices.iter().map(|&i| y[i]));
    let c_matrix = DMatrix::from_fn(rows.len(), taps, |r, l| x_sel[r] * twiddle(indices[r], l, n));
    Ok(StackedSystem { indices, x_sel, y_sel, c_matrix })
}
