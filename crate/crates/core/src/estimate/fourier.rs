use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Rows of the unitary DFT matrix restricted to `indices` and the first `L`
/// columns: row `n` is `N^{-1/2} [1, e^{-j2πn/N}, …, e^{-j2πn(L-1)/N}]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialFourierMatrix {
    pub indices: Vec<usize>,
    pub n_subcarriers: usize,
    pub rows: DMatrix<Complex64>,
}

pub(crate) fn check_indices(indices: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    for &i in indices {
        if i >= n {
            return Err(Error::Input(format!("tone index {i} out of range for {n} subcarriers")));
        }
        if std::mem::replace(&mut seen[i], true) {
            return Err(Error::Input(format!("duplicate tone index {i}")));
        }
    }
    Ok(())
}

#[inline]
pub(crate) fn twiddle(n: usize, l: usize, size: usize) -> Complex64 {
    Complex64::from_polar(1.0, -2.0 * PI * ((n * l) % size) as f64 / size as f64)
}

pub fn build_partial_fourier(indices: &[usize], taps: usize, n: usize) -> Result<PartialFourierMatrix> {
    if taps == 0 || taps > n {
        return Err(Error::Config(format!("{taps} taps invalid for {n} subcarriers")));
    }
    check_indices(indices, n)?;
    let scale = 1.0 / (n as f64).sqrt();
    let rows = DMatrix::from_fn(indices.len(), taps, |r, l| twiddle(indices[r], l, n) * scale);
    Ok(PartialFourierMatrix { indices: indices.to_vec(), n_subcarriers: n, rows })
}
