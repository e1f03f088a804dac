//! Per-subcarrier linear MMSE detection and error counting.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::ofdm::Constellation;

#[derive(Debug, Clone, PartialEq)]
pub struct DetectorOutput {
    /// Soft linear estimates, `[tx][data tone]`, in unit-power symbol units.
    /// Erased tones hold NaN.
    pub equalized: Vec<Vec<Complex64>>,
    pub labels: Vec<Vec<usize>>,
    pub detected_symbols: Vec<Vec<Complex64>>,
    /// Bits of every stream, stream-major, tones ascending.
    pub detected_bits: Vec<u8>,
    /// Data tones whose detection matrix was singular, `[tx][data tone]`.
    pub erasures: Vec<Vec<bool>>,
}

impl DetectorOutput {
    pub fn erasure_count(&self) -> usize {
        self.erasures.iter().flatten().filter(|&&e| e).count()
    }
}

/// Solves the small dense system `a x = b` in place. `None` when a pivot
/// vanishes relative to the matrix scale.
fn solve_small(a: &mut [Complex64], b: &mut [Complex64], k: usize) -> Option<()> {
    let scale = a.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return None;
    }
    for col in 0..k {
        let piv = (col..k)
            .max_by(|&i, &j| a[i * k + col].norm().total_cmp(&a[j * k + col].norm()))
            .unwrap();
        if a[piv * k + col].norm() <= 1e-12 * scale {
            return None;
        }
        if piv != col {
            for c in 0..k {
                a.swap(piv * k + c, col * k + c);
            }
            b.swap(piv, col);
        }
        let d = a[col * k + col];
        for row in col + 1..k {
            let f = a[row * k + col] / d;
            for c in col..k {
                let v = a[col * k + c];
                a[row * k + c] -= f * v;
            }
            let v = b[col];
            b[row] -= f * v;
        }
    }
    for row in (0..k).rev() {
        let mut acc = b[row];
        for c in row + 1..k {
            acc -= a[row * k + c] * b[c];
        }
        b[row] = acc / a[row * k + row];
    }
    Some(())
}

/// Linear MMSE detection `x̂ = (HᴴH + σ² n_tx I)^{-1} Hᴴ y` on every data tone,
/// followed by nearest-point slicing.
///
/// `y[rx][n]` are the received tones and `h_est[rx][tx][n]` the estimated
/// channel response. Each antenna transmits with amplitude `1/√n_tx`; the
/// estimate is rescaled by `√n_tx` before slicing. With `sigma2 = 0` this is
/// zero forcing, and for one transmit antenna it reduces to maximal-ratio
/// combining.
pub fn equalize_detect(
    y: &[Vec<Complex64>],
    h_est: &[Vec<Vec<Complex64>>],
    sigma2: f64,
    c: &Constellation,
    data_indices: &[usize],
) -> Result<DetectorOutput> {
    let n_rx = y.len();
    if n_rx == 0 || h_est.len() != n_rx {
        return Err(Error::InputShape(format!(
            "{} receive streams for a channel estimate with {} rows",
            n_rx,
            h_est.len()
        )));
    }
    let n_tx = h_est[0].len();
    if n_tx == 0 || h_est.iter().any(|r| r.len() != n_tx) {
        return Err(Error::InputShape("ragged channel estimate".into()));
    }
    if !(sigma2 >= 0.0) {
        return Err(Error::Config(format!("noise variance {sigma2} must be >= 0")));
    }
    let reg = sigma2 * n_tx as f64;
    let gain = (n_tx as f64).sqrt();
    let nd = data_indices.len();
    let mut out = DetectorOutput {
        equalized: vec![Vec::with_capacity(nd); n_tx],
        labels: vec![Vec::with_capacity(nd); n_tx],
        detected_symbols: vec![Vec::with_capacity(nd); n_tx],
        detected_bits: Vec::with_capacity(nd * n_tx * c.bits_per_symbol()),
        erasures: vec![Vec::with_capacity(nd); n_tx],
    };
    let mut a = vec![Complex64::default(); n_tx * n_tx];
    let mut b = vec![Complex64::default(); n_tx];
    for &n in data_indices {
        for i in 0..n_tx {
            b[i] = (0..n_rx).map(|j| h_est[j][i][n].conj() * y[j][n]).sum();
            for k in 0..n_tx {
                a[i * n_tx + k] = (0..n_rx).map(|j| h_est[j][i][n].conj() * h_est[j][k][n]).sum();
            }
            a[i * n_tx + i] += reg;
        }
        let ok = solve_small(&mut a, &mut b, n_tx).is_some();
        for t in 0..n_tx {
            let z = if ok { b[t] * gain } else { Complex64::new(f64::NAN, f64::NAN) };
            let label = if ok { c.nearest(z) } else { 0 };
            out.equalized[t].push(z);
            out.labels[t].push(label);
            out.detected_symbols[t].push(c.points()[label]);
            out.erasures[t].push(!ok);
        }
    }
    for labels in &out.labels {
        for &label in labels {
            c.push_label_bits(label, &mut out.detected_bits);
        }
    }
    Ok(out)
}

/// Bit and symbol error tallies.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ErrorCounts {
    pub bit_errors: u64,
    pub total_bits: u64,
    pub symbol_errors: u64,
    pub total_symbols: u64,
}

impl ErrorCounts {
    pub fn ber(&self) -> f64 {
        self.bit_errors as f64 / self.total_bits.max(1) as f64
    }

    pub fn ser(&self) -> f64 {
        self.symbol_errors as f64 / self.total_symbols.max(1) as f64
    }

    pub fn merge(&mut self, other: &ErrorCounts) {
        self.bit_errors += other.bit_errors;
        self.total_bits += other.total_bits;
        self.symbol_errors += other.symbol_errors;
        self.total_symbols += other.total_symbols;
    }
}

/// Compares bit streams; a symbol is in error when any of its
/// `bits_per_symbol` bits differ.
pub fn count_errors(tx_bits: &[u8], rx_bits: &[u8], bits_per_symbol: usize) -> Result<ErrorCounts> {
    if tx_bits.len() != rx_bits.len() {
        return Err(Error::Input(format!(
            "bit streams differ in length ({} vs {})",
            tx_bits.len(),
            rx_bits.len()
        )));
    }
    if bits_per_symbol == 0 || tx_bits.len() % bits_per_symbol != 0 {
        return Err(Error::InputShape(format!(
            "{} bits do not split into {bits_per_symbol}-bit symbols",
            tx_bits.len()
        )));
    }
    let mut counts = ErrorCounts {
        total_bits: tx_bits.len() as u64,
        total_symbols: (tx_bits.len() / bits_per_symbol) as u64,
        ..Default::default()
    };
    for (a, b) in tx_bits.chunks(bits_per_symbol).zip(rx_bits.chunks(bits_per_symbol)) {
        let wrong = a.iter().zip(b).filter(|(x, y)| x != y).count() as u64;
        counts.bit_errors += wrong;
        counts.symbol_errors += (wrong > 0) as u64;
    }
    Ok(counts)
}
