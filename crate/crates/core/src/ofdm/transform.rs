use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Time samples to subcarriers: X[n] = N^{-1/2} Σ s[k] e^{-j2πnk/N}.
    Forward,
    /// Subcarriers to time samples: s[k] = N^{-1/2} Σ X[n] e^{+j2πnk/N}.
    Inverse,
}

/// Planned unitary DFT pair of a fixed power-of-two length.
#[derive(Clone)]
pub struct UnitaryFft {
    n: usize,
    scale: f64,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl UnitaryFft {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 || !n.is_power_of_two() {
            return Err(Error::Config(format!("transform length {n} is not a power of two")));
        }
        let mut planner = FftPlanner::new();
        Ok(UnitaryFft {
            n,
            scale: 1.0 / (n as f64).sqrt(),
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// In-place unitary transform. `buf.len()` must equal the planned length.
    pub fn process(&self, buf: &mut [Complex64], direction: Direction) {
        assert_eq!(buf.len(), self.n, "buffer length does not match planned transform");
        match direction {
            Direction::Forward => self.forward.process(buf),
            Direction::Inverse => self.inverse.process(buf),
        }
        for z in buf.iter_mut() {
            *z *= self.scale;
        }
    }

    /// In-place transform without the 1/√N factor (plain DFT sum).
    pub fn process_unscaled(&self, buf: &mut [Complex64], direction: Direction) {
        assert_eq!(buf.len(), self.n, "buffer length does not match planned transform");
        match direction {
            Direction::Forward => self.forward.process(buf),
            Direction::Inverse => self.inverse.process(buf),
        }
    }
}

thread_local! {
    static PLANS: RefCell<HashMap<usize, UnitaryFft>> = RefCell::new(HashMap::new());
}

/// Runs `f` with a cached plan for length `n` on the current thread.
pub fn with_fft<R>(n: usize, f: impl FnOnce(&UnitaryFft) -> R) -> Result<R> {
    let plan = PLANS.with(|plans| -> Result<UnitaryFft> {
        if let Some(p) = plans.borrow().get(&n) {
            return Ok(p.clone());
        }
        let p = UnitaryFft::new(n)?;
        plans.borrow_mut().insert(n, p.clone());
        Ok(p)
    })?;
    Ok(f(&plan))
}

/// Unitary DFT of a power-of-two length vector.
pub fn transform(x: &[Complex64], direction: Direction) -> Result<Vec<Complex64>> {
    with_fft(x.len(), |fft| {
        let mut buf = x.to_vec();
        fft.process(&mut buf, direction);
        buf
    })
}

/// Time-domain samples of a spectrum, interpolated by `factor` through
/// zero-padding the middle of the spectrum. The result keeps the mean power of
/// the Nyquist-rate signal, so PAPR values are comparable across factors.
pub fn oversampled_inverse(spectrum: &[Complex64], factor: usize) -> Result<Vec<Complex64>> {
    let n = spectrum.len();
    if factor == 0 || !factor.is_power_of_two() {
        return Err(Error::Config(format!("oversampling factor {factor} is not a power of two")));
    }
    if factor == 1 {
        return transform(spectrum, Direction::Inverse);
    }
    let m = n * factor;
    let half = n / 2;
    let mut padded = vec![Complex64::default(); m];
    padded[..half].copy_from_slice(&spectrum[..half]);
    padded[m - (n - half)..].copy_from_slice(&spectrum[half..]);
    let mut s = transform(&padded, Direction::Inverse)?;
    let gain = (factor as f64).sqrt();
    for z in s.iter_mut() {
        *z *= gain;
    }
    Ok(s)
}

/// Prepends the last `cp_len` samples.
pub fn add_cp(x: &[Complex64], cp_len: usize) -> Result<Vec<Complex64>> {
    if cp_len > x.len() {
        return Err(Error::Config(format!(
            "cyclic prefix {cp_len} longer than symbol {}",
            x.len()
        )));
    }
    let mut out = Vec::with_capacity(x.len() + cp_len);
    out.extend_from_slice(&x[x.len() - cp_len..]);
    out.extend_from_slice(x);
    Ok(out)
}

/// Drops the first `cp_len` samples.
pub fn remove_cp(x: &[Complex64], cp_len: usize) -> Result<Vec<Complex64>> {
    if cp_len > x.len() {
        return Err(Error::Config(format!(
            "cyclic prefix {cp_len} longer than frame {}",
            x.len()
        )));
    }
    Ok(x[cp_len..].to_vec())
}

/// Peak-to-average power ratio in dB.
pub fn papr_db(s: &[Complex64]) -> Result<f64> {
    let mut peak = 0.0f64;
    let mut total = 0.0;
    for z in s {
        let p = z.norm_sqr();
        peak = peak.max(p);
        total += p;
    }
    if s.is_empty() || total == 0.0 {
        return Err(Error::UndefinedMetric("PAPR of an all-zero signal".into()));
    }
    let ratio = peak / (total / s.len() as f64);
    // a constant envelope can round to a ratio a hair below one
    Ok(10.0 * ratio.max(1.0).log10())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
        (0..n)
            .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect()
    }

    fn naive_dft(x: &[Complex64], sign: f64) -> Vec<Complex64> {
        let n = x.len();
        (0..n)
            .map(|k| {
                x.iter()
                    .enumerate()
                    .map(|(i, &v)| v * Complex64::from_polar(1.0, sign * 2.0 * PI * (k * i) as f64 / n as f64))
                    .sum::<Complex64>()
                    / (n as f64).sqrt()
            })
            .collect()
    }

    #[test]
    fn inverse_of_flat_spectrum_is_impulse() {
        let x = vec![Complex64::new(1.0, 0.0); 256];
        let s = transform(&x, Direction::Inverse).unwrap();
        assert!((s[0] - Complex64::new(16.0, 0.0)).norm() < 1e-12);
        assert!(s[1..].iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn matches_naive_dft() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = random_vec(&mut rng, 32);
        let f = transform(&x, Direction::Forward).unwrap();
        let i = transform(&x, Direction::Inverse).unwrap();
        for (a, b) in f.iter().zip(naive_dft(&x, -1.0)) {
            assert!((a - b).norm() < 1e-12);
        }
        for (a, b) in i.iter().zip(naive_dft(&x, 1.0)) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn unitary_and_parseval() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let x = random_vec(&mut rng, 256);
            let y = transform(&x, Direction::Inverse).unwrap();
            let back = transform(&y, Direction::Forward).unwrap();
            let ex: f64 = x.iter().map(|z| z.norm_sqr()).sum();
            let ey: f64 = y.iter().map(|z| z.norm_sqr()).sum();
            assert!((ex - ey).abs() < 1e-12);
            assert!(x.iter().zip(&back).all(|(a, b)| (a - b).norm() < 1e-12));
        }
    }

    #[test]
    fn non_power_of_two_rejected() {
        let x = vec![Complex64::default(); 12];
        assert!(matches!(transform(&x, Direction::Forward), Err(Error::Config(_))));
    }

    #[test]
    fn cyclic_prefix() {
        let x: Vec<Complex64> = (0..4).map(|i| Complex64::new(i as f64, 0.0)).collect();
        let y = add_cp(&x, 2).unwrap();
        let expect: Vec<Complex64> = [2.0, 3.0, 0.0, 1.0, 2.0, 3.0]
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .collect();
        assert_eq!(y, expect);
        assert_eq!(add_cp(&x, 0).unwrap(), x);
        assert_eq!(remove_cp(&y, 2).unwrap(), x);
        assert!(add_cp(&x, 5).is_err());
    }

    #[test]
    fn papr_values() {
        let s = transform(&vec![Complex64::new(1.0, 0.0); 256], Direction::Inverse).unwrap();
        assert!((papr_db(&s).unwrap() - 10.0 * 256f64.log10()).abs() < 1e-9);
        let flat: Vec<Complex64> = (0..64).map(|k| Complex64::from_polar(2.0, k as f64)).collect();
        assert!(papr_db(&flat).unwrap().abs() < 1e-12);
        assert!(matches!(papr_db(&[Complex64::default(); 4]), Err(Error::UndefinedMetric(_))));
    }

    #[test]
    fn papr_random_qpsk_against_direct_recompute() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let x: Vec<Complex64> = (0..16)
                .map(|_| Complex64::from_polar(1.0, PI / 4.0 + PI / 2.0 * rng.random_range(0..4) as f64))
                .collect();
            let s = naive_dft(&x, 1.0);
            let powers: Vec<f64> = s.iter().map(|z| z.re * z.re + z.im * z.im).collect();
            let max = powers.iter().cloned().fold(0.0, f64::max);
            let mean = powers.iter().sum::<f64>() / 16.0;
            let expect = 10.0 * (max / mean).log10();
            let got = papr_db(&transform(&x, Direction::Inverse).unwrap()).unwrap();
            assert!((got - expect).abs() < 1e-9);
        }
    }

    #[test]
    fn oversampling_keeps_nyquist_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = random_vec(&mut rng, 64);
        // zero the Nyquist bin so interpolation is exact at the original instants
        let mut x = x;
        x[32] = Complex64::default();
        let s1 = oversampled_inverse(&x, 1).unwrap();
        let s4 = oversampled_inverse(&x, 4).unwrap();
        for k in 0..64 {
            assert!((s1[k] - s4[4 * k]).norm() < 1e-12);
        }
        let p1: f64 = s1.iter().map(|z| z.norm_sqr()).sum::<f64>() / 64.0;
        let p4: f64 = s4.iter().map(|z| z.norm_sqr()).sum::<f64>() / 256.0;
        assert!((p1 - p4).abs() < 1e-12);
    }
}
