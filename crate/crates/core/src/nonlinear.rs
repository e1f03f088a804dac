//! Gamma-correction companding, the Rapp solid-state amplifier and PAPR CCDF.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Gamma-correction companding coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GccParams {
    /// Companding exponent; values above one compress the envelope.
    pub gamma: f64,
    /// Amplitude normalization applied after the power law.
    pub amp_norm: f64,
}

impl GccParams {
    pub fn new(gamma: f64, amp_norm: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma >= 1.0) {
            return Err(Error::Config(format!("companding exponent {gamma} must be >= 1")));
        }
        if !(amp_norm.is_finite() && amp_norm > 0.0) {
            return Err(Error::Config(format!("amplitude normalization {amp_norm} must be positive")));
        }
        Ok(GccParams { gamma, amp_norm })
    }

    /// Chooses `amp_norm` so companding preserves the mean power of the
    /// calibration samples: `A = sqrt(mean|s|² / mean|s|^{2/γ})`.
    pub fn calibrate(gamma: f64, samples: &[Complex64]) -> Result<Self> {
        let (p_in, p_out) = samples.iter().fold((0.0, 0.0), |(a, b), z| {
            let r2 = z.norm_sqr();
            (a + r2, b + r2.powf(1.0 / gamma))
        });
        if p_in == 0.0 || p_out == 0.0 {
            return Err(Error::UndefinedMetric("companding calibration on a zero signal".into()));
        }
        GccParams::new(gamma, (p_in / p_out).sqrt())
    }
}

#[inline]
fn scale_magnitude(z: Complex64, f: impl Fn(f64) -> f64) -> Complex64 {
    let r = z.norm();
    if r == 0.0 {
        Complex64::default()
    } else {
        z * (f(r) / r)
    }
}

/// `A·(x/|x|)·|x|^{1/γ}` per sample.
pub fn gcc_compand(s: &[Complex64], p: &GccParams) -> Vec<Complex64> {
    let inv = 1.0 / p.gamma;
    s.iter()
        .map(|&z| scale_magnitude(z, |r| p.amp_norm * r.powf(inv)))
        .collect()
}

/// `(y/|y|)·(|y|/A)^γ` per sample; exact inverse of [`gcc_compand`].
pub fn gcc_expand(y: &[Complex64], p: &GccParams) -> Vec<Complex64> {
    y.iter()
        .map(|&z| scale_magnitude(z, |r| (r / p.amp_norm).powf(p.gamma)))
        .collect()
}

/// Rapp amplifier coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SspaParams {
    /// Small-signal gain.
    pub gain: f64,
    /// Output saturation amplitude, `sqrt(P_sat)`.
    pub a_sat: f64,
    /// Knee (smoothness) factor.
    pub knee: f64,
    /// Input back-off that set `a_sat`, kept for reporting.
    pub ibo_db: f64,
}

impl SspaParams {
    pub fn new(gain: f64, a_sat: f64, knee: f64) -> Result<Self> {
        if !(gain > 0.0 && a_sat > 0.0 && knee > 0.0) {
            return Err(Error::Config(format!(
                "amplifier needs positive gain, saturation and knee (got {gain}, {a_sat}, {knee})"
            )));
        }
        Ok(SspaParams { gain, a_sat, knee, ibo_db: f64::NAN })
    }

    /// Places saturation `ibo_db` above the amplified input RMS level.
    pub fn from_backoff(gain: f64, knee: f64, ibo_db: f64, input_rms: f64) -> Result<Self> {
        let a_sat = gain * input_rms * 10f64.powf(ibo_db / 20.0);
        let mut p = SspaParams::new(gain, a_sat, knee)?;
        p.ibo_db = ibo_db;
        Ok(p)
    }

    /// AM/AM curve `g r / (1 + (g r / A_sat)^{2k})^{1/(2k)}`.
    pub fn am_am(&self, r: f64) -> f64 {
        let gr = self.gain * r;
        let two_k = 2.0 * self.knee;
        // the ratio form avoids overflow of (gr/A)^{2k} for large inputs
        let u = gr / self.a_sat;
        if u > 1.0 {
            self.a_sat / (u.powf(-two_k) + 1.0).powf(1.0 / two_k)
        } else {
            gr / (1.0 + u.powf(two_k)).powf(1.0 / two_k)
        }
    }
}

/// Rapp SSPA: amplitude compression, phase untouched.
pub fn sspa_apply(s: &[Complex64], p: &SspaParams) -> Vec<Complex64> {
    s.iter().map(|&z| scale_magnitude(z, |r| p.am_am(r))).collect()
}

/// Fraction of samples strictly above each threshold.
pub fn empirical_ccdf(papr_samples: &[f64], thresholds: &[f64]) -> Result<Vec<f64>> {
    if papr_samples.is_empty() {
        return Err(Error::UndefinedMetric("CCDF of an empty sample set".into()));
    }
    let mut sorted = papr_samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let total = sorted.len() as f64;
    Ok(thresholds
        .iter()
        .map(|&t| (sorted.len() - sorted.partition_point(|&v| v <= t)) as f64 / total)
        .collect())
}

/// Threshold at which a non-increasing CCDF curve crosses `level`, by linear
/// interpolation of log10 probability. `None` if the curve never brackets it.
pub fn ccdf_crossing(thresholds: &[f64], ccdf: &[f64], level: f64) -> Option<f64> {
    let target = level.log10();
    thresholds
        .windows(2)
        .zip(ccdf.windows(2))
        .find(|(_, p)| p[0] >= level && p[1] < level)
        .map(|(t, p)| {
            let hi = p[0].log10();
            let lo = if p[1] > 0.0 { p[1].log10() } else { hi - 6.0 };
            t[0] + (t[1] - t[0]) * (hi - target) / (hi - lo)
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn linear_companding_is_identity() {
        let p = GccParams::new(1.0, 1.0).unwrap();
        let s = vec![Complex64::new(0.3, -1.2), Complex64::new(-2.0, 0.1)];
        for (a, b) in gcc_compand(&s, &p).iter().zip(&s) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn companding_examples() {
        let p = GccParams::new(2.0, 1.0).unwrap();
        let y = gcc_compand(&[Complex64::new(0.25, 0.0)], &p);
        assert!((y[0] - Complex64::new(0.5, 0.0)).norm() < 1e-15);
        let z = Complex64::from_polar(0.25, PI / 3.0);
        let y = gcc_compand(&[z], &p)[0];
        assert!((y - Complex64::from_polar(0.5, PI / 3.0)).norm() < 1e-15);
        let x = gcc_expand(&[Complex64::new(0.5, 0.0)], &p);
        assert!((x[0] - Complex64::new(0.25, 0.0)).norm() < 1e-15);
        assert_eq!(gcc_expand(&[Complex64::default(); 3], &p), vec![Complex64::default(); 3]);
        assert_eq!(gcc_compand(&[Complex64::default()], &p), vec![Complex64::default()]);
    }

    #[test]
    fn round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let s: Vec<Complex64> = (0..10_000)
            .map(|_| Complex64::new(rng.random::<f64>() * 2.0 - 1.0, rng.random::<f64>() * 2.0 - 1.0))
            .collect();
        let p = GccParams::new(2.0, 1.3).unwrap();
        let back = gcc_expand(&gcc_compand(&s, &p), &p);
        let err = s.iter().zip(&back).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-12, "{err}");
    }

    #[test]
    fn rejects_expanding_exponent() {
        assert!(GccParams::new(0.5, 1.0).is_err());
        assert!(GccParams::new(2.0, 0.0).is_err());
    }

    #[test]
    fn calibration_preserves_power() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let s: Vec<Complex64> = (0..4096)
            .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        let p = GccParams::calibrate(2.0, &s).unwrap();
        let y = gcc_compand(&s, &p);
        let pin: f64 = s.iter().map(|z| z.norm_sqr()).sum();
        let pout: f64 = y.iter().map(|z| z.norm_sqr()).sum();
        assert!((pin - pout).abs() / pin < 1e-12);
    }

    #[test]
    fn sspa_closed_forms() {
        let p = SspaParams::new(1.0, 1.0, 1.0).unwrap();
        let y = sspa_apply(&[Complex64::new(1.0, 0.0)], &p)[0];
        assert!((y.norm() - 1.0 / 2f64.sqrt()).abs() < 1e-12);

        let p = SspaParams::new(2.0, 1.0, 2.0).unwrap();
        let y = sspa_apply(&[Complex64::new(1e-6, 0.0)], &p)[0];
        assert!((y.norm() - 2e-6).abs() / 2e-6 < 1e-9);

        let p = SspaParams::new(1.0, 1.0, 2.0).unwrap();
        let y = sspa_apply(&[Complex64::new(0.0, 1e3)], &p)[0];
        assert!((y.norm() - 1.0).abs() < 1e-6);
        assert!(y.norm() < 1.0);
        assert!((y.arg() - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn sspa_backoff() {
        let p = SspaParams::from_backoff(1.0, 2.0, 6.0, 0.5).unwrap();
        assert!((p.a_sat - 0.5 * 10f64.powf(0.3)).abs() < 1e-15);
        assert_eq!(p.ibo_db, 6.0);
    }

    #[test]
    fn ccdf_examples() {
        let c = empirical_ccdf(&[1.0, 2.0, 3.0], &[0.0, 2.0, 3.0]).unwrap();
        assert_eq!(c, vec![1.0, 1.0 / 3.0, 0.0]);
        assert!(matches!(empirical_ccdf(&[], &[1.0]), Err(Error::UndefinedMetric(_))));
    }

    #[test]
    fn ccdf_matches_brute_force_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let samples: Vec<f64> = (0..100_000).map(|_| (rng.random::<f64>() * 120.0).round() / 10.0).collect();
        let thresholds: Vec<f64> = (0..10).map(|i| i as f64 * 1.2).collect();
        let got = empirical_ccdf(&samples, &thresholds).unwrap();
        for (t, g) in thresholds.iter().zip(got) {
            let count = samples.iter().filter(|&&v| v > *t).count();
            assert_eq!(g, count as f64 / samples.len() as f64);
        }
    }

    #[test]
    fn crossing_interpolates_in_log_domain() {
        let t = [0.0, 1.0, 2.0];
        let c = [1.0, 1e-2, 1e-4];
        let x = ccdf_crossing(&t, &c, 1e-3).unwrap();
        assert!((x - 1.5).abs() < 1e-12);
        assert!(ccdf_crossing(&t, &c, 1e-6).is_none());
    }
}
