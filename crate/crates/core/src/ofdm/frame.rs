use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::transform::{add_cp, remove_cp, with_fft, Direction};
use crate::error::{Error, Result};

/// Comb-pilot frame geometry.
///
/// Antenna `t` owns the comb `round((i·n_tx + t)·N / (Np·n_tx))`, `i = 0..Np`,
/// which for `N mod (Np·n_tx) = 0` is the stride-`N/Np` comb offset by
/// `t·N/(Np·n_tx)`. Every antenna is silent on the other antennas' pilot
/// tones. All remaining tones carry data from every antenna.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameConfig {
    n_subcarriers: usize,
    n_pilots: usize,
    cp_len: usize,
    n_tx: usize,
    n_rx: usize,
    pilot_indices: Vec<Vec<usize>>,
    data_indices: Vec<usize>,
    equispaced: bool,
}

impl FrameConfig {
    pub fn new(
        n_subcarriers: usize,
        n_pilots: usize,
        cp_len: usize,
        n_tx: usize,
        n_rx: usize,
    ) -> Result<Self> {
        if n_subcarriers == 0 || !n_subcarriers.is_power_of_two() {
            return Err(Error::Config(format!(
                "{n_subcarriers} subcarriers is not a power of two"
            )));
        }
        if n_tx == 0 || n_rx == 0 {
            return Err(Error::Config("need at least one transmit and one receive antenna".into()));
        }
        if n_pilots == 0 || n_pilots * n_tx >= n_subcarriers {
            return Err(Error::Config(format!(
                "{n_pilots} pilots per antenna x {n_tx} antennas leaves no data tones out of {n_subcarriers}"
            )));
        }
        if cp_len > n_subcarriers {
            return Err(Error::Config(format!("cyclic prefix {cp_len} exceeds {n_subcarriers}")));
        }
        let slots = n_pilots * n_tx;
        let equispaced = n_subcarriers % slots == 0;
        let mut pilot_indices = vec![Vec::with_capacity(n_pilots); n_tx];
        let mut is_pilot = vec![false; n_subcarriers];
        for slot in 0..slots {
            let idx = ((slot * n_subcarriers) as f64 / slots as f64).round() as usize;
            pilot_indices[slot % n_tx].push(idx);
            is_pilot[idx] = true;
        }
        let data_indices = (0..n_subcarriers).filter(|&n| !is_pilot[n]).collect();
        Ok(FrameConfig {
            n_subcarriers,
            n_pilots,
            cp_len,
            n_tx,
            n_rx,
            pilot_indices,
            data_indices,
            equispaced,
        })
    }

    pub fn n_subcarriers(&self) -> usize {
        self.n_subcarriers
    }

    pub fn n_pilots(&self) -> usize {
        self.n_pilots
    }

    pub fn n_data(&self) -> usize {
        self.data_indices.len()
    }

    pub fn cp_len(&self) -> usize {
        self.cp_len
    }

    pub fn n_tx(&self) -> usize {
        self.n_tx
    }

    pub fn n_rx(&self) -> usize {
        self.n_rx
    }

    pub fn pilot_indices(&self, antenna: usize) -> &[usize] {
        &self.pilot_indices[antenna]
    }

    pub fn data_indices(&self) -> &[usize] {
        &self.data_indices
    }

    /// False when the pilot count does not divide N and the comb was rounded.
    pub fn is_equispaced(&self) -> bool {
        self.equispaced
    }

    /// Per-antenna amplitude that splits unit total power over the antennas.
    pub fn tx_amplitude(&self) -> f64 {
        1.0 / (self.n_tx as f64).sqrt()
    }
}

/// Per-antenna subcarrier symbols of one OFDM frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid {
    /// `symbols[t][n]` is the symbol of antenna `t` on tone `n`.
    pub symbols: Vec<Vec<Complex64>>,
    pub pilot_indices: Vec<Vec<usize>>,
    pub data_indices: Vec<usize>,
}

impl FrequencyGrid {
    pub fn n_tx(&self) -> usize {
        self.symbols.len()
    }

    pub fn n_subcarriers(&self) -> usize {
        self.symbols.first().map_or(0, Vec::len)
    }

    pub fn pilot_symbols(&self, antenna: usize) -> Vec<Complex64> {
        self.pilot_indices[antenna]
            .iter()
            .map(|&n| self.symbols[antenna][n])
            .collect()
    }
}

/// Builds a comb-pilot frame.
///
/// Pilots are unit-modulus QPSK values `e^{j(π/4 + qπ/2)}` drawn from a
/// generator seeded with `pilot_seed`; data symbols fill the data tones in
/// ascending order.
pub fn assemble_frame(
    data_syms: &[Vec<Complex64>],
    cfg: &FrameConfig,
    pilot_seed: u64,
) -> Result<FrequencyGrid> {
    if data_syms.len() != cfg.n_tx {
        return Err(Error::InputShape(format!(
            "{} data streams for {} transmit antennas",
            data_syms.len(),
            cfg.n_tx
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(pilot_seed);
    let mut symbols = vec![vec![Complex64::default(); cfg.n_subcarriers]; cfg.n_tx];
    for (t, (row, data)) in symbols.iter_mut().zip(data_syms).enumerate() {
        if data.len() != cfg.data_indices.len() {
            return Err(Error::InputShape(format!(
                "antenna {t}: {} data symbols for {} data tones",
                data.len(),
                cfg.data_indices.len()
            )));
        }
        for &n in &cfg.pilot_indices[t] {
            let q = rng.random_range(0..4) as f64;
            row[n] = Complex64::from_polar(1.0, FRAC_PI_4 + q * FRAC_PI_2);
        }
        for (&n, &x) in cfg.data_indices.iter().zip(data) {
            row[n] = x;
        }
    }
    Ok(FrequencyGrid {
        symbols,
        pilot_indices: cfg.pilot_indices.clone(),
        data_indices: cfg.data_indices.clone(),
    })
}

/// Baseband samples per transmit antenna, cyclic prefix included.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSignal {
    pub samples: Vec<Vec<Complex64>>,
    pub cp_len: usize,
}

impl TimeSignal {
    /// Inverse-transforms each antenna row, scales by `amplitude` and prepends
    /// the cyclic prefix.
    pub fn from_grid(grid: &FrequencyGrid, cp_len: usize, amplitude: f64) -> Result<Self> {
        let n = grid.n_subcarriers();
        let bodies = with_fft(n, |fft| {
            grid.symbols
                .iter()
                .map(|row| {
                    let mut buf: Vec<Complex64> = row.iter().map(|&x| x * amplitude).collect();
                    fft.process(&mut buf, Direction::Inverse);
                    buf
                })
                .collect::<Vec<_>>()
        })?;
        Self::from_bodies(bodies, cp_len)
    }

    /// Prepends the cyclic prefix to already-synthesized symbol bodies.
    pub fn from_bodies(bodies: Vec<Vec<Complex64>>, cp_len: usize) -> Result<Self> {
        let samples = bodies
            .iter()
            .map(|b| add_cp(b, cp_len))
            .collect::<Result<Vec<_>>>()?;
        Ok(TimeSignal { samples, cp_len })
    }

    /// Symbol length without the prefix.
    pub fn body_len(&self) -> usize {
        self.samples.first().map_or(0, |s| s.len() - self.cp_len)
    }

    /// Strips the prefix and forward-transforms every stream.
    pub fn demodulate(streams: &[Vec<Complex64>], cp_len: usize) -> Result<Vec<Vec<Complex64>>> {
        streams
            .iter()
            .map(|s| {
                let mut body = remove_cp(s, cp_len)?;
                with_fft(body.len(), |fft| fft.process(&mut body, Direction::Forward))?;
                Ok(body)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zeros(cfg: &FrameConfig) -> Vec<Vec<Complex64>> {
        vec![vec![Complex64::new(0.5, 0.5); cfg.n_data()]; cfg.n_tx()]
    }

    #[test]
    fn siso_comb() {
        let cfg = FrameConfig::new(8, 2, 0, 1, 1).unwrap();
        assert_eq!(cfg.pilot_indices(0), &[0, 4]);
        assert_eq!(cfg.data_indices(), &[1, 2, 3, 5, 6, 7]);
        assert!(cfg.is_equispaced());
    }

    #[test]
    fn mimo_disjoint_combs() {
        let cfg = FrameConfig::new(8, 2, 0, 2, 2).unwrap();
        assert_eq!(cfg.pilot_indices(0), &[0, 4]);
        assert_eq!(cfg.pilot_indices(1), &[2, 6]);
        let grid = assemble_frame(&zeros(&cfg), &cfg, 9).unwrap();
        for t in 0..2 {
            for &n in cfg.pilot_indices(t) {
                assert!((grid.symbols[t][n].norm() - 1.0).abs() < 1e-15);
                assert_eq!(grid.symbols[1 - t][n], Complex64::default());
            }
        }
    }

    #[test]
    fn default_geometry() {
        let cfg = FrameConfig::new(256, 16, 16, 1, 1).unwrap();
        assert_eq!(cfg.n_data(), 240);
        assert!(cfg.pilot_indices(0).iter().enumerate().all(|(i, &n)| n == 16 * i));
        let cfg = FrameConfig::new(256, 16, 16, 2, 4).unwrap();
        assert_eq!(cfg.pilot_indices(1)[0], 8);
        assert_eq!(cfg.n_data(), 224);
    }

    #[test]
    fn rounded_comb_when_not_dividing() {
        let cfg = FrameConfig::new(256, 52, 16, 1, 1).unwrap();
        assert!(!cfg.is_equispaced());
        let p = cfg.pilot_indices(0);
        assert_eq!(p.len(), 52);
        assert!(p.windows(2).all(|w| w[1] > w[0] && w[1] - w[0] >= 4 && w[1] - w[0] <= 5));
    }

    #[test]
    fn rejects_bad_geometry() {
        assert!(FrameConfig::new(100, 4, 0, 1, 1).is_err());
        assert!(FrameConfig::new(16, 8, 0, 2, 1).is_err());
        assert!(FrameConfig::new(16, 2, 17, 1, 1).is_err());
    }

    #[test]
    fn deterministic_pilots() {
        let cfg = FrameConfig::new(64, 8, 8, 2, 2).unwrap();
        let a = assemble_frame(&zeros(&cfg), &cfg, 42).unwrap();
        let b = assemble_frame(&zeros(&cfg), &cfg, 42).unwrap();
        assert_eq!(a, b);
        let c = assemble_frame(&zeros(&cfg), &cfg, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn data_count_mismatch() {
        let cfg = FrameConfig::new(8, 2, 0, 1, 1).unwrap();
        let short = vec![vec![Complex64::default(); 5]];
        assert!(matches!(assemble_frame(&short, &cfg, 0), Err(Error::InputShape(_))));
    }

    #[test]
    fn frame_round_trip() {
        let cfg = FrameConfig::new(64, 8, 16, 2, 1).unwrap();
        let data: Vec<Vec<Complex64>> = (0..2)
            .map(|t| (0..cfg.n_data()).map(|i| Complex64::from_polar(1.0, (i * (t + 3)) as f64)).collect())
            .collect();
        let grid = assemble_frame(&data, &cfg, 1).unwrap();
        let tx = TimeSignal::from_grid(&grid, cfg.cp_len(), 1.0).unwrap();
        assert_eq!(tx.samples[0].len(), 80);
        assert_eq!(tx.body_len(), 64);
        let back = TimeSignal::demodulate(&tx.samples, cfg.cp_len()).unwrap();
        for (a, b) in back.iter().flatten().zip(grid.symbols.iter().flatten()) {
            assert!((a - b).norm() < 1e-12);
        }
    }
}
