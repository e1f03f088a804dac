//! Fixed random workloads for the selection benchmarks.

use dace_core::channel::complex_gaussian;
use dace_core::{assemble_frame, Complex64, Constellation, FrameConfig, FrequencyGrid, Modulation};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// One SISO frame plus noisy equalized observations of its data tones.
pub struct Workload {
    pub frame: FrameConfig,
    pub grid: FrequencyGrid,
    pub constellation: Constellation,
    /// Equalized observation of each data tone, in data-tone order.
    pub equalized: Vec<Complex64>,
    pub sigma2: f64,
    /// Reliable carriers to pick, one per pilot.
    pub count: usize,
}

impl Workload {
    /// `n` tones with `n/16` pilots at the given SNR.
    pub fn new(n: usize, modulation: Modulation, snr_db: f64, seed: u64) -> Self {
        let frame = FrameConfig::new(n, n / 16, 16, 1, 1).expect("valid frame");
        let constellation = Constellation::new(modulation);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data: Vec<Complex64> = (0..frame.n_data())
            .map(|_| constellation.points()[rng.random_range(0..constellation.order())])
            .collect();
        let grid = assemble_frame(&[data.clone()], &frame, seed).expect("frame assembles");
        let sigma2 = 10f64.powf(-snr_db / 10.0);
        let equalized = data
            .iter()
            .map(|&x| {
                let h = complex_gaussian(&mut rng, 1.0);
                x + complex_gaussian(&mut rng, sigma2) / h
            })
            .collect();
        Workload { frame, grid, constellation, equalized, sigma2, count: n / 16 }
    }
}
