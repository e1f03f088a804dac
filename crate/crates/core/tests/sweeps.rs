use dace_core::sim::{
    ber_sweep, ccdf_sweep, mse_sweep, paired_ber_diff, success_rate_sweep, to_csv_string, Estimator, Prior, SimConfig,
};
use dace_core::{Error, Modulation, SelectionMode};

const ALL_SCHEMES: [SelectionMode; 4] = [
    SelectionMode::PilotOnly,
    SelectionMode::TxPeakPhaseAlign,
    SelectionMode::RxReliability,
    SelectionMode::RandomCarriers,
];

#[test]
fn bit_errors_vanish_at_high_snr() {
    let cfg = SimConfig {
        n_rx: 2,
        modulation: Modulation::Qam4,
        schemes: ALL_SCHEMES.to_vec(),
        snr_grid: vec![60.0],
        trials: 300,
        ..Default::default()
    };
    let r = ber_sweep(&cfg, 1).unwrap();
    for p in &r.points {
        assert!(p.ber() < 1e-4, "{:?} {:?}: {}", p.scheme, p.estimator, p.ber());
    }
}

#[test]
fn bit_error_rate_falls_with_snr() {
    let cfg = SimConfig {
        schemes: vec![SelectionMode::PilotOnly, SelectionMode::TxPeakPhaseAlign],
        estimators: vec![Estimator::Ls],
        snr_grid: vec![0.0, 10.0, 20.0, 30.0],
        trials: 2000,
        seed: 7,
        ..Default::default()
    };
    let r = ber_sweep(&cfg, 1).unwrap();
    for scheme in &cfg.schemes {
        for w in cfg.snr_grid.windows(2) {
            let lo = r.point(*scheme, Estimator::Ls, w[0]).unwrap();
            let hi = r.point(*scheme, Estimator::Ls, w[1]).unwrap();
            let d = paired_ber_diff(hi, lo);
            assert!(d.mean <= 3.0 * d.std_err, "{scheme:?} {} -> {} dB: {d:?}", w[0], w[1]);
        }
    }
}

#[test]
fn success_rate_grows_with_pilots() {
    let cfg = SimConfig {
        schemes: vec![SelectionMode::PilotOnly],
        estimators: vec![Estimator::Ls],
        trials: 1000,
        ..Default::default()
    };
    let grid = [16, 32, 64];
    let r = success_rate_sweep(&cfg, &grid, 1).unwrap();
    let rates: Vec<f64> = grid
        .iter()
        .map(|&np| r.point_at_pilots(SelectionMode::PilotOnly, Estimator::Ls, np).unwrap().success_fraction(cfg.target_mse))
        .collect();
    for w in rates.windows(2) {
        let se = (w[0] * (1.0 - w[0]) / cfg.trials as f64).sqrt();
        assert!(w[1] + 3.0 * se >= w[0], "{rates:?}");
    }
    assert!(r.warnings.is_empty());
}

#[test]
fn non_dividing_pilot_count_warns() {
    let cfg = SimConfig {
        schemes: vec![SelectionMode::PilotOnly],
        estimators: vec![Estimator::Ls],
        trials: 3,
        ..Default::default()
    };
    let r = success_rate_sweep(&cfg, &[52], 1).unwrap();
    assert_eq!(r.warnings.len(), 1);
    assert!(r.warnings[0].contains("52"));
}

#[test]
fn unit_exponent_leaves_ccdf_unchanged() {
    let cfg = SimConfig { gamma: Some(1.0), ..Default::default() };
    let grid: Vec<f64> = (0..=130).map(|i| i as f64 / 10.0).collect();
    let r = ccdf_sweep(&cfg, 2000, &grid, 1).unwrap();
    assert_eq!(r.gamma, 1.0);
    for (a, b) in r.plain.iter().zip(&r.companded) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn identical_configs_give_identical_csv() {
    let cfg = SimConfig {
        n_tx: 2,
        n_rx: 4,
        gamma: Some(1.5),
        sspa_ibo_db: Some(6.0),
        snr_grid: vec![5.0, 15.0],
        trials: 20,
        seed: 11,
        ..Default::default()
    };
    let a = to_csv_string(&mse_sweep(&cfg, 1).unwrap().records);
    let b = to_csv_string(&mse_sweep(&cfg, 1).unwrap().records);
    assert_eq!(a, b);
    let other = to_csv_string(&mse_sweep(&SimConfig { seed: 12, ..cfg }, 1).unwrap().records);
    assert_ne!(a, other);
}

#[test]
fn invalid_configuration_is_rejected() {
    let bad = [
        SimConfig { n_subcarriers: 100, ..Default::default() },
        SimConfig { trials: 0, ..Default::default() },
        SimConfig { n_reliable: 1000, ..Default::default() },
        SimConfig { gamma: Some(0.5), ..Default::default() },
        SimConfig { snr_grid: vec![], ..Default::default() },
        SimConfig { n_tx: 0, ..Default::default() },
    ];
    for cfg in bad {
        let err = mse_sweep(&cfg, 1).unwrap_err();
        assert!(matches!(err, Error::Config(_)), "{err:?}");
        assert_eq!(err.exit_code(), 2);
    }
}

#[test]
fn underdetermined_least_squares_is_singular() {
    let cfg = SimConfig {
        n_pilots: 8,
        estimators: vec![Estimator::Ls],
        schemes: vec![SelectionMode::PilotOnly],
        trials: 2,
        ..Default::default()
    };
    let err = mse_sweep(&cfg, 1).unwrap_err();
    assert!(matches!(err, Error::Singular { .. }), "{err:?}");
    assert_eq!(err.exit_code(), 3);
}

#[test]
fn uniform_prior_runs_and_stays_close_to_true_prior() {
    let base = SimConfig {
        estimators: vec![Estimator::Lmmse],
        schemes: vec![SelectionMode::PilotOnly],
        snr_grid: vec![20.0],
        trials: 500,
        ..Default::default()
    };
    let t = mse_sweep(&base, 1).unwrap().points[0].nmse();
    let u = mse_sweep(&SimConfig { prior: Prior::Uniform, ..base }, 1).unwrap().points[0].nmse();
    assert!(u.is_finite() && u > 0.0);
    // a mismatched prior cannot beat the matched one by much
    assert!(u > 0.8 * t, "uniform {u} true {t}");
}
