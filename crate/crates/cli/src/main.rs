use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dace_core::sim::{
    complexity_probe, parse_mimo, parse_snr_range, parse_switch, write_csv, ber_sweep, ccdf_sweep, mse_sweep,
    success_rate_sweep, worker_count, Estimator, MetricRecord, SimConfig,
};
use dace_core::{Error, Modulation, SelectionMode};

/// Monte Carlo simulator for data-aided MIMO-OFDM channel estimation.
///
/// Every subcommand writes CSV with the header
/// metric,scheme,estimator,modulation,n_tx,n_rx,n_subcarriers,n_pilots,n_reliable,gamma,snr_db,x,y,trials,seed.
/// Exit codes: 0 success, 2 configuration error, 3 numerical singularity.
/// DACE_SIM_WORKERS caps the worker threads (0 or unset: one per core).
#[derive(Parser, Debug)]
#[command(name = "dace-sim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Channel-estimate NMSE against SNR.
    Mse(Common),
    /// Bit and symbol error rates against SNR.
    Ber(Common),
    /// PAPR CCDF of plain and companded OFDM.
    Ccdf {
        #[command(flatten)]
        common: Common,
        /// Number of OFDM symbols (default: ccdf_symbols from the config).
        #[arg(long)]
        symbols: Option<usize>,
    },
    /// Percentage of frames meeting the target NMSE, per pilot count.
    SuccessRate {
        #[command(flatten)]
        common: Common,
        /// Comma-separated pilot counts (default: pilot_grid from the config).
        #[arg(long, value_delimiter = ',')]
        pilots: Option<Vec<usize>>,
    },
    /// Instrumented operation counts of transmitter and receiver selection.
    Complexity(Common),
}

#[derive(Args, Debug)]
struct Common {
    /// JSON file whose keys mirror the configuration fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// SNR grid as start:step:stop in dB, or a single value.
    #[arg(long)]
    snr: Option<String>,
    /// Comma-separated schemes: pilot-only, tx-peak, tx-peak-literal, rx-rel, random.
    #[arg(long, value_delimiter = ',')]
    scheme: Option<Vec<String>>,
    /// ls, lmmse, or both comma-separated.
    #[arg(long, value_delimiter = ',')]
    est: Option<Vec<String>>,
    /// bpsk, 4qam or 8psk.
    #[arg(long = "mod")]
    modulation: Option<String>,
    /// Antenna configuration such as 2x4.
    #[arg(long)]
    mimo: Option<String>,
    /// Companding exponent, or off.
    #[arg(long)]
    gcc: Option<String>,
    /// Amplifier input back-off in dB, or off.
    #[arg(long)]
    sspa: Option<String>,
}

impl Common {
    fn build(&self) -> Result<SimConfig, Error> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
                SimConfig::from_json(&text)?
            }
            None => SimConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(trials) = self.trials {
            cfg.trials = trials;
        }
        if let Some(snr) = &self.snr {
            cfg.snr_grid = parse_snr_range(snr)?;
            // a single value also sets the operating point of success-rate and complexity runs
            if let [v] = cfg.snr_grid[..] {
                cfg.fixed_snr_db = v;
            }
        }
        if let Some(schemes) = &self.scheme {
            cfg.schemes = schemes.iter().map(|s| s.parse::<SelectionMode>()).collect::<Result<_, _>>()?;
        }
        if let Some(est) = &self.est {
            cfg.estimators = est.iter().map(|s| s.parse::<Estimator>()).collect::<Result<_, _>>()?;
        }
        if let Some(m) = &self.modulation {
            cfg.modulation = m.parse::<Modulation>()?;
        }
        if let Some(mimo) = &self.mimo {
            (cfg.n_tx, cfg.n_rx) = parse_mimo(mimo)?;
        }
        if let Some(g) = &self.gcc {
            cfg.gamma = parse_switch(g, "companding exponent")?;
        }
        if let Some(s) = &self.sspa {
            cfg.sspa_ibo_db = parse_switch(s, "amplifier back-off")?;
        }
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    let workers = worker_count();
    let (common, records, warnings): (&Common, Vec<MetricRecord>, Vec<String>) = match &cli.command {
        Command::Mse(c) => {
            let r = mse_sweep(&c.build()?, workers)?;
            (c, r.records, r.warnings)
        }
        Command::Ber(c) => {
            let r = ber_sweep(&c.build()?, workers)?;
            (c, r.records, r.warnings)
        }
        Command::Ccdf { common, symbols } => {
            let cfg = common.build()?;
            let n = symbols.unwrap_or(cfg.ccdf_symbols);
            (common, ccdf_sweep(&cfg, n, &cfg.papr_grid, workers)?.records, Vec::new())
        }
        Command::SuccessRate { common, pilots } => {
            let cfg = common.build()?;
            let grid = pilots.clone().unwrap_or_else(|| cfg.pilot_grid.clone());
            let r = success_rate_sweep(&cfg, &grid, workers)?;
            (common, r.records, r.warnings)
        }
        Command::Complexity(c) => (c, complexity_probe(&c.build()?, workers)?.records, Vec::new()),
    };
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    let written = match &common.out {
        Some(path) => fs::File::create(path).and_then(|f| {
            let mut out = io::BufWriter::new(f);
            write_csv(&mut out, &records)?;
            out.flush()
        }),
        None => {
            let mut out = io::BufWriter::new(io::stdout().lock());
            write_csv(&mut out, &records).and_then(|_| out.flush())
        }
    };
    written.map_err(|e| Error::Config(format!("cannot write output: {e}")))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
