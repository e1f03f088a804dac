use std::fmt;
use std::io::{self, Write};

use crate::ofdm::Modulation;

pub const CSV_HEADER: &str =
    "metric,scheme,estimator,modulation,n_tx,n_rx,n_subcarriers,n_pilots,n_reliable,gamma,snr_db,x,y,trials,seed";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    Nmse,
    Ber,
    Ser,
    Ccdf,
    SuccessRate,
    OpCount,
    /// Receiver over transmitter selection cost.
    OpRatio,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Nmse => "nmse",
            Metric::Ber => "ber",
            Metric::Ser => "ser",
            Metric::Ccdf => "ccdf",
            Metric::SuccessRate => "success_rate",
            Metric::OpCount => "op_count",
            Metric::OpRatio => "op_ratio",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRecord {
    pub metric: Metric,
    pub scheme: String,
    /// `ls`, `lmmse` or `none`.
    pub estimator: String,
    pub modulation: Modulation,
    pub n_tx: usize,
    pub n_rx: usize,
    pub n_subcarriers: usize,
    pub n_pilots: usize,
    pub n_reliable: usize,
    pub gamma: Option<f64>,
    pub snr_db: Option<f64>,
    pub x: f64,
    pub y: f64,
    pub trials: usize,
    pub seed: u64,
}

fn opt(v: Option<f64>, none: &str) -> String {
    v.map_or_else(|| none.to_string(), |v| v.to_string())
}

impl MetricRecord {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.metric,
            self.scheme,
            self.estimator,
            self.modulation,
            self.n_tx,
            self.n_rx,
            self.n_subcarriers,
            self.n_pilots,
            self.n_reliable,
            opt(self.gamma, "off"),
            opt(self.snr_db, ""),
            self.x,
            self.y,
            self.trials,
            self.seed
        )
    }
}

pub fn write_csv<W: Write>(out: &mut W, records: &[MetricRecord]) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in records {
        writeln!(out, "{}", r.csv_line())?;
    }
    Ok(())
}

pub fn to_csv_string(records: &[MetricRecord]) -> String {
    let mut buf = Vec::new();
    write_csv(&mut buf, records).expect("writing to memory");
    String::from_utf8(buf).expect("ascii output")
}
