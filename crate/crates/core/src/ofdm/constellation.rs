use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Supported modulation formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Modulation {
    #[serde(rename = "bpsk")]
    Bpsk,
    #[serde(rename = "4qam")]
    Qam4,
    #[serde(rename = "8psk")]
    Psk8,
}

impl Modulation {
    pub const ALL: [Modulation; 3] = [Modulation::Bpsk, Modulation::Qam4, Modulation::Psk8];

    pub fn bits_per_symbol(self) -> usize {
        match self {
            Modulation::Bpsk => 1,
            Modulation::Qam4 => 2,
            Modulation::Psk8 => 3,
        }
    }

    pub fn order(self) -> usize {
        1 << self.bits_per_symbol()
    }
}

impl fmt::Display for Modulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Modulation::Bpsk => "bpsk",
            Modulation::Qam4 => "4qam",
            Modulation::Psk8 => "8psk",
        })
    }
}

impl FromStr for Modulation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bpsk" => Ok(Modulation::Bpsk),
            "4qam" | "qpsk" | "qam4" => Ok(Modulation::Qam4),
            "8psk" | "psk8" => Ok(Modulation::Psk8),
            other => Err(Error::Config(format!("unknown modulation '{other}'"))),
        }
    }
}

/// A unit-average-power constellation indexed by its Gray label.
///
/// `points[label]` is the symbol transmitted for the bit group `label`, read
/// MSB first. The fixed tables are:
///
/// | kind | label → point |
/// |------|---------------|
/// | BPSK | 0 → +1, 1 → −1 |
/// | 4QAM | 00 → (1+j)/√2, 01 → (1−j)/√2, 10 → (−1+j)/√2, 11 → (−1−j)/√2 |
/// | 8PSK | label at angle kπ/4 is gray(k) = k ⊕ (k ≫ 1): 0,1,3,2,6,7,5,4 for k = 0..7 |
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    kind: Modulation,
    points: Vec<Complex64>,
}

impl Constellation {
    pub fn new(kind: Modulation) -> Self {
        let points = match kind {
            Modulation::Bpsk => vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)],
            Modulation::Qam4 => (0..4)
                .map(|label: u32| {
                    let re = if label & 0b10 == 0 { 1.0 } else { -1.0 };
                    let im = if label & 0b01 == 0 { 1.0 } else { -1.0 };
                    Complex64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
                })
                .collect(),
            Modulation::Psk8 => {
                let mut points = vec![Complex64::default(); 8];
                for k in 0..8usize {
                    let label = k ^ (k >> 1);
                    points[label] = Complex64::from_polar(1.0, k as f64 * PI / 4.0);
                }
                points
            }
        };
        Constellation { kind, points }
    }

    pub fn kind(&self) -> Modulation {
        self.kind
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.kind.bits_per_symbol()
    }

    pub fn order(&self) -> usize {
        self.points.len()
    }

    /// Label of the nearest point; ties go to the lowest label.
    pub fn nearest(&self, z: Complex64) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (label, p) in self.points.iter().enumerate() {
            let d = (z - p).norm_sqr();
            if d < best_d {
                best_d = d;
                best = label;
            }
        }
        best
    }

    /// Nearest label together with the Euclidean distances to the nearest and
    /// second-nearest points.
    pub fn nearest_two(&self, z: Complex64) -> (usize, f64, f64) {
        let mut best = 0;
        let mut d1 = f64::INFINITY;
        let mut d2 = f64::INFINITY;
        for (label, p) in self.points.iter().enumerate() {
            let d = (z - p).norm_sqr();
            if d < d1 {
                d2 = d1;
                d1 = d;
                best = label;
            } else if d < d2 {
                d2 = d;
            }
        }
        (best, d1.sqrt(), d2.sqrt())
    }

    /// Symbol labels for a bit stream, MSB first within each group.
    pub fn labels_from_bits(&self, bits: &[u8]) -> Result<Vec<usize>> {
        let bps = self.bits_per_symbol();
        if bits.len() % bps != 0 {
            return Err(Error::InputShape(format!(
                "{} bits is not a multiple of {bps} bits per symbol",
                bits.len()
            )));
        }
        Ok(bits
            .chunks(bps)
            .map(|g| g.iter().fold(0usize, |acc, &b| (acc << 1) | (b & 1) as usize))
            .collect())
    }

    /// Appends the bits of `label` to `out`, MSB first.
    pub fn push_label_bits(&self, label: usize, out: &mut Vec<u8>) {
        let bps = self.bits_per_symbol();
        for shift in (0..bps).rev() {
            out.push(((label >> shift) & 1) as u8);
        }
    }
}

/// Maps a bit sequence onto constellation points.
pub fn map_bits(bits: &[u8], c: &Constellation) -> Result<Vec<Complex64>> {
    Ok(c.labels_from_bits(bits)?
        .into_iter()
        .map(|label| c.points[label])
        .collect())
}

/// Nearest-point hard decisions, returned as bits.
pub fn hard_demap(symbols: &[Complex64], c: &Constellation) -> Vec<u8> {
    let mut bits = Vec::with_capacity(symbols.len() * c.bits_per_symbol());
    for &z in symbols {
        c.push_label_bits(c.nearest(z), &mut bits);
    }
    bits
}
