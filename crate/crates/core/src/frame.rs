use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::modulation::SymbolMode;

/// K x M grid of complex subcarrier values, symbol-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    symbols: usize,
    subcarriers: usize,
    data: Vec<Complex64>,
}

impl Grid {
    pub fn zeros(symbols: usize, subcarriers: usize) -> Self {
        Self {
            symbols,
            subcarriers,
            data: vec![Complex64::new(0.0, 0.0); symbols * subcarriers],
        }
    }

    pub fn from_vec(symbols: usize, subcarriers: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != symbols * subcarriers {
            return Err(Error::Dimension(format!(
                "{} values for a {symbols} x {subcarriers} grid",
                data.len()
            )));
        }
        Ok(Self {
            symbols,
            subcarriers,
            data,
        })
    }

    pub fn symbols(&self) -> usize {
        self.symbols
    }

    pub fn subcarriers(&self) -> usize {
        self.subcarriers
    }

    pub fn get(&self, k: usize, m: usize) -> Complex64 {
        self.data[k * self.subcarriers + m]
    }

    pub fn set(&mut self, k: usize, m: usize, value: Complex64) {
        self.data[k * self.subcarriers + m] = value;
    }

    pub fn row(&self, k: usize) -> &[Complex64] {
        &self.data[k * self.subcarriers..(k + 1) * self.subcarriers]
    }

    pub fn row_mut(&mut self, k: usize) -> &mut [Complex64] {
        &mut self.data[k * self.subcarriers..(k + 1) * self.subcarriers]
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    /// Elementwise `a * self + b * other`.
    pub fn combine(&self, a: Complex64, other: &Grid, b: Complex64) -> Result<Grid> {
        if self.symbols != other.symbols || self.subcarriers != other.subcarriers {
            return Err(Error::Dimension("grid shapes differ".into()));
        }
        Ok(Grid {
            symbols: self.symbols,
            subcarriers: self.subcarriers,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        })
    }
}

/// An encoded multicarrier frame: the subcarrier grid plus the per-group
/// tone and mode decisions that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct TxFrame {
    pub grid: Grid,
    /// Active tone per (symbol, group), symbol-major.
    pub tones: Vec<usize>,
    /// Modulation mode per (symbol, group), symbol-major.
    pub modes: Vec<SymbolMode>,
    pub groups: usize,
}

impl TxFrame {
    /// A frame carrying raw subcarrier values with no group annotations.
    pub fn from_grid(grid: Grid) -> Self {
        Self {
            grid,
            tones: Vec::new(),
            modes: Vec::new(),
            groups: 0,
        }
    }

    pub fn symbols(&self) -> usize {
        self.grid.symbols()
    }

    pub fn tones_of(&self, k: usize) -> &[usize] {
        &self.tones[k * self.groups..(k + 1) * self.groups]
    }

    pub fn modes_of(&self, k: usize) -> &[SymbolMode] {
        &self.modes[k * self.groups..(k + 1) * self.groups]
    }
}

/// Complex baseband samples with their sample rate and the subcarrier count
/// that sets the frequency unit.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSignal {
    pub samples: Vec<Complex64>,
    pub sample_rate_hz: f64,
    pub num_subcarriers: usize,
    /// Multicarrier symbols carried, 0 for signals not produced by a filter
    /// bank.
    pub symbols: usize,
}

impl TimeSignal {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|x| x.norm_sqr()).sum()
    }

    /// Power per sample over the symbol strides: frame energy divided by
    /// `K * M`. Falls back to the plain mean when `symbols == 0`.
    pub fn symbol_power(&self) -> f64 {
        let span = if self.symbols > 0 {
            self.symbols * self.num_subcarriers
        } else {
            self.samples.len()
        };
        if span == 0 {
            0.0
        } else {
            self.energy() / span as f64
        }
    }

    /// Overlap factor implied by the length `(K - 1) M + L M`.
    pub fn overlap(&self) -> Option<usize> {
        if self.symbols == 0 || self.num_subcarriers == 0 {
            return None;
        }
        let tail = self.samples.len().checked_sub((self.symbols - 1) * self.num_subcarriers)?;
        (tail % self.num_subcarriers == 0).then_some(tail / self.num_subcarriers)
    }

    /// Subcarrier spacing in Hz.
    pub fn subcarrier_spacing_hz(&self) -> f64 {
        self.sample_rate_hz / self.num_subcarriers as f64
    }
}
