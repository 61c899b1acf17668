//! FBMC synthesis and analysis filter banks.
//!
//! Symbols are spaced `M` samples apart and each pulse lasts `L * M` samples,
//! so `L` consecutive symbols overlap. With `B = 2` banks, bank `b` shapes the
//! subcarriers `m` with `m mod 2 == b`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::filter::PrototypeFilter;
use crate::frame::{Grid, TimeSignal};

/// Default subcarrier spacing in Hz.
pub const DEFAULT_SUBCARRIER_SPACING_HZ: f64 = 15_000.0;

/// Filter-bank geometry and prototype filters.
#[derive(Debug, Clone)]
pub struct FbmcConfig {
    m_total: usize,
    overlap: usize,
    filters: Vec<PrototypeFilter>,
    subcarrier_spacing_hz: f64,
}

impl FbmcConfig {
    /// `filters` holds one prototype per bank (`B = filters.len()`).
    pub fn new(filters: Vec<PrototypeFilter>) -> Result<Self> {
        let first = filters
            .first()
            .ok_or_else(|| Error::InvalidParameter("at least one filter is required".into()))?;
        let (m_total, overlap) = (first.num_subcarriers(), first.overlap());
        let banks = filters.len();
        if banks > 2 {
            return Err(Error::InvalidParameter(format!(
                "B must be 1 or 2, got {banks}"
            )));
        }
        if m_total % banks != 0 {
            return Err(Error::InvalidParameter(format!(
                "M = {m_total} is not divisible by B = {banks}"
            )));
        }
        for f in &filters {
            if f.num_subcarriers() != m_total || f.overlap() != overlap {
                return Err(Error::InvalidParameter(format!(
                    "filter `{}` is {}x{}, expected M = {m_total}, L = {overlap}",
                    f.label(),
                    f.num_subcarriers(),
                    f.overlap()
                )));
            }
        }
        Ok(Self {
            m_total,
            overlap,
            filters,
            subcarrier_spacing_hz: DEFAULT_SUBCARRIER_SPACING_HZ,
        })
    }

    pub fn single(filter: PrototypeFilter) -> Self {
        Self::new(vec![filter]).expect("a single filter is always a valid bank")
    }

    pub fn with_subcarrier_spacing(mut self, hz: f64) -> Self {
        self.subcarrier_spacing_hz = hz;
        self
    }

    pub fn m_total(&self) -> usize {
        self.m_total
    }

    pub fn overlap(&self) -> usize {
        self.overlap
    }

    pub fn num_banks(&self) -> usize {
        self.filters.len()
    }

    pub fn filters(&self) -> &[PrototypeFilter] {
        &self.filters
    }

    /// Filter shaping subcarrier `m`.
    pub fn filter_for(&self, m: usize) -> &PrototypeFilter {
        &self.filters[m % self.filters.len()]
    }

    pub fn filter_len(&self) -> usize {
        self.overlap * self.m_total
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.subcarrier_spacing_hz * self.m_total as f64
    }

    pub fn subcarrier_spacing_hz(&self) -> f64 {
        self.subcarrier_spacing_hz
    }

    /// Samples produced for a `symbols`-symbol frame: `(K - 1) M + L M`.
    pub fn signal_len(&self, symbols: usize) -> usize {
        if symbols == 0 {
            0
        } else {
            (symbols - 1) * self.m_total + self.filter_len()
        }
    }
}

fn twiddles(m: usize, sign: f64) -> Vec<Complex64> {
    (0..m)
        .map(|r| Complex64::from_polar(1.0, sign * 2.0 * PI * r as f64 / m as f64))
        .collect()
}

/// Precomputed transforms and modulated filters for one [`FbmcConfig`].
///
/// Cheap to clone and safe to share between threads.
#[derive(Clone)]
pub struct FilterBank {
    config: FbmcConfig,
    inverse: Arc<dyn Fft<f64>>,
    forward: Arc<dyn Fft<f64>>,
    /// Per bank: `p_b[n] * exp(j 2 pi n b / M)`.
    shaped: Vec<Vec<Complex64>>,
    /// `exp(j 2 pi r / M)` for `r` in `0..M`.
    phasors: Vec<Complex64>,
}

impl std::fmt::Debug for FilterBank {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FilterBank")
            .field("config", &self.config)
            .finish_non_exhaustive()
    }
}

impl FilterBank {
    pub fn new(config: FbmcConfig) -> Self {
        let m = config.m_total;
        let sub = m / config.num_banks();
        let mut planner = FftPlanner::new();
        let phasors = twiddles(m, 1.0);
        let shaped = config
            .filters
            .iter()
            .enumerate()
            .map(|(b, f)| {
                f.coeffs()
                    .iter()
                    .enumerate()
                    .map(|(n, &p)| phasors[(n * b) % m] * p)
                    .collect()
            })
            .collect();
        Self {
            inverse: planner.plan_fft_inverse(sub),
            forward: planner.plan_fft_forward(sub),
            shaped,
            phasors,
            config,
        }
    }

    pub fn config(&self) -> &FbmcConfig {
        &self.config
    }

    fn check_frame(&self, frame: &Grid) -> Result<()> {
        if frame.subcarriers() != self.config.m_total {
            return Err(Error::Dimension(format!(
                "frame has {} subcarriers, bank has M = {}",
                frame.subcarriers(),
                self.config.m_total
            )));
        }
        Ok(())
    }

    fn wrap(&self, samples: Vec<Complex64>, symbols: usize) -> TimeSignal {
        TimeSignal {
            samples,
            sample_rate_hz: self.config.sample_rate_hz(),
            num_subcarriers: self.config.m_total,
            symbols,
        }
    }

    /// Literal double sum `x(n) = sum_k sum_m p_b[n - kM] D_m[k] e^{j 2 pi n m / M}`.
    pub fn synthesize_direct(&self, frame: &Grid) -> Result<TimeSignal> {
        self.check_frame(frame)?;
        let m_total = self.config.m_total;
        let len = self.config.filter_len();
        let mut x = vec![Complex64::new(0.0, 0.0); self.config.signal_len(frame.symbols())];
        for k in 0..frame.symbols() {
            let start = k * m_total;
            for (m, &d) in frame.row(k).iter().enumerate() {
                if d == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let p = self.config.filter_for(m).coeffs();
                for n in 0..len {
                    let abs = start + n;
                    x[abs] += d * p[n] * self.phasors[(abs * m) % m_total];
                }
            }
        }
        Ok(self.wrap(x, frame.symbols()))
    }

    /// Per symbol and bank: `(M/B)`-point IDFT, periodic extension to `L M`,
    /// multiplication by the bank-shifted prototype, overlap-add.
    pub fn synthesize_fast(&self, frame: &Grid) -> Result<TimeSignal> {
        self.check_frame(frame)?;
        let m_total = self.config.m_total;
        let banks = self.config.num_banks();
        let sub = m_total / banks;
        let len = self.config.filter_len();
        let mut x = vec![Complex64::new(0.0, 0.0); self.config.signal_len(frame.symbols())];
        let mut buf = vec![Complex64::new(0.0, 0.0); sub];
        let mut scratch = vec![Complex64::new(0.0, 0.0); self.inverse.get_inplace_scratch_len()];
        for k in 0..frame.symbols() {
            let row = frame.row(k);
            let out = &mut x[k * m_total..k * m_total + len];
            for (b, shaped) in self.shaped.iter().enumerate() {
                for (s, slot) in buf.iter_mut().enumerate() {
                    *slot = row[s * banks + b];
                }
                if buf.iter().all(|v| *v == Complex64::new(0.0, 0.0)) {
                    continue;
                }
                self.inverse.process_with_scratch(&mut buf, &mut scratch);
                for (n, (o, &p)) in out.iter_mut().zip(shaped).enumerate() {
                    *o += p * buf[n % sub];
                }
            }
        }
        Ok(self.wrap(x, frame.symbols()))
    }

    /// Matched-filter bank: `y_m[k] = sum_n x(n) conj(p_b[n - kM] e^{j 2 pi n m / M})`.
    ///
    /// Samples past the end of `signal` are treated as zero.
    pub fn analyze(&self, signal: &[Complex64], symbols: usize) -> Result<Grid> {
        let needed = symbols * self.config.m_total;
        if signal.len() < needed {
            return Err(Error::SignalTooShort {
                len: signal.len(),
                needed,
            });
        }
        let m_total = self.config.m_total;
        let banks = self.config.num_banks();
        let sub = m_total / banks;
        let len = self.config.filter_len();
        let mut grid = Grid::zeros(symbols, m_total);
        let mut fold = vec![Complex64::new(0.0, 0.0); sub];
        let mut scratch = vec![Complex64::new(0.0, 0.0); self.forward.get_inplace_scratch_len()];
        for k in 0..symbols {
            let start = k * m_total;
            let end = (start + len).min(signal.len());
            let segment = if start < end { &signal[start..end] } else { &[][..] };
            for (b, shaped) in self.shaped.iter().enumerate() {
                fold.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
                for (n, (x, p)) in segment.iter().zip(shaped).enumerate() {
                    fold[n % sub] += x * p.conj();
                }
                self.forward.process_with_scratch(&mut fold, &mut scratch);
                let row = grid.row_mut(k);
                for (s, v) in fold.iter().enumerate() {
                    row[s * banks + b] = *v;
                }
            }
        }
        Ok(grid)
    }

    /// Inner-product form of [`FilterBank::analyze`], used as a reference.
    pub fn analyze_direct(&self, signal: &[Complex64], symbols: usize) -> Result<Grid> {
        let m_total = self.config.m_total;
        let len = self.config.filter_len();
        let mut grid = Grid::zeros(symbols, m_total);
        for k in 0..symbols {
            let start = k * m_total;
            for m in 0..m_total {
                let p = self.config.filter_for(m).coeffs();
                let mut acc = Complex64::new(0.0, 0.0);
                for n in 0..len {
                    let abs = start + n;
                    if abs >= signal.len() {
                        break;
                    }
                    acc += signal[abs] * (self.phasors[(abs * m) % m_total] * p[n]).conj();
                }
                grid.set(k, m, acc);
            }
        }
        Ok(grid)
    }
}

pub fn synthesize_direct(frame: &Grid, config: &FbmcConfig) -> Result<TimeSignal> {
    FilterBank::new(config.clone()).synthesize_direct(frame)
}

pub fn synthesize_fast(frame: &Grid, config: &FbmcConfig) -> Result<TimeSignal> {
    FilterBank::new(config.clone()).synthesize_fast(frame)
}

pub fn analyze(signal: &TimeSignal, config: &FbmcConfig, symbols: usize) -> Result<Grid> {
    FilterBank::new(config.clone()).analyze(&signal.samples, symbols)
}

/// Cross-coefficient between the transmit pulse of subcarrier `m` and the
/// receive filter of subcarrier `m_prime` delayed by `lag * M` samples:
/// `sum_n tx[n] e^{j2pi n m/M} conj(rx[n - lag M] e^{j2pi (n - lag M) m'/M})`.
pub fn transmux_response(
    tx: &PrototypeFilter,
    rx: &PrototypeFilter,
    m: usize,
    m_prime: usize,
    lag: i64,
) -> Result<Complex64> {
    if tx.len() != rx.len() || tx.num_subcarriers() != rx.num_subcarriers() {
        return Err(Error::LengthMismatch {
            left: tx.len(),
            right: rx.len(),
        });
    }
    let overlap = tx.overlap();
    if lag.unsigned_abs() as usize > overlap {
        return Err(Error::LagOutOfRange { lag, max: overlap });
    }
    let m_total = tx.num_subcarriers() as i64;
    let len = tx.len() as i64;
    let shift = lag * m_total;
    let (m, mp) = (m as i64, m_prime as i64);
    let mut acc = Complex64::new(0.0, 0.0);
    for n in shift.max(0)..(len + shift).min(len) {
        let j = n - shift;
        // exponent n m - (n - shift) m', reduced mod M
        let r = (n * m - j * mp).rem_euclid(m_total);
        let phase = Complex64::from_polar(1.0, 2.0 * PI * r as f64 / m_total as f64);
        acc += phase * tx.coeffs()[n as usize] * rx.coeffs()[j as usize];
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter::{block_interleave, phydyas};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_grid(rng: &mut ChaCha8Rng, k: usize, m: usize) -> Grid {
        let data = (0..k * m)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        Grid::from_vec(k, m, data).unwrap()
    }

    fn rel_rms(a: &[Complex64], b: &[Complex64]) -> f64 {
        let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
        let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
        (num / den).sqrt()
    }

    #[test]
    fn zero_frame_gives_zero_signal() {
        let bank = FilterBank::new(FbmcConfig::single(phydyas(8, 4).unwrap()));
        let x = bank.synthesize_fast(&Grid::zeros(3, 8)).unwrap();
        assert_eq!(x.len(), 2 * 8 + 32);
        assert!(x.samples.iter().all(|v| v.norm() == 0.0));
        let y = bank.analyze(&x.samples, 3).unwrap();
        assert!(y.as_slice().iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn single_symbol_is_modulated_pulse() {
        let f = phydyas(16, 4).unwrap();
        let bank = FilterBank::new(FbmcConfig::single(f.clone()));
        let mut grid = Grid::zeros(1, 16);
        grid.set(0, 5, Complex64::new(1.0, 0.0));
        for x in [
            bank.synthesize_direct(&grid).unwrap(),
            bank.synthesize_fast(&grid).unwrap(),
        ] {
            for (n, v) in x.samples.iter().enumerate() {
                let expect = Complex64::from_polar(f.coeffs()[n], 2.0 * PI * (n * 5) as f64 / 16.0);
                assert_abs_diff_eq!((v - expect).norm(), 0.0, epsilon = 1e-12);
            }
            assert_abs_diff_eq!(x.energy(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn fast_matches_direct_two_banks() {
        let f = phydyas(16, 4).unwrap();
        let cfg = FbmcConfig::new(vec![f.clone(), block_interleave(&f)]).unwrap();
        let bank = FilterBank::new(cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let grid = random_grid(&mut rng, 6, 16);
        let a = bank.synthesize_fast(&grid).unwrap();
        let b = bank.synthesize_direct(&grid).unwrap();
        assert!(rel_rms(&a.samples, &b.samples) < 1e-12);
    }

    #[test]
    fn fast_analysis_matches_inner_products() {
        let f = phydyas(12, 4).unwrap();
        for cfg in [
            FbmcConfig::single(f.clone()),
            FbmcConfig::new(vec![f.clone(), block_interleave(&f)]).unwrap(),
        ] {
            let bank = FilterBank::new(cfg);
            let mut rng = ChaCha8Rng::seed_from_u64(4);
            let signal: Vec<Complex64> = (0..200)
                .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect();
            let a = bank.analyze(&signal, 10).unwrap();
            let b = bank.analyze_direct(&signal, 10).unwrap();
            assert!(rel_rms(a.as_slice(), b.as_slice()) < 1e-12);
        }
    }

    #[test]
    fn isolated_symbol_has_unit_matched_gain() {
        let bank = FilterBank::new(FbmcConfig::single(phydyas(32, 4).unwrap()));
        let mut grid = Grid::zeros(1, 32);
        grid.set(0, 7, Complex64::new(1.0, 0.0));
        let x = bank.synthesize_fast(&grid).unwrap();
        let y = bank.analyze(&x.samples, 1).unwrap();
        assert_abs_diff_eq!(y.get(0, 7).re, 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(y.get(0, 7).im, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn tones_three_apart_barely_leak() {
        let f = phydyas(64, 4).unwrap();
        let bank = FilterBank::new(FbmcConfig::single(f));
        let mut grid = Grid::zeros(1, 64);
        grid.set(0, 10, Complex64::new(1.0, 0.0));
        grid.set(0, 13, Complex64::new(0.0, 1.0));
        let y = bank
            .analyze(&bank.synthesize_fast(&grid).unwrap().samples, 1)
            .unwrap();
        assert!((y.get(0, 10) - Complex64::new(1.0, 0.0)).norm() <= 1e-3);
        assert!((y.get(0, 13) - Complex64::new(0.0, 1.0)).norm() <= 1e-3);
    }

    #[test]
    fn transmux_basics() {
        let f = phydyas(16, 4).unwrap();
        assert_abs_diff_eq!(transmux_response(&f, &f, 3, 3, 0).unwrap().re, 1.0, epsilon = 1e-12);
        for lag in [-4, 4] {
            assert_eq!(transmux_response(&f, &f, 3, 4, lag).unwrap().norm(), 0.0);
        }
        assert!(matches!(
            transmux_response(&f, &f, 0, 0, 5),
            Err(Error::LagOutOfRange { lag: 5, max: 4 })
        ));
    }

    #[test]
    fn transmux_lag_symmetry() {
        let f = phydyas(16, 4).unwrap();
        let g = block_interleave(&f);
        for (m, mp) in [(0, 1), (3, 5), (15, 0), (7, 7)] {
            for lag in -3..=3 {
                let a = transmux_response(&f, &f, m, mp, lag).unwrap();
                let b = transmux_response(&f, &f, mp, m, -lag).unwrap();
                assert_abs_diff_eq!(a.norm(), b.norm(), epsilon = 1e-12);
                let a = transmux_response(&f, &g, m, mp, lag).unwrap();
                let b = transmux_response(&g, &f, mp, m, -lag).unwrap();
                assert_abs_diff_eq!(a.norm(), b.norm(), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn phydyas_transmux_is_real() {
        let f = phydyas(20, 4).unwrap();
        for (m, mp) in [(0, 1), (4, 2), (19, 0), (6, 9)] {
            for lag in -3..=3 {
                assert!(transmux_response(&f, &f, m, mp, lag).unwrap().im.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn dimension_checks() {
        let bank = FilterBank::new(FbmcConfig::single(phydyas(8, 4).unwrap()));
        assert!(bank.synthesize_fast(&Grid::zeros(2, 6)).is_err());
        assert!(bank.analyze(&[Complex64::new(0.0, 0.0); 3], 4).is_err());
        let f = phydyas(8, 4).unwrap();
        let g = phydyas(6, 4).unwrap();
        assert!(FbmcConfig::new(vec![f.clone(), g]).is_err());
        assert!(FbmcConfig::new(vec![f.clone(), f.clone(), f]).is_err());
        assert!(FbmcConfig::new(vec![]).is_err());
    }
}
