//! AWGN and EVA tapped-delay-line channels, plus one-tap ZF equalization.
//!
//! Every stochastic function takes the generator explicitly; the same seed
//! reproduces the same output bit for bit.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::frame::{Grid, TimeSignal};
use crate::modulation::{rate, FqamConfig};

/// Noise calibration for a given Eb/N0.
///
/// `sigma^2 = P / (10^(EbN0/10) * R_group / M_F)` where `P` is the signal
/// power per sample over the symbol strides (frame energy over `K * M`) and
/// `R_group` the average bits per group per symbol. With unit-energy filters
/// and unit-energy payloads this gives every active tone `Es/N0 = R_group * Eb/N0`
/// after the matched filter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AwgnSpec {
    pub ebn0_db: f64,
    pub bits_per_group: f64,
    pub mf: usize,
}

impl AwgnSpec {
    pub fn new(ebn0_db: f64, fqam: &FqamConfig) -> Self {
        Self {
            ebn0_db,
            bits_per_group: rate(fqam).r_bits_per_symbol,
            mf: fqam.mf,
        }
    }

    /// Per-sample SNR implied by the Eb/N0 setting.
    pub fn sample_snr(&self) -> f64 {
        10f64.powf(self.ebn0_db / 10.0) * self.bits_per_group / self.mf as f64
    }

    pub fn noise_variance(&self, signal_power: f64) -> f64 {
        signal_power / self.sample_snr()
    }

    /// One-line description of the calibration, stamped into CSV headers.
    pub fn convention() -> &'static str {
        "sigma2 = P / (10^(EbN0_dB/10) * R_group / M_F); P = frame energy / (K*M); R_group from the closed-form rate"
    }
}

/// Adds circular complex Gaussian noise of total variance `variance`.
pub fn add_noise<R: Rng + ?Sized>(samples: &mut [Complex64], variance: f64, rng: &mut R) {
    let sigma = (variance / 2.0).sqrt();
    for x in samples {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        *x += Complex64::new(re, im) * sigma;
    }
}

/// Adds noise calibrated against the measured power of `signal`.
pub fn apply_awgn<R: Rng + ?Sized>(signal: &TimeSignal, spec: &AwgnSpec, rng: &mut R) -> TimeSignal {
    let variance = spec.noise_variance(signal.symbol_power());
    let mut out = signal.clone();
    add_noise(&mut out.samples, variance, rng);
    out
}

/// EVA tap delays in nanoseconds.
pub const EVA_DELAYS_NS: [f64; 9] = [0.0, 30.0, 150.0, 310.0, 370.0, 710.0, 1090.0, 1730.0, 2510.0];
/// EVA relative tap powers in dB.
pub const EVA_POWERS_DB: [f64; 9] = [0.0, -1.5, -1.4, -3.6, -0.6, -9.1, -7.0, -12.0, -16.9];

/// Default carrier for Doppler computation.
pub const DEFAULT_CARRIER_HZ: f64 = 2.0e9;
const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// `f_D = v f_c / c` with `v` in km/h.
pub fn doppler_hz(speed_kmh: f64, carrier_hz: f64) -> f64 {
    speed_kmh / 3.6 * carrier_hz / SPEED_OF_LIGHT
}

/// Tapped-delay-line profile with Rayleigh taps.
#[derive(Debug, Clone, PartialEq)]
pub struct TdlSpec {
    pub delays_ns: Vec<f64>,
    pub powers_db: Vec<f64>,
    pub doppler_hz: f64,
    pub sample_rate_hz: f64,
    /// Sinusoids per tap in the sum-of-sinusoids generator.
    pub sinusoids: usize,
    /// Rayleigh taps when true; fixed real gains `sqrt(P)` otherwise.
    pub rayleigh: bool,
}

impl TdlSpec {
    pub fn eva(doppler_hz: f64, sample_rate_hz: f64) -> Self {
        Self {
            delays_ns: EVA_DELAYS_NS.to_vec(),
            powers_db: EVA_POWERS_DB.to_vec(),
            doppler_hz,
            sample_rate_hz,
            sinusoids: 16,
            rayleigh: true,
        }
    }

    /// Single static 0 dB tap at zero delay: the identity channel.
    pub fn flat(sample_rate_hz: f64) -> Self {
        Self {
            delays_ns: vec![0.0],
            powers_db: vec![0.0],
            doppler_hz: 0.0,
            sample_rate_hz,
            sinusoids: 1,
            rayleigh: false,
        }
    }

    pub fn with_rayleigh(mut self, rayleigh: bool) -> Self {
        self.rayleigh = rayleigh;
        self
    }

    /// Linear tap powers scaled to unit total gain.
    pub fn linear_powers(&self) -> Vec<f64> {
        let lin: Vec<f64> = self.powers_db.iter().map(|p| 10f64.powf(p / 10.0)).collect();
        let total: f64 = lin.iter().sum();
        lin.into_iter().map(|p| p / total).collect()
    }

    /// Delays rounded to the nearest sample.
    pub fn delay_samples(&self) -> Vec<usize> {
        self.delays_ns
            .iter()
            .map(|d| (d * 1e-9 * self.sample_rate_hz).round() as usize)
            .collect()
    }

    fn validate(&self) -> Result<()> {
        if self.delays_ns.len() != self.powers_db.len() || self.delays_ns.is_empty() {
            return Err(Error::InvalidParameter(
                "tap delays and powers must be non-empty and of equal length".into(),
            ));
        }
        if !(self.sample_rate_hz > 0.0) || self.sinusoids == 0 {
            return Err(Error::InvalidParameter(
                "sample rate and sinusoid count must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// One Rayleigh tap built from `N` complex sinusoids.
///
/// `g(n) = sqrt(P / N) * sum_i exp(j (2 pi f_D cos(a_i) n / fs + phi_i))` with
/// `a_i = (2 pi i + theta) / N`, `theta` and `phi_i` uniform on `[0, 2 pi)`.
/// Averaged over `theta` the arrival angles are uniform on the circle, so the
/// autocorrelation is `P * J0(2 pi f_D tau)`.
#[derive(Debug, Clone)]
pub struct FadingTap {
    /// Per-sinusoid value at sample 0, amplitude included.
    start: Vec<Complex64>,
    /// Per-sinusoid rotation per sample.
    step: Vec<Complex64>,
    /// Per-sinusoid angular frequency in rad/sample.
    omega: Vec<f64>,
}

impl FadingTap {
    pub fn new<R: Rng + ?Sized>(power: f64, doppler_per_sample: f64, sinusoids: usize, rng: &mut R) -> Self {
        assert!(sinusoids > 0, "a fading tap needs at least one sinusoid");
        let theta = rng.random_range(0.0..2.0 * PI);
        let amp = (power / sinusoids as f64).sqrt();
        let mut start = Vec::with_capacity(sinusoids);
        let mut omega = Vec::with_capacity(sinusoids);
        for i in 0..sinusoids {
            let angle = (2.0 * PI * i as f64 + theta) / sinusoids as f64;
            let phi = rng.random_range(0.0..2.0 * PI);
            start.push(Complex64::from_polar(amp, phi));
            omega.push(2.0 * PI * doppler_per_sample * angle.cos());
        }
        let step = omega.iter().map(|&w| Complex64::from_polar(1.0, w)).collect();
        Self { start, step, omega }
    }

    /// Time-invariant real gain `sqrt(power)`.
    pub fn fixed(power: f64) -> Self {
        Self {
            start: vec![Complex64::new(power.sqrt(), 0.0)],
            step: vec![Complex64::new(1.0, 0.0)],
            omega: vec![0.0],
        }
    }

    /// Gain at (possibly fractional) sample time `t`.
    pub fn gain_at(&self, t: f64) -> Complex64 {
        self.start
            .iter()
            .zip(&self.omega)
            .map(|(s, w)| s * Complex64::from_polar(1.0, w * t))
            .sum()
    }

    /// Gains for samples `0..len` by phasor recursion, re-anchored every block
    /// to bound rounding drift.
    pub fn gains(&self, len: usize) -> Vec<Complex64> {
        const ANCHOR: usize = 1024;
        let mut out = vec![Complex64::new(0.0, 0.0); len];
        let mut state = self.start.clone();
        for (n, slot) in out.iter_mut().enumerate() {
            if n % ANCHOR == 0 && n > 0 {
                for (s, (s0, w)) in state.iter_mut().zip(self.start.iter().zip(&self.omega)) {
                    *s = s0 * Complex64::from_polar(1.0, w * n as f64);
                }
            }
            *slot = state.iter().sum();
            for (s, r) in state.iter_mut().zip(&self.step) {
                *s *= r;
            }
        }
        out
    }
}

/// Genie per-symbol, per-subcarrier frequency response `H_m[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub response: Grid,
}

impl ChannelRealization {
    pub fn identity(symbols: usize, subcarriers: usize) -> Self {
        let mut response = Grid::zeros(symbols, subcarriers);
        response
            .as_mut_slice()
            .iter_mut()
            .for_each(|h| *h = Complex64::new(1.0, 0.0));
        Self { response }
    }

    pub fn constant(symbols: usize, subcarriers: usize, value: Complex64) -> Self {
        let mut response = Grid::zeros(symbols, subcarriers);
        response.as_mut_slice().iter_mut().for_each(|h| *h = value);
        Self { response }
    }
}

/// Passes `signal` through independent Rayleigh taps on the quantized delay
/// line. Output keeps the input length; energy past the last sample is
/// dropped. The genie response is the DFT of the tap vector frozen at each
/// symbol midpoint `k M + L M / 2`.
pub fn apply_tdl<R: Rng + ?Sized>(
    signal: &TimeSignal,
    spec: &TdlSpec,
    rng: &mut R,
) -> Result<(TimeSignal, ChannelRealization)> {
    spec.validate()?;
    let m_total = signal.num_subcarriers;
    let overlap = signal.overlap().ok_or_else(|| {
        Error::InvalidParameter("signal length does not match a filter-bank frame".into())
    })?;
    let limit = overlap * m_total;
    let delays = spec.delay_samples();
    if let Some(&delay) = delays.iter().find(|&&d| d >= limit) {
        return Err(Error::DelayTooLong { delay, limit });
    }
    let doppler = spec.doppler_hz / spec.sample_rate_hz;
    let taps: Vec<FadingTap> = spec
        .linear_powers()
        .into_iter()
        .map(|p| {
            if spec.rayleigh {
                FadingTap::new(p, doppler, spec.sinusoids, rng)
            } else {
                FadingTap::fixed(p)
            }
        })
        .collect();

    let len = signal.samples.len();
    let mut out = vec![Complex64::new(0.0, 0.0); len];
    for (tap, &delay) in taps.iter().zip(&delays) {
        let gains = tap.gains(len);
        for n in delay..len {
            out[n] += gains[n] * signal.samples[n - delay];
        }
    }

    let mut response = Grid::zeros(signal.symbols, m_total);
    for k in 0..signal.symbols {
        let t = (k * m_total) as f64 + limit as f64 / 2.0;
        let frozen: Vec<Complex64> = taps.iter().map(|tap| tap.gain_at(t)).collect();
        for (m, h) in response.row_mut(k).iter_mut().enumerate() {
            *h = frozen
                .iter()
                .zip(&delays)
                .map(|(g, &d)| {
                    let r = (m * d) % m_total;
                    g * Complex64::from_polar(1.0, -2.0 * PI * r as f64 / m_total as f64)
                })
                .sum();
        }
    }

    Ok((
        TimeSignal {
            samples: out,
            ..signal.clone()
        },
        ChannelRealization { response },
    ))
}

/// Lower bound on `|H|` used by ZF.
pub const ZF_FLOOR: f64 = 1e-6;

/// Equalized grid plus the number of entries whose `|H|` hit the floor.
#[derive(Debug, Clone, PartialEq)]
pub struct Equalized {
    pub grid: Grid,
    pub floored: usize,
}

/// `y_m[k] / H_m[k]`, with `|H|` clamped from below at [`ZF_FLOOR`].
pub fn zf_equalize(received: &Grid, realization: &ChannelRealization) -> Result<Equalized> {
    let h = &realization.response;
    if h.symbols() < received.symbols() || h.subcarriers() != received.subcarriers() {
        return Err(Error::Dimension(format!(
            "response is {}x{}, grid is {}x{}",
            h.symbols(),
            h.subcarriers(),
            received.symbols(),
            received.subcarriers()
        )));
    }
    let mut grid = received.clone();
    let mut floored = 0;
    let span = received.symbols() * received.subcarriers();
    for (y, &hv) in grid.as_mut_slice().iter_mut().zip(&h.as_slice()[..span]) {
        let mag = hv.norm();
        let divisor = if mag < ZF_FLOOR {
            floored += 1;
            if mag == 0.0 {
                Complex64::new(ZF_FLOOR, 0.0)
            } else {
                hv * (ZF_FLOOR / mag)
            }
        } else {
            hv
        };
        *y /= divisor;
    }
    Ok(Equalized { grid, floored })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modulation::Scheme;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tone_signal(len: usize, symbols: usize, m: usize) -> TimeSignal {
        TimeSignal {
            samples: (0..len)
                .map(|n| Complex64::from_polar(1.0, 0.3 * n as f64))
                .collect(),
            sample_rate_hz: 1.5e6,
            num_subcarriers: m,
            symbols,
        }
    }

    #[test]
    fn doppler_at_50_kmh() {
        assert_abs_diff_eq!(doppler_hz(50.0, 2.0e9), 92.66, epsilon = 0.01);
    }

    #[test]
    fn noise_variance_convention() {
        let fqam = FqamConfig::new(4, 4, Scheme::Scheme1).unwrap();
        let spec = AwgnSpec::new(10.0, &fqam);
        assert_abs_diff_eq!(spec.bits_per_group, 3.5);
        assert_abs_diff_eq!(spec.noise_variance(0.25), 0.25 / (10.0 * 3.5 / 4.0), epsilon = 1e-15);
    }

    #[test]
    fn awgn_is_deterministic_per_seed() {
        let fqam = FqamConfig::new(4, 4, Scheme::Scheme1).unwrap();
        let spec = AwgnSpec::new(5.0, &fqam);
        let x = tone_signal(500, 2, 100);
        let a = apply_awgn(&x, &spec, &mut ChaCha8Rng::seed_from_u64(7));
        let b = apply_awgn(&x, &spec, &mut ChaCha8Rng::seed_from_u64(7));
        let c = apply_awgn(&x, &spec, &mut ChaCha8Rng::seed_from_u64(8));
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn flat_static_tap_is_identity() {
        let x = tone_signal(7 * 16, 4, 16);
        let spec = TdlSpec::flat(16.0 * 15e3);
        let (y, real) = apply_tdl(&x, &spec, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(y, x);
        assert!(real.response.as_slice().iter().all(|h| *h == Complex64::new(1.0, 0.0)));
    }

    #[test]
    fn zero_doppler_rayleigh_tap_is_constant_gain() {
        let x = tone_signal(7 * 16, 4, 16);
        let spec = TdlSpec::flat(16.0 * 15e3).with_rayleigh(true);
        let (y, real) = apply_tdl(&x, &TdlSpec { sinusoids: 16, ..spec }, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let g = y.samples[0] / x.samples[0];
        for (a, b) in y.samples.iter().zip(&x.samples) {
            assert_abs_diff_eq!((a - b * g).norm(), 0.0, epsilon = 1e-9);
        }
        for h in real.response.as_slice() {
            assert_abs_diff_eq!((h - g).norm(), 0.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn delay_limit() {
        let x = tone_signal(7 * 16, 4, 16);
        let mut spec = TdlSpec::eva(10.0, 16.0 * 15e3);
        spec.delays_ns = vec![0.0, 1e9 * 64.0 / spec.sample_rate_hz];
        spec.powers_db = vec![0.0, 0.0];
        assert!(matches!(
            apply_tdl(&x, &spec, &mut ChaCha8Rng::seed_from_u64(1)),
            Err(Error::DelayTooLong { delay: 64, limit: 64 })
        ));
    }

    #[test]
    fn eva_profile_quantization() {
        let spec = TdlSpec::eva(92.6, 1.5e6);
        assert_eq!(spec.delay_samples(), vec![0, 0, 0, 0, 1, 1, 2, 3, 4]);
        assert_abs_diff_eq!(spec.linear_powers().iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn recursion_matches_direct_gain() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let tap = FadingTap::new(0.5, 1e-3, 16, &mut rng);
        let gains = tap.gains(5000);
        for n in [0usize, 1, 777, 1024, 4999] {
            assert_abs_diff_eq!((gains[n] - tap.gain_at(n as f64)).norm(), 0.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn zf_identity_and_scalar() {
        let mut g = Grid::zeros(2, 3);
        g.set(1, 2, Complex64::new(4.0, -2.0));
        let eq = zf_equalize(&g, &ChannelRealization::identity(2, 3)).unwrap();
        assert_eq!(eq.grid, g);
        let eq = zf_equalize(&g, &ChannelRealization::constant(2, 3, Complex64::new(2.0, 0.0))).unwrap();
        assert_eq!(eq.grid.get(1, 2), Complex64::new(2.0, -1.0));
        assert_eq!(eq.floored, 0);
        let eq = zf_equalize(&g, &ChannelRealization::constant(2, 3, Complex64::new(0.0, 0.0))).unwrap();
        assert_eq!(eq.floored, 6);
        assert!(eq.grid.as_slice().iter().all(|v| v.re.is_finite()));
    }
}
