//! Waveform and link measurements: self-SIR from the transmultiplexer
//! response, Welch PSD, per-symbol PAPR, bit errors and empirical rate.

use std::fmt;
use std::ops::{Add, AddAssign};

use num_complex::Complex64;
use rand::Rng;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fbmc::{transmux_response, FbmcConfig};
use crate::filter::PsdCurve;
use crate::frame::{TimeSignal, TxFrame};
use crate::modulation::{classify, FqamConfig, GroupLayout, SymbolMode};

/// Which tones an FQAM interferer may occupy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ToneSet {
    All,
    /// Local indices `1..M_F - 1` only.
    NonEdge,
}

/// Activation constraints for the FQAM self-SIR modes.
///
/// Every group other than the reference's own slot activates one tone from
/// `tones` per symbol, restricted to tones at circular distance 0 or at least
/// `min_spacing` subcarriers from the reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FqamPattern {
    pub tones: ToneSet,
    pub min_spacing: usize,
}

impl FqamPattern {
    /// Non-edge tones kept at least `2 * delta_f` away from the reference.
    pub const NON_EDGE: FqamPattern = FqamPattern {
        tones: ToneSet::NonEdge,
        min_spacing: 2,
    };

    /// Any tone, any spacing.
    pub const UNCONSTRAINED: FqamPattern = FqamPattern {
        tones: ToneSet::All,
        min_spacing: 1,
    };

    fn admits(&self, tone: usize, mf: usize) -> bool {
        match self.tones {
            ToneSet::All => true,
            ToneSet::NonEdge => tone != 0 && tone + 1 != mf,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SelfSirMode {
    /// Every subcarrier active in every symbol (dense QAM).
    AllActive,
    /// Interferer power averaged over uniformly activated tones.
    FqamAverage(FqamPattern),
    /// Strongest admissible tone in every interfering group and symbol.
    FqamWorstCase(FqamPattern),
    /// Reference is an ASK edge tone colliding with the neighbouring group's
    /// edge tone; interference from the pair is projected onto the ASK
    /// detection axis. Other groups follow the worst case of the pattern.
    ProjectedAsk(FqamPattern),
}

impl fmt::Display for SelfSirMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn pattern(p: &FqamPattern) -> String {
            let tones = match p.tones {
                ToneSet::All => "all",
                ToneSet::NonEdge => "non_edge",
            };
            format!("{tones}:min{}", p.min_spacing)
        }
        match self {
            SelfSirMode::AllActive => write!(f, "all_active"),
            SelfSirMode::FqamAverage(p) => write!(f, "fqam_average:{}", pattern(p)),
            SelfSirMode::FqamWorstCase(p) => write!(f, "fqam_worst_case:{}", pattern(p)),
            SelfSirMode::ProjectedAsk(p) => write!(f, "projected_ask:{}", pattern(p)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SelfSirReport {
    pub p_signal: f64,
    pub p_interference: f64,
    /// `+inf` when the interference is exactly zero.
    pub gamma_db: f64,
    pub mode: SelfSirMode,
}

impl SelfSirReport {
    fn new(p_signal: f64, p_interference: f64, mode: SelfSirMode) -> Self {
        let p_interference = p_interference.max(0.0);
        let gamma_db = if p_interference > 0.0 {
            10.0 * (p_signal / p_interference).log10()
        } else {
            f64::INFINITY
        };
        Self {
            p_signal,
            p_interference,
            gamma_db,
            mode,
        }
    }
}

/// Response from transmit slot `(m, k)` into the receiver of `reference` at
/// symbol 0, for every `m` and `k` in `-L+1..=L`.
struct ResponseTable {
    first_lag: i64,
    lags: usize,
    values: Vec<Complex64>,
}

impl ResponseTable {
    fn build(config: &FbmcConfig, reference: usize) -> Result<Self> {
        let overlap = config.overlap() as i64;
        let first_lag = -overlap + 1;
        let lags = (2 * overlap) as usize;
        let rx = config.filter_for(reference);
        let mut values = Vec::with_capacity(config.m_total() * lags);
        for m in 0..config.m_total() {
            let tx = config.filter_for(m);
            for i in 0..lags {
                let k = first_lag + i as i64;
                // transmit at symbol k against receive at 0 is the same as
                // transmit at 0 against a receiver delayed by -k
                values.push(transmux_response(tx, rx, m, reference, -k)?);
            }
        }
        Ok(Self {
            first_lag,
            lags,
            values,
        })
    }

    fn get(&self, m: usize, k: i64) -> Complex64 {
        self.values[m * self.lags + (k - self.first_lag) as usize]
    }

    fn lag_range(&self) -> impl Iterator<Item = i64> {
        self.first_lag..self.first_lag + self.lags as i64
    }
}

fn circular_distance(a: usize, b: usize, m: usize) -> usize {
    let d = a.abs_diff(b);
    d.min(m - d)
}

/// Self-SIR of the subcarrier `reference` (receive side at symbol 0).
///
/// `P_s = |t[(m,m),0]|^2`; `P_i` sums `|t|^2` over every transmit slot in the
/// overlap window `k = -L+1..=L` allowed by the mode, minus the desired term.
pub fn self_sir(
    fbmc: &FbmcConfig,
    fqam: &FqamConfig,
    reference: usize,
    mode: SelfSirMode,
) -> Result<SelfSirReport> {
    let m_total = fbmc.m_total();
    if reference >= m_total {
        return Err(Error::InvalidParameter(format!(
            "reference subcarrier {reference} outside 0..{m_total}"
        )));
    }
    let table = ResponseTable::build(fbmc, reference)?;
    let desired = table.get(reference, 0);
    let p_signal = desired.norm_sqr();

    if let SelfSirMode::AllActive = mode {
        let total: f64 = table.values.iter().map(|c| c.norm_sqr()).sum();
        return Ok(SelfSirReport::new(p_signal, total - p_signal, mode));
    }

    let layout = GroupLayout::new(m_total, fqam.mf)?;
    let mf = fqam.mf;
    let ref_group = layout.group_of(reference);
    let ref_tone = layout.local_index(reference);

    let interference = match mode {
        SelfSirMode::AllActive => unreachable!(),
        SelfSirMode::FqamAverage(pattern) | SelfSirMode::FqamWorstCase(pattern) => {
            if !pattern.admits(ref_tone, mf) {
                return Err(Error::InvalidParameter(format!(
                    "reference tone {ref_tone} is not admitted by {pattern:?}"
                )));
            }
            let worst = matches!(mode, SelfSirMode::FqamWorstCase(_));
            let mut acc = 0.0;
            for g in 0..layout.num_groups() {
                for k in table.lag_range() {
                    if g == ref_group && k == 0 {
                        continue;
                    }
                    let powers: Vec<f64> = (0..mf)
                        .filter(|&t| pattern.admits(t, mf))
                        .map(|t| layout.subcarrier(g, t))
                        .filter(|&m| {
                            let d = circular_distance(m, reference, m_total);
                            d == 0 || d >= pattern.min_spacing
                        })
                        .map(|m| table.get(m, k).norm_sqr())
                        .collect();
                    if powers.is_empty() {
                        continue;
                    }
                    acc += if worst {
                        powers.iter().cloned().fold(0.0, f64::max)
                    } else {
                        powers.iter().sum::<f64>() / powers.len() as f64
                    };
                }
            }
            acc
        }
        SelfSirMode::ProjectedAsk(pattern) => {
            projected_ask_interference(&table, fqam, &layout, reference, pattern)?
        }
    };
    Ok(SelfSirReport::new(p_signal, interference, mode))
}

fn projected_ask_interference(
    table: &ResponseTable,
    fqam: &FqamConfig,
    layout: &GroupLayout,
    reference: usize,
    pattern: FqamPattern,
) -> Result<f64> {
    let m_total = layout.m_total();
    let mf = fqam.mf;
    let groups = layout.num_groups();
    let ref_group = layout.group_of(reference);
    let ref_tone = layout.local_index(reference);
    // The colliding partner is the next group's bottom tone for a top-edge
    // reference and the previous group's top tone for a bottom-edge one.
    let (partner, tones_pair, ref_first) = if ref_tone + 1 == mf {
        ((reference + 1) % m_total, [mf - 1, 0], true)
    } else if ref_tone == 0 {
        ((reference + m_total - 1) % m_total, [mf - 1, 0], false)
    } else {
        return Err(Error::InvalidParameter(format!(
            "projected-ASK self-SIR needs an edge reference, tone {ref_tone} is not one"
        )));
    };
    if groups < 2 {
        return Err(Error::InvalidParameter("an edge collision needs at least two groups".into()));
    }
    let modes = classify(fqam.scheme, &tones_pair, mf)?;
    let (ref_mode, partner_mode) = if ref_first {
        (modes[0], modes[1])
    } else {
        (modes[1], modes[0])
    };
    if !ref_mode.is_ask() || !partner_mode.is_ask() {
        return Err(Error::InvalidParameter(format!(
            "scheme {} does not put a colliding edge pair on ASK",
            fqam.scheme
        )));
    }
    let partner_group = layout.group_of(partner);

    // Detection keeps Re{ y * conj(axis * ask_phase) } for the reference.
    let detector = (ref_mode.axis() * fqam.ask_phase.rotation(reference, 0)).conj();
    let projected = |m: usize, mode: SymbolMode, k: i64| -> f64 {
        let symbol = k.rem_euclid(4) as usize;
        let tx = mode.axis() * fqam.ask_phase.rotation(m, symbol);
        (table.get(m, k) * tx * detector).re.powi(2)
    };

    let mut acc = 0.0;
    for g in 0..groups {
        for k in table.lag_range() {
            if (g == ref_group || g == partner_group) && k == 0 {
                if g == partner_group {
                    acc += projected(partner, partner_mode, 0);
                }
                continue;
            }
            let mut worst: f64 = 0.0;
            for t in 0..mf {
                let m = layout.subcarrier(g, t);
                let power = if m == reference {
                    projected(m, ref_mode, k)
                } else if m == partner {
                    projected(m, partner_mode, k)
                } else if pattern.admits(t, mf)
                    && circular_distance(m, reference, m_total) >= pattern.min_spacing
                {
                    table.get(m, k).norm_sqr()
                } else {
                    continue;
                };
                worst = worst.max(power);
            }
            acc += worst;
        }
    }
    Ok(acc)
}

/// Welch PSD with a periodic Hann window, peak-normalized, on an axis in
/// subcarrier spacings running from `-M/2` to just below `M/2`.
pub fn signal_psd(signal: &TimeSignal, segment_len: usize, overlap: f64) -> Result<PsdCurve> {
    if segment_len < 2 || !(0.0..1.0).contains(&overlap) {
        return Err(Error::InvalidParameter(format!(
            "segment length {segment_len} / overlap {overlap} out of range"
        )));
    }
    if signal.samples.len() < 2 * segment_len {
        return Err(Error::SignalTooShort {
            len: signal.samples.len(),
            needed: 2 * segment_len,
        });
    }
    let step = ((segment_len as f64 * (1.0 - overlap)).round() as usize).max(1);
    let window: Vec<f64> = (0..segment_len)
        .map(|n| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * n as f64 / segment_len as f64).cos())
        .collect();
    let fft = FftPlanner::new().plan_fft_forward(segment_len);
    let mut acc = vec![0.0; segment_len];
    let mut buf = vec![Complex64::new(0.0, 0.0); segment_len];
    let mut start = 0;
    while start + segment_len <= signal.samples.len() {
        for ((b, x), w) in buf.iter_mut().zip(&signal.samples[start..]).zip(&window) {
            *b = x * w;
        }
        fft.process(&mut buf);
        for (a, b) in acc.iter_mut().zip(&buf) {
            *a += b.norm_sqr();
        }
        start += step;
    }
    let half = segment_len / 2;
    let m = signal.num_subcarriers.max(1) as f64;
    let (freq_axis, power): (Vec<f64>, Vec<f64>) = (0..segment_len)
        .map(|i| {
            let bin = (i + segment_len - half) % segment_len;
            let f = (i as f64 - half as f64) * m / segment_len as f64;
            (f, acc[bin])
        })
        .unzip();
    Ok(PsdCurve::from_linear(freq_axis, &power))
}

/// `10 log10(max |x|^2 / mean |x|^2)` over each `[start, start + stride)`.
pub fn papr_per_symbol(samples: &[Complex64], starts: &[usize], stride: usize) -> Result<Vec<f64>> {
    starts
        .iter()
        .map(|&s| {
            let block = samples.get(s..s + stride).ok_or(Error::SignalTooShort {
                len: samples.len(),
                needed: s + stride,
            })?;
            let powers = block.iter().map(|x| x.norm_sqr());
            let peak = powers.clone().fold(0.0, f64::max);
            let mean = powers.sum::<f64>() / stride as f64;
            Ok(if mean > 0.0 {
                10.0 * (peak / mean).log10()
            } else {
                0.0
            })
        })
        .collect()
}

/// Empirical CCDF of per-symbol PAPR on a 0.1 dB grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PaprCcdf {
    pub thresholds_db: Vec<f64>,
    pub exceed_prob: Vec<f64>,
    #[serde(skip)]
    sorted: Vec<f64>,
}

impl PaprCcdf {
    /// `P(PAPR > threshold)`.
    pub fn prob_exceeding(&self, threshold_db: f64) -> f64 {
        let above = self.sorted.len() - self.sorted.partition_point(|&p| p <= threshold_db);
        above as f64 / self.sorted.len() as f64
    }

    /// PAPR level exceeded with probability `prob` (empirical upper quantile).
    pub fn level_at(&self, prob: f64) -> f64 {
        quantile(&self.sorted, 1.0 - prob)
    }

    pub fn samples(&self) -> usize {
        self.sorted.len()
    }
}

/// CCDF from per-symbol PAPR values. `depth` is the smallest probability the
/// curve must resolve; at least `10 / depth` symbols are required.
pub fn papr_ccdf_from_values(papr_db: &[f64], depth: f64) -> Result<PaprCcdf> {
    let needed = (10.0 / depth).ceil() as usize;
    if papr_db.len() < needed {
        return Err(Error::TooFewSymbols {
            got: papr_db.len(),
            needed,
            depth,
        });
    }
    let mut sorted = papr_db.to_vec();
    sorted.sort_by(f64::total_cmp);
    let top = sorted.last().copied().unwrap_or(0.0).max(0.0);
    let steps = (top * 10.0).ceil() as usize + 1;
    let thresholds_db: Vec<f64> = (0..=steps).map(|i| i as f64 / 10.0).collect();
    let mut ccdf = PaprCcdf {
        thresholds_db,
        exceed_prob: Vec::new(),
        sorted,
    };
    ccdf.exceed_prob = ccdf
        .thresholds_db
        .iter()
        .map(|&t| ccdf.prob_exceeding(t))
        .collect();
    Ok(ccdf)
}

pub fn papr_ccdf(samples: &[Complex64], starts: &[usize], stride: usize, depth: f64) -> Result<PaprCcdf> {
    papr_ccdf_from_values(&papr_per_symbol(samples, starts, stride)?, depth)
}

/// Linear-interpolated quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Percentile-bootstrap interval for `quantile(a, q) - quantile(b, q)`.
pub fn bootstrap_quantile_gap<R: Rng + ?Sized>(
    a: &[f64],
    b: &[f64],
    q: f64,
    resamples: usize,
    confidence: f64,
    rng: &mut R,
) -> (f64, f64) {
    let mut gaps: Vec<f64> = (0..resamples)
        .map(|_| {
            let mut ra: Vec<f64> = (0..a.len()).map(|_| a[rng.random_range(0..a.len())]).collect();
            let mut rb: Vec<f64> = (0..b.len()).map(|_| b[rng.random_range(0..b.len())]).collect();
            ra.sort_by(f64::total_cmp);
            rb.sort_by(f64::total_cmp);
            quantile(&ra, q) - quantile(&rb, q)
        })
        .collect();
    gaps.sort_by(f64::total_cmp);
    let tail = (1.0 - confidence) / 2.0;
    (quantile(&gaps, tail), quantile(&gaps, 1.0 - tail))
}

/// Bit and error totals; merging is plain addition.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ErrorCount {
    pub bits: u64,
    pub errors: u64,
}

impl Add for ErrorCount {
    type Output = ErrorCount;
    fn add(self, rhs: Self) -> Self {
        ErrorCount {
            bits: self.bits + rhs.bits,
            errors: self.errors + rhs.errors,
        }
    }
}

impl AddAssign for ErrorCount {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

/// Hamming distance between two equal-length bit streams.
pub fn count_errors(tx: &[u8], rx: &[u8]) -> Result<ErrorCount> {
    if tx.len() != rx.len() {
        return Err(Error::LengthMismatch {
            left: tx.len(),
            right: rx.len(),
        });
    }
    Ok(ErrorCount {
        bits: tx.len() as u64,
        errors: tx.iter().zip(rx).filter(|(a, b)| (*a & 1) != (*b & 1)).count() as u64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BerRecord {
    pub snr_db: f64,
    pub bits_sent: u64,
    pub bit_errors: u64,
    pub ber: f64,
}

impl BerRecord {
    pub fn new(snr_db: f64, count: ErrorCount) -> Self {
        Self {
            snr_db,
            bits_sent: count.bits,
            bit_errors: count.errors,
            ber: if count.bits == 0 {
                0.0
            } else {
                count.errors as f64 / count.bits as f64
            },
        }
    }

    /// Wilson score interval at the given two-sided normal quantile
    /// (1.96 for 95 %).
    pub fn wilson_interval(&self, z: f64) -> (f64, f64) {
        let n = self.bits_sent as f64;
        if n == 0.0 {
            return (0.0, 1.0);
        }
        let p = self.ber;
        let denom = 1.0 + z * z / n;
        let centre = (p + z * z / (2.0 * n)) / denom;
        let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
        ((centre - half).max(0.0), (centre + half).min(1.0))
    }
}

/// Running totals for the empirical rate and ASK incidence.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RateTally {
    pub bits: u64,
    pub group_symbols: u64,
    pub ask_groups: u64,
}

impl RateTally {
    pub fn add_frame(&mut self, frame: &TxFrame, consumed_bits: usize) {
        self.bits += consumed_bits as u64;
        self.group_symbols += frame.modes.len() as u64;
        self.ask_groups += frame.modes.iter().filter(|m| m.is_ask()).count() as u64;
    }

    /// Bits per group per symbol.
    pub fn rate(&self) -> f64 {
        self.bits as f64 / self.group_symbols.max(1) as f64
    }

    pub fn ask_incidence(&self) -> f64 {
        self.ask_groups as f64 / self.group_symbols.max(1) as f64
    }
}

impl Add for RateTally {
    type Output = RateTally;
    fn add(self, rhs: Self) -> Self {
        RateTally {
            bits: self.bits + rhs.bits,
            group_symbols: self.group_symbols + rhs.group_symbols,
            ask_groups: self.ask_groups + rhs.ask_groups,
        }
    }
}

/// Consumed bits per group per symbol over a set of encoded frames.
pub fn empirical_rate<'a>(frames: impl IntoIterator<Item = (&'a TxFrame, usize)>) -> f64 {
    frames
        .into_iter()
        .fold(RateTally::default(), |mut t, (f, used)| {
            t.add_frame(f, used);
            t
        })
        .rate()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter::phydyas;
    use crate::modulation::{AskPhase, Scheme};
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn bank(m: usize) -> FbmcConfig {
        FbmcConfig::single(phydyas(m, 4).unwrap())
    }

    #[test]
    fn all_active_single_phydyas_is_poor() {
        let fqam = FqamConfig::new(4, 4, Scheme::Scheme1).unwrap();
        let r = self_sir(&bank(64), &fqam, 21, SelfSirMode::AllActive).unwrap();
        assert_abs_diff_eq!(r.p_signal, 1.0, epsilon = 1e-12);
        assert!(r.gamma_db < 20.0, "{}", r.gamma_db);
    }

    #[test]
    fn sir_mode_ordering() {
        let fqam = FqamConfig::new(4, 4, Scheme::Scheme1).unwrap();
        let cfg = bank(64);
        for pattern in [FqamPattern::NON_EDGE, FqamPattern::UNCONSTRAINED] {
            let avg = self_sir(&cfg, &fqam, 33, SelfSirMode::FqamAverage(pattern)).unwrap();
            let worst = self_sir(&cfg, &fqam, 33, SelfSirMode::FqamWorstCase(pattern)).unwrap();
            let all = self_sir(&cfg, &fqam, 33, SelfSirMode::AllActive).unwrap();
            assert!(avg.gamma_db >= worst.gamma_db);
            assert!(worst.gamma_db >= all.gamma_db);
        }
    }

    #[test]
    fn quarter_turn_puts_pair_leakage_on_axis() {
        let cfg = bank(64);
        let good = FqamConfig::new(4, 4, Scheme::Scheme1).unwrap();
        let bad = good.with_ask_phase(AskPhase::QuarterTurn);
        let mode = SelfSirMode::ProjectedAsk(FqamPattern::NON_EDGE);
        let g = self_sir(&cfg, &good, 35, mode).unwrap().gamma_db;
        let b = self_sir(&cfg, &bad, 35, mode).unwrap().gamma_db;
        assert!(g > 60.0, "{g}");
        assert!(b < 20.0, "{b}");
    }

    #[test]
    fn projected_ask_rejects_inner_reference() {
        let fqam = FqamConfig::new(4, 4, Scheme::Scheme2).unwrap();
        let mode = SelfSirMode::ProjectedAsk(FqamPattern::NON_EDGE);
        assert!(self_sir(&bank(16), &fqam, 5, mode).is_err());
        let plain = FqamConfig::new(4, 4, Scheme::PlainFqam).unwrap();
        assert!(self_sir(&bank(16), &plain, 7, mode).is_err());
    }

    #[test]
    fn non_edge_pattern_rejects_edge_reference() {
        let fqam = FqamConfig::new(4, 4, Scheme::Scheme1).unwrap();
        let mode = SelfSirMode::FqamWorstCase(FqamPattern::NON_EDGE);
        assert!(self_sir(&bank(16), &fqam, 4, mode).is_err());
        assert!(self_sir(&bank(16), &fqam, 16, mode).is_err());
    }

    #[test]
    fn report_infinite_on_zero_interference() {
        let r = SelfSirReport::new(1.0, 0.0, SelfSirMode::AllActive);
        assert!(r.gamma_db.is_infinite());
    }

    #[test]
    fn psd_of_single_tone() {
        let m = 16;
        let sub = 5;
        let samples = (0..4096)
            .map(|n| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * (n * sub) as f64 / m as f64))
            .collect();
        let sig = TimeSignal {
            samples,
            sample_rate_hz: 1.0,
            num_subcarriers: m,
            symbols: 0,
        };
        let psd = signal_psd(&sig, 256, 0.5).unwrap();
        let peak = psd
            .power_db
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert!((psd.freq_axis[peak] - sub as f64).abs() <= 0.5);
        assert!(psd.freq_axis.windows(2).all(|w| w[1] > w[0]));
        assert!(signal_psd(&sig, 4096, 0.5).is_err());
    }

    #[test]
    fn constant_envelope_papr() {
        let x: Vec<Complex64> = (0..1000).map(|n| Complex64::from_polar(2.0, n as f64)).collect();
        let starts: Vec<usize> = (0..100).map(|k| k * 10).collect();
        let p = papr_per_symbol(&x, &starts, 10).unwrap();
        assert!(p.iter().all(|v| v.abs() < 1e-9));
        let c = papr_ccdf_from_values(&p, 0.1).unwrap();
        assert_eq!(c.prob_exceeding(f64::NEG_INFINITY), 1.0);
        assert!(papr_ccdf_from_values(&p, 0.01).is_err());
    }

    #[test]
    fn ccdf_monotone_and_scale_free() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x: Vec<Complex64> = (0..64_000)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let starts: Vec<usize> = (0..1000).map(|k| k * 64).collect();
        let a = papr_ccdf(&x, &starts, 64, 0.01).unwrap();
        assert!(a.exceed_prob.windows(2).all(|w| w[1] <= w[0]));
        let scaled: Vec<Complex64> = x.iter().map(|v| v * 37.0).collect();
        let b = papr_per_symbol(&scaled, &starts, 64).unwrap();
        let a_vals = papr_per_symbol(&x, &starts, 64).unwrap();
        for (p, q) in a_vals.iter().zip(&b) {
            assert_abs_diff_eq!(p, q, epsilon = 1e-9);
        }
    }

    #[test]
    fn error_counting() {
        let a = [0u8, 1, 1, 0, 1];
        let b = [1u8, 0, 0, 1, 0];
        assert_eq!(count_errors(&a, &a).unwrap().errors, 0);
        let c = count_errors(&a, &b).unwrap();
        assert_eq!(BerRecord::new(0.0, c).ber, 1.0);
        assert_eq!(count_errors(&a, &b).unwrap(), count_errors(&b, &a).unwrap());
        assert!(count_errors(&a, &b[..4]).is_err());
    }

    #[test]
    fn wilson_contains_estimate() {
        let r = BerRecord::new(
            1.0,
            ErrorCount {
                bits: 10_000,
                errors: 100,
            },
        );
        let (lo, hi) = r.wilson_interval(1.96);
        assert!(lo < 0.01 && 0.01 < hi);
        assert!(hi - lo < 0.005);
    }
}
