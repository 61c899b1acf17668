//! FQAM bit mapping: FSK tone selection, Gray QAM/ASK payloads, and the
//! per-group QAM-versus-ASK decision that removes edge self-interference.
//!
//! A group is `M_F` consecutive subcarriers; exactly one of them is active in
//! every multicarrier symbol. Edge tones (local index `0` or `M_F - 1`) are the
//! only ones close enough to a neighbouring group to interfere with it.
//!
//! Frame bit order per symbol: all tone bits in ascending group order, then
//! all payload bits in ascending group order. Putting tones first lets the
//! scheme classifier see the whole tone vector before any payload is mapped.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{Grid, TxFrame};

/// Rule deciding which groups fall back from QAM to single-axis ASK.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Every edge tone carries ASK.
    Scheme1,
    /// Only colliding edge pairs across a group boundary carry ASK.
    Scheme2,
    /// FQAM with QAM on every tone (no self-interference handling).
    PlainFqam,
    /// Dense QAM on every subcarrier; requires `M_F = 1`.
    PlainQam,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Scheme1 => "scheme1",
            Scheme::Scheme2 => "scheme2",
            Scheme::PlainFqam => "plain_fqam",
            Scheme::PlainQam => "plain_qam",
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SymbolMode {
    Qam,
    AskReal,
    AskImag,
}

impl SymbolMode {
    pub fn is_ask(self) -> bool {
        !matches!(self, SymbolMode::Qam)
    }

    /// Unit vector of the detection axis for ASK modes.
    pub fn axis(self) -> Complex64 {
        match self {
            SymbolMode::AskImag => Complex64::new(0.0, 1.0),
            _ => Complex64::new(1.0, 0.0),
        }
    }
}

/// Extra rotation applied to ASK payloads as a function of `(m, k)`.
///
/// The PHYDYAS transmultiplexer response is real for every subcarrier pair
/// and lag, so two orthogonal ASK axes already keep edge-pair leakage on the
/// discarded axis. An additional quarter turn between adjacent subcarriers
/// rotates that leakage back onto the detection axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AskPhase {
    #[default]
    Identity,
    /// `j^(m + k)`.
    QuarterTurn,
}

impl AskPhase {
    pub fn rotation(self, subcarrier: usize, symbol: usize) -> Complex64 {
        match self {
            AskPhase::Identity => Complex64::new(1.0, 0.0),
            AskPhase::QuarterTurn => match (subcarrier + symbol) % 4 {
                0 => Complex64::new(1.0, 0.0),
                1 => Complex64::new(0.0, 1.0),
                2 => Complex64::new(-1.0, 0.0),
                _ => Complex64::new(0.0, -1.0),
            },
        }
    }
}

/// `(M_F, M_Q)` FQAM parameters plus the activation scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FqamConfig {
    pub mf: usize,
    pub mq: usize,
    pub scheme: Scheme,
    #[serde(default)]
    pub ask_phase: AskPhase,
}

impl FqamConfig {
    pub fn new(mf: usize, mq: usize, scheme: Scheme) -> Result<Self> {
        let cfg = Self {
            mf,
            mq,
            scheme,
            ask_phase: AskPhase::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_ask_phase(mut self, phase: AskPhase) -> Self {
        self.ask_phase = phase;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.scheme == Scheme::PlainQam {
            if self.mf != 1 {
                return Err(Error::InvalidParameter(format!(
                    "plain QAM requires M_F = 1, got {}",
                    self.mf
                )));
            }
        } else if self.mf < 2 || !self.mf.is_power_of_two() {
            return Err(Error::InvalidParameter(format!(
                "M_F must be a power of two >= 2, got {}",
                self.mf
            )));
        }
        if self.mq < 4 || !self.mq.is_power_of_two() || !self.mq.trailing_zeros().is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "M_Q must be an even power of two >= 4, got {}",
                self.mq
            )));
        }
        Ok(())
    }

    pub fn tone_bits(&self) -> usize {
        self.mf.trailing_zeros() as usize
    }

    pub fn qam_bits(&self) -> usize {
        self.mq.trailing_zeros() as usize
    }

    pub fn ask_bits(&self) -> usize {
        self.qam_bits() / 2
    }

    pub fn payload_bits(&self, mode: SymbolMode) -> usize {
        if mode.is_ask() {
            self.ask_bits()
        } else {
            self.qam_bits()
        }
    }

    /// Upper bound on bits consumed by one group in one symbol.
    pub fn max_bits_per_group(&self) -> usize {
        self.tone_bits() + self.qam_bits()
    }
}

/// Partition of `M` subcarriers into `M / M_F` groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GroupLayout {
    m_total: usize,
    mf: usize,
}

impl GroupLayout {
    pub fn new(m_total: usize, mf: usize) -> Result<Self> {
        if mf == 0 || m_total == 0 || !m_total.is_multiple_of(mf) {
            return Err(Error::InvalidParameter(format!(
                "M = {m_total} is not divisible by M_F = {mf}"
            )));
        }
        Ok(Self { m_total, mf })
    }

    pub fn m_total(&self) -> usize {
        self.m_total
    }

    pub fn mf(&self) -> usize {
        self.mf
    }

    pub fn num_groups(&self) -> usize {
        self.m_total / self.mf
    }

    pub fn group_range(&self, g: usize) -> std::ops::Range<usize> {
        g * self.mf..(g + 1) * self.mf
    }

    /// `l_m = m mod M_F`.
    pub fn local_index(&self, m: usize) -> usize {
        m % self.mf
    }

    pub fn group_of(&self, m: usize) -> usize {
        m / self.mf
    }

    pub fn subcarrier(&self, g: usize, tone: usize) -> usize {
        g * self.mf + tone
    }
}

/// Kronecker delta selecting the active tone of a group.
pub fn activation(tone: usize, local_index: usize) -> f64 {
    if tone == local_index {
        1.0
    } else {
        0.0
    }
}

/// One group's contribution to a symbol.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupSymbol {
    pub tone: usize,
    pub mode: SymbolMode,
    pub payload: Complex64,
    pub ask_phase: Complex64,
}

fn gray(i: usize) -> usize {
    i ^ (i >> 1)
}

fn inverse_gray(mut g: usize) -> usize {
    let mut i = g;
    while g > 0 {
        g >>= 1;
        i ^= g;
    }
    i
}

fn bits_to_index(bits: &[u8]) -> usize {
    bits.iter().fold(0, |acc, &b| (acc << 1) | (b & 1) as usize)
}

fn index_to_bits(value: usize, width: usize, out: &mut Vec<u8>) {
    for shift in (0..width).rev() {
        out.push(((value >> shift) & 1) as u8);
    }
}

fn pam_levels(bits: usize) -> usize {
    1 << bits
}

/// Gray-labelled PAM amplitude, unnormalized (odd integers).
fn pam_map(bits: &[u8]) -> f64 {
    let levels = pam_levels(bits.len());
    let position = inverse_gray(bits_to_index(bits));
    (2 * position) as f64 - (levels - 1) as f64
}

fn pam_slice(value: f64, width: usize, out: &mut Vec<u8>) {
    let levels = pam_levels(width);
    let position = ((value + (levels - 1) as f64) / 2.0)
        .round()
        .clamp(0.0, (levels - 1) as f64) as usize;
    index_to_bits(gray(position), width, out);
}

fn qam_scale(mq: usize) -> f64 {
    (2.0 * (mq as f64 - 1.0) / 3.0).sqrt()
}

fn ask_scale(mq: usize) -> f64 {
    let levels = (mq as f64).sqrt();
    ((levels * levels - 1.0) / 3.0).sqrt()
}

fn check_bits(bits: &[u8], expected: usize) -> Result<()> {
    if bits.len() != expected {
        return Err(Error::BitCount {
            expected,
            got: bits.len(),
        });
    }
    Ok(())
}

/// Gray-mapped square `M_Q`-QAM at unit average energy. The first half of
/// the bits select the in-phase level, the second half the quadrature level.
pub fn map_qam(bits: &[u8], mq: usize) -> Result<Complex64> {
    let width = mq.trailing_zeros() as usize;
    check_bits(bits, width)?;
    let half = width / 2;
    let scale = qam_scale(mq);
    Ok(Complex64::new(pam_map(&bits[..half]), pam_map(&bits[half..])) / scale)
}

/// Nearest-neighbour QAM decision, appended to `out`.
pub fn demap_qam_into(value: Complex64, mq: usize, out: &mut Vec<u8>) {
    let half = mq.trailing_zeros() as usize / 2;
    let scaled = value * qam_scale(mq);
    pam_slice(scaled.re, half, out);
    pam_slice(scaled.im, half, out);
}

pub fn demap_qam(value: Complex64, mq: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(mq.trailing_zeros() as usize);
    demap_qam_into(value, mq, &mut out);
    out
}

/// Gray-mapped `sqrt(M_Q)`-level ASK amplitude at unit average energy.
pub fn map_ask(bits: &[u8], mq: usize) -> Result<f64> {
    check_bits(bits, mq.trailing_zeros() as usize / 2)?;
    Ok(pam_map(bits) / ask_scale(mq))
}

/// De-rotates by `conj(ask_phase)`, keeps the component along `axis` and
/// slices it.
pub fn demap_ask_into(
    value: Complex64,
    axis: SymbolMode,
    ask_phase: Complex64,
    mq: usize,
    out: &mut Vec<u8>,
) {
    let derotated = value * ask_phase.conj() * axis.axis().conj();
    pam_slice(derotated.re * ask_scale(mq), mq.trailing_zeros() as usize / 2, out);
}

pub fn demap_ask(value: Complex64, axis: SymbolMode, ask_phase: Complex64, mq: usize) -> Vec<u8> {
    let mut out = Vec::new();
    demap_ask_into(value, axis, ask_phase, mq, &mut out);
    out
}

/// FSK tone index for `log2 M_F` tone bits (Gray labelling).
pub fn map_tone(bits: &[u8]) -> usize {
    inverse_gray(bits_to_index(bits))
}

pub fn demap_tone_into(tone: usize, width: usize, out: &mut Vec<u8>) {
    index_to_bits(gray(tone), width, out);
}

fn check_tones(tones: &[usize], mf: usize) -> Result<()> {
    match tones.iter().find(|&&t| t >= mf) {
        Some(&tone) => Err(Error::ToneOutOfRange { tone, mf }),
        None => Ok(()),
    }
}

/// Edge tones carry ASK: tone 0 on the real axis, tone `M_F - 1` on the
/// imaginary axis, everything else QAM.
pub fn classify_scheme1(tones: &[usize], mf: usize) -> Result<Vec<SymbolMode>> {
    check_tones(tones, mf)?;
    Ok(tones
        .iter()
        .map(|&t| {
            if t == 0 {
                SymbolMode::AskReal
            } else if t == mf - 1 {
                SymbolMode::AskImag
            } else {
                SymbolMode::Qam
            }
        })
        .collect())
}

/// ASK only where group `g` sits on its top tone and group `g + 1` on its
/// bottom tone. The lower-frequency member takes the real axis and the upper
/// one the imaginary axis.
///
/// Group order is circular: subcarrier `M - 1` is the lower neighbour of
/// subcarrier 0 in the sampled spectrum, so the last and first group can
/// collide as well.
pub fn classify_scheme2(tones: &[usize], mf: usize) -> Result<Vec<SymbolMode>> {
    check_tones(tones, mf)?;
    let n = tones.len();
    let mut modes = vec![SymbolMode::Qam; n];
    if n < 2 {
        return Ok(modes);
    }
    for g in 0..n {
        let next = (g + 1) % n;
        if tones[g] == mf - 1 && tones[next] == 0 {
            modes[g] = SymbolMode::AskReal;
            modes[next] = SymbolMode::AskImag;
        }
    }
    Ok(modes)
}

pub fn classify(scheme: Scheme, tones: &[usize], mf: usize) -> Result<Vec<SymbolMode>> {
    match scheme {
        Scheme::Scheme1 => classify_scheme1(tones, mf),
        Scheme::Scheme2 => classify_scheme2(tones, mf),
        Scheme::PlainFqam | Scheme::PlainQam => {
            check_tones(tones, mf)?;
            Ok(vec![SymbolMode::Qam; tones.len()])
        }
    }
}

/// Builds one group's symbol from its payload bits.
pub fn modulate_group(
    config: &FqamConfig,
    tone: usize,
    mode: SymbolMode,
    payload_bits: &[u8],
    subcarrier: usize,
    symbol: usize,
) -> Result<GroupSymbol> {
    let ask_phase = config.ask_phase.rotation(subcarrier, symbol);
    let payload = match mode {
        SymbolMode::Qam => map_qam(payload_bits, config.mq)?,
        _ => mode.axis() * ask_phase * map_ask(payload_bits, config.mq)?,
    };
    Ok(GroupSymbol {
        tone,
        mode,
        payload,
        ask_phase,
    })
}

struct BitReader<'a> {
    bits: &'a [u8],
    pos: usize,
}

impl<'a> BitReader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bits.len() {
            return Err(Error::BitUnderrun { consumed: self.pos });
        }
        let out = &self.bits[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }
}

/// Encodes `symbols` multicarrier symbols from the front of `bits`.
///
/// Returns the frame and the number of bits consumed, which depends on the
/// data through the QAM/ASK decisions.
pub fn encode_frame(
    bits: &[u8],
    config: &FqamConfig,
    layout: &GroupLayout,
    symbols: usize,
) -> Result<(TxFrame, usize)> {
    config.validate()?;
    if layout.mf() != config.mf {
        return Err(Error::InvalidParameter(format!(
            "layout M_F = {} differs from config M_F = {}",
            layout.mf(),
            config.mf
        )));
    }
    let groups = layout.num_groups();
    let mut reader = BitReader { bits, pos: 0 };
    let mut grid = Grid::zeros(symbols, layout.m_total());
    let mut all_tones = Vec::with_capacity(symbols * groups);
    let mut all_modes = Vec::with_capacity(symbols * groups);
    let tone_bits = config.tone_bits();
    for k in 0..symbols {
        let tones = (0..groups)
            .map(|_| reader.take(tone_bits).map(map_tone))
            .collect::<Result<Vec<_>>>()?;
        let modes = classify(config.scheme, &tones, config.mf)?;
        for (g, (&tone, &mode)) in tones.iter().zip(&modes).enumerate() {
            let payload_bits = reader.take(config.payload_bits(mode))?;
            let m = layout.subcarrier(g, tone);
            let sym = modulate_group(config, tone, mode, payload_bits, m, k)?;
            grid.set(k, m, sym.payload);
        }
        all_tones.extend(tones);
        all_modes.extend(modes);
    }
    Ok((
        TxFrame {
            grid,
            tones: all_tones,
            modes: all_modes,
            groups,
        },
        reader.pos,
    ))
}

/// Bits of one group in one symbol, split into tone and payload parts.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GroupBits {
    pub tone: Vec<u8>,
    pub payload: Vec<u8>,
}

/// Receiver output for a frame.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodedFrame {
    /// Per (symbol, group), symbol-major.
    pub groups: Vec<GroupBits>,
    pub tones: Vec<usize>,
    pub modes: Vec<SymbolMode>,
}

impl DecodedFrame {
    /// Concatenated bit stream in transmit order (tones first, then payloads,
    /// per symbol).
    pub fn bits(&self, groups_per_symbol: usize) -> Vec<u8> {
        let mut out = Vec::new();
        for chunk in self.groups.chunks(groups_per_symbol.max(1)) {
            for g in chunk {
                out.extend_from_slice(&g.tone);
            }
            for g in chunk {
                out.extend_from_slice(&g.payload);
            }
        }
        out
    }
}

/// How the receiver learns each group's tone and mode.
#[derive(Debug, Clone, Copy)]
pub enum Detection<'a> {
    /// Tone by energy argmax, mode by re-running the scheme classifier on the
    /// detected tones.
    Blind,
    /// Transmitter's tones and modes supplied as side information.
    Genie {
        tones: &'a [usize],
        modes: &'a [SymbolMode],
    },
}

/// Demodulates an equalized K x M grid.
pub fn decode_frame(
    grid: &Grid,
    config: &FqamConfig,
    layout: &GroupLayout,
    detection: Detection<'_>,
) -> Result<DecodedFrame> {
    if grid.subcarriers() != layout.m_total() {
        return Err(Error::Dimension(format!(
            "grid has {} subcarriers, layout expects {}",
            grid.subcarriers(),
            layout.m_total()
        )));
    }
    let groups = layout.num_groups();
    let symbols = grid.symbols();
    let mut out = DecodedFrame {
        groups: Vec::with_capacity(symbols * groups),
        tones: Vec::with_capacity(symbols * groups),
        modes: Vec::with_capacity(symbols * groups),
    };
    for k in 0..symbols {
        let row = grid.row(k);
        let (tones, modes) = match detection {
            Detection::Blind => {
                let tones: Vec<usize> = (0..groups)
                    .map(|g| {
                        let slice = &row[layout.group_range(g)];
                        slice
                            .iter()
                            .enumerate()
                            .fold((0, f64::NEG_INFINITY), |best, (f, y)| {
                                let e = y.norm_sqr();
                                if e > best.1 {
                                    (f, e)
                                } else {
                                    best
                                }
                            })
                            .0
                    })
                    .collect();
                let modes = classify(config.scheme, &tones, config.mf)?;
                (tones, modes)
            }
            Detection::Genie { tones, modes } => {
                let span = k * groups..(k + 1) * groups;
                if tones.len() < span.end || modes.len() < span.end {
                    return Err(Error::Dimension("genie metadata shorter than frame".into()));
                }
                (tones[span.clone()].to_vec(), modes[span].to_vec())
            }
        };
        for (g, (&tone, &mode)) in tones.iter().zip(&modes).enumerate() {
            let m = layout.subcarrier(g, tone);
            let y = row[m];
            let mut bits = GroupBits::default();
            demap_tone_into(tone, config.tone_bits(), &mut bits.tone);
            match mode {
                SymbolMode::Qam => demap_qam_into(y, config.mq, &mut bits.payload),
                _ => demap_ask_into(
                    y,
                    mode,
                    config.ask_phase.rotation(m, k),
                    config.mq,
                    &mut bits.payload,
                ),
            }
            out.groups.push(bits);
        }
        out.tones.extend(tones);
        out.modes.extend(modes);
    }
    Ok(out)
}

/// Average rate per FQAM group and the loss against plain FQAM.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateReport {
    pub r_bits_per_symbol: f64,
    pub r_loss_bits: f64,
    pub r_loss_fraction: f64,
}

/// Closed-form average bits per FQAM symbol under uniform tones.
pub fn rate(config: &FqamConfig) -> RateReport {
    let lf = (config.mf as f64).log2();
    let lq = (config.mq as f64).log2();
    let mf = config.mf as f64;
    let loss = match config.scheme {
        Scheme::Scheme1 => lq / mf,
        Scheme::Scheme2 => lq / (mf * mf),
        Scheme::PlainFqam | Scheme::PlainQam => 0.0,
    };
    let full = lf + lq;
    RateReport {
        r_bits_per_symbol: full - loss,
        r_loss_bits: loss,
        r_loss_fraction: loss / full,
    }
}
