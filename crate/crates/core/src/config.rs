//! JSON experiment configuration.
//!
//! Every section is optional and falls back to the defaults below, which
//! describe an M = 100, L = 4 single-PHYDYAS link with (4, 4) FQAM under
//! Scheme 1 over AWGN. Unknown fields are rejected. Cross-field checks run in
//! [`ExperimentConfig::validate`] and report the offending field path.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fbmc::{FbmcConfig, DEFAULT_SUBCARRIER_SPACING_HZ};
use crate::filter::{block_interleave, load_filter, phydyas, PrototypeFilter};
use crate::modulation::{AskPhase, FqamConfig, GroupLayout, Scheme};

pub const PHYDYAS_NAME: &str = "phydyas";
pub const PHYDYAS_INTERLEAVED_NAME: &str = "phydyas_interleaved";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub waveform: WaveformConfig,
    pub modulation: ModulationConfig,
    pub channel: ChannelConfig,
    pub sweep: SweepConfig,
    pub psd: PsdConfig,
    pub papr: PaprConfig,
    pub rate: RateConfig,
    pub selfsir: SelfSirConfig,
    pub outputs: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WaveformConfig {
    pub m: usize,
    pub l: usize,
    pub b: usize,
    /// One entry per bank: `phydyas`, `phydyas_interleaved`, or a path to a
    /// coefficient file relative to the config file. Empty selects
    /// `phydyas` for B = 1 and `phydyas, phydyas_interleaved` for B = 2.
    pub filters: Vec<String>,
    pub subcarrier_spacing_hz: f64,
    pub symbols_per_frame: usize,
}

impl Default for WaveformConfig {
    fn default() -> Self {
        Self {
            m: 100,
            l: 4,
            b: 1,
            filters: Vec::new(),
            subcarrier_spacing_hz: DEFAULT_SUBCARRIER_SPACING_HZ,
            symbols_per_frame: 16,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DetectionKind {
    #[default]
    Blind,
    Genie,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModulationConfig {
    pub mf: usize,
    pub mq: usize,
    /// A single scheme or a list; each one is swept separately.
    #[serde(deserialize_with = "one_or_many")]
    pub scheme: Vec<Scheme>,
    pub ask_phase: AskPhase,
    pub detection: DetectionKind,
}

impl Default for ModulationConfig {
    fn default() -> Self {
        Self {
            mf: 4,
            mq: 4,
            scheme: vec![Scheme::Scheme1],
            ask_phase: AskPhase::Identity,
            detection: DetectionKind::Blind,
        }
    }
}

impl ModulationConfig {
    /// Modulation parameters for one scheme; `plain_qam` always uses `M_F = 1`.
    pub fn fqam(&self, scheme: Scheme) -> Result<FqamConfig> {
        let mf = if scheme == Scheme::PlainQam { 1 } else { self.mf };
        Ok(FqamConfig::new(mf, self.mq, scheme)?.with_ask_phase(self.ask_phase))
    }
}

fn one_or_many<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Scheme>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(Scheme),
        Many(Vec<Scheme>),
    }
    Ok(match OneOrMany::deserialize(d)? {
        OneOrMany::One(s) => vec![s],
        OneOrMany::Many(v) => v,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ChannelKind {
    #[default]
    Awgn,
    Eva,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelConfig {
    pub kind: ChannelKind,
    pub speed_kmh: f64,
    pub carrier_hz: f64,
    /// Master seed; the CLI `--seed` flag overrides it.
    pub seed: u64,
    pub sinusoids: usize,
    /// `false` disables additive noise (fading still applies).
    pub noise: bool,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            kind: ChannelKind::Awgn,
            speed_kmh: 50.0,
            carrier_hz: crate::channel::DEFAULT_CARRIER_HZ,
            seed: 1,
            sinusoids: 16,
            noise: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub snr_db: Vec<f64>,
    pub min_bits: u64,
    pub max_bits: u64,
    pub target_errors: u64,
    /// Frames per batch; the stopping rule is checked between batches.
    pub batch_frames: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            snr_db: (0..=10).map(|i| 2.0 * i as f64).collect(),
            min_bits: 1_000_000,
            max_bits: 10_000_000,
            target_errors: 100,
            batch_frames: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PsdConfig {
    /// Prototype filters whose spectra are exported.
    pub filters: Vec<String>,
    pub oversample: usize,
    /// Symbols in the random frame used for the signal PSD.
    pub symbols: usize,
    pub segment_len: usize,
    pub overlap: f64,
}

impl Default for PsdConfig {
    fn default() -> Self {
        Self {
            filters: vec![PHYDYAS_NAME.into(), PHYDYAS_INTERLEAVED_NAME.into()],
            oversample: 8,
            symbols: 2000,
            segment_len: 1024,
            overlap: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PaprConfig {
    pub symbols: usize,
    pub depth: f64,
}

impl Default for PaprConfig {
    fn default() -> Self {
        Self {
            symbols: 20_000,
            depth: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RateConfig {
    /// `[M_F, M_Q]` pairs.
    pub pairs: Vec<[usize; 2]>,
    pub schemes: Vec<Scheme>,
    pub symbols: usize,
    /// Groups per multicarrier symbol in the empirical measurement.
    pub groups: usize,
}

impl Default for RateConfig {
    fn default() -> Self {
        Self {
            pairs: vec![[4, 4], [8, 4]],
            schemes: vec![Scheme::Scheme1, Scheme::Scheme2],
            symbols: 100_000,
            groups: 25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct SelfSirConfig {
    /// Extra coefficient files scored in the all-active mode.
    pub extra_filters: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportKind {
    Ber,
    Selfsir,
    Psd,
    Papr,
    Rate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: PathBuf,
    pub reports: Vec<ReportKind>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("out"),
            reports: vec![
                ReportKind::Rate,
                ReportKind::Selfsir,
                ReportKind::Psd,
                ReportKind::Papr,
                ReportKind::Ber,
            ],
        }
    }
}

fn check(ok: bool, path: &str, message: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::config(path, message()))
    }
}

impl ExperimentConfig {
    /// Parses and validates a JSON document.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::config(if path == "." { String::new() } else { path }, e.into_inner().to_string())
        })?;
        config.validate()?;
        Ok(config)
    }

    /// Canonical serialization; hashing it identifies the run configuration.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// Hex SHA-256 of the canonical serialization.
    pub fn hash(&self) -> String {
        format!("{:x}", Sha256::digest(self.to_json().as_bytes()))
    }

    pub fn validate(&self) -> Result<()> {
        let w = &self.waveform;
        check(w.m >= 2, "waveform.m", || format!("must be at least 2, got {}", w.m))?;
        check(w.l >= 1, "waveform.l", || "must be at least 1".into())?;
        check(w.b == 1 || w.b == 2, "waveform.b", || format!("must be 1 or 2, got {}", w.b))?;
        check(w.m.is_multiple_of(w.b), "waveform.b", || format!("M = {} is not divisible by B = {}", w.m, w.b))?;
        check(w.filters.is_empty() || w.filters.len() == w.b, "waveform.filters", || {
            format!("{} filters listed for B = {}", w.filters.len(), w.b)
        })?;
        check(
            w.subcarrier_spacing_hz.is_finite() && w.subcarrier_spacing_hz > 0.0,
            "waveform.subcarrier_spacing_hz",
            || "must be positive".into(),
        )?;
        check(w.symbols_per_frame >= 1, "waveform.symbols_per_frame", || "must be at least 1".into())?;
        for (i, name) in self.bank_filter_names().iter().chain(&self.psd.filters).enumerate() {
            if (name == PHYDYAS_NAME || name == PHYDYAS_INTERLEAVED_NAME) && w.l != 4 {
                return Err(Error::config(
                    if i < w.b { format!("waveform.filters[{i}]") } else { format!("psd.filters[{}]", i - w.b) },
                    format!("{name} is defined for L = 4 only, waveform.l = {}", w.l),
                ));
            }
        }

        let md = &self.modulation;
        check(!md.scheme.is_empty(), "modulation.scheme", || "no scheme given".into())?;
        for (i, &scheme) in md.scheme.iter().enumerate() {
            let path = format!("modulation.scheme[{i}]");
            let fqam = md.fqam(scheme).map_err(|e| Error::config(&path, e.to_string()))?;
            check(w.m.is_multiple_of(fqam.mf), "modulation.mf", || {
                format!("M = {} is not divisible by M_F = {}", w.m, fqam.mf)
            })?;
        }

        let c = &self.channel;
        check(c.speed_kmh.is_finite() && c.speed_kmh >= 0.0, "channel.speed_kmh", || {
            "must be non-negative".into()
        })?;
        check(c.carrier_hz.is_finite() && c.carrier_hz > 0.0, "channel.carrier_hz", || {
            "must be positive".into()
        })?;
        check(c.sinusoids >= 1, "channel.sinusoids", || "must be at least 1".into())?;
        if c.kind == ChannelKind::Eva {
            let spec = crate::channel::TdlSpec::eva(0.0, w.m as f64 * w.subcarrier_spacing_hz);
            let max_delay = spec.delay_samples().into_iter().max().unwrap_or(0);
            check(max_delay < w.l * w.m, "channel.kind", || {
                format!("EVA delay of {max_delay} samples exceeds L*M = {}", w.l * w.m)
            })?;
        }

        let s = &self.sweep;
        check(!s.snr_db.is_empty(), "sweep.snr_db", || "no SNR points".into())?;
        for (i, v) in s.snr_db.iter().enumerate() {
            check(v.is_finite(), &format!("sweep.snr_db[{i}]"), || "must be finite".into())?;
        }
        check(s.max_bits > 0, "sweep.max_bits", || "must be positive".into())?;
        check(s.min_bits <= s.max_bits, "sweep.min_bits", || {
            format!("{} exceeds max_bits = {}", s.min_bits, s.max_bits)
        })?;
        check(s.target_errors >= 1, "sweep.target_errors", || "must be at least 1".into())?;
        check(s.batch_frames >= 1, "sweep.batch_frames", || "must be at least 1".into())?;

        let p = &self.psd;
        check(p.oversample >= 4, "psd.oversample", || "must be at least 4".into())?;
        check(p.segment_len >= 2, "psd.segment_len", || "must be at least 2".into())?;
        check((0.0..1.0).contains(&p.overlap), "psd.overlap", || "must lie in [0, 1)".into())?;
        let psd_len = p.symbols.saturating_sub(1) * w.m + w.l * w.m;
        check(p.symbols >= 1 && psd_len >= 2 * p.segment_len, "psd.symbols", || {
            format!("{psd_len} samples are fewer than two segments of {}", p.segment_len)
        })?;

        let pa = &self.papr;
        check(pa.depth > 0.0 && pa.depth < 1.0, "papr.depth", || "must lie in (0, 1)".into())?;
        let needed = (10.0 / pa.depth).ceil() as usize;
        check(pa.symbols >= needed, "papr.symbols", || {
            format!("{} symbols are too few for depth {:e}, need {needed}", pa.symbols, pa.depth)
        })?;

        let r = &self.rate;
        check(r.symbols >= 1, "rate.symbols", || "must be at least 1".into())?;
        check(r.groups >= 1, "rate.groups", || "must be at least 1".into())?;
        for (i, [mf, mq]) in r.pairs.iter().enumerate() {
            for &scheme in r.schemes.iter().filter(|s| **s != Scheme::PlainQam) {
                FqamConfig::new(*mf, *mq, scheme)
                    .map_err(|e| Error::config(format!("rate.pairs[{i}]"), e.to_string()))?;
            }
        }
        Ok(())
    }

    fn bank_filter_names(&self) -> Vec<String> {
        if !self.waveform.filters.is_empty() {
            return self.waveform.filters.clone();
        }
        let mut names = vec![PHYDYAS_NAME.to_string()];
        if self.waveform.b == 2 {
            names.push(PHYDYAS_INTERLEAVED_NAME.into());
        }
        names
    }

    /// Resolves one filter name or path for this waveform.
    pub fn resolve_filter(&self, name: &str, base_dir: &Path, field: &str) -> Result<PrototypeFilter> {
        let w = &self.waveform;
        let filter = match name {
            PHYDYAS_NAME => phydyas(w.m, w.l)?,
            PHYDYAS_INTERLEAVED_NAME => block_interleave(&phydyas(w.m, w.l)?),
            path => {
                let full = base_dir.join(path);
                let f = load_filter(&full).map_err(|e| Error::config(field, format!("{}: {e}", full.display())))?;
                check(f.num_subcarriers() == w.m && f.overlap() == w.l, field, || {
                    format!(
                        "{} has M = {}, L = {}; waveform expects M = {}, L = {}",
                        full.display(),
                        f.num_subcarriers(),
                        f.overlap(),
                        w.m,
                        w.l
                    )
                })?;
                f
            }
        };
        Ok(filter)
    }

    /// The waveform's filter bank.
    pub fn fbmc(&self, base_dir: &Path) -> Result<FbmcConfig> {
        let filters = self
            .bank_filter_names()
            .iter()
            .enumerate()
            .map(|(i, n)| self.resolve_filter(n, base_dir, &format!("waveform.filters[{i}]")))
            .collect::<Result<Vec<_>>>()?;
        Ok(FbmcConfig::new(filters)?.with_subcarrier_spacing(self.waveform.subcarrier_spacing_hz))
    }

    pub fn layout(&self, fqam: &FqamConfig) -> Result<GroupLayout> {
        GroupLayout::new(self.waveform.m, fqam.mf)
    }
}
