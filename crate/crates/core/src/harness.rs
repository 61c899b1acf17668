//! Experiment runners behind the CLI subcommands.

use std::path::{Path, PathBuf};

use rand::{Rng, RngCore};
use serde::Serialize;

use crate::channel::{add_noise, apply_tdl, doppler_hz, zf_equalize, AwgnSpec, TdlSpec};
use crate::config::{
    ChannelKind, DetectionKind, ExperimentConfig, ReportKind, PHYDYAS_INTERLEAVED_NAME, PHYDYAS_NAME,
};
use crate::error::{Error, Result};
use crate::exec::{stream_id, trial_rng, Executor};
use crate::fbmc::{FbmcConfig, FilterBank};
use crate::filter::{filter_psd, PsdCurve};
use crate::frame::TxFrame;
use crate::report;
use crate::metrics::{
    papr_ccdf_from_values, papr_per_symbol, self_sir, signal_psd, BerRecord, ErrorCount, FqamPattern, PaprCcdf,
    RateTally, SelfSirMode, SelfSirReport,
};
use crate::modulation::{
    decode_frame, encode_frame, rate, AskPhase, Detection, FqamConfig, GroupBits, GroupLayout, Scheme,
};

const TAG_BER: u16 = 1;
const TAG_PSD: u16 = 2;
const TAG_PAPR: u16 = 3;
const TAG_RATE: u16 = 4;

/// Identifies the code and inputs behind an output file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Provenance {
    pub config_sha256: String,
    pub seed: u64,
    pub version: String,
}

/// A validated configuration bound to a seed, a worker pool and the
/// directory that relative filter paths resolve against.
#[derive(Debug)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub base_dir: PathBuf,
    pub executor: Executor,
}

impl Experiment {
    pub fn new(config: ExperimentConfig, base_dir: impl Into<PathBuf>, workers: usize) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            base_dir: base_dir.into(),
            executor: Executor::new(workers)?,
        })
    }

    /// Reads a JSON config file; `seed` overrides `channel.seed`.
    pub fn load(path: &Path, seed: Option<u64>, workers: usize) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config("", format!("cannot read {}: {e}", path.display())))?;
        let mut config = ExperimentConfig::from_json(&text)?;
        if let Some(seed) = seed {
            config.channel.seed = seed;
        }
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::new(config, base, workers)
    }

    pub fn seed(&self) -> u64 {
        self.config.channel.seed
    }

    pub fn provenance(&self) -> Provenance {
        Provenance {
            config_sha256: self.config.hash(),
            seed: self.seed(),
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }

    pub fn fbmc(&self) -> Result<FbmcConfig> {
        self.config.fbmc(&self.base_dir)
    }
}

/// Uniform random bits, one per byte.
pub fn random_bits<R: RngCore + ?Sized>(n: usize, rng: &mut R) -> Vec<u8> {
    let mut out = Vec::with_capacity(n + 64);
    while out.len() < n {
        let word = rng.next_u64();
        out.extend((0..64).map(|i| ((word >> i) & 1) as u8));
    }
    out.truncate(n);
    out
}

/// Splits the consumed transmit bits into per-group tone and payload parts,
/// mirroring the encoder's order (all tone bits of a symbol, then payloads).
pub fn split_group_bits(bits: &[u8], frame: &TxFrame, fqam: &FqamConfig) -> Vec<GroupBits> {
    let tb = fqam.tone_bits();
    let groups = frame.groups;
    let mut out = Vec::with_capacity(frame.modes.len());
    let mut pos = 0;
    for k in 0..frame.symbols() {
        let tones_start = pos;
        pos += groups * tb;
        for (g, &mode) in frame.modes_of(k).iter().enumerate() {
            let n = fqam.payload_bits(mode);
            out.push(GroupBits {
                tone: bits[tones_start + g * tb..tones_start + (g + 1) * tb].to_vec(),
                payload: bits[pos..pos + n].to_vec(),
            });
            pos += n;
        }
    }
    out
}

/// Errors over the transmitted bits of each group. When the receiver decided
/// a different mode its payload is truncated or zero-padded to the
/// transmitted length.
pub fn compare_group_bits(tx: &[GroupBits], rx: &[GroupBits]) -> ErrorCount {
    let mut count = ErrorCount::default();
    for (t, r) in tx.iter().zip(rx) {
        count.bits += (t.tone.len() + t.payload.len()) as u64;
        let tone_errors = t.tone.iter().zip(&r.tone).filter(|(a, b)| a != b).count();
        let payload_errors = t
            .payload
            .iter()
            .enumerate()
            .filter(|&(i, &b)| r.payload.get(i).copied().unwrap_or(0) != b)
            .count();
        count.errors += (tone_errors + payload_errors) as u64;
    }
    count
}

fn count_diff<T: PartialEq>(a: &[T], b: &[T]) -> u64 {
    a.iter().zip(b).filter(|(x, y)| x != y).count() as u64
}

/// Per-trial counters; all fields merge by addition.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct TrialOutcome {
    pub count: ErrorCount,
    pub frames: u64,
    pub zf_floored: u64,
    pub mode_mismatches: u64,
    pub tone_mismatches: u64,
}

impl std::ops::AddAssign for TrialOutcome {
    fn add_assign(&mut self, o: Self) {
        self.count += o.count;
        self.frames += o.frames;
        self.zf_floored += o.zf_floored;
        self.mode_mismatches += o.mode_mismatches;
        self.tone_mismatches += o.tone_mismatches;
    }
}

/// Everything one link-level trial needs, shared read-only across workers.
#[derive(Debug, Clone)]
pub struct LinkSetup {
    pub bank: FilterBank,
    pub fqam: FqamConfig,
    pub layout: GroupLayout,
    pub symbols: usize,
    pub fading: Option<TdlSpec>,
    pub noise: bool,
    pub detection: DetectionKind,
}

impl LinkSetup {
    pub fn new(exp: &Experiment, scheme: Scheme) -> Result<Self> {
        let c = &exp.config;
        let fbmc = exp.fbmc()?;
        let fqam = c.modulation.fqam(scheme)?;
        let fading = match c.channel.kind {
            ChannelKind::Awgn => None,
            ChannelKind::Eva => {
                let mut spec = TdlSpec::eva(
                    doppler_hz(c.channel.speed_kmh, c.channel.carrier_hz),
                    fbmc.sample_rate_hz(),
                );
                spec.sinusoids = c.channel.sinusoids;
                Some(spec)
            }
        };
        Ok(Self {
            layout: c.layout(&fqam)?,
            bank: FilterBank::new(fbmc),
            fqam,
            symbols: c.waveform.symbols_per_frame,
            fading,
            noise: c.channel.noise,
            detection: c.modulation.detection,
        })
    }

    /// One frame: bits, encode, synthesize, channel, analyze, ZF, decode.
    pub fn run_trial<R: Rng + ?Sized>(&self, ebn0_db: f64, rng: &mut R) -> Result<TrialOutcome> {
        let capacity = self.symbols * self.layout.num_groups() * self.fqam.max_bits_per_group();
        let bits = random_bits(capacity, rng);
        let (frame, consumed) = encode_frame(&bits, &self.fqam, &self.layout, self.symbols)?;
        let tx = self.bank.synthesize_fast(&frame.grid)?;
        let tx_power = tx.symbol_power();
        let (mut rx, realization) = match &self.fading {
            None => (tx, None),
            Some(spec) => {
                let (rx, h) = apply_tdl(&tx, spec, rng)?;
                (rx, Some(h))
            }
        };
        if self.noise {
            let variance = AwgnSpec::new(ebn0_db, &self.fqam).noise_variance(tx_power);
            add_noise(&mut rx.samples, variance, rng);
        }
        let mut grid = self.bank.analyze(&rx.samples, self.symbols)?;
        let mut zf_floored = 0;
        if let Some(h) = realization {
            let eq = zf_equalize(&grid, &h)?;
            grid = eq.grid;
            zf_floored = eq.floored as u64;
        }
        let detection = match self.detection {
            DetectionKind::Blind => Detection::Blind,
            DetectionKind::Genie => Detection::Genie {
                tones: &frame.tones,
                modes: &frame.modes,
            },
        };
        let decoded = decode_frame(&grid, &self.fqam, &self.layout, detection)?;
        let sent = split_group_bits(&bits[..consumed], &frame, &self.fqam);
        Ok(TrialOutcome {
            count: compare_group_bits(&sent, &decoded.groups),
            frames: 1,
            zf_floored,
            mode_mismatches: count_diff(&frame.modes, &decoded.modes),
            tone_mismatches: count_diff(&frame.tones, &decoded.tones),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchemeSweep {
    pub scheme: Scheme,
    pub records: Vec<BerRecord>,
    pub diagnostics: Vec<TrialOutcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub channel: ChannelKind,
    pub sweeps: Vec<SchemeSweep>,
    pub provenance: Provenance,
}

/// Monte Carlo BER per scheme and SNR point.
///
/// Frames run in batches of `sweep.batch_frames`; after each batch the point
/// stops once it has `min_bits` bits and `target_errors` errors, or
/// `max_bits` bits. Frame `i` of point `p` always draws from
/// `trial_rng(seed, stream(p), i)`, shared by all schemes.
pub fn run_ber_sweep(exp: &Experiment) -> Result<SweepResult> {
    let c = &exp.config;
    let mut sweeps = Vec::new();
    for &scheme in &c.modulation.scheme {
        let setup = LinkSetup::new(exp, scheme)?;
        let mut records = Vec::new();
        let mut diagnostics = Vec::new();
        for (p, &snr) in c.sweep.snr_db.iter().enumerate() {
            let total = run_point(exp, &setup, snr, ber_stream(p))?;
            records.push(BerRecord::new(snr, total.count));
            diagnostics.push(total);
        }
        sweeps.push(SchemeSweep {
            scheme,
            records,
            diagnostics,
        });
    }
    Ok(SweepResult {
        channel: c.channel.kind,
        sweeps,
        provenance: exp.provenance(),
    })
}

/// Seed stream of BER sweep point `point`, shared by every scheme.
pub fn ber_stream(point: usize) -> u64 {
    stream_id(TAG_BER, point as u32, 0)
}

/// Runs one SNR point to the stopping rule.
pub fn run_point(exp: &Experiment, setup: &LinkSetup, ebn0_db: f64, stream: u64) -> Result<TrialOutcome> {
    let s = &exp.config.sweep;
    let seed = exp.seed();
    let batch = s.batch_frames as u64;
    let mut total = TrialOutcome::default();
    let mut next = 0u64;
    while total.count.bits < s.max_bits && (total.count.bits < s.min_bits || total.count.errors < s.target_errors) {
        let results = exp.executor.map(next..next + batch, |i| {
            setup.run_trial(ebn0_db, &mut trial_rng(seed, stream, i))
        });
        for r in results {
            total += r?;
        }
        next += batch;
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelfSirRow {
    pub label: String,
    pub report: SelfSirReport,
}

fn bank_label(cfg: &FbmcConfig) -> String {
    cfg.filters().iter().map(|f| f.label()).collect::<Vec<_>>().join("+")
}

fn ask_phase_name(p: AskPhase) -> &'static str {
    match p {
        AskPhase::Identity => "identity",
        AskPhase::QuarterTurn => "quarter_turn",
    }
}

/// Self-SIR rows: all-active baselines for the single and paired PHYDYAS
/// banks, the configured bank and any extra filter files, then FQAM rows per
/// configured scheme.
///
/// FQAM rows use the middle group: tone 1 as the non-edge reference and tone
/// `M_F - 1` as the edge reference. `non_edge:min2` rows are the operating
/// point of the scheme (non-edge tones at least two subcarriers away);
/// `all:min1` rows drop that constraint. Projected-ASK rows are reported for
/// both ASK phase conventions, the alternative tagged in the label.
pub fn run_self_sir_table(exp: &Experiment) -> Result<Vec<SelfSirRow>> {
    let c = &exp.config;
    let w = &c.waveform;
    let mut rows = Vec::new();
    let center = w.m / 2;
    let dense = c.modulation.fqam(Scheme::PlainQam)?;
    let push_all_active = |rows: &mut Vec<SelfSirRow>, cfg: &FbmcConfig| -> Result<()> {
        rows.push(SelfSirRow {
            label: bank_label(cfg),
            report: self_sir(cfg, &dense, center.min(cfg.m_total() - 1), SelfSirMode::AllActive)?,
        });
        Ok(())
    };

    let configured = exp.fbmc()?;
    let mut seen = Vec::new();
    if w.l == 4 {
        let dir = &exp.base_dir;
        let single = FbmcConfig::new(vec![c.resolve_filter(PHYDYAS_NAME, dir, "waveform")?])?;
        let pair = FbmcConfig::new(vec![
            c.resolve_filter(PHYDYAS_NAME, dir, "waveform")?,
            c.resolve_filter(PHYDYAS_INTERLEAVED_NAME, dir, "waveform")?,
        ])?;
        for cfg in [single, pair] {
            seen.push(bank_label(&cfg));
            push_all_active(&mut rows, &cfg)?;
        }
    }
    if !seen.contains(&bank_label(&configured)) {
        push_all_active(&mut rows, &configured)?;
    }
    for (i, path) in c.selfsir.extra_filters.iter().enumerate() {
        let full = exp.base_dir.join(path);
        let f = crate::filter::load_filter(&full)
            .map_err(|e| Error::config(format!("selfsir.extra_filters[{i}]"), format!("{}: {e}", full.display())))?;
        push_all_active(&mut rows, &FbmcConfig::single(f))?;
    }

    let label = bank_label(&configured);
    for &scheme in &c.modulation.scheme {
        if scheme == Scheme::PlainQam {
            continue;
        }
        let fqam = c.modulation.fqam(scheme)?;
        let layout = c.layout(&fqam)?;
        let g = layout.num_groups() / 2;
        let inner = layout.subcarrier(g, 1);
        let edge = layout.subcarrier(g, fqam.mf - 1);
        let scheme_label = format!("{label}/{scheme}");
        let mut modes = Vec::new();
        if fqam.mf > 2 {
            modes.push((inner, SelfSirMode::FqamAverage(FqamPattern::NON_EDGE)));
            modes.push((inner, SelfSirMode::FqamWorstCase(FqamPattern::NON_EDGE)));
        }
        let has_ask = matches!(scheme, Scheme::Scheme1 | Scheme::Scheme2) && layout.num_groups() >= 2;
        if has_ask {
            modes.push((edge, SelfSirMode::ProjectedAsk(FqamPattern::NON_EDGE)));
        }
        modes.push((inner, SelfSirMode::FqamAverage(FqamPattern::UNCONSTRAINED)));
        modes.push((inner, SelfSirMode::FqamWorstCase(FqamPattern::UNCONSTRAINED)));
        for (reference, mode) in modes {
            rows.push(SelfSirRow {
                label: scheme_label.clone(),
                report: self_sir(&configured, &fqam, reference, mode)?,
            });
        }
        if has_ask {
            let other = match fqam.ask_phase {
                AskPhase::Identity => AskPhase::QuarterTurn,
                AskPhase::QuarterTurn => AskPhase::Identity,
            };
            rows.push(SelfSirRow {
                label: format!("{scheme_label}/{}", ask_phase_name(other)),
                report: self_sir(
                    &configured,
                    &fqam.with_ask_phase(other),
                    edge,
                    SelfSirMode::ProjectedAsk(FqamPattern::NON_EDGE),
                )?,
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsdSeries {
    pub name: String,
    pub curve: PsdCurve,
}

/// Prototype spectra for `psd.filters` and Welch spectra of one long random
/// frame per configured scheme.
pub fn run_psd_export(exp: &Experiment) -> Result<Vec<PsdSeries>> {
    let c = &exp.config;
    let p = &c.psd;
    let mut out = Vec::new();
    for (i, name) in p.filters.iter().enumerate() {
        let f = c.resolve_filter(name, &exp.base_dir, &format!("psd.filters[{i}]"))?;
        out.push(PsdSeries {
            name: format!("filter_{}", f.label()),
            curve: filter_psd(&f, p.oversample)?,
        });
    }
    for (i, &scheme) in c.modulation.scheme.iter().enumerate() {
        let setup = LinkSetup::new(exp, scheme)?;
        let mut rng = trial_rng(exp.seed(), stream_id(TAG_PSD, 0, i as u16), 0);
        let capacity = p.symbols * setup.layout.num_groups() * setup.fqam.max_bits_per_group();
        let bits = random_bits(capacity, &mut rng);
        let (frame, _) = encode_frame(&bits, &setup.fqam, &setup.layout, p.symbols)?;
        let signal = setup.bank.synthesize_fast(&frame.grid)?;
        out.push(PsdSeries {
            name: format!("signal_{scheme}"),
            curve: signal_psd(&signal, p.segment_len, p.overlap)?,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PaprSeries {
    pub name: String,
    pub papr_db: Vec<f64>,
    pub ccdf: PaprCcdf,
}

/// Per-symbol PAPR of `papr.symbols` symbols for one modulation setup.
///
/// Frames hold `max(symbols_per_frame, 4 L)` symbols; only strides of fully
/// overlapped symbols (`k >= L - 1`) are measured.
pub fn papr_values(exp: &Experiment, fqam: &FqamConfig, stream: u64) -> Result<Vec<f64>> {
    let c = &exp.config;
    let fbmc = exp.fbmc()?;
    let m = fbmc.m_total();
    let l = fbmc.overlap();
    let bank = FilterBank::new(fbmc);
    let layout = c.layout(fqam)?;
    let k_frame = c.waveform.symbols_per_frame.max(4 * l);
    let per_frame = k_frame - (l - 1);
    let frames = c.papr.symbols.div_ceil(per_frame) as u64;
    let starts: Vec<usize> = (l - 1..k_frame).map(|k| k * m).collect();
    let seed = exp.seed();
    let chunks = exp.executor.map(0..frames, |i| -> Result<Vec<f64>> {
        let mut rng = trial_rng(seed, stream, i);
        let bits = random_bits(k_frame * layout.num_groups() * fqam.max_bits_per_group(), &mut rng);
        let (frame, _) = encode_frame(&bits, fqam, &layout, k_frame)?;
        let signal = bank.synthesize_fast(&frame.grid)?;
        papr_per_symbol(&signal.samples, &starts, m)
    });
    let mut values = Vec::with_capacity(frames as usize * per_frame);
    for chunk in chunks {
        values.extend(chunk?);
    }
    values.truncate(c.papr.symbols);
    Ok(values)
}

/// PAPR CCDFs for each configured scheme and for dense QAM of the same order.
pub fn run_papr_export(exp: &Experiment) -> Result<Vec<PaprSeries>> {
    let c = &exp.config;
    let mut setups: Vec<(String, FqamConfig)> = c
        .modulation
        .scheme
        .iter()
        .map(|&s| Ok((s.to_string(), c.modulation.fqam(s)?)))
        .collect::<Result<_>>()?;
    if !c.modulation.scheme.contains(&Scheme::PlainQam) {
        setups.push(("dense_qam".into(), c.modulation.fqam(Scheme::PlainQam)?));
    }
    setups
        .into_iter()
        .enumerate()
        .map(|(i, (name, fqam))| {
            let papr_db = papr_values(exp, &fqam, stream_id(TAG_PAPR, 0, i as u16))?;
            let ccdf = papr_ccdf_from_values(&papr_db, c.papr.depth)?;
            Ok(PaprSeries { name, papr_db, ccdf })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateRow {
    pub mf: usize,
    pub mq: usize,
    pub scheme: Scheme,
    pub r_formula: f64,
    pub r_empirical: f64,
    pub loss_fraction: f64,
    pub ask_incidence: f64,
}

/// Measures rate and ASK incidence over `symbols` multicarrier symbols.
pub fn measure_rate(exp: &Experiment, fqam: &FqamConfig, groups: usize, symbols: usize, stream: u64) -> Result<RateTally> {
    let layout = GroupLayout::new(groups * fqam.mf, fqam.mf)?;
    const CHUNK: usize = 1000;
    let chunks = symbols.div_ceil(CHUNK) as u64;
    let seed = exp.seed();
    let tallies = exp.executor.map(0..chunks, |i| -> Result<RateTally> {
        let k = CHUNK.min(symbols - i as usize * CHUNK);
        let mut rng = trial_rng(seed, stream, i);
        let bits = random_bits(k * groups * fqam.max_bits_per_group(), &mut rng);
        let (frame, used) = encode_frame(&bits, fqam, &layout, k)?;
        let mut t = RateTally::default();
        t.add_frame(&frame, used);
        Ok(t)
    });
    tallies.into_iter().try_fold(RateTally::default(), |acc, t| Ok(acc + t?))
}

/// Closed-form and measured rate for every configured `(M_F, M_Q)` pair and
/// scheme.
pub fn run_rate_report(exp: &Experiment) -> Result<Vec<RateRow>> {
    let r = &exp.config.rate;
    let mut rows = Vec::new();
    for (i, &[mf, mq]) in r.pairs.iter().enumerate() {
        for (j, &scheme) in r.schemes.iter().enumerate() {
            let fqam = if scheme == Scheme::PlainQam {
                FqamConfig::new(1, mq, scheme)?
            } else {
                FqamConfig::new(mf, mq, scheme)?
            };
            let formula = rate(&fqam);
            let tally = measure_rate(exp, &fqam, r.groups, r.symbols, stream_id(TAG_RATE, i as u32, j as u16))?;
            rows.push(RateRow {
                mf: fqam.mf,
                mq,
                scheme,
                r_formula: formula.r_bits_per_symbol,
                r_empirical: tally.rate(),
                loss_fraction: formula.r_loss_fraction,
                ask_incidence: tally.ask_incidence(),
            });
        }
    }
    Ok(rows)
}

/// Runs one report and writes its CSV files under `dir`.
pub fn run_report(exp: &Experiment, kind: ReportKind, dir: &Path) -> Result<Vec<PathBuf>> {
    let prov = exp.provenance();
    let docs = match kind {
        ReportKind::Ber => report::ber_documents(&run_ber_sweep(exp)?),
        ReportKind::Selfsir => vec![("selfsir.csv".into(), report::selfsir_document(&run_self_sir_table(exp)?, &prov))],
        ReportKind::Psd => report::psd_documents(&run_psd_export(exp)?, &prov),
        ReportKind::Papr => report::papr_documents(&run_papr_export(exp)?, &prov),
        ReportKind::Rate => vec![("rate.csv".into(), report::rate_document(&run_rate_report(exp)?, &prov))],
    };
    report::write_all(dir, &docs)
}

/// Runs every report listed in `outputs.reports` into `outputs.directory`.
pub fn run_configured(exp: &Experiment) -> Result<Vec<PathBuf>> {
    let dir = exp.base_dir.join(&exp.config.outputs.directory);
    let mut written = Vec::new();
    for &kind in &exp.config.outputs.reports {
        written.extend(run_report(exp, kind, &dir)?);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(json: &str) -> Experiment {
        let config = ExperimentConfig::from_json(json).unwrap();
        Experiment::new(config, ".", 2).unwrap()
    }

    #[test]
    fn split_matches_encoder_consumption() {
        let exp = quick(r#"{"waveform": {"m": 16, "symbols_per_frame": 3}, "modulation": {"scheme": "scheme2"}}"#);
        let setup = LinkSetup::new(&exp, Scheme::Scheme2).unwrap();
        let mut rng = trial_rng(1, 0, 0);
        let bits = random_bits(3 * 4 * setup.fqam.max_bits_per_group(), &mut rng);
        let (frame, used) = encode_frame(&bits, &setup.fqam, &setup.layout, 3).unwrap();
        let groups = split_group_bits(&bits[..used], &frame, &setup.fqam);
        let total: usize = groups.iter().map(|g| g.tone.len() + g.payload.len()).sum();
        assert_eq!(total, used);
        let decoded = decode_frame(&frame.grid, &setup.fqam, &setup.layout, Detection::Blind).unwrap();
        assert_eq!(compare_group_bits(&groups, &decoded.groups).errors, 0);
    }

    #[test]
    fn short_payload_is_zero_padded() {
        let tx = [GroupBits {
            tone: vec![1, 0],
            payload: vec![1, 1, 0, 1],
        }];
        let rx = [GroupBits {
            tone: vec![1, 0],
            payload: vec![1, 1],
        }];
        let c = compare_group_bits(&tx, &rx);
        assert_eq!((c.bits, c.errors), (6, 1));
    }

    #[test]
    fn noiseless_sweep_is_error_free() {
        let exp = quick(
            r#"{"waveform": {"m": 32, "symbols_per_frame": 4},
                "channel": {"noise": false},
                "sweep": {"snr_db": [0], "min_bits": 1000, "max_bits": 5000, "batch_frames": 4}}"#,
        );
        let r = run_ber_sweep(&exp).unwrap();
        let rec = r.sweeps[0].records[0];
        assert_eq!(rec.bit_errors, 0);
        assert!(rec.bits_sent >= 5000);
    }

    #[test]
    fn rate_rows_cover_pairs_and_schemes() {
        let exp = quick(r#"{"rate": {"symbols": 2000}}"#);
        let rows = run_rate_report(&exp).unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[0].r_formula, 3.5);
        assert!((rows[0].r_empirical - 3.5).abs() < 0.05);
    }
}
