//! Prototype filters: PHYDYAS, its block-interleaved variant, and filters
//! loaded from coefficient files.
//!
//! Every filter is stored at unit energy, so a matched filter on an isolated
//! pulse has gain one. The filter length is always `L * M`.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Second PHYDYAS frequency-sampling coefficient, `1/sqrt(2)`.
pub const PHYDYAS_H2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Frequency-sampling coefficients `[H0, H1, H2, H3]` of the PHYDYAS design
/// for overlap factor 4.
///
/// H1 and H3 are solved from the two Nyquist identities `H1^2 + H3^2 = 1` and
/// `H1 - H2 + H3 = 1/2` (the latter forces `p[0] = 0`), which reproduces the
/// tabulated values 0.971960 and 0.235147 to all printed digits.
pub fn phydyas_coefficients() -> [f64; 4] {
    let sum = 0.5 + PHYDYAS_H2;
    let product = (sum * sum - 1.0) / 2.0;
    let disc = (sum * sum - 4.0 * product).sqrt();
    let h1 = (sum + disc) / 2.0;
    let h3 = (sum - disc) / 2.0;
    [1.0, h1, PHYDYAS_H2, h3]
}

/// A real prototype filter of length `L * M`, normalized to unit energy.
#[derive(Debug, Clone, PartialEq)]
pub struct PrototypeFilter {
    coeffs: Arc<[f64]>,
    overlap: usize,
    num_subcarriers: usize,
    label: String,
}

impl PrototypeFilter {
    /// Validates the shape and normalizes `coeffs` to unit energy.
    pub fn new(
        coeffs: Vec<f64>,
        overlap: usize,
        num_subcarriers: usize,
        label: impl Into<String>,
    ) -> Result<Self> {
        if num_subcarriers < 2 {
            return Err(Error::InvalidParameter(format!(
                "M must be at least 2, got {num_subcarriers}"
            )));
        }
        if overlap < 1 {
            return Err(Error::InvalidParameter("overlap factor must be positive".into()));
        }
        let expected = overlap * num_subcarriers;
        if coeffs.len() != expected {
            return Err(Error::CoefficientCount {
                expected,
                found: coeffs.len(),
            });
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::FilterFormat("non-finite coefficient".into()));
        }
        let energy: f64 = coeffs.iter().map(|c| c * c).sum();
        if energy <= 0.0 {
            return Err(Error::ZeroEnergy);
        }
        // rescaling an already normalized filter would perturb the last bit
        let scale = if (energy - 1.0).abs() < 1e-12 { 1.0 } else { energy.sqrt().recip() };
        Ok(Self {
            coeffs: coeffs.into_iter().map(|c| c * scale).collect(),
            overlap,
            num_subcarriers,
            label: label.into(),
        })
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn overlap(&self) -> usize {
        self.overlap
    }

    pub fn num_subcarriers(&self) -> usize {
        self.num_subcarriers
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }

    /// Returns a copy carrying a different label.
    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }
}

/// PHYDYAS prototype filter for `m` subcarriers and overlap factor `l`.
///
/// `p[n] = H0 + 2 * sum_{k=1..3} (-1)^k H_k cos(2 pi k n / (L M))`, then
/// scaled to unit energy.
pub fn phydyas(m: usize, l: usize) -> Result<PrototypeFilter> {
    if l != 4 {
        return Err(Error::UnsupportedOverlap(l));
    }
    if m < 2 {
        return Err(Error::InvalidParameter(format!("M must be at least 2, got {m}")));
    }
    PrototypeFilter::new(phydyas_raw(m, l), l, m, "phydyas")
}

/// Unnormalized PHYDYAS coefficients.
pub(crate) fn phydyas_raw(m: usize, l: usize) -> Vec<f64> {
    let h = phydyas_coefficients();
    let len = (l * m) as f64;
    (0..l * m)
        .map(|n| {
            let base = 2.0 * std::f64::consts::PI * n as f64 / len;
            let mut acc = h[0];
            for (k, hk) in h.iter().enumerate().skip(1) {
                let sign = if k % 2 == 1 { -1.0 } else { 1.0 };
                acc += 2.0 * sign * hk * (base * k as f64).cos();
            }
            acc
        })
        .collect()
}

/// Coefficient permutation used to derive a second filter from the first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InterleaveRule {
    /// Write the `L * M` coefficients row-wise into an `L x M` matrix and read
    /// them back column-wise.
    #[default]
    RowColumn,
}

impl InterleaveRule {
    /// `perm[i]` is the source index of output position `i`.
    pub fn permutation(self, overlap: usize, m: usize) -> Vec<usize> {
        match self {
            InterleaveRule::RowColumn => (0..m)
                .flat_map(|col| (0..overlap).map(move |row| row * m + col))
                .collect(),
        }
    }
}

/// Block-interleaved copy of `f` using the default [`InterleaveRule`].
pub fn block_interleave(f: &PrototypeFilter) -> PrototypeFilter {
    block_interleave_with(f, InterleaveRule::default())
}

pub fn block_interleave_with(f: &PrototypeFilter, rule: InterleaveRule) -> PrototypeFilter {
    let perm = rule.permutation(f.overlap, f.num_subcarriers);
    let coeffs: Arc<[f64]> = perm.iter().map(|&src| f.coeffs[src]).collect();
    PrototypeFilter {
        coeffs,
        overlap: f.overlap,
        num_subcarriers: f.num_subcarriers,
        label: format!("{}_interleaved", f.label),
    }
}

/// Undoes [`block_interleave_with`] for the same rule.
pub fn block_deinterleave_with(f: &PrototypeFilter, rule: InterleaveRule) -> PrototypeFilter {
    let perm = rule.permutation(f.overlap, f.num_subcarriers);
    let mut coeffs = vec![0.0; f.len()];
    for (dst, &src) in perm.iter().enumerate() {
        coeffs[src] = f.coeffs[dst];
    }
    PrototypeFilter {
        coeffs: coeffs.into(),
        overlap: f.overlap,
        num_subcarriers: f.num_subcarriers,
        label: f
            .label
            .strip_suffix("_interleaved")
            .unwrap_or(&f.label)
            .to_string(),
    }
}

/// Parses the coefficient text format: a `M=<int> L=<int>` header line
/// followed by exactly `L * M` decimal values, one per line.
pub fn parse_filter(text: &str, label: &str) -> Result<PrototypeFilter> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::FilterFormat("empty file".into()))?;
    let (m, l) = parse_header(header)?;
    let coeffs = lines
        .enumerate()
        .map(|(i, line)| {
            line.trim().parse::<f64>().map_err(|e| {
                Error::FilterFormat(format!("line {}: `{}`: {e}", i + 2, line.trim()))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if coeffs.iter().any(|c| !c.is_finite()) {
        return Err(Error::FilterFormat("non-finite coefficient".into()));
    }
    PrototypeFilter::new(coeffs, l, m, label)
}

fn parse_header(header: &str) -> Result<(usize, usize)> {
    let mut m = None;
    let mut l = None;
    for field in header.split_whitespace() {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| Error::FilterFormat(format!("bad header field `{field}`")))?;
        let value: usize = value
            .parse()
            .map_err(|_| Error::FilterFormat(format!("bad header value `{field}`")))?;
        match key {
            "M" => m = Some(value),
            "L" => l = Some(value),
            _ => return Err(Error::FilterFormat(format!("unknown header key `{key}`"))),
        }
    }
    match (m, l) {
        (Some(m), Some(l)) => Ok((m, l)),
        _ => Err(Error::FilterFormat(format!(
            "header must be `M=<int> L=<int>`, got `{header}`"
        ))),
    }
}

pub fn load_filter(path: impl AsRef<Path>) -> Result<PrototypeFilter> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "external".into());
    parse_filter(&text, &label)
}

/// Text form accepted by [`parse_filter`]. `{:e}` is shortest-round-trip, so
/// save followed by load reproduces the coefficients exactly.
pub fn filter_to_text(f: &PrototypeFilter) -> String {
    let mut out = format!("M={} L={}\n", f.num_subcarriers, f.overlap);
    for c in f.coeffs.iter() {
        let _ = writeln!(out, "{c:e}");
    }
    out
}

pub fn save_filter(f: &PrototypeFilter, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, filter_to_text(f))?;
    Ok(())
}

/// A power spectrum in dB relative to its peak, on a frequency axis in
/// multiples of the subcarrier spacing.
#[derive(Debug, Clone, PartialEq)]
pub struct PsdCurve {
    pub freq_axis: Vec<f64>,
    pub power_db: Vec<f64>,
}

impl PsdCurve {
    /// Builds a curve from linear powers, normalizing to a 0 dB peak.
    pub(crate) fn from_linear(freq_axis: Vec<f64>, power: &[f64]) -> Self {
        let peak = power.iter().cloned().fold(0.0_f64, f64::max);
        let power_db = power
            .iter()
            .map(|&p| 10.0 * (p / peak).max(1e-300).log10())
            .collect();
        Self { freq_axis, power_db }
    }

    /// Highest level at `|f| >= offset` (in subcarrier spacings).
    pub fn max_beyond(&self, offset: f64) -> f64 {
        self.freq_axis
            .iter()
            .zip(&self.power_db)
            .filter(|(f, _)| f.abs() >= offset)
            .map(|(_, &p)| p)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Power at the axis point nearest to `freq`.
    pub fn level_at(&self, freq: f64) -> f64 {
        let idx = self
            .freq_axis
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - freq).abs().total_cmp(&(b.1 - freq).abs()))
            .map(|(i, _)| i)
            .unwrap_or(0);
        self.power_db[idx]
    }

    /// Peak level outside the main lobe on the positive-frequency side.
    ///
    /// The main lobe ends at the first local minimum walking outward from the
    /// global peak.
    pub fn first_sidelobe_db(&self) -> f64 {
        let start = self
            .power_db
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let mut i = start;
        while i + 1 < self.power_db.len() && self.power_db[i + 1] <= self.power_db[i] {
            i += 1;
        }
        self.power_db[i..]
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Magnitude-squared response of the zero-padded filter on
/// `oversample * L * M` points, peak-normalized, axis in subcarrier spacings.
///
/// Coefficients are real, so the power spectrum is even; it is evaluated on
/// the non-negative half and mirrored.
pub fn filter_psd(f: &PrototypeFilter, oversample: usize) -> Result<PsdCurve> {
    if oversample < 4 {
        return Err(Error::InvalidParameter(format!(
            "oversample must be at least 4, got {oversample}"
        )));
    }
    let n = oversample * f.len();
    let mut buf: Vec<Complex64> = f
        .coeffs
        .iter()
        .map(|&c| Complex64::new(c, 0.0))
        .chain(std::iter::repeat(Complex64::new(0.0, 0.0)))
        .take(n)
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let half: Vec<f64> = buf[..=n / 2].iter().map(|x| x.norm_sqr()).collect();
    let m = f.num_subcarriers as f64;
    let lowest = -((n / 2) as i64);
    let highest = n as i64 + lowest;
    let (freq_axis, power): (Vec<f64>, Vec<f64>) = (lowest..highest)
        .map(|k| (k as f64 * m / n as f64, half[k.unsigned_abs() as usize]))
        .unzip();
    Ok(PsdCurve::from_linear(freq_axis, &power))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn coefficient_identities() {
        let [_, h1, h2, h3] = phydyas_coefficients();
        assert_abs_diff_eq!(h1 * h1 + h3 * h3, 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(h2 * h2, 0.5, epsilon = 1e-6);
        assert_abs_diff_eq!(h1, 0.971960, epsilon = 5e-7);
        assert_abs_diff_eq!(h3, 0.235147, epsilon = 5e-7);
    }

    #[test]
    fn raw_values_m4() {
        let raw = phydyas_raw(4, 4);
        assert_abs_diff_eq!(raw[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(raw[8], 4.828427, epsilon = 1e-6);
        assert_abs_diff_eq!(raw[8], 1.0 + 2.0 * (0.5 + 2.0 * PHYDYAS_H2), epsilon = 1e-12);
    }

    #[test]
    fn phydyas_is_symmetric_unit_energy() {
        for m in [2, 4, 17, 64, 100] {
            let f = phydyas(m, 4).unwrap();
            assert_eq!(f.len(), 4 * m);
            assert_abs_diff_eq!(f.energy(), 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(f.coeffs()[0], 0.0, epsilon = 1e-12);
            for n in 1..f.len() {
                assert_abs_diff_eq!(f.coeffs()[n], f.coeffs()[f.len() - n], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn phydyas_rejects_bad_args() {
        assert!(matches!(phydyas(64, 2), Err(Error::UnsupportedOverlap(2))));
        assert!(matches!(phydyas(1, 4), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn phydyas_is_stateless() {
        let a = phydyas(32, 4).unwrap();
        let _ = phydyas(8, 4).unwrap();
        assert_eq!(a, phydyas(32, 4).unwrap());
    }

    #[test]
    fn interleave_constant_filter_is_identity() {
        let f = PrototypeFilter::new(vec![1.0; 16], 4, 4, "flat").unwrap();
        assert_eq!(block_interleave(&f).coeffs(), f.coeffs());
    }

    #[test]
    fn interleave_preserves_energy_and_inverts() {
        let f = phydyas(64, 4).unwrap();
        let g = block_interleave(&f);
        assert_abs_diff_eq!(g.energy(), f.energy(), epsilon = 1e-12);
        let back = block_deinterleave_with(&g, InterleaveRule::RowColumn);
        assert_eq!(back.coeffs(), f.coeffs());
        assert_eq!(back.label(), "phydyas");
    }

    #[test]
    fn row_column_permutation_layout() {
        // 2 x 3 matrix [0 1 2; 3 4 5] read by columns.
        assert_eq!(InterleaveRule::RowColumn.permutation(2, 3), vec![0, 3, 1, 4, 2, 5]);
    }

    #[test]
    fn zero_file_is_rejected() {
        let text = format!("M=4 L=4\n{}", "0\n".repeat(16));
        assert!(matches!(parse_filter(&text, "z"), Err(Error::ZeroEnergy)));
    }

    #[test]
    fn short_file_is_rejected() {
        let text = format!("M=4 L=4\n{}", "1\n".repeat(15));
        assert!(matches!(
            parse_filter(&text, "s"),
            Err(Error::CoefficientCount {
                expected: 16,
                found: 15
            })
        ));
    }

    #[test]
    fn malformed_inputs() {
        assert!(matches!(parse_filter("", "x"), Err(Error::FilterFormat(_))));
        assert!(matches!(parse_filter("M=4\n1\n", "x"), Err(Error::FilterFormat(_))));
        assert!(matches!(parse_filter("M=4 L=1\n1\nabc\n1\n1\n", "x"), Err(Error::FilterFormat(_))));
        assert!(matches!(parse_filter("M=2 L=1\n1\nNaN\n", "x"), Err(Error::FilterFormat(_))));
        assert!(matches!(parse_filter("M=2 L=1\n1\ninf\n", "x"), Err(Error::FilterFormat(_))));
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.txt");
        let f = phydyas(64, 4).unwrap();
        save_filter(&f, &path).unwrap();
        let g = load_filter(&path).unwrap();
        assert_eq!(g.num_subcarriers(), 64);
        assert_eq!(g.overlap(), 4);
        for (a, b) in f.coeffs().iter().zip(g.coeffs()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn psd_peak_and_symmetry() {
        let f = phydyas(64, 4).unwrap();
        let psd = filter_psd(&f, 8).unwrap();
        let peak = psd.power_db.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(peak, 0.0);
        assert_eq!(psd.level_at(0.0), 0.0);
        assert!(psd.freq_axis.windows(2).all(|w| w[1] > w[0]));
        let n = psd.freq_axis.len();
        for i in 1..n / 2 {
            let lo = psd.power_db[n / 2 - i];
            let hi = psd.power_db[n / 2 + i];
            assert!((lo - hi).abs() < 1e-9);
        }
    }

    #[test]
    fn phydyas_psd_confined_beyond_two_spacings() {
        let f = phydyas(64, 4).unwrap();
        let psd = filter_psd(&f, 8).unwrap();
        assert!(psd.max_beyond(2.0) < -60.0, "{}", psd.max_beyond(2.0));
    }

    #[test]
    fn interleaving_raises_first_sidelobe() {
        let f = phydyas(64, 4).unwrap();
        let plain = filter_psd(&f, 8).unwrap().first_sidelobe_db();
        let inter = filter_psd(&block_interleave(&f), 8).unwrap().first_sidelobe_db();
        assert!(inter > plain, "{inter} vs {plain}");
    }

    #[test]
    fn psd_rejects_low_oversampling() {
        let f = phydyas(8, 4).unwrap();
        assert!(filter_psd(&f, 3).is_err());
    }
}
