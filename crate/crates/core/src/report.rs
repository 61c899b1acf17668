//! CSV emission.
//!
//! Each file starts with `# key=value` provenance lines (config hash, seed,
//! code version, report-specific context), followed by the header row and
//! the data. Numbers use Rust's shortest round-trip formatting, so output is
//! byte-stable and always uses '.' as the decimal separator. Lines end in LF.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::channel::AwgnSpec;
use crate::error::Result;
use crate::harness::{PaprSeries, Provenance, PsdSeries, RateRow, SelfSirRow, SweepResult};

pub const BER_HEADER: &str = "snr_db,bits,errors,ber";
pub const PSD_HEADER: &str = "freq_over_df,power_db";
pub const PAPR_HEADER: &str = "papr_db,ccdf";
pub const SELFSIR_HEADER: &str = "label,mode,p_s,p_i,gamma_db";
pub const RATE_HEADER: &str = "mf,mq,scheme,r_formula,r_empirical,loss_fraction";

/// In-memory CSV document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvDocument {
    text: String,
}

impl CsvDocument {
    pub fn new(provenance: &Provenance, report: &str) -> Self {
        let mut doc = Self { text: String::new() };
        doc.comment("generator", &format!("fqam-fbmc {}", provenance.version));
        doc.comment("report", report);
        doc.comment("config_sha256", &provenance.config_sha256);
        doc.comment("seed", &provenance.seed.to_string());
        doc
    }

    pub fn comment(&mut self, key: &str, value: &str) {
        let _ = writeln!(self.text, "# {key}={value}");
    }

    pub fn header(&mut self, header: &str) {
        self.text.push_str(header);
        self.text.push('\n');
    }

    pub fn row<I, T>(&mut self, fields: I)
    where
        I: IntoIterator<Item = T>,
        T: std::fmt::Display,
    {
        let line = fields.into_iter().map(|f| f.to_string()).collect::<Vec<_>>().join(",");
        self.text.push_str(&line);
        self.text.push('\n');
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(path, &self.text)?;
        Ok(())
    }
}

/// Data lines only, skipping provenance comments and the header.
pub fn data_lines(text: &str) -> impl Iterator<Item = &str> {
    text.lines().filter(|l| !l.starts_with('#')).skip(1)
}

pub fn ber_documents(result: &SweepResult) -> Vec<(String, CsvDocument)> {
    result
        .sweeps
        .iter()
        .map(|sweep| {
            let mut doc = CsvDocument::new(&result.provenance, "ber");
            doc.comment("scheme", sweep.scheme.name());
            doc.comment("channel", &format!("{:?}", result.channel).to_lowercase());
            doc.comment("noise", AwgnSpec::convention());
            for (rec, d) in sweep.records.iter().zip(&sweep.diagnostics) {
                doc.comment(
                    "diagnostics",
                    &format!(
                        "snr_db:{} frames:{} zf_floored:{} mode_mismatches:{} tone_mismatches:{}",
                        rec.snr_db, d.frames, d.zf_floored, d.mode_mismatches, d.tone_mismatches
                    ),
                );
            }
            doc.header(BER_HEADER);
            for rec in &sweep.records {
                doc.row([
                    rec.snr_db.to_string(),
                    rec.bits_sent.to_string(),
                    rec.bit_errors.to_string(),
                    rec.ber.to_string(),
                ]);
            }
            (format!("ber_{}.csv", sweep.scheme.name()), doc)
        })
        .collect()
}

pub fn selfsir_document(rows: &[SelfSirRow], provenance: &Provenance) -> CsvDocument {
    let mut doc = CsvDocument::new(provenance, "selfsir");
    doc.header(SELFSIR_HEADER);
    for r in rows {
        doc.row([
            r.label.clone(),
            r.report.mode.to_string(),
            r.report.p_signal.to_string(),
            r.report.p_interference.to_string(),
            r.report.gamma_db.to_string(),
        ]);
    }
    doc
}

pub fn psd_documents(series: &[PsdSeries], provenance: &Provenance) -> Vec<(String, CsvDocument)> {
    series
        .iter()
        .map(|s| {
            let mut doc = CsvDocument::new(provenance, "psd");
            doc.comment("series", &s.name);
            doc.comment("window", "periodic hann");
            doc.header(PSD_HEADER);
            for (f, p) in s.curve.freq_axis.iter().zip(&s.curve.power_db) {
                doc.row([f, p]);
            }
            (format!("psd_{}.csv", s.name), doc)
        })
        .collect()
}

pub fn papr_documents(series: &[PaprSeries], provenance: &Provenance) -> Vec<(String, CsvDocument)> {
    series
        .iter()
        .map(|s| {
            let mut doc = CsvDocument::new(provenance, "papr");
            doc.comment("series", &s.name);
            doc.comment("symbols", &s.papr_db.len().to_string());
            doc.header(PAPR_HEADER);
            for (t, p) in s.ccdf.thresholds_db.iter().zip(&s.ccdf.exceed_prob) {
                doc.row([t, p]);
            }
            (format!("papr_{}.csv", s.name), doc)
        })
        .collect()
}

pub fn rate_document(rows: &[RateRow], provenance: &Provenance) -> CsvDocument {
    let mut doc = CsvDocument::new(provenance, "rate");
    doc.header(RATE_HEADER);
    for r in rows {
        doc.row([
            r.mf.to_string(),
            r.mq.to_string(),
            r.scheme.name().to_string(),
            r.r_formula.to_string(),
            r.r_empirical.to_string(),
            r.loss_fraction.to_string(),
        ]);
    }
    doc
}

/// Writes named documents under `dir`, returning the paths.
pub fn write_all(dir: &Path, docs: &[(String, CsvDocument)]) -> Result<Vec<PathBuf>> {
    docs.iter()
        .map(|(name, doc)| {
            let path = dir.join(name);
            doc.write(&path)?;
            Ok(path)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prov() -> Provenance {
        Provenance {
            config_sha256: "ab".into(),
            seed: 9,
            version: "0.0.0".into(),
        }
    }

    #[test]
    fn layout_of_a_document() {
        let mut doc = CsvDocument::new(&prov(), "rate");
        doc.header(RATE_HEADER);
        doc.row([1.5, 2.0]);
        let text = doc.as_str();
        assert!(text.starts_with("# generator=fqam-fbmc 0.0.0\n# report=rate\n"));
        assert!(text.contains("# seed=9\n"));
        assert!(!text.contains('\r'));
        assert_eq!(data_lines(text).collect::<Vec<_>>(), vec!["1.5,2"]);
    }

    #[test]
    fn write_creates_directories() {
        let dir = tempfile::tempdir().unwrap();
        let doc = CsvDocument::new(&prov(), "x");
        let path = dir.path().join("a/b/c.csv");
        doc.write(&path).unwrap();
        assert_eq!(std::fs::read_to_string(path).unwrap(), doc.as_str());
    }
}
