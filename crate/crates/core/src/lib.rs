//! FQAM over filter-bank multicarrier with a single PHYDYAS prototype.
//!
//! The crate covers the waveform (prototype filters, FQAM mapping with
//! edge-ASK and opportunistic activation, FBMC synthesis and analysis), the
//! channels used to evaluate it (AWGN, EVA tapped delay line, ZF), the
//! measurements (self-SIR, PSD, PAPR, BER, rate) and a seeded, parallel
//! experiment harness that writes CSV reports.

pub mod channel;
pub mod config;
pub mod error;
pub mod exec;
pub mod fbmc;
pub mod filter;
pub mod frame;
pub mod harness;
pub mod metrics;
pub mod modulation;
pub mod report;

pub use config::ExperimentConfig;
pub use error::{Error, Result};
pub use exec::Executor;
pub use fbmc::{FbmcConfig, FilterBank};
pub use filter::{PrototypeFilter, PsdCurve};
pub use frame::{Grid, TimeSignal, TxFrame};
pub use harness::Experiment;
pub use modulation::{FqamConfig, GroupLayout, Scheme, SymbolMode};
