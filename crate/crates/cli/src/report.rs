//! Report documents. Serialization is deterministic: fixed field order and
//! shortest round-trip float formatting.

use std::io::Write;
use std::path::Path;

use ncl_core::suites::SuiteReport;
use ncl_core::witness::{Verdict, WitnessVerdict};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::spec::StateSummary;

pub const TOOL: &str = "ncl";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const EXIT_OK: i32 = 0;
pub const EXIT_NONCLASSICAL: i32 = 10;
pub const EXIT_ENTANGLED: i32 = 20;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_SUITE_FAILED: i32 = 2;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Serialize)]
pub struct Input {
    pub kind: &'static str,
    pub sha256: String,
}

#[derive(Serialize)]
pub struct Settings {
    pub tol_rel: f64,
    /// 1-based, as given on the command line.
    pub pt_mode: Option<usize>,
    pub embed_matrices: bool,
    pub phase: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
}

#[derive(Serialize)]
pub struct Summary {
    pub witnesses: usize,
    pub nonclassical: usize,
    pub entangled: usize,
    pub exit_code: i32,
}

impl Summary {
    pub fn of(verdicts: &[WitnessVerdict]) -> Self {
        let count = |v: Verdict| verdicts.iter().filter(|w| w.verdict == v).count();
        let (nonclassical, entangled) = (count(Verdict::Nonclassical), count(Verdict::Entangled));
        let exit_code = if entangled > 0 {
            EXIT_ENTANGLED
        } else if nonclassical > 0 {
            EXIT_NONCLASSICAL
        } else {
            EXIT_OK
        };
        Self { witnesses: verdicts.len(), nonclassical, entangled, exit_code }
    }
}

#[derive(Serialize)]
pub struct RunReport {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub input: Input,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub state: Option<StateSummary>,
    pub settings: Settings,
    pub verdicts: Vec<WitnessVerdict>,
    pub summary: Summary,
}

#[derive(Serialize)]
pub struct SuiteDocument {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub input: Input,
    pub report: SuiteReport,
}

/// Pretty JSON with a trailing newline.
pub fn render<T: Serialize>(doc: &T) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("report serialization");
    s.push('\n');
    s
}

pub fn emit(text: &str, out: Option<&Path>) -> std::io::Result<()> {
    match out {
        Some(p) => std::fs::write(p, text),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()
        }
    }
}
