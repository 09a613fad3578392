//! Machine-readable run reports.
//!
//! The body is a pure function of the configuration; timings and the thread
//! count live in a separate provenance block.

use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::config::RunConfig;
use crate::error::Result;

/// Outcome of one check, always with the window and tolerance it holds for.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub name: String,
    pub passed: bool,
    pub truncation: usize,
    pub tolerance: f64,
    pub detail: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportBody {
    pub command: String,
    pub config: RunConfig,
    pub verdicts: Vec<Verdict>,
    pub results: Value,
    /// File names relative to the output directory.
    pub artifacts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub version: String,
    pub threads: usize,
    pub elapsed_seconds: f64,
    /// FNV-1a hash of the serialized body.
    pub body_digest: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub body: ReportBody,
    pub provenance: Provenance,
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

impl Report {
    pub fn new(body: ReportBody, threads: usize, elapsed_seconds: f64) -> Result<Self> {
        let digest = fnv1a(serde_json::to_string(&body)?.as_bytes());
        Ok(Self {
            body,
            provenance: Provenance {
                version: env!("CARGO_PKG_VERSION").to_string(),
                threads,
                elapsed_seconds,
                body_digest: format!("{digest:016x}"),
            },
        })
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::write(dir.join("report.json"), serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}
