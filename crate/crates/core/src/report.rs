//! Run manifests and CSV emission.
//!
//! Every command writes a `manifest.json` holding the tool version, the
//! logical configuration (seeds included, worker count excluded: thread
//! count never changes output bytes), and a SHA-256 digest per output
//! file. Re-running the command from the manifest's configuration must
//! reproduce every output byte-for-byte.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bram::ManifestedFault;
use crate::error::{Error, Result};
use crate::placement::Tradeoff;
use crate::sweep::{RunRecord, SweepResult};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputDigest {
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: String,
    pub config: serde_json::Value,
    pub outputs: Vec<OutputDigest>,
}

impl RunManifest {
    pub fn new(command: &str, config: serde_json::Value) -> RunManifest {
        RunManifest {
            tool_version: TOOL_VERSION.to_string(),
            command: command.to_string(),
            config,
            outputs: Vec::new(),
        }
    }

    /// Digests an already-written output file; records its bare name.
    pub fn add_output(&mut self, path: &Path) -> Result<()> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let file = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        self.outputs.push(OutputDigest { file, sha256: sha256_hex(&bytes) });
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<RunManifest> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::parse(path, e.to_string()))
    }
}

pub const SWEEP_HEADER: &str =
    "voltage_mv,run,faults_total,faults_per_mbit,correctable,detectable,undetectable,power_w";

pub fn write_sweep_csv(path: &Path, result: &SweepResult) -> Result<()> {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for r in &result.records {
        out.push_str(&format!(
            "{},{},{},{:.4},{},{},{},{:.3}\n",
            r.voltage_mv,
            r.run,
            r.faults_total,
            r.faults_per_mbit,
            r.correctable,
            r.detectable,
            r.undetectable,
            r.power_w
        ));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_sweep_csv(path: &Path) -> Result<SweepResult> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == SWEEP_HEADER => {}
        _ => return Err(Error::parse(path, "missing sweep CSV header")),
    }
    let mut records = Vec::new();
    for (i, line) in lines.enumerate() {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 8 {
            return Err(Error::parse(path, format!("row {}: expected 8 fields", i + 2)));
        }
        let bad = |what: &str| Error::parse(path, format!("row {}: bad {what}", i + 2));
        records.push(RunRecord {
            voltage_mv: f[0].parse().map_err(|_| bad("voltage"))?,
            run: f[1].parse().map_err(|_| bad("run"))?,
            faults_total: f[2].parse().map_err(|_| bad("fault count"))?,
            faults_per_mbit: f[3].parse().map_err(|_| bad("fault rate"))?,
            correctable: f[4].parse().map_err(|_| bad("correctable count"))?,
            detectable: f[5].parse().map_err(|_| bad("detectable count"))?,
            undetectable: f[6].parse().map_err(|_| bad("undetectable count"))?,
            power_w: f[7].parse().map_err(|_| bad("power"))?,
        });
    }
    Ok(SweepResult { records })
}

pub const EVAL_HEADER: &str = "voltage_mv,ecc,placement,run,error_pct";

#[derive(Debug, Clone, PartialEq)]
pub struct EvalRow {
    pub voltage_mv: u32,
    pub ecc: bool,
    pub placement: String,
    pub run: u32,
    pub error_pct: f64,
}

pub fn write_eval_csv(path: &Path, rows: &[EvalRow]) -> Result<()> {
    let mut out = String::from(EVAL_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{:.4}\n",
            r.voltage_mv, r.ecc as u8, r.placement, r.run, r.error_pct
        ));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_eval_csv(path: &Path) -> Result<Vec<EvalRow>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == EVAL_HEADER => {}
        _ => return Err(Error::parse(path, "missing evaluation CSV header")),
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 5 {
            return Err(Error::parse(path, format!("row {}: expected 5 fields", i + 2)));
        }
        let bad = |what: &str| Error::parse(path, format!("row {}: bad {what}", i + 2));
        rows.push(EvalRow {
            voltage_mv: f[0].parse().map_err(|_| bad("voltage"))?,
            ecc: match f[1] {
                "0" => false,
                "1" => true,
                _ => return Err(bad("ecc flag")),
            },
            placement: f[2].to_string(),
            run: f[3].parse().map_err(|_| bad("run"))?,
            error_pct: f[4].parse().map_err(|_| bad("error"))?,
        });
    }
    Ok(rows)
}

pub const FAULT_LOG_HEADER: &str = "voltage_mv,run,bram,row,col,stored,read";

/// One line per manifested fault, bit-exact.
pub fn write_fault_log(
    path: &Path,
    voltage_mv: u32,
    run: u32,
    faults: &[ManifestedFault],
) -> Result<()> {
    let mut out = String::from(FAULT_LOG_HEADER);
    out.push('\n');
    for f in faults {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            voltage_mv, run, f.bram, f.row, f.col, f.stored, f.read
        ));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn write_cluster_csv(path: &Path, rates: &[f64], labels: &[u8]) -> Result<()> {
    let mut out = String::from("bram,crash_rate,class\n");
    for (i, (rate, label)) in rates.iter().zip(labels.iter()).enumerate() {
        out.push_str(&format!("{i},{rate:.6},{label}\n"));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn write_vulnerability_csv(path: &Path, values: &[f64]) -> Result<()> {
    let mut out = String::from("layer,normalized_vulnerability\n");
    for (j, v) in values.iter().enumerate() {
        out.push_str(&format!("{j},{v:.4}\n"));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn write_tradeoff_csv(path: &Path, tradeoff: &Tradeoff) -> Result<()> {
    let mut out = String::from("voltage_mv,norm_power,norm_error,product\n");
    for r in &tradeoff.rows {
        out.push_str(&format!(
            "{},{:.6},{:.6},{:.6}\n",
            r.voltage_mv, r.norm_power, r.norm_error, r.product
        ));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

fn median(values: &mut Vec<f64>) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    if n == 0 {
        return 0.0;
    }
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

/// Distinct voltage levels in first-seen order.
fn levels_of(records: &[RunRecord]) -> Vec<u32> {
    let mut levels = Vec::new();
    for r in records {
        if !levels.contains(&r.voltage_mv) {
            levels.push(r.voltage_mv);
        }
    }
    levels
}

fn level_median(records: &[RunRecord], mv: u32) -> f64 {
    let mut v: Vec<f64> = records
        .iter()
        .filter(|r| r.voltage_mv == mv)
        .map(|r| r.faults_per_mbit)
        .collect();
    median(&mut v)
}

/// Fault-rate-and-power projection of a sweep: one row per voltage.
pub fn write_fault_power_bundle(path: &Path, sweep: &SweepResult) -> Result<()> {
    let mut out = String::from("voltage_mv,median_faults_per_mbit,power_w\n");
    for mv in levels_of(&sweep.records) {
        let power = sweep
            .records
            .iter()
            .find(|r| r.voltage_mv == mv)
            .map(|r| r.power_w)
            .unwrap_or(0.0);
        out.push_str(&format!("{},{:.4},{:.3}\n", mv, level_median(&sweep.records, mv), power));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Two-platform comparison over the shared voltage grid.
pub fn write_compare_bundle(
    path: &Path,
    a: &SweepResult,
    b: &SweepResult,
    label_a: &str,
    label_b: &str,
) -> Result<()> {
    let levels = levels_of(&a.records);
    if levels != levels_of(&b.records) {
        return Err(Error::GridMismatch {
            reason: "sweeps cover different voltage grids".into(),
        });
    }
    let mut out = format!(
        "voltage_mv,{label_a}_median_faults_per_mbit,{label_b}_median_faults_per_mbit\n"
    );
    for mv in levels {
        out.push_str(&format!(
            "{},{:.4},{:.4}\n",
            mv,
            level_median(&a.records, mv),
            level_median(&b.records, mv)
        ));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Median error per (placement, ecc) at one voltage: the bar-chart table
/// for comparing mitigation strategies.
pub fn write_placement_bundle(path: &Path, rows: &[EvalRow], voltage_mv: u32) -> Result<()> {
    let mut groups: Vec<(String, bool)> = Vec::new();
    for r in rows.iter().filter(|r| r.voltage_mv == voltage_mv) {
        let key = (r.placement.clone(), r.ecc);
        if !groups.contains(&key) {
            groups.push(key);
        }
    }
    if groups.is_empty() {
        return Err(Error::InvalidConfig {
            reason: format!("no evaluation rows at {voltage_mv} mV"),
        });
    }
    let mut out = String::from("placement,ecc,median_error_pct\n");
    for (placement, ecc) in groups {
        let mut v: Vec<f64> = rows
            .iter()
            .filter(|r| r.voltage_mv == voltage_mv && r.placement == placement && r.ecc == ecc)
            .map(|r| r.error_pct)
            .collect();
        out.push_str(&format!("{},{},{:.4}\n", placement, ecc as u8, median(&mut v)));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}
