//! Per-run files: writing them and reading them back.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Method, RunResult};
use crate::error::{Error, Result};
use crate::factorization::Factorization;
use crate::games::{GameId, GameSpec};
use crate::metrics::MetricsReport;
use crate::training::{BankSnapshot, Checkpoint, ReconstructedQ};

/// Bumped whenever a CSV column is added, removed or reordered.
pub const CSV_SCHEMA_VERSION: u32 = 1;

pub const METRICS_CSV_HEADER: [&str; 13] = [
    "game",
    "method",
    "repetition",
    "seed",
    "mse_all",
    "mse_optimal",
    "optimal_preserved",
    "value_loss",
    "boltzmann_value_loss",
    "correctly_ranked",
    "kendall_tau_b",
    "correctly_ranked_count",
    "config_hash",
];

pub const CURVE_CSV_HEADER: [&str; 3] = ["step", "mse_all", "value_loss"];

/// The flat, CSV-backed view of one run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub game: String,
    pub method: String,
    pub repetition: usize,
    pub seed: u64,
    /// Headline measures in [`MetricsReport::HEADLINE_NAMES`] order.
    pub metrics: [f64; 7],
    pub correctly_ranked_count: f64,
    pub config_hash: String,
    pub curve: Vec<Checkpoint>,
}

impl RunRecord {
    pub(crate) fn sort_key(&self) -> (usize, usize, usize, u64) {
        let game = self
            .game
            .parse::<GameId>()
            .ok()
            .and_then(|g| GameId::ALL.iter().position(|&x| x == g))
            .unwrap_or(usize::MAX);
        (
            game,
            Method::order_key(&self.method),
            self.repetition,
            self.seed,
        )
    }
}

#[derive(Serialize, Deserialize)]
struct ArchivedFactorization {
    config_hash: String,
    game: String,
    method: String,
    repetition: usize,
    seed: u64,
    factorization: Factorization,
}

/// Contents of `qhat.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArchivedQHat {
    pub config_hash: String,
    pub spec: GameSpec,
    pub method: String,
    pub repetition: usize,
    pub seed: u64,
    pub reconstructed: ReconstructedQ,
}

#[derive(Serialize)]
struct ArchivedBank<'a> {
    config_hash: &'a str,
    bank: &'a BankSnapshot,
}

#[derive(Serialize)]
struct ArchivedMetrics<'a> {
    config_hash: &'a str,
    game: &'a str,
    method: &'a str,
    repetition: usize,
    seed: u64,
    metrics: &'a MetricsReport,
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub(crate) fn csv_bytes(header: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let to_err = |e: csv::Error| Error::Artifact {
        path: "<csv>".into(),
        reason: e.to_string(),
    };
    w.write_record(header).map_err(to_err)?;
    for row in rows {
        w.write_record(row).map_err(to_err)?;
    }
    w.into_inner().map_err(|e| Error::Artifact {
        path: "<csv>".into(),
        reason: e.to_string(),
    })
}

pub(crate) fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    write_file(path, &csv_bytes(header, rows)?)
}

pub(crate) fn metrics_row(r: &RunRecord) -> Vec<String> {
    let mut row = vec![
        r.game.clone(),
        r.method.clone(),
        r.repetition.to_string(),
        r.seed.to_string(),
    ];
    row.extend(r.metrics.iter().map(|v| v.to_string()));
    row.push(r.correctly_ranked_count.to_string());
    row.push(r.config_hash.clone());
    row
}

/// Writes every per-run artifact into `<root>/<game>/<method>/<seed>/`.
pub fn write_run(root: &Path, result: &RunResult) -> Result<PathBuf> {
    let dir = result.run_dir(root);
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let record = result.record();
    let hash = result.config_hash.as_str();

    let fz = ArchivedFactorization {
        config_hash: hash.to_string(),
        game: record.game.clone(),
        method: record.method.clone(),
        repetition: record.repetition,
        seed: record.seed,
        factorization: result.factorization.clone(),
    };
    write_file(
        &dir.join("factorization.json"),
        &serde_json::to_vec_pretty(&fz)?,
    )?;

    write_file(
        &dir.join("qhat.json"),
        &serde_json::to_vec(&result.archived_qhat())?,
    )?;

    let bank = ArchivedBank {
        config_hash: hash,
        bank: &result.bank,
    };
    write_file(&dir.join("bank.json"), &serde_json::to_vec(&bank)?)?;

    let m = ArchivedMetrics {
        config_hash: hash,
        game: &record.game,
        method: &record.method,
        repetition: record.repetition,
        seed: record.seed,
        metrics: &result.metrics,
    };
    write_file(&dir.join("metrics.json"), &serde_json::to_vec_pretty(&m)?)?;
    write_csv(
        &dir.join("metrics.csv"),
        &METRICS_CSV_HEADER,
        &[metrics_row(&record)],
    )?;

    let curve_rows: Vec<Vec<String>> = record
        .curve
        .iter()
        .map(|c| {
            vec![
                c.step.to_string(),
                c.mse_all.to_string(),
                c.value_loss.to_string(),
            ]
        })
        .collect();
    write_csv(&dir.join("curve.csv"), &CURVE_CSV_HEADER, &curve_rows)?;
    Ok(dir)
}

fn artifact_err(path: &Path, reason: impl Into<String>) -> Error {
    Error::Artifact {
        path: path.display().to_string(),
        reason: reason.into(),
    }
}

fn read_csv(path: &Path, header: &[&str]) -> Result<Vec<csv::StringRecord>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| artifact_err(path, e.to_string()))?;
    let found = reader
        .headers()
        .map_err(|e| artifact_err(path, e.to_string()))?
        .clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(artifact_err(path, "unexpected CSV header"));
    }
    reader
        .records()
        .map(|r| r.map_err(|e| artifact_err(path, e.to_string())))
        .collect()
}

fn parse_field<T: std::str::FromStr>(path: &Path, rec: &csv::StringRecord, i: usize) -> Result<T> {
    rec.get(i)
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| artifact_err(path, format!("bad value in column {i}")))
}

fn read_run_dir(dir: &Path) -> Result<RunRecord> {
    let fz_path = dir.join("factorization.json");
    let text = fs::read_to_string(&fz_path).map_err(|e| Error::io(&fz_path, e))?;
    let fz: ArchivedFactorization = serde_json::from_str(&text)?;
    fz.factorization
        .validate()
        .map_err(|e| artifact_err(&fz_path, e.to_string()))?;

    let m_path = dir.join("metrics.csv");
    let rows = read_csv(&m_path, &METRICS_CSV_HEADER)?;
    let [rec] = rows.as_slice() else {
        return Err(artifact_err(&m_path, "expected exactly one row"));
    };
    let mut metrics = [0.0; 7];
    for (k, m) in metrics.iter_mut().enumerate() {
        *m = parse_field(&m_path, rec, 4 + k)?;
    }
    let c_path = dir.join("curve.csv");
    let curve = read_csv(&c_path, &CURVE_CSV_HEADER)?
        .iter()
        .map(|r| {
            Ok(Checkpoint {
                step: parse_field(&c_path, r, 0)?,
                mse_all: parse_field(&c_path, r, 1)?,
                value_loss: parse_field(&c_path, r, 2)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RunRecord {
        game: rec[0].to_string(),
        method: rec[1].to_string(),
        repetition: parse_field(&m_path, rec, 2)?,
        seed: parse_field(&m_path, rec, 3)?,
        metrics,
        correctly_ranked_count: parse_field(&m_path, rec, 11)?,
        config_hash: rec[12].to_string(),
        curve,
    })
}

fn subdirs(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    out.sort();
    Ok(out)
}

/// Every run directory (`<game>/<method>/<seed>` containing `metrics.csv`)
/// below `root`.
pub fn run_dirs(root: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for game in subdirs(root)? {
        for method in subdirs(&game)? {
            for run in subdirs(&method)? {
                if run.join("metrics.csv").is_file() {
                    out.push(run);
                }
            }
        }
    }
    Ok(out)
}

/// Reads back every archived run, validating its factorization, in canonical
/// (game, method, repetition) order.
pub fn load_run_records(root: &Path) -> Result<Vec<RunRecord>> {
    let mut records = run_dirs(root)?
        .iter()
        .map(|d| read_run_dir(d))
        .collect::<Result<Vec<_>>>()?;
    records.sort_by_key(RunRecord::sort_key);
    Ok(records)
}

pub fn load_archived_qhat(run_dir: &Path) -> Result<ArchivedQHat> {
    let path = run_dir.join("qhat.json");
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    Ok(serde_json::from_str(&text)?)
}
