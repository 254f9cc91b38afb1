//! Mean / standard-error tables and training-curve files.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Serialize;

use super::artifacts::{write_csv, RunRecord, CSV_SCHEMA_VERSION};
use crate::error::{Error, Result};
use crate::metrics::MetricsReport;

/// Sample standard deviation over `sqrt(k)`; zero for a single value.
pub fn standard_error(values: &[f64]) -> f64 {
    let k = values.len();
    if k < 2 || values.iter().all(|v| *v == values[0]) {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / k as f64;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (k - 1) as f64;
    var.sqrt() / (k as f64).sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummaryRow {
    pub game: String,
    pub method: String,
    pub runs: usize,
    pub mean: [f64; 7],
    pub standard_error: [f64; 7],
    pub correctly_ranked_count_mean: f64,
}

/// Groups records by (game, method) in canonical order.
fn grouped(records: &[RunRecord]) -> Vec<Vec<&RunRecord>> {
    let mut sorted: Vec<&RunRecord> = records.iter().collect();
    sorted.sort_by(|a, b| {
        let (ka, kb) = (a.sort_key(), b.sort_key());
        (ka.0, ka.1, &a.game, &a.method, ka.2, ka.3)
            .cmp(&(kb.0, kb.1, &b.game, &b.method, kb.2, kb.3))
    });
    sorted
        .chunk_by(|a, b| a.game == b.game && a.method == b.method)
        .map(<[&RunRecord]>::to_vec)
        .collect()
}

pub fn summarize(records: &[RunRecord]) -> Vec<SummaryRow> {
    grouped(records)
        .into_iter()
        .map(|g| {
            let mut mean = [0.0; 7];
            let mut se = [0.0; 7];
            for k in 0..7 {
                let values: Vec<f64> = g.iter().map(|r| r.metrics[k]).collect();
                mean[k] = values.iter().sum::<f64>() / values.len() as f64;
                se[k] = standard_error(&values);
            }
            SummaryRow {
                game: g[0].game.clone(),
                method: g[0].method.clone(),
                runs: g.len(),
                mean,
                standard_error: se,
                correctly_ranked_count_mean: g
                    .iter()
                    .map(|r| r.correctly_ranked_count)
                    .sum::<f64>()
                    / g.len() as f64,
            }
        })
        .collect()
}

pub(crate) fn summary_header() -> Vec<String> {
    let mut h = vec!["game".to_string(), "method".into(), "runs".into()];
    for name in MetricsReport::HEADLINE_NAMES {
        h.push(format!("{name}_mean"));
        h.push(format!("{name}_se"));
    }
    h.push("correctly_ranked_count_mean".into());
    h
}

#[derive(Serialize)]
struct SummaryJson<'a> {
    schema_version: u32,
    metrics: [&'static str; 7],
    rows: &'a [SummaryRow],
}

/// Writes `summary.csv` and `summary.json` into `dir`.
pub fn emit_summary_tables(records: &[RunRecord], dir: &Path) -> Result<Vec<SummaryRow>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let rows = summarize(records);
    let header = summary_header();
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let mut row = vec![r.game.clone(), r.method.clone(), r.runs.to_string()];
            for k in 0..7 {
                row.push(r.mean[k].to_string());
                row.push(r.standard_error[k].to_string());
            }
            row.push(r.correctly_ranked_count_mean.to_string());
            row
        })
        .collect();
    write_csv(&dir.join("summary.csv"), &header_refs, &csv_rows)?;
    let json = SummaryJson {
        schema_version: CSV_SCHEMA_VERSION,
        metrics: MetricsReport::HEADLINE_NAMES,
        rows: &rows,
    };
    let path = dir.join("summary.json");
    fs::write(&path, serde_json::to_vec_pretty(&json)?).map_err(|e| Error::io(&path, e))?;
    Ok(rows)
}

fn curve_rows(group: &[&RunRecord], with_labels: bool) -> (Vec<Vec<String>>, Vec<Vec<String>>) {
    let mut long = Vec::new();
    let mut by_step: BTreeMap<usize, (usize, f64, f64)> = BTreeMap::new();
    for r in group {
        for c in &r.curve {
            let mut row = Vec::new();
            if with_labels {
                row.push(r.game.clone());
                row.push(r.method.clone());
            }
            row.extend([
                c.step.to_string(),
                r.seed.to_string(),
                c.mse_all.to_string(),
                c.value_loss.to_string(),
            ]);
            long.push(row);
            let e = by_step.entry(c.step).or_insert((0, 0.0, 0.0));
            e.0 += 1;
            e.1 += c.mse_all;
            e.2 += c.value_loss;
        }
    }
    let mean = by_step
        .into_iter()
        .map(|(step, (k, mse, vl))| {
            let mut row = Vec::new();
            if with_labels {
                row.push(group[0].game.clone());
                row.push(group[0].method.clone());
            }
            row.extend([
                step.to_string(),
                k.to_string(),
                (mse / k as f64).to_string(),
                (vl / k as f64).to_string(),
            ]);
            row
        })
        .collect();
    (long, mean)
}

const CURVE_LONG: [&str; 4] = ["step", "seed", "mse_all", "value_loss"];
const CURVE_MEAN: [&str; 4] = ["step", "runs", "mse_all_mean", "value_loss_mean"];

/// Per (game, method): `curves.csv` in long format and `curves_mean.csv`
/// averaged over seeds, under `<dir>/<game>/<method>/`. Also writes the
/// combined `curves_all.csv` / `curves_all_mean.csv` in `dir` (headers only
/// when there are no records).
pub fn emit_training_curves(records: &[RunRecord], dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut all_long = Vec::new();
    let mut all_mean = Vec::new();
    for group in grouped(records) {
        let sub = dir.join(&group[0].game).join(&group[0].method);
        fs::create_dir_all(&sub).map_err(|e| Error::io(&sub, e))?;
        let (long, mean) = curve_rows(&group, false);
        write_csv(&sub.join("curves.csv"), &CURVE_LONG, &long)?;
        write_csv(&sub.join("curves_mean.csv"), &CURVE_MEAN, &mean)?;
        let (long, mean) = curve_rows(&group, true);
        all_long.extend(long);
        all_mean.extend(mean);
    }
    let labelled = |h: &[&'static str; 4]| {
        let mut v = vec!["game", "method"];
        v.extend_from_slice(h);
        v
    };
    write_csv(
        &dir.join("curves_all.csv"),
        &labelled(&CURVE_LONG),
        &all_long,
    )?;
    write_csv(
        &dir.join("curves_all_mean.csv"),
        &labelled(&CURVE_MEAN),
        &all_mean,
    )?;
    Ok(())
}
