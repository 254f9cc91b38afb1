//! Bar plots of a reconstructed table: one bar per joint action.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::artifacts::{write_csv, ArchivedQHat};
use crate::error::{Error, Result};
use crate::games::{enumerate_joint_actions, true_q_table, GameSpec, JointType, QTable};

#[derive(Clone, Debug, PartialEq)]
pub struct BarRow {
    pub action_index: usize,
    /// Local actions joined by `-`, e.g. `0-1-1-0-0-1`.
    pub action: String,
    pub q: f64,
    pub q_hat: f64,
}

pub const BARPLOT_CSV_HEADER: [&str; 5] = ["action_index", "action", "q", "q_hat", "joint_type"];

/// Rows in joint-action enumeration order for one joint type.
pub fn barplot_rows(
    spec: &GameSpec,
    truth: &QTable,
    q_hat: &QTable,
    type_index: usize,
) -> Vec<BarRow> {
    enumerate_joint_actions(spec)
        .into_iter()
        .enumerate()
        .map(|(i, a)| BarRow {
            action_index: i,
            action: a
                .0
                .iter()
                .map(|d| d.to_string())
                .collect::<Vec<_>>()
                .join("-"),
            q: truth.get(type_index, i),
            q_hat: q_hat.get(type_index, i),
        })
        .collect()
}

/// Blue (low) to red (high).
fn bar_color(t: f64) -> String {
    let t = if t.is_finite() {
        t.clamp(0.0, 1.0)
    } else {
        0.5
    };
    let lerp = |a: f64, b: f64| (a + (b - a) * t).round() as u8;
    format!(
        "#{:02x}{:02x}{:02x}",
        lerp(49.0, 215.0),
        lerp(104.0, 48.0),
        lerp(189.0, 39.0)
    )
}

/// SVG with Q-hat bars colored by value and the true values as black ticks.
pub fn render_barplot_svg(title: &str, rows: &[BarRow]) -> String {
    let (margin_l, margin_r, margin_t, margin_b) = (60.0, 20.0, 40.0, 40.0);
    let bar_w = if rows.len() > 200 { 2.0 } else { 10.0 };
    let plot_w = (rows.len() as f64 * bar_w).max(200.0);
    let plot_h = 300.0;
    let width = margin_l + plot_w + margin_r;
    let height = margin_t + plot_h + margin_b;

    let finite = rows
        .iter()
        .flat_map(|r| [r.q, r.q_hat])
        .filter(|v| v.is_finite());
    let (mut lo, mut hi) = finite.fold((0.0f64, 0.0f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if hi - lo < 1e-9 {
        hi = lo + 1.0;
    }
    let pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
    let y = |v: f64| margin_t + plot_h * (hi - v) / (hi - lo);
    let zero = y(0.0);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="24" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
        width / 2.0,
        escape(title)
    );
    for k in 0..=4 {
        let v = lo + (hi - lo) * k as f64 / 4.0;
        let yy = y(v);
        let _ = writeln!(
            svg,
            r##"<line x1="{margin_l}" y1="{yy:.2}" x2="{:.2}" y2="{yy:.2}" stroke="#dddddd"/><text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="10" text-anchor="end">{v:.2}</text>"##,
            margin_l + plot_w,
            margin_l - 4.0,
            yy + 3.0
        );
    }
    let span = hi - lo;
    for (i, r) in rows.iter().enumerate() {
        let x = margin_l + i as f64 * bar_w;
        let v = if r.q_hat.is_finite() { r.q_hat } else { 0.0 };
        let top = y(v).min(zero);
        let h = (y(v) - zero).abs();
        let _ = writeln!(
            svg,
            r#"<rect x="{x:.2}" y="{top:.2}" width="{:.2}" height="{h:.2}" fill="{}"><title>{} q={} q_hat={}</title></rect>"#,
            bar_w * 0.9,
            bar_color((v - lo) / span),
            r.action,
            r.q,
            r.q_hat
        );
        let ty = y(r.q);
        let _ = writeln!(
            svg,
            r#"<line x1="{x:.2}" y1="{ty:.2}" x2="{:.2}" y2="{ty:.2}" stroke="black" stroke-width="1"/>"#,
            x + bar_w * 0.9
        );
    }
    let _ = writeln!(
        svg,
        r#"<line x1="{margin_l}" y1="{zero:.2}" x2="{:.2}" y2="{zero:.2}" stroke="black"/>"#,
        margin_l + plot_w
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="middle">joint action (enumeration order)</text>"#,
        margin_l + plot_w / 2.0,
        height - 12.0
    );
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Writes `barplot.csv`/`barplot.svg` into `run_dir`; games with joint types
/// get one `barplot_<type>.{csv,svg}` pair per requested type instead.
pub fn emit_barplot(
    run_dir: &Path,
    archived: &ArchivedQHat,
    types: &[String],
) -> Result<Vec<PathBuf>> {
    let spec = &archived.spec;
    let truth = true_q_table(spec);
    let q_hat = &archived.reconstructed.table;
    if !truth.same_shape(q_hat) {
        return Err(Error::Artifact {
            path: run_dir.display().to_string(),
            reason: "reconstructed table does not match the game".into(),
        });
    }
    fs::create_dir_all(run_dir).map_err(|e| Error::io(run_dir, e))?;
    let selected: Vec<(usize, Option<String>)> = if spec.bayesian() {
        types
            .iter()
            .map(|t| {
                let jt = JointType::parse(t)?;
                if jt.0.len() != spec.type_len() {
                    return Err(Error::InvalidInput(format!(
                        "joint type {t} does not have {} houses",
                        spec.type_len()
                    )));
                }
                Ok((jt.index(), Some(jt.to_string())))
            })
            .collect::<Result<_>>()?
    } else {
        vec![(0, None)]
    };
    let mut written = Vec::new();
    for (type_index, label) in selected {
        let rows = barplot_rows(spec, &truth, q_hat, type_index);
        let stem = match &label {
            Some(l) => format!("barplot_{l}"),
            None => "barplot".to_string(),
        };
        let csv_rows: Vec<Vec<String>> = rows
            .iter()
            .map(|r| {
                vec![
                    r.action_index.to_string(),
                    r.action.clone(),
                    (r.q + 0.0).to_string(),
                    (r.q_hat + 0.0).to_string(),
                    label.clone().unwrap_or_default(),
                ]
            })
            .collect();
        let csv_path = run_dir.join(format!("{stem}.csv"));
        write_csv(&csv_path, &BARPLOT_CSV_HEADER, &csv_rows)?;
        let title = format!(
            "{} {} seed {}{}",
            spec.game_id,
            archived.method,
            archived.seed,
            label
                .as_deref()
                .map(|l| format!(" type {l}"))
                .unwrap_or_default()
        );
        let svg_path = run_dir.join(format!("{stem}.svg"));
        fs::write(&svg_path, render_barplot_svg(&title, &rows))
            .map_err(|e| Error::io(&svg_path, e))?;
        written.push(csv_path);
        written.push(svg_path);
    }
    Ok(written)
}
