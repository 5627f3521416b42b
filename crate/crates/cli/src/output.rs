//! CSV, JSON and SVG emitters.

use std::fmt::Write as _;
use std::io::Write;

use serde::Serialize;

use seqbandit::{ExperimentResult, TaskSequence};

/// Fixed six-significant-digit rendering used in every CSV cell.
pub fn sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    if (-4..6).contains(&exp) {
        format!("{:.*}", (5 - exp) as usize, x)
    } else {
        format!("{x:.5e}")
    }
}

pub const CURVE_HEADER: [&str; 5] = [
    "algorithm",
    "epsilon",
    "realization_or_mean",
    "global_step",
    "cumulative_regret",
];

/// Appends every curve of `result` (one row per recorded step, realizations
/// first, then the mean).
pub fn write_curves<W: Write>(
    out: &mut csv::Writer<W>,
    eps: f64,
    result: &ExperimentResult,
) -> csv::Result<()> {
    let eps = sig6(eps);
    for algo in &result.algorithms {
        let key = algo.algorithm().key();
        let labelled = algo
            .curves
            .iter()
            .enumerate()
            .map(|(r, c)| (r.to_string(), c))
            .chain(std::iter::once(("mean".to_string(), &algo.mean_curve)));
        for (label, curve) in labelled {
            for (step, value) in result.steps.iter().zip(curve) {
                out.write_record([
                    key,
                    eps.as_str(),
                    label.as_str(),
                    step.to_string().as_str(),
                    sig6(*value).as_str(),
                ])?;
            }
        }
    }
    Ok(())
}

/// Means matrix with one row per arm and one column per task.
pub fn write_means<W: Write>(out: &mut csv::Writer<W>, seq: &TaskSequence) -> csv::Result<()> {
    let mut header = vec!["arm".to_string()];
    header.extend((1..=seq.tasks()).map(|j| format!("task_{j}")));
    out.write_record(&header)?;
    for k in 0..seq.arms() {
        let mut row = vec![k.to_string()];
        row.extend(seq.means().iter().map(|m| sig6(m[k])));
        out.write_record(&row)?;
    }
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct AlgorithmSummary {
    pub algorithm: &'static str,
    pub final_mean: f64,
    pub final_std: f64,
    pub finals: Vec<f64>,
    pub bound_mean: Option<f64>,
    pub bounds: Option<Vec<f64>>,
}

#[derive(Debug, Serialize)]
pub struct EpsilonSummary {
    pub epsilon: f64,
    pub total_steps: u64,
    pub algorithms: Vec<AlgorithmSummary>,
}

impl EpsilonSummary {
    pub fn new(eps: f64, result: &ExperimentResult) -> Self {
        Self {
            epsilon: eps,
            total_steps: result.env.total_steps(),
            algorithms: result
                .algorithms
                .iter()
                .map(|a| AlgorithmSummary {
                    algorithm: a.algorithm().key(),
                    final_mean: a.final_mean,
                    final_std: a.final_std,
                    finals: a.finals.clone(),
                    bound_mean: a.bound_mean,
                    bounds: a.bounds.clone(),
                })
                .collect(),
        }
    }
}

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];
const PANEL_W: f64 = 360.0;
const PANEL_H: f64 = 260.0;
const MARGIN: f64 = 50.0;

/// Side-by-side regret panels, one per epsilon, sharing a legend.
pub fn regret_svg(runs: &[(f64, ExperimentResult)]) -> String {
    let width = MARGIN + runs.len() as f64 * (PANEL_W + MARGIN);
    let height = PANEL_H + 2.0 * MARGIN + 20.0;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (i, (eps, result)) in runs.iter().enumerate() {
        let x0 = MARGIN + i as f64 * (PANEL_W + MARGIN);
        let y0 = MARGIN;
        let x_max = *result.steps.last().unwrap_or(&1) as f64;
        let y_max = result
            .algorithms
            .iter()
            .flat_map(|a| a.mean_curve.iter().copied())
            .fold(0.0, f64::max)
            .max(1e-9);
        let _ = writeln!(
            s,
            r#"<rect x="{x0}" y="{y0}" width="{PANEL_W}" height="{PANEL_H}" fill="none" stroke="black"/>"#
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">eps = {}</text>"#,
            x0 + PANEL_W / 2.0,
            y0 - 8.0,
            sig6(*eps)
        );
        let _ = writeln!(
            s,
            r#"<text x="{x0}" y="{}">0</text><text x="{}" y="{}" text-anchor="end">{}</text>"#,
            y0 + PANEL_H + 14.0,
            x0 + PANEL_W,
            y0 + PANEL_H + 14.0,
            x_max
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
            x0 - 4.0,
            y0 + 10.0,
            sig6(y_max)
        );
        for (a, algo) in result.algorithms.iter().enumerate() {
            let points: Vec<String> = result
                .steps
                .iter()
                .zip(&algo.mean_curve)
                .map(|(&t, &v)| {
                    format!(
                        "{:.2},{:.2}",
                        x0 + PANEL_W * t as f64 / x_max,
                        y0 + PANEL_H * (1.0 - v / y_max)
                    )
                })
                .collect();
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="{}" stroke-width="1.5" points="{}"/>"#,
                PALETTE[a % PALETTE.len()],
                points.join(" ")
            );
        }
    }
    if let Some((_, first)) = runs.first() {
        let y = PANEL_H + MARGIN + 36.0;
        for (a, algo) in first.algorithms.iter().enumerate() {
            let x = MARGIN + a as f64 * 110.0;
            let _ = writeln!(
                s,
                r#"<line x1="{x}" y1="{y}" x2="{}" y2="{y}" stroke="{}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
                x + 20.0,
                PALETTE[a % PALETTE.len()],
                x + 24.0,
                y + 4.0,
                algo.algorithm().label()
            );
        }
    }
    s.push_str("</svg>\n");
    s
}
