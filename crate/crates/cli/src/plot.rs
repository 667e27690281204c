//! SVG figures from the result CSVs.

use std::collections::BTreeMap;
use std::path::Path;

use plotters::prelude::*;

use crate::output::{read_csv, SnrRow, SymbolRow};
use crate::CliError;

/// BER values of exactly zero cannot sit on a log axis; they are drawn at
/// this floor instead.
const BER_FLOOR: f64 = 1e-6;

struct Curve {
    label: String,
    points: Vec<(f64, f64)>,
}

/// Plots either table, chosen by its header: BER against SNR, or BER against
/// the received symbol index.
pub fn plot_csv(csv_path: &Path, out: &Path) -> Result<(), CliError> {
    let header = csv::Reader::from_path(csv_path)
        .and_then(|mut r| r.headers().cloned())
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(source) => CliError::Io {
                path: csv_path.to_path_buf(),
                source,
            },
            other => CliError::Csv {
                path: csv_path.to_path_buf(),
                message: format!("{other:?}"),
            },
        })?;

    let (curves, x_label) = if header.iter().any(|h| h == "symbol_index") {
        (symbol_curves(read_csv(csv_path)?), "received symbols")
    } else {
        (snr_curves(read_csv(csv_path)?), "SNR (dB)")
    };
    draw(&curves, x_label, out).map_err(|message| CliError::Plot {
        path: out.to_path_buf(),
        message,
    })
}

fn snr_curves(rows: Vec<SnrRow>) -> Vec<Curve> {
    let mut by_scheme: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for r in rows {
        by_scheme
            .entry(r.scheme)
            .or_default()
            .push((r.snr_db, r.ber));
    }
    finish(by_scheme)
}

fn symbol_curves(rows: Vec<SymbolRow>) -> Vec<Curve> {
    let multi_snr = rows.iter().any(|r| r.snr_db != rows[0].snr_db);
    let mut by_scheme: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for r in rows {
        let label = if multi_snr {
            format!("{} @ {} dB", r.scheme, r.snr_db)
        } else {
            r.scheme
        };
        by_scheme
            .entry(label)
            .or_default()
            .push((r.symbol_index as f64, r.ber));
    }
    finish(by_scheme)
}

fn finish(map: BTreeMap<String, Vec<(f64, f64)>>) -> Vec<Curve> {
    map.into_iter()
        .map(|(label, mut points)| {
            points.sort_by(|a, b| a.0.total_cmp(&b.0));
            for p in &mut points {
                p.1 = p.1.max(BER_FLOOR);
            }
            Curve { label, points }
        })
        .collect()
}

fn draw(curves: &[Curve], x_label: &str, out: &Path) -> Result<(), String> {
    let all = curves.iter().flat_map(|c| c.points.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for &(x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    let y0 = 10f64.powf(y0.log10().floor());
    let y1 = 10f64.powf(y1.log10().ceil()).max(y0 * 10.0);

    let root = SVGBackend::new(out, (900, 600)).into_drawing_area();
    root.fill(&WHITE).map_err(|e| e.to_string())?;
    let mut chart = ChartBuilder::on(&root)
        .margin(20)
        .x_label_area_size(40)
        .y_label_area_size(60)
        .build_cartesian_2d(x0..x1, (y0..y1).log_scale())
        .map_err(|e| e.to_string())?;
    chart
        .configure_mesh()
        .x_desc(x_label)
        .y_desc("BER")
        .y_label_formatter(&|v| format!("{v:.0e}"))
        .draw()
        .map_err(|e| e.to_string())?;

    let dense = curves.iter().any(|c| c.points.len() > 50);
    for (i, curve) in curves.iter().enumerate() {
        let color = Palette99::pick(i).to_rgba();
        chart
            .draw_series(LineSeries::new(
                curve.points.iter().copied(),
                color.stroke_width(2),
            ))
            .map_err(|e| e.to_string())?
            .label(curve.label.as_str())
            .legend(move |(x, y)| {
                PathElement::new(vec![(x, y), (x + 20, y)], color.stroke_width(2))
            });
        if !dense {
            chart
                .draw_series(
                    curve
                        .points
                        .iter()
                        .map(|&p| Circle::new(p, 3, color.filled())),
                )
                .map_err(|e| e.to_string())?;
        }
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()
        .map_err(|e| e.to_string())?;
    root.present().map_err(|e| e.to_string())
}
