//! Minimal deterministic SVG line plots.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::io::{self, Table};
use crate::CliError;

const W: f64 = 640.0;
const H: f64 = 400.0;
const MARGIN: f64 = 60.0;

fn bounds(v: &[f64]) -> (f64, f64) {
    let finite = v.iter().cloned().filter(|x| x.is_finite());
    let lo = finite.clone().fold(f64::INFINITY, f64::min);
    let hi = finite.fold(f64::NEG_INFINITY, f64::max);
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-300 + 1e-12 * lo.abs() {
        let pad = if lo == 0.0 { 1.0 } else { 0.5 * lo.abs() };
        return (lo - pad, hi + pad);
    }
    (lo, hi)
}

/// One polyline of `ys` against `xs`, with axis labels and min/max tick values.
pub fn line_svg(xs: &[f64], ys: &[f64], x_label: &str, y_label: &str, equal_aspect: bool) -> String {
    let (mut x0, mut x1) = bounds(xs);
    let (mut y0, mut y1) = bounds(ys);
    if equal_aspect {
        let span = (x1 - x0).max(y1 - y0);
        let (cx, cy) = (0.5 * (x0 + x1), 0.5 * (y0 + y1));
        x0 = cx - 0.5 * span;
        x1 = cx + 0.5 * span;
        y0 = cy - 0.5 * span;
        y1 = cy + 0.5 * span;
    }
    let (pw, ph) = if equal_aspect {
        (H - 2.0 * MARGIN, H - 2.0 * MARGIN)
    } else {
        (W - 2.0 * MARGIN, H - 2.0 * MARGIN)
    };
    let px = |x: f64| MARGIN + (x - x0) / (x1 - x0) * pw;
    let py = |y: f64| MARGIN + ph - (y - y0) / (y1 - y0) * ph;
    let mut s = String::new();
    let width = if equal_aspect { H } else { W };
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{H}" viewBox="0 0 {width} {H}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    let pts: Vec<String> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| x.is_finite() && y.is_finite())
        .map(|(x, y)| format!("{:.3},{:.3}", px(*x), py(*y)))
        .collect();
    let _ = writeln!(
        s,
        r#"<polyline fill="none" stroke="steelblue" stroke-width="1.5" points="{}"/>"#,
        pts.join(" ")
    );
    let fmt = |v: f64| format!("{v:.4e}");
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">{x_label}</text>"#,
        MARGIN + pw / 2.0,
        H - 15.0
    );
    let _ = writeln!(
        s,
        r#"<text x="15" y="{}" font-size="12" transform="rotate(-90 15 {})" text-anchor="middle">{y_label}</text>"#,
        MARGIN + ph / 2.0,
        MARGIN + ph / 2.0
    );
    for (x, anchor) in [(x0, "start"), (x1, "end")] {
        let _ = writeln!(
            s,
            r#"<text x="{:.3}" y="{}" font-size="10" text-anchor="{anchor}">{}</text>"#,
            px(x),
            MARGIN + ph + 14.0,
            fmt(x)
        );
    }
    for y in [y0, y1] {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.3}" font-size="10" text-anchor="end">{}</text>"#,
            MARGIN - 4.0,
            py(y) + 4.0,
            fmt(y)
        );
    }
    s.push_str("</svg>\n");
    s
}

const TIMESERIES_PLOTS: [&str; 5] = ["E", "a", "b", "rho", "alpha"];

/// Writes SVG files next to `csv` (or under NECKFLOW_OUT / `out`) and returns their paths.
/// Time series give one plot per quantity against time; curve files give the
/// coordinate-plane projections of the curve.
pub fn cmd_plot(csv: &Path, out: Option<&Path>) -> Result<Vec<PathBuf>, CliError> {
    let table: Table = io::read_table(csv)?;
    let default_dir = csv.parent().map(Path::to_path_buf).unwrap_or_default();
    let dir = match (out, std::env::var_os("NECKFLOW_OUT")) {
        (Some(o), _) => crate::config::resolve_output(o),
        (None, Some(_)) => crate::config::resolve_output(Path::new("plots")),
        (None, None) => default_dir,
    };
    io::ensure_dir(&dir)?;
    let stem = csv.file_stem().and_then(|s| s.to_str()).unwrap_or("plot");
    let mut written = Vec::new();
    let mut emit = |name: String, svg: String| -> Result<(), CliError> {
        let path = dir.join(name);
        std::fs::write(&path, svg).map_err(|e| io::io_err(&path, e))?;
        written.push(path);
        Ok(())
    };
    if let Some(time) = table.column("time") {
        let missing: Vec<&str> = TIMESERIES_PLOTS
            .iter()
            .copied()
            .filter(|c| table.column(c).is_none())
            .collect();
        if !missing.is_empty() {
            return Err(CliError::Schema(format!(
                "{}: missing columns {missing:?}",
                csv.display()
            )));
        }
        for c in TIMESERIES_PLOTS {
            let ys = table.column(c).unwrap_or_default();
            emit(format!("{stem}_{c}.svg"), line_svg(&time, &ys, "time", c, false))?;
        }
    } else if table.headers.first().map(String::as_str) == Some("s") && table.headers.len() >= 3 {
        let dim = table.headers.len() - 1;
        for i in 1..=dim {
            for j in i + 1..=dim {
                let xs = table.column(&format!("y{i}"));
                let ys = table.column(&format!("y{j}"));
                match (xs, ys) {
                    (Some(xs), Some(ys)) => emit(
                        format!("{stem}_y{i}_y{j}.svg"),
                        line_svg(&xs, &ys, &format!("y{i}"), &format!("y{j}"), true),
                    )?,
                    _ => {
                        return Err(CliError::Schema(format!(
                            "{}: curve columns must be y1..y{dim}",
                            csv.display()
                        )))
                    }
                }
            }
        }
    } else {
        return Err(CliError::Schema(format!(
            "{}: expected a time series (time, E, a, b, rho, alpha, ...) or a curve (s, y1, ...)",
            csv.display()
        )));
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_series_is_a_horizontal_line() {
        let svg = line_svg(&[0.0, 1.0, 2.0], &[0.0, 0.0, 0.0], "time", "E", false);
        let pts = svg.split("points=\"").nth(1).unwrap().split('"').next().unwrap();
        let ys: Vec<&str> = pts.split(' ').map(|p| p.split(',').nth(1).unwrap()).collect();
        assert!(ys.iter().all(|y| *y == ys[0]));
    }

    #[test]
    fn curve_files_give_plane_projections() {
        let dir = tempfile::tempdir().unwrap();
        let csv = dir.path().join("curve.csv");
        let mut text = String::from("s,y1,y2,y3\n");
        for k in 0..16 {
            let t = k as f64 * std::f64::consts::PI / 8.0;
            text.push_str(&format!("{t},{},{},0\n", t.cos(), t.sin()));
        }
        std::fs::write(&csv, text).unwrap();
        let out = cmd_plot(&csv, Some(dir.path())).unwrap();
        assert_eq!(out.len(), 3);
        assert!(out[0].ends_with("curve_y1_y2.svg"));
    }

    #[test]
    fn unknown_schema_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let csv = dir.path().join("x.csv");
        std::fs::write(&csv, "foo,bar\n1,2\n").unwrap();
        assert!(matches!(cmd_plot(&csv, None), Err(CliError::Schema(_))));
    }
}
