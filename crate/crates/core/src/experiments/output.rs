use std::fmt::Write as _;
use std::io::{Read, Write};

use crate::error::Result;

use super::ExperimentRecord;

pub const CSV_HEADER: [&str; 10] = [
    "algo",
    "t_minorize",
    "epsilon_target",
    "n_per_sa",
    "total_samples",
    "replication",
    "seed",
    "alpha_hat",
    "error",
    "wall_time_ms",
];

/// 17 significant digits, enough to round-trip any `f64`.
fn real(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_csv<W: Write>(writer: W, records: &[ExperimentRecord]) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(CSV_HEADER)?;
    for r in records {
        out.write_record([
            r.algo.name().to_string(),
            real(r.t_minorize),
            real(r.epsilon_target),
            r.n_per_sa.to_string(),
            r.total_samples.to_string(),
            r.replication.to_string(),
            r.seed.to_string(),
            real(r.alpha_hat),
            real(r.error),
            r.wall_time_ms.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(reader: R) -> Result<Vec<ExperimentRecord>> {
    let mut input = csv::Reader::from_reader(reader);
    let mut records = Vec::new();
    for row in input.deserialize() {
        records.push(row?);
    }
    Ok(records)
}

/// One scatter series in log10 coordinates, with an optional fitted line `(slope, intercept)`.
#[derive(Debug, Clone)]
pub struct PlotSeries {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub fit: Option<(f64, f64)>,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 70.0;
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

fn padded_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    let pad = ((hi - lo) * 0.08).max(0.05);
    (lo - pad, hi + pad)
}

fn tick_step(span: f64) -> f64 {
    if span > 4.0 {
        1.0
    } else if span > 1.5 {
        0.5
    } else {
        0.25
    }
}

/// Log-log scatter plot with regression lines; axis labels show `10^x`.
pub fn svg_plot(title: &str, x_label: &str, y_label: &str, series: &[PlotSeries]) -> String {
    let (x0, x1) = padded_range(series.iter().flat_map(|s| s.points.iter().map(|p| p.0)));
    let (y0, y1) = padded_range(series.iter().flat_map(|s| s.points.iter().map(|p| p.1)));
    let px = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let py = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let (left, right, top, bottom) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
    let _ = writeln!(
        svg,
        r#"<rect x="{left}" y="{top}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        right - left,
        bottom - top
    );

    let step = tick_step(x1 - x0);
    let mut t = (x0 / step).ceil() * step;
    while t <= x1 {
        let x = px(t);
        let _ = writeln!(
            svg,
            r#"<line x1="{x:.1}" y1="{bottom}" x2="{x:.1}" y2="{}" stroke="black"/><text x="{x:.1}" y="{}" text-anchor="middle">1e{t:.2}</text>"#,
            bottom + 5.0,
            bottom + 20.0
        );
        t += step;
    }
    let step = tick_step(y1 - y0);
    let mut t = (y0 / step).ceil() * step;
    while t <= y1 {
        let y = py(t);
        let _ = writeln!(
            svg,
            r#"<line x1="{}" y1="{y:.1}" x2="{left}" y2="{y:.1}" stroke="black"/><text x="{}" y="{:.1}" text-anchor="end">1e{t:.2}</text>"#,
            left - 5.0,
            left - 8.0,
            y + 4.0
        );
        t += step;
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 20.0,
        escape(x_label)
    );
    let _ = writeln!(
        svg,
        r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(y_label)
    );

    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        for &(x, y) in &s.points {
            let _ = writeln!(
                svg,
                r#"<circle cx="{:.1}" cy="{:.1}" r="4" fill="{color}"/>"#,
                px(x),
                py(y)
            );
        }
        let mut legend = escape(&s.label);
        if let Some((slope, intercept)) = s.fit {
            let (a, b) = (x0, x1);
            let _ = writeln!(
                svg,
                r#"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="{color}" stroke-dasharray="6 3"/>"#,
                px(a),
                py(intercept + slope * a),
                px(b),
                py(intercept + slope * b)
            );
            let _ = write!(legend, " (slope {slope:.3})");
        }
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" fill="{color}">{legend}</text>"#,
            left + 10.0,
            top + 18.0 + 16.0 * i as f64
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algorithms::Sizing;

    fn record(error: f64) -> ExperimentRecord {
        ExperimentRecord {
            algo: Sizing::Baseline,
            t_minorize: 10.0,
            epsilon_target: 0.1 + 0.2,
            n_per_sa: 12,
            total_samples: 48,
            replication: 3,
            seed: u64::MAX,
            alpha_hat: 0.5 - error,
            error,
            wall_time_ms: 7,
        }
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let records = vec![record(1.0 / 3.0), record(0.0)];
        let mut buf = Vec::new();
        write_csv(&mut buf, &records).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("algo,t_minorize,epsilon_target,n_per_sa,total_samples"));
        assert!(text.contains("3.0000000000000004e-1"));
        assert_eq!(read_csv(buf.as_slice()).unwrap(), records);
    }

    #[test]
    fn svg_has_points_and_fit() {
        let svg = svg_plot(
            "sweep",
            "total samples",
            "mean error",
            &[PlotSeries {
                label: "ours".into(),
                points: vec![(5.0, -1.0), (6.0, -1.5), (7.0, -2.0)],
                fit: Some((-0.5, 1.5)),
            }],
        );
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<circle").count(), 3);
        assert!(svg.contains("slope -0.500"));
    }
}
