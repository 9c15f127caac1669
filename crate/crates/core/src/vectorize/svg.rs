use std::fmt::Write as _;
use std::path::Path;

use super::{BandCurves, VectorizeError};
use crate::image_io::SCALE;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 64.0;
const MARGIN_RIGHT: f64 = 160.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 56.0;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
        .replace('\'', "&apos;")
}

/// Rounds `max` up to a 1-2-5 step multiple and returns `(top, step)`.
fn nice_axis(max: f64) -> (f64, f64) {
    if max <= 0.0 {
        return (1.0, 0.2);
    }
    let raw = max / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .into_iter()
        .map(|m| m * mag)
        .find(|&s| s >= raw)
        .unwrap_or(10.0 * mag);
    ((max / step).ceil() * step, step)
}

/// Renders median curves with translucent bands, one color per class.
/// The x axis is in unscaled `[0, 255]` color units.
pub fn render_betti_svg(curves: &BandCurves) -> Result<String, VectorizeError> {
    if curves.classes.is_empty() || curves.thresholds.is_empty() {
        return Err(VectorizeError::NoSamples);
    }
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let y_max = curves
        .classes
        .iter()
        .flat_map(|c| c.upper.iter().chain(&c.median))
        .copied()
        .fold(0.0, f64::max);
    let (y_top, y_step) = nice_axis(y_max);
    let x = |t: u16| MARGIN_LEFT + (t as f64 / SCALE as f64) / 255.0 * plot_w;
    let y = |v: f64| MARGIN_TOP + plot_h - v / y_top * plot_h;

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8" standalone="no"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let title = format!(
        "Betti-{} ({}) median and {:.0}% band",
        curves.dim,
        curves.channel,
        curves.band * 100.0
    );
    let _ = writeln!(s, "<title>{}</title>", escape(&title));
    let _ = writeln!(
        s,
        r##"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>"##
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        escape(&title)
    );

    // Axes and ticks.
    let (x0, y0) = (MARGIN_LEFT, MARGIN_TOP + plot_h);
    let _ = writeln!(s, r#"<g class="axes" stroke="black" stroke-width="1">"#);
    let _ = writeln!(s, r#"<line x1="{x0}" y1="{y0}" x2="{}" y2="{y0}"/>"#, x0 + plot_w);
    let _ = writeln!(s, r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{MARGIN_TOP}"/>"#);
    for tick in (0..=255).step_by(51) {
        let tx = x0 + tick as f64 / 255.0 * plot_w;
        let _ = writeln!(s, r#"<line x1="{tx:.2}" y1="{y0}" x2="{tx:.2}" y2="{}"/>"#, y0 + 5.0);
    }
    let n_ticks = (y_top / y_step).round() as usize;
    for i in 0..=n_ticks {
        let ty = y(i as f64 * y_step);
        let _ = writeln!(s, r#"<line x1="{}" y1="{ty:.2}" x2="{x0}" y2="{ty:.2}"/>"#, x0 - 5.0);
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, r#"<g class="tick-labels">"#);
    for tick in (0..=255).step_by(51) {
        let tx = x0 + tick as f64 / 255.0 * plot_w;
        let _ = writeln!(
            s,
            r#"<text x="{tx:.2}" y="{}" text-anchor="middle">{tick}</text>"#,
            y0 + 18.0
        );
    }
    for i in 0..=n_ticks {
        let v = i as f64 * y_step;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#,
            x0 - 8.0,
            y(v) + 4.0,
            v
        );
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">threshold t (color value)</text>"#,
        x0 + plot_w / 2.0,
        HEIGHT - 14.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">β{}(t)</text>"#,
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0,
        curves.dim
    );

    for (i, class) in curves.classes.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut band = String::new();
        for (k, &t) in curves.thresholds.iter().enumerate() {
            let _ = write!(band, "{:.2},{:.2} ", x(t), y(class.upper[k]));
        }
        for (k, &t) in curves.thresholds.iter().enumerate().rev() {
            let _ = write!(band, "{:.2},{:.2} ", x(t), y(class.lower[k]));
        }
        let mut line = String::new();
        for (k, &t) in curves.thresholds.iter().enumerate() {
            let _ = write!(line, "{:.2},{:.2} ", x(t), y(class.median[k]));
        }
        let _ = writeln!(s, r#"<g class="class" data-label="{}">"#, escape(&class.label));
        let _ = writeln!(
            s,
            r#"<polygon points="{}" fill="{color}" fill-opacity="0.25" stroke="none"/>"#,
            band.trim_end()
        );
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            line.trim_end()
        );
        let _ = writeln!(s, "</g>");
    }

    let lx = WIDTH - MARGIN_RIGHT + 16.0;
    let _ = writeln!(s, r#"<g class="legend">"#);
    for (i, class) in curves.classes.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let ly = MARGIN_TOP + 8.0 + i as f64 * 20.0;
        let _ = writeln!(
            s,
            r#"<g class="legend-entry"><rect x="{lx}" y="{ly}" width="14" height="10" fill="{color}"/><text x="{}" y="{}">{} (n={})</text></g>"#,
            lx + 20.0,
            ly + 9.0,
            escape(&class.label),
            class.samples
        );
    }
    let _ = writeln!(s, "</g>");
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn emit_betti_svg(curves: &BandCurves, path: impl AsRef<Path>) -> Result<(), VectorizeError> {
    let svg = render_betti_svg(curves)?;
    let path = path.as_ref();
    std::fs::write(path, svg).map_err(|source| VectorizeError::Io {
        path: path.display().to_string(),
        source,
    })
}
