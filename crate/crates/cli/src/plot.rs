//! Log-log error plot as a standalone SVG 1.1 document.

use std::fmt::Write;

use svie_core::{ErrorTable, RateEstimate, SchemeTag};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 80.0;
const MARGIN_RIGHT: f64 = 30.0;
const MARGIN_TOP: f64 = 50.0;
const MARGIN_BOTTOM: f64 = 70.0;
const COLORS: [&str; 3] = ["#1f77b4", "#d62728", "#2ca02c"];

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn px(&self, lx: f64) -> f64 {
        MARGIN_LEFT + (lx - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
    }

    fn py(&self, ly: f64) -> f64 {
        HEIGHT - MARGIN_BOTTOM - (ly - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
    }
}

fn log_points(table: &ErrorTable) -> Vec<(f64, f64)> {
    table
        .rows
        .iter()
        .filter(|r| r.l2_error > 0.0 && r.l2_error.is_finite())
        .map(|r| (r.h.log2(), r.l2_error.log2()))
        .collect()
}

/// One polyline per scheme in `series`, plus the fitted line `fit` of the first.
pub fn render_svg(series: &[(SchemeTag, ErrorTable)], fit: &RateEstimate) -> String {
    let points: Vec<Vec<(f64, f64)>> = series.iter().map(|(_, t)| log_points(t)).collect();
    let all = points.iter().flatten();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for &(x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    for x in [x0, x1] {
        let y = fit.intercept + fit.slope * x;
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !(x0 < x1) {
        x0 -= 1.0;
        x1 += 1.0;
    }
    if !(y0 < y1) {
        y0 -= 1.0;
        y1 += 1.0;
    }
    let frame = Frame {
        x: (x0.floor() - 0.25, x1.ceil() + 0.25),
        y: (y0.floor() - 0.25, y1.ceil() + 0.25),
    };

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);

    let (left, right) = (MARGIN_LEFT, WIDTH - MARGIN_RIGHT);
    let (top, bottom) = (MARGIN_TOP, HEIGHT - MARGIN_BOTTOM);
    let _ = writeln!(
        svg,
        r#"<path d="M{left} {top} L{left} {bottom} L{right} {bottom}" fill="none" stroke="black"/>"#
    );
    for k in (frame.x.0.ceil() as i64)..=(frame.x.1.floor() as i64) {
        let px = frame.px(k as f64);
        let _ = writeln!(
            svg,
            r#"<line x1="{px:.2}" y1="{bottom}" x2="{px:.2}" y2="{:.2}" stroke="black"/><text x="{px:.2}" y="{:.2}" text-anchor="middle">{k}</text>"#,
            bottom + 5.0,
            bottom + 20.0
        );
    }
    for k in (frame.y.0.ceil() as i64)..=(frame.y.1.floor() as i64) {
        let py = frame.py(k as f64);
        let _ = writeln!(
            svg,
            r#"<line x1="{:.2}" y1="{py:.2}" x2="{left}" y2="{py:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{k}</text>"#,
            left - 5.0,
            left - 8.0,
            py + 4.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">log₂(h)</text>"#,
        (left + right) / 2.0,
        HEIGHT - 25.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="20" y="{:.2}" text-anchor="middle" transform="rotate(-90 20 {:.2})">log₂(error)</text>"#,
        (top + bottom) / 2.0,
        (top + bottom) / 2.0
    );

    for (i, ((scheme, _), pts)) in series.iter().zip(&points).enumerate() {
        let color = COLORS[i % COLORS.len()];
        let coords: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", frame.px(x), frame.py(y))).collect();
        let _ = writeln!(
            svg,
            r#"<polyline class="data" data-scheme="{}" points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            scheme.cli_name(),
            coords.join(" ")
        );
        for &(x, y) in pts {
            let _ = writeln!(
                svg,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
                frame.px(x),
                frame.py(y)
            );
        }
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" fill="{color}">{}</text>"#,
            left + 10.0,
            top + 16.0 * (i as f64 + 1.0),
            scheme
        );
    }

    let fit_at = |x: f64| frame.py(fit.intercept + fit.slope * x);
    let _ = writeln!(
        svg,
        r#"<polyline class="fit" points="{:.2},{:.2} {:.2},{:.2}" fill="none" stroke="gray" stroke-dasharray="6 4"/>"#,
        frame.px(x0),
        fit_at(x0),
        frame.px(x1),
        fit_at(x1)
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="30" text-anchor="middle">empirical slope {:.3} / theoretical min{{1−2β,1−α}} = {:.3}</text>"#,
        WIDTH / 2.0,
        fit.slope,
        fit.theoretical
    );
    svg.push_str("</svg>\n");
    svg
}
