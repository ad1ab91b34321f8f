//! Standalone SVG figures of predictive bands.
//!
//! Output depends only on the numbers passed in; coordinates are printed with
//! two decimals so identical inputs give identical bytes.

use std::fmt::Write;

use crate::stats::Interval;

const WIDTH: f64 = 760.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

/// One band series; entry `i` of `band` is day `i + 1`.
#[derive(Debug, Clone, Copy)]
pub struct Layer<'a> {
    pub label: &'a str,
    pub band: &'a [Interval],
}

struct Frame {
    horizon: usize,
    y_max: f64,
}

impl Frame {
    fn x(&self, day: f64) -> f64 {
        let span = (self.horizon.max(2) - 1) as f64;
        LEFT + (day - 1.0) / span * (WIDTH - LEFT - RIGHT)
    }

    fn y(&self, value: f64) -> f64 {
        HEIGHT - BOTTOM - value / self.y_max * (HEIGHT - TOP - BOTTOM)
    }
}

/// A step of 1, 2 or 5 times a power of ten giving at most `max_ticks` ticks.
fn nice_step(range: f64, max_ticks: usize) -> f64 {
    let raw = range / max_ticks as f64;
    let magnitude = 10f64.powf(raw.log10().floor());
    [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * magnitude)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * magnitude)
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn header(out: &mut String, title: &str, y_label: &str, frame: &Frame) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        out,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );

    let x0 = LEFT;
    let x1 = WIDTH - RIGHT;
    let y0 = HEIGHT - BOTTOM;
    let _ = writeln!(
        out,
        r#"<path d="M{x0:.2},{TOP:.2} L{x0:.2},{y0:.2} L{x1:.2},{y0:.2}" fill="none" stroke="black"/>"#
    );

    let mut x_ticks = vec![1usize];
    let step = nice_step(frame.horizon as f64, 10).max(1.0) as usize;
    x_ticks.extend((step..frame.horizon).step_by(step));
    if frame.horizon > 1 {
        x_ticks.push(frame.horizon);
    }
    x_ticks.dedup();
    for day in x_ticks {
        let x = frame.x(day as f64);
        let _ = writeln!(
            out,
            r#"<line x1="{x:.2}" y1="{y0:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{day}</text>"#,
            y0 + 5.0,
            y0 + 18.0
        );
    }

    let step = nice_step(frame.y_max, 6);
    let mut value = 0.0;
    while value <= frame.y_max + 1e-9 {
        let y = frame.y(value);
        let _ = writeln!(
            out,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{x0:.2}" y2="{y:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            x0 - 5.0,
            x0 - 8.0,
            y + 4.0,
            format_tick(value)
        );
        value += step;
    }

    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">days since first death</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
        (TOP + y0) / 2.0,
        (TOP + y0) / 2.0,
        escape(y_label)
    );
}

fn format_tick(value: f64) -> String {
    if value.fract().abs() < 1e-9 {
        format!("{}", value.round() as i64)
    } else {
        format!("{value:.2}")
    }
}

fn band_paths(out: &mut String, layer: &Layer, frame: &Frame, colour: &str) {
    if layer.band.is_empty() {
        return;
    }
    let mut polygon = String::new();
    for (i, b) in layer.band.iter().enumerate() {
        let _ = write!(
            polygon,
            "{:.2},{:.2} ",
            frame.x((i + 1) as f64),
            frame.y(b.upper)
        );
    }
    for (i, b) in layer.band.iter().enumerate().rev() {
        let _ = write!(
            polygon,
            "{:.2},{:.2} ",
            frame.x((i + 1) as f64),
            frame.y(b.lower)
        );
    }
    let _ = writeln!(
        out,
        r#"<polygon points="{}" fill="{colour}" fill-opacity="0.25" stroke="none"/>"#,
        polygon.trim_end()
    );
    let mut line = String::new();
    for (i, b) in layer.band.iter().enumerate() {
        let _ = write!(
            line,
            "{:.2},{:.2} ",
            frame.x((i + 1) as f64),
            frame.y(b.mean)
        );
    }
    let _ = writeln!(
        out,
        r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="2"/>"#,
        line.trim_end()
    );
}

fn legend(out: &mut String, labels: &[(&str, &str)]) {
    for (k, (label, colour)) in labels.iter().enumerate() {
        let y = TOP + 10.0 + 18.0 * k as f64;
        let x = WIDTH - RIGHT - 150.0;
        let _ = writeln!(
            out,
            r#"<rect x="{x:.2}" y="{:.2}" width="14" height="10" fill="{colour}"/><text x="{:.2}" y="{y:.2}">{}</text>"#,
            y - 9.0,
            x + 20.0,
            escape(label)
        );
    }
}

fn y_max<'a>(bands: impl Iterator<Item = &'a Interval>, observed: &[(i64, f64)]) -> f64 {
    let top = bands
        .map(|b| b.upper.max(b.mean))
        .chain(observed.iter().map(|o| o.1))
        .fold(0.0, f64::max);
    if top > 0.0 {
        1.05 * top
    } else {
        1.0
    }
}

/// Band polygon (2.5%-97.5%), mean line and observed points. Observed days
/// outside `1..=horizon` are not drawn.
pub fn band_svg(title: &str, y_label: &str, band: &[Interval], observed: &[(i64, f64)]) -> String {
    let horizon = band.len();
    let visible: Vec<(i64, f64)> = observed
        .iter()
        .copied()
        .filter(|&(d, _)| d >= 1 && d as usize <= horizon)
        .collect();
    let frame = Frame {
        horizon,
        y_max: y_max(band.iter(), &visible),
    };
    let mut out = String::new();
    header(&mut out, title, y_label, &frame);
    band_paths(&mut out, &Layer { label: "", band }, &frame, PALETTE[0]);
    for (day, value) in &visible {
        let _ = writeln!(
            out,
            r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="black"/>"#,
            frame.x(*day as f64),
            frame.y(*value)
        );
    }
    legend(
        &mut out,
        &[("95% predictive band", PALETTE[0]), ("observed", "black")],
    );
    out.push_str("</svg>\n");
    out
}

/// Several bands over one axis, e.g. one per sensitivity scenario.
pub fn overlay_svg(title: &str, y_label: &str, layers: &[Layer]) -> String {
    let horizon = layers.iter().map(|l| l.band.len()).max().unwrap_or(0);
    let frame = Frame {
        horizon,
        y_max: y_max(layers.iter().flat_map(|l| l.band.iter()), &[]),
    };
    let mut out = String::new();
    header(&mut out, title, y_label, &frame);
    let mut labels = Vec::new();
    for (k, layer) in layers.iter().enumerate() {
        let colour = PALETTE[k % PALETTE.len()];
        band_paths(&mut out, layer, &frame, colour);
        labels.push((layer.label, colour));
    }
    legend(&mut out, &labels);
    out.push_str("</svg>\n");
    out
}
