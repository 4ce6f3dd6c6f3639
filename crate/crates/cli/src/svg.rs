//! Hand-written SVG charts. Coordinates are printed with two decimals and
//! every element is emitted in input order, so equal inputs give equal bytes.

use crate::time::{day_label, format_time};
use crashnet_core::format::sig;
use crashnet_core::EventMarker;
use std::fmt::Write;

const WIDTH: f64 = 960.0;
const HEIGHT: f64 = 520.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 30.0;
const TOP: f64 = 50.0;
const BOTTOM: f64 = 60.0;

pub const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];
pub const MUTED: &str = "#b0b0b0";
const SELL: &str = "#c0392b";
const BUY: &str = "#27ae60";

fn num(x: f64) -> String {
    let s = format!("{x:.2}");
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

pub struct Svg {
    width: f64,
    height: f64,
    body: String,
}

impl Svg {
    pub fn new(width: f64, height: f64) -> Self {
        Self { width, height, body: String::new() }
    }

    pub fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, style: &str) {
        let _ = writeln!(
            self.body,
            r#"<line x1="{}" y1="{}" x2="{}" y2="{}" {style}/>"#,
            num(x1),
            num(y1),
            num(x2),
            num(y2)
        );
    }

    fn points(pts: &[(f64, f64)]) -> String {
        pts.iter().map(|(x, y)| format!("{},{}", num(*x), num(*y))).collect::<Vec<_>>().join(" ")
    }

    pub fn polyline(&mut self, pts: &[(f64, f64)], style: &str) {
        if pts.len() >= 2 {
            let _ = writeln!(self.body, r#"<polyline points="{}" fill="none" {style}/>"#, Self::points(pts));
        }
    }

    pub fn polygon(&mut self, pts: &[(f64, f64)], style: &str) {
        if pts.len() >= 3 {
            let _ = writeln!(self.body, r#"<polygon points="{}" {style}/>"#, Self::points(pts));
        }
    }

    pub fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, style: &str) {
        let _ = writeln!(self.body, r#"<rect x="{}" y="{}" width="{}" height="{}" {style}/>"#, num(x), num(y), num(w), num(h));
    }

    pub fn circle(&mut self, cx: f64, cy: f64, r: f64, style: &str) {
        let _ = writeln!(self.body, r#"<circle cx="{}" cy="{}" r="{}" {style}/>"#, num(cx), num(cy), num(r));
    }

    pub fn text(&mut self, x: f64, y: f64, s: &str, style: &str) {
        let _ = writeln!(self.body, r#"<text x="{}" y="{}" {style}>{}</text>"#, num(x), num(y), escape(s));
    }

    pub fn finish(self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\" font-family=\"sans-serif\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{}</svg>\n",
            self.body,
            w = num(self.width),
            h = num(self.height)
        )
    }
}

#[derive(Debug, Clone, Copy)]
struct Scale {
    d0: f64,
    d1: f64,
    r0: f64,
    r1: f64,
    log: bool,
}

impl Scale {
    fn new(d0: f64, d1: f64, r0: f64, r1: f64, log: bool) -> Self {
        let (d0, d1) = if log { (d0.log10(), d1.log10()) } else { (d0, d1) };
        let (d0, d1) = if d1 > d0 { (d0, d1) } else { (d0 - 0.5, d0 + 0.5) };
        Self { d0, d1, r0, r1, log }
    }

    fn map(&self, v: f64) -> f64 {
        let v = if self.log { v.log10() } else { v };
        self.r0 + (v - self.d0) / (self.d1 - self.d0) * (self.r1 - self.r0)
    }
}

fn extent(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    values.filter(|v| v.is_finite()).fold(None, |acc, v| match acc {
        None => Some((v, v)),
        Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
    })
}

/// Round-number ticks covering `[lo, hi]`.
fn nice_ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    if hi <= lo {
        return vec![lo];
    }
    let raw = (hi - lo) / target.max(1) as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn log_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let (a, b) = (lo.log10().floor() as i32, hi.log10().ceil() as i32);
    (a..=b).map(|e| 10f64.powi(e)).filter(|v| *v >= lo * 0.999 && *v <= hi * 1.001).collect()
}

/// Midnight ticks, thinned to at most about ten labels.
fn time_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let day = 86_400.0;
    let days = ((hi - lo) / day).ceil().max(1.0);
    let every = (days / 10.0).ceil().max(1.0) * day;
    let mut t = (lo / day).ceil() * day;
    let mut out = Vec::new();
    while t <= hi {
        out.push(t);
        t += every;
    }
    out
}

struct Frame {
    x: Scale,
    y: Scale,
}

fn plot_area() -> (f64, f64, f64, f64) {
    (LEFT, TOP, WIDTH - RIGHT, HEIGHT - BOTTOM)
}

enum XAxis {
    Time,
    Numeric,
}

#[allow(clippy::too_many_arguments)]
fn draw_frame(svg: &mut Svg, f: &Frame, title: &str, x_axis: XAxis, x_label: &str, y_label: &str, xr: (f64, f64), yr: (f64, f64)) {
    let (l, t, r, b) = plot_area();
    svg.text(WIDTH / 2.0, 28.0, title, r#"font-size="16" text-anchor="middle""#);
    let yt = if f.y.log { log_ticks(yr.0, yr.1) } else { nice_ticks(yr.0, yr.1, 6) };
    for v in yt {
        let y = f.y.map(v);
        svg.line(l, y, r, y, r##"stroke="#e5e5e5""##);
        svg.text(l - 6.0, y + 4.0, &sig(v, 4), r#"font-size="11" text-anchor="end""#);
    }
    let xt = match x_axis {
        XAxis::Time => time_ticks(xr.0, xr.1),
        XAxis::Numeric => nice_ticks(xr.0, xr.1, 8),
    };
    for v in xt {
        let x = f.x.map(v);
        svg.line(x, b, x, b + 5.0, r##"stroke="#333""##);
        let label = match x_axis {
            XAxis::Time => day_label(v as i64),
            XAxis::Numeric => sig(v, 4),
        };
        svg.text(x, b + 18.0, &label, r#"font-size="11" text-anchor="middle""#);
    }
    svg.rect(l, t, r - l, b - t, r##"fill="none" stroke="#333""##);
    if !x_label.is_empty() {
        svg.text((l + r) / 2.0, HEIGHT - 14.0, x_label, r#"font-size="12" text-anchor="middle""#);
    }
    if !y_label.is_empty() {
        let _ = writeln!(
            svg.body,
            r#"<text x="18" y="{}" font-size="12" text-anchor="middle" transform="rotate(-90 18 {})">{}</text>"#,
            num((t + b) / 2.0),
            num((t + b) / 2.0),
            escape(y_label)
        );
    }
}

fn draw_markers(svg: &mut Svg, f: &Frame, markers: &[EventMarker], xr: (f64, f64)) {
    let (_, t, _, b) = plot_area();
    for m in markers {
        let v = m.ts as f64;
        if v < xr.0 || v > xr.1 {
            continue;
        }
        let x = f.x.map(v);
        svg.line(x, t, x, b, r##"stroke="#555" stroke-width="1" stroke-dasharray="2,3""##);
        svg.text(x + 3.0, t + 12.0, &format!("({})", m.label), r##"font-size="11" fill="#555""##);
    }
}

fn draw_legend(svg: &mut Svg, entries: &[(&str, &str)]) {
    let (l, t, _, _) = plot_area();
    if entries.is_empty() {
        return;
    }
    let widest = entries.iter().map(|(n, _)| n.chars().count()).max().unwrap_or(0) as f64;
    svg.rect(l + 4.0, t + 2.0, 40.0 + 6.5 * widest, 6.0 + 16.0 * entries.len() as f64, r#"fill="white" fill-opacity="0.85" stroke="none""#);
    for (k, (name, color)) in entries.iter().enumerate() {
        let y = t + 14.0 + 16.0 * k as f64;
        svg.line(l + 10.0, y - 4.0, l + 30.0, y - 4.0, &format!(r#"stroke="{color}" stroke-width="2""#));
        svg.text(l + 36.0, y, name, r#"font-size="11""#);
    }
}

#[derive(Debug, Clone)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    pub color: &'static str,
    pub width: f64,
    pub dashed: bool,
    pub legend: bool,
}

impl Series {
    pub fn new(name: impl Into<String>, points: Vec<(f64, f64)>, color: &'static str) -> Self {
        Self { name: name.into(), points, color, width: 1.5, dashed: false, legend: true }
    }
}

/// Filled area between two curves sharing x positions.
#[derive(Debug, Clone)]
pub struct Band {
    pub lower: Vec<(f64, f64)>,
    pub upper: Vec<(f64, f64)>,
    pub color: &'static str,
    pub opacity: f64,
}

#[derive(Debug, Clone, Default)]
pub struct TimeChart {
    pub title: String,
    pub y_label: String,
    pub log_y: bool,
    pub series: Vec<Series>,
    pub bands: Vec<Band>,
    pub markers: Vec<EventMarker>,
}

fn usable(v: f64, log: bool) -> bool {
    v.is_finite() && (!log || v > 0.0)
}

/// Lines over epoch-second x values, with dotted event markers.
pub fn time_chart(c: &TimeChart) -> String {
    let mut svg = Svg::new(WIDTH, HEIGHT);
    let all = || {
        c.series
            .iter()
            .flat_map(|s| s.points.iter())
            .chain(c.bands.iter().flat_map(|b| b.lower.iter().chain(b.upper.iter())))
    };
    let xr = extent(all().map(|p| p.0)).unwrap_or((0.0, 1.0));
    let yr = extent(all().map(|p| p.1).filter(|v| usable(*v, c.log_y))).unwrap_or((1.0, 10.0));
    let yr = if c.log_y {
        yr
    } else {
        let pad = ((yr.1 - yr.0) * 0.05).max(1e-12);
        (yr.0 - pad, yr.1 + pad)
    };
    let (l, t, r, b) = plot_area();
    let f = Frame { x: Scale::new(xr.0, xr.1, l, r, false), y: Scale::new(yr.0, yr.1, b, t, c.log_y) };
    draw_frame(&mut svg, &f, &c.title, XAxis::Time, "UTC", &c.y_label, xr, yr);
    for band in &c.bands {
        let mut pts: Vec<(f64, f64)> = band.lower.iter().map(|p| (f.x.map(p.0), f.y.map(p.1))).collect();
        pts.extend(band.upper.iter().rev().map(|p| (f.x.map(p.0), f.y.map(p.1))));
        svg.polygon(&pts, &format!(r#"fill="{}" fill-opacity="{}" stroke="none""#, band.color, num(band.opacity)));
    }
    for s in &c.series {
        let dash = if s.dashed { r#" stroke-dasharray="6,4""# } else { "" };
        let style = format!(r#"stroke="{}" stroke-width="{}"{dash}"#, s.color, num(s.width));
        // break the line at unusable values
        let mut run = Vec::new();
        for &(x, y) in &s.points {
            if usable(y, c.log_y) {
                run.push((f.x.map(x), f.y.map(y)));
            } else {
                svg.polyline(&run, &style);
                run.clear();
            }
        }
        svg.polyline(&run, &style);
    }
    draw_markers(&mut svg, &f, &c.markers, xr);
    let legend: Vec<(&str, &str)> = c.series.iter().filter(|s| s.legend).map(|s| (s.name.as_str(), s.color)).collect();
    draw_legend(&mut svg, &legend);
    svg.finish()
}

/// Hourly bars, red for net selling and green for net buying.
pub fn imbalance_chart(title: &str, bars: &[(i64, f64)], markers: &[EventMarker]) -> String {
    let mut svg = Svg::new(WIDTH, HEIGHT);
    let xr = match (bars.first(), bars.last()) {
        (Some(a), Some(z)) => (a.0 as f64, (z.0 + 3600) as f64),
        _ => (0.0, 3600.0),
    };
    let (lo, hi) = extent(bars.iter().map(|b| b.1)).unwrap_or((0.0, 0.0));
    let m = lo.abs().max(hi.abs()).max(1e-12) * 1.05;
    let yr = (-m, m);
    let (l, t, r, b) = plot_area();
    let f = Frame { x: Scale::new(xr.0, xr.1, l, r, false), y: Scale::new(yr.0, yr.1, b, t, false) };
    draw_frame(&mut svg, &f, title, XAxis::Time, "UTC", "sell − buy notional", xr, yr);
    let zero = f.y.map(0.0);
    for &(hour, v) in bars {
        if v == 0.0 || !v.is_finite() {
            continue;
        }
        let x0 = f.x.map(hour as f64);
        let x1 = f.x.map((hour + 3600) as f64);
        let y = f.y.map(v);
        let color = if v > 0.0 { SELL } else { BUY };
        svg.rect(x0, y.min(zero), (x1 - x0).max(0.5), (y - zero).abs(), &format!(r#"fill="{color}""#));
    }
    svg.line(l, zero, r, zero, r##"stroke="#333""##);
    draw_markers(&mut svg, &f, markers, xr);
    draw_legend(&mut svg, &[("net selling", SELL), ("net buying", BUY)]);
    svg.finish()
}

/// Points with optional fitted curves.
pub fn scatter_chart(title: &str, x_label: &str, y_label: &str, points: &[(f64, f64)], curves: &[Series]) -> String {
    let mut svg = Svg::new(WIDTH, HEIGHT);
    let xr = extent(points.iter().map(|p| p.0)).unwrap_or((0.0, 1.0));
    let yr = extent(points.iter().map(|p| p.1).chain(curves.iter().flat_map(|c| c.points.iter().map(|p| p.1)))).unwrap_or((0.0, 1.0));
    let pad = |r: (f64, f64)| {
        let p = ((r.1 - r.0) * 0.05).max(1e-12);
        (r.0 - p, r.1 + p)
    };
    let (xr, yr) = (pad(xr), pad(yr));
    let (l, t, r, b) = plot_area();
    let f = Frame { x: Scale::new(xr.0, xr.1, l, r, false), y: Scale::new(yr.0, yr.1, b, t, false) };
    draw_frame(&mut svg, &f, title, XAxis::Numeric, x_label, y_label, xr, yr);
    for &(x, y) in points {
        if x.is_finite() && y.is_finite() {
            svg.circle(f.x.map(x), f.y.map(y), 2.0, r##"fill="#1f77b4" fill-opacity="0.5""##);
        }
    }
    for c in curves {
        let pts: Vec<(f64, f64)> = c.points.iter().map(|p| (f.x.map(p.0), f.y.map(p.1))).collect();
        svg.polyline(&pts, &format!(r#"stroke="{}" stroke-width="{}""#, c.color, num(c.width)));
    }
    let legend: Vec<(&str, &str)> = curves.iter().map(|s| (s.name.as_str(), s.color)).collect();
    draw_legend(&mut svg, &legend);
    svg.finish()
}

/// Node-link drawing; `positions` are in the unit square and `size` scales
/// node radii.
pub fn network_chart(
    title: &str,
    labels: &[String],
    positions: &[(f64, f64)],
    edges: &[(usize, usize, f64)],
    size: &[f64],
    highlight: &[usize],
) -> String {
    let side = 720.0;
    let margin = 50.0;
    let mut svg = Svg::new(side, side + 30.0);
    svg.text(side / 2.0, 26.0, title, r#"font-size="16" text-anchor="middle""#);
    let at = |i: usize| {
        let (x, y) = positions[i];
        (margin + x * (side - 2.0 * margin), 30.0 + margin + y * (side - 2.0 * margin))
    };
    let wmax = edges.iter().map(|e| e.2.abs()).fold(0.0, f64::max).max(1e-12);
    for &(i, j, w) in edges {
        let (a, b) = (at(i), at(j));
        let color = if w < 0.0 { "#d62728" } else { "#555" };
        svg.line(a.0, a.1, b.0, b.1, &format!(r#"stroke="{color}" stroke-opacity="{}" stroke-width="1""#, num(0.15 + 0.6 * w.abs() / wmax)));
    }
    let smax = size.iter().cloned().fold(0.0, f64::max).max(1e-12);
    for (i, label) in labels.iter().enumerate() {
        let (x, y) = at(i);
        let r = 3.0 + 9.0 * size.get(i).copied().unwrap_or(0.0) / smax;
        let fill = if highlight.contains(&i) { PALETTE[1] } else { PALETTE[0] };
        svg.circle(x, y, r, &format!(r##"fill="{fill}" stroke="#fff" stroke-width="0.8""##));
        svg.text(x + r + 2.0, y + 3.0, label, r#"font-size="9""#);
    }
    svg.finish()
}

/// Caption for a snapshot taken at `ts`.
pub fn at_time(prefix: &str, ts: i64) -> String {
    format!("{prefix} at {}", format_time(ts))
}
