//! Output writers. Every file carries the config hash and the seed; nothing
//! time-dependent is written, so identical runs give identical bytes.

use crate::error::{Error, Result};
use serde::Serialize;
use std::fmt::Write as _;
use std::path::Path;

/// Identification embedded in every output file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Stamp {
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
}

impl Stamp {
    pub fn line(&self) -> String {
        format!(
            "collapse-bounds {} config_hash={} seed={}",
            self.command, self.config_hash, self.seed
        )
    }
}

/// Cell text; `f64` uses the shortest round-trip scientific representation.
pub enum Cell {
    F(f64),
    Opt(Option<f64>),
    B(bool),
    S(String),
}

impl Cell {
    fn text(&self) -> String {
        match self {
            Cell::F(v) | Cell::Opt(Some(v)) => format!("{v:e}"),
            Cell::Opt(None) => String::new(),
            Cell::B(b) => b.to_string(),
            Cell::S(s) => s.clone(),
        }
    }
}

/// RFC-4180 CSV preceded by a `# ` stamp line.
pub fn write_csv(path: &Path, stamp: &Stamp, header: &[&str], rows: &[Vec<Cell>]) -> Result<()> {
    let mut out = format!("# {}\r\n", stamp.line()).into_bytes();
    {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(&mut out);
        let fail = |e: csv::Error| Error::io(path, std::io::Error::other(e));
        w.write_record(header).map_err(fail)?;
        for r in rows {
            w.write_record(r.iter().map(Cell::text)).map_err(fail)?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Pretty JSON `{ "stamp": ..., "result": ... }` with struct field order.
pub fn write_json<T: Serialize>(path: &Path, stamp: &Stamp, result: &T) -> Result<()> {
    #[derive(Serialize)]
    struct Doc<'a, T> {
        stamp: &'a Stamp,
        result: &'a T,
    }
    let mut text = serde_json::to_string_pretty(&Doc { stamp, result })
        .map_err(|e| Error::io(path, std::io::Error::other(e)))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Linear,
    Log,
}

impl Scale {
    fn map(self, v: f64) -> f64 {
        match self {
            Scale::Linear => v,
            Scale::Log => v.log10(),
        }
    }
}

pub struct Series<'a> {
    pub label: &'a str,
    pub points: Vec<(f64, f64)>,
    /// Draw markers instead of a polyline.
    pub markers: bool,
}

pub struct Rect {
    pub x: (f64, f64),
    pub y: (f64, f64),
    pub fill: &'static str,
}

pub struct Plot<'a> {
    pub title: &'a str,
    pub x_label: &'a str,
    pub y_label: &'a str,
    pub x_scale: Scale,
    pub y_scale: Scale,
    pub series: Vec<Series<'a>>,
    /// Background rectangles in data coordinates (exclusion maps).
    pub rects: Vec<Rect>,
}

const W: f64 = 640.0;
const H: f64 = 420.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const COLORS: [&str; 4] = ["#1f5fa8", "#d2691e", "#2e8b57", "#8b008b"];

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn range(vals: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = vals
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo <= 0.0 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

/// Minimal SVG 1.1 plot with linear or log axes.
pub fn svg_plot(plot: &Plot, stamp: &Stamp) -> String {
    let xs = plot
        .series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.0))
        .chain(plot.rects.iter().flat_map(|r| [r.x.0, r.x.1]))
        .map(|v| plot.x_scale.map(v));
    let (x0, x1) = range(xs);
    let ys = plot
        .series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.1))
        .chain(plot.rects.iter().flat_map(|r| [r.y.0, r.y.1]))
        .map(|v| plot.y_scale.map(v));
    let (y0, y1) = range(ys);
    let px = |v: f64| LEFT + (plot.x_scale.map(v) - x0) / (x1 - x0) * (W - LEFT - RIGHT);
    let py = |v: f64| H - BOTTOM - (plot.y_scale.map(v) - y0) / (y1 - y0) * (H - TOP - BOTTOM);

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(s, "<!-- {} -->", esc(&stamp.line()));
    let _ = writeln!(s, r##"<rect x="0" y="0" width="{W}" height="{H}" fill="#ffffff"/>"##);
    for r in &plot.rects {
        let (a, b) = (px(r.x.0), px(r.x.1));
        let (c, d) = (py(r.y.1), py(r.y.0));
        let _ = writeln!(
            s,
            r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
            a.min(b),
            c.min(d),
            (b - a).abs(),
            (d - c).abs(),
            r.fill
        );
    }
    let _ = writeln!(
        s,
        r##"<rect x="{LEFT}" y="{TOP}" width="{}" height="{}" fill="none" stroke="#000000"/>"##,
        W - LEFT - RIGHT,
        H - TOP - BOTTOM
    );
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        let xl = match plot.x_scale {
            Scale::Linear => format!("{xv:.3e}"),
            Scale::Log => format!("1e{xv:.1}"),
        };
        let yl = match plot.y_scale {
            Scale::Linear => format!("{yv:.3e}"),
            Scale::Log => format!("1e{yv:.1}"),
        };
        let gx = LEFT + f * (W - LEFT - RIGHT);
        let gy = H - BOTTOM - f * (H - TOP - BOTTOM);
        let _ = writeln!(
            s,
            r#"<text x="{gx:.2}" y="{:.2}" font-size="11" text-anchor="middle">{xl}</text>"#,
            H - BOTTOM + 16.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{gy:.2}" font-size="11" text-anchor="end">{yl}</text>"#,
            LEFT - 6.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="24" font-size="14" text-anchor="middle">{}</text>"#,
        W / 2.0,
        esc(plot.title)
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">{}</text>"#,
        (LEFT + W - RIGHT) / 2.0,
        H - 18.0,
        esc(plot.x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.2}" font-size="12" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        esc(plot.y_label)
    );
    for (i, series) in plot.series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<(f64, f64)> = series
            .points
            .iter()
            .filter(|p| plot.x_scale.map(p.0).is_finite() && plot.y_scale.map(p.1).is_finite())
            .map(|&(x, y)| (px(x), py(y)))
            .collect();
        if series.markers {
            for (x, y) in &pts {
                let _ = writeln!(s, r#"<circle cx="{x:.2}" cy="{y:.2}" r="2.5" fill="{color}"/>"#);
            }
        } else if !pts.is_empty() {
            let path: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                path.join(" ")
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-size="11" fill="{color}">{}</text>"#,
            LEFT + 8.0,
            TOP + 14.0 * (i as f64 + 1.0),
            esc(series.label)
        );
    }
    s.push_str("</svg>\n");
    s
}
