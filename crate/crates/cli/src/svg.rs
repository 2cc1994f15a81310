//! Minimal deterministic SVG line charts.

use std::fmt::Write as _;

use bpe_core::graphs::OrientedGraph;
use bpe_core::simulation::SimLog;
use nalgebra::DVector;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 72.0;
const RIGHT: f64 = 24.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 52.0;
const MAX_POINTS: usize = 800;

pub const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#9467bd", "#8c564b", "#e377c2", "#17becf", "#bcbd22",
];

pub struct Series<'a> {
    pub label: String,
    pub color: &'a str,
    pub dashed: bool,
    pub points: Vec<(f64, f64)>,
}

impl<'a> Series<'a> {
    pub fn new(label: impl Into<String>, color: &'a str, x: &[f64], y: &[f64]) -> Self {
        Self {
            label: label.into(),
            color,
            dashed: false,
            points: x.iter().copied().zip(y.iter().copied()).collect(),
        }
    }

    pub fn dashed(mut self) -> Self {
        self.dashed = true;
        self
    }
}

/// Keeps at most `MAX_POINTS` evenly strided points, always including the last.
fn decimate(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    if points.len() <= MAX_POINTS {
        return points.to_vec();
    }
    let stride = points.len().div_ceil(MAX_POINTS);
    let mut out: Vec<_> = points.iter().step_by(stride).copied().collect();
    if !(points.len() - 1).is_multiple_of(stride) {
        out.push(points[points.len() - 1]);
    }
    out
}

fn nice_step(range: f64) -> f64 {
    let raw = range / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let frac = raw / mag;
    let nice = if frac <= 1.0 {
        1.0
    } else if frac <= 2.0 {
        2.0
    } else if frac <= 5.0 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

fn ticks(lo: f64, hi: f64) -> (Vec<f64>, usize) {
    let step = nice_step(hi - lo);
    let decimals = (-step.log10().floor()).max(0.0) as usize;
    let first = (lo / step).ceil() as i64;
    let last = (hi / step + 1e-9).floor() as i64;
    ((first..=last).map(|k| k as f64 * step).collect(), decimals)
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn fit(series: &[Series], include_zero: bool) -> Self {
        let all = series
            .iter()
            .flat_map(|s| s.points.iter())
            .filter(|p| p.0.is_finite() && p.1.is_finite());
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for &(x, y) in all {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        if !x0.is_finite() {
            (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
        }
        if include_zero {
            y0 = y0.min(0.0);
        }
        if x1 - x0 <= 0.0 {
            x1 = x0 + 1.0;
        }
        if y1 - y0 <= 0.0 {
            y1 = y0 + 1.0;
        }
        Self { x0, x1, y0, y1 }
    }

    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - TOP - BOTTOM)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn open(out: &mut String, title: &str) {
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    writeln!(out, r##"<rect width="100%" height="100%" fill="#ffffff"/>"##).unwrap();
    writeln!(
        out,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    )
    .unwrap();
}

fn axes(out: &mut String, f: &Frame, x_label: &str, y_label: &str) {
    let (bottom, top) = (HEIGHT - BOTTOM, TOP);
    let (left, right) = (LEFT, WIDTH - RIGHT);
    writeln!(
        out,
        r##"<rect x="{left}" y="{top}" width="{}" height="{}" fill="none" stroke="#000000"/>"##,
        right - left,
        bottom - top
    )
    .unwrap();
    let (xt, xd) = ticks(f.x0, f.x1);
    for x in xt {
        let px = f.px(x);
        writeln!(
            out,
            r##"<line x1="{px:.2}" y1="{bottom}" x2="{px:.2}" y2="{:.2}" stroke="#000000"/>"##,
            bottom + 5.0
        )
        .unwrap();
        writeln!(
            out,
            r#"<text x="{px:.2}" y="{:.2}" text-anchor="middle">{x:.xd$}</text>"#,
            bottom + 18.0
        )
        .unwrap();
    }
    let (yt, yd) = ticks(f.y0, f.y1);
    for y in yt {
        let py = f.py(y);
        writeln!(
            out,
            r##"<line x1="{:.2}" y1="{py:.2}" x2="{left}" y2="{py:.2}" stroke="#000000"/>"##,
            left - 5.0
        )
        .unwrap();
        writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{y:.yd$}</text>"#,
            left - 8.0,
            py + 4.0
        )
        .unwrap();
    }
    writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        (left + right) / 2.0,
        HEIGHT - 12.0,
        escape(x_label)
    )
    .unwrap();
    writeln!(
        out,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
        (top + bottom) / 2.0,
        (top + bottom) / 2.0,
        escape(y_label)
    )
    .unwrap();
}

fn polyline(out: &mut String, f: &Frame, s: &Series) {
    let pts: Vec<String> = decimate(&s.points)
        .iter()
        .filter(|p| p.0.is_finite() && p.1.is_finite())
        .map(|&(x, y)| format!("{:.2},{:.2}", f.px(x), f.py(y)))
        .collect();
    let dash = if s.dashed { r#" stroke-dasharray="6 4""# } else { "" };
    writeln!(
        out,
        r#"<polyline fill="none" stroke="{}" stroke-width="1.5"{dash} points="{}"/>"#,
        s.color,
        pts.join(" ")
    )
    .unwrap();
}

fn legend(out: &mut String, series: &[Series]) {
    let x = WIDTH - RIGHT - 150.0;
    for (k, s) in series.iter().enumerate() {
        let y = TOP + 16.0 + 16.0 * k as f64;
        let dash = if s.dashed { r#" stroke-dasharray="6 4""# } else { "" };
        writeln!(
            out,
            r#"<line x1="{x}" y1="{:.2}" x2="{}" y2="{:.2}" stroke="{}" stroke-width="2"{dash}/>"#,
            y - 4.0,
            x + 24.0,
            y - 4.0,
            s.color
        )
        .unwrap();
        writeln!(out, r#"<text x="{}" y="{y:.2}">{}</text>"#, x + 30.0, escape(&s.label)).unwrap();
    }
}

/// Line chart of several series against a shared horizontal axis.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let f = Frame::fit(series, true);
    let mut out = String::new();
    open(&mut out, title);
    axes(&mut out, &f, x_label, y_label);
    for s in series {
        polyline(&mut out, &f, s);
    }
    legend(&mut out, series);
    out.push_str("</svg>\n");
    out
}

/// Planar view of a point: identity in 2-D, cabinet projection in 3-D,
/// first two coordinates beyond that.
pub fn project(p: &[f64]) -> (f64, f64) {
    match p.len() {
        3 => {
            let c = 0.5 * std::f64::consts::FRAC_1_SQRT_2;
            (p[0] + c * p[1], p[2] + c * p[1])
        }
        _ => (p[0], p[1]),
    }
}

fn agent_points(p: &DVector<f64>, d: usize) -> Vec<(f64, f64)> {
    p.as_slice().chunks(d).map(project).collect()
}

/// Agent paths, the desired path of agent 1 and formation snapshots at the
/// start, middle and end of the run.
pub fn trajectory_plot(title: &str, log: &SimLog, graph: &OrientedGraph) -> String {
    let d = log.d;
    let n = log.agent_count();
    let mut series: Vec<Series> = (0..n)
        .map(|i| Series {
            label: format!("agent {}", i + 1),
            color: PALETTE[i % PALETTE.len()],
            dashed: false,
            points: log
                .states
                .iter()
                .map(|p| project(&p.as_slice()[i * d..(i + 1) * d]))
                .collect(),
        })
        .collect();
    series.push(Series {
        label: "desired agent 1".into(),
        color: "#d62728",
        dashed: true,
        points: log.desired.iter().map(|p| project(&p.as_slice()[..d])).collect(),
    });

    // Equal aspect ratio, with a margin so markers and labels stay inside.
    let mut f = Frame::fit(&series, false);
    let (mx, my) = (0.08 * (f.x1 - f.x0), 0.08 * (f.y1 - f.y0));
    (f.x0, f.x1, f.y0, f.y1) = (f.x0 - mx, f.x1 + mx, f.y0 - my, f.y1 + my);
    let sx = (f.x1 - f.x0) / (WIDTH - LEFT - RIGHT);
    let sy = (f.y1 - f.y0) / (HEIGHT - TOP - BOTTOM);
    if sx > sy {
        let pad = (sx * (HEIGHT - TOP - BOTTOM) - (f.y1 - f.y0)) / 2.0;
        f.y0 -= pad;
        f.y1 += pad;
    } else {
        let pad = (sy * (WIDTH - LEFT - RIGHT) - (f.x1 - f.x0)) / 2.0;
        f.x0 -= pad;
        f.x1 += pad;
    }

    let mut out = String::new();
    open(&mut out, title);
    let (x_label, y_label) = if d == 3 {
        ("x + y/(2√2)", "z + y/(2√2)")
    } else {
        ("x", "y")
    };
    axes(&mut out, &f, x_label, y_label);
    for s in &series {
        polyline(&mut out, &f, s);
    }
    let last = log.states.len() - 1;
    for (snap, (k, filled)) in [(0, false), (last / 2, true), (last, true)].into_iter().enumerate() {
        let pts = agent_points(&log.states[k], d);
        for &(i, j) in graph.edges() {
            writeln!(
                out,
                r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#000000" stroke-width="1"/>"##,
                f.px(pts[i].0),
                f.py(pts[i].1),
                f.px(pts[j].0),
                f.py(pts[j].1)
            )
            .unwrap();
        }
        for (i, &(x, y)) in pts.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            let fill = if filled { color } else { "none" };
            writeln!(
                out,
                r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="{fill}" stroke="{color}"/>"#,
                f.px(x),
                f.py(y)
            )
            .unwrap();
        }
        writeln!(
            out,
            r##"<text x="{:.2}" y="{:.2}" fill="#555555">t = {:.1}</text>"##,
            f.px(pts[0].0) + 6.0,
            f.py(pts[0].1) - 6.0 - 14.0 * snap as f64,
            log.times[k]
        )
        .unwrap();
    }
    legend(&mut out, &series);
    out.push_str("</svg>\n");
    out
}
