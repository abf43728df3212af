//! Metrics CSV and SVG frame writers.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use crate::engine::{RoundReport, SwarmState, WorldConfig};
use crate::geom2d::Point2;
use crate::graph::{visibility_graph, Graph};

/// Column order of the metrics file. Part of the stable file format.
pub const METRICS_HEADER: &str = "round,edge_count,effective_edge_count,connected,diameter_hops,min_pair_distance,max_pair_distance,reverted_agents";

/// Formats like C's `%.9g`: 9 significant digits, trailing zeros dropped,
/// scientific notation outside `[1e-4, 1e9)`.
pub fn format_sig9(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..9).contains(&exp) {
        let decimals = (8 - exp) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// One CSV row, without trailing newline. Disconnected rounds leave
/// `diameter_hops` empty.
pub fn metrics_row(r: &RoundReport) -> String {
    let m = &r.metrics;
    format!(
        "{},{},{},{},{},{},{},{}",
        r.round,
        m.edge_count,
        m.effective_edge_count,
        u8::from(m.connected),
        m.graph_diameter_hops.map(|d| d.to_string()).unwrap_or_default(),
        format_sig9(m.min_pair_distance),
        format_sig9(m.max_pair_distance),
        r.reverted_agents,
    )
}

pub fn metrics_to_writer(reports: &[RoundReport], mut w: impl Write) -> io::Result<()> {
    writeln!(w, "{METRICS_HEADER}")?;
    for r in reports {
        writeln!(w, "{}", metrics_row(r))?;
    }
    Ok(())
}

pub fn write_metrics(reports: &[RoundReport], path: impl AsRef<Path>) -> io::Result<()> {
    let file = fs::File::create(path)?;
    let mut w = io::BufWriter::new(file);
    metrics_to_writer(reports, &mut w)?;
    w.flush()
}

const MARGIN_FRACTION: f64 = 0.05;
const CANVAS_PX: f64 = 800.0;

/// Renders one frame. Effective edges are solid, trimmed visibility edges
/// dashed, obstacles filled, and the leader drawn larger in red.
pub fn render_svg(state: &SwarmState, world: &WorldConfig, ge: &Graph) -> String {
    let pos = &state.positions;
    let v = world.visibility;
    let g = visibility_graph(pos, v);

    let mut pts: Vec<Point2> = pos.clone();
    pts.extend(world.obstacles.iter().flat_map(|o| o.vertices().iter().copied()));
    pts.extend(world.behavior.leader().iter().flat_map(|_| world.behavior.waypoints.iter().copied()));
    let (mut min, mut max) = (Point2::new(f64::MAX, f64::MAX), Point2::new(f64::MIN, f64::MIN));
    for p in &pts {
        min = Point2::new(min.x.min(p.x), min.y.min(p.y));
        max = Point2::new(max.x.max(p.x), max.y.max(p.y));
    }
    if pts.is_empty() {
        min = Point2::ORIGIN;
        max = Point2::new(v, v);
    }
    let span = (max.x - min.x).max(max.y - min.y).max(v);
    let pad = span * MARGIN_FRACTION;
    let (x0, y0, side) = (min.x - pad, min.y - pad, span + 2.0 * pad);
    let scale = CANVAS_PX / side;
    // SVG y grows downward.
    let to_px = |p: Point2| ((p.x - x0) * scale, (y0 + side - p.y) * scale);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{CANVAS_PX}" height="{CANVAS_PX}" viewBox="0 0 {CANVAS_PX} {CANVAS_PX}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, "<!-- round {} -->", state.round);

    for o in &world.obstacles {
        let coords: Vec<String> = o
            .vertices()
            .iter()
            .map(|&p| {
                let (x, y) = to_px(p);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let _ = writeln!(
            s,
            r##"<polygon points="{}" fill="#888888" stroke="#444444"/>"##,
            coords.join(" ")
        );
    }

    for (i, j) in g.edges() {
        let (x1, y1) = to_px(pos[i]);
        let (x2, y2) = to_px(pos[j]);
        let style = if ge.has_edge(i, j) {
            r##"stroke="#1f4e9c" stroke-width="2""##
        } else {
            r##"stroke="#9aa7bd" stroke-width="1" stroke-dasharray="4 3""##
        };
        let _ = writeln!(
            s,
            r#"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" {style}/>"#
        );
    }

    let r = (0.03 * v * scale).clamp(2.0, 8.0);
    let leader = world.behavior.leader();
    for (i, &p) in pos.iter().enumerate() {
        let (cx, cy) = to_px(p);
        let (radius, fill) = if Some(i) == leader {
            (2.0 * r, "#d62728")
        } else {
            (r, "#222222")
        };
        let _ = writeln!(s, r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="{radius:.2}" fill="{fill}"/>"#);
    }
    s.push_str("</svg>\n");
    s
}

pub fn write_svg_frame(
    state: &SwarmState,
    world: &WorldConfig,
    ge: &Graph,
    path: impl AsRef<Path>,
) -> io::Result<()> {
    fs::write(path, render_svg(state, world, ge))
}
