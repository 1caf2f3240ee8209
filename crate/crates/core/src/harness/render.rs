use std::fmt::Write as _;

use crate::geometry::{OrientedBox, Point2};
use crate::map::Scenario;
use crate::sim::{agent_pose_at, BicycleParams};

/// Optional layers drawn over the map, all in world coordinates.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overlays {
    pub expert: Option<Vec<Point2>>,
    pub planned: Option<Vec<Point2>>,
    pub nav_path: Option<Vec<Point2>>,
    pub tbt_text: Option<String>,
}

const SCALE: f64 = 4.0;
const MARGIN: f64 = 20.0;
const LEGEND_HEIGHT: f64 = 70.0;

struct Frame {
    min: Point2,
    max: Point2,
}

impl Frame {
    fn map(&self, p: Point2) -> (f64, f64) {
        (
            (p.x - self.min.x) * SCALE + MARGIN,
            (self.max.y - p.y) * SCALE + MARGIN,
        )
    }

    fn points(&self, pts: &[Point2]) -> String {
        pts.iter()
            .map(|p| {
                let (x, y) = self.map(*p);
                format!("{x:.2},{y:.2}")
            })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// SVG drawing of the corridor, centerlines, traffic at t = 0, the ego
/// start and any overlays.
pub fn render_svg(scenario: &Scenario, overlays: &Overlays) -> String {
    let mut all: Vec<Point2> = scenario.corridor.iter().flatten().copied().collect();
    all.extend(
        scenario
            .graph
            .edges()
            .flat_map(|e| e.centerline.points().iter().copied()),
    );
    for layer in [&overlays.expert, &overlays.planned, &overlays.nav_path]
        .into_iter()
        .flatten()
    {
        all.extend(layer.iter().copied());
    }
    all.push(scenario.ego_start.position);
    let (mut min, mut max) = (
        Point2::new(f64::INFINITY, f64::INFINITY),
        Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
    );
    for p in all.iter().filter(|p| p.is_finite()) {
        min = Point2::new(min.x.min(p.x), min.y.min(p.y));
        max = Point2::new(max.x.max(p.x), max.y.max(p.y));
    }
    if !min.x.is_finite() {
        min = Point2::ORIGIN;
        max = Point2::new(1.0, 1.0);
    }
    let frame = Frame { min, max };
    let width = (max.x - min.x) * SCALE + 2.0 * MARGIN;
    let map_height = (max.y - min.y) * SCALE + 2.0 * MARGIN;
    let height = map_height + LEGEND_HEIGHT;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.2} {height:.2}">"#
    );
    let _ = writeln!(s, "<title>{}</title>", escape(&scenario.id));
    let _ = writeln!(
        s,
        r##"<rect x="0" y="0" width="{width:.2}" height="{height:.2}" fill="#ffffff"/>"##
    );

    let _ = writeln!(s, r#"<g id="corridor">"#);
    for poly in &scenario.corridor {
        let _ = writeln!(
            s,
            r##"<polygon class="corridor" points="{}" fill="#d9d9d9" stroke="none"/>"##,
            frame.points(poly)
        );
    }
    let _ = writeln!(s, "</g>");

    let _ = writeln!(s, r#"<g id="centerlines">"#);
    for e in scenario.graph.edges() {
        let _ = writeln!(
            s,
            r##"<polyline class="centerline" data-edge="{}" points="{}" fill="none" stroke="#888888" stroke-width="1" stroke-dasharray="4,3"/>"##,
            escape(&e.id),
            frame.points(e.centerline.points())
        );
    }
    let _ = writeln!(s, "</g>");

    let _ = writeln!(s, r#"<g id="agents">"#);
    for a in &scenario.agents {
        let (pose, _) = agent_pose_at(a, 0.0);
        let b = OrientedBox::at_pose(&pose, a.length, a.width);
        let _ = writeln!(
            s,
            r##"<polygon class="agent" data-agent="{}" points="{}" fill="#4a78c2" stroke="#1f3f73"/>"##,
            escape(&a.id),
            frame.points(&b.corners())
        );
    }
    let ego = BicycleParams::default().footprint(&scenario.ego_start);
    let _ = writeln!(
        s,
        r##"<polygon class="ego" points="{}" fill="#e07b39" stroke="#8a3d10"/>"##,
        frame.points(&ego.corners())
    );
    let _ = writeln!(s, "</g>");

    let layers: [(&str, &Option<Vec<Point2>>, &str); 3] = [
        ("expert", &overlays.expert, "#2e8b57"),
        ("planned", &overlays.planned, "#c0392b"),
        ("nav-path", &overlays.nav_path, "#8e44ad"),
    ];
    for (name, layer, color) in layers {
        let Some(pts) = layer else { continue };
        let _ = writeln!(s, r#"<g id="{name}">"#);
        if pts.len() >= 2 {
            let _ = writeln!(
                s,
                r#"<polyline class="{name}" points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
                frame.points(pts)
            );
        }
        if name == "nav-path" {
            for p in pts {
                let (x, y) = frame.map(*p);
                let _ = writeln!(
                    s,
                    r#"<circle class="nav-point" cx="{x:.2}" cy="{y:.2}" r="3" fill="{color}"/>"#
                );
            }
        }
        let _ = writeln!(s, "</g>");
    }

    let _ = writeln!(
        s,
        r#"<g id="legend" font-family="sans-serif" font-size="12">"#
    );
    let mut y = map_height + 15.0;
    let mut x = MARGIN;
    for (name, layer, color) in layers {
        if layer.is_none() {
            continue;
        }
        let _ = writeln!(
            s,
            r#"<line x1="{x:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="{color}" stroke-width="2"/>"#,
            x + 20.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}">{name}</text>"#,
            x + 25.0,
            y + 4.0
        );
        x += 110.0;
    }
    if let Some(text) = &overlays.tbt_text {
        y += 25.0;
        let _ = writeln!(
            s,
            r#"<text class="tbt" x="{MARGIN:.1}" y="{y:.1}">{}</text>"#,
            escape(text)
        );
    }
    let _ = writeln!(s, "</g>");
    s.push_str("</svg>\n");
    s
}
