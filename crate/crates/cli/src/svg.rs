//! Minimal SVG of a run: patch rectangles, trash markers and agent paths.

use std::fmt::Write as _;

use nodswitch::sim::{Scenario, SimOutput};

const WIDTH: f64 = 800.0;
const PAD: f64 = 20.0;
const COLORS: [&str; 8] = [
    "#d62728", "#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

struct View {
    x0: f64,
    y1: f64,
    scale: f64,
}

impl View {
    fn px(&self, x: f64) -> f64 {
        PAD + (x - self.x0) * self.scale
    }

    fn py(&self, y: f64) -> f64 {
        PAD + (self.y1 - y) * self.scale
    }
}

pub fn render(scenario: &Scenario, out: &SimOutput) -> String {
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for p in &scenario.patches {
        x0 = x0.min(p.x_bounds.0);
        x1 = x1.max(p.x_bounds.1);
        y0 = y0.min(p.y_bounds.0);
        y1 = y1.max(p.y_bounds.1);
    }
    for r in &out.log.rows {
        x0 = x0.min(r.x);
        x1 = x1.max(r.x);
        y0 = y0.min(r.y);
        y1 = y1.max(r.y);
    }
    let scale = (WIDTH - 2.0 * PAD) / (x1 - x0).max(1e-9);
    let v = View { x0, y1, scale };
    let height = 2.0 * PAD + (y1 - y0) * scale;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height:.1}" viewBox="0 0 {WIDTH} {height:.1}">"#
    );
    let _ = writeln!(s, r##"<rect width="100%" height="100%" fill="#ffffff"/>"##);
    for p in &scenario.patches {
        let _ = writeln!(
            s,
            r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="#f2f2f2" stroke="#555555" stroke-width="1"/>"##,
            v.px(p.x_bounds.0),
            v.py(p.y_bounds.1),
            p.width() * scale,
            p.height() * scale
        );
    }
    for item in &out.trash.items {
        let fill = if item.collected_at.is_some() { "none" } else { "#7f7f7f" };
        let _ = writeln!(
            s,
            r##"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{fill}" stroke="#7f7f7f" stroke-width="0.8"/>"##,
            v.px(item.x),
            v.py(item.y)
        );
    }
    for id in 0..out.log.n_agents() {
        let color = COLORS[id % COLORS.len()];
        let mut points = String::new();
        let mut last = None;
        for r in out.log.agent_rows(id) {
            let (px, py) = (v.px(r.x), v.py(r.y));
            // skip sub-pixel moves, the polyline is otherwise huge
            if last.is_some_and(|(lx, ly): (f64, f64)| (lx - px).hypot(ly - py) < 0.5) {
                continue;
            }
            let _ = write!(points, "{px:.1},{py:.1} ");
            last = Some((px, py));
        }
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.2" stroke-opacity="0.8"/>"#,
            points.trim_end()
        );
        if let Some(r) = out.log.agent_rows(id).last() {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="5" fill="{color}"/>"#,
                v.px(r.x),
                v.py(r.y)
            );
        }
    }
    s.push_str("</svg>\n");
    s
}
