//! SVG rendering of a trial: obstacle points, robot paths, peak markers and
//! density contours on an axis-aligned slice.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::environment::{Aabb, GmmDensity};
use crate::error::{CoverError, Result};
use crate::geometry::Point3;

/// Contour levels as fractions of the largest sampled density.
pub const CONTOUR_FRACTIONS: [f64; 3] = [0.25, 0.5, 0.75];
/// Density samples along the longer plot axis.
pub const CONTOUR_SAMPLES: usize = 160;
const CANVAS: f64 = 800.0;
const PAD: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Plane {
    #[default]
    Xy,
    Xz,
}

impl Plane {
    pub fn name(self) -> &'static str {
        match self {
            Plane::Xy => "xy",
            Plane::Xz => "xz",
        }
    }

    /// In-plane coordinates of `p`.
    pub fn project(self, p: Point3) -> (f64, f64) {
        match self {
            Plane::Xy => (p.x, p.y),
            Plane::Xz => (p.x, p.z),
        }
    }

    /// The 3D point at in-plane `(u, v)` on the slice at depth `depth`.
    pub fn lift(self, u: f64, v: f64, depth: f64) -> Point3 {
        match self {
            Plane::Xy => Point3::new(u, v, depth),
            Plane::Xz => Point3::new(u, depth, v),
        }
    }

    /// The slice depth through the middle of the workspace.
    pub fn mid_depth(self, ws: &Aabb) -> f64 {
        match self {
            Plane::Xy => 0.5 * (ws.min.z + ws.max.z),
            Plane::Xz => 0.5 * (ws.min.y + ws.max.y),
        }
    }
}

impl FromStr for Plane {
    type Err = CoverError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "xy" => Ok(Plane::Xy),
            "xz" => Ok(Plane::Xz),
            other => Err(CoverError::Config(format!("unknown plot plane `{other}`, expected xy or xz"))),
        }
    }
}

/// A line segment in plane coordinates.
pub type Segment = [(f64, f64); 2];

/// Marching squares over a row-major `nx × ny` sample grid.
///
/// Sample `(i, j)` sits at `(u0 + i·du, v0 + j·dv)`. Crossings are placed
/// by linear interpolation; ambiguous saddles are resolved with the cell
/// mean.
pub fn marching_squares(
    values: &[f64],
    nx: usize,
    ny: usize,
    origin: (f64, f64),
    step: (f64, f64),
    level: f64,
) -> Vec<Segment> {
    assert_eq!(values.len(), nx * ny, "sample grid size mismatch");
    let at = |i: usize, j: usize| values[j * nx + i];
    let mut out = Vec::new();
    if nx < 2 || ny < 2 {
        return out;
    }
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            // corners counter-clockwise from the lower left
            let c = [at(i, j), at(i + 1, j), at(i + 1, j + 1), at(i, j + 1)];
            let xy = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)]
                .map(|(a, b)| (origin.0 + a as f64 * step.0, origin.1 + b as f64 * step.1));
            let above = c.map(|v| v >= level);
            let case = above.iter().enumerate().fold(0usize, |m, (k, &b)| m | (usize::from(b) << k));
            if case == 0 || case == 15 {
                continue;
            }
            let cross = |e: usize| {
                let (a, b) = (e, (e + 1) % 4);
                let t = (level - c[a]) / (c[b] - c[a]);
                (xy[a].0 + t * (xy[b].0 - xy[a].0), xy[a].1 + t * (xy[b].1 - xy[a].1))
            };
            // edges: 0 bottom, 1 right, 2 top, 3 left
            let crossing: Vec<usize> = (0..4).filter(|&e| above[e] != above[(e + 1) % 4]).collect();
            if crossing.len() == 2 {
                out.push([cross(crossing[0]), cross(crossing[1])]);
            } else {
                let center_above = c.iter().sum::<f64>() / 4.0 >= level;
                // pair each edge with its neighbour so the segments separate
                // the corners that disagree with the center
                let pairs = if above[0] == center_above { [(0, 1), (2, 3)] } else { [(3, 0), (1, 2)] };
                for (a, b) in pairs {
                    out.push([cross(a), cross(b)]);
                }
            }
        }
    }
    out
}

/// What to draw.
#[derive(Debug, Clone, Copy)]
pub struct PlotInput<'a> {
    pub workspace: Aabb,
    pub plane: Plane,
    pub obstacles: &'a [Point3],
    pub trajectories: &'a [Vec<Point3>],
    pub density: Option<&'a GmmDensity>,
}

struct Frame {
    u0: f64,
    v1: f64,
    scale: f64,
    width: f64,
    height: f64,
}

impl Frame {
    fn new(ws: &Aabb, plane: Plane) -> Self {
        let (u0, v0) = plane.project(ws.min);
        let (u1, v1) = plane.project(ws.max);
        let span = (u1 - u0).max(v1 - v0).max(1e-9);
        let scale = (CANVAS - 2.0 * PAD) / span;
        Self { u0, v1, scale, width: (u1 - u0) * scale + 2.0 * PAD, height: (v1 - v0) * scale + 2.0 * PAD }
    }

    fn map(&self, (u, v): (f64, f64)) -> (f64, f64) {
        (PAD + (u - self.u0) * self.scale, PAD + (self.v1 - v) * self.scale)
    }
}

/// Density samples over the plot window and their contour segments per level.
pub fn density_contours(gmm: &GmmDensity, ws: &Aabb, plane: Plane) -> Vec<(f64, Vec<Segment>)> {
    let (u0, v0) = plane.project(ws.min);
    let (u1, v1) = plane.project(ws.max);
    let span = (u1 - u0).max(v1 - v0);
    if span <= 0.0 {
        return Vec::new();
    }
    let h = span / (CONTOUR_SAMPLES - 1) as f64;
    let nx = ((u1 - u0) / h).round() as usize + 1;
    let ny = ((v1 - v0) / h).round() as usize + 1;
    let depth = plane.mid_depth(ws);
    let mut values = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            values.push(gmm.density_at(plane.lift(u0 + i as f64 * h, v0 + j as f64 * h, depth)));
        }
    }
    let max = values.iter().copied().fold(0.0f64, f64::max);
    if max <= 0.0 {
        return Vec::new();
    }
    CONTOUR_FRACTIONS.iter().map(|&f| (f, marching_squares(&values, nx, ny, (u0, v0), (h, h), f * max))).collect()
}

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2"];

pub fn render_svg(input: &PlotInput<'_>) -> String {
    let frame = Frame::new(&input.workspace, input.plane);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.1}" height="{:.1}" viewBox="0 0 {:.1} {:.1}" data-plane="{}">"#,
        frame.width,
        frame.height,
        frame.width,
        frame.height,
        input.plane.name()
    );
    let _ =
        writeln!(s, r##"<rect x="0" y="0" width="{:.1}" height="{:.1}" fill="#ffffff"/>"##, frame.width, frame.height);

    let _ = writeln!(s, r#"<g id="contours" fill="none" stroke-width="1">"#);
    if let Some(gmm) = input.density {
        for (fraction, segments) in density_contours(gmm, &input.workspace, input.plane) {
            let mut d = String::new();
            for [a, b] in &segments {
                let (ax, ay) = frame.map(*a);
                let (bx, by) = frame.map(*b);
                let _ = write!(d, "M{ax:.2} {ay:.2}L{bx:.2} {by:.2}");
            }
            let shade = (200.0 * (1.0 - fraction)) as u8;
            let _ =
                writeln!(s, r##"<path class="contour" data-level="{fraction}" stroke="#ff{shade:02x}00" d="{d}"/>"##);
        }
    }
    let _ = writeln!(s, "</g>");

    let _ = writeln!(s, r##"<g id="obstacles" fill="#555555">"##);
    for &q in input.obstacles {
        let (x, y) = frame.map(input.plane.project(q));
        let _ = writeln!(s, r#"<circle class="obstacle" cx="{x:.2}" cy="{y:.2}" r="1.2"/>"#);
    }
    let _ = writeln!(s, "</g>");

    let _ = writeln!(s, r#"<g id="trajectories" fill="none" stroke-width="1.5">"#);
    for (i, path) in input.trajectories.iter().enumerate().filter(|(_, p)| !p.is_empty()) {
        let points: Vec<String> = path
            .iter()
            .map(|&p| {
                let (x, y) = frame.map(input.plane.project(p));
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let color = PALETTE[i % PALETTE.len()];
        let _ = writeln!(
            s,
            r#"<polyline class="trajectory" data-robot="{i}" stroke="{color}" points="{}"/>"#,
            points.join(" ")
        );
    }
    let _ = writeln!(s, "</g>");

    let _ = writeln!(s, r##"<g id="peaks" fill="none" stroke="#000000" stroke-width="2">"##);
    if let Some(gmm) = input.density {
        for c in gmm.peaks() {
            let (x, y) = frame.map(input.plane.project(c));
            let _ = writeln!(
                s,
                r#"<path class="peak" d="M{:.2} {:.2}L{:.2} {:.2}M{:.2} {:.2}L{:.2} {:.2}"/>"#,
                x - 6.0,
                y - 6.0,
                x + 6.0,
                y + 6.0,
                x - 6.0,
                y + 6.0,
                x + 6.0,
                y - 6.0
            );
        }
    }
    let _ = writeln!(s, "</g>");
    s.push_str("</svg>\n");
    s
}

pub fn write_svg(path: &Path, input: &PlotInput<'_>) -> Result<()> {
    std::fs::write(path, render_svg(input)).map_err(|e| CoverError::Io(format!("{}: {e}", path.display())))
}
