//! SVG pictures. Geometry is fixed so that outputs can be compared byte for
//! byte: coordinates are scaled by a per-picture factor, the y axis points
//! up, and every number is printed with three decimals.

use std::fmt::Write;

use dimers::amoeba::AmoebaRaster;
use dimers::graph::{BipartiteGraph, Label, Lattice};
use dimers::height::Matching;
use dimers::limit_shape::{to_euclid, Polygon};

use crate::docs::VERSION;

/// Pixels per lattice unit in tilings.
pub const TILE_SCALE: f64 = 20.0;
/// Blank border around every picture, in pixels.
pub const MARGIN: f64 = 10.0;
/// Pixels per raster cell in amoeba pictures.
pub const AMOEBA_CELL: f64 = 2.0;
/// Pixels per unit of the polygon plane in limit-shape pictures.
pub const POLYGON_SCALE: f64 = 200.0;

pub fn color(l: Label) -> &'static str {
    match l {
        Label::A => "#e6b422",
        Label::B => "#3b7dd8",
        Label::C => "#d9534f",
        Label::Horizontal => "#4a90d9",
        Label::Vertical => "#e07b39",
        Label::Other => "#999999",
    }
}

/// Corners of the tile of edge `e` in lattice units: a rhombus made of the
/// two unit triangles on the honeycomb, a 2x1 rectangle on the square grid.
pub fn tile(g: &BipartiteGraph, e: usize) -> Vec<(f64, f64)> {
    let w = g.whites[g.edges[e].white].pos;
    let b = g.black_pos_lifted(e);
    let d = (b.0 - w.0, b.1 - w.1);
    let len = d.0.hypot(d.1);
    let n = (-d.1 / len / 2.0, d.0 / len / 2.0);
    match g.lattice {
        Lattice::Honeycomb => {
            // centroids sit at the thirds of the long diagonal
            let m = ((w.0 + b.0) / 2.0, (w.1 + b.1) / 2.0);
            vec![(w.0 - d.0, w.1 - d.1), (m.0 + n.0, m.1 + n.1), (b.0 + d.0, b.1 + d.1), (m.0 - n.0, m.1 - n.1)]
        }
        _ => {
            let (a, c) = ((w.0 - d.0 / 2.0, w.1 - d.1 / 2.0), (b.0 + d.0 / 2.0, b.1 + d.1 / 2.0));
            vec![(a.0 + n.0, a.1 + n.1), (c.0 + n.0, c.1 + n.1), (c.0 - n.0, c.1 - n.1), (a.0 - n.0, a.1 - n.1)]
        }
    }
}

struct Frame {
    x0: f64,
    y1: f64,
    scale: f64,
    width: f64,
    height: f64,
}

impl Frame {
    fn around(pts: impl Iterator<Item = (f64, f64)>, scale: f64) -> Frame {
        let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for (x, y) in pts {
            x0 = x0.min(x);
            y0 = y0.min(y);
            x1 = x1.max(x);
            y1 = y1.max(y);
        }
        if !x0.is_finite() {
            (x0, y0, x1, y1) = (0.0, 0.0, 0.0, 0.0);
        }
        Frame { x0, y1, scale, width: (x1 - x0) * scale + 2.0 * MARGIN, height: (y1 - y0) * scale + 2.0 * MARGIN }
    }

    fn map(&self, p: (f64, f64)) -> (f64, f64) {
        (MARGIN + (p.0 - self.x0) * self.scale, MARGIN + (self.y1 - p.1) * self.scale)
    }

    fn open(&self, out: &mut String) {
        writeln!(
            out,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.3}\" height=\"{:.3}\" viewBox=\"0 0 {:.3} {:.3}\">",
            self.width, self.height, self.width, self.height
        )
        .unwrap();
        writeln!(out, "<!-- {VERSION} -->").unwrap();
    }

    fn polygon(&self, out: &mut String, pts: &[(f64, f64)], style: &str) {
        let s: Vec<String> = pts
            .iter()
            .map(|&p| {
                let (x, y) = self.map(p);
                format!("{x:.3},{y:.3}")
            })
            .collect();
        writeln!(out, "<polygon points=\"{}\" {style}/>", s.join(" ")).unwrap();
    }
}

/// A tiling: one filled polygon per matched edge, in edge order.
pub fn tiling(g: &BipartiteGraph, m: &Matching) -> String {
    let mut edges = m.edges();
    edges.sort_unstable();
    let tiles: Vec<(Label, Vec<(f64, f64)>)> = edges.iter().map(|&e| (g.edges[e].label, tile(g, e))).collect();
    let frame = Frame::around(tiles.iter().flat_map(|t| t.1.iter().copied()), TILE_SCALE);
    let mut out = String::new();
    frame.open(&mut out);
    for (label, pts) in &tiles {
        frame.polygon(&mut out, pts, &format!("fill=\"{}\" stroke=\"#000000\" stroke-width=\"0.5\"", color(*label)));
    }
    out.push_str("</svg>\n");
    out
}

/// Raster amoeba: one path of unit runs per row, bounded complement
/// components shaded separately. Row `iy` is drawn at
/// `y = MARGIN + (ny - 1 - iy) * AMOEBA_CELL`.
pub fn amoeba(r: &AmoebaRaster) -> String {
    let (w, h) = (r.nx as f64 * AMOEBA_CELL + 2.0 * MARGIN, r.ny as f64 * AMOEBA_CELL + 2.0 * MARGIN);
    let mut out = String::new();
    writeln!(out, "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w:.3}\" height=\"{h:.3}\" viewBox=\"0 0 {w:.3} {h:.3}\">").unwrap();
    writeln!(out, "<!-- {VERSION} -->").unwrap();
    let bounded: Vec<bool> = r.components.iter().map(|c| c.bounded).collect();
    for (fill, pick) in [("#222222", 0u8), ("#7fc97f", 1u8)] {
        let mut d = String::new();
        for iy in 0..r.ny {
            let y = MARGIN + (r.ny - 1 - iy) as f64 * AMOEBA_CELL;
            let mut ix = 0;
            while ix < r.nx {
                let hit = |ix: usize| {
                    let k = iy * r.nx + ix;
                    match pick {
                        0 => r.member[k],
                        _ => r.labels[k].is_some_and(|c| bounded[c]),
                    }
                };
                if !hit(ix) {
                    ix += 1;
                    continue;
                }
                let start = ix;
                while ix < r.nx && hit(ix) {
                    ix += 1;
                }
                let x = MARGIN + start as f64 * AMOEBA_CELL;
                write!(d, "M{x:.3} {y:.3}h{:.3}v{AMOEBA_CELL:.3}h{:.3}z", (ix - start) as f64 * AMOEBA_CELL, -((ix - start) as f64) * AMOEBA_CELL)
                    .unwrap();
            }
        }
        if !d.is_empty() {
            writeln!(out, "<path fill=\"{fill}\" d=\"{d}\"/>").unwrap();
        }
    }
    out.push_str("</svg>\n");
    out
}

/// Polygon outline with the frozen boundary as dots, both in Euclidean
/// position (oblique coordinates mapped by `to_euclid`).
pub fn limit_shape(poly: &Polygon, boundary: &[(f64, f64)]) -> String {
    let outline: Vec<(f64, f64)> = poly.vertices.iter().map(|&p| to_euclid(p)).collect();
    let frame = Frame::around(outline.iter().copied(), POLYGON_SCALE);
    let mut out = String::new();
    frame.open(&mut out);
    frame.polygon(&mut out, &outline, "fill=\"#f4f4f4\" stroke=\"#000000\" stroke-width=\"1\"");
    for &p in boundary {
        let (x, y) = frame.map(to_euclid(p));
        writeln!(out, "<circle cx=\"{x:.3}\" cy=\"{y:.3}\" r=\"1.000\" fill=\"#d9534f\"/>").unwrap();
    }
    out.push_str("</svg>\n");
    out
}
