//! Contour extraction and static SVG rendering of two KDEs.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataio::{bounding_rect, BoundingRect, PointSet};
use crate::eden::{iso_levels, THRESHOLD_GRID};
use crate::kde::{fit_kde, grid_evaluate, iso_thresholds, DensityGrid};
use crate::report::ScoreReport;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourPolyline {
    pub level: f64,
    /// For closed polylines the last vertex repeats the first.
    pub vertices: Vec<[f64; 2]>,
    pub closed: bool,
}

/// Lattice edge between two neighbouring cell centres: horizontal edges
/// start at `(i, j)` and go to `(i + 1, j)`, vertical ones to `(i, j + 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Edge {
    H(usize, usize),
    V(usize, usize),
}

/// Iso-lines of `grid` at each level, by marching squares over the lattice
/// of cell centres with linear interpolation along edges. Saddle squares are
/// resolved with the mean of the four corners. Levels outside the open range
/// of grid values yield no polylines.
pub fn marching_squares(grid: &DensityGrid, levels: &[f64]) -> Vec<ContourPolyline> {
    let (lo, hi) = (grid.min_value(), grid.max_value());
    levels
        .iter()
        .filter(|&&l| l > lo && l < hi)
        .flat_map(|&l| trace_level(grid, l))
        .collect()
}

fn edge_point(grid: &DensityGrid, e: Edge, level: f64) -> [f64; 2] {
    let ((i0, j0), (i1, j1)) = match e {
        Edge::H(i, j) => ((i, j), (i + 1, j)),
        Edge::V(i, j) => ((i, j), (i, j + 1)),
    };
    let (a, b) = (grid.value(i0, j0), grid.value(i1, j1));
    let t = if a == b { 0.5 } else { ((level - a) / (b - a)).clamp(0.0, 1.0) };
    let pa = grid.cell_center(i0, j0);
    let pb = grid.cell_center(i1, j1);
    [pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1])]
}

fn segments(grid: &DensityGrid, level: f64) -> Vec<(Edge, Edge)> {
    let mut segs = Vec::new();
    for j in 0..grid.ny - 1 {
        for i in 0..grid.nx - 1 {
            let v = [grid.value(i, j), grid.value(i + 1, j), grid.value(i + 1, j + 1), grid.value(i, j + 1)];
            let above = v.map(|x| x >= level);
            // edges: bottom, right, top, left, between corners (0,1), (1,2), (3,2), (0,3)
            let edges = [Edge::H(i, j), Edge::V(i + 1, j), Edge::H(i, j + 1), Edge::V(i, j)];
            let ends = [(0, 1), (1, 2), (3, 2), (0, 3)];
            let crossed: Vec<usize> = (0..4).filter(|&k| above[ends[k].0] != above[ends[k].1]).collect();
            match crossed.len() {
                2 => segs.push((edges[crossed[0]], edges[crossed[1]])),
                4 => {
                    let center_above = v.iter().sum::<f64>() / 4.0 >= level;
                    // cut off the corners not connected through the centre
                    let cut = if above[0] == center_above { [1, 3] } else { [0, 2] };
                    for c in cut {
                        let (a, b) = match c {
                            0 => (0, 3),
                            1 => (0, 1),
                            2 => (1, 2),
                            _ => (2, 3),
                        };
                        segs.push((edges[a], edges[b]));
                    }
                }
                _ => {}
            }
        }
    }
    segs
}

fn trace_level(grid: &DensityGrid, level: f64) -> Vec<ContourPolyline> {
    let segs = segments(grid, level);
    let mut at: HashMap<Edge, Vec<usize>> = HashMap::new();
    for (k, &(a, b)) in segs.iter().enumerate() {
        at.entry(a).or_default().push(k);
        at.entry(b).or_default().push(k);
    }
    let mut used = vec![false; segs.len()];
    let mut out = Vec::new();

    let walk = |start_seg: usize, start_edge: Edge, used: &mut Vec<bool>| -> (Vec<Edge>, bool) {
        let mut path = vec![start_edge];
        let mut seg = start_seg;
        let mut edge = start_edge;
        loop {
            used[seg] = true;
            let (a, b) = segs[seg];
            edge = if a == edge { b } else { a };
            path.push(edge);
            if edge == start_edge {
                return (path, true);
            }
            match at[&edge].iter().find(|&&s| !used[s]) {
                Some(&next) => seg = next,
                None => return (path, false),
            }
        }
    };

    // open chains start at edges touched by a single segment
    let mut starts: Vec<Edge> = at.iter().filter(|(_, v)| v.len() == 1).map(|(e, _)| *e).collect();
    starts.sort_by_key(|e| match *e {
        Edge::H(i, j) => (0, j, i),
        Edge::V(i, j) => (1, j, i),
    });
    for e in starts {
        let s = at[&e][0];
        if !used[s] {
            let (path, closed) = walk(s, e, &mut used);
            out.push((path, closed));
        }
    }
    for s in 0..segs.len() {
        if !used[s] {
            let (path, closed) = walk(s, segs[s].0, &mut used);
            out.push((path, closed));
        }
    }
    out.into_iter()
        .map(|(path, closed)| ContourPolyline {
            level,
            vertices: path.into_iter().map(|e| edge_point(grid, e, level)).collect(),
            closed,
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenderConfig {
    pub width: f64,
    pub height: f64,
    pub margin_frac: f64,
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self { width: 760.0, height: 560.0, margin_frac: 0.1 }
    }
}

/// Contours drawn for each data set.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderedContours {
    pub real: Vec<ContourPolyline>,
    pub synth: Vec<ContourPolyline>,
}

const REAL_COLOR: &str = "#1f77b4";
const SYNTH_COLOR: &str = "#ff7f0e";
const PLOT_LEFT: f64 = 70.0;
const PLOT_TOP: f64 = 20.0;
const PLOT_BOTTOM: f64 = 50.0;
const SIDEBAR: f64 = 220.0;

/// Contours of both KDEs at the five Eden iso-proportion levels, on the
/// grid the thresholds are computed on.
pub fn fit_contours(real: &PointSet, synth: &PointSet, margin_frac: f64) -> Result<(BoundingRect, RenderedContours)> {
    let rect = bounding_rect(&[real, synth], margin_frac)?;
    let levels = iso_levels(5);
    let mut families = Vec::with_capacity(2);
    for ps in [real, synth] {
        let grid = grid_evaluate(&fit_kde(ps)?, rect, THRESHOLD_GRID, THRESHOLD_GRID)?;
        let t = iso_thresholds(&grid, &levels)?;
        families.push(marching_squares(&grid, &t.density_thresholds));
    }
    let synth = families.pop().unwrap();
    let real = families.pop().unwrap();
    Ok((rect, RenderedContours { real, synth }))
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// SVG with both contour families, axes, a legend and, when given, the
/// score table.
pub fn render_svg(real: &PointSet, synth: &PointSet, scores: Option<&ScoreReport>, cfg: &RenderConfig) -> Result<(String, RenderedContours)> {
    if !(cfg.width > SIDEBAR + PLOT_LEFT + 50.0 && cfg.height > PLOT_TOP + PLOT_BOTTOM + 50.0) {
        return Err(Error::InvalidArgument(format!("canvas {}x{} is too small", cfg.width, cfg.height)));
    }
    let (rect, contours) = fit_contours(real, synth, cfg.margin_frac)?;
    let pw = cfg.width - SIDEBAR - PLOT_LEFT;
    let ph = cfg.height - PLOT_TOP - PLOT_BOTTOM;
    let px = |x: f64| PLOT_LEFT + (x - rect.x_min) / rect.width() * pw;
    let py = |y: f64| PLOT_TOP + (rect.y_max - y) / rect.height() * ph;

    let mut s = String::new();
    let (w, h) = (cfg.width, cfg.height);
    writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#).unwrap();
    writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#).unwrap();
    writeln!(s, r#"<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>"#).unwrap();
    writeln!(s, r#"<g id="axes" stroke="black" fill="none">"#).unwrap();
    writeln!(s, r#"<rect x="{PLOT_LEFT}" y="{PLOT_TOP}" width="{pw:.2}" height="{ph:.2}"/>"#).unwrap();
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let (xv, yv) = (rect.x_min + f * rect.width(), rect.y_min + f * rect.height());
        let (x, y) = (px(xv), py(yv));
        let (yb, xl) = (PLOT_TOP + ph, PLOT_LEFT);
        writeln!(s, r#"<line x1="{x:.2}" y1="{yb:.2}" x2="{x:.2}" y2="{:.2}"/>"#, yb + 5.0).unwrap();
        writeln!(s, r#"<line x1="{:.2}" y1="{y:.2}" x2="{xl:.2}" y2="{y:.2}"/>"#, xl - 5.0).unwrap();
        writeln!(s, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle" stroke="none" fill="black">{xv:.3}</text>"#, yb + 18.0).unwrap();
        writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end" stroke="none" fill="black">{yv:.3}</text>"#, xl - 8.0, y + 4.0).unwrap();
    }
    writeln!(s, "</g>").unwrap();

    for (id, color, family) in [("real", REAL_COLOR, &contours.real), ("synth", SYNTH_COLOR, &contours.synth)] {
        writeln!(s, r#"<g id="{id}" stroke="{color}" stroke-width="1.2" fill="none">"#).unwrap();
        for c in family {
            let pts: Vec<String> = c.vertices.iter().map(|v| format!("{:.2},{:.2}", px(v[0]), py(v[1]))).collect();
            writeln!(s, r#"<polyline class="contour" data-level="{:e}" points="{}"/>"#, c.level, pts.join(" ")).unwrap();
        }
        writeln!(s, "</g>").unwrap();
    }

    let lx = cfg.width - SIDEBAR + 20.0;
    writeln!(s, r#"<g id="legend">"#).unwrap();
    for (k, (color, label)) in [(REAL_COLOR, real.label()), (SYNTH_COLOR, synth.label())].into_iter().enumerate() {
        let y = PLOT_TOP + 10.0 + 20.0 * k as f64;
        writeln!(s, r#"<line x1="{lx:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{color}" stroke-width="3"/>"#, lx + 24.0).unwrap();
        writeln!(s, r#"<text x="{:.2}" y="{:.2}">{} ({} points)</text>"#, lx + 32.0, y + 4.0, xml_escape(label), if k == 0 { real.len() } else { synth.len() })
            .unwrap();
    }
    writeln!(s, "</g>").unwrap();

    if let Some(rep) = scores {
        writeln!(s, r#"<g id="scores">"#).unwrap();
        let y0 = PLOT_TOP + 80.0;
        writeln!(s, r#"<text x="{lx:.2}" y="{y0:.2}" font-weight="bold">score</text>"#).unwrap();
        writeln!(s, r#"<text x="{:.2}" y="{y0:.2}" font-weight="bold">value</text>"#, lx + 100.0).unwrap();
        for (k, v) in rep.scores.iter().enumerate() {
            let y = y0 + 18.0 * (k + 1) as f64;
            writeln!(s, r#"<text x="{lx:.2}" y="{y:.2}">{}</text>"#, v.name).unwrap();
            writeln!(s, r#"<text x="{:.2}" y="{y:.2}">{:.3}</text>"#, lx + 100.0, v.value).unwrap();
        }
        writeln!(s, "</g>").unwrap();
    }
    writeln!(s, "</svg>").unwrap();
    Ok((s, contours))
}

pub fn render_fit(
    real: &PointSet,
    synth: &PointSet,
    scores: Option<&ScoreReport>,
    out: impl AsRef<Path>,
) -> Result<RenderedContours> {
    let (svg, contours) = render_svg(real, synth, scores, &RenderConfig::default())?;
    let path = out.as_ref();
    std::fs::write(path, svg).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    Ok(contours)
}
