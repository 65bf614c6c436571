//! SVG 1.1 scene of a penny configuration: disks to scale, contact segments,
//! optional face shading and per-vertex value labels.

use std::fmt::Write as _;
use std::path::Path;

use crate::contact_graph::ContactGraph;
use crate::error::Result;
use crate::faces::FaceSet;
use crate::laplace::ScalarField;

/// Pixels per unit length.
pub const SCALE: f64 = 40.0;

fn num(x: f64) -> String {
    let s = format!("{x:.3}");
    if s == "-0.000" { "0.000".into() } else { s }
}

fn label(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v:.3}")
    }
}

/// Elements are emitted in a fixed order: faces, edges, disks, labels, each by id.
pub fn render_svg(g: &ContactGraph, faces: Option<&FaceSet>, field: Option<&ScalarField>) -> String {
    let (mut x0, mut y0, mut x1, mut y1) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for (k, p) in g.coords.iter().enumerate() {
        if k == 0 {
            (x0, y0, x1, y1) = (p.x, p.y, p.x, p.y);
        }
        x0 = x0.min(p.x);
        y0 = y0.min(p.y);
        x1 = x1.max(p.x);
        y1 = y1.max(p.y);
    }
    let margin = 1.0;
    let w = (x1 - x0 + 2.0 * margin) * SCALE;
    let h = (y1 - y0 + 2.0 * margin) * SCALE;
    // flip y so the picture is in the usual orientation
    let px = |x: f64| (x - x0 + margin) * SCALE;
    let py = |y: f64| (y1 - y + margin) * SCALE;

    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">",
        num(w),
        num(h),
        num(w),
        num(h)
    );
    let _ = writeln!(s, "<rect x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" fill=\"white\"/>", num(w), num(h));
    if let Some(fs) = faces {
        s.push_str("<g id=\"faces\" fill=\"#dde8f4\" stroke=\"none\">\n");
        for (_, f) in fs.interior() {
            let pts: Vec<String> = f
                .walk
                .iter()
                .map(|&v| {
                    let p = g.coords[v as usize];
                    format!("{},{}", num(px(p.x)), num(py(p.y)))
                })
                .collect();
            let _ = writeln!(s, "<polygon points=\"{}\"/>", pts.join(" "));
        }
        s.push_str("</g>\n");
    }
    s.push_str("<g id=\"edges\" stroke=\"#444444\" stroke-width=\"1.5\">\n");
    for [a, b] in g.edges() {
        let (p, q) = (g.coords[a as usize], g.coords[b as usize]);
        let _ = writeln!(
            s,
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\"/>",
            num(px(p.x)),
            num(py(p.y)),
            num(px(q.x)),
            num(py(q.y))
        );
    }
    s.push_str("</g>\n");
    s.push_str("<g id=\"disks\" fill=\"none\" stroke=\"#1f4e8c\" stroke-width=\"1\">\n");
    for p in &g.coords {
        let _ = writeln!(
            s,
            "<circle cx=\"{}\" cy=\"{}\" r=\"{}\"/>",
            num(px(p.x)),
            num(py(p.y)),
            num(0.5 * SCALE)
        );
    }
    s.push_str("</g>\n");
    if let Some(f) = field {
        s.push_str("<g id=\"labels\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\" dominant-baseline=\"central\">\n");
        for (v, val) in f.iter() {
            if let Some(p) = g.coords.get(v) {
                let _ = writeln!(s, "<text x=\"{}\" y=\"{}\">{}</text>", num(px(p.x)), num(py(p.y)), label(val));
            }
        }
        s.push_str("</g>\n");
    }
    s.push_str("</svg>\n");
    s
}

pub fn write_svg(path: &Path, g: &ContactGraph, faces: Option<&FaceSet>, field: Option<&ScalarField>) -> Result<()> {
    std::fs::write(path, render_svg(g, faces, field))?;
    Ok(())
}
