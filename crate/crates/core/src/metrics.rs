//! Empirical checks of the quasi-isometry estimate between the combinatorial
//! and Euclidean metrics, and of the volume growth of combinatorial balls.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::contact_graph::{ContactGraph, UNREACHED};
use crate::error::{Error, Result};
use crate::faces::{facial_degree_stats, FaceSet};
use crate::io::{fmt_f64, Table};
use crate::par;
use crate::stats::linear_fit;

/// Slack on the lower quasi-isometry bound.
pub const QI_SLACK: f64 = 1e-9;

/// A finite window of an infinite penny graph: how deep each vertex sits
/// below the window boundary (the vertices on outer face walks).
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    /// Combinatorial distance to the nearest boundary vertex.
    pub depth: Vec<u32>,
    /// Largest interior facial degree (`0` if there are no interior faces).
    pub max_facial_degree: usize,
}

impl Window {
    pub fn new(g: &ContactGraph, fs: &FaceSet) -> Self {
        Self {
            depth: g.bfs_multi(&fs.outer_vertices(), None),
            max_facial_degree: facial_degree_stats(fs, true).max,
        }
    }

    pub fn depth_of(&self, v: usize) -> u32 {
        self.depth[v]
    }

    /// Deepest vertex, lowest id on ties.
    pub fn deepest(&self) -> usize {
        let mut best = 0;
        for (v, &d) in self.depth.iter().enumerate() {
            if d != UNREACHED && d > self.depth[best] {
                best = v;
            }
        }
        best
    }

    /// Requires `B_radius(x)` to avoid truncation by the window edge.
    pub fn require_depth(&self, x: usize, radius: u32) -> Result<()> {
        let d = self.depth[x];
        if d == UNREACHED || d < radius {
            return Err(Error::WindowTooSmall(format!(
                "vertex {x} has depth {d} < required {radius}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairCheck {
    pub x: usize,
    pub y: usize,
    pub graph_distance: u32,
    pub euclidean: f64,
    pub upper_ok: bool,
    pub lower_ok: bool,
}

/// Checks `d / (2D) <= |xy| <= d` for one pair with known graph distance.
pub fn check_pair(g: &ContactGraph, max_facial_degree: usize, x: usize, y: usize, d: u32) -> PairCheck {
    let euclidean = g.coords[x].dist(g.coords[y]);
    let d_f = d as f64;
    // each edge has length at most 1 + tol
    let upper_ok = euclidean <= d_f * (1.0 + g.tol);
    let lower_ok = euclidean >= d_f / (2.0 * max_facial_degree as f64) - QI_SLACK;
    PairCheck {
        x,
        y,
        graph_distance: d,
        euclidean,
        upper_ok,
        lower_ok,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuasiIsometryReport {
    /// Maximum interior facial degree `D`.
    pub d_max: usize,
    pub window_margin: u32,
    pub pairs_tested: usize,
    /// Min over pairs of `|xy| / d(x, y)`.
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub lower_constant: f64,
    pub violations: Vec<PairCheck>,
}

/// Samples `pairs` admissible pairs: both endpoints at depth `>= margin` and
/// `1 <= d(x, y) <= margin`, so the window distance equals the distance in
/// any larger graph containing the window.
pub fn quasi_isometry_report(
    g: &ContactGraph,
    fs: &FaceSet,
    window_margin: u32,
    pairs: usize,
    seed: u64,
) -> Result<QuasiIsometryReport> {
    let w = Window::new(g, fs);
    if w.max_facial_degree == 0 {
        return Err(Error::WindowTooSmall("window has no interior faces".into()));
    }
    let admissible: Vec<usize> = (0..g.n())
        .filter(|&v| w.depth[v] != UNREACHED && w.depth[v] >= window_margin)
        .collect();
    if admissible.len() < 2 || window_margin == 0 {
        return Err(Error::WindowTooSmall(format!(
            "{} vertices at depth >= {window_margin}",
            admissible.len()
        )));
    }
    let checks = par::map_range(pairs, |i| -> Option<PairCheck> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        for _ in 0..64 {
            let x = admissible[rng.gen_range(0..admissible.len())];
            let ball = g.ball_layers(x, window_margin).ok()?;
            let cands: Vec<(u32, u32)> = ball
                .into_iter()
                .filter(|&(v, d)| d > 0 && w.depth[v as usize] >= window_margin)
                .collect();
            if cands.is_empty() {
                continue;
            }
            let (y, d) = cands[rng.gen_range(0..cands.len())];
            return Some(check_pair(g, w.max_facial_degree, x, y as usize, d));
        }
        None
    });
    let mut report = QuasiIsometryReport {
        d_max: w.max_facial_degree,
        window_margin,
        pairs_tested: 0,
        min_ratio: f64::INFINITY,
        max_ratio: 0.0,
        lower_constant: 1.0 / (2.0 * w.max_facial_degree as f64),
        violations: Vec::new(),
    };
    for c in checks {
        let c = c.ok_or_else(|| Error::WindowTooSmall("no admissible partner found".into()))?;
        report.pairs_tested += 1;
        let ratio = c.euclidean / c.graph_distance as f64;
        report.min_ratio = report.min_ratio.min(ratio);
        report.max_ratio = report.max_ratio.max(ratio);
        if !(c.upper_ok && c.lower_ok) {
            report.violations.push(c);
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    /// `min |B_R| / R^2` over `R in [1, Rmax]`.
    pub c3: f64,
    /// `max |B_R| / R^2` over `R in [1, Rmax]`.
    pub c4: f64,
    /// Least-squares slope of `ln |B_R|` against `ln R` over `[Rmax/4, Rmax]`.
    pub exponent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeReport {
    pub center: usize,
    pub rmax: u32,
    /// `(R, |B_R|)` for `R = 0..=Rmax`.
    pub sizes: Vec<(u32, usize)>,
    /// `(R, |B_2R| / |B_R|)` for `R = 1..=Rmax/2`.
    pub doubling_ratios: Vec<(u32, f64)>,
    /// Largest doubling ratio.
    pub c1: f64,
    pub fit: GrowthFit,
}

/// Ball sizes around `x` for radii up to `rmax`, from one truncated BFS.
pub fn ball_sizes(g: &ContactGraph, x: usize, rmax: u32) -> Result<Vec<usize>> {
    let layers = g.ball_layers(x, rmax)?;
    let mut counts = vec![0usize; rmax as usize + 1];
    for (_, d) in layers {
        counts[d as usize] += 1;
    }
    let mut acc = 0;
    Ok(counts
        .into_iter()
        .map(|c| {
            acc += c;
            acc
        })
        .collect())
}

/// Exact ball volumes around `x`; requires `B_Rmax(x)` inside the window.
pub fn volume_report(g: &ContactGraph, window: &Window, x: usize, rmax: u32) -> Result<VolumeReport> {
    g.check_vertex(x)?;
    if rmax < 2 {
        return Err(Error::InvalidArgument("rmax must be >= 2".into()));
    }
    window.require_depth(x, rmax)?;
    let sizes = ball_sizes(g, x, rmax)?;
    let doubling_ratios: Vec<(u32, f64)> = (1..=rmax / 2)
        .map(|r| (r, sizes[2 * r as usize] as f64 / sizes[r as usize] as f64))
        .collect();
    let c1 = doubling_ratios.iter().map(|&(_, q)| q).fold(0.0, f64::max);
    let mut c3 = f64::INFINITY;
    let mut c4: f64 = 0.0;
    for (r, &s) in sizes.iter().enumerate().skip(1) {
        let q = s as f64 / (r * r) as f64;
        c3 = c3.min(q);
        c4 = c4.max(q);
    }
    let lo = (rmax / 4).max(1) as usize;
    let (xs, ys): (Vec<f64>, Vec<f64>) = (lo..=rmax as usize)
        .map(|r| ((r as f64).ln(), (sizes[r] as f64).ln()))
        .unzip();
    let exponent = linear_fit(&xs, &ys).map_or(f64::NAN, |f| f.slope);
    Ok(VolumeReport {
        center: x,
        rmax,
        sizes: sizes.iter().enumerate().map(|(r, &s)| (r as u32, s)).collect(),
        doubling_ratios,
        c1,
        fit: GrowthFit { c3, c4, exponent },
    })
}

impl VolumeReport {
    pub fn size(&self, r: u32) -> usize {
        self.sizes[r as usize].1
    }

    /// Rows `(R, ball_size, doubling_ratio)`; the ratio is blank past `Rmax/2`.
    pub fn to_table(&self) -> Table {
        let mut t = Table::new(["R", "ball_size", "doubling_ratio"]);
        for &(r, s) in &self.sizes {
            let ratio = self
                .doubling_ratios
                .get((r as usize).wrapping_sub(1))
                .filter(|(rr, _)| *rr == r)
                .map(|&(_, q)| fmt_f64(q))
                .unwrap_or_default();
            t.push(vec![r.to_string(), s.to_string(), ratio]);
        }
        t
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelativeVolume {
    pub nu: f64,
    pub c2: f64,
    /// Maximizing `(R, r)` with `R > r >= 1`.
    pub worst_pair: (u32, u32),
}

/// `C2 = max over R > r >= 1 of (|B_R| / |B_r|) (r / R)^nu`.
pub fn relative_volume_check(report: &VolumeReport, nu: f64) -> Result<RelativeVolume> {
    if nu.is_nan() || nu <= 0.0 {
        return Err(Error::InvalidArgument("nu must be > 0".into()));
    }
    let mut best = RelativeVolume {
        nu,
        c2: 0.0,
        worst_pair: (0, 0),
    };
    for &(r, sr) in report.sizes.iter().skip(1) {
        for &(big, sb) in report.sizes.iter().filter(|(b, _)| *b > r) {
            let q = sb as f64 / sr as f64 * (r as f64 / big as f64).powf(nu);
            if q > best.c2 {
                best.c2 = q;
                best.worst_pair = (big, r);
            }
        }
    }
    Ok(best)
}
