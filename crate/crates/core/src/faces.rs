//! Faces of the planar embedding, traced from the angular rotation system,
//! and the metric checks on face boundaries.

use std::collections::{BTreeMap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::contact_graph::ContactGraph;
use crate::error::{Error, Result};
use crate::geometry::{closest_param, seg_point_distance, Point2, Segment2};
use crate::par;

/// Slack on the face-metric inequalities.
pub const METRIC_SLACK: f64 = 1e-9;
/// Distance within which a point counts as lying on a boundary edge.
pub const ON_BOUNDARY_TOL: f64 = 1e-9;

/// Counterclockwise order of neighbors around every vertex, starting from
/// angle 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RotationSystem {
    pub order: Vec<Vec<u32>>,
    offsets: Vec<usize>,
}

impl RotationSystem {
    pub fn half_edge_count(&self) -> usize {
        *self.offsets.last().unwrap_or(&0)
    }

    fn index(&self, v: usize, k: usize) -> usize {
        self.offsets[v] + k
    }

    fn position(&self, v: usize, u: u32) -> usize {
        self.order[v]
            .iter()
            .position(|&w| w == u)
            .expect("rotation system is symmetric")
    }

    /// Half-edge following `u -> v` along its face: leave `v` by the
    /// neighbor preceding `u` in counterclockwise order. Bounded faces are
    /// then traversed counterclockwise.
    fn next(&self, u: usize, v: usize) -> (usize, usize) {
        let rot = &self.order[v];
        let k = self.position(v, u as u32);
        let w = rot[(k + rot.len() - 1) % rot.len()];
        (v, w as usize)
    }
}

pub fn build_rotation_system(g: &ContactGraph) -> Result<RotationSystem> {
    let mut order = Vec::with_capacity(g.n());
    let mut offsets = Vec::with_capacity(g.n() + 1);
    offsets.push(0);
    for v in 0..g.n() {
        let origin = g.coords[v];
        let mut nb: Vec<(f64, u32)> = g.adj[v]
            .iter()
            .map(|&u| ((g.coords[u as usize] - origin).angle(), u))
            .collect();
        nb.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        if nb.windows(2).any(|w| w[1].0 - w[0].0 < 1e-12) {
            return Err(Error::DegenerateAngle(v));
        }
        offsets.push(offsets[v] + nb.len());
        order.push(nb.into_iter().map(|(_, u)| u).collect());
    }
    Ok(RotationSystem { order, offsets })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Face {
    /// Tail vertex of each half-edge of the boundary walk, in walk order;
    /// the walk closes from the last entry back to the first.
    pub walk: Vec<u32>,
    pub degree: usize,
    pub is_outer: bool,
    pub signed_area: f64,
}

impl Face {
    /// Directed boundary edges `(tail, head)` in walk order.
    pub fn half_edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        let k = self.walk.len();
        (0..k).map(move |i| (self.walk[i], self.walk[(i + 1) % k]))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaceSet {
    pub faces: Vec<Face>,
    /// `V - E + F = 2` for every connected component (one outer walk each).
    pub euler_check: bool,
    pub components: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FacialDegreeStats {
    pub max: usize,
    pub histogram: BTreeMap<usize, usize>,
    pub faces: usize,
}

fn shoelace(g: &ContactGraph, walk: &[u32]) -> f64 {
    let k = walk.len();
    let mut s = 0.0;
    for i in 0..k {
        let p = g.coords[walk[i] as usize];
        let q = g.coords[walk[(i + 1) % k] as usize];
        s += p.cross(q);
    }
    0.5 * s
}

pub fn enumerate_faces(g: &ContactGraph, rs: &RotationSystem) -> Result<FaceSet> {
    let h = rs.half_edge_count();
    let cap = 2 * g.edge_count().max(1);
    let mut used = vec![false; h];
    let mut faces = Vec::new();
    for v in 0..g.n() {
        for k in 0..rs.order[v].len() {
            if used[rs.index(v, k)] {
                continue;
            }
            let start = (v, rs.order[v][k] as usize);
            let mut cur = start;
            let mut walk = Vec::new();
            loop {
                let idx = rs.index(cur.0, rs.position(cur.0, cur.1 as u32));
                used[idx] = true;
                walk.push(cur.0 as u32);
                if walk.len() > cap {
                    return Err(Error::TraceNonTermination(cap));
                }
                cur = rs.next(cur.0, cur.1);
                if cur == start {
                    break;
                }
            }
            let signed_area = shoelace(g, &walk);
            faces.push(Face {
                degree: walk.len(),
                is_outer: signed_area <= 0.0,
                signed_area,
                walk,
            });
        }
    }
    // an isolated disk still bounds one (outer) face
    for v in 0..g.n() {
        if g.adj[v].is_empty() {
            faces.push(Face {
                walk: vec![v as u32],
                degree: 0,
                is_outer: true,
                signed_area: 0.0,
            });
        }
    }
    let components = g.connected_components().len();
    let euler = g.n() as i64 - g.edge_count() as i64 + faces.len() as i64;
    let outer = faces.iter().filter(|f| f.is_outer).count();
    Ok(FaceSet {
        euler_check: euler == 2 * components as i64 && outer == components,
        components,
        faces,
    })
}

pub fn faces_of(g: &ContactGraph) -> Result<FaceSet> {
    enumerate_faces(g, &build_rotation_system(g)?)
}

impl FaceSet {
    pub fn interior(&self) -> impl Iterator<Item = (usize, &Face)> {
        self.faces.iter().enumerate().filter(|(_, f)| !f.is_outer)
    }

    pub fn degree_sum(&self) -> usize {
        self.faces.iter().map(|f| f.degree).sum()
    }

    /// Vertices on some outer walk, i.e. on the boundary of the window.
    pub fn outer_vertices(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self
            .faces
            .iter()
            .filter(|f| f.is_outer)
            .flat_map(|f| f.walk.iter().map(|&x| x as usize))
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn to_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct FaceOut<'a> {
            walk: &'a [u32],
            degree: usize,
            outer: bool,
        }
        #[derive(Serialize)]
        struct Out<'a> {
            faces: Vec<FaceOut<'a>>,
        }
        let out = Out {
            faces: self
                .faces
                .iter()
                .map(|f| FaceOut {
                    walk: &f.walk,
                    degree: f.degree,
                    outer: f.is_outer,
                })
                .collect(),
        };
        crate::io::to_json_string(&out)
    }
}

pub fn facial_degree_stats(fs: &FaceSet, exclude_outer: bool) -> FacialDegreeStats {
    let mut histogram = BTreeMap::new();
    let mut faces = 0;
    for f in fs.faces.iter().filter(|f| !(exclude_outer && f.is_outer)) {
        *histogram.entry(f.degree).or_insert(0) += 1;
        faces += 1;
    }
    FacialDegreeStats {
        max: histogram.keys().next_back().copied().unwrap_or(0),
        histogram,
        faces,
    }
}

/// The boundary of one face as a metric graph: its distinct vertices and
/// undirected edges, with all-pairs shortest arclength between vertices.
#[derive(Debug, Clone)]
pub struct FaceBoundary {
    pub points: Vec<Point2>,
    /// Undirected edges as local vertex index pairs.
    pub edges: Vec<(usize, usize)>,
    dist: Vec<f64>,
    /// Walk order as local indices, for arclength sampling.
    walk: Vec<usize>,
}

/// Location of a point on a boundary edge: edge index and parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryPoint {
    pub edge: usize,
    pub t: f64,
}

impl FaceBoundary {
    pub fn new(g: &ContactGraph, face: &Face) -> Self {
        let mut local: HashMap<u32, usize> = HashMap::new();
        let mut points = Vec::new();
        let walk: Vec<usize> = face
            .walk
            .iter()
            .map(|&v| {
                *local.entry(v).or_insert_with(|| {
                    points.push(g.coords[v as usize]);
                    points.len() - 1
                })
            })
            .collect();
        let mut edges: Vec<(usize, usize)> = Vec::new();
        if walk.len() >= 2 {
            for i in 0..walk.len() {
                let (a, b) = (walk[i], walk[(i + 1) % walk.len()]);
                let e = (a.min(b), a.max(b));
                if !edges.contains(&e) {
                    edges.push(e);
                }
            }
        }
        let k = points.len();
        let mut dist = vec![f64::INFINITY; k * k];
        for i in 0..k {
            dist[i * k + i] = 0.0;
        }
        for &(a, b) in &edges {
            let l = points[a].dist(points[b]);
            dist[a * k + b] = dist[a * k + b].min(l);
            dist[b * k + a] = dist[b * k + a].min(l);
        }
        for m in 0..k {
            for i in 0..k {
                let dim = dist[i * k + m];
                if dim.is_infinite() {
                    continue;
                }
                for j in 0..k {
                    let cand = dim + dist[m * k + j];
                    if cand < dist[i * k + j] {
                        dist[i * k + j] = cand;
                    }
                }
            }
        }
        Self {
            points,
            edges,
            dist,
            walk,
        }
    }

    fn vdist(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.points.len() + j]
    }

    pub fn segment(&self, e: usize) -> Segment2 {
        let (a, b) = self.edges[e];
        Segment2 {
            a: self.points[a],
            b: self.points[b],
        }
    }

    pub fn point(&self, p: BoundaryPoint) -> Point2 {
        self.segment(p.edge).at(p.t)
    }

    pub fn locate(&self, p: Point2) -> Option<BoundaryPoint> {
        if self.edges.is_empty() {
            return self
                .points
                .iter()
                .any(|&q| q.dist(p) <= ON_BOUNDARY_TOL)
                .then_some(BoundaryPoint { edge: 0, t: 0.0 });
        }
        (0..self.edges.len()).find_map(|e| {
            let s = self.segment(e);
            (seg_point_distance(&s, p) <= ON_BOUNDARY_TOL).then(|| BoundaryPoint {
                edge: e,
                t: closest_param(&s, p),
            })
        })
    }

    /// Shortest path length within the boundary between two located points.
    pub fn distance(&self, p: BoundaryPoint, q: BoundaryPoint) -> f64 {
        if self.edges.is_empty() {
            return 0.0;
        }
        let sp = self.segment(p.edge);
        let sq = self.segment(q.edge);
        let lp = sp.length();
        let lq = sq.length();
        let (pa, pb) = self.edges[p.edge];
        let (qa, qb) = self.edges[q.edge];
        let p_ends = [(pa, p.t * lp), (pb, (1.0 - p.t) * lp)];
        let q_ends = [(qa, q.t * lq), (qb, (1.0 - q.t) * lq)];
        let mut best = if p.edge == q.edge {
            (p.t - q.t).abs() * lp
        } else {
            f64::INFINITY
        };
        for &(u, du) in &p_ends {
            for &(w, dw) in &q_ends {
                best = best.min(du + self.vdist(u, w) + dw);
            }
        }
        best
    }

    pub fn perimeter(&self) -> f64 {
        let k = self.walk.len();
        if k < 2 {
            return 0.0;
        }
        (0..k)
            .map(|i| self.points[self.walk[i]].dist(self.points[self.walk[(i + 1) % k]]))
            .sum()
    }

    /// Point at arclength `s` along the closed walk, located on its edge.
    pub fn at_arclength(&self, s: f64) -> BoundaryPoint {
        let k = self.walk.len();
        let mut s = s.rem_euclid(self.perimeter().max(f64::MIN_POSITIVE));
        for i in 0..k {
            let (a, b) = (self.walk[i], self.walk[(i + 1) % k]);
            let l = self.points[a].dist(self.points[b]);
            if s <= l || i + 1 == k {
                let e = self
                    .edges
                    .iter()
                    .position(|&x| x == (a.min(b), a.max(b)))
                    .expect("walk edge present");
                let frac = (s / l).clamp(0.0, 1.0);
                let t = if a < b { frac } else { 1.0 - frac };
                return BoundaryPoint { edge: e, t };
            }
            s -= l;
        }
        BoundaryPoint { edge: 0, t: 0.0 }
    }

    /// Euclidean diameter; attained at a pair of corners.
    pub fn diameter(&self) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..self.points.len() {
            for j in i + 1..self.points.len() {
                d = d.max(self.points[i].dist(self.points[j]));
            }
        }
        d
    }

    pub fn corners(&self) -> Vec<BoundaryPoint> {
        (0..self.points.len())
            .filter_map(|v| {
                self.edges.iter().position(|&(a, b)| a == v || b == v).map(|e| BoundaryPoint {
                    edge: e,
                    t: if self.edges[e].0 == v { 0.0 } else { 1.0 },
                })
            })
            .collect()
    }
}

/// Shortest arclength along the boundary of `face` between `p` and `q`.
pub fn boundary_distance(g: &ContactGraph, face: &Face, p: Point2, q: Point2) -> Result<f64> {
    let fb = FaceBoundary::new(g, face);
    let lp = fb.locate(p).ok_or(Error::NotOnBoundary(p))?;
    let lq = fb.locate(q).ok_or(Error::NotOnBoundary(q))?;
    Ok(fb.distance(lp, lq))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaceMetricReport {
    pub faces_checked: usize,
    pub pairs_checked: usize,
    /// Max over faces of `diam / (deg / 2)`.
    pub max_diam_ratio: f64,
    /// Max over pairs of `d_boundary / (deg / 2)`.
    pub max_boundary_ratio: f64,
    /// Min over pairs with `d_boundary > 1e-6` of `|xy| / (d_boundary / (2 deg))`.
    pub min_bilip_ratio: f64,
    /// Max over pairs of `|xy| / d_boundary`.
    pub max_chord_ratio: f64,
}

#[derive(Debug, Clone)]
struct FaceCheck {
    pairs: usize,
    diam_ratio: f64,
    boundary_ratio: f64,
    bilip_ratio: f64,
    chord_ratio: f64,
    violation: Option<Error>,
}

fn check_face(
    g: &ContactGraph,
    index: usize,
    face: &Face,
    samples: usize,
    seed: u64,
) -> FaceCheck {
    let fb = FaceBoundary::new(g, face);
    let deg = face.degree as f64;
    let diam = fb.diameter();
    let mut out = FaceCheck {
        pairs: 0,
        diam_ratio: diam / (deg / 2.0),
        boundary_ratio: 0.0,
        bilip_ratio: f64::INFINITY,
        chord_ratio: 0.0,
        violation: None,
    };
    let witness = |what: &str, x: Point2, y: Point2| Error::FaceMetricViolation {
        face: index,
        what: what.to_string(),
        x,
        y,
    };
    if diam > deg / 2.0 + METRIC_SLACK {
        out.violation = Some(witness("diameter bound", fb.points[0], fb.points[0]));
        return out;
    }
    let mut pairs: Vec<(BoundaryPoint, BoundaryPoint)> = Vec::new();
    let corners = fb.corners();
    for i in 0..corners.len() {
        for j in i + 1..corners.len() {
            pairs.push((corners[i], corners[j]));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    let perim = fb.perimeter();
    for k in 0..samples {
        let s = rng.gen_range(0.0..perim);
        // alternate global pairs with pairs straddling a nearby corner
        let t = if k % 2 == 0 {
            rng.gen_range(0.0..perim)
        } else {
            s + rng.gen_range(-0.5..0.5)
        };
        pairs.push((fb.at_arclength(s), fb.at_arclength(t)));
    }
    let c = 1.0 / (2.0 * deg);
    for (p, q) in pairs {
        let x = fb.point(p);
        let y = fb.point(q);
        let d = fb.distance(p, q);
        let e = x.dist(y);
        out.pairs += 1;
        out.boundary_ratio = out.boundary_ratio.max(d / (deg / 2.0));
        // ratios only where rounding in d cannot dominate
        if d > 1e-6 {
            out.bilip_ratio = out.bilip_ratio.min(e / (c * d));
            out.chord_ratio = out.chord_ratio.max(e / d);
        }
        if d > deg / 2.0 + METRIC_SLACK {
            out.violation = Some(witness("boundary distance bound", x, y));
        } else if e > d + METRIC_SLACK {
            out.violation = Some(witness("chord upper bound", x, y));
        } else if c * d > e + METRIC_SLACK {
            out.violation = Some(witness("bi-Lipschitz lower bound", x, y));
        }
        if out.violation.is_some() {
            break;
        }
    }
    out
}

/// Checks the diameter bound, the boundary-distance bound, and both
/// bi-Lipschitz bounds on every interior face. Corner pairs are always
/// included; `samples_per_face` further arclength-uniform pairs are drawn
/// from a per-face stream of `seed`.
pub fn verify_face_metrics(
    g: &ContactGraph,
    fs: &FaceSet,
    samples_per_face: usize,
    seed: u64,
) -> Result<FaceMetricReport> {
    let interior: Vec<(usize, &Face)> = fs.interior().collect();
    let checks = par::map_slice(&interior, |&(i, f)| check_face(g, i, f, samples_per_face, seed));
    let mut report = FaceMetricReport {
        faces_checked: 0,
        pairs_checked: 0,
        max_diam_ratio: 0.0,
        max_boundary_ratio: 0.0,
        min_bilip_ratio: f64::INFINITY,
        max_chord_ratio: 0.0,
    };
    for c in checks {
        if let Some(v) = c.violation {
            return Err(v);
        }
        report.faces_checked += 1;
        report.pairs_checked += c.pairs;
        report.max_diam_ratio = report.max_diam_ratio.max(c.diam_ratio);
        report.max_boundary_ratio = report.max_boundary_ratio.max(c.boundary_ratio);
        report.min_bilip_ratio = report.min_bilip_ratio.min(c.bilip_ratio);
        report.max_chord_ratio = report.max_chord_ratio.max(c.chord_ratio);
    }
    Ok(report)
}
