//! Penny configurations: finite sets of unit-diameter disks with disjoint
//! interiors, described by their centers.

use std::collections::VecDeque;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{circle_apex, Point2, HALF_SQRT3};
use crate::grid::BucketGrid;
use crate::par;

pub const DEFAULT_TOL: f64 = 1e-9;
pub const MAX_DISKS: u64 = 10_000_000;
pub const MAX_CONSECUTIVE_REJECTIONS: u64 = 10_000;
/// Largest contact degree of a unit disk among disjoint unit disks.
pub const MAX_CONTACT_DEGREE: usize = 6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PennyConfig {
    pub tol: f64,
    pub label: String,
    #[serde(with = "centers_as_pairs")]
    pub centers: Vec<Point2>,
}

mod centers_as_pairs {
    use super::Point2;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(c: &[Point2], s: S) -> Result<S::Ok, S::Error> {
        let pairs: Vec<[f64; 2]> = c.iter().map(|p| [p.x, p.y]).collect();
        pairs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Point2>, D::Error> {
        let pairs = Vec::<[f64; 2]>::deserialize(d)?;
        Ok(pairs.into_iter().map(|[x, y]| Point2::new(x, y)).collect())
    }
}

impl PennyConfig {
    pub fn new(centers: Vec<Point2>, label: impl Into<String>) -> Self {
        Self {
            tol: DEFAULT_TOL,
            label: label.into(),
            centers,
        }
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn to_json(&self) -> Result<String> {
        crate::io::to_json_string(self)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s)?;
        if cfg.centers.is_empty() {
            return Err(Error::InvalidArgument("configuration has no centers".into()));
        }
        if cfg.centers.iter().any(|p| !p.is_finite()) || !(cfg.tol >= 0.0 && cfg.tol < 0.5) {
            return Err(Error::InvalidArgument("non-finite center or bad tol".into()));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Grid with cells wide enough that every tangent pair lies in adjacent cells.
    pub(crate) fn contact_grid(&self) -> BucketGrid {
        BucketGrid::from_points(1.0 + 4.0 * self.tol, &self.centers)
    }
}

fn check_size(requested: u64) -> Result<()> {
    if requested > MAX_DISKS {
        return Err(Error::SizeOverflow {
            requested,
            cap: MAX_DISKS,
        });
    }
    Ok(())
}

/// `w x h` disks centered at the integer points `(i, j)`.
pub fn gen_square_lattice(w: usize, h: usize) -> Result<PennyConfig> {
    if w == 0 || h == 0 {
        return Err(Error::InvalidArgument("lattice sides must be >= 1".into()));
    }
    check_size(w as u64 * h as u64)?;
    let mut centers = Vec::with_capacity(w * h);
    for j in 0..h {
        for i in 0..w {
            centers.push(Point2::new(i as f64, j as f64));
        }
    }
    Ok(PennyConfig::new(centers, format!("square {w}x{h}")))
}

/// Rhombic window `i * (1, 0) + j * (1/2, sqrt3/2)`, `0 <= i < cols`, `0 <= j < rows`.
pub fn gen_triangular_lattice(rows: usize, cols: usize) -> Result<PennyConfig> {
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidArgument("lattice sides must be >= 1".into()));
    }
    check_size(rows as u64 * cols as u64)?;
    let mut centers = Vec::with_capacity(rows * cols);
    for j in 0..rows {
        for i in 0..cols {
            centers.push(triangular_point(i as i64, j as i64));
        }
    }
    Ok(PennyConfig::new(centers, format!("triangular {rows}x{cols}")))
}

pub fn triangular_point(i: i64, j: i64) -> Point2 {
    Point2::new(i as f64 + 0.5 * j as f64, HALF_SQRT3 * j as f64)
}

/// Inverse of [`triangular_point`] by rounding.
pub fn triangular_index(p: Point2) -> (i64, i64) {
    let j = (p.y / HALF_SQRT3).round() as i64;
    let i = (p.x - 0.5 * j as f64).round() as i64;
    (i, j)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthOptions {
    pub tol: f64,
    /// Probability of moving the candidate to the nearest free pocket
    /// (a position tangent to the attachment disk and one of its near
    /// neighbors) instead of keeping the raw random-angle position.
    pub pocket_probability: f64,
}

impl Default for GrowthOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            pocket_probability: 0.85,
        }
    }
}

fn angular_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(std::f64::consts::TAU);
    d.min(std::f64::consts::TAU - d)
}

struct Growth {
    centers: Vec<Point2>,
    grid: BucketGrid,
    tol: f64,
}

impl Growth {
    fn is_free(&self, p: Point2) -> bool {
        let mut free = true;
        self.grid.for_each_near(p, |id| {
            if free && self.centers[id as usize].dist(p) < 1.0 - self.tol {
                free = false;
            }
        });
        free
    }

    fn best_pocket(&self, anchor: usize, theta: f64) -> Option<Point2> {
        let a = self.centers[anchor];
        let mut pockets: Vec<(f64, Point2)> = Vec::new();
        // pocket partners lie within distance 2 of the anchor
        self.grid.for_each_in_block(a, 2, |id| {
            let id = id as usize;
            if id == anchor {
                return;
            }
            let b = self.centers[id];
            let d = a.dist(b);
            if d > 2.0 || d < 1.0 - self.tol {
                return;
            }
            for left in [true, false] {
                if let Some(p) = circle_apex(a, b, 1.0, 1.0, left) {
                    pockets.push((angular_gap((p - a).angle(), theta), p));
                }
            }
        });
        pockets.sort_by(|x, y| {
            x.0.total_cmp(&y.0)
                .then(x.1.x.total_cmp(&y.1.x))
                .then(x.1.y.total_cmp(&y.1.y))
        });
        pockets.into_iter().map(|(_, p)| p).find(|&p| self.is_free(p))
    }

    fn push(&mut self, p: Point2) {
        let id = self.centers.len() as u32;
        self.centers.push(p);
        self.grid.insert(p, id);
    }
}

/// Random connected penny configuration grown by tangent attachment.
pub fn gen_tangency_growth(n: usize, seed: u64) -> Result<PennyConfig> {
    gen_tangency_growth_with(n, seed, GrowthOptions::default())
}

/// Each step picks an existing disk uniformly and an angle uniformly in
/// `[0, 2pi)`. The candidate sits at unit distance from that disk, possibly
/// moved to the nearest free pocket, and is rejected if it overlaps any disk.
pub fn gen_tangency_growth_with(n: usize, seed: u64, opts: GrowthOptions) -> Result<PennyConfig> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be >= 1".into()));
    }
    check_size(n as u64)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut st = Growth {
        centers: Vec::with_capacity(n),
        grid: BucketGrid::new(1.0 + 4.0 * opts.tol),
        tol: opts.tol,
    };
    st.push(Point2::new(0.0, 0.0));
    let mut rejections = 0u64;
    while st.centers.len() < n {
        let anchor = rng.gen_range(0..st.centers.len());
        let theta = rng.gen_range(0.0..std::f64::consts::TAU);
        let use_pocket = rng.gen::<f64>() < opts.pocket_probability;
        let raw = st.centers[anchor] + Point2::polar(1.0, theta);
        let placed = if use_pocket {
            st.best_pocket(anchor, theta).or_else(|| st.is_free(raw).then_some(raw))
        } else {
            st.is_free(raw).then_some(raw)
        };
        match placed {
            Some(p) => {
                st.push(p);
                rejections = 0;
            }
            None => {
                rejections += 1;
                if rejections >= MAX_CONSECUTIVE_REJECTIONS {
                    return Err(Error::PlacementExhausted(rejections));
                }
            }
        }
    }
    let mut cfg = PennyConfig::new(st.centers, format!("growth n={n} seed={seed}"));
    cfg.tol = opts.tol;
    Ok(cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    /// Smallest center distance among pairs in neighboring grid cells;
    /// `None` when no two centers are that close.
    pub min_pair_distance: Option<f64>,
    pub tangent_pair_count: usize,
    pub max_contact_degree: usize,
    pub is_connected_contact: bool,
}

struct VertexScan {
    contacts: Vec<u32>,
    min_distance: f64,
    overlap: Option<(usize, f64)>,
}

/// Per-vertex tangent neighbors (sorted), plus overlap detection.
pub(crate) fn scan_contacts(cfg: &PennyConfig) -> Result<Vec<Vec<u32>>> {
    let grid = cfg.contact_grid();
    let tol = cfg.tol;
    let scans = par::map_range(cfg.len(), |i| {
        let p = cfg.centers[i];
        let mut s = VertexScan {
            contacts: Vec::new(),
            min_distance: f64::INFINITY,
            overlap: None,
        };
        grid.for_each_near(p, |j| {
            let j = j as usize;
            if j == i {
                return;
            }
            let d = p.dist(cfg.centers[j]);
            s.min_distance = s.min_distance.min(d);
            if d < 1.0 - tol {
                if s.overlap.is_none_or(|(k, _)| j < k) {
                    s.overlap = Some((j, d));
                }
            } else if d <= 1.0 + tol {
                s.contacts.push(j as u32);
            }
        });
        s.contacts.sort_unstable();
        s
    });
    let mut out = Vec::with_capacity(scans.len());
    for (i, s) in scans.into_iter().enumerate() {
        if let Some((j, distance)) = s.overlap {
            return Err(Error::OverlapDetected {
                i: i.min(j),
                j: i.max(j),
                distance,
            });
        }
        out.push(s.contacts);
    }
    Ok(out)
}

fn min_near_distance(cfg: &PennyConfig) -> Option<f64> {
    let grid = cfg.contact_grid();
    let mins = par::map_range(cfg.len(), |i| {
        let p = cfg.centers[i];
        let mut m = f64::INFINITY;
        grid.for_each_near(p, |j| {
            if j as usize != i {
                m = m.min(p.dist(cfg.centers[j as usize]));
            }
        });
        m
    });
    let m = mins.into_iter().fold(f64::INFINITY, f64::min);
    m.is_finite().then_some(m)
}

pub(crate) fn is_connected(adj: &[Vec<u32>]) -> bool {
    if adj.is_empty() {
        return true;
    }
    let mut seen = vec![false; adj.len()];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    let mut count = 1;
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            let v = v as usize;
            if !seen[v] {
                seen[v] = true;
                count += 1;
                queue.push_back(v);
            }
        }
    }
    count == adj.len()
}

pub fn validate(cfg: &PennyConfig) -> Result<ValidationReport> {
    if cfg.centers.iter().any(|p| !p.is_finite()) {
        return Err(Error::InvalidArgument("non-finite center".into()));
    }
    let adj = scan_contacts(cfg)?;
    let tangent_pair_count = adj.iter().map(Vec::len).sum::<usize>() / 2;
    let max_contact_degree = adj.iter().map(Vec::len).max().unwrap_or(0);
    Ok(ValidationReport {
        min_pair_distance: min_near_distance(cfg),
        tangent_pair_count,
        max_contact_degree,
        is_connected_contact: is_connected(&adj),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    // Exhaustive O(n^2) pair count, independent of the bucket grid.
    fn brute_pairs(cfg: &PennyConfig) -> (usize, Vec<usize>) {
        let n = cfg.len();
        let mut deg = vec![0; n];
        let mut pairs = 0;
        for i in 0..n {
            for j in i + 1..n {
                let d = cfg.centers[i].dist(cfg.centers[j]);
                if (d - 1.0).abs() <= cfg.tol {
                    pairs += 1;
                    deg[i] += 1;
                    deg[j] += 1;
                }
            }
        }
        (pairs, deg)
    }

    #[test]
    fn square_lattice_counts() {
        let one = gen_square_lattice(1, 1).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(validate(&one).unwrap().tangent_pair_count, 0);
        let cfg = gen_square_lattice(3, 3).unwrap();
        let (pairs, deg) = brute_pairs(&cfg);
        assert_eq!(pairs, 12);
        assert_eq!(*deg.iter().max().unwrap(), 4);
        let r = validate(&cfg).unwrap();
        assert_eq!(r.min_pair_distance, Some(1.0));
        assert_eq!(r.tangent_pair_count, 12);
        assert_eq!(r.max_contact_degree, 4);
        assert!(r.is_connected_contact);
    }

    #[test]
    fn triangular_lattice_counts() {
        let line = gen_triangular_lattice(1, 3).unwrap();
        assert_eq!(validate(&line).unwrap().tangent_pair_count, 2);
        let rh = gen_triangular_lattice(2, 2).unwrap();
        assert_eq!(brute_pairs(&rh).0, 5);
        assert_eq!(validate(&rh).unwrap().tangent_pair_count, 5);
        let t = gen_triangular_lattice(3, 3).unwrap();
        let (_, deg) = brute_pairs(&t);
        // vertex (1, 1) is the interior one
        assert_eq!(deg[4], 6);
        assert_eq!(validate(&t).unwrap().max_contact_degree, 6);
    }

    #[test]
    fn overlap_detected() {
        let cfg = PennyConfig::new(vec![Point2::new(0.0, 0.0), Point2::new(0.5, 0.0)], "bad");
        assert!(matches!(validate(&cfg), Err(Error::OverlapDetected { i: 0, j: 1, .. })));
    }

    #[test]
    fn size_cap() {
        assert!(matches!(
            gen_square_lattice(100_000, 1_000),
            Err(Error::SizeOverflow { .. })
        ));
    }

    #[test]
    fn growth_small_cases() {
        let one = gen_tangency_growth(1, 3).unwrap();
        assert_eq!(one.centers, vec![Point2::new(0.0, 0.0)]);
        for seed in 0..20 {
            let two = gen_tangency_growth(2, seed).unwrap();
            assert_eq!(validate(&two).unwrap().tangent_pair_count, 1);
        }
    }

    #[test]
    fn growth_matches_brute_force_and_is_deterministic() {
        let a = gen_tangency_growth(400, 11).unwrap();
        let b = gen_tangency_growth(400, 11).unwrap();
        assert_eq!(a, b);
        let r = validate(&a).unwrap();
        let (pairs, deg) = brute_pairs(&a);
        assert_eq!(r.tangent_pair_count, pairs);
        assert_eq!(r.max_contact_degree, *deg.iter().max().unwrap());
        assert!(r.is_connected_contact);
        assert!(r.max_contact_degree <= MAX_CONTACT_DEGREE);
        // every pair, not just near ones, is at least 1 - tol apart
        for i in 0..a.len() {
            for j in i + 1..a.len() {
                assert!(a.centers[i].dist(a.centers[j]) >= 1.0 - a.tol);
            }
        }
    }

    #[test]
    fn growth_ten_thousand() {
        let cfg = gen_tangency_growth(10_000, 7).unwrap();
        let r = validate(&cfg).unwrap();
        assert!(r.max_contact_degree <= 6);
        assert!(r.is_connected_contact);
    }

    #[test]
    fn json_round_trip_is_exact() {
        let cfg = gen_triangular_lattice(3, 4).unwrap();
        let s = cfg.to_json().unwrap();
        assert!(s.contains("\"centers\""));
        let back = PennyConfig::from_json(&s).unwrap();
        assert_eq!(back, cfg);
        assert!(PennyConfig::from_json("{\"tol\":1e-9,\"label\":\"x\",\"centers\":[[0,0]],\"extra\":1}").is_err());
    }

    #[test]
    fn triangular_index_inverts_points() {
        for i in -5..5 {
            for j in -5..5 {
                assert_eq!(triangular_index(triangular_point(i, j)), (i, j));
            }
        }
    }
}
