//! Batch runs of the separation estimates: a seeded random suite and an
//! exhaustive check over the contact edges of a concrete configuration.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::{
    check_separation, sample_lemma_config, sample_triangle_config, seg_point_distance, seg_seg_distance,
    segments_intersect, Segment2, ATTAIN_TOL, BOUND_SLACK, HALF_SQRT3,
};
use crate::grid::BucketGrid;
use crate::packing::PennyConfig;
use crate::par;

const CHUNK: usize = 4096;
/// Witnesses kept per report.
pub const MAX_WITNESSES: usize = 16;
/// Samples with distance below `sqrt3/2 + NEAR_CRITICAL` count as near-critical.
pub const NEAR_CRITICAL: f64 = 0.05;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of sample `i` in a suite seeded with `seed`.
pub fn sample_seed(seed: u64, i: u64) -> u64 {
    splitmix64(seed ^ splitmix64(i))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub index: u64,
    pub suite: String,
    pub what: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub samples: u64,
    pub seed: u64,
    pub intersections: u64,
    pub min_distance: f64,
    pub bound_violations: u64,
    /// Largest `|min distance - min endpoint distance|`.
    pub max_attainment_gap: f64,
    pub attainment_failures: u64,
    pub near_critical: u64,
    pub triangle_min: f64,
    pub triangle_violations: u64,
    pub sampler_failures: u64,
    pub witnesses: Vec<Witness>,
}

impl SuiteReport {
    fn empty(samples: u64, seed: u64) -> Self {
        Self {
            samples,
            seed,
            intersections: 0,
            min_distance: f64::INFINITY,
            bound_violations: 0,
            max_attainment_gap: 0.0,
            attainment_failures: 0,
            near_critical: 0,
            triangle_min: f64::INFINITY,
            triangle_violations: 0,
            sampler_failures: 0,
            witnesses: Vec::new(),
        }
    }

    pub fn violation_count(&self) -> u64 {
        self.intersections + self.bound_violations + self.attainment_failures + self.triangle_violations + self.sampler_failures
    }

    pub fn ok(&self) -> bool {
        self.violation_count() == 0
    }

    fn witness(&mut self, index: u64, suite: &str, what: &str, value: f64) {
        if self.witnesses.len() < MAX_WITNESSES {
            self.witnesses.push(Witness {
                index,
                suite: suite.into(),
                what: what.into(),
                value,
            });
        }
    }

    fn merge(&mut self, o: SuiteReport) {
        self.intersections += o.intersections;
        self.min_distance = self.min_distance.min(o.min_distance);
        self.bound_violations += o.bound_violations;
        self.max_attainment_gap = self.max_attainment_gap.max(o.max_attainment_gap);
        self.attainment_failures += o.attainment_failures;
        self.near_critical += o.near_critical;
        self.triangle_min = self.triangle_min.min(o.triangle_min);
        self.triangle_violations += o.triangle_violations;
        self.sampler_failures += o.sampler_failures;
        for w in o.witnesses {
            if self.witnesses.len() < MAX_WITNESSES {
                self.witnesses.push(w);
            }
        }
    }
}

fn run_one(r: &mut SuiteReport, i: u64, seed: u64) {
    let s = sample_seed(seed, i);
    match sample_lemma_config(s).and_then(|c| check_separation(&c)) {
        Ok(rep) => {
            r.min_distance = r.min_distance.min(rep.min_distance);
            if rep.intersects {
                r.intersections += 1;
                r.witness(i, "pair", "intersection", rep.min_distance);
            }
            if !rep.bound_holds() {
                r.bound_violations += 1;
                r.witness(i, "pair", "distance below bound", rep.min_distance);
            }
            let gap = (rep.min_distance - rep.endpoint_min).abs();
            r.max_attainment_gap = r.max_attainment_gap.max(gap);
            if gap > ATTAIN_TOL {
                r.attainment_failures += 1;
                r.witness(i, "pair", "minimum not attained at an endpoint", gap);
            }
            if rep.min_distance < HALF_SQRT3 + NEAR_CRITICAL {
                r.near_critical += 1;
            }
        }
        Err(_) => {
            r.sampler_failures += 1;
            r.witness(i, "pair", "sampler failure", f64::NAN);
        }
    }
    match sample_triangle_config(s) {
        Ok(t) => {
            let d = t.apex_distance();
            r.triangle_min = r.triangle_min.min(d);
            if d < HALF_SQRT3 - BOUND_SLACK {
                r.triangle_violations += 1;
                r.witness(i, "triangle", "distance below bound", d);
            }
        }
        Err(_) => {
            r.sampler_failures += 1;
            r.witness(i, "triangle", "sampler failure", f64::NAN);
        }
    }
}

/// Runs `samples` independent pair and triangle configurations.
pub fn run_separation_suite(samples: u64, seed: u64) -> SuiteReport {
    let chunks = (samples as usize).div_ceil(CHUNK);
    let parts = par::map_range(chunks, |c| {
        let mut r = SuiteReport::empty(0, seed);
        let lo = (c * CHUNK) as u64;
        let hi = (lo + CHUNK as u64).min(samples);
        for i in lo..hi {
            run_one(&mut r, i, seed);
        }
        r
    });
    let mut out = SuiteReport::empty(samples, seed);
    for p in parts {
        out.merge(p);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairWitness {
    pub items: [usize; 4],
    pub what: String,
    pub value: f64,
}

/// Separation checks on the embedded contact graph of one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigLemmaReport {
    pub vertices: usize,
    pub edges: usize,
    /// Center pairs closer than `1 - tol`.
    pub overlaps: usize,
    pub edge_pairs_checked: u64,
    pub edge_pair_min: Option<f64>,
    pub vertex_edge_checked: u64,
    pub vertex_edge_min: Option<f64>,
    pub violations: Vec<PairWitness>,
    pub violation_count: u64,
}

impl ConfigLemmaReport {
    pub fn ok(&self) -> bool {
        self.overlaps == 0 && self.violation_count == 0
    }
}

/// Every pair of vertex-disjoint contact segments must be `>= sqrt3/2` apart
/// and every center must be `>= sqrt3/2` from each segment it is not on.
/// Overlapping disks are counted, not rejected, so a perturbed configuration
/// is reported rather than refused.
pub fn check_configuration(cfg: &PennyConfig) -> Result<ConfigLemmaReport> {
    let n = cfg.len();
    let tol = cfg.tol;
    let grid = cfg.contact_grid();
    let scans = par::map_range(n, |i| {
        let p = cfg.centers[i];
        let (mut nb, mut over) = (Vec::new(), Vec::new());
        grid.for_each_near(p, |j| {
            let j = j as usize;
            if j <= i {
                return;
            }
            let d = p.dist(cfg.centers[j]);
            if d < 1.0 - tol {
                over.push((j, d));
            } else if d <= 1.0 + tol {
                nb.push(j);
            }
        });
        nb.sort_unstable();
        over.sort_by_key(|o| o.0);
        (i, nb, over)
    });
    let mut edges = Vec::new();
    let mut violations = Vec::new();
    let mut violation_count = 0u64;
    let mut overlaps = 0;
    for (i, nb, over) in &scans {
        for &j in nb {
            edges.push((*i, j));
        }
        for &(j, d) in over {
            overlaps += 1;
            violation_count += 1;
            if violations.len() < MAX_WITNESSES {
                violations.push(PairWitness {
                    items: [*i, j, *i, j],
                    what: "overlapping disks".into(),
                    value: d,
                });
            }
        }
    }
    let segs: Vec<Segment2> = edges
        .iter()
        .map(|&(a, b)| Segment2 {
            a: cfg.centers[a],
            b: cfg.centers[b],
        })
        .collect();
    let mids: Vec<_> = segs.iter().map(|s| s.at(0.5)).collect();
    let mid_grid = BucketGrid::from_points(2.0, &mids);
    let bound = HALF_SQRT3 - BOUND_SLACK;

    struct Part {
        pairs: u64,
        pair_min: f64,
        vert: u64,
        vert_min: f64,
        bad: Vec<PairWitness>,
    }
    let parts = par::map_range(edges.len(), |e| {
        let (a, b) = edges[e];
        let mut part = Part {
            pairs: 0,
            pair_min: f64::INFINITY,
            vert: 0,
            vert_min: f64::INFINITY,
            bad: Vec::new(),
        };
        mid_grid.for_each_near(mids[e], |f| {
            let f = f as usize;
            if f <= e {
                return;
            }
            let (c, d) = edges[f];
            if c == a || c == b || d == a || d == b {
                return;
            }
            part.pairs += 1;
            let dist = if segments_intersect(&segs[e], &segs[f]) {
                0.0
            } else {
                seg_seg_distance(&segs[e], &segs[f])
            };
            part.pair_min = part.pair_min.min(dist);
            if dist < bound {
                part.bad.push(PairWitness {
                    items: [a, b, c, d],
                    what: "contact segments too close".into(),
                    value: dist,
                });
            }
        });
        grid.for_each_in_block(mids[e], 2, |v| {
            let v = v as usize;
            if v == a || v == b {
                return;
            }
            part.vert += 1;
            let dist = seg_point_distance(&segs[e], cfg.centers[v]);
            part.vert_min = part.vert_min.min(dist);
            if dist < bound {
                part.bad.push(PairWitness {
                    items: [a, b, v, v],
                    what: "center too close to a contact segment".into(),
                    value: dist,
                });
            }
        });
        part
    });
    let (mut pairs, mut pair_min, mut vert, mut vert_min) = (0, f64::INFINITY, 0, f64::INFINITY);
    for p in parts {
        pairs += p.pairs;
        pair_min = pair_min.min(p.pair_min);
        vert += p.vert;
        vert_min = vert_min.min(p.vert_min);
        violation_count += p.bad.len() as u64;
        for w in p.bad {
            if violations.len() < MAX_WITNESSES {
                violations.push(w);
            }
        }
    }
    Ok(ConfigLemmaReport {
        vertices: n,
        edges: edges.len(),
        overlaps,
        edge_pairs_checked: pairs,
        edge_pair_min: pair_min.is_finite().then_some(pair_min),
        vertex_edge_checked: vert,
        vertex_edge_min: vert_min.is_finite().then_some(vert_min),
        violations,
        violation_count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point2;
    use crate::packing::{gen_square_lattice, gen_tangency_growth, gen_triangular_lattice};

    #[test]
    fn suite_is_clean_and_deterministic() {
        let a = run_separation_suite(20_000, 0);
        assert!(a.ok(), "{:?}", a.witnesses);
        assert!(a.min_distance >= HALF_SQRT3 - BOUND_SLACK);
        assert!(a.min_distance < HALF_SQRT3 + 1e-3);
        assert!(a.near_critical as f64 >= 0.3 * 20_000.0);
        assert!(a.triangle_min >= HALF_SQRT3 - BOUND_SLACK);
        let b = par::with_workers(Some(1), || run_separation_suite(20_000, 0));
        assert_eq!(a, b);
        assert_ne!(run_separation_suite(100, 1).min_distance, run_separation_suite(100, 2).min_distance);
    }

    #[test]
    fn lattices_meet_bounds() {
        let sq = check_configuration(&gen_square_lattice(12, 12).unwrap()).unwrap();
        assert!(sq.ok());
        assert_eq!(sq.vertex_edge_min, Some(1.0));
        let tri = check_configuration(&gen_triangular_lattice(12, 12).unwrap()).unwrap();
        assert!(tri.ok());
        // equilateral triangles: apex at exactly sqrt3/2 from the opposite side
        assert!((tri.vertex_edge_min.unwrap() - HALF_SQRT3).abs() < 1e-12);
        assert!((tri.edge_pair_min.unwrap() - HALF_SQRT3).abs() < 1e-12);
        assert!(check_configuration(&gen_tangency_growth(3000, 1).unwrap()).unwrap().ok());
    }

    #[test]
    fn perturbation_is_reported() {
        let mut cfg = gen_triangular_lattice(6, 6).unwrap();
        // push one center toward a neighbor
        cfg.centers[14] = cfg.centers[14] + Point2::new(0.2, 0.0);
        let r = check_configuration(&cfg).unwrap();
        assert!(!r.ok());
        assert!(r.overlaps >= 1);
        let mut cfg = gen_square_lattice(5, 5).unwrap();
        cfg.centers[12] = cfg.centers[12] + Point2::new(0.45, 0.45);
        let r = check_configuration(&cfg).unwrap();
        assert!(!r.ok());
    }
}
