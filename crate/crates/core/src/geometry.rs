//! Euclidean primitives for unit segments and the separation checks between
//! non-adjacent edges of a penny graph.

use std::ops::{Add, Mul, Sub};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `|AB| = 1` in lemma configurations.
pub const UNIT_TOL: f64 = 1e-12;
/// Margin realizing the open condition `> 1` in the samplers.
pub const STRICT_MARGIN: f64 = 1e-12;
/// Slack on the `sqrt(3)/2` lower bound.
pub const BOUND_SLACK: f64 = 1e-9;
/// Tolerance of the endpoint-attainment identity.
pub const ATTAIN_TOL: f64 = 1e-12;
/// Rejection cap of the samplers.
pub const MAX_REJECTIONS: u64 = 100_000;

pub const HALF_SQRT3: f64 = 0.866_025_403_784_438_6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn polar(r: f64, theta: f64) -> Self {
        Self::new(r * theta.cos(), r * theta.sin())
    }

    pub fn dot(self, o: Self) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Self) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, o: Self) -> f64 {
        (self - o).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Angle of the vector in `[0, 2pi)`.
    pub fn angle(self) -> f64 {
        let a = self.y.atan2(self.x);
        if a < 0.0 {
            a + std::f64::consts::TAU
        } else {
            a
        }
    }

    pub fn lerp(self, o: Self, t: f64) -> Self {
        self + (o - self) * t
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, s: f64) -> Self {
        Self::new(self.x * s, self.y * s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment2 {
    pub a: Point2,
    pub b: Point2,
}

impl Segment2 {
    pub fn new(a: Point2, b: Point2) -> Result<Self> {
        if !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidArgument("segment endpoint not finite".into()));
        }
        if a == b {
            return Err(Error::InvalidArgument("degenerate segment".into()));
        }
        Ok(Self { a, b })
    }

    pub fn length(&self) -> f64 {
        self.a.dist(self.b)
    }

    pub fn at(&self, t: f64) -> Point2 {
        self.a.lerp(self.b, t)
    }

    /// Sub-segment between parameters `t0 < t1` in `[0, 1]`.
    pub fn sub_segment(&self, t0: f64, t1: f64) -> Self {
        Self {
            a: self.at(t0),
            b: self.at(t1),
        }
    }
}

/// Parameter of the point of `s` closest to `p`.
pub fn closest_param(s: &Segment2, p: Point2) -> f64 {
    let d = s.b - s.a;
    let len2 = d.dot(d);
    if len2 == 0.0 {
        return 0.0;
    }
    ((p - s.a).dot(d) / len2).clamp(0.0, 1.0)
}

pub fn seg_point_distance(s: &Segment2, p: Point2) -> f64 {
    let t = closest_param(s, p);
    s.at(t).dist(p)
}

fn orient(a: Point2, b: Point2, c: Point2) -> f64 {
    (b - a).cross(c - a)
}

fn on_segment_collinear(a: Point2, b: Point2, p: Point2) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

/// Closed-segment intersection test by orientation signs.
pub fn segments_intersect(s1: &Segment2, s2: &Segment2) -> bool {
    let (p1, q1, p2, q2) = (s1.a, s1.b, s2.a, s2.b);
    let o1 = orient(p1, q1, p2);
    let o2 = orient(p1, q1, q2);
    let o3 = orient(p2, q2, p1);
    let o4 = orient(p2, q2, q1);
    if ((o1 > 0.0 && o2 < 0.0) || (o1 < 0.0 && o2 > 0.0))
        && ((o3 > 0.0 && o4 < 0.0) || (o3 < 0.0 && o4 > 0.0))
    {
        return true;
    }
    (o1 == 0.0 && on_segment_collinear(p1, q1, p2))
        || (o2 == 0.0 && on_segment_collinear(p1, q1, q2))
        || (o3 == 0.0 && on_segment_collinear(p2, q2, p1))
        || (o4 == 0.0 && on_segment_collinear(p2, q2, q1))
}

/// Minimum distance between two closed segments.
///
/// Minimizes `|s1(u) - s2(v)|^2` over `[0,1]^2` in closed form (interior
/// critical point, then clamping onto the box edges). It does not route
/// through endpoint-to-segment distances, so comparing against those is a
/// genuine check.
pub fn seg_seg_distance(s1: &Segment2, s2: &Segment2) -> f64 {
    if segments_intersect(s1, s2) {
        return 0.0;
    }
    let d1 = s1.b - s1.a;
    let d2 = s2.b - s2.a;
    let r = s1.a - s2.a;
    let a = d1.dot(d1);
    let e = d2.dot(d2);
    let f = d2.dot(r);
    let c = d1.dot(r);
    let b = d1.dot(d2);
    let denom = a * e - b * b;
    let mut u = if denom > 0.0 {
        ((b * f - c * e) / denom).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let mut v = (b * u + f) / e;
    if v < 0.0 {
        v = 0.0;
        u = (-c / a).clamp(0.0, 1.0);
    } else if v > 1.0 {
        v = 1.0;
        u = ((b - c) / a).clamp(0.0, 1.0);
    }
    s1.at(u).dist(s2.at(v))
}

/// Four points with `|AB| = |CD| = 1` and all cross distances `> 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LemmaConfig {
    pub a: Point2,
    pub b: Point2,
    pub c: Point2,
    pub d: Point2,
}

impl LemmaConfig {
    pub fn new(a: Point2, b: Point2, c: Point2, d: Point2) -> Result<Self> {
        let cfg = Self { a, b, c, d };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn cross_distances(&self) -> [f64; 4] {
        [
            self.a.dist(self.c),
            self.a.dist(self.d),
            self.b.dist(self.c),
            self.b.dist(self.d),
        ]
    }

    pub fn min_cross_distance(&self) -> f64 {
        self.cross_distances().into_iter().fold(f64::INFINITY, f64::min)
    }

    pub fn validate(&self) -> Result<()> {
        for p in [self.a, self.b, self.c, self.d] {
            if !p.is_finite() {
                return Err(Error::HypothesisViolated("non-finite point".into()));
            }
        }
        let ab = self.a.dist(self.b);
        let cd = self.c.dist(self.d);
        if (ab - 1.0).abs() > UNIT_TOL || (cd - 1.0).abs() > UNIT_TOL {
            return Err(Error::HypothesisViolated(format!(
                "|AB| = {ab}, |CD| = {cd}; both must be 1"
            )));
        }
        let m = self.min_cross_distance();
        if m <= 1.0 {
            return Err(Error::HypothesisViolated(format!(
                "min cross distance {m} is not > 1"
            )));
        }
        Ok(())
    }

    pub fn ab(&self) -> Segment2 {
        Segment2 { a: self.a, b: self.b }
    }

    pub fn cd(&self) -> Segment2 {
        Segment2 { a: self.c, b: self.d }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeparationReport {
    pub intersects: bool,
    pub min_distance: f64,
    /// Minimum over the four endpoint-to-segment distances.
    pub endpoint_min: f64,
    pub endpoint_attained: bool,
}

impl SeparationReport {
    pub fn bound_holds(&self) -> bool {
        self.min_distance >= HALF_SQRT3 - BOUND_SLACK
    }

    pub fn ok(&self) -> bool {
        !self.intersects && self.bound_holds() && self.endpoint_attained
    }
}

pub fn check_separation(cfg: &LemmaConfig) -> Result<SeparationReport> {
    cfg.validate()?;
    let ab = cfg.ab();
    let cd = cfg.cd();
    let intersects = segments_intersect(&ab, &cd);
    let min_distance = seg_seg_distance(&ab, &cd);
    let endpoint_min = [
        seg_point_distance(&cd, cfg.a),
        seg_point_distance(&cd, cfg.b),
        seg_point_distance(&ab, cfg.c),
        seg_point_distance(&ab, cfg.d),
    ]
    .into_iter()
    .fold(f64::INFINITY, f64::min);
    Ok(SeparationReport {
        intersects,
        min_distance,
        endpoint_min,
        endpoint_attained: (min_distance - endpoint_min).abs() <= ATTAIN_TOL,
    })
}

/// How a sampled far point is placed relative to the unit segment `AB`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Placement {
    /// Just beyond unit distance from one endpoint.
    NearEndpoint,
    /// Near the apex of the (almost) equilateral triangle over `AB`.
    NearApex,
    /// Uniform in a disk of radius 3 around the midpoint.
    Uniform,
}

fn small_excess(rng: &mut ChaCha8Rng) -> f64 {
    let u: f64 = rng.gen();
    STRICT_MARGIN + 0.05 * u * u * u
}

fn sample_unit_segment(rng: &mut ChaCha8Rng) -> (Point2, Point2) {
    let a = Point2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    let theta = rng.gen_range(0.0..std::f64::consts::TAU);
    (a, a + Point2::polar(1.0, theta))
}

/// Point at distances `ra` from `a` and `rb` from `b`, on the given side.
pub(crate) fn circle_apex(a: Point2, b: Point2, ra: f64, rb: f64, left: bool) -> Option<Point2> {
    let d = a.dist(b);
    let along = (ra * ra - rb * rb + d * d) / (2.0 * d);
    let h2 = ra * ra - along * along;
    if h2 < 0.0 {
        return None;
    }
    let u = (b - a) * (1.0 / d);
    let n = Point2::new(-u.y, u.x);
    let h = h2.sqrt() * if left { 1.0 } else { -1.0 };
    Some(a + u * along + n * h)
}

fn sample_far_point(rng: &mut ChaCha8Rng, a: Point2, b: Point2) -> Option<Point2> {
    let placement = match rng.gen_range(0..3) {
        0 => Placement::NearEndpoint,
        1 => Placement::NearApex,
        _ => Placement::Uniform,
    };
    match placement {
        Placement::NearEndpoint => {
            let p = if rng.gen() { a } else { b };
            let r = 1.0 + small_excess(rng);
            Some(p + Point2::polar(r, rng.gen_range(0.0..std::f64::consts::TAU)))
        }
        Placement::NearApex => {
            let ra = 1.0 + small_excess(rng);
            let rb = 1.0 + small_excess(rng);
            circle_apex(a, b, ra, rb, rng.gen())
        }
        Placement::Uniform => {
            let mid = a.lerp(b, 0.5);
            let r = 3.0 * rng.gen::<f64>().sqrt();
            Some(mid + Point2::polar(r, rng.gen_range(0.0..std::f64::consts::TAU)))
        }
    }
}

/// Deterministic rejection sampler for [`LemmaConfig`], biased toward the
/// near-critical regime where the `sqrt(3)/2` bound is tight.
pub fn sample_lemma_config(seed: u64) -> Result<LemmaConfig> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_REJECTIONS {
        let (a, b) = sample_unit_segment(&mut rng);
        let Some(c) = sample_far_point(&mut rng, a, b) else {
            continue;
        };
        let d = c + Point2::polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU));
        let cfg = LemmaConfig { a, b, c, d };
        if cfg.min_cross_distance() >= 1.0 + STRICT_MARGIN && cfg.validate().is_ok() {
            return Ok(cfg);
        }
    }
    Err(Error::SamplerExhausted(MAX_REJECTIONS))
}

/// Three points with `|AB| = 1` and `|AC|, |BC| > 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TriangleConfig {
    pub a: Point2,
    pub b: Point2,
    pub c: Point2,
}

impl TriangleConfig {
    pub fn validate(&self) -> Result<()> {
        let ab = self.a.dist(self.b);
        if (ab - 1.0).abs() > UNIT_TOL {
            return Err(Error::HypothesisViolated(format!("|AB| = {ab}")));
        }
        if self.a.dist(self.c) <= 1.0 || self.b.dist(self.c) <= 1.0 {
            return Err(Error::HypothesisViolated("C within unit distance of AB's ends".into()));
        }
        Ok(())
    }

    pub fn apex_distance(&self) -> f64 {
        seg_point_distance(&Segment2 { a: self.a, b: self.b }, self.c)
    }
}

pub fn sample_triangle_config(seed: u64) -> Result<TriangleConfig> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7419_a3c5_0000_0000);
    for _ in 0..MAX_REJECTIONS {
        let (a, b) = sample_unit_segment(&mut rng);
        let Some(c) = sample_far_point(&mut rng, a, b) else {
            continue;
        };
        let t = TriangleConfig { a, b, c };
        if a.dist(c) >= 1.0 + STRICT_MARGIN && b.dist(c) >= 1.0 + STRICT_MARGIN {
            return Ok(t);
        }
    }
    Err(Error::SamplerExhausted(MAX_REJECTIONS))
}
