use std::collections::HashMap;

use crate::geometry::Point2;

/// Uniform bucket grid over the plane, keyed by integer cell coordinates.
#[derive(Debug, Clone)]
pub struct BucketGrid {
    cell: f64,
    buckets: HashMap<(i64, i64), Vec<u32>>,
}

impl BucketGrid {
    pub fn new(cell: f64) -> Self {
        assert!(cell > 0.0);
        Self {
            cell,
            buckets: HashMap::new(),
        }
    }

    pub fn from_points(cell: f64, points: &[Point2]) -> Self {
        let mut g = Self::new(cell);
        for (i, &p) in points.iter().enumerate() {
            g.insert(p, i as u32);
        }
        g
    }

    fn key(&self, p: Point2) -> (i64, i64) {
        ((p.x / self.cell).floor() as i64, (p.y / self.cell).floor() as i64)
    }

    pub fn insert(&mut self, p: Point2, id: u32) {
        let k = self.key(p);
        self.buckets.entry(k).or_default().push(id);
    }

    /// Calls `f` for every id stored in the 3x3 block of cells around `p`.
    /// Covers every stored point within distance `cell` of `p`.
    pub fn for_each_near<F: FnMut(u32)>(&self, p: Point2, f: F) {
        self.for_each_in_block(p, 1, f);
    }

    /// Calls `f` for every id in the `(2r+1)^2` block of cells around `p`,
    /// covering every stored point within distance `r * cell`.
    pub fn for_each_in_block<F: FnMut(u32)>(&self, p: Point2, r: i64, mut f: F) {
        let (cx, cy) = self.key(p);
        for dx in -r..=r {
            for dy in -r..=r {
                if let Some(b) = self.buckets.get(&(cx + dx, cy + dy)) {
                    for &id in b {
                        f(id);
                    }
                }
            }
        }
    }

    /// Neighbor ids near `p`, sorted ascending.
    pub fn near(&self, p: Point2) -> Vec<u32> {
        let mut out = Vec::new();
        self.for_each_near(p, |id| out.push(id));
        out.sort_unstable();
        out
    }
}
