//! Contact graph of a penny configuration with its planar embedding and the
//! combinatorial distance.

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::packing::{self, PennyConfig, MAX_CONTACT_DEGREE};

#[derive(Debug, Clone, PartialEq)]
pub struct ContactGraph {
    /// Embedding of the vertices (disk centers), indexed by vertex id.
    pub coords: Vec<Point2>,
    /// Sorted neighbor ids.
    pub adj: Vec<Vec<u32>>,
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BallResult {
    pub center: usize,
    pub radius: u32,
    /// Members sorted by vertex id.
    pub members: Vec<u32>,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreeStats {
    pub min: usize,
    pub max: usize,
    pub histogram: BTreeMap<usize, usize>,
}

/// Interchange form: `{"coords": [[x, y], ...], "edges": [[i, j], ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphExport {
    pub coords: Vec<[f64; 2]>,
    pub edges: Vec<[u32; 2]>,
}

pub const UNREACHED: u32 = u32::MAX;

impl ContactGraph {
    pub fn build(cfg: &PennyConfig) -> Result<Self> {
        let adj = packing::scan_contacts(cfg)?;
        let g = Self {
            coords: cfg.centers.clone(),
            adj,
            tol: cfg.tol,
        };
        g.degree_stats()?;
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.coords.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.adj[v].iter().map(|&u| u as usize)
    }

    pub fn check_vertex(&self, v: usize) -> Result<()> {
        if v < self.n() {
            Ok(())
        } else {
            Err(Error::InvalidVertex(v))
        }
    }

    /// Edges `(i, j)` with `i < j`, lexicographically sorted.
    pub fn edges(&self) -> Vec<[u32; 2]> {
        let mut out = Vec::with_capacity(self.edge_count());
        for (i, nb) in self.adj.iter().enumerate() {
            for &j in nb {
                if (i as u32) < j {
                    out.push([i as u32, j]);
                }
            }
        }
        out
    }

    /// BFS distances from `sources`, stopping after `max_radius` layers.
    /// Unreached vertices get [`UNREACHED`].
    pub fn bfs_multi(&self, sources: &[usize], max_radius: Option<u32>) -> Vec<u32> {
        let mut dist = vec![UNREACHED; self.n()];
        let mut queue = VecDeque::new();
        for &s in sources {
            if dist[s] != 0 {
                dist[s] = 0;
                queue.push_back(s);
            }
        }
        while let Some(u) = queue.pop_front() {
            let du = dist[u];
            if max_radius.is_some_and(|r| du >= r) {
                continue;
            }
            for v in self.neighbors(u) {
                if dist[v] == UNREACHED {
                    dist[v] = du + 1;
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    pub fn bfs_from(&self, x: usize) -> Result<Vec<u32>> {
        self.check_vertex(x)?;
        Ok(self.bfs_multi(&[x], None))
    }

    /// Combinatorial distance; `None` when `y` is unreachable from `x`.
    pub fn bfs_distance(&self, x: usize, y: usize) -> Result<Option<u32>> {
        self.check_vertex(x)?;
        self.check_vertex(y)?;
        if x == y {
            return Ok(Some(0));
        }
        let mut dist = vec![UNREACHED; self.n()];
        let mut queue = VecDeque::from([x]);
        dist[x] = 0;
        while let Some(u) = queue.pop_front() {
            for v in self.neighbors(u) {
                if dist[v] == UNREACHED {
                    dist[v] = dist[u] + 1;
                    if v == y {
                        return Ok(Some(dist[v]));
                    }
                    queue.push_back(v);
                }
            }
        }
        Ok(None)
    }

    /// Vertices within distance `radius` of `x`, with their distances, in BFS order.
    pub fn ball_layers(&self, x: usize, radius: u32) -> Result<Vec<(u32, u32)>> {
        self.check_vertex(x)?;
        let mut seen = std::collections::HashMap::new();
        let mut order = vec![(x as u32, 0u32)];
        seen.insert(x as u32, 0u32);
        let mut head = 0;
        while head < order.len() {
            let (u, du) = order[head];
            head += 1;
            if du >= radius {
                continue;
            }
            for &v in &self.adj[u as usize] {
                if let std::collections::hash_map::Entry::Vacant(e) = seen.entry(v) {
                    e.insert(du + 1);
                    order.push((v, du + 1));
                }
            }
        }
        Ok(order)
    }

    /// Vertex whose center lies within `1e-6` of `p`, lowest id first.
    pub fn vertex_at(&self, p: Point2) -> Option<usize> {
        self.coords.iter().position(|c| c.dist(p) <= 1e-6)
    }

    pub fn ball(&self, x: usize, radius: u32) -> Result<BallResult> {
        let mut members: Vec<u32> = self.ball_layers(x, radius)?.into_iter().map(|(v, _)| v).collect();
        members.sort_unstable();
        Ok(BallResult {
            center: x,
            radius,
            size: members.len(),
            members,
        })
    }

    pub fn degree_stats(&self) -> Result<DegreeStats> {
        let mut histogram = BTreeMap::new();
        for (v, nb) in self.adj.iter().enumerate() {
            if nb.len() > MAX_CONTACT_DEGREE {
                return Err(Error::DegreeBoundViolated {
                    vertex: v,
                    degree: nb.len(),
                });
            }
            *histogram.entry(nb.len()).or_insert(0) += 1;
        }
        Ok(DegreeStats {
            min: histogram.keys().next().copied().unwrap_or(0),
            max: histogram.keys().next_back().copied().unwrap_or(0),
            histogram,
        })
    }

    /// Components as sorted vertex lists, ordered by smallest member.
    pub fn connected_components(&self) -> Vec<Vec<u32>> {
        let mut comp = vec![usize::MAX; self.n()];
        let mut out: Vec<Vec<u32>> = Vec::new();
        for s in 0..self.n() {
            if comp[s] != usize::MAX {
                continue;
            }
            let id = out.len();
            let mut members = vec![s as u32];
            comp[s] = id;
            let mut head = 0;
            while head < members.len() {
                let u = members[head] as usize;
                head += 1;
                for v in self.neighbors(u) {
                    if comp[v] == usize::MAX {
                        comp[v] = id;
                        members.push(v as u32);
                    }
                }
            }
            members.sort_unstable();
            out.push(members);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        packing::is_connected(&self.adj)
    }

    /// Induced subgraph on `members` is connected.
    pub fn is_connected_within(&self, members: &[u32]) -> bool {
        if members.is_empty() {
            return true;
        }
        let inside: std::collections::HashSet<u32> = members.iter().copied().collect();
        let mut seen = std::collections::HashSet::from([members[0]]);
        let mut stack = vec![members[0]];
        while let Some(u) = stack.pop() {
            for &v in &self.adj[u as usize] {
                if inside.contains(&v) && seen.insert(v) {
                    stack.push(v);
                }
            }
        }
        seen.len() == inside.len()
    }

    pub fn export(&self) -> GraphExport {
        GraphExport {
            coords: self.coords.iter().map(|p| [p.x, p.y]).collect(),
            edges: self.edges(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        crate::io::to_json_string(&self.export())
    }
}
