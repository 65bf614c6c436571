//! Simple random walk: Monte Carlo visit counts, an exact distribution
//! evolution oracle, and truncated Green functions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::contact_graph::{ContactGraph, UNREACHED};
use crate::error::{Error, Result};
use crate::io::{fmt_f64, Table};
use crate::laplace::DirichletSolver;
use crate::metrics::Window;
use crate::par;
use crate::stats::{linear_fit, mean_ci, LinearFit, Z99};

/// Largest tolerated fraction of discarded trials.
pub const MAX_EXIT_RATE: f64 = 0.10;
/// Largest tolerated probability mass reaching the window boundary.
pub const MAX_LEAK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkStats {
    pub origin: usize,
    pub steps: u64,
    pub trials: u64,
    pub seed: u64,
    /// Trials that touched the window boundary and were dropped.
    pub discarded: u64,
    pub mean_visits: f64,
    /// 99% confidence half-width of the mean.
    pub ci_half_width: f64,
    /// False when more than 10% of trials were discarded.
    pub valid: bool,
}

impl WalkStats {
    pub fn contains(&self, value: f64) -> bool {
        (self.mean_visits - value).abs() <= self.ci_half_width
    }

    pub fn to_table(&self) -> Table {
        let mut t = Table::new(["N", "mean_visits", "ci"]);
        t.push(vec![self.steps.to_string(), fmt_f64(self.mean_visits), fmt_f64(self.ci_half_width)]);
        t
    }
}

fn check_origin(g: &ContactGraph, window: &Window, x0: usize) -> Result<()> {
    g.check_vertex(x0)?;
    if !g.is_connected() {
        return Err(Error::NotConnected);
    }
    window.require_depth(x0, 1)
}

/// Visits to `x0` during steps `0..=N`; trials reaching a boundary vertex are discarded.
pub fn simulate_visits(
    g: &ContactGraph,
    window: &Window,
    x0: usize,
    steps: u64,
    trials: u64,
    seed: u64,
) -> Result<WalkStats> {
    check_origin(g, window, x0)?;
    let runs = par::map_range(trials as usize, |trial| -> Option<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trial as u64);
        let mut v = x0;
        let mut visits = 1u64;
        for _ in 0..steps {
            let nb = &g.adj[v];
            v = nb[rng.gen_range(0..nb.len())] as usize;
            if window.depth[v] == 0 {
                return None;
            }
            if v == x0 {
                visits += 1;
            }
        }
        Some(visits as f64)
    });
    let kept: Vec<f64> = runs.iter().flatten().copied().collect();
    let discarded = trials - kept.len() as u64;
    let ci = mean_ci(&kept, Z99);
    Ok(WalkStats {
        origin: x0,
        steps,
        trials,
        seed,
        discarded,
        mean_visits: ci.mean,
        ci_half_width: ci.half_width,
        valid: trials > 0 && (discarded as f64) <= MAX_EXIT_RATE * trials as f64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolveResult {
    pub steps: u64,
    /// `Σ_{n<=N} p_n(x0, x0)`.
    pub expected_visits: f64,
    /// Mass absorbed at window-boundary vertices.
    pub leaked: f64,
}

/// Iterates the transition operator from `δ_x0`, absorbing at boundary vertices.
pub fn evolve_distribution(g: &ContactGraph, window: &Window, x0: usize, steps: u64) -> Result<EvolveResult> {
    check_origin(g, window, x0)?;
    let dist = g.bfs_from(x0)?;
    let mut order: Vec<usize> = (0..g.n()).filter(|&v| dist[v] != UNREACHED).collect();
    order.sort_by_key(|&v| (dist[v], v));
    let mut p = vec![0.0f64; g.n()];
    let mut next = vec![0.0f64; g.n()];
    p[x0] = 1.0;
    let mut visits = 1.0;
    let mut leaked = 0.0;
    // p_{n-1} is supported within distance n-1 of x0
    let within = |r: u64| order.partition_point(|&v| (dist[v] as u64) <= r);
    for n in 1..=steps {
        for &v in &order[..within(n)] {
            next[v] = 0.0;
        }
        for &v in &order[..within(n - 1)] {
            let m = p[v];
            if m == 0.0 {
                continue;
            }
            let share = m / g.adj[v].len() as f64;
            for &w in &g.adj[v] {
                let w = w as usize;
                if window.depth[w] == 0 {
                    leaked += share;
                } else {
                    next[w] += share;
                }
            }
        }
        std::mem::swap(&mut p, &mut next);
        visits += p[x0];
    }
    if leaked > MAX_LEAK {
        return Err(Error::WindowTooSmall(format!(
            "{leaked:e} probability mass reached the window boundary within {steps} steps"
        )));
    }
    Ok(EvolveResult {
        steps,
        expected_visits: visits,
        leaked,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreenTruncated {
    pub origin: usize,
    pub radii: Vec<u32>,
    /// Expected visits to the origin, started there, before leaving `B_R`.
    pub values: Vec<f64>,
    pub strictly_increasing: bool,
    /// Fit of value against `ln R` over radii `>= 1`.
    pub fit: Option<LinearFit>,
}

impl GreenTruncated {
    pub fn to_table(&self) -> Table {
        let mut t = Table::new(["R", "green_value"]);
        for (r, v) in self.radii.iter().zip(&self.values) {
            t.push(vec![r.to_string(), fmt_f64(*v)]);
        }
        t
    }

    pub fn growth_ratio(&self) -> f64 {
        self.values.last().unwrap_or(&f64::NAN) / self.values.first().unwrap_or(&f64::NAN)
    }
}

/// Solves `(-Δ)_Ω G = deg(x0) δ_x0` on `Ω = B_R(x0)` for each radius.
pub fn green_truncated(g: &ContactGraph, window: &Window, x0: usize, radii: &[u32]) -> Result<GreenTruncated> {
    g.check_vertex(x0)?;
    if radii.is_empty() {
        return Err(Error::InvalidArgument("no radii".into()));
    }
    let rmax = *radii.iter().max().unwrap();
    window.require_depth(x0, rmax + 1)?;
    let values = par::map_slice(radii, |&r| -> Result<f64> {
        let omega: Vec<usize> = g.ball(x0, r)?.members.into_iter().map(|v| v as usize).collect();
        let solver = DirichletSolver::new(g, &omega)?;
        let i = solver.omega().binary_search(&x0).unwrap();
        let mut b = vec![0.0; omega.len()];
        b[i] = g.degree(x0) as f64;
        Ok(solver.solve_local(&b)?[i])
    })
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;
    let mut pairs: Vec<(u32, f64)> = radii.iter().copied().zip(values.iter().copied()).collect();
    pairs.sort_by_key(|p| p.0);
    let strictly_increasing = pairs.windows(2).all(|w| w[1].1 > w[0].1);
    let (xs, ys): (Vec<f64>, Vec<f64>) = pairs
        .iter()
        .filter(|p| p.0 >= 1)
        .map(|&(r, v)| ((r as f64).ln(), v))
        .unzip();
    Ok(GreenTruncated {
        origin: x0,
        radii: radii.to_vec(),
        values,
        strictly_increasing,
        fit: linear_fit(&xs, &ys),
    })
}
