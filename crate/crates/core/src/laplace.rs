//! Combinatorial Laplacian, finite Dirichlet problems, harmonic measure and
//! empirical Harnack and Poincaré constants on balls.

use std::collections::{BTreeMap, VecDeque};

use nalgebra::{DMatrix, DVector};
use nalgebra_sparse::{factorization::CscCholesky, CooMatrix, CscMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::contact_graph::ContactGraph;
use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::io::{fmt_f64, Table};
use crate::metrics::Window;
use crate::packing::{triangular_index, triangular_point, PennyConfig};
use crate::par;

pub const DEFAULT_RESIDUAL_TOL: f64 = 1e-10;
/// Largest domain solved by sparse Cholesky; larger ones use CG.
pub const DIRECT_LIMIT: usize = 5000;
pub const CG_TOL: f64 = 1e-12;
pub const UNDERFLOW_FLOOR: f64 = 1e-300;
/// Default number of random Rayleigh quotients tested against the eigenvalue.
pub const RANDOM_QUOTIENTS: usize = 10_000;

/// Real values on a finite vertex set.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScalarField {
    values: BTreeMap<usize, f64>,
}

impl ScalarField {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_fn(domain: impl IntoIterator<Item = usize>, mut f: impl FnMut(usize) -> f64) -> Self {
        Self {
            values: domain.into_iter().map(|v| (v, f(v))).collect(),
        }
    }

    pub fn constant(domain: impl IntoIterator<Item = usize>, c: f64) -> Self {
        Self::from_fn(domain, |_| c)
    }

    pub fn insert(&mut self, v: usize, value: f64) {
        self.values.insert(v, value);
    }

    pub fn get(&self, v: usize) -> Option<f64> {
        self.values.get(&v).copied()
    }

    pub fn try_get(&self, v: usize) -> Result<f64> {
        self.get(v).ok_or(Error::MissingValue(v))
    }

    pub fn contains(&self, v: usize) -> bool {
        self.values.contains_key(&v)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `(vertex, value)` in increasing vertex order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.values.iter().map(|(&v, &x)| (v, x))
    }

    pub fn domain(&self) -> Vec<usize> {
        self.values.keys().copied().collect()
    }

    /// Maps local index `i` to vertex `ids[i]`.
    pub fn relabel(&self, ids: &[usize]) -> Self {
        Self {
            values: self.iter().map(|(i, v)| (ids[i], v)).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.values().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn check_finite(&self) -> Result<()> {
        match self.iter().find(|(_, x)| !x.is_finite()) {
            Some((v, x)) => Err(Error::InvalidArgument(format!("non-finite value {x} at vertex {v}"))),
            None => Ok(()),
        }
    }

    /// CSV rows `(vertex, x, y, value)`.
    pub fn to_table(&self, g: &ContactGraph) -> Table {
        let mut t = Table::new(["vertex", "x", "y", "value"]);
        for (v, val) in self.iter() {
            let p = g.coords[v];
            t.push(vec![v.to_string(), fmt_f64(p.x), fmt_f64(p.y), fmt_f64(val)]);
        }
        t
    }
}

/// `Δf(v) = Σ_{y~v} (f(y) - f(v))`.
pub fn laplacian_at(g: &ContactGraph, f: &ScalarField, v: usize) -> Result<f64> {
    g.check_vertex(v)?;
    let fv = f.try_get(v)?;
    let mut s = 0.0;
    for y in g.neighbors(v) {
        s += f.try_get(y)? - fv;
    }
    Ok(s)
}

pub fn laplacian(g: &ContactGraph, f: &ScalarField, at: &[usize]) -> Result<ScalarField> {
    let mut out = ScalarField::new();
    for &v in at {
        out.insert(v, laplacian_at(g, f, v)?);
    }
    Ok(out)
}

/// `{y ∉ Ω : y ~ x for some x ∈ Ω}`, sorted.
pub fn vertex_boundary(g: &ContactGraph, omega: &[usize]) -> Vec<usize> {
    let mut inside = vec![false; g.n()];
    for &v in omega {
        inside[v] = true;
    }
    let mut out: Vec<usize> = omega
        .iter()
        .flat_map(|&v| g.neighbors(v))
        .filter(|&y| !inside[y])
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

fn normalize_domain(g: &ContactGraph, omega: &[usize]) -> Result<Vec<usize>> {
    let mut o = omega.to_vec();
    o.sort_unstable();
    o.dedup();
    for &v in &o {
        g.check_vertex(v)?;
    }
    if o.is_empty() {
        return Err(Error::DegenerateDomain("empty domain".into()));
    }
    Ok(o)
}

fn check_domain(g: &ContactGraph, omega: &[usize], boundary: &[usize]) -> Result<()> {
    if boundary.is_empty() {
        return Err(Error::EmptyBoundary);
    }
    let closure: Vec<u32> = omega.iter().chain(boundary).map(|&v| v as u32).collect();
    if !g.is_connected_within(&closure) {
        return Err(Error::NotConnected);
    }
    Ok(())
}

/// `Δu = source` on Ω, `u = boundary_values` on δΩ.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletProblem {
    pub omega: Vec<usize>,
    pub boundary: Vec<usize>,
    pub boundary_values: ScalarField,
    pub source: Option<ScalarField>,
}

impl DirichletProblem {
    /// The boundary is recomputed from `omega`; `boundary_values` must cover it.
    pub fn new(g: &ContactGraph, omega: &[usize], boundary_values: ScalarField) -> Result<Self> {
        let omega = normalize_domain(g, omega)?;
        let boundary = vertex_boundary(g, &omega);
        check_domain(g, &omega, &boundary)?;
        for &b in &boundary {
            boundary_values.try_get(b)?;
        }
        boundary_values.check_finite()?;
        let boundary_values = ScalarField::from_fn(boundary.iter().copied(), |b| boundary_values.get(b).unwrap());
        Ok(Self {
            omega,
            boundary,
            boundary_values,
            source: None,
        })
    }

    pub fn with_boundary_fn(g: &ContactGraph, omega: &[usize], f: impl FnMut(usize) -> f64) -> Result<Self> {
        let boundary = vertex_boundary(g, omega);
        Self::new(g, omega, ScalarField::from_fn(boundary, f))
    }

    /// Missing source entries count as zero.
    pub fn with_source(mut self, source: ScalarField) -> Result<Self> {
        source.check_finite()?;
        self.source = Some(source);
        Ok(self)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirichletSolution {
    /// Values on Ω ∪ δΩ.
    pub u: ScalarField,
    /// `max_{x∈Ω} |Δu(x) - source(x)|`.
    pub residual: f64,
}

enum Method {
    Direct { chol: Box<CscCholesky<f64>>, pos: Vec<usize> },
    Iterative,
}

/// Factorization of the reduced operator `-Δ` on Ω with zero extension,
/// reusable across right-hand sides.
pub struct DirichletSolver<'g> {
    g: &'g ContactGraph,
    omega: Vec<usize>,
    boundary: Vec<usize>,
    /// Local index in `omega` for each vertex, `u32::MAX` outside.
    local: Vec<u32>,
    method: Method,
}

/// Reverse Cuthill-McKee order of the local adjacency.
fn rcm_order(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let mut seen = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut starts: Vec<usize> = (0..n).collect();
    starts.sort_by_key(|&v| (adj[v].len(), v));
    for s in starts {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut q = VecDeque::from([s]);
        while let Some(u) = q.pop_front() {
            order.push(u);
            let mut nb: Vec<usize> = adj[u].iter().copied().filter(|&v| !seen[v]).collect();
            nb.sort_by_key(|&v| (adj[v].len(), v));
            for v in nb {
                seen[v] = true;
                q.push_back(v);
            }
        }
    }
    order.reverse();
    order
}

impl<'g> DirichletSolver<'g> {
    pub fn new(g: &'g ContactGraph, omega: &[usize]) -> Result<Self> {
        Self::with_limit(g, omega, DIRECT_LIMIT)
    }

    /// As [`DirichletSolver::new`] with an explicit direct-solve size cap.
    pub fn with_limit(g: &'g ContactGraph, omega: &[usize], direct_limit: usize) -> Result<Self> {
        let omega = normalize_domain(g, omega)?;
        let boundary = vertex_boundary(g, &omega);
        check_domain(g, &omega, &boundary)?;
        let mut local = vec![u32::MAX; g.n()];
        for (i, &v) in omega.iter().enumerate() {
            local[v] = i as u32;
        }
        let method = if omega.len() <= direct_limit {
            let ladj: Vec<Vec<usize>> = omega
                .iter()
                .map(|&v| {
                    g.neighbors(v)
                        .filter(|&y| local[y] != u32::MAX)
                        .map(|y| local[y] as usize)
                        .collect()
                })
                .collect();
            let order = rcm_order(&ladj);
            let mut pos = vec![0; omega.len()];
            for (k, &i) in order.iter().enumerate() {
                pos[i] = k;
            }
            let n = omega.len();
            let mut coo = CooMatrix::new(n, n);
            for (i, &v) in omega.iter().enumerate() {
                coo.push(pos[i], pos[i], g.degree(v) as f64);
                for &j in &ladj[i] {
                    coo.push(pos[i], pos[j], -1.0);
                }
            }
            let csc = CscMatrix::from(&coo);
            let chol = CscCholesky::factor(&csc).map_err(|e| Error::SolveFailed(format!("cholesky: {e:?}")))?;
            Method::Direct { chol: Box::new(chol), pos }
        } else {
            Method::Iterative
        };
        Ok(Self {
            g,
            omega,
            boundary,
            local,
            method,
        })
    }

    pub fn omega(&self) -> &[usize] {
        &self.omega
    }

    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    pub fn is_direct(&self) -> bool {
        matches!(self.method, Method::Direct { .. })
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (i, &v) in self.omega.iter().enumerate() {
            let mut s = self.g.degree(v) as f64 * x[i];
            for w in self.g.neighbors(v) {
                let j = self.local[w];
                if j != u32::MAX {
                    s -= x[j as usize];
                }
            }
            y[i] = s;
        }
    }

    fn cg(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = b.len();
        let diag: Vec<f64> = self.omega.iter().map(|&v| self.g.degree(v) as f64).collect();
        let scale = b.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        let mut x = vec![0.0; n];
        let mut r = b.to_vec();
        let mut z: Vec<f64> = r.iter().zip(&diag).map(|(r, d)| r / d).collect();
        let mut p = z.clone();
        let mut ap = vec![0.0; n];
        let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        for _ in 0..(20 * n + 100) {
            if r.iter().fold(0.0f64, |m, x| m.max(x.abs())) <= CG_TOL * scale {
                return Ok(x);
            }
            self.apply(&p, &mut ap);
            let alpha = rz / p.iter().zip(&ap).map(|(a, b)| a * b).sum::<f64>();
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
                z[i] = r[i] / diag[i];
            }
            let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        Err(Error::SolveFailed("conjugate gradient did not converge".into()))
    }

    /// Solves `(-Δ)_Ω x = b` in local indexing.
    pub fn solve_local(&self, b: &[f64]) -> Result<Vec<f64>> {
        assert_eq!(b.len(), self.omega.len());
        match &self.method {
            Method::Direct { chol, pos } => {
                let mut bp = DMatrix::zeros(b.len(), 1);
                for (i, &bi) in b.iter().enumerate() {
                    bp[pos[i]] = bi;
                }
                let xp = chol.solve(&bp);
                let mut x: Vec<f64> = (0..b.len()).map(|i| xp[pos[i]]).collect();
                // one refinement step
                let mut ax = vec![0.0; b.len()];
                self.apply(&x, &mut ax);
                let mut rp = DMatrix::zeros(b.len(), 1);
                for i in 0..b.len() {
                    rp[pos[i]] = b[i] - ax[i];
                }
                let dp = chol.solve(&rp);
                for (i, xi) in x.iter_mut().enumerate() {
                    *xi += dp[pos[i]];
                }
                Ok(x)
            }
            Method::Iterative => self.cg(b),
        }
    }

    /// Solves `Δu = source` on Ω with `u = boundary_values` on δΩ.
    pub fn solve(&self, boundary_values: &ScalarField, source: Option<&ScalarField>, tol: f64) -> Result<DirichletSolution> {
        let mut b = vec![0.0; self.omega.len()];
        for (i, &v) in self.omega.iter().enumerate() {
            let mut s = -source.and_then(|f| f.get(v)).unwrap_or(0.0);
            for w in self.g.neighbors(v) {
                if self.local[w] == u32::MAX {
                    s += boundary_values.try_get(w)?;
                }
            }
            b[i] = s;
        }
        let x = self.solve_local(&b)?;
        let mut u = ScalarField::from_fn(self.boundary.iter().copied(), |w| boundary_values.get(w).unwrap());
        for (i, &v) in self.omega.iter().enumerate() {
            u.insert(v, x[i]);
        }
        let mut residual: f64 = 0.0;
        for &v in &self.omega {
            let want = source.and_then(|f| f.get(v)).unwrap_or(0.0);
            residual = residual.max((laplacian_at(self.g, &u, v)? - want).abs());
        }
        if residual.is_nan() || residual > tol {
            return Err(Error::SolveFailed(format!("residual {residual:e} exceeds {tol:e}")));
        }
        Ok(DirichletSolution { u, residual })
    }
}

pub fn solve_dirichlet(g: &ContactGraph, prob: &DirichletProblem, tol: f64) -> Result<DirichletSolution> {
    DirichletSolver::new(g, &prob.omega)?.solve(&prob.boundary_values, prob.source.as_ref(), tol)
}

/// `H[y, b]`: value at `y ∈ Ω` of the solution with indicator data at `b ∈ δΩ`.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicMeasure {
    pub omega: Vec<usize>,
    pub boundary: Vec<usize>,
    pub h: DMatrix<f64>,
}

impl HarmonicMeasure {
    pub fn row_of(&self, y: usize) -> Option<usize> {
        self.omega.binary_search(&y).ok()
    }

    pub fn col_of(&self, b: usize) -> Option<usize> {
        self.boundary.binary_search(&b).ok()
    }

    /// `max_y |Σ_b H[y, b] - 1|`.
    pub fn row_sum_error(&self) -> f64 {
        (0..self.h.nrows())
            .map(|i| (self.h.row(i).sum() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn min_entry(&self) -> f64 {
        self.h.min()
    }
}

/// One shared factorization; columns solved in parallel.
pub fn harmonic_measure(g: &ContactGraph, omega: &[usize]) -> Result<HarmonicMeasure> {
    let solver = DirichletSolver::new(g, omega)?;
    let n = solver.omega.len();
    let cols = par::map_slice(&solver.boundary, |&b| -> Result<Vec<f64>> {
        let mut rhs = vec![0.0; n];
        for w in g.neighbors(b) {
            let i = solver.local[w];
            if i != u32::MAX {
                rhs[i as usize] += 1.0;
            }
        }
        solver.solve_local(&rhs)
    });
    let mut h = DMatrix::zeros(n, solver.boundary.len());
    for (j, col) in cols.into_iter().enumerate() {
        for (i, x) in col?.into_iter().enumerate() {
            h[(i, j)] = x;
        }
    }
    Ok(HarmonicMeasure {
        omega: solver.omega.clone(),
        boundary: solver.boundary.clone(),
        h,
    })
}

/// Sorted ball members.
fn ball_vec(g: &ContactGraph, x: usize, r: u32) -> Result<Vec<usize>> {
    Ok(g.ball(x, r)?.members.into_iter().map(|v| v as usize).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarnackReport {
    pub center: usize,
    pub radius: u32,
    pub c_h: f64,
    /// `(b, y, z)` with `c_h = H[y, b] / H[z, b]`.
    pub witness: (usize, usize, usize),
    pub omega_size: usize,
    pub boundary_size: usize,
    /// `max_y |Σ_b H[y, b] - 1|` over the whole domain.
    pub row_sum_error: f64,
}

/// Worst ratio `sup_{B_R} u / inf_{B_R} u` over positive harmonic `u` on
/// `Ω = B_2R(x)`, attained at a harmonic-measure column.
pub fn harnack_constant(g: &ContactGraph, window: &Window, x: usize, radius: u32) -> Result<HarnackReport> {
    g.check_vertex(x)?;
    window.require_depth(x, 2 * radius + 1)?;
    let inner = ball_vec(g, x, radius)?;
    let omega = ball_vec(g, x, 2 * radius)?;
    let hm = harmonic_measure(g, &omega)?;
    let rows: Vec<usize> = inner.iter().map(|&y| hm.row_of(y).unwrap()).collect();
    let mut best = HarnackReport {
        center: x,
        radius,
        c_h: 1.0,
        witness: (hm.boundary[0], x, x),
        omega_size: hm.omega.len(),
        boundary_size: hm.boundary.len(),
        row_sum_error: hm.row_sum_error(),
    };
    if inner.len() == 1 {
        return Ok(best);
    }
    for (j, &b) in hm.boundary.iter().enumerate() {
        let (mut hi, mut lo) = ((f64::NEG_INFINITY, x), (f64::INFINITY, x));
        for (&i, &y) in rows.iter().zip(&inner) {
            let v = hm.h[(i, j)];
            if v < UNDERFLOW_FLOOR {
                return Err(Error::UnderflowGuard { vertex: y, atom: b });
            }
            if v > hi.0 {
                hi = (v, y);
            }
            if v < lo.0 {
                lo = (v, y);
            }
        }
        let q = hi.0 / lo.0;
        if q > best.c_h {
            best.c_h = q;
            best.witness = (b, hi.1, lo.1);
        }
    }
    Ok(best)
}

/// Denominator convention of the Poincaré inequality on `B_2R`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoincareVariant {
    /// Σ over edges `y ~ z` inside `B_2R`.
    #[default]
    Edges,
    /// Σ over ordered pairs `(y, z)` in `B_2R`.
    AllPairs,
}

/// Quadratic forms of the Poincaré quotient on `B_2R(x)`.
#[derive(Debug, Clone)]
pub struct PoincareDomain {
    pub center: usize,
    pub radius: u32,
    pub variant: PoincareVariant,
    /// `B_2R(x)`, sorted.
    pub outer: Vec<usize>,
    /// `inner_mask[i]` iff `outer[i] ∈ B_R(x)`.
    pub inner_mask: Vec<bool>,
    /// Local edges inside `B_2R`.
    pub edges: Vec<(usize, usize)>,
}

impl PoincareDomain {
    pub fn new(g: &ContactGraph, x: usize, radius: u32, variant: PoincareVariant) -> Result<Self> {
        if radius == 0 {
            return Err(Error::InvalidArgument("radius must be >= 1".into()));
        }
        let outer = ball_vec(g, x, 2 * radius)?;
        let inner = ball_vec(g, x, radius)?;
        let inner_mask = outer.iter().map(|v| inner.binary_search(v).is_ok()).collect();
        let mut edges = Vec::new();
        for (i, &v) in outer.iter().enumerate() {
            for w in g.neighbors(v) {
                if let Ok(j) = outer.binary_search(&w) {
                    if i < j {
                        edges.push((i, j));
                    }
                }
            }
        }
        let closure: Vec<u32> = outer.iter().map(|&v| v as u32).collect();
        if !g.is_connected_within(&closure) {
            return Err(Error::DegenerateDomain("ball is disconnected".into()));
        }
        Ok(Self {
            center: x,
            radius,
            variant,
            outer,
            inner_mask,
            edges,
        })
    }

    pub fn len(&self) -> usize {
        self.outer.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outer.is_empty()
    }

    /// `Σ_{y∈B_R} (f(y) - mean_{B_R} f)^2`.
    pub fn variance_form(&self, f: &[f64]) -> f64 {
        let vals: Vec<f64> = f.iter().zip(&self.inner_mask).filter(|(_, &m)| m).map(|(&v, _)| v).collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        vals.iter().map(|v| (v - mean) * (v - mean)).sum()
    }

    pub fn energy_form(&self, f: &[f64]) -> f64 {
        match self.variant {
            PoincareVariant::Edges => self.edges.iter().map(|&(i, j)| (f[i] - f[j]).powi(2)).sum(),
            PoincareVariant::AllPairs => {
                let n = f.len() as f64;
                let s: f64 = f.iter().sum();
                let s2: f64 = f.iter().map(|v| v * v).sum();
                2.0 * (n * s2 - s * s)
            }
        }
    }

    /// `variance / (R^2 energy)`; `None` for constant fields.
    pub fn quotient(&self, f: &[f64]) -> Option<f64> {
        let e = self.energy_form(f);
        if e <= 0.0 {
            return None;
        }
        Some(self.variance_form(f) / ((self.radius as f64).powi(2) * e))
    }

    pub fn variance_matrix(&self) -> DMatrix<f64> {
        let n = self.len();
        let m = self.inner_mask.iter().filter(|&&b| b).count() as f64;
        DMatrix::from_fn(n, n, |i, j| {
            if self.inner_mask[i] && self.inner_mask[j] {
                (if i == j { 1.0 } else { 0.0 }) - 1.0 / m
            } else {
                0.0
            }
        })
    }

    pub fn energy_matrix(&self) -> DMatrix<f64> {
        let n = self.len();
        match self.variant {
            PoincareVariant::Edges => {
                let mut l = DMatrix::zeros(n, n);
                for &(i, j) in &self.edges {
                    l[(i, i)] += 1.0;
                    l[(j, j)] += 1.0;
                    l[(i, j)] -= 1.0;
                    l[(j, i)] -= 1.0;
                }
                l
            }
            PoincareVariant::AllPairs => {
                let nf = n as f64;
                DMatrix::from_fn(n, n, |i, j| 2.0 * (if i == j { nf } else { 0.0 }) - 2.0)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoincareReport {
    pub center: usize,
    pub radius: u32,
    pub variant: PoincareVariant,
    pub c_sharp: f64,
    /// Maximizer on `B_2R`, mean zero over `B_R`, unit energy.
    pub witness_field: ScalarField,
    pub witness_quotient: f64,
    pub random_quotients: usize,
    pub max_random_quotient: f64,
    pub domain_size: usize,
}

/// Largest eigenvalue of the pencil (variance, energy) off the constants,
/// computed with one vertex grounded (both forms vanish on constants).
pub fn sharp_poincare(dom: &PoincareDomain) -> Result<(f64, Vec<f64>)> {
    let n = dom.len();
    if n < 2 {
        return Err(Error::DegenerateDomain("domain has one vertex".into()));
    }
    let a = dom.variance_matrix().view((0, 0), (n - 1, n - 1)).into_owned();
    let b = dom.energy_matrix().view((0, 0), (n - 1, n - 1)).into_owned();
    let chol = b
        .cholesky()
        .ok_or_else(|| Error::DegenerateDomain("energy form is not positive off constants".into()))?;
    let l = chol.l();
    let linv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::SolveFailed("triangular inverse".into()))?;
    let m = &linv * &a * linv.transpose();
    let m = (&m + m.transpose()) * 0.5;
    let eig = m.symmetric_eigen();
    let (k, &lam) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .unwrap();
    let w: DVector<f64> = eig.eigenvectors.column(k).into_owned();
    let f_red = linv.transpose() * w;
    let mut f: Vec<f64> = f_red.iter().copied().collect();
    f.push(0.0);
    let r2 = (dom.radius as f64).powi(2);
    Ok((lam / r2, f))
}

pub fn random_quotients(dom: &PoincareDomain, count: usize, seed: u64) -> Vec<f64> {
    par::map_range(count, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        loop {
            let f: Vec<f64> = (0..dom.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            if let Some(q) = dom.quotient(&f) {
                return q;
            }
        }
    })
}

pub fn poincare_constant(
    g: &ContactGraph,
    window: &Window,
    x: usize,
    radius: u32,
    variant: PoincareVariant,
    quotients: usize,
    seed: u64,
) -> Result<PoincareReport> {
    g.check_vertex(x)?;
    window.require_depth(x, 2 * radius)?;
    let dom = PoincareDomain::new(g, x, radius, variant)?;
    let (c_sharp, mut f) = sharp_poincare(&dom)?;
    let idx: Vec<usize> = (0..dom.len()).filter(|&i| dom.inner_mask[i]).collect();
    let mean = idx.iter().map(|&i| f[i]).sum::<f64>() / idx.len() as f64;
    f.iter_mut().for_each(|v| *v -= mean);
    let e = dom.energy_form(&f).sqrt();
    f.iter_mut().for_each(|v| *v /= e);
    let witness_quotient = dom.quotient(&f).unwrap_or(0.0);
    let qs = random_quotients(&dom, quotients, seed);
    let max_random_quotient = qs.iter().copied().fold(0.0, f64::max);
    let slack = 1e-9 * c_sharp.max(1.0);
    if max_random_quotient > c_sharp + slack {
        return Err(Error::SolveFailed(format!(
            "random quotient {max_random_quotient} exceeds eigenvalue bound {c_sharp}"
        )));
    }
    Ok(PoincareReport {
        center: x,
        radius,
        variant,
        c_sharp,
        witness_field: ScalarField::from_fn(0..dom.len(), |i| f[i]).relabel(&dom.outer),
        witness_quotient,
        random_quotients: quotients,
        max_random_quotient,
        domain_size: dom.len(),
    })
}

/// Extremes of `u` over Ω ∪ δΩ are taken on δΩ, up to `tol`.
pub fn maximum_principle_check(prob: &DirichletProblem, u: &ScalarField, tol: f64) -> bool {
    let (mut bmin, mut bmax) = (f64::INFINITY, f64::NEG_INFINITY);
    for &b in &prob.boundary {
        let Some(v) = u.get(b) else { return false };
        bmin = bmin.min(v);
        bmax = bmax.max(v);
    }
    prob.omega.iter().all(|&x| match u.get(x) {
        Some(v) => v <= bmax + tol && v >= bmin - tol,
        None => false,
    })
}

/// `(2h+1)^2` square-lattice window centered at the origin carrying `x1 + x2`.
pub fn linear_square_sample(h: i64) -> (PennyConfig, ScalarField) {
    let mut centers = Vec::new();
    for y in -h..=h {
        for x in -h..=h {
            centers.push(Point2::new(x as f64, y as f64));
        }
    }
    let field = ScalarField::from_fn(0..centers.len(), |v| centers[v].x + centers[v].y);
    (PennyConfig::new(centers, format!("square sample {h}")), field)
}

/// Triangular-lattice window with `2h+1` rows of `2h+1` disks, odd rows shifted
/// by half a step, carrying the integer field `i + 2j` in the lattice basis
/// `(1, 0), (1/2, sqrt3/2)`.
pub fn linear_triangular_sample(h: i64) -> (PennyConfig, ScalarField) {
    let mut centers = Vec::new();
    for j in -h..=h {
        let shift = if j.rem_euclid(2) == 1 { (j + 1) / 2 } else { j / 2 };
        for k in -h..=h {
            centers.push(triangular_point(k - shift, j));
        }
    }
    let field = ScalarField::from_fn(0..centers.len(), |v| {
        let (i, j) = triangular_index(centers[v]);
        (i + 2 * j) as f64
    });
    (PennyConfig::new(centers, format!("triangular sample {h}")), field)
}
