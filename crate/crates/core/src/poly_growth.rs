//! Exact dimensions of discrete harmonic and caloric polynomial spaces on
//! the square and triangular lattices.
//!
//! Polynomials are in lattice coordinates, so every stencil shift is an
//! integer translation and all arithmetic stays in `BigRational`.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;

pub const MAX_KMAX: u32 = 8;
/// Side of the pointwise verification window.
pub const VERIFY_SIDE: i64 = 50;
/// Time steps `t = 0..VERIFY_TIMES` in the caloric verification.
pub const VERIFY_TIMES: i64 = 11;
/// Constant used for the bound flags.
pub const BOUND_C: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeModel {
    pub name: String,
    pub stencil: Vec<(i64, i64)>,
}

impl LatticeModel {
    pub fn square() -> Self {
        Self {
            name: "z2".into(),
            stencil: vec![(1, 0), (-1, 0), (0, 1), (0, -1)],
        }
    }

    /// Basis `e1 = (1, 0)`, `e2 = (1/2, sqrt3/2)`; neighbors `±e1, ±e2, ±(e1 - e2)`.
    pub fn triangular() -> Self {
        Self {
            name: "triangular".into(),
            stencil: vec![(1, 0), (-1, 0), (0, 1), (0, -1), (1, -1), (-1, 1)],
        }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "z2" | "square" => Ok(Self::square()),
            "triangular" | "tri" => Ok(Self::triangular()),
            _ => Err(Error::InvalidArgument(format!("unknown lattice model {name:?}"))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.stencil.is_empty() || self.stencil.len() > 6 {
            return Err(Error::InvalidArgument("stencil size must be in 1..=6".into()));
        }
        for &(a, b) in &self.stencil {
            if (a, b) == (0, 0) || !self.stencil.contains(&(-a, -b)) {
                return Err(Error::InvalidArgument("stencil must be symmetric and nonzero".into()));
            }
        }
        Ok(())
    }
}

fn q(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

fn binomial(n: u32, k: u32) -> BigInt {
    let mut r = BigInt::one();
    for i in 0..k {
        r = r * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    r
}

fn pow_i(a: i64, e: u32) -> BigInt {
    num_traits::pow(BigInt::from(a), e as usize)
}

/// `Σ c_ij x^i y^j` with nonzero coefficients only.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Poly2 {
    pub coeffs: BTreeMap<(u32, u32), BigRational>,
}

impl Poly2 {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn monomial(i: u32, j: u32, c: BigRational) -> Self {
        let mut p = Self::zero();
        p.add_term((i, j), c);
        p
    }

    pub fn from_terms(terms: &[((u32, u32), i64)]) -> Self {
        let mut p = Self::zero();
        for &(m, c) in terms {
            p.add_term(m, q(c));
        }
        p
    }

    pub fn add_term(&mut self, m: (u32, u32), c: BigRational) {
        if c.is_zero() {
            return;
        }
        let e = self.coeffs.entry(m).or_insert_with(BigRational::zero);
        *e += c;
        if e.is_zero() {
            self.coeffs.remove(&m);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Total degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.coeffs.keys().map(|&(i, j)| i + j).max()
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut r = self.clone();
        for (&m, c) in &other.coeffs {
            r.add_term(m, c.clone());
        }
        r
    }

    pub fn scale(&self, s: &BigRational) -> Self {
        let mut r = Self::zero();
        for (&m, c) in &self.coeffs {
            r.add_term(m, c * s);
        }
        r
    }

    /// `p(x + a, y + b)`.
    pub fn shift(&self, a: i64, b: i64) -> Self {
        let mut r = Self::zero();
        for (&(i, j), c) in &self.coeffs {
            for s in 0..=i {
                let cx = binomial(i, s) * pow_i(a, i - s);
                for t in 0..=j {
                    let cy = binomial(j, t) * pow_i(b, j - t);
                    r.add_term((s, t), c * BigRational::from_integer(&cx * cy));
                }
            }
        }
        r
    }

    pub fn eval(&self, x: i64, y: i64) -> BigRational {
        let mut s = BigRational::zero();
        for (&(i, j), c) in &self.coeffs {
            s += c * BigRational::from_integer(pow_i(x, i) * pow_i(y, j));
        }
        s
    }

    /// `(numerator, denominator)` pairs keyed by exponents.
    pub fn export(&self) -> Vec<CoeffExport> {
        self.coeffs
            .iter()
            .map(|(&(i, j), c)| CoeffExport {
                exponents: vec![i, j],
                num: c.numer().to_string(),
                den: c.denom().to_string(),
            })
            .collect()
    }
}

/// `Σ c_ijm x^i y^j t^m`; parabolic degree `i + j + 2m`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Poly3 {
    pub coeffs: BTreeMap<(u32, u32, u32), BigRational>,
}

impl Poly3 {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn add_term(&mut self, m: (u32, u32, u32), c: BigRational) {
        if c.is_zero() {
            return;
        }
        let e = self.coeffs.entry(m).or_insert_with(BigRational::zero);
        *e += c;
        if e.is_zero() {
            self.coeffs.remove(&m);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn parabolic_degree(&self) -> Option<u32> {
        self.coeffs.keys().map(|&(i, j, m)| i + j + 2 * m).max()
    }

    /// Coefficient of `t^m` as a space polynomial.
    pub fn slice(&self, m: u32) -> Poly2 {
        let mut p = Poly2::zero();
        for (&(i, j, mm), c) in &self.coeffs {
            if mm == m {
                p.add_term((i, j), c.clone());
            }
        }
        p
    }

    pub fn at_time_zero(&self) -> Poly2 {
        self.slice(0)
    }

    pub fn time_derivative(&self) -> Self {
        let mut r = Self::zero();
        for (&(i, j, m), c) in &self.coeffs {
            if m > 0 {
                r.add_term((i, j, m - 1), c * q(m as i64));
            }
        }
        r
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut r = self.clone();
        for (&m, c) in &other.coeffs {
            r.add_term(m, -c.clone());
        }
        r
    }

    pub fn eval(&self, x: i64, y: i64, t: i64) -> BigRational {
        let mut s = BigRational::zero();
        for (&(i, j, m), c) in &self.coeffs {
            s += c * BigRational::from_integer(pow_i(x, i) * pow_i(y, j) * pow_i(t, m));
        }
        s
    }

    pub fn export(&self) -> Vec<CoeffExport> {
        self.coeffs
            .iter()
            .map(|(&(i, j, m), c)| CoeffExport {
                exponents: vec![i, j, m],
                num: c.numer().to_string(),
                den: c.denom().to_string(),
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoeffExport {
    pub exponents: Vec<u32>,
    pub num: String,
    pub den: String,
}

/// `Δp(v) = Σ_s (p(v + s) - p(v))`, expanded exactly.
pub fn stencil_laplacian(model: &LatticeModel, p: &Poly2) -> Poly2 {
    let mut r = Poly2::zero();
    let minus = p.scale(&q(-1));
    for &(a, b) in &model.stencil {
        r = r.add(&p.shift(a, b)).add(&minus);
    }
    r
}

/// Space Laplacian of each time slice.
pub fn stencil_laplacian3(model: &LatticeModel, u: &Poly3) -> Poly3 {
    let max_m = u.coeffs.keys().map(|k| k.2).max().unwrap_or(0);
    let mut r = Poly3::zero();
    for m in 0..=max_m {
        for ((i, j), c) in stencil_laplacian(model, &u.slice(m)).coeffs {
            r.add_term((i, j, m), c);
        }
    }
    r
}

/// `(∂_t - Δ) u`.
pub fn heat_operator(model: &LatticeModel, u: &Poly3) -> Poly3 {
    u.time_derivative().sub(&stencil_laplacian3(model, u))
}

pub fn is_caloric(model: &LatticeModel, u: &Poly3) -> bool {
    heat_operator(model, u).is_zero()
}

/// Monomials of total degree `<= k`, highest degree first.
pub fn monomials2(k: u32) -> Vec<(u32, u32)> {
    let mut out = Vec::new();
    for d in (0..=k).rev() {
        for i in (0..=d).rev() {
            out.push((i, d - i));
        }
    }
    out
}

/// Monomials `x^i y^j t^m` with `i + j + 2m <= two_k`, highest degree first.
pub fn monomials3(two_k: u32) -> Vec<(u32, u32, u32)> {
    let mut out = Vec::new();
    for d in (0..=two_k).rev() {
        for m in (0..=d / 2).rev() {
            let s = d - 2 * m;
            for i in (0..=s).rev() {
                out.push((i, s - i, m));
            }
        }
    }
    out
}

/// Reduces `rows` in place; returns pivot columns.
fn rref(rows: &mut [Vec<BigRational>], ncols: usize) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        let Some(p) = (r..rows.len()).find(|&i| !rows[i][c].is_zero()) else {
            continue;
        };
        rows.swap(r, p);
        let inv = rows[r][c].recip();
        for x in rows[r].iter_mut() {
            *x *= &inv;
        }
        for i in 0..rows.len() {
            if i != r && !rows[i][c].is_zero() {
                let f = rows[i][c].clone();
                let pivot = rows[r].clone();
                for (x, p) in rows[i].iter_mut().zip(&pivot) {
                    *x -= &f * p;
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == rows.len() {
            break;
        }
    }
    pivots
}

/// Nullspace basis read off the reduced echelon form, one vector per free column.
fn nullspace(mut rows: Vec<Vec<BigRational>>, ncols: usize) -> Vec<Vec<BigRational>> {
    let pivots = rref(&mut rows, ncols);
    let free: Vec<usize> = (0..ncols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![BigRational::zero(); ncols];
            v[f] = BigRational::one();
            for (r, &p) in pivots.iter().enumerate() {
                v[p] = -rows[r][f].clone();
            }
            v
        })
        .collect()
}

/// Matrix of a linear map given column images, rows indexed by the
/// monomials that occur.
fn image_matrix<K: Ord + Clone>(images: &[BTreeMap<K, BigRational>]) -> Vec<Vec<BigRational>> {
    let mut keys: Vec<K> = images.iter().flat_map(|m| m.keys().cloned()).collect();
    keys.sort();
    keys.dedup();
    keys.iter()
        .map(|k| {
            images
                .iter()
                .map(|m| m.get(k).cloned().unwrap_or_else(BigRational::zero))
                .collect()
        })
        .collect()
}

/// Integer-coefficient evaluator for pointwise checks.
struct IntPoly {
    terms: Vec<(u32, u32, u32, BigInt)>,
}

impl IntPoly {
    fn scaled(u: &Poly3, scale: &BigInt) -> Self {
        let s = BigRational::from_integer(scale.clone());
        Self {
            terms: u.coeffs.iter().map(|(&(i, j, m), c)| (i, j, m, (c * &s).to_integer())).collect(),
        }
    }

    /// Values on a grid of `(x, y)` for one `t`, via `i128` with a `BigInt` fallback.
    fn grid(&self, xs: &[i64], ys: &[i64], t: i64) -> Vec<Vec<BigInt>> {
        let small: Option<Vec<(u32, u32, u32, i128)>> = self
            .terms
            .iter()
            .map(|(i, j, m, c)| c.to_i128().map(|c| (*i, *j, *m, c)))
            .collect();
        xs.iter()
            .map(|&x| {
                ys.iter()
                    .map(|&y| {
                        let fast = small.as_ref().and_then(|terms| {
                            let mut s: i128 = 0;
                            for &(i, j, m, c) in terms {
                                let v = (x as i128)
                                    .checked_pow(i)?
                                    .checked_mul((y as i128).checked_pow(j)?)?
                                    .checked_mul((t as i128).checked_pow(m)?)?
                                    .checked_mul(c)?;
                                s = s.checked_add(v)?;
                            }
                            Some(BigInt::from(s))
                        });
                        fast.unwrap_or_else(|| {
                            self.terms
                                .iter()
                                .map(|(i, j, m, c)| c * pow_i(x, *i) * pow_i(y, *j) * pow_i(t, *m))
                                .sum()
                        })
                    })
                    .collect()
            })
            .collect()
    }
}

/// Pointwise `(∂_t - Δ) u = 0` on `[0, side)^2 × [0, times)`; a space
/// polynomial is passed as the time-independent `u`.
pub fn verify_pointwise(model: &LatticeModel, u: &Poly3, side: i64, times: i64) -> bool {
    let dt = u.time_derivative();
    let scale = u
        .coeffs
        .values()
        .chain(dt.coeffs.values())
        .fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
    let up = IntPoly::scaled(u, &scale);
    let dp = IntPoly::scaled(&dt, &scale);
    let pad = model.stencil.iter().map(|&(a, b)| a.abs().max(b.abs())).max().unwrap_or(1);
    let xs: Vec<i64> = (-pad..side + pad).collect();
    let ys = xs.clone();
    for t in 0..times {
        let uv = up.grid(&xs, &ys, t);
        let dv = dp.grid(&xs, &ys, t);
        for x in 0..side {
            for y in 0..side {
                let (ix, iy) = ((x + pad) as usize, (y + pad) as usize);
                let mut lap = BigInt::zero();
                for &(a, b) in &model.stencil {
                    lap += &uv[(ix as i64 + a) as usize][(iy as i64 + b) as usize] - &uv[ix][iy];
                }
                if dv[ix][iy] != lap {
                    return false;
                }
            }
        }
        if dt.is_zero() {
            // time-independent: one slice suffices
            break;
        }
    }
    true
}

pub fn space_poly_as_static(p: &Poly2) -> Poly3 {
    let mut u = Poly3::zero();
    for (&(i, j), c) in &p.coeffs {
        u.add_term((i, j, 0), c.clone());
    }
    u
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HarmonicSpace {
    pub k: u32,
    pub dim: usize,
    pub basis: Vec<Poly2>,
    /// Every basis element vanished under pointwise Δ on the verification window.
    pub verified: bool,
}

/// Kernel of `Δ` on polynomials of total degree `<= k`.
pub fn harmonic_poly_dim(model: &LatticeModel, k: u32) -> HarmonicSpace {
    let monos = monomials2(k);
    let images: Vec<BTreeMap<(u32, u32), BigRational>> = monos
        .iter()
        .map(|&(i, j)| stencil_laplacian(model, &Poly2::monomial(i, j, BigRational::one())).coeffs)
        .collect();
    let rows = image_matrix(&images);
    let kernel = nullspace(rows, monos.len());
    let basis: Vec<Poly2> = kernel
        .iter()
        .map(|v| {
            let mut p = Poly2::zero();
            for (c, &m) in v.iter().zip(&monos) {
                p.add_term(m, c.clone());
            }
            p
        })
        .collect();
    let verified = basis
        .iter()
        .all(|p| verify_pointwise(model, &space_poly_as_static(p), VERIFY_SIDE, 1));
    HarmonicSpace {
        k,
        dim: basis.len(),
        basis,
        verified,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CaloricSpace {
    pub two_k: u32,
    pub dim: usize,
    pub basis: Vec<Poly3>,
    pub verified: bool,
    /// `dim <= (two_k/2 + 1) * dim H(two_k)`.
    pub bound_ok: bool,
    pub harmonic_dim: usize,
}

/// Kernel of `∂_t - Δ` on space-time polynomials of parabolic degree `<= two_k`.
pub fn caloric_poly_dim(model: &LatticeModel, two_k: u32) -> Result<CaloricSpace> {
    if !two_k.is_multiple_of(2) {
        return Err(Error::InvalidArgument("two_k must be even".into()));
    }
    let monos = monomials3(two_k);
    let images: Vec<BTreeMap<(u32, u32, u32), BigRational>> = monos
        .iter()
        .map(|&m| {
            let mut u = Poly3::zero();
            u.add_term(m, BigRational::one());
            heat_operator(model, &u).coeffs
        })
        .collect();
    let kernel = nullspace(image_matrix(&images), monos.len());
    let basis: Vec<Poly3> = kernel
        .iter()
        .map(|v| {
            let mut u = Poly3::zero();
            for (c, &m) in v.iter().zip(&monos) {
                u.add_term(m, c.clone());
            }
            u
        })
        .collect();
    let verified = basis
        .iter()
        .all(|u| verify_pointwise(model, u, VERIFY_SIDE, VERIFY_TIMES));
    let harmonic_dim = harmonic_poly_dim(model, two_k).dim;
    let dim = basis.len();
    Ok(CaloricSpace {
        two_k,
        dim,
        basis,
        verified,
        bound_ok: dim <= (two_k as usize / 2 + 1) * harmonic_dim,
        harmonic_dim,
    })
}

/// `Σ_m t^m Δ^m p / m!`.
pub fn caloric_extension(model: &LatticeModel, p: &Poly2) -> Poly3 {
    let mut u = Poly3::zero();
    let mut term = p.clone();
    let mut fact = BigRational::one();
    let mut m = 0u32;
    while !term.is_zero() {
        for (&(i, j), c) in &term.coeffs {
            u.add_term((i, j, m), c / &fact);
        }
        term = stencil_laplacian(model, &term);
        m += 1;
        fact *= q(m as i64);
    }
    debug_assert!(is_caloric(model, &u));
    u
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimReport {
    pub k: u32,
    pub dim_harmonic: usize,
    /// Parabolic degree `k` caloric dimension, even `k` only.
    pub dim_caloric: Option<usize>,
    pub bound_ck2_ok: bool,
    pub bound_conjecture_ok: bool,
    pub bound_ancient_ok: Option<bool>,
    pub verified: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimTable {
    pub model: String,
    pub k_max: u32,
    pub bound_constant: f64,
    pub rows: Vec<DimReport>,
    /// `max_{k>=1} dim / k`.
    pub fitted_c_linear: f64,
    /// `max_{k>=1} dim / k^2`.
    pub fitted_c_quadratic: f64,
}

impl DimTable {
    pub fn dims(&self) -> Vec<usize> {
        self.rows.iter().map(|r| r.dim_harmonic).collect()
    }

    pub fn all_ok(&self) -> bool {
        self.rows.iter().all(|r| {
            r.verified && r.bound_ck2_ok && r.bound_conjecture_ok && r.bound_ancient_ok != Some(false)
        })
    }
}

pub fn dim_report(model: &LatticeModel, k_max: u32) -> Result<DimTable> {
    model.validate()?;
    if k_max > MAX_KMAX {
        return Err(Error::InvalidArgument(format!("k_max must be <= {MAX_KMAX}")));
    }
    let rows = par::map_range(k_max as usize + 1, |k| -> Result<DimReport> {
        let k = k as u32;
        let h = harmonic_poly_dim(model, k);
        let cal = if k.is_multiple_of(2) { Some(caloric_poly_dim(model, k)?) } else { None };
        let kf = k as f64;
        let d = h.dim as f64;
        Ok(DimReport {
            k,
            dim_harmonic: h.dim,
            dim_caloric: cal.as_ref().map(|c| c.dim),
            bound_ck2_ok: k == 0 || d <= BOUND_C * kf * kf,
            bound_conjecture_ok: k == 0 || d <= BOUND_C * kf,
            bound_ancient_ok: cal.as_ref().map(|c| c.bound_ok),
            verified: h.verified && cal.as_ref().is_none_or(|c| c.verified),
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let fit = |p: i32| {
        rows.iter()
            .filter(|r| r.k > 0)
            .map(|r| r.dim_harmonic as f64 / (r.k as f64).powi(p))
            .fold(0.0, f64::max)
    };
    Ok(DimTable {
        model: model.name.clone(),
        k_max,
        bound_constant: BOUND_C,
        fitted_c_linear: fit(1),
        fitted_c_quadratic: fit(2),
        rows,
    })
}

/// Exported harmonic basis for degree `k`.
pub fn export_basis(space: &HarmonicSpace) -> Vec<Vec<CoeffExport>> {
    space.basis.iter().map(Poly2::export).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Rank of an integer matrix by fraction-free (Bareiss) elimination.
    fn bareiss_rank(mut m: Vec<Vec<BigInt>>) -> usize {
        let rows = m.len();
        let cols = m.first().map_or(0, |r| r.len());
        let mut rank = 0;
        let mut prev = BigInt::one();
        for c in 0..cols {
            let Some(p) = (rank..rows).find(|&i| !m[i][c].is_zero()) else {
                continue;
            };
            m.swap(rank, p);
            for i in rank + 1..rows {
                for j in c + 1..cols {
                    let v = (&m[rank][c] * &m[i][j] - &m[i][c] * &m[rank][j]) / &prev;
                    m[i][j] = v;
                }
                m[i][c] = BigInt::zero();
            }
            prev = m[rank][c].clone();
            rank += 1;
        }
        rank
    }

    /// Kernel dimension from pointwise conditions `Δp(v) = 0` on a grid large
    /// enough to force the degree `<= k - 2` polynomial `Δp` to vanish.
    fn eval_oracle_dim(model: &LatticeModel, k: u32) -> usize {
        let monos = monomials2(k);
        let mut rows = Vec::new();
        for x in 0..=k as i64 {
            for y in 0..=k as i64 {
                rows.push(
                    monos
                        .iter()
                        .map(|&(i, j)| {
                            let mono = |x: i64, y: i64| pow_i(x, i) * pow_i(y, j);
                            model.stencil.iter().map(|&(a, b)| mono(x + a, y + b) - mono(x, y)).sum::<BigInt>()
                        })
                        .collect(),
                );
            }
        }
        monos.len() - bareiss_rank(rows)
    }

    #[test]
    fn laplacian_examples() {
        let z2 = LatticeModel::square();
        assert!(stencil_laplacian(&z2, &Poly2::from_terms(&[((0, 0), 1)])).is_zero());
        let lx2 = stencil_laplacian(&z2, &Poly2::from_terms(&[((2, 0), 1)]));
        assert_eq!(lx2, Poly2::from_terms(&[((0, 0), 2)]));
        for x in 0..20 {
            for y in 0..20 {
                let direct = (x + 1) * (x + 1) + (x - 1) * (x - 1) - 2 * x * x;
                assert_eq!(lx2.eval(x, y), q(direct));
            }
        }
        assert!(stencil_laplacian(&z2, &Poly2::from_terms(&[((2, 0), 1), ((0, 2), -1)])).is_zero());
        assert!(stencil_laplacian(&z2, &Poly2::from_terms(&[((1, 1), 1)])).is_zero());
        let tri = LatticeModel::triangular();
        tri.validate().unwrap();
        // x^2 on the triangular stencil: 2 + 0 + 2 (from ±(1,-1))
        assert_eq!(stencil_laplacian(&tri, &Poly2::from_terms(&[((2, 0), 1)])), Poly2::from_terms(&[((0, 0), 4)]));
    }

    #[test]
    fn harmonic_dims_z2() {
        let z2 = LatticeModel::square();
        let dims: Vec<usize> = (0..=6).map(|k| harmonic_poly_dim(&z2, k).dim).collect();
        assert_eq!(dims, vec![1, 3, 5, 7, 9, 11, 13]);
        for k in 0..=6 {
            assert_eq!(eval_oracle_dim(&z2, k), dims[k as usize]);
        }
        assert!(harmonic_poly_dim(&z2, 4).verified);
    }

    #[test]
    fn harmonic_dims_triangular() {
        let tri = LatticeModel::triangular();
        let dims: Vec<usize> = (0..=4).map(|k| harmonic_poly_dim(&tri, k).dim).collect();
        assert_eq!(dims, TRIANGULAR_DIMS.to_vec());
        for k in 0..=4 {
            assert_eq!(eval_oracle_dim(&tri, k), dims[k as usize]);
        }
    }

    pub(crate) const TRIANGULAR_DIMS: [usize; 5] = [1, 3, 5, 7, 9];

    #[test]
    fn pointwise_check_rejects_non_harmonic() {
        let z2 = LatticeModel::square();
        let p = Poly2::from_terms(&[((2, 0), 1)]);
        assert!(!verify_pointwise(&z2, &space_poly_as_static(&p), VERIFY_SIDE, 1));
        let big = Poly2::from_terms(&[((8, 0), 1_000_000_007), ((0, 8), -1_000_000_007)]);
        // non-harmonic, large values exercise the BigInt fallback
        assert!(!verify_pointwise(&z2, &space_poly_as_static(&big), VERIFY_SIDE, 1));
    }

    #[test]
    fn caloric_dims_and_extension() {
        let z2 = LatticeModel::square();
        assert_eq!(caloric_poly_dim(&z2, 0).unwrap().dim, 1);
        let c2 = caloric_poly_dim(&z2, 2).unwrap();
        assert_eq!((c2.dim, c2.harmonic_dim), (6, 5));
        assert!(c2.bound_ok && c2.verified);
        let c4 = caloric_poly_dim(&z2, 4).unwrap();
        assert_eq!((c4.dim, c4.harmonic_dim), (15, 9));
        assert!(c4.dim <= 27 && c4.verified);
        assert!(caloric_poly_dim(&z2, 3).is_err());

        let x2 = caloric_extension(&z2, &Poly2::from_terms(&[((2, 0), 1)]));
        let mut want = Poly3::zero();
        want.add_term((2, 0, 0), q(1));
        want.add_term((0, 0, 1), q(2));
        assert_eq!(x2, want);
        let x4 = Poly2::from_terms(&[((4, 0), 1)]);
        let e4 = caloric_extension(&z2, &x4);
        assert!(is_caloric(&z2, &e4));
        assert_eq!(e4.at_time_zero(), x4);
        assert_eq!(e4.slice(1), stencil_laplacian(&z2, &x4));
        let h = Poly2::from_terms(&[((1, 1), 1)]);
        assert_eq!(caloric_extension(&z2, &h), space_poly_as_static(&h));
    }

    #[test]
    fn dim_report_tables() {
        let t = dim_report(&LatticeModel::square(), 6).unwrap();
        assert_eq!(t.dims(), vec![1, 3, 5, 7, 9, 11, 13]);
        assert!(t.all_ok());
        assert_eq!(t.rows[2].dim_caloric, Some(6));
        assert_eq!(t.rows[4].dim_caloric, Some(15));
        assert!(t.fitted_c_linear <= 3.0);
        assert!(dim_report(&LatticeModel::square(), 9).is_err());
        let tri = dim_report(&LatticeModel::triangular(), 4).unwrap();
        assert_eq!(tri.dims(), TRIANGULAR_DIMS.to_vec());
        assert!(tri.all_ok());
    }

    #[test]
    fn basis_export_is_exact() {
        let s = harmonic_poly_dim(&LatticeModel::square(), 2);
        let ex = export_basis(&s);
        assert_eq!(ex.len(), 5);
        assert!(ex.iter().flatten().all(|c| c.den != "0"));
        assert!(LatticeModel::by_name("hex").is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn laplacian_matches_pointwise(coeffs in proptest::collection::vec(-20i64..20, 15), x in -30i64..30, y in -30i64..30, tri in any::<bool>()) {
            let model = if tri { LatticeModel::triangular() } else { LatticeModel::square() };
            let monos = monomials2(4);
            let terms: Vec<((u32, u32), i64)> = monos.into_iter().zip(coeffs).collect();
            let p = Poly2::from_terms(&terms);
            let lp = stencil_laplacian(&model, &p);
            let direct: BigRational = model.stencil.iter().map(|&(a, b)| p.eval(x + a, y + b) - p.eval(x, y)).sum();
            prop_assert_eq!(lp.eval(x, y), direct);
            prop_assert!(lp.degree().is_none_or(|d| d + 2 <= 4));
        }

        #[test]
        fn extension_is_caloric(coeffs in proptest::collection::vec(-9i64..9, 10)) {
            let model = LatticeModel::square();
            let terms: Vec<((u32, u32), i64)> = monomials2(3).into_iter().zip(coeffs).collect();
            let p = Poly2::from_terms(&terms);
            let u = caloric_extension(&model, &p);
            prop_assert!(is_caloric(&model, &u));
            prop_assert_eq!(u.at_time_zero(), p);
        }
    }
}
