//! Dense complex matrices, LU determinants, Pfaffians, Vandermonde and
//! Berezinian factors, Schur-complement reductions.

use crate::{Error, Result, C64};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::ops::{Index, IndexMut};

/// Relative tolerance for the antisymmetry check on Pfaffian input.
pub const ANTISYM_TOL: f64 = 1e-12;
/// Relative separation below which Berezinian arguments are coincident.
pub const SEP_TOL: f64 = 1e-9;
/// Largest admissible condition estimate of a Schur pivot block.
pub const SCHUR_COND_MAX: f64 = 1e14;

#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Validation("non-finite matrix entry".into()));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![C64::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        if rows.iter().any(|x| x.len() != c) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        Self::new(r, c, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z * s).collect() }
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(Self::from_fn(self.rows, other.cols, |i, j| {
            (0..self.cols).map(|k| self[(i, k)] * other[(k, j)]).sum()
        }))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Dimension("shape mismatch in addition".into()));
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Sub-matrix on the given row and column index sets.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Self {
        Self::from_fn(rows.len(), cols.len(), |i, j| self[(rows[i], cols[j])])
    }

    /// Largest |A + A^T| relative to the largest entry.
    pub fn antisymmetry_defect(&self) -> f64 {
        let scale = self.max_abs();
        if scale == 0.0 {
            return 0.0;
        }
        let mut d: f64 = 0.0;
        for i in 0..self.rows {
            for j in 0..=i {
                d = d.max((self[(i, j)] + self[(j, i)]).norm());
            }
        }
        d / scale
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

#[derive(Serialize, Deserialize)]
struct MatrixWire {
    rows: usize,
    cols: usize,
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

impl Serialize for CMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let grid = |f: fn(&C64) -> f64| -> Vec<Vec<f64>> {
            (0..self.rows).map(|i| (0..self.cols).map(|j| f(&self[(i, j)])).collect()).collect()
        };
        MatrixWire { rows: self.rows, cols: self.cols, re: grid(|z| z.re), im: grid(|z| z.im) }
            .serialize(s)
    }
}

impl<'de> Deserialize<'de> for CMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let w = MatrixWire::deserialize(d)?;
        if w.re.len() != w.rows || w.im.len() != w.rows {
            return Err(D::Error::custom("row count mismatch"));
        }
        let mut data = Vec::with_capacity(w.rows * w.cols);
        for (r, i) in w.re.iter().zip(&w.im) {
            if r.len() != w.cols || i.len() != w.cols {
                return Err(D::Error::custom("column count mismatch"));
            }
            data.extend(r.iter().zip(i).map(|(&a, &b)| C64::new(a, b)));
        }
        CMatrix::new(w.rows, w.cols, data).map_err(D::Error::custom)
    }
}

/// In-place LU with partial pivoting. Returns the permutation sign, or
/// `None` when an exactly zero pivot column is met.
fn lu_in_place(a: &mut CMatrix, perm: &mut [usize]) -> Option<f64> {
    let n = a.rows;
    let mut sign = 1.0;
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| a[(i, k)].norm().total_cmp(&a[(j, k)].norm()))
            .unwrap();
        if a[(p, k)].norm() == 0.0 {
            return None;
        }
        if p != k {
            for j in 0..n {
                a.data.swap(k * n + j, p * n + j);
            }
            perm.swap(k, p);
            sign = -sign;
        }
        let piv = a[(k, k)];
        for i in k + 1..n {
            let l = a[(i, k)] / piv;
            a[(i, k)] = l;
            if l.norm() != 0.0 {
                for j in k + 1..n {
                    let u = a[(k, j)];
                    a[(i, j)] -= l * u;
                }
            }
        }
    }
    Some(sign)
}

pub fn determinant(a: &CMatrix) -> Result<C64> {
    if !a.is_square() {
        return Err(Error::Dimension(format!("determinant of {}x{} matrix", a.rows, a.cols)));
    }
    let n = a.rows;
    if n == 0 {
        return Ok(C64::new(1.0, 0.0));
    }
    let mut lu = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    match lu_in_place(&mut lu, &mut perm) {
        None => Ok(C64::new(0.0, 0.0)),
        Some(s) => Ok((0..n).map(|i| lu[(i, i)]).product::<C64>() * s),
    }
}

/// Solve A X = B. Errors on an exactly singular A.
pub fn solve(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    if !a.is_square() || a.rows != b.rows {
        return Err(Error::Dimension("solve: incompatible shapes".into()));
    }
    let n = a.rows;
    let mut lu = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    if lu_in_place(&mut lu, &mut perm).is_none() {
        return Err(Error::Singular("exactly singular matrix".into()));
    }
    let mut x = CMatrix::zeros(n, b.cols);
    for c in 0..b.cols {
        let mut y: Vec<C64> = (0..n).map(|i| b[(perm[i], c)]).collect();
        for i in 0..n {
            for k in 0..i {
                let t = lu[(i, k)] * y[k];
                y[i] -= t;
            }
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                let t = lu[(i, k)] * y[k];
                y[i] -= t;
            }
            y[i] /= lu[(i, i)];
        }
        for i in 0..n {
            x[(i, c)] = y[i];
        }
    }
    Ok(x)
}

pub fn inverse(a: &CMatrix) -> Result<CMatrix> {
    solve(a, &CMatrix::identity(a.rows))
}

fn norm1(a: &CMatrix) -> f64 {
    (0..a.cols).map(|j| (0..a.rows).map(|i| a[(i, j)].norm()).sum::<f64>()).fold(0.0, f64::max)
}

/// 1-norm condition number, via an explicit inverse (blocks here are small).
pub fn condition_estimate(a: &CMatrix) -> f64 {
    match inverse(a) {
        Ok(inv) => norm1(a) * norm1(&inv),
        Err(_) => f64::INFINITY,
    }
}

/// Pfaffian together with a flag set when the dimension is odd (value 0).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PfaffianValue {
    pub value: C64,
    pub odd_dimension: bool,
}

fn check_antisymmetric(a: &CMatrix) -> Result<CMatrix> {
    if !a.is_square() {
        return Err(Error::Dimension(format!("Pfaffian of {}x{} matrix", a.rows, a.cols)));
    }
    let d = a.antisymmetry_defect();
    if d > ANTISYM_TOL {
        return Err(Error::Validation(format!("matrix not antisymmetric (defect {d:.3e})")));
    }
    let n = a.rows;
    Ok(CMatrix::from_fn(n, n, |i, j| (a[(i, j)] - a[(j, i)]) * 0.5))
}

fn pf_expand(a: &CMatrix, idx: &[usize]) -> C64 {
    if idx.is_empty() {
        return C64::new(1.0, 0.0);
    }
    let first = idx[0];
    let mut acc = C64::new(0.0, 0.0);
    let mut rest: Vec<usize> = Vec::with_capacity(idx.len() - 2);
    for j in 1..idx.len() {
        let e = a[(first, idx[j])];
        if e.norm() == 0.0 {
            continue;
        }
        rest.clear();
        rest.extend(idx[1..].iter().enumerate().filter(|&(k, _)| k + 1 != j).map(|(_, &x)| x));
        let s = if j % 2 == 1 { 1.0 } else { -1.0 };
        acc += e * pf_expand(a, &rest) * s;
    }
    acc
}

/// Skew-symmetric LTL^T elimination with pivoting.
fn pf_elimination(mut a: CMatrix) -> C64 {
    let n = a.rows;
    let mut pf = C64::new(1.0, 0.0);
    let mut k = 0;
    while k + 1 < n {
        let kp = (k + 1..n)
            .max_by(|&i, &j| a[(i, k)].norm().total_cmp(&a[(j, k)].norm()))
            .unwrap();
        if kp != k + 1 {
            for j in 0..n {
                a.data.swap((k + 1) * n + j, kp * n + j);
            }
            for i in 0..n {
                a.data.swap(i * n + k + 1, i * n + kp);
            }
            pf = -pf;
        }
        let piv = a[(k, k + 1)];
        if piv.norm() == 0.0 {
            return C64::new(0.0, 0.0);
        }
        pf *= piv;
        if k + 2 < n {
            let tau: Vec<C64> = (k + 2..n).map(|j| a[(k, j)] / piv).collect();
            let col: Vec<C64> = (k + 2..n).map(|i| a[(i, k + 1)]).collect();
            for (ii, i) in (k + 2..n).enumerate() {
                for (jj, j) in (k + 2..n).enumerate() {
                    a[(i, j)] += tau[ii] * col[jj] - col[ii] * tau[jj];
                }
            }
        }
        k += 2;
    }
    pf
}

pub fn pfaffian_flagged(a: &CMatrix) -> Result<PfaffianValue> {
    let a = check_antisymmetric(a)?;
    let n = a.rows;
    if n % 2 == 1 {
        return Ok(PfaffianValue { value: C64::new(0.0, 0.0), odd_dimension: true });
    }
    let value = if n <= 8 {
        let idx: Vec<usize> = (0..n).collect();
        pf_expand(&a, &idx)
    } else {
        pf_elimination(a)
    };
    Ok(PfaffianValue { value, odd_dimension: false })
}

/// Pfaffian; zero for odd dimension, 1 for the empty matrix.
pub fn pfaffian(a: &CMatrix) -> Result<C64> {
    pfaffian_flagged(a).map(|p| p.value)
}

/// Pfaffian by elimination regardless of size (used to cross-check).
pub fn pfaffian_elimination(a: &CMatrix) -> Result<C64> {
    let a = check_antisymmetric(a)?;
    if a.rows % 2 == 1 {
        return Ok(C64::new(0.0, 0.0));
    }
    Ok(pf_elimination(a))
}

/// Pfaffian by full expansion along the first row (exponential cost).
pub fn pfaffian_expansion(a: &CMatrix) -> Result<C64> {
    let a = check_antisymmetric(a)?;
    if a.rows % 2 == 1 {
        return Ok(C64::new(0.0, 0.0));
    }
    let idx: Vec<usize> = (0..a.rows).collect();
    Ok(pf_expand(&a, &idx))
}

/// prod_{a<b} (z_a - z_b)
pub fn vandermonde(z: &[C64]) -> C64 {
    let mut r = C64::new(1.0, 0.0);
    for a in 0..z.len() {
        for b in a + 1..z.len() {
            r *= z[a] - z[b];
        }
    }
    r
}

fn separation_check(x1: &[C64], x2: &[C64]) -> Result<()> {
    let all: Vec<C64> = x1.iter().chain(x2).copied().collect();
    let scale = all.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let eps = SEP_TOL * scale;
    for a in 0..all.len() {
        for b in a + 1..all.len() {
            if (all[a] - all[b]).norm() < eps {
                return Err(Error::NearSingular(format!(
                    "arguments {a} and {b} coincide within {eps:.3e}"
                )));
            }
        }
    }
    Ok(())
}

/// Delta_p(x1) Delta_q(x2) / prod (x1_a - x2_b), without the p <= q
/// restriction. Used by the partition-function assemblies.
pub fn berezinian_unrestricted(x1: &[C64], x2: &[C64]) -> Result<C64> {
    separation_check(x1, x2)?;
    let mut r = vandermonde(x1) * vandermonde(x2);
    for a in x1 {
        for b in x2 {
            r /= a - b;
        }
    }
    Ok(r)
}

/// Square root of the Berezinian, product form (requires p <= q).
pub fn berezinian_sqrt(x1: &[C64], x2: &[C64]) -> Result<C64> {
    if x1.len() > x2.len() {
        return Err(Error::Unsupported(format!("p = {} exceeds q = {}", x1.len(), x2.len())));
    }
    berezinian_unrestricted(x1, x2)
}

/// Same quantity as a Cauchy/Vandermonde determinant.
pub fn berezinian_sqrt_det(x1: &[C64], x2: &[C64]) -> Result<C64> {
    let (p, q) = (x1.len(), x2.len());
    if p > q {
        return Err(Error::Unsupported(format!("p = {p} exceeds q = {q}")));
    }
    separation_check(x1, x2)?;
    let m = CMatrix::from_fn(q, q, |a, b| {
        if a < p {
            (x1[a] - x2[b]).inv()
        } else {
            x2[b].powi((a - p) as i32)
        }
    });
    let e = q * (q.saturating_sub(1)) / 2 + (q + 1) * p;
    let s = if e % 2 == 0 { 1.0 } else { -1.0 };
    Ok(determinant(&m)? * s)
}

/// det [[A, B], [C, D]] = det D * det(A - B D^{-1} C).
pub fn schur_det_reduce(a: &CMatrix, b: &CMatrix, c: &CMatrix, d: &CMatrix) -> Result<C64> {
    if !a.is_square() || !d.is_square() || b.rows != a.rows || b.cols != d.rows
        || c.rows != d.rows || c.cols != a.cols
    {
        return Err(Error::Dimension("schur_det_reduce: incompatible blocks".into()));
    }
    let cond = condition_estimate(d);
    if cond > SCHUR_COND_MAX {
        return Err(Error::Singular(format!("pivot block condition {cond:.3e}")));
    }
    let dinv_c = solve(d, c)?;
    let s = a.add(&b.matmul(&dinv_c)?.scale(C64::new(-1.0, 0.0)))?;
    Ok(determinant(d)? * determinant(&s)?)
}

/// Pf [[A, B], [-B^T, C]] = Pf C * Pf(A + B C^{-1} B^T).
pub fn schur_pf_reduce(a: &CMatrix, b: &CMatrix, c: &CMatrix) -> Result<C64> {
    if !a.is_square() || !c.is_square() || b.rows != a.rows || b.cols != c.rows {
        return Err(Error::Dimension("schur_pf_reduce: incompatible blocks".into()));
    }
    let cond = condition_estimate(c);
    if cond > SCHUR_COND_MAX {
        return Err(Error::Singular(format!("pivot block condition {cond:.3e}")));
    }
    let cinv_bt = solve(c, &b.transpose())?;
    let s = a.add(&b.matmul(&cinv_bt)?)?;
    // restore exact antisymmetry lost to rounding
    let n = s.rows;
    let s = CMatrix::from_fn(n, n, |i, j| (s[(i, j)] - s[(j, i)]) * 0.5);
    Ok(pfaffian(c)? * pfaffian(&s)?)
}
