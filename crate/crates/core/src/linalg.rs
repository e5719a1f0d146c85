//! Small dense complex matrices.
//!
//! Everything in here is sized for sector slices and reduced density
//! matrices of a handful of modes, so the kernels are plain cyclic Jacobi
//! sweeps: a two-sided one for Hermitian eigenproblems and a one-sided
//! (Hestenes) one for the SVD.

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::ops::{Index, IndexMut};

pub use num_complex::Complex64 as C64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

const MAX_SWEEPS: usize = 100;

/// Row-major complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
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

    /// Builds a matrix from row vectors. Returns `None` for ragged input.
    pub fn from_rows(rows: &[Vec<C64>]) -> Option<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return None;
        }
        Some(Self {
            rows: rows.len(),
            cols,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    pub fn diagonal(values: &[C64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, v) in values.iter().enumerate() {
            m[(i, i)] = *v;
        }
        m
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

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<C64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    /// Matrix product. Panics on incompatible shapes.
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matrix product shape mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, v.len(), "matrix-vector shape mismatch");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Kronecker product `self ⊗ other`; `self` indexes the most significant digit.
    pub fn kron(&self, other: &Self) -> Self {
        Self::from_fn(self.rows * other.rows, self.cols * other.cols, |i, j| {
            self[(i / other.rows, j / other.cols)] * other[(i % other.rows, j % other.cols)]
        })
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-ONE))
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        if (self.rows, self.cols) != (other.rows, other.cols) {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        libm::sqrt(self.data.iter().map(|v| v.norm_sqr()).sum())
    }

    /// `max |(M†M − I)_ij|`, or infinity for non-square input.
    pub fn unitarity_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        self.adjoint().mul(self).max_abs_diff(&Self::identity(self.rows))
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_deviation() <= tol
    }

    /// Right-multiplies columns `p`, `q` by the 2×2 block `g` (`[[gpp, gpq], [gqp, gqq]]`).
    fn rotate_columns(&mut self, p: usize, q: usize, g: &[C64; 4]) {
        let [gpp, gpq, gqp, gqq] = *g;
        for r in 0..self.rows {
            let a = self[(r, p)];
            let b = self[(r, q)];
            self[(r, p)] = a * gpp + b * gqp;
            self[(r, q)] = a * gpq + b * gqq;
        }
    }

    /// Left-multiplies rows `p`, `q` by the adjoint of the 2×2 block `g`.
    fn rotate_rows_adjoint(&mut self, p: usize, q: usize, g: &[C64; 4]) {
        let [gpp, gpq, gqp, gqq] = *g;
        for c in 0..self.cols {
            let a = self[(p, c)];
            let b = self[(q, c)];
            self[(p, c)] = gpp.conj() * a + gqp.conj() * b;
            self[(q, c)] = gpq.conj() * a + gqq.conj() * b;
        }
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

pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(v: &[C64]) -> f64 {
    libm::sqrt(v.iter().map(|x| x.norm_sqr()).sum())
}

/// The 2×2 rotation that zeroes a Hermitian off-diagonal pair.
///
/// `off` is the (p, q) entry being annihilated, `zeta` the cotangent of the
/// doubled rotation angle. The block first strips the phase of `off` from
/// column q, then applies a real Jacobi rotation.
fn jacobi_block(off: C64, zeta: f64) -> [C64; 4] {
    let t = if zeta >= 0.0 {
        1.0 / (zeta + libm::sqrt(1.0 + zeta * zeta))
    } else {
        -1.0 / (-zeta + libm::sqrt(1.0 + zeta * zeta))
    };
    let c = 1.0 / libm::sqrt(1.0 + t * t);
    let s = t * c;
    let phase = (off / off.norm()).conj();
    [C64::new(c, 0.0), C64::new(s, 0.0), phase * (-s), phase * c]
}

/// Eigendecomposition of a Hermitian matrix.
///
/// Eigenvalues come back in descending order with matching eigenvector
/// columns. Each eigenvector is phase-fixed so its first significant
/// component is real positive; near-equal eigenvalues are ordered by
/// comparing eigenvectors lexicographically.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    assert!(m.is_square(), "eigendecomposition of a non-square matrix");
    let n = m.rows();
    let mut a = m.add(&m.adjoint()).scale(C64::new(0.5, 0.0));
    let mut v = CMatrix::identity(n);
    let scale = a.frobenius_norm();

    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += a[(p, q)].norm_sqr();
            }
        }
        if off == 0.0 || libm::sqrt(off) <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let h = a[(p, q)];
                let h_abs = h.norm();
                if h_abs <= f64::MIN_POSITIVE {
                    continue;
                }
                let zeta = (a[(q, q)].re - a[(p, p)].re) / (2.0 * h_abs);
                let g = jacobi_block(h, zeta);
                a.rotate_columns(p, q, &g);
                a.rotate_rows_adjoint(p, q, &g);
                a[(p, q)] = ZERO;
                a[(q, p)] = ZERO;
                v.rotate_columns(p, q, &g);
            }
        }
    }

    let mut pairs: Vec<(f64, Vec<C64>)> = (0..n)
        .map(|j| (a[(j, j)].re, fix_phase(v.column(j))))
        .collect();
    pairs.sort_by(|(la, va), (lb, vb)| {
        let tol = 1e-12 * la.abs().max(lb.abs()).max(1.0);
        if (la - lb).abs() <= tol {
            lexicographic(va, vb)
        } else {
            lb.partial_cmp(la).unwrap_or(Ordering::Equal)
        }
    });
    let values = pairs.iter().map(|(l, _)| *l).collect();
    let vectors = CMatrix::from_fn(n, n, |i, j| pairs[j].1[i]);
    (values, vectors)
}

fn fix_phase(mut v: Vec<C64>) -> Vec<C64> {
    if let Some(lead) = v.iter().find(|x| x.norm() > 1e-12).copied() {
        let phase = (lead / lead.norm()).conj();
        for x in &mut v {
            *x *= phase;
        }
    }
    v
}

fn lexicographic(a: &[C64], b: &[C64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        let ord = y
            .re
            .partial_cmp(&x.re)
            .unwrap_or(Ordering::Equal)
            .then(y.im.partial_cmp(&x.im).unwrap_or(Ordering::Equal));
        if ord != Ordering::Equal && (x - y).norm() > 1e-12 {
            return ord;
        }
    }
    Ordering::Equal
}

/// Singular value decomposition `A = U Σ V†` of a matrix with `rows ≥ cols`.
#[derive(Clone, Debug)]
pub struct Svd {
    /// `rows × rows` unitary; the first `cols` columns pair with `sigma`.
    pub u: CMatrix,
    /// Singular values, descending.
    pub sigma: Vec<f64>,
    /// `cols × cols` unitary.
    pub v: CMatrix,
}

/// One-sided Jacobi SVD. Left singular vectors belonging to vanishing
/// singular values are completed by Gram-Schmidt against the standard basis.
pub fn svd(a: &CMatrix) -> Svd {
    let (m, n) = (a.rows(), a.cols());
    assert!(m >= n, "svd expects rows >= cols");
    let mut g = a.clone();
    let mut v = CMatrix::identity(n);

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, ZERO);
                for r in 0..m {
                    let (x, y) = (g[(r, p)], g[(r, q)]);
                    alpha += x.norm_sqr();
                    beta += y.norm_sqr();
                    gamma += x.conj() * y;
                }
                let gamma_abs = gamma.norm();
                if gamma_abs <= f64::MIN_POSITIVE || gamma_abs <= 1e-15 * libm::sqrt(alpha * beta)
                {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma_abs);
                let block = jacobi_block(gamma, zeta);
                g.rotate_columns(p, q, &block);
                v.rotate_columns(p, q, &block);
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<(f64, usize)> = (0..n).map(|j| (norm(&g.column(j)), j)).collect();
    order.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(Ordering::Equal).then(a.1.cmp(&b.1)));
    let sigma_max = order.first().map_or(0.0, |o| o.0);
    let cutoff = 1e-14 * sigma_max.max(f64::MIN_POSITIVE);

    let mut u_cols: Vec<Vec<C64>> = Vec::with_capacity(m);
    let mut sigma = Vec::with_capacity(n);
    let mut v_cols = Vec::with_capacity(n);
    for &(s, j) in &order {
        v_cols.push(v.column(j));
        if s > cutoff {
            let inv = 1.0 / s;
            u_cols.push(g.column(j).iter().map(|x| x * inv).collect());
            sigma.push(s);
        } else {
            sigma.push(0.0);
        }
    }
    complete_basis(&mut u_cols, m);

    Svd {
        u: CMatrix::from_fn(m, m, |i, j| u_cols[j][i]),
        sigma,
        v: CMatrix::from_fn(n, n, |i, j| v_cols[j][i]),
    }
}

/// Extends orthonormal columns to a full basis of `C^dim`.
pub fn complete_basis(cols: &mut Vec<Vec<C64>>, dim: usize) {
    for e in 0..dim {
        if cols.len() >= dim {
            break;
        }
        let mut w = vec![ZERO; dim];
        w[e] = ONE;
        for _ in 0..2 {
            for c in cols.iter() {
                let proj = inner(c, &w);
                for (wi, ci) in w.iter_mut().zip(c) {
                    *wi -= proj * ci;
                }
            }
        }
        let len = norm(&w);
        if len > 1e-6 {
            cols.push(w.iter().map(|x| x / len).collect());
        }
    }
}

/// Principal square root of a positive semidefinite Hermitian matrix.
/// Slightly negative eigenvalues from rounding are clamped to zero.
pub fn psd_sqrt(m: &CMatrix) -> CMatrix {
    let (vals, vecs) = hermitian_eigen(m);
    let roots: Vec<C64> = vals
        .iter()
        .map(|&l| C64::new(libm::sqrt(l.max(0.0)), 0.0))
        .collect();
    vecs.mul(&CMatrix::diagonal(&roots)).mul(&vecs.adjoint())
}

/// Unitary `U` maximizing `Re tr(U A)`, i.e. `V W†` for `A = W Σ V†`.
pub fn maximizing_unitary(a: &CMatrix) -> CMatrix {
    let d = svd(a);
    d.v.mul(&d.u.adjoint())
}
