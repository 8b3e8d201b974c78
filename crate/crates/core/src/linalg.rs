//! Dense row-major matrices and the handful of factorizations the geometry code
//! needs: pivoted LU determinants, inverses, symmetric eigendecompositions and
//! singular values.
//!
//! Everything is `f64`. Matrices here are small (metrics are d×d with d ≤ 10)
//! except for Jacobians of image classifiers, which reach a few hundred rows;
//! the eigenvalue-only path switches to Householder tridiagonalization plus
//! implicit QL for those.

use std::fmt;
use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// Above this size `sym_eigenvalues` uses tridiagonal QL instead of Jacobi.
const JACOBI_MAX_DIM: usize = 32;

#[derive(Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows.min(8) {
            writeln!(f, "  {:?}", &self.row(r)[..self.cols.min(8)])?;
        }
        write!(f, "]")
    }
}

impl DenseMatrix {
    /// Builds a matrix from row-major data, rejecting wrong lengths and
    /// non-finite entries.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::dim("matrix data", rows * cols, data.len()));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::contract("matrix entries must be finite"));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(n * m);
        for row in rows {
            if row.len() != m {
                return Err(Error::dim("matrix row", m, row.len()));
            }
            data.extend_from_slice(row);
        }
        Self::new(n, m, data)
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, v) in values.iter().enumerate() {
            m[(i, i)] = *v;
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        let c = self.cols;
        &mut self.data[r * c..(r + 1) * c]
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)])
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        })
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.rows != other.rows {
            return Err(Error::dim("matrix rows", self.rows, other.rows));
        }
        if self.cols != other.cols {
            return Err(Error::dim("matrix cols", self.cols, other.cols));
        }
        Ok(())
    }

    /// Matrix product `self * other`.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::dim("matmul inner dimension", self.cols, other.rows));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        gemm(
            self.rows,
            self.cols,
            other.cols,
            (&self.data, self.cols as isize, 1),
            (&other.data, other.cols as isize, 1),
            &mut out.data,
        );
        Ok(out)
    }

    /// `selfᵀ * other` without materializing the transpose.
    pub fn t_matmul(&self, other: &Self) -> Result<Self> {
        if self.rows != other.rows {
            return Err(Error::dim("t_matmul inner dimension", self.rows, other.rows));
        }
        let mut out = Self::zeros(self.cols, other.cols);
        gemm(
            self.cols,
            self.rows,
            other.cols,
            (&self.data, 1, self.cols as isize),
            (&other.data, other.cols as isize, 1),
            &mut out.data,
        );
        Ok(out)
    }

    /// `self * otherᵀ` without materializing the transpose.
    pub fn matmul_t(&self, other: &Self) -> Result<Self> {
        if self.cols != other.cols {
            return Err(Error::dim("matmul_t inner dimension", self.cols, other.cols));
        }
        let mut out = Self::zeros(self.rows, other.rows);
        gemm(
            self.rows,
            self.cols,
            other.rows,
            (&self.data, self.cols as isize, 1),
            (&other.data, 1, other.cols as isize),
            &mut out.data,
        );
        Ok(out)
    }

    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.cols {
            return Err(Error::dim("matvec", self.cols, v.len()));
        }
        Ok((0..self.rows)
            .map(|r| self.row(r).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// `selfᵀ self`, exactly symmetric.
    pub fn gram(&self) -> Self {
        let mut g = self.t_matmul(self).expect("shapes agree");
        g.symmetrize();
        g
    }

    /// `self selfᵀ`, exactly symmetric.
    pub fn outer_gram(&self) -> Self {
        let mut g = self.matmul_t(self).expect("shapes agree");
        g.symmetrize();
        g
    }

    /// Replaces the matrix by `(m + mᵀ)/2`. Square matrices only.
    pub fn symmetrize(&mut self) {
        debug_assert!(self.is_square());
        let n = self.rows;
        for i in 0..n {
            for j in (i + 1)..n {
                let v = 0.5 * (self[(i, j)] + self[(j, i)]);
                self[(i, j)] = v;
                self[(j, i)] = v;
            }
        }
    }

    pub fn asymmetry(&self) -> f64 {
        let n = self.rows;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    fn require_square(&self, what: &'static str) -> Result<()> {
        if !self.is_square() {
            return Err(Error::dim(what, self.rows, self.cols));
        }
        Ok(())
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &f64 {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut f64 {
        &mut self.data[r * self.cols + c]
    }
}

/// `c = a * b` for an m×k by k×n product with arbitrary strides. Single
/// threaded with a fixed reduction order, so results are reproducible.
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    (a, rsa, csa): (&[f64], isize, isize),
    (b, rsb, csb): (&[f64], isize, isize),
    c: &mut [f64],
) {
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        c.iter_mut().for_each(|v| *v = 0.0);
        return;
    }
    // SAFETY: the caller passes slices that cover the strided extents of
    // m×k, k×n and m×n matrices; `c` is row-major with n columns.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            0.0,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

struct Lu {
    lu: DenseMatrix,
    perm: Vec<usize>,
    sign: f64,
    singular: bool,
}

fn lu_decompose(m: &DenseMatrix) -> Lu {
    let n = m.rows;
    let mut lu = m.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut sign = 1.0;
    let mut singular = false;
    for k in 0..n {
        let mut p = k;
        let mut best = lu[(k, k)].abs();
        for r in (k + 1)..n {
            let v = lu[(r, k)].abs();
            if v > best {
                best = v;
                p = r;
            }
        }
        if best == 0.0 {
            singular = true;
            continue;
        }
        if p != k {
            for c in 0..n {
                lu.data.swap(k * n + c, p * n + c);
            }
            perm.swap(k, p);
            sign = -sign;
        }
        let pivot = lu[(k, k)];
        for r in (k + 1)..n {
            let f = lu[(r, k)] / pivot;
            lu[(r, k)] = f;
            if f != 0.0 {
                for c in (k + 1)..n {
                    let v = lu[(k, c)];
                    lu[(r, c)] -= f * v;
                }
            }
        }
    }
    Lu {
        lu,
        perm,
        sign,
        singular,
    }
}

/// Determinant via partially pivoted LU.
pub fn determinant(m: &DenseMatrix) -> Result<f64> {
    m.require_square("determinant")?;
    let n = m.rows;
    if n == 0 {
        return Ok(1.0);
    }
    let Lu { lu, sign, singular, .. } = lu_decompose(m);
    if singular {
        return Ok(0.0);
    }
    Ok((0..n).fold(sign, |acc, i| acc * lu[(i, i)]))
}

/// Inverse via LU; a singular matrix is a contract error.
pub fn inverse(m: &DenseMatrix) -> Result<DenseMatrix> {
    m.require_square("inverse")?;
    let n = m.rows;
    let Lu { lu, perm, singular, .. } = lu_decompose(m);
    if singular {
        return Err(Error::contract("matrix is singular"));
    }
    let mut inv = DenseMatrix::zeros(n, n);
    let mut col = vec![0.0; n];
    for j in 0..n {
        for (i, slot) in col.iter_mut().enumerate() {
            *slot = if perm[i] == j { 1.0 } else { 0.0 };
        }
        for i in 0..n {
            let mut s = col[i];
            for k in 0..i {
                s -= lu[(i, k)] * col[k];
            }
            col[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = col[i];
            for k in (i + 1)..n {
                s -= lu[(i, k)] * col[k];
            }
            col[i] = s / lu[(i, i)];
        }
        for i in 0..n {
            inv[(i, j)] = col[i];
        }
    }
    Ok(inv)
}

#[derive(Debug, Clone)]
pub struct SymEigen {
    /// Sorted descending.
    pub values: Vec<f64>,
    /// Column `i` is the unit eigenvector for `values[i]`.
    pub vectors: DenseMatrix,
}

fn check_symmetric(m: &DenseMatrix) -> Result<()> {
    m.require_square("symmetric eigendecomposition")?;
    let tol = 1e-10 * m.max_abs().max(1.0);
    let asym = m.asymmetry();
    if asym > tol {
        return Err(Error::contract(format!(
            "matrix is not symmetric (max asymmetry {asym:e} > {tol:e})"
        )));
    }
    Ok(())
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
pub fn sym_eig(m: &DenseMatrix) -> Result<SymEigen> {
    check_symmetric(m)?;
    let n = m.rows;
    let mut a = m.clone();
    a.symmetrize();
    let mut v = DenseMatrix::identity(n);
    let norm = a.frobenius();
    let threshold = 1e-14 * norm;

    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum::<f64>()
            .sqrt();
        if off <= threshold || norm == 0.0 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let vectors = DenseMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(SymEigen { values, vectors })
}

/// Eigenvalues of a symmetric matrix, sorted descending. Small matrices go
/// through Jacobi; large ones through Householder tridiagonalization and
/// implicit QL.
pub fn sym_eigenvalues(m: &DenseMatrix) -> Result<Vec<f64>> {
    check_symmetric(m)?;
    if m.rows <= JACOBI_MAX_DIM {
        return Ok(sym_eig(m)?.values);
    }
    let mut a = m.clone();
    a.symmetrize();
    let (mut d, mut e) = tridiagonalize(&mut a);
    tridiagonal_ql(&mut d, &mut e)?;
    d.sort_by(|x, y| y.total_cmp(x));
    Ok(d)
}

/// Householder reduction to tridiagonal form (eigenvalues only). Returns the
/// diagonal and the subdiagonal stored in `e[1..]`.
fn tridiagonalize(a: &mut DenseMatrix) -> (Vec<f64>, Vec<f64>) {
    let n = a.rows;
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = 0.0;
        if l > 0 {
            let scale: f64 = a.row(i)[..=l].iter().map(|v| v.abs()).sum();
            if scale == 0.0 {
                e[i] = a[(i, l)];
            } else {
                for k in 0..=l {
                    a[(i, k)] /= scale;
                    h += a[(i, k)] * a[(i, k)];
                }
                let f = a[(i, l)];
                let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h -= f * g;
                a[(i, l)] = f - g;
                // p = A u over the stored lower triangle, walking rows.
                let u: Vec<f64> = a.row(i)[..=l].to_vec();
                let mut p = vec![0.0; l + 1];
                for j in 0..=l {
                    let row = &a.row(j)[..=j];
                    let uj = u[j];
                    let mut acc = 0.0;
                    for k in 0..j {
                        acc += row[k] * u[k];
                        p[k] += row[k] * uj;
                    }
                    p[j] += acc + row[j] * uj;
                }
                let mut f = 0.0;
                for j in 0..=l {
                    e[j] = p[j] / h;
                    f += e[j] * u[j];
                }
                let hh = f / (h + h);
                for j in 0..=l {
                    e[j] -= hh * u[j];
                }
                for j in 0..=l {
                    let (fj, gj) = (u[j], e[j]);
                    let row = &mut a.row_mut(j)[..=j];
                    for k in 0..=j {
                        row[k] -= fj * e[k] + gj * u[k];
                    }
                }
            }
        } else {
            e[i] = a[(i, l)];
        }
        let _ = h;
    }
    for (i, slot) in d.iter_mut().enumerate() {
        *slot = a[(i, i)];
    }
    (d, e)
}

/// Implicit QL with Wilkinson shifts on a symmetric tridiagonal matrix.
/// `e[1..]` holds the subdiagonal on entry; `d` holds eigenvalues on exit.
fn tridiagonal_ql(d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::contract("tridiagonal QL failed to converge"));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// Singular values, descending, from the eigenvalues of the smaller Gram
/// matrix. Rounding artifacts below zero are clamped before the square root.
pub fn singular_values(m: &DenseMatrix) -> Result<Vec<f64>> {
    if m.data.iter().any(|v| !v.is_finite()) {
        return Err(Error::contract("matrix entries must be finite"));
    }
    let gram = if m.rows >= m.cols { m.gram() } else { m.outer_gram() };
    let mut sv: Vec<f64> = sym_eigenvalues(&gram)?.into_iter().map(|l| l.max(0.0).sqrt()).collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    Ok(sv)
}

/// Symmetric PSD square root through the eigendecomposition. Small negative
/// eigenvalues from rounding are clamped to zero.
pub fn psd_sqrt(m: &DenseMatrix) -> Result<DenseMatrix> {
    let eig = sym_eig(m)?;
    let tol = 1e-10 * m.max_abs().max(1.0);
    if let Some(bad) = eig.values.iter().find(|&&l| l < -tol) {
        return Err(Error::contract(format!(
            "matrix is not positive semidefinite (eigenvalue {bad:e})"
        )));
    }
    let n = m.rows;
    let roots: Vec<f64> = eig.values.iter().map(|l| l.max(0.0).sqrt()).collect();
    let mut out = DenseMatrix::from_fn(n, n, |r, c| {
        (0..n)
            .map(|k| eig.vectors[(r, k)] * roots[k] * eig.vectors[(c, k)])
            .sum()
    });
    out.symmetrize();
    Ok(out)
}

/// `Σ log σᵢ` over the supplied singular values. Summing logs avoids the
/// underflow of the raw product for high-dimensional Jacobians.
pub fn log_volume(singular: &[f64]) -> f64 {
    singular.iter().map(|s| s.ln()).sum()
}
