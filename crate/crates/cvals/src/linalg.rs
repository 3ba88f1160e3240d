//! Dense matrix numerics implemented in-module: a row-major real matrix type
//! with an economy Golub-Kahan SVD, Moore-Penrose pseudoinverse, and a complex
//! Hermitian matrix type with a cyclic Jacobi eigensolver.
//!
//! The SVD pipeline is Householder bidiagonalization followed by implicit-shift
//! bidiagonal QR with Wilkinson shifts, deflation, and a Givens chase for zero
//! diagonal entries. `A = U * diag(sigma) * Vt` with `U` economy-sized
//! (`m x min(m,n)`), singular values sorted descending. Wide matrices are
//! handled by transposing and swapping the factors.
//!
//! All problems in this crate are small (dimensions up to a few thousand on
//! one side, at most a handful on the other), so clarity and determinism win
//! over blocking or parallelism.

use num_complex::Complex64;

use crate::error::{Error, Result};

// ---------------------------------------------------------------------------
// Real matrices
// ---------------------------------------------------------------------------

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    /// Zero matrix of the given shape.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![0.0; rows * cols] }
    }

    /// Identity matrix.
    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Build from nested rows; every row must have the same length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::invalid("matrix needs at least one row"));
        }
        let cols = rows[0].len();
        if cols == 0 {
            return Err(Error::invalid("matrix needs at least one column"));
        }
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::dim("ragged rows in matrix construction"));
        }
        let data = rows.iter().flatten().copied().collect();
        Ok(Mat { rows: rows.len(), cols, data })
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    /// Row slice view.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    /// Matrix product `self * other`.
    pub fn matmul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows, "shape mismatch in matmul");
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self[(i, k)];
                if aik == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += aik * other[(k, j)];
                }
            }
        }
        out
    }

    /// Matrix-vector product.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, x.len(), "shape mismatch in matvec");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Largest absolute entry of `self - other`.
    pub fn max_abs_diff(&self, other: &Mat) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl std::ops::Index<(usize, usize)> for Mat {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

// ---------------------------------------------------------------------------
// SVD: Householder bidiagonalization + implicit-shift bidiagonal QR
// ---------------------------------------------------------------------------

/// Economy singular value decomposition `A = U * diag(sigma) * Vt`.
///
/// `u` is `m x r`, `vt` is `r x n` with `r = min(m, n)`; `sigma` is sorted
/// descending and nonnegative.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: Mat,
    pub sigma: Vec<f64>,
    pub vt: Mat,
}

/// Plane rotation `(c, s)` with `c*a + s*b = r >= 0` and `c*b - s*a = 0`.
fn givens(a: f64, b: f64) -> (f64, f64) {
    let r = a.hypot(b);
    if r == 0.0 {
        (1.0, 0.0)
    } else {
        (a / r, b / r)
    }
}

/// Householder bidiagonalization of a tall matrix (m >= n).
///
/// Reflector vectors are stored in the strict lower/right parts of `work`
/// (normalized so the pivot component is 1); `left_tau[k]` holds the scaling
/// of the k-th left reflector (0 when the column was already reduced).
/// Returns the bidiagonal in `diag`/`off_diag` and the accumulated right
/// transform in `v` (n x n).
fn bidiagonalize(
    work: &mut Mat,
    diag: &mut [f64],
    off_diag: &mut [f64],
    left_tau: &mut [f64],
    v: &mut Mat,
) {
    let m = work.nrows();
    let n = work.ncols();
    debug_assert!(m >= n);
    let eps = f64::EPSILON;

    for i in 0..n {
        for j in 0..n {
            v[(i, j)] = if i == j { 1.0 } else { 0.0 };
        }
    }

    for k in 0..n {
        // Left reflector: clear work[k+1..m, k].
        let mut norm_sq = 0.0;
        for i in k..m {
            norm_sq += work[(i, k)] * work[(i, k)];
        }

        if norm_sq > eps * eps {
            let norm = norm_sq.sqrt();
            let akk = work[(k, k)];
            let sigma = if akk.abs() < eps { norm } else { norm * akk.signum() };
            let v0 = akk + sigma;
            work[(k, k)] = v0;
            for i in (k + 1)..m {
                work[(i, k)] /= v0;
            }
            let tau = v0 / sigma;
            left_tau[k] = tau;

            for j in (k + 1)..n {
                let mut dot = work[(k, j)];
                for i in (k + 1)..m {
                    dot += work[(i, k)] * work[(i, j)];
                }
                dot *= tau;
                work[(k, j)] -= dot;
                for i in (k + 1)..m {
                    let vi = work[(i, k)];
                    work[(i, j)] -= dot * vi;
                }
            }

            diag[k] = -sigma;
        } else {
            left_tau[k] = 0.0;
            diag[k] = work[(k, k)];
        }

        // Right reflector: clear work[k, k+2..n].
        if k + 2 < n {
            let mut norm_sq = 0.0;
            for j in (k + 1)..n {
                norm_sq += work[(k, j)] * work[(k, j)];
            }

            if norm_sq > eps * eps {
                let norm = norm_sq.sqrt();
                let akj = work[(k, k + 1)];
                let sigma = if akj.abs() < eps { norm } else { norm * akj.signum() };
                let v0 = akj + sigma;
                work[(k, k + 1)] = v0;
                for j in (k + 2)..n {
                    work[(k, j)] /= v0;
                }
                let tau = v0 / sigma;

                for i in (k + 1)..m {
                    let mut dot = work[(i, k + 1)];
                    for j in (k + 2)..n {
                        dot += work[(i, j)] * work[(k, j)];
                    }
                    dot *= tau;
                    work[(i, k + 1)] -= dot;
                    for j in (k + 2)..n {
                        let vj = work[(k, j)];
                        work[(i, j)] -= dot * vj;
                    }
                }

                for row in 0..n {
                    let mut dot = v[(row, k + 1)];
                    for j in (k + 2)..n {
                        dot += v[(row, j)] * work[(k, j)];
                    }
                    dot *= tau;
                    v[(row, k + 1)] -= dot;
                    for j in (k + 2)..n {
                        let vj = work[(k, j)];
                        v[(row, j)] -= dot * vj;
                    }
                }

                off_diag[k] = -sigma;
            } else {
                off_diag[k] = work[(k, k + 1)];
            }
        } else if k + 1 < n {
            off_diag[k] = work[(k, k + 1)];
        }
    }
}

/// Accumulate the economy left factor `U = H_0 H_1 ... H_{n-1} [I; 0]`
/// from the reflectors stored by `bidiagonalize`.
fn accumulate_thin_u(work: &Mat, left_tau: &[f64]) -> Mat {
    let m = work.nrows();
    let n = work.ncols();
    let mut u = Mat::zeros(m, n);
    for j in 0..n {
        u[(j, j)] = 1.0;
    }
    for k in (0..n).rev() {
        let tau = left_tau[k];
        if tau == 0.0 {
            continue;
        }
        for col in 0..n {
            let mut dot = u[(k, col)];
            for i in (k + 1)..m {
                dot += work[(i, k)] * u[(i, col)];
            }
            dot *= tau;
            u[(k, col)] -= dot;
            for i in (k + 1)..m {
                u[(i, col)] -= dot * work[(i, k)];
            }
        }
    }
    u
}

/// Golub-Kahan implicit-shift QR on a bidiagonal matrix; rotations are
/// accumulated into the columns of `u` and `v`. On success `diag` holds the
/// nonnegative singular values sorted descending.
fn bidiagonal_qr(
    diag: &mut [f64],
    off_diag: &mut [f64],
    u: &mut Mat,
    v: &mut Mat,
    max_iter: usize,
) -> Result<()> {
    let n = diag.len();
    if n == 1 {
        if diag[0] < 0.0 {
            diag[0] = -diag[0];
            for row in 0..u.nrows() {
                u[(row, 0)] = -u[(row, 0)];
            }
        }
        return Ok(());
    }

    let eps = f64::EPSILON;
    let mut iter = 0usize;
    let mut hi = n - 1;

    while hi > 0 {
        // Deflate a negligible trailing off-diagonal entry.
        let threshold = eps * (diag[hi - 1].abs() + diag[hi].abs());
        if off_diag[hi - 1].abs() <= threshold {
            off_diag[hi - 1] = 0.0;
            hi -= 1;
            continue;
        }

        // Find the start of the unreduced block.
        let mut lo = hi - 1;
        while lo > 0 {
            let threshold = eps * (diag[lo - 1].abs() + diag[lo].abs());
            if off_diag[lo - 1].abs() <= threshold {
                off_diag[lo - 1] = 0.0;
                break;
            }
            lo -= 1;
        }

        iter += 1;
        if iter > max_iter {
            return Err(Error::numerical("bidiagonal QR did not converge"));
        }

        // A zero diagonal entry breaks the Wilkinson shift; chase the
        // off-diagonal entry off the bottom with left Givens rotations.
        let mut found_zero = false;
        for idx in lo..hi {
            if diag[idx].abs() <= eps {
                diag[idx] = 0.0;
                let mut z = off_diag[idx];
                off_diag[idx] = 0.0;
                for j in (idx + 1)..=hi {
                    let (c, s) = givens(diag[j], z);
                    diag[j] = c * diag[j] + s * z;
                    if j < hi {
                        z = -s * off_diag[j];
                        off_diag[j] *= c;
                    }
                    for row in 0..u.nrows() {
                        let uj = u[(row, j)];
                        let ui = u[(row, idx)];
                        u[(row, j)] = c * uj + s * ui;
                        u[(row, idx)] = c * ui - s * uj;
                    }
                }
                found_zero = true;
                break;
            }
        }
        if found_zero {
            continue;
        }

        // Wilkinson shift from the trailing 2x2 of B^T B.
        let d_hi = diag[hi];
        let d_hi1 = diag[hi - 1];
        let e_hi1 = off_diag[hi - 1];
        let e_hi2 = if hi >= 2 && hi - 2 >= lo { off_diag[hi - 2] } else { 0.0 };

        let t11 = d_hi1 * d_hi1 + e_hi2 * e_hi2;
        let t12 = d_hi1 * e_hi1;
        let t22 = d_hi * d_hi + e_hi1 * e_hi1;

        let d = (t11 - t22) / 2.0;
        let sign_d = if d >= 0.0 { 1.0 } else { -1.0 };
        let mu = t22 - t12 * t12 / (d + sign_d * (d * d + t12 * t12).sqrt());

        // Implicit QR chase.
        let mut x = diag[lo] * diag[lo] - mu;
        let mut z = diag[lo] * off_diag[lo];

        for k in lo..hi {
            let (c, s) = givens(x, z);
            if k > lo {
                off_diag[k - 1] = c * x + s * z;
            }

            let dk = diag[k];
            let ek = off_diag[k];
            let dk1 = diag[k + 1];
            diag[k] = c * dk + s * ek;
            off_diag[k] = c * ek - s * dk;
            let bulge = s * dk1;
            diag[k + 1] = c * dk1;

            for row in 0..v.nrows() {
                let vk = v[(row, k)];
                let vk1 = v[(row, k + 1)];
                v[(row, k)] = c * vk + s * vk1;
                v[(row, k + 1)] = c * vk1 - s * vk;
            }

            let (c2, s2) = givens(diag[k], bulge);
            diag[k] = c2 * diag[k] + s2 * bulge;
            let old_ek = off_diag[k];
            let old_dk1 = diag[k + 1];
            off_diag[k] = c2 * old_ek + s2 * old_dk1;
            diag[k + 1] = c2 * old_dk1 - s2 * old_ek;

            if k + 1 < hi {
                let old_ek1 = off_diag[k + 1];
                x = off_diag[k];
                z = s2 * old_ek1;
                off_diag[k + 1] = c2 * old_ek1;
            }

            for row in 0..u.nrows() {
                let uk = u[(row, k)];
                let uk1 = u[(row, k + 1)];
                u[(row, k)] = c2 * uk + s2 * uk1;
                u[(row, k + 1)] = c2 * uk1 - s2 * uk;
            }
        }
    }

    // Flip signs so all singular values are nonnegative.
    for i in 0..n {
        if diag[i] < 0.0 {
            diag[i] = -diag[i];
            for row in 0..u.nrows() {
                u[(row, i)] = -u[(row, i)];
            }
        }
    }

    // Selection sort descending, permuting U and V columns alongside.
    for i in 0..n {
        let mut max_idx = i;
        for j in (i + 1)..n {
            if diag[j] > diag[max_idx] {
                max_idx = j;
            }
        }
        if max_idx != i {
            diag.swap(i, max_idx);
            for row in 0..u.nrows() {
                let tmp = u[(row, i)];
                u[(row, i)] = u[(row, max_idx)];
                u[(row, max_idx)] = tmp;
            }
            for row in 0..v.nrows() {
                let tmp = v[(row, i)];
                v[(row, i)] = v[(row, max_idx)];
                v[(row, max_idx)] = tmp;
            }
        }
    }

    Ok(())
}

fn svd_tall(a: &Mat) -> Result<Svd> {
    let m = a.nrows();
    let n = a.ncols();
    debug_assert!(m >= n);

    let mut work = a.clone();
    let mut diag = vec![0.0; n];
    let mut off_diag = vec![0.0; n.saturating_sub(1)];
    let mut left_tau = vec![0.0; n];
    let mut v = Mat::zeros(n, n);

    bidiagonalize(&mut work, &mut diag, &mut off_diag, &mut left_tau, &mut v);
    let mut u = accumulate_thin_u(&work, &left_tau);
    bidiagonal_qr(&mut diag, &mut off_diag, &mut u, &mut v, 30 * m.max(n))?;

    Ok(Svd { u, sigma: diag, vt: v.transpose() })
}

/// Singular value decomposition; wide matrices are transposed internally.
pub fn svd(a: &Mat) -> Result<Svd> {
    if a.nrows() >= a.ncols() {
        svd_tall(a)
    } else {
        let t = svd_tall(&a.transpose())?;
        Ok(Svd { u: t.vt.transpose(), sigma: t.sigma, vt: t.u.transpose() })
    }
}

/// Moore-Penrose pseudoinverse with singular values below
/// `rel_tol * sigma_max` treated as zero.
pub fn pinv(a: &Mat, rel_tol: f64) -> Result<Mat> {
    let dec = svd(a)?;
    let cutoff = rel_tol * dec.sigma.first().copied().unwrap_or(0.0);
    let r = dec.sigma.len();
    let mut out = Mat::zeros(a.ncols(), a.nrows());
    for k in 0..r {
        if dec.sigma[k] <= cutoff || dec.sigma[k] == 0.0 {
            continue;
        }
        let inv = 1.0 / dec.sigma[k];
        for j in 0..a.ncols() {
            let vjk = dec.vt[(k, j)];
            if vjk == 0.0 {
                continue;
            }
            for i in 0..a.nrows() {
                out[(j, i)] += vjk * inv * dec.u[(i, k)];
            }
        }
    }
    Ok(out)
}

/// Default relative cutoff for treating singular values as zero.
pub fn default_rel_tol(rows: usize, cols: usize) -> f64 {
    rows.max(cols) as f64 * f64::EPSILON * 64.0
}

// ---------------------------------------------------------------------------
// Complex matrices
// ---------------------------------------------------------------------------

/// Dense row-major matrix of `Complex64`.
#[derive(Debug, Clone, PartialEq)]
pub struct CMat {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMat { rows, cols, data: vec![Complex64::ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = CMat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::ONE;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::invalid("matrix needs at least one row"));
        }
        let cols = rows[0].len();
        if cols == 0 {
            return Err(Error::invalid("matrix needs at least one column"));
        }
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::dim("ragged rows in matrix construction"));
        }
        let data = rows.iter().flatten().copied().collect();
        Ok(CMat { rows: rows.len(), cols, data })
    }

    /// Real matrix embedded with zero imaginary parts.
    pub fn from_real(m: &Mat) -> Self {
        let mut out = CMat::zeros(m.nrows(), m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                out[(i, j)] = Complex64::new(m[(i, j)], 0.0);
            }
        }
        out
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> CMat {
        let mut t = CMat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)].conj();
            }
        }
        t
    }

    pub fn matmul(&self, other: &CMat) -> CMat {
        assert_eq!(self.cols, other.rows, "shape mismatch in matmul");
        let mut out = CMat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self[(i, k)];
                if aik == Complex64::ZERO {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += aik * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.cols, x.len(), "shape mismatch in matvec");
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)] * x[j]).sum())
            .collect()
    }

    pub fn add(&self, other: &CMat) -> CMat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        out
    }

    pub fn sub(&self, other: &CMat) -> CMat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a -= b;
        }
        out
    }

    pub fn scale(&self, s: Complex64) -> CMat {
        let mut out = self.clone();
        for a in out.data.iter_mut() {
            *a *= s;
        }
        out
    }

    pub fn trace(&self) -> Complex64 {
        debug_assert_eq!(self.rows, self.cols);
        (0..self.rows).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest absolute deviation from the conjugate transpose.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in 0..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Largest absolute deviation of `self^H self` from the identity.
    pub fn unitarity_defect(&self) -> f64 {
        let prod = self.adjoint().matmul(self);
        let mut worst = 0.0f64;
        for i in 0..self.cols {
            for j in 0..self.cols {
                let target = if i == j { Complex64::ONE } else { Complex64::ZERO };
                worst = worst.max((prod[(i, j)] - target).norm());
            }
        }
        worst
    }
}

impl std::ops::Index<(usize, usize)> for CMat {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

// ---------------------------------------------------------------------------
// Hermitian eigendecomposition: cyclic complex Jacobi
// ---------------------------------------------------------------------------

/// Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.
///
/// Returns `(eigenvalues, V)` with eigenvalues ascending and the columns of
/// the unitary `V` the matching eigenvectors, so `A = V * diag(w) * V^H`.
pub fn hermitian_eigen(a: &CMat) -> Result<(Vec<f64>, CMat)> {
    assert_eq!(a.nrows(), a.ncols(), "eigendecomposition needs a square matrix");
    let n = a.nrows();
    let mut m = a.clone();
    let mut v = CMat::identity(n);

    if n == 1 {
        return Ok((vec![m[(0, 0)].re], v));
    }

    let norm = m.frobenius_norm().max(f64::MIN_POSITIVE);
    let tol = 1e-15 * norm;
    let max_sweeps = 60;

    for _sweep in 0..max_sweeps {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += m[(p, q)].norm_sqr();
            }
        }
        if off.sqrt() <= tol {
            let mut pairs: Vec<(f64, usize)> =
                (0..n).map(|i| (m[(i, i)].re, i)).collect();
            pairs.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
            let w: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let mut sorted_v = CMat::zeros(n, n);
            for (new_col, &(_, old_col)) in pairs.iter().enumerate() {
                for row in 0..n {
                    sorted_v[(row, new_col)] = v[(row, old_col)];
                }
            }
            return Ok((w, sorted_v));
        }

        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                let mag = apq.norm();
                if mag <= tol / (n as f64) {
                    continue;
                }
                // Unitary 2x2 rotation R = [[c, -conj(s)], [s, c]] on the
                // (p, q) plane, with s = t*c*conj(apq/|apq|). Zeroing the
                // off-diagonal entry of R^H A R needs t^2 - 2*tau*t - 1 = 0;
                // take the smaller root for stability.
                let alpha = apq / mag;
                let app = m[(p, p)].re;
                let aqq = m[(q, q)].re;
                let tau = (aqq - app) / (2.0 * mag);
                let t = if tau >= 0.0 {
                    -1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = alpha.conj() * (t * c);

                // Column update M := M * R.
                for i in 0..n {
                    let mip = m[(i, p)];
                    let miq = m[(i, q)];
                    m[(i, p)] = c * mip + s * miq;
                    m[(i, q)] = -s.conj() * mip + c * miq;
                }
                // Row update M := R^H * M.
                for j in 0..n {
                    let mpj = m[(p, j)];
                    let mqj = m[(q, j)];
                    m[(p, j)] = c * mpj + s.conj() * mqj;
                    m[(q, j)] = -s * mpj + c * mqj;
                }
                // Accumulate V := V * R.
                for i in 0..n {
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = c * vip + s * viq;
                    v[(i, q)] = -s.conj() * vip + c * viq;
                }
            }
        }
    }

    Err(Error::numerical("Jacobi eigendecomposition did not converge"))
}
