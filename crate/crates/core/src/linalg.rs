//! Sparse matrices, Krylov solvers, exact rank and condition estimation.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Compressed sparse row matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Csr<T> {
    pub nrows: usize,
    pub ncols: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub data: Vec<T>,
}

impl<T> Csr<T>
where
    T: Copy + Default + PartialEq + std::ops::AddAssign,
{
    /// Build from `(row, col, value)` triplets; duplicates are summed and
    /// entries that sum to zero are dropped.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, T)]) -> Self {
        let mut rows: Vec<BTreeMap<usize, T>> = vec![BTreeMap::new(); nrows];
        for &(i, j, v) in triplets {
            assert!(i < nrows && j < ncols, "triplet ({i},{j}) out of range");
            *rows[i].entry(j).or_default() += v;
        }
        Self::from_row_maps(ncols, rows)
    }

    pub fn from_row_maps(ncols: usize, rows: Vec<BTreeMap<usize, T>>) -> Self {
        let mut indptr = Vec::with_capacity(rows.len() + 1);
        let mut indices = Vec::new();
        let mut data = Vec::new();
        indptr.push(0);
        let nrows = rows.len();
        for row in rows {
            for (j, v) in row {
                if v != T::default() {
                    indices.push(j);
                    data.push(v);
                }
            }
            indptr.push(indices.len());
        }
        Self { nrows, ncols, indptr, indices, data }
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let r = self.indptr[i]..self.indptr[i + 1];
        self.indices[r.clone()].iter().copied().zip(self.data[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.row(i).find(|&(c, _)| c == j).map(|(_, v)| v).unwrap_or_default()
    }

    pub fn transpose(&self) -> Self {
        let mut rows: Vec<BTreeMap<usize, T>> = vec![BTreeMap::new(); self.ncols];
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                rows[j].insert(i, v);
            }
        }
        Self::from_row_maps(self.nrows, rows)
    }

    pub fn triplets(&self) -> Vec<(usize, usize, T)> {
        let mut out = Vec::with_capacity(self.nnz());
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                out.push((i, j, v));
            }
        }
        out
    }
}

impl<T> Csr<T>
where
    T: Copy + Default + PartialEq + std::ops::AddAssign + std::ops::Mul<Output = T>,
{
    pub fn matmul(&self, other: &Csr<T>) -> Csr<T> {
        assert_eq!(self.ncols, other.nrows);
        let mut rows = Vec::with_capacity(self.nrows);
        for i in 0..self.nrows {
            let mut acc: BTreeMap<usize, T> = BTreeMap::new();
            for (k, a) in self.row(i) {
                for (j, b) in other.row(k) {
                    *acc.entry(j).or_default() += a * b;
                }
            }
            rows.push(acc);
        }
        Csr::from_row_maps(other.ncols, rows)
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows)
            .map(|i| {
                let mut s = T::default();
                for (j, v) in self.row(i) {
                    s += v * x[j];
                }
                s
            })
            .collect()
    }
}

impl Csr<f64> {
    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                m[(i, j)] = v;
            }
        }
        m
    }

    /// Restrict to the rows and columns listed in `keep` (both in the same index space).
    pub fn submatrix(&self, keep_rows: &[usize], keep_cols: &[usize]) -> Csr<f64> {
        let mut col_map = vec![usize::MAX; self.ncols];
        for (new, &old) in keep_cols.iter().enumerate() {
            col_map[old] = new;
        }
        let rows = keep_rows
            .iter()
            .map(|&r| {
                self.row(r)
                    .filter(|&(j, _)| col_map[j] != usize::MAX)
                    .map(|(j, v)| (col_map[j], v))
                    .collect::<BTreeMap<_, _>>()
            })
            .collect();
        Csr::from_row_maps(keep_cols.len(), rows)
    }

    pub fn norm1(&self) -> f64 {
        let mut col = vec![0.0; self.ncols];
        for (_, j, v) in self.triplets() {
            col[j] += v.abs();
        }
        col.into_iter().fold(0.0, f64::max)
    }
}

impl Csr<i64> {
    pub fn to_f64(&self) -> Csr<f64> {
        Csr {
            nrows: self.nrows,
            ncols: self.ncols,
            indptr: self.indptr.clone(),
            indices: self.indices.clone(),
            data: self.data.iter().map(|&v| v as f64).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0)
    }
}

/// Prime used for exact rank computations.
pub const RANK_PRIME: u64 = 2_147_483_647;

/// Exact rank over `GF(p)`; equals the rational rank for small integer
/// matrices such as incidence matrices.
pub fn rank_mod_p(m: &Csr<i64>) -> usize {
    let p = RANK_PRIME as i128;
    let mut rows: Vec<Vec<u64>> = (0..m.nrows)
        .map(|i| {
            let mut r = vec![0u64; m.ncols];
            for (j, v) in m.row(i) {
                r[j] = (((v as i128) % p + p) % p) as u64;
            }
            r
        })
        .collect();
    let mut rank = 0;
    for col in 0..m.ncols {
        let Some(piv) = (rank..rows.len()).find(|&r| rows[r][col] != 0) else {
            continue;
        };
        rows.swap(rank, piv);
        let inv = pow_mod(rows[rank][col], RANK_PRIME - 2);
        let pivot_row: Vec<u64> = rows[rank].iter().map(|&v| mul_mod(v, inv)).collect();
        for r in 0..rows.len() {
            if r != rank && rows[r][col] != 0 {
                let f = rows[r][col];
                for (c, pv) in pivot_row.iter().enumerate().skip(col) {
                    if *pv != 0 {
                        rows[r][c] = (rows[r][c] + RANK_PRIME - mul_mod(f, *pv)) % RANK_PRIME;
                    }
                }
            }
        }
        rows[rank] = pivot_row;
        rank += 1;
        if rank == rows.len() {
            break;
        }
    }
    rank
}

fn mul_mod(a: u64, b: u64) -> u64 {
    ((a as u128 * b as u128) % RANK_PRIME as u128) as u64
}

fn pow_mod(mut a: u64, mut e: u64) -> u64 {
    let mut r = 1u64;
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod(r, a);
        }
        a = mul_mod(a, a);
        e >>= 1;
    }
    r
}

/// Numerical rank by SVD, used to cross-check [`rank_mod_p`].
pub fn rank_f64(m: &Csr<f64>) -> usize {
    let d = m.to_dense();
    let svd = d.svd(false, false);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let tol = smax * (m.nrows.max(m.ncols) as f64) * f64::EPSILON * 16.0;
    svd.singular_values.iter().filter(|&&s| s > tol).count()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Restarted GMRES for a general nonsingular operator.
pub fn gmres<A>(apply: A, b: &[f64], x0: Option<&[f64]>, restart: usize, tol: f64, max_iter: usize) -> Result<Vec<f64>>
where
    A: Fn(&[f64]) -> Vec<f64>,
{
    let n = b.len();
    let mut x = x0.map(|v| v.to_vec()).unwrap_or_else(|| vec![0.0; n]);
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let m = restart.max(1).min(n.max(1));
    let mut iters = 0;
    loop {
        let ax = apply(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let beta = norm2(&r);
        if beta <= tol * bnorm {
            return Ok(x);
        }
        if iters >= max_iter {
            return Err(Error::Solver(format!(
                "gmres did not converge: residual {:e} after {iters} iterations",
                beta / bnorm
            )));
        }
        let mut v: Vec<Vec<f64>> = vec![r.iter().map(|ri| ri / beta).collect()];
        let mut h = vec![vec![0.0; m]; m + 1];
        let mut cs = vec![0.0; m];
        let mut sn = vec![0.0; m];
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k_used = 0;
        for k in 0..m {
            iters += 1;
            let mut w = apply(&v[k]);
            for (i, vi) in v.iter().enumerate() {
                h[i][k] = dot(&w, vi);
                for (wj, vj) in w.iter_mut().zip(vi) {
                    *wj -= h[i][k] * vj;
                }
            }
            // second pass of classical Gram-Schmidt for stability
            for (i, vi) in v.iter().enumerate() {
                let c = dot(&w, vi);
                h[i][k] += c;
                for (wj, vj) in w.iter_mut().zip(vi) {
                    *wj -= c * vj;
                }
            }
            h[k + 1][k] = norm2(&w);
            for i in 0..k {
                let t = cs[i] * h[i][k] + sn[i] * h[i + 1][k];
                h[i + 1][k] = -sn[i] * h[i][k] + cs[i] * h[i + 1][k];
                h[i][k] = t;
            }
            let denom = (h[k][k] * h[k][k] + h[k + 1][k] * h[k + 1][k]).sqrt();
            if denom == 0.0 {
                k_used = k;
                break;
            }
            cs[k] = h[k][k] / denom;
            sn[k] = h[k + 1][k] / denom;
            h[k][k] = denom;
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            k_used = k + 1;
            let wn = norm2(&w);
            if g[k + 1].abs() <= tol * bnorm * 0.1 || wn == 0.0 {
                break;
            }
            v.push(w.iter().map(|wi| wi / wn).collect());
        }
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let mut s = g[i];
            for j in i + 1..k_used {
                s -= h[i][j] * y[j];
            }
            y[i] = s / h[i][i];
        }
        for (j, yj) in y.iter().enumerate() {
            for (xi, vi) in x.iter_mut().zip(&v[j]) {
                *xi += yj * vi;
            }
        }
    }
}

/// Conjugate gradients for a symmetric positive definite sparse matrix.
pub fn conjugate_gradient(a: &Csr<f64>, b: &[f64], tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let n = b.len();
    let diag: Vec<f64> = (0..n).map(|i| a.get(i, i)).collect();
    let precond = |r: &[f64]| -> Vec<f64> { r.iter().zip(&diag).map(|(ri, d)| ri / d).collect() };
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        return Ok(x);
    }
    let mut z = precond(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for _ in 0..max_iter {
        let ap = a.mul_vec(&p);
        let alpha = rz / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if norm2(&r) <= tol * bnorm {
            return Ok(x);
        }
        z = precond(&r);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::Solver(format!("cg did not converge in {max_iter} iterations")))
}

/// Estimate `‖A^{-1}‖_1` from solves with `A` and `Aᵀ` (Hager's method).
pub fn inverse_norm1_estimate<S, St>(n: usize, solve: S, solve_t: St) -> Result<f64>
where
    S: Fn(&[f64]) -> Result<Vec<f64>>,
    St: Fn(&[f64]) -> Result<Vec<f64>>,
{
    if n == 0 {
        return Ok(0.0);
    }
    let mut x = vec![1.0 / n as f64; n];
    let mut est = 0.0;
    for _ in 0..5 {
        let y = solve(&x)?;
        let new_est: f64 = y.iter().map(|v| v.abs()).sum();
        let xi: Vec<f64> = y.iter().map(|v| if *v >= 0.0 { 1.0 } else { -1.0 }).collect();
        let z = solve_t(&xi)?;
        let (jmax, zmax) = z
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(bj, bv), (j, v)| if v.abs() > bv { (j, v.abs()) } else { (bj, bv) });
        if new_est <= est || zmax <= dot(&z, &x) {
            est = est.max(new_est);
            break;
        }
        est = new_est;
        x = vec![0.0; n];
        x[jmax] = 1.0;
    }
    Ok(est)
}

/// Dense LU factorization of a square matrix and of its transpose.
pub struct DenseLu {
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    lu_t: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    n: usize,
}

impl std::fmt::Debug for DenseLu {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "DenseLu({})", self.n)
    }
}

impl DenseLu {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        let n = m.nrows();
        let lu_t = m.transpose().lu();
        let lu = m.lu();
        if n > 0 && !lu.is_invertible() {
            return Err(Error::Solver("singular matrix".into()));
        }
        Ok(Self { lu, lu_t, n })
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let rhs = DVector::from_column_slice(b);
        self.lu
            .solve(&rhs)
            .map(|x| x.as_slice().to_vec())
            .ok_or_else(|| Error::Solver("singular matrix".into()))
    }

    pub fn solve_t(&self, b: &[f64]) -> Result<Vec<f64>> {
        let rhs = DVector::from_column_slice(b);
        self.lu_t
            .solve(&rhs)
            .map(|x| x.as_slice().to_vec())
            .ok_or_else(|| Error::Solver("singular matrix".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Csr<f64> {
        Csr::from_triplets(
            3,
            3,
            &[(0, 0, 4.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 3.0), (1, 2, 0.5), (2, 1, 0.5), (2, 2, 2.0)],
        )
    }

    #[test]
    fn triplets_sum_duplicates() {
        let m = Csr::from_triplets(2, 2, &[(0, 0, 1i64), (0, 0, 2), (1, 1, 1), (1, 1, -1)]);
        assert_eq!(m.get(0, 0), 3);
        assert_eq!(m.nnz(), 1);
    }

    #[test]
    fn gmres_and_cg_agree_with_lu() {
        let a = sample();
        let b = [1.0, 2.0, 3.0];
        let lu = DenseLu::new(a.to_dense()).unwrap();
        let x_lu = lu.solve(&b).unwrap();
        let x_cg = conjugate_gradient(&a, &b, 1e-14, 100).unwrap();
        let x_gm = gmres(|v| a.mul_vec(v), &b, None, 2, 1e-14, 100).unwrap();
        for i in 0..3 {
            assert!((x_lu[i] - x_cg[i]).abs() < 1e-12);
            assert!((x_lu[i] - x_gm[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn rank_of_singular_integer_matrix() {
        let m = Csr::from_triplets(3, 3, &[(0, 0, 1i64), (0, 1, -1), (1, 1, 1), (1, 2, -1), (2, 0, 1), (2, 2, -1)]);
        assert_eq!(rank_mod_p(&m), 2);
        assert_eq!(rank_f64(&m.to_f64()), 2);
    }

    #[test]
    fn condition_estimate_of_diagonal() {
        let a = Csr::from_triplets(3, 3, &[(0, 0, 1.0), (1, 1, 1e-3), (2, 2, 10.0)]);
        let lu = DenseLu::new(a.to_dense()).unwrap();
        let inv = inverse_norm1_estimate(3, |b| lu.solve(b), |b| lu.solve_t(b)).unwrap();
        assert!((inv * a.norm1() - 1e4).abs() < 1e-6);
    }

    #[test]
    fn transpose_roundtrip() {
        let a = Csr::from_triplets(2, 3, &[(0, 2, 1.0), (1, 0, 2.0)]);
        assert_eq!(a.transpose().transpose(), a);
        assert_eq!(a.transpose().get(2, 0), 1.0);
    }
}
