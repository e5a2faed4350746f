//! Column-compressed Jacobians and the linear algebra the least-squares
//! solver needs from them.

use nalgebra::{Cholesky, DMatrix, DVector};
use rayon::prelude::*;

/// The products the least-squares solver needs from a Jacobian.
pub trait JacobianOperator: Sync {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    /// `J v`.
    fn mul(&self, v: &[f64]) -> Vec<f64>;
    /// `Jᵀ w`.
    fn tr_mul(&self, w: &[f64]) -> Vec<f64>;
    /// Diagonal blocks of `JᵀJ` for consecutive column groups of `block`.
    fn gram_blocks(&self, block: usize) -> Vec<DMatrix<f64>>;
    fn to_dense(&self) -> DMatrix<f64>;

    /// Diagonal of `JᵀJ`.
    fn gram_diagonal(&self) -> Vec<f64> {
        let mut unit = vec![0.0; self.ncols()];
        (0..self.ncols())
            .map(|j| {
                unit[j] = 1.0;
                let c = self.mul(&unit);
                unit[j] = 0.0;
                dot(&c, &c)
            })
            .collect()
    }
}

/// A sparse matrix stored by columns.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseColumns {
    nrows: usize,
    col_ptr: Vec<usize>,
    rows: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseColumns {
    /// Builds from per-column `(row, value)` lists; duplicate rows in one
    /// column are summed.
    pub fn from_columns(nrows: usize, columns: Vec<Vec<(usize, f64)>>) -> Self {
        let mut col_ptr = Vec::with_capacity(columns.len() + 1);
        let mut rows = Vec::new();
        let mut vals = Vec::new();
        col_ptr.push(0);
        for mut col in columns {
            col.sort_by_key(|&(r, _)| r);
            for (r, v) in col {
                debug_assert!(r < nrows);
                if rows.len() > *col_ptr.last().unwrap() && *rows.last().unwrap() == r {
                    *vals.last_mut().unwrap() += v;
                } else {
                    rows.push(r);
                    vals.push(v);
                }
            }
            col_ptr.push(rows.len());
        }
        Self {
            nrows,
            col_ptr,
            rows,
            vals,
        }
    }

    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        let columns = (0..m.ncols())
            .map(|j| {
                m.column(j)
                    .iter()
                    .enumerate()
                    .filter(|(_, v)| **v != 0.0)
                    .map(|(i, v)| (i, *v))
                    .collect()
            })
            .collect();
        Self::from_columns(m.nrows(), columns)
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn column(&self, j: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.col_ptr[j], self.col_ptr[j + 1]);
        (&self.rows[a..b], &self.vals[a..b])
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.col_ptr.len() - 1
    }
}

impl JacobianOperator for SparseColumns {
    fn nrows(&self) -> usize {
        self.nrows
    }

    fn ncols(&self) -> usize {
        self.col_ptr.len() - 1
    }

    fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols());
        for j in 0..self.ncols() {
            let (r, v) = self.column(j);
            for (i, x) in r.iter().zip(v) {
                m[(*i, j)] = *x;
            }
        }
        m
    }

    /// `J v`.
    fn mul(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.nrows];
        for (j, &vj) in v.iter().enumerate() {
            if vj == 0.0 {
                continue;
            }
            let (r, x) = self.column(j);
            for (i, a) in r.iter().zip(x) {
                out[*i] += a * vj;
            }
        }
        out
    }

    /// `Jᵀ w`.
    fn tr_mul(&self, w: &[f64]) -> Vec<f64> {
        (0..self.ncols())
            .into_par_iter()
            .map(|j| {
                let (r, x) = self.column(j);
                r.iter().zip(x).map(|(i, a)| a * w[*i]).sum()
            })
            .collect()
    }

    /// Diagonal of `JᵀJ`.
    fn gram_diagonal(&self) -> Vec<f64> {
        (0..self.ncols())
            .map(|j| self.column(j).1.iter().map(|a| a * a).sum())
            .collect()
    }

    /// Diagonal blocks of `JᵀJ` for consecutive column groups of `block`.
    fn gram_blocks(&self, block: usize) -> Vec<DMatrix<f64>> {
        let ncols = self.ncols();
        let starts: Vec<usize> = (0..ncols).step_by(block).collect();
        starts
            .par_iter()
            .map(|&start| {
                let end = (start + block).min(ncols);
                let size = end - start;
                let mut scratch = vec![0.0; self.nrows];
                let mut g = DMatrix::zeros(size, size);
                for a in 0..size {
                    let (ra, va) = self.column(start + a);
                    for (i, v) in ra.iter().zip(va) {
                        scratch[*i] = *v;
                    }
                    for b in a..size {
                        let (rb, vb) = self.column(start + b);
                        let s: f64 = rb.iter().zip(vb).map(|(i, v)| scratch[*i] * v).sum();
                        g[(a, b)] = s;
                        g[(b, a)] = s;
                    }
                    for i in ra {
                        scratch[*i] = 0.0;
                    }
                }
                g
            })
            .collect()
    }
}

/// Outcome of an iterative solve.
#[derive(Clone, Debug)]
#[allow(dead_code)]
pub(crate) struct CgOutcome {
    pub solution: Vec<f64>,
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Preconditioned conjugate gradients on `(JᵀJ + λ diag(d)) x = b` with a
/// block-Jacobi preconditioner built from exact diagonal blocks of the
/// damped matrix. Returns `None` if a preconditioner block is not positive
/// definite.
#[allow(clippy::too_many_arguments)]
pub(crate) fn damped_normal_pcg(
    jac: &dyn JacobianOperator,
    blocks: &[DMatrix<f64>],
    block: usize,
    diag: &[f64],
    lambda: f64,
    rhs: &[f64],
    rel_tol: f64,
    max_iter: usize,
) -> Option<CgOutcome> {
    let n = rhs.len();
    let factors: Option<Vec<Cholesky<f64, nalgebra::Dyn>>> = blocks
        .par_iter()
        .enumerate()
        .map(|(b, g)| {
            let mut m = g.clone();
            for i in 0..m.nrows() {
                m[(i, i)] += lambda * diag[b * block + i];
            }
            Cholesky::new(m)
        })
        .collect();
    let factors = factors?;
    let precondition = |r: &[f64]| -> Vec<f64> {
        let parts: Vec<DVector<f64>> = factors
            .par_iter()
            .enumerate()
            .map(|(b, f)| {
                let start = b * block;
                let end = (start + block).min(n);
                f.solve(&DVector::from_column_slice(&r[start..end]))
            })
            .collect();
        parts
            .into_iter()
            .flat_map(|p| p.into_iter().copied().collect::<Vec<_>>())
            .collect()
    };
    let apply = |v: &[f64]| -> Vec<f64> {
        let jv = jac.mul(v);
        let mut out = jac.tr_mul(&jv);
        for ((o, d), x) in out.iter_mut().zip(diag).zip(v) {
            *o += lambda * d * x;
        }
        out
    };

    let b_norm = norm2(rhs);
    let mut x = vec![0.0; n];
    if b_norm == 0.0 {
        return Some(CgOutcome {
            solution: x,
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let mut r = rhs.to_vec();
    let mut z = precondition(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut iterations = 0;
    let mut rel = 1.0;
    while iterations < max_iter {
        let ap = apply(&p);
        let pap = dot(&p, &ap);
        if pap <= 0.0 || !pap.is_finite() {
            break;
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        iterations += 1;
        rel = norm2(&r) / b_norm;
        if rel <= rel_tol {
            break;
        }
        z = precondition(&r);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Some(CgOutcome {
        solution: x,
        iterations,
        relative_residual: rel,
    })
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}
