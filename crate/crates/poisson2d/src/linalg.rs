//! Sparse symmetric CSR matrices, a Jacobi-preconditioned conjugate
//! gradient solver, and a small dense Cholesky path used as a test oracle.

use std::io::Write;

use crate::error::{Error, Result};

/// Compressed sparse row matrix, square, with sorted unique column indices
/// per row.
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    pub n: usize,
    pub row_offsets: Vec<usize>,
    pub col_indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    /// Build from (row, col, value) triplets; duplicates are summed.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Result<Self> {
        for &(r, c, _) in &triplets {
            if r >= n || c >= n {
                return Err(Error::DimensionMismatch(format!(
                    "triplet ({r}, {c}) outside {n} x {n} matrix"
                )));
            }
        }
        // The value bits break ties so duplicates always sum in the same
        // order, making the matrix independent of triplet ordering.
        triplets.sort_unstable_by_key(|&(r, c, v)| (r, c, v.to_bits()));

        let mut row_offsets = vec![0usize; n + 1];
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        let mut last = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_indices.push(c);
                values.push(v);
                row_offsets[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..n {
            row_offsets[r + 1] += row_offsets[r];
        }
        Ok(CsrMatrix { n, row_offsets, col_indices, values })
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Entry (i, j), zero if not stored.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let lo = self.row_offsets[i];
        let hi = self.row_offsets[i + 1];
        match self.col_indices[lo..hi].binary_search(&j) {
            Ok(k) => self.values[lo + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn spmv_into(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let mut acc = 0.0;
            for k in self.row_offsets[i]..self.row_offsets[i + 1] {
                acc += self.values[k] * x[self.col_indices[k]];
            }
            y[i] = acc;
        }
    }

    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "matrix is {n} x {n} but vector has length {}",
                x.len(),
                n = self.n
            )));
        }
        let mut y = vec![0.0; self.n];
        self.spmv_into(x, &mut y);
        Ok(y)
    }

    /// Largest absolute difference between the matrix and its transpose.
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for k in self.row_offsets[i]..self.row_offsets[i + 1] {
                let j = self.col_indices[k];
                worst = worst.max((self.values[k] - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn max_abs_value(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut dense = DenseMatrix::zeros(self.n);
        for i in 0..self.n {
            for k in self.row_offsets[i]..self.row_offsets[i + 1] {
                dense.data[i * self.n + self.col_indices[k]] = self.values[k];
            }
        }
        dense
    }

    /// MatrixMarket coordinate format, 1-based indices.
    pub fn write_matrix_market<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
        writeln!(w, "{} {} {}", self.n, self.n, self.nnz())?;
        for i in 0..self.n {
            for k in self.row_offsets[i]..self.row_offsets[i + 1] {
                writeln!(w, "{} {} {:.17e}", i + 1, self.col_indices[k] + 1, self.values[k])?;
            }
        }
        Ok(())
    }
}

/// Outcome of an iterative solve.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
    /// Preconditioned residual norm per iteration, starting with iteration 0.
    pub residual_history: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Jacobi-preconditioned conjugate gradients for SPD systems, starting from
/// zero. Stops when the recurrence residual satisfies ||r|| <= tol * ||b||;
/// the true residual is then recomputed, and the iteration restarts from the
/// current iterate if rounding drift has left it above the threshold.
pub fn cg_solve(
    a: &CsrMatrix,
    b: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, SolveReport)> {
    let n = a.n;
    if b.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "matrix is {n} x {n} but rhs has length {}",
            b.len()
        )));
    }
    let norm_b = norm(b);
    if norm_b == 0.0 {
        return Ok((
            vec![0.0; n],
            SolveReport { iterations: 0, residual: 0.0, converged: true, residual_history: vec![] },
        ));
    }
    let inv_diag: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();

    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(&ri, &di)| ri * di).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut history = vec![rz.sqrt()];
    let mut iterations = 0;

    while iterations < max_iter {
        iterations += 1;
        a.spmv_into(&p, &mut ap);
        let alpha = rz / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        history.push(rz_new.sqrt());
        if norm(&r) <= tol * norm_b {
            a.spmv_into(&x, &mut ap);
            for i in 0..n {
                r[i] = b[i] - ap[i];
            }
            let true_rel = norm(&r) / norm_b;
            if true_rel <= tol {
                return Ok((
                    x,
                    SolveReport {
                        iterations,
                        residual: true_rel,
                        converged: true,
                        residual_history: history,
                    },
                ));
            }
            for i in 0..n {
                z[i] = r[i] * inv_diag[i];
            }
            p.copy_from_slice(&z);
            rz = dot(&r, &z);
            continue;
        }
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }

    let res = a.spmv(&x)?;
    let rel: f64 =
        (0..n).map(|i| (b[i] - res[i]) * (b[i] - res[i])).sum::<f64>().sqrt() / norm_b;
    Ok((
        x,
        SolveReport { iterations, residual: rel, converged: false, residual_history: history },
    ))
}

/// Row-major dense square matrix.
#[derive(Debug, Clone)]
pub struct DenseMatrix {
    pub n: usize,
    pub data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        DenseMatrix { n, data: vec![0.0; n * n] }
    }

    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            assert_eq!(row.len(), n);
            data.extend_from_slice(row);
        }
        DenseMatrix { n, data }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| dot(&self.data[i * self.n..(i + 1) * self.n], x)).collect()
    }

    /// Lower Cholesky factor; fails with a definiteness error on a
    /// non-positive pivot.
    pub fn cholesky(&self) -> Result<DenseCholesky> {
        let n = self.n;
        if n > 5000 {
            return Err(Error::InvalidArgument(format!(
                "dense factorisation limited to n <= 5000, got {n}"
            )));
        }
        let mut l = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let mut sum = self.get(i, j);
                for k in 0..j {
                    sum -= l[i * n + k] * l[j * n + k];
                }
                if i == j {
                    if sum <= 0.0 {
                        return Err(Error::NotPositiveDefinite { pivot: i, value: sum });
                    }
                    l[i * n + j] = sum.sqrt();
                } else {
                    l[i * n + j] = sum / l[j * n + j];
                }
            }
        }
        Ok(DenseCholesky { n, l })
    }

    /// Smallest eigenvalue of an SPD matrix by inverse iteration with a
    /// Rayleigh quotient at the end.
    pub fn smallest_eigenvalue(&self) -> Result<f64> {
        let chol = self.cholesky()?;
        let n = self.n;
        let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 1e-3 * i as f64).collect();
        let mut lambda_prev = f64::INFINITY;
        for _ in 0..500 {
            let w = chol.solve(&v);
            let nw = norm(&w);
            for i in 0..n {
                v[i] = w[i] / nw;
            }
            let lambda = dot(&v, &self.mul_vec(&v));
            if (lambda - lambda_prev).abs() <= 1e-13 * lambda.abs().max(1.0) {
                return Ok(lambda);
            }
            lambda_prev = lambda;
        }
        Ok(lambda_prev)
    }
}

/// Cached lower Cholesky factor.
#[derive(Debug)]
pub struct DenseCholesky {
    n: usize,
    l: Vec<f64>,
}

impl DenseCholesky {
    /// Solve A x = b via forward and backward substitution.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        assert_eq!(b.len(), n, "rhs length mismatch");
        let mut y = b.to_vec();
        for i in 0..n {
            for k in 0..i {
                y[i] -= self.l[i * n + k] * y[k];
            }
            y[i] /= self.l[i * n + i];
        }
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                y[i] -= self.l[k * n + i] * y[k];
            }
            y[i] /= self.l[i * n + i];
        }
        y
    }
}

/// Direct dense solve, used by tests as an oracle for CG.
pub fn dense_solve(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    if b.len() != a.n {
        return Err(Error::DimensionMismatch(format!(
            "matrix is {n} x {n} but rhs has length {}",
            b.len(),
            n = a.n
        )));
    }
    Ok(a.cholesky()?.solve(b))
}
