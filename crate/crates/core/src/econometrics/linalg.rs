//! Dense least squares via Householder QR.

use crate::error::{Error, Result};

/// Column-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub n_rows: usize,
    pub n_cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Matrix { n_rows, n_cols, data: vec![0.0; n_rows * n_cols] }
    }

    pub fn from_columns(n_rows: usize, columns: Vec<Vec<f64>>) -> Result<Self> {
        let n_cols = columns.len();
        let mut data = Vec::with_capacity(n_rows * n_cols);
        for c in columns {
            if c.len() != n_rows {
                return Err(Error::Shape(format!("column of length {} in a {n_rows}-row matrix", c.len())));
            }
            data.extend(c);
        }
        Ok(Matrix { n_rows, n_cols, data })
    }

    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.n_rows..(j + 1) * self.n_rows]
    }

    fn col_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.n_rows..(j + 1) * self.n_rows]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.n_rows + i]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[j * self.n_rows + i] = v;
    }

    pub fn mul_vec(&self, b: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_rows];
        for (j, &bj) in b.iter().enumerate() {
            for (o, x) in out.iter_mut().zip(self.col(j)) {
                *o += x * bj;
            }
        }
        out
    }
}

/// Relative size below which a column is treated as a combination of earlier ones.
pub const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct OlsFit {
    pub beta: Vec<f64>,
    pub residuals: Vec<f64>,
    /// (X'X)^-1
    pub xtx_inv: Matrix,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Least squares of `y` on `x`. Rank deficiency is reported by column name.
pub fn ols(x: &Matrix, y: &[f64], names: &[String]) -> Result<OlsFit> {
    let (n, p) = (x.n_rows, x.n_cols);
    if y.len() != n || names.len() != p {
        return Err(Error::Shape(format!("design {n}x{p}, response {}, names {}", y.len(), names.len())));
    }
    if n < p {
        return Err(Error::Collinearity { columns: names[n..].to_vec() });
    }
    let mut a = x.clone();
    let mut qty = y.to_vec();
    let mut r_diag = vec![0.0; p];
    let mut collinear = Vec::new();
    for k in 0..p {
        let orig_norm = dot(x.col(k), x.col(k)).sqrt();
        let col = &a.col(k)[k..];
        let norm = dot(col, col).sqrt();
        if orig_norm == 0.0 || norm <= RANK_TOL * orig_norm {
            collinear.push(names[k].clone());
            continue;
        }
        let alpha = if col[0] > 0.0 { -norm } else { norm };
        let mut v = col.to_vec();
        v[0] -= alpha;
        let vnorm2 = dot(&v, &v);
        r_diag[k] = alpha;
        {
            let c = a.col_mut(k);
            c[k] = alpha;
            c[k + 1..].iter_mut().for_each(|e| *e = 0.0);
        }
        if vnorm2 == 0.0 {
            continue;
        }
        for j in k + 1..p {
            let c = &mut a.col_mut(j)[k..];
            let s = 2.0 * dot(&v, c) / vnorm2;
            c.iter_mut().zip(&v).for_each(|(e, vi)| *e -= s * vi);
        }
        let s = 2.0 * dot(&v, &qty[k..]) / vnorm2;
        qty[k..].iter_mut().zip(&v).for_each(|(e, vi)| *e -= s * vi);
    }
    if !collinear.is_empty() {
        return Err(Error::Collinearity { columns: collinear });
    }

    // R is the upper triangle of `a`.
    let mut beta = vec![0.0; p];
    for i in (0..p).rev() {
        let s: f64 = (i + 1..p).map(|j| a.get(i, j) * beta[j]).sum();
        beta[i] = (qty[i] - s) / r_diag[i];
    }
    let fitted = x.mul_vec(&beta);
    let residuals = y.iter().zip(&fitted).map(|(a, b)| a - b).collect();

    // (X'X)^-1 = R^-1 R^-T
    let mut rinv = Matrix::zeros(p, p);
    for j in 0..p {
        rinv.set(j, j, 1.0 / r_diag[j]);
        for i in (0..j).rev() {
            let s: f64 = (i + 1..=j).map(|m| a.get(i, m) * rinv.get(m, j)).sum();
            rinv.set(i, j, -s / r_diag[i]);
        }
    }
    let mut xtx_inv = Matrix::zeros(p, p);
    for i in 0..p {
        for j in i..p {
            let s: f64 = (j..p).map(|m| rinv.get(i, m) * rinv.get(j, m)).sum();
            xtx_inv.set(i, j, s);
            xtx_inv.set(j, i, s);
        }
    }
    Ok(OlsFit { beta, residuals, xtx_inv })
}

/// CR1 cluster-robust covariance of an OLS fit.
///
/// Scale is (G/(G−1))·((N−1)/(N−K)) with K the number of columns of `x`.
pub fn cluster_covariance(x: &Matrix, residuals: &[f64], clusters: &[usize], xtx_inv: &Matrix) -> Result<Matrix> {
    let (n, p) = (x.n_rows, x.n_cols);
    if residuals.len() != n || clusters.len() != n {
        return Err(Error::Shape("residual or cluster vector does not match the design".into()));
    }
    let g = clusters.iter().max().map_or(0, |m| m + 1);
    let mut scores = vec![0.0; g * p];
    for j in 0..p {
        for ((xi, ui), &c) in x.col(j).iter().zip(residuals).zip(clusters) {
            scores[c * p + j] += xi * ui;
        }
    }
    let mut used = vec![false; g];
    clusters.iter().for_each(|&c| used[c] = true);
    let g_eff = used.iter().filter(|u| **u).count();
    if g_eff < 2 {
        return Err(Error::Cluster(g_eff));
    }
    let mut meat = Matrix::zeros(p, p);
    for s in scores.chunks(p) {
        for i in 0..p {
            for j in 0..p {
                meat.data[j * p + i] += s[i] * s[j];
            }
        }
    }
    let scale = (g_eff as f64 / (g_eff as f64 - 1.0)) * ((n as f64 - 1.0) / (n as f64 - p as f64));
    let bm = matmul(xtx_inv, &meat);
    let mut v = matmul(&bm, xtx_inv);
    v.data.iter_mut().for_each(|e| *e *= scale);
    Ok(v)
}

fn matmul(a: &Matrix, b: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(a.n_rows, b.n_cols);
    for j in 0..b.n_cols {
        for k in 0..a.n_cols {
            let bkj = b.get(k, j);
            if bkj == 0.0 {
                continue;
            }
            for i in 0..a.n_rows {
                out.data[j * a.n_rows + i] += a.get(i, k) * bkj;
            }
        }
    }
    out
}

/// Diagonal of the CR1 covariance; see [`cluster_covariance`].
pub fn cluster_se(x: &Matrix, residuals: &[f64], clusters: &[usize], xtx_inv: &Matrix) -> Result<Vec<f64>> {
    let v = cluster_covariance(x, residuals, clusters, xtx_inv)?;
    Ok((0..x.n_cols).map(|j| v.get(j, j).max(0.0).sqrt()).collect())
}
