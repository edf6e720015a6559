//! Oracles shared by integration tests.
#![allow(dead_code)]

use nalgebra::DMatrix;
use segiso::ideology::FollowMatrix;

/// One-sided Jacobi SVD of a matrix with at least as many rows as columns.
/// Returns (U, singular values, V), unsorted.
pub fn jacobi_svd(mut a: DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>, DMatrix<f64>) {
    let m = a.ncols();
    let mut v = DMatrix::<f64>::identity(m, m);
    for _sweep in 0..100 {
        let mut rotated = false;
        for p in 0..m {
            for q in p + 1..m {
                let alpha = a.column(p).norm_squared();
                let beta = a.column(q).norm_squared();
                let gamma = a.column(p).dot(&a.column(q));
                if gamma.abs() <= 1e-15 * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for mat in [&mut a, &mut v] {
                    for i in 0..mat.nrows() {
                        let (x, y) = (mat[(i, p)], mat[(i, q)]);
                        mat[(i, p)] = c * x - s * y;
                        mat[(i, q)] = s * x + c * y;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let sv: Vec<f64> = (0..m).map(|j| a.column(j).norm()).collect();
    let u = DMatrix::from_fn(a.nrows(), m, |i, j| if sv[j] > 0.0 { a[(i, j)] / sv[j] } else { 0.0 });
    (u, sv, v)
}

pub struct DenseCa {
    /// Principal row coordinates.
    pub rows: DMatrix<f64>,
    /// Principal column coordinates.
    pub cols: DMatrix<f64>,
    pub singular_values: Vec<f64>,
}

/// CA from a direct SVD of the standardized residual matrix.
pub fn dense_ca(m: &FollowMatrix, dims: usize) -> DenseCa {
    let (nr, nc) = (m.row_ids.len(), m.col_ids.len());
    let mut a = DMatrix::<f64>::zeros(nr, nc);
    for (i, row) in m.rows.iter().enumerate() {
        for &j in row {
            a[(i, j as usize)] = 1.0;
        }
    }
    let total = a.sum();
    let r: Vec<f64> = (0..nr).map(|i| a.row(i).sum() / total).collect();
    let c: Vec<f64> = (0..nc).map(|j| a.column(j).sum() / total).collect();
    let s = DMatrix::from_fn(nr, nc, |i, j| (a[(i, j)] / total - r[i] * c[j]) / (r[i] * c[j]).sqrt());
    let (u, sv, v) = if nr >= nc {
        jacobi_svd(s)
    } else {
        let (v, sv, u) = jacobi_svd(s.transpose());
        (u, sv, v)
    };
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&x, &y| sv[y].partial_cmp(&sv[x]).unwrap());
    let f = DMatrix::from_fn(nr, dims, |i, d| u[(i, order[d])] * sv[order[d]] / r[i].sqrt());
    let g = DMatrix::from_fn(nc, dims, |j, d| v[(j, order[d])] * sv[order[d]] / c[j].sqrt());
    DenseCa {
        rows: f,
        cols: g,
        singular_values: order.iter().take(dims).map(|&k| sv[k]).collect(),
    }
}

