//! Small dense linear algebra: row-major matrices, one-sided Jacobi SVD and
//! Gaussian elimination. Problem sizes here are tens of rows at most.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::sqrt;

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub(crate) fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub(crate) fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut m = Self::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            m.data[i * c..(i + 1) * c].copy_from_slice(row);
        }
        m
    }

    pub(crate) fn rows(&self) -> usize {
        self.rows
    }

    pub(crate) fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub(crate) fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub(crate) fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub(crate) fn add(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] += v;
    }

    pub(crate) fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub(crate) fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }
}

/// Singular value decomposition `A = U Σ Vᵀ` by one-sided (Hestenes) Jacobi.
/// Returns the singular values in decreasing order and the matching right
/// singular vectors as the columns of `V` (`cols × cols`).
pub(crate) fn svd_right(a: &Mat) -> (Vec<f64>, Mat) {
    let n = a.cols();
    let m = a.rows();
    // Work on columns of A; rotations applied to both W = A·V and V.
    let mut w = a.clone();
    let mut v = Mat::zeros(n, n);
    for j in 0..n {
        v.set(j, j, 1.0);
    }
    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                let mut alpha = 0.0;
                let mut beta = 0.0;
                let mut gamma = 0.0;
                for i in 0..m {
                    let wp = w.get(i, p);
                    let wq = w.get(i, q);
                    alpha += wp * wp;
                    beta += wq * wq;
                    gamma += wp * wq;
                }
                if gamma == 0.0 {
                    continue;
                }
                let scale = sqrt(alpha * beta);
                if scale > 0.0 {
                    off = off.max(gamma.abs() / scale);
                }
                if gamma.abs() <= f64::EPSILON * scale {
                    continue;
                }
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + sqrt(1.0 + zeta * zeta));
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / sqrt(1.0 + t * t);
                let s = c * t;
                for i in 0..m {
                    let wp = w.get(i, p);
                    let wq = w.get(i, q);
                    w.set(i, p, c * wp - s * wq);
                    w.set(i, q, s * wp + c * wq);
                }
                for i in 0..n {
                    let vp = v.get(i, p);
                    let vq = v.get(i, q);
                    v.set(i, p, c * vp - s * vq);
                    v.set(i, q, s * vp + c * vq);
                }
            }
        }
        if off <= 4.0 * f64::EPSILON {
            break;
        }
    }
    let mut sigma: Vec<(f64, usize)> = (0..n)
        .map(|j| {
            let norm = sqrt((0..m).map(|i| w.get(i, j) * w.get(i, j)).sum());
            (norm, j)
        })
        .collect();
    sigma.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap_or(core::cmp::Ordering::Equal));
    let mut v_sorted = Mat::zeros(n, n);
    for (k, &(_, j)) in sigma.iter().enumerate() {
        for i in 0..n {
            v_sorted.set(i, k, v.get(i, j));
        }
    }
    (sigma.into_iter().map(|(s, _)| s).collect(), v_sorted)
}

pub(crate) fn singular_values(a: &Mat) -> Vec<f64> {
    if a.cols() > a.rows() {
        svd_right(&a.transpose()).0
    } else {
        svd_right(a).0
    }
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting. Returns
/// `None` when a pivot falls below `1e-14` times the largest entry.
pub(crate) fn solve(a: &Mat, b: &[f64]) -> Option<Vec<f64>> {
    let n = a.rows();
    debug_assert_eq!(n, a.cols());
    let mut m = a.clone();
    let mut x = b.to_vec();
    let scale = m.data.iter().fold(0.0f64, |acc, v| acc.max(v.abs())).max(f64::MIN_POSITIVE);
    for k in 0..n {
        let (piv, pmax) = (k..n)
            .map(|i| (i, m.get(i, k).abs()))
            .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if pmax <= 1e-14 * scale {
            return None;
        }
        if piv != k {
            for j in 0..n {
                let tmp = m.get(k, j);
                m.set(k, j, m.get(piv, j));
                m.set(piv, j, tmp);
            }
            x.swap(k, piv);
        }
        let d = m.get(k, k);
        for i in (k + 1)..n {
            let f = m.get(i, k) / d;
            if f == 0.0 {
                continue;
            }
            for j in k..n {
                let v = m.get(i, j) - f * m.get(k, j);
                m.set(i, j, v);
            }
            x[i] -= f * x[k];
        }
    }
    for k in (0..n).rev() {
        let mut acc = x[k];
        for j in (k + 1)..n {
            acc -= m.get(k, j) * x[j];
        }
        x[k] = acc / m.get(k, k);
    }
    Some(x)
}
