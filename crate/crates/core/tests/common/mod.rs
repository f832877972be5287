//! Test-side oracles, independent of the crate's solvers.

#![allow(dead_code)]

use rand::Rng;
use splinecolloc::abd::{AbdMatrix, BlockStructure};
use splinecolloc::linalg::Matrix;

/// Gaussian elimination with partial pivoting on a row-major copy.
pub struct DenseOracle {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl DenseOracle {
    pub fn new(a: &Matrix) -> Self {
        let n = a.rows();
        assert_eq!(n, a.cols());
        let mut lu = a.data().to_vec();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let p = (k..n).max_by(|&i, &j| lu[i * n + k].abs().total_cmp(&lu[j * n + k].abs())).unwrap();
            assert!(lu[p * n + k] != 0.0, "oracle: singular matrix");
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let piv = lu[k * n + k];
            for i in k + 1..n {
                let m = lu[i * n + k] / piv;
                lu[i * n + k] = m;
                for j in k + 1..n {
                    lu[i * n + j] -= m * lu[k * n + j];
                }
            }
        }
        Self { n, lu, perm }
    }

    /// `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                x[i] -= self.lu[i * n + j] * x[j];
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                x[i] -= self.lu[i * n + j] * x[j];
            }
            x[i] /= self.lu[i * n + i];
        }
        x
    }

    /// `Aᵀ x = b`.
    pub fn solve_transpose(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut z = b.to_vec();
        for i in 0..n {
            for j in 0..i {
                z[i] -= self.lu[j * n + i] * z[j];
            }
            z[i] /= self.lu[i * n + i];
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                z[i] -= self.lu[j * n + i] * z[j];
            }
        }
        let mut x = vec![0.0; n];
        for (k, &p) in self.perm.iter().enumerate() {
            x[p] = z[k];
        }
        x
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// `‖a − b‖∞ / ‖b‖∞`.
pub fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm_inf(&d) / norm_inf(b).max(f64::MIN_POSITIVE)
}

/// Random block structure with at most `max_n` unknowns. Cumulative row
/// counts are kept between the first column the next block cannot reach and
/// the last column the current block reaches, so generic entries give a
/// nonsingular matrix.
pub fn random_structure(rng: &mut impl Rng, max_n: usize) -> BlockStructure {
    loop {
        let nb: usize = rng.gen_range(1..=12);
        let cols: Vec<usize> = (0..nb).map(|_| rng.gen_range(2..=16)).collect();
        let mut overlap = Vec::with_capacity(nb.saturating_sub(1));
        for i in 0..nb.saturating_sub(1) {
            let prev = if i == 0 { 0 } else { overlap[i - 1] };
            let cap = cols[i].min(cols[i + 1]).min(cols[i] - prev).min(cols[i + 1] - 1);
            overlap.push(rng.gen_range(0..=cap));
        }
        let mut start = vec![0usize; nb];
        for i in 1..nb {
            start[i] = start[i - 1] + cols[i - 1] - overlap[i - 1];
        }
        let n = start[nb - 1] + cols[nb - 1];
        if n > max_n {
            continue;
        }
        let mut rows = Vec::with_capacity(nb);
        let mut acc = 0;
        let mut ok = true;
        for i in 0..nb {
            let lo = if i + 1 < nb { start[i + 1] } else { n };
            let hi = start[i] + cols[i];
            let lo = lo.max(acc + 1);
            if lo > hi {
                ok = false;
                break;
            }
            let target = if i + 1 < nb { rng.gen_range(lo..=hi) } else { n };
            rows.push(target - acc);
            acc = target;
        }
        if !ok {
            continue;
        }
        if let Ok(s) = BlockStructure::new(rows, cols, overlap) {
            return s;
        }
    }
}

pub fn random_vec(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

pub fn oracle_for(m: &AbdMatrix) -> DenseOracle {
    DenseOracle::new(&m.to_dense())
}
