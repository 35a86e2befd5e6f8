//! Banded Cholesky factorization for the symmetric positive definite systems
//! produced by the implicit configuration-space diffusion.

use crate::error::{Error, Result};

/// Lower factor `L` of `A = L L^T`, stored row-wise as `L[i][i - d]` for
/// `d = 0..=bandwidth`.
#[derive(Debug, Clone)]
pub struct BandedCholesky {
    n: usize,
    bandwidth: usize,
    data: Vec<f64>,
}

impl BandedCholesky {
    /// Factors a symmetric matrix given by `entry(i, j)` for `j <= i`, `i - j <= bandwidth`.
    pub fn factor<F: Fn(usize, usize) -> f64>(n: usize, bandwidth: usize, entry: F) -> Result<Self> {
        let w = bandwidth + 1;
        let mut data = vec![0.0; n * w];
        for i in 0..n {
            let j0 = i.saturating_sub(bandwidth);
            for j in j0..=i {
                let mut s = entry(i, j);
                let k0 = j0.max(j.saturating_sub(bandwidth));
                let row_i = &data[i * w..];
                let row_j = &data[j * w..];
                for k in k0..j {
                    s -= row_i[i - k] * row_j[j - k];
                }
                if i == j {
                    if !(s > 0.0) || !s.is_finite() {
                        return Err(Error::NumericalDomain("banded Cholesky pivot"));
                    }
                    data[i * w] = s.sqrt();
                } else {
                    data[i * w + (i - j)] = s / data[j * w];
                }
            }
        }
        Ok(Self { n, bandwidth, data })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, x: &mut [f64]) {
        let w = self.bandwidth + 1;
        let n = self.n;
        for i in 0..n {
            let row = &self.data[i * w..(i + 1) * w];
            let mut s = x[i];
            for k in i.saturating_sub(self.bandwidth)..i {
                s -= row[i - k] * x[k];
            }
            x[i] = s / row[0];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..(i + self.bandwidth + 1).min(n) {
                s -= self.data[k * w + (k - i)] * x[k];
            }
            x[i] = s / self.data[i * w];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_periodic_laplacian_plus_mass() {
        // Ring of 10 nodes, periodic neighbours i +- 1 give bandwidth 9.
        let n = 10;
        let a = |i: usize, j: usize| -> f64 {
            if i == j {
                3.0
            } else if (i + n - j) % n == 1 || (j + n - i) % n == 1 {
                -1.0
            } else {
                0.0
            }
        };
        let chol = BandedCholesky::factor(n, n - 1, |i, j| a(i, j)).unwrap();
        let x_true: Vec<f64> = (0..n).map(|i| (i as f64).sin() + 2.0).collect();
        let mut b: Vec<f64> = (0..n).map(|i| (0..n).map(|j| a(i, j) * x_true[j]).sum()).collect();
        chol.solve_in_place(&mut b);
        for (x, t) in b.iter().zip(&x_true) {
            assert!((x - t).abs() < 1e-13);
        }
    }

    #[test]
    fn indefinite_matrix_is_rejected() {
        let r = BandedCholesky::factor(2, 1, |i, j| if i == j { 1.0 } else { 2.0 });
        assert!(r.is_err());
    }
}
