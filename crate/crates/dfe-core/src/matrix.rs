//! Dense complex matrices sized for small multi-qubit systems (d = 2^n ≤ 256).
//!
//! Deliberately minimal plumbing: row-major storage, the handful of operations
//! the estimators need (qubit-local conjugation, traces, outer products), and
//! a Jacobi eigensolver used by validation code and tests.

use num_complex::Complex64;
use std::fmt;

pub type C64 = Complex64;

/// Row-major dense complex matrix.
#[derive(Clone, PartialEq)]
pub struct CMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix({}x{})", self.dim, self.dim)?;
        for i in 0..self.dim.min(8) {
            for j in 0..self.dim.min(8) {
                write!(f, " {:+.3}{:+.3}i", self[(i, j)].re, self[(i, j)].im)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.dim + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.dim + j]
    }
}

impl CMatrix {
    pub fn zeros(dim: usize) -> Self {
        CMatrix {
            dim,
            data: vec![C64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_rows(dim: usize, data: Vec<C64>) -> Self {
        assert_eq!(data.len(), dim * dim);
        CMatrix { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    /// Rank-one projector |v><v|.
    pub fn outer(v: &[C64]) -> Self {
        let dim = v.len();
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] = v[i] * v[j].conj();
            }
        }
        m
    }

    pub fn scale(&self, s: f64) -> Self {
        CMatrix {
            dim: self.dim,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        CMatrix {
            dim: self.dim,
            data,
        }
    }

    pub fn add_scaled(&mut self, other: &Self, s: f64) {
        assert_eq!(self.dim, other.dim);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b * s;
        }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let d = self.dim;
        let mut out = Self::zeros(d);
        for i in 0..d {
            for k in 0..d {
                let a = self[(i, k)];
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..d {
                    let v = a * other[(k, j)];
                    out[(i, j)] += v;
                }
            }
        }
        out
    }

    pub fn dagger(&self) -> Self {
        let d = self.dim;
        let mut out = Self::zeros(d);
        for i in 0..d {
            for j in 0..d {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    /// tr(self · other) without forming the product.
    pub fn trace_product(&self, other: &Self) -> C64 {
        assert_eq!(self.dim, other.dim);
        let d = self.dim;
        let mut t = C64::new(0.0, 0.0);
        for i in 0..d {
            for j in 0..d {
                t += self[(i, j)] * other[(j, i)];
            }
        }
        t
    }

    pub fn kron(&self, other: &Self) -> Self {
        let (da, db) = (self.dim, other.dim);
        let d = da * db;
        let mut out = Self::zeros(d);
        for i in 0..da {
            for j in 0..da {
                let a = self[(i, j)];
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for k in 0..db {
                    for l in 0..db {
                        out[(i * db + k, j * db + l)] = a * other[(k, l)];
                    }
                }
            }
        }
        out
    }

    pub fn frobenius_distance(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_hermitian_defect(&self) -> f64 {
        let d = self.dim;
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in i..d {
                let defect = (self[(i, j)] - self[(j, i)].conj()).norm();
                worst = worst.max(defect);
            }
        }
        worst
    }

    /// Conjugate by a single-qubit unitary: self -> V_q self V_q†.
    ///
    /// `qubit` indexes from the most significant bit (qubit 0 first), matching
    /// the lexicographic basis-state order used everywhere else.
    pub fn conjugate_single_qubit(&mut self, v: &[[C64; 2]; 2], qubit: usize, n: usize) {
        let d = self.dim;
        debug_assert_eq!(d, 1 << n);
        let bit = 1usize << (n - 1 - qubit);
        // left multiply: rows mix
        for base in 0..d {
            if base & bit != 0 {
                continue;
            }
            let (r0, r1) = (base, base | bit);
            for j in 0..d {
                let a = self.data[r0 * d + j];
                let b = self.data[r1 * d + j];
                self.data[r0 * d + j] = v[0][0] * a + v[0][1] * b;
                self.data[r1 * d + j] = v[1][0] * a + v[1][1] * b;
            }
        }
        // right multiply by V†: columns mix with conjugated coefficients
        for base in 0..d {
            if base & bit != 0 {
                continue;
            }
            let (c0, c1) = (base, base | bit);
            for i in 0..d {
                let a = self.data[i * d + c0];
                let b = self.data[i * d + c1];
                self.data[i * d + c0] = a * v[0][0].conj() + b * v[0][1].conj();
                self.data[i * d + c1] = a * v[1][0].conj() + b * v[1][1].conj();
            }
        }
    }

    /// Eigenvalues of a Hermitian matrix via real-symmetric Jacobi on the
    /// doubled embedding [[Re, -Im], [Im, Re]] (each eigenvalue appears
    /// twice). Slow but dependency-free; intended for validation and tests.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        let d = self.dim;
        let m = 2 * d;
        let mut a = vec![0.0f64; m * m];
        for i in 0..d {
            for j in 0..d {
                let z = self[(i, j)];
                a[i * m + j] = z.re;
                a[(i + d) * m + (j + d)] = z.re;
                a[i * m + (j + d)] = -z.im;
                a[(i + d) * m + j] = z.im;
            }
        }
        for _sweep in 0..60 {
            let mut off = 0.0f64;
            for p in 0..m {
                for q in (p + 1)..m {
                    off += a[p * m + q] * a[p * m + q];
                }
            }
            if off.sqrt() < 1e-13 {
                break;
            }
            for p in 0..m {
                for q in (p + 1)..m {
                    let apq = a[p * m + q];
                    if apq.abs() < 1e-15 {
                        continue;
                    }
                    let app = a[p * m + p];
                    let aqq = a[q * m + q];
                    let tau = (aqq - app) / (2.0 * apq);
                    let t = if tau >= 0.0 {
                        1.0 / (tau + (1.0 + tau * tau).sqrt())
                    } else {
                        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                    };
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = t * c;
                    for k in 0..m {
                        let akp = a[k * m + p];
                        let akq = a[k * m + q];
                        a[k * m + p] = c * akp - s * akq;
                        a[k * m + q] = s * akp + c * akq;
                    }
                    for k in 0..m {
                        let apk = a[p * m + k];
                        let aqk = a[q * m + k];
                        a[p * m + k] = c * apk - s * aqk;
                        a[q * m + k] = s * apk + c * aqk;
                    }
                }
            }
        }
        let mut all: Vec<f64> = (0..m).map(|i| a[i * m + i]).collect();
        all.sort_by(|x, y| x.partial_cmp(y).unwrap());
        // collapse the doubled spectrum
        (0..m)
            .step_by(2)
            .map(|i| 0.5 * (all[i] + all[i + 1]))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn trace_product_matches_matmul_trace() {
        let a = CMatrix::from_rows(
            2,
            vec![c(1.0, 0.0), c(0.5, 0.25), c(0.5, -0.25), c(2.0, 0.0)],
        );
        let b = CMatrix::from_rows(2, vec![c(0.3, 0.0), c(0.1, -0.7), c(0.1, 0.7), c(0.9, 0.0)]);
        let t1 = a.trace_product(&b);
        let t2 = a.matmul(&b).trace();
        assert!((t1 - t2).norm() < 1e-12);
    }

    #[test]
    fn single_qubit_conjugation_matches_dense() {
        let r = 1.0 / 2f64.sqrt();
        let h = [[c(r, 0.0), c(r, 0.0)], [c(r, 0.0), c(-r, 0.0)]];
        let mut m = CMatrix::zeros(4);
        for i in 0..4 {
            for j in 0..4 {
                m[(i, j)] = c(((i * 4 + j) as f64).sin(), ((i + 2 * j) as f64).cos());
            }
        }
        let mut hfull = CMatrix::zeros(2);
        for i in 0..2 {
            for j in 0..2 {
                hfull[(i, j)] = h[i][j];
            }
        }
        let big = hfull.kron(&CMatrix::identity(2));
        let expect = big.matmul(&m).matmul(&big.dagger());
        let mut got = m.clone();
        got.conjugate_single_qubit(&h, 0, 2);
        assert!(got.frobenius_distance(&expect) < 1e-12);
    }

    #[test]
    fn jacobi_eigenvalues_of_projector() {
        let v = vec![c(0.6, 0.0), c(0.0, 0.8)];
        let p = CMatrix::outer(&v);
        let eigs = p.hermitian_eigenvalues();
        assert!(eigs[0].abs() < 1e-10);
        assert!((eigs[1] - 1.0).abs() < 1e-10);
    }
}
