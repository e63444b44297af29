//! Target and noisy state construction, exact fidelity, and fixture I/O.

use crate::matrix::{CMatrix, C64};
use crate::measurement::RngStream;
use crate::pauli::MAX_DENSE_QUBITS;
use crate::{Error, Result};
use rand_distr::{Distribution, StandardNormal};
use std::io::{BufRead, Write};

const HERMITIAN_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-12;
const PSD_TOL: f64 = -1e-10;

/// Dense d x d density matrix, immutable after construction.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    n: usize,
    mat: CMatrix,
}

impl DensityMatrix {
    /// Wrap raw data, enforcing the Hermitian and unit-trace invariants and
    /// (here only — constructors that are PSD by construction skip it) the
    /// positive-semidefiniteness of the spectrum.
    pub fn try_from_raw(mat: CMatrix) -> Result<DensityMatrix> {
        let state = Self::from_matrix_unchecked(mat)?;
        let min_eig = state
            .mat
            .hermitian_eigenvalues()
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        if min_eig < PSD_TOL {
            return Err(Error::InvalidDensity(format!(
                "negative eigenvalue {min_eig:.3e}"
            )));
        }
        Ok(state)
    }

    fn from_matrix_unchecked(mat: CMatrix) -> Result<DensityMatrix> {
        let d = mat.dim();
        let n = d.trailing_zeros() as usize;
        if d == 0 || d != 1 << n {
            return Err(Error::InvalidDensity(format!(
                "dimension {d} is not a power of two"
            )));
        }
        let defect = mat.max_hermitian_defect();
        if defect > HERMITIAN_TOL {
            return Err(Error::InvalidDensity(format!(
                "hermitian defect {defect:.3e}"
            )));
        }
        let tr = mat.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidDensity(format!("trace {tr}")));
        }
        Ok(DensityMatrix { n, mat })
    }

    pub fn qubits(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    /// Smallest eigenvalue; used by tests to spot broken constructions.
    pub fn min_eigenvalue(&self) -> f64 {
        self.mat
            .hermitian_eigenvalues()
            .into_iter()
            .fold(f64::INFINITY, f64::min)
    }

    /// Text fixture format: first line `dim`, then d*d lines `re im` in
    /// row-major order.
    pub fn write_text<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{}", self.dim())?;
        for z in self.mat.data() {
            writeln!(w, "{:.17e} {:.17e}", z.re, z.im)?;
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(r: R) -> Result<DensityMatrix> {
        let mut lines = r.lines();
        let dim: usize = lines
            .next()
            .ok_or_else(|| Error::Parse("empty density matrix file".into()))?
            .map_err(|e| Error::Parse(e.to_string()))?
            .trim()
            .parse()
            .map_err(|e| Error::Parse(format!("bad dimension: {e}")))?;
        let mut data = Vec::with_capacity(dim * dim);
        for line in lines {
            let line = line.map_err(|e| Error::Parse(e.to_string()))?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut it = line.split_whitespace();
            let re: f64 = it
                .next()
                .ok_or_else(|| Error::Parse("missing real part".into()))?
                .parse()
                .map_err(|e| Error::Parse(format!("bad real part: {e}")))?;
            let im: f64 = it
                .next()
                .ok_or_else(|| Error::Parse("missing imaginary part".into()))?
                .parse()
                .map_err(|e| Error::Parse(format!("bad imaginary part: {e}")))?;
            data.push(C64::new(re, im));
        }
        if data.len() != dim * dim {
            return Err(Error::Parse(format!(
                "expected {} entries, found {}",
                dim * dim,
                data.len()
            )));
        }
        Self::from_matrix_unchecked(CMatrix::from_rows(dim, data))
    }
}

fn check_qubits(n: usize, min: usize) -> Result<()> {
    if n < min || n > MAX_DENSE_QUBITS {
        return Err(Error::QubitCount {
            n,
            min,
            max: MAX_DENSE_QUBITS,
        });
    }
    Ok(())
}

/// Projector onto (|0...0> + |1...1>)/sqrt(2).
pub fn make_ghz(n: usize) -> Result<DensityMatrix> {
    check_qubits(n, 1)?;
    let d = 1usize << n;
    let mut v = vec![C64::new(0.0, 0.0); d];
    let a = C64::new(1.0 / 2f64.sqrt(), 0.0);
    v[0] = a;
    v[d - 1] = a;
    DensityMatrix::from_matrix_unchecked(CMatrix::outer(&v))
}

/// Projector onto the uniform single-excitation superposition.
pub fn make_w(n: usize) -> Result<DensityMatrix> {
    check_qubits(n, 2)?;
    let d = 1usize << n;
    let mut v = vec![C64::new(0.0, 0.0); d];
    let a = C64::new(1.0 / (n as f64).sqrt(), 0.0);
    for q in 0..n {
        v[1 << (n - 1 - q)] = a;
    }
    DensityMatrix::from_matrix_unchecked(CMatrix::outer(&v))
}

/// Rank-one projector onto a Haar-random pure state, deterministic given the
/// stream state (complex standard-normal vector, normalized).
pub fn make_haar(n: usize, rng: &mut RngStream) -> Result<DensityMatrix> {
    check_qubits(n, 1)?;
    let d = 1usize << n;
    let mut v = Vec::with_capacity(d);
    for _ in 0..d {
        let re: f64 = StandardNormal.sample(rng.inner_mut());
        let im: f64 = StandardNormal.sample(rng.inner_mut());
        v.push(C64::new(re, im));
    }
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for z in &mut v {
        *z /= norm;
    }
    DensityMatrix::from_matrix_unchecked(CMatrix::outer(&v))
}

/// Full-rank random density matrix (Ginibre construction); test fixture for
/// unbiasedness-by-enumeration checks.
pub fn make_random_mixed(n: usize, rng: &mut RngStream) -> Result<DensityMatrix> {
    check_qubits(n, 1)?;
    let d = 1usize << n;
    let mut g = CMatrix::zeros(d);
    for i in 0..d {
        for j in 0..d {
            let re: f64 = StandardNormal.sample(rng.inner_mut());
            let im: f64 = StandardNormal.sample(rng.inner_mut());
            g[(i, j)] = C64::new(re, im);
        }
    }
    let gg = g.matmul(&g.dagger());
    let tr = gg.trace().re;
    DensityMatrix::from_matrix_unchecked(gg.scale(1.0 / tr))
}

/// (1 - strength) O + strength I/d.
pub fn depolarize(o: &DensityMatrix, noise_strength: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&noise_strength) {
        return Err(Error::InvalidArgument(format!(
            "noise strength {noise_strength} outside [0, 1]"
        )));
    }
    let d = o.dim();
    let mut m = o.matrix().scale(1.0 - noise_strength);
    m.add_scaled(&CMatrix::identity(d), noise_strength / d as f64);
    DensityMatrix::from_matrix_unchecked(m)
}

/// Re tr(rho O).
pub fn exact_fidelity(rho: &DensityMatrix, o: &DensityMatrix) -> Result<f64> {
    if rho.dim() != o.dim() {
        return Err(Error::DimensionMismatch {
            left: rho.dim(),
            right: o.dim(),
        });
    }
    let t = rho.matrix().trace_product(o.matrix());
    if t.im.abs() > 1e-12 {
        return Err(Error::Numerical(format!(
            "imaginary fidelity residue {:.3e}",
            t.im
        )));
    }
    Ok(t.re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::{self, PauliString};

    #[test]
    fn ghz_basics() {
        let g1 = make_ghz(1).unwrap();
        // single-qubit case is |+><+|
        assert!((g1.matrix()[(0, 1)].re - 0.5).abs() < 1e-12);
        assert!((g1.matrix().trace().re - 1.0).abs() < 1e-12);
        let g3 = make_ghz(3).unwrap();
        let zzi: PauliString = "ZZI".parse().unwrap();
        let v = pauli::char_value(g3.matrix(), &zzi).unwrap();
        assert!((v - 1.0 / 8f64.sqrt()).abs() < 1e-12);
        assert!((exact_fidelity(&g3, &g3).unwrap() - 1.0).abs() < 1e-12);
        assert!(make_ghz(0).is_err());
        assert!(make_ghz(9).is_err());
    }

    #[test]
    fn w_basics() {
        let w2 = make_w(2).unwrap();
        let zz: PauliString = "ZZ".parse().unwrap();
        let chi = pauli::char_value(w2.matrix(), &zz).unwrap();
        assert!((chi + 0.5).abs() < 1e-12);
        assert!((chi * chi - 0.25).abs() < 1e-12);
        let w3 = make_w(3).unwrap();
        assert!((w3.matrix().trace().re - 1.0).abs() < 1e-12);
        let eigs = w3.matrix().hermitian_eigenvalues();
        let rank = eigs.iter().filter(|&&e| e > 1e-10).count();
        assert_eq!(rank, 1);
        assert!(make_w(1).is_err());
    }

    #[test]
    fn haar_deterministic_and_rank_one() {
        let mut r1 = RngStream::new(7, 3);
        let mut r2 = RngStream::new(7, 3);
        let a = make_haar(3, &mut r1).unwrap();
        let b = make_haar(3, &mut r2).unwrap();
        assert_eq!(a.matrix().data(), b.matrix().data());
        assert!((a.matrix().trace().re - 1.0).abs() < 1e-10);
        let eigs = a.matrix().hermitian_eigenvalues();
        assert_eq!(eigs.iter().filter(|&&e| e > 1e-10).count(), 1);
        let mut r3 = RngStream::new(7, 4);
        let c = make_haar(3, &mut r3).unwrap();
        assert!(a.matrix().frobenius_distance(c.matrix()) > 1e-3);
    }

    #[test]
    fn haar_second_moment_matches_unitary_average() {
        // E[chi^2] over Haar states = 1/(d(d+1)) for fixed non-identity p;
        // independent-sample average vs the analytic moment, 3 standard errors.
        let n = 2;
        let p: PauliString = "XZ".parse().unwrap();
        let trials = 10_000;
        let mut rng = RngStream::new(99, 0);
        let mut vals = Vec::with_capacity(trials);
        for _ in 0..trials {
            let st = make_haar(n, &mut rng).unwrap();
            let chi = pauli::char_value(st.matrix(), &p).unwrap();
            vals.push(chi * chi);
        }
        let mean: f64 = vals.iter().sum::<f64>() / trials as f64;
        let var: f64 =
            vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (trials - 1) as f64;
        let se = (var / trials as f64).sqrt();
        let expect = 1.0 / 20.0;
        assert!(
            (mean - expect).abs() < 3.0 * se,
            "mean {mean:.6} expect {expect:.6} se {se:.6}"
        );
    }

    #[test]
    fn depolarize_identities() {
        let g3 = make_ghz(3).unwrap();
        let same = depolarize(&g3, 0.0).unwrap();
        assert_eq!(same.matrix().data(), g3.matrix().data());
        let mixed = depolarize(&g3, 1.0).unwrap();
        assert!(
            mixed
                .matrix()
                .frobenius_distance(&CMatrix::identity(8).scale(0.125))
                < 1e-12
        );
        let noisy = depolarize(&g3, 0.1).unwrap();
        let f = exact_fidelity(&noisy, &g3).unwrap();
        assert!((f - 0.9125).abs() < 1e-12);
        assert!(depolarize(&g3, -0.1).is_err());
        assert!(depolarize(&g3, 1.5).is_err());
    }

    #[test]
    fn fidelity_linear_in_noise() {
        for n in 1..=4 {
            let o = make_ghz(n).unwrap();
            for lam in [0.0, 0.15, 0.5, 0.9] {
                let rho = depolarize(&o, lam).unwrap();
                let f = exact_fidelity(&rho, &o).unwrap();
                let expect = (1.0 - lam) + lam / (1u64 << n) as f64;
                assert!((f - expect).abs() < 1e-12);
            }
        }
        let mixed = depolarize(&make_ghz(3).unwrap(), 1.0).unwrap();
        let f = exact_fidelity(&mixed, &make_ghz(3).unwrap()).unwrap();
        assert!((f - 0.125).abs() < 1e-12);
    }

    #[test]
    fn fidelity_dimension_mismatch() {
        let a = make_ghz(2).unwrap();
        let b = make_ghz(3).unwrap();
        assert!(matches!(
            exact_fidelity(&a, &b),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn text_roundtrip() {
        let mut rng = RngStream::new(5, 1);
        let rho = make_random_mixed(3, &mut rng).unwrap();
        let mut buf = Vec::new();
        rho.write_text(&mut buf).unwrap();
        let back = DensityMatrix::read_text(std::io::Cursor::new(buf)).unwrap();
        assert!(rho.matrix().frobenius_distance(back.matrix()) < 1e-15);
    }

    #[test]
    fn try_from_raw_rejects_bad_input() {
        let mut m = CMatrix::identity(2);
        m[(0, 1)] = C64::new(0.1, 0.0); // not hermitian
        assert!(DensityMatrix::try_from_raw(m).is_err());
        let mut m = CMatrix::zeros(2);
        m[(0, 0)] = C64::new(1.5, 0.0);
        m[(1, 1)] = C64::new(-0.5, 0.0); // trace 1 but negative eigenvalue
        assert!(DensityMatrix::try_from_raw(m).is_err());
    }
}
