//! Projective measurement of a state in a rotated Pauli product basis.
//!
//! A setting assigns one of X, Y, Z to every qubit. Measuring letter P on a
//! qubit is realized by conjugating with the single-qubit V satisfying
//! V P V† = Z and reading the computational basis, so outcome bit b carries
//! eigenvalue (-1)^b of P. The rotations are frozen as X -> H and
//! Y -> H · S† for reproducibility.

use crate::matrix::{CMatrix, C64};
use crate::pauli::{BitString, Letter, PauliString};
use crate::state::DensityMatrix;
use crate::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use std::fmt;

/// A full-support Pauli word: the basis actually measured.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MeasurementSetting(PauliString);

impl MeasurementSetting {
    pub fn new(p: PauliString) -> Result<MeasurementSetting> {
        if p.letters().any(|l| l == Letter::I) {
            return Err(Error::InvalidArgument(format!(
                "setting {p} leaves a qubit unmeasured"
            )));
        }
        Ok(MeasurementSetting(p))
    }

    pub fn from_letters(letters: &[Letter]) -> Result<MeasurementSetting> {
        MeasurementSetting::new(PauliString::from_letters(letters))
    }

    pub fn qubits(&self) -> usize {
        self.0.len()
    }

    pub fn pauli(&self) -> &PauliString {
        &self.0
    }

    pub fn letter(&self, i: usize) -> Letter {
        self.0.letter(i)
    }
}

impl fmt::Display for MeasurementSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl fmt::Debug for MeasurementSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl std::str::FromStr for MeasurementSetting {
    type Err = Error;
    fn from_str(s: &str) -> Result<MeasurementSetting> {
        MeasurementSetting::new(s.parse()?)
    }
}

const INV_SQRT2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// V with V X V† = Z (Hadamard).
pub fn rotation_x() -> [[C64; 2]; 2] {
    let r = C64::new(INV_SQRT2, 0.0);
    [[r, r], [r, -r]]
}

/// V with V Y V† = Z (Hadamard followed by the inverse phase gate).
pub fn rotation_y() -> [[C64; 2]; 2] {
    let r = C64::new(INV_SQRT2, 0.0);
    let mi = C64::new(0.0, -1.0);
    [[r, r * mi], [r, -r * mi]]
}

fn rotation(letter: Letter) -> Option<[[C64; 2]; 2]> {
    match letter {
        Letter::X => Some(rotation_x()),
        Letter::Y => Some(rotation_y()),
        Letter::Z => None,
        Letter::I => unreachable!("settings have full support"),
    }
}

/// The full d x d eigenbasis rotation for a setting.
pub fn basis_change(setting: &MeasurementSetting) -> CMatrix {
    let mut v = CMatrix::identity(1);
    for i in 0..setting.qubits() {
        let single = match rotation(setting.letter(i)) {
            Some(r) => {
                let mut m = CMatrix::zeros(2);
                m[(0, 0)] = r[0][0];
                m[(0, 1)] = r[0][1];
                m[(1, 0)] = r[1][0];
                m[(1, 1)] = r[1][1];
                m
            }
            None => CMatrix::identity(2),
        };
        v = v.kron(&single);
    }
    v
}

/// Probabilities of every outcome bitstring, lexicographic order.
#[derive(Clone, Debug)]
pub struct OutcomeDistribution {
    n: usize,
    probs: Vec<f64>,
    cumulative: Vec<f64>,
}

impl OutcomeDistribution {
    pub fn new(n: usize, mut probs: Vec<f64>) -> Result<OutcomeDistribution> {
        if probs.len() != 1 << n {
            return Err(Error::DimensionMismatch {
                left: probs.len(),
                right: 1 << n,
            });
        }
        let mut sum = 0.0;
        for p in &mut probs {
            if *p < -1e-12 {
                return Err(Error::Numerical(format!("negative probability {p:.3e}")));
            }
            if *p < 0.0 {
                *p = 0.0;
            }
            sum += *p;
        }
        if (sum - 1.0).abs() > 1e-10 {
            return Err(Error::Numerical(format!("probabilities sum to {sum}")));
        }
        let mut cumulative = Vec::with_capacity(probs.len());
        let mut acc = 0.0;
        for &p in &probs {
            acc += p;
            cumulative.push(acc);
        }
        Ok(OutcomeDistribution {
            n,
            probs,
            cumulative,
        })
    }

    pub fn qubits(&self) -> usize {
        self.n
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, b: &BitString) -> f64 {
        self.probs[b.bits() as usize]
    }
}

/// Seeded, splittable random stream: identical (seed, stream) pairs replay
/// identical draw sequences; distinct stream indices are independent.
#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    rng: ChaCha12Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> RngStream {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        RngStream { seed, stream, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Uniform in [0, 1).
    pub fn uniform(&mut self) -> f64 {
        rand::Rng::random::<f64>(&mut self.rng)
    }

    /// Uniform integer in [0, bound).
    pub fn below(&mut self, bound: u64) -> u64 {
        rand::Rng::random_range(&mut self.rng, 0..bound)
    }

    /// Fair coin.
    pub fn coin(&mut self) -> bool {
        rand::Rng::random::<bool>(&mut self.rng)
    }

    pub fn inner_mut(&mut self) -> &mut ChaCha12Rng {
        &mut self.rng
    }
}

/// Outcome probabilities of measuring `rho` in the rotated basis of `setting`:
/// probs[b] = <b| V rho V† |b>.
pub fn outcome_distribution(
    rho: &DensityMatrix,
    setting: &MeasurementSetting,
) -> Result<OutcomeDistribution> {
    let n = setting.qubits();
    if rho.qubits() != n {
        return Err(Error::DimensionMismatch {
            left: rho.dim(),
            right: 1 << n,
        });
    }
    let mut m = rho.matrix().clone();
    for q in 0..n {
        if let Some(r) = rotation(setting.letter(q)) {
            m.conjugate_single_qubit(&r, q, n);
        }
    }
    let probs: Vec<f64> = (0..1usize << n).map(|b| m[(b, b)].re).collect();
    OutcomeDistribution::new(n, probs)
}

/// Inverse-CDF draw over the lexicographic outcome order.
pub fn sample_outcome(dist: &OutcomeDistribution, rng: &mut RngStream) -> BitString {
    let u = rng.uniform();
    let idx = dist
        .cumulative
        .partition_point(|&c| c <= u)
        .min(dist.probs.len() - 1);
    BitString::new(dist.n, idx as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::{self, char_value};
    use crate::state;

    #[test]
    fn settings_reject_identity_letters() {
        assert!("XIZ".parse::<MeasurementSetting>().is_err());
        assert!("XYZ".parse::<MeasurementSetting>().is_ok());
    }

    #[test]
    fn basis_change_z_is_identity() {
        let s: MeasurementSetting = "ZZ".parse().unwrap();
        let v = basis_change(&s);
        assert!(v.frobenius_distance(&CMatrix::identity(4)) < 1e-15);
    }

    #[test]
    fn x_measurement_of_plus_state_is_deterministic() {
        let plus = state::make_ghz(1).unwrap(); // |+><+|
        let s: MeasurementSetting = "X".parse().unwrap();
        let dist = outcome_distribution(&plus, &s).unwrap();
        assert!((dist.probs()[0] - 1.0).abs() < 1e-12);
        assert!(dist.probs()[1].abs() < 1e-12);
    }

    #[test]
    fn y_measurement_of_zero_state_is_uniform() {
        let mut m = CMatrix::zeros(2);
        m[(0, 0)] = C64::new(1.0, 0.0);
        let rho = state::DensityMatrix::try_from_raw(m).unwrap();
        let s: MeasurementSetting = "Y".parse().unwrap();
        let dist = outcome_distribution(&rho, &s).unwrap();
        assert!((dist.probs()[0] - 0.5).abs() < 1e-12);
        assert!((dist.probs()[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn ghz_z_distribution() {
        let g = state::make_ghz(3).unwrap();
        let dist = outcome_distribution(&g, &"ZZZ".parse().unwrap()).unwrap();
        assert!((dist.probs()[0] - 0.5).abs() < 1e-12);
        assert!((dist.probs()[7] - 0.5).abs() < 1e-12);
        assert!(dist.probs()[1..7].iter().all(|p| p.abs() < 1e-12));
    }

    #[test]
    fn depolarized_ghz_z_distribution() {
        let rho = state::depolarize(&state::make_ghz(3).unwrap(), 0.1).unwrap();
        let dist = outcome_distribution(&rho, &"ZZZ".parse().unwrap()).unwrap();
        assert!((dist.probs()[0] - 0.4625).abs() < 1e-12);
        assert!((dist.probs()[7] - 0.4625).abs() < 1e-12);
        for b in 1..7 {
            assert!((dist.probs()[b] - 0.0125).abs() < 1e-12);
        }
        let p_edge = dist.probs()[0] + dist.probs()[7];
        assert!((p_edge - 0.925).abs() < 1e-12);
    }

    #[test]
    fn maximally_mixed_is_uniform_in_any_basis() {
        let rho = state::depolarize(&state::make_ghz(3).unwrap(), 1.0).unwrap();
        for s in ["XXX", "YZX", "ZZZ"] {
            let dist = outcome_distribution(&rho, &s.parse().unwrap()).unwrap();
            for p in dist.probs() {
                assert!((p - 0.125).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn estimator_bridge_invariant() {
        // For every p qubit-wise commuting with the setting, the sign-weighted
        // outcome average reproduces sqrt(d) * chi_rho(p). This is what makes
        // all grouped estimators unbiased.
        let mut rng = RngStream::new(31, 0);
        for n in 1..=3usize {
            let rho = state::make_random_mixed(n, &mut rng).unwrap();
            for _ in 0..4 {
                let letters: Vec<Letter> = (0..n)
                    .map(|_| match rng.below(3) {
                        0 => Letter::X,
                        1 => Letter::Y,
                        _ => Letter::Z,
                    })
                    .collect();
                let setting = MeasurementSetting::from_letters(&letters).unwrap();
                let dist = outcome_distribution(&rho, &setting).unwrap();
                for mask in 0..(1u64 << n) {
                    let sub: Vec<Letter> = (0..n)
                        .map(|i| {
                            if (mask >> (n - 1 - i)) & 1 == 1 {
                                letters[i]
                            } else {
                                Letter::I
                            }
                        })
                        .collect();
                    let p = PauliString::from_letters(&sub);
                    let mut lhs = 0.0;
                    for b in 0..(1u64 << n) {
                        let bs = BitString::new(n, b);
                        lhs += dist.prob(&bs) * pauli::eigen_sign(&p, &bs) as f64;
                    }
                    let rhs = ((1u64 << n) as f64).sqrt() * char_value(rho.matrix(), &p).unwrap();
                    assert!((lhs - rhs).abs() < 1e-10, "n={n} setting={setting} p={p}");
                }
            }
        }
    }

    #[test]
    fn distribution_normalization_random_states() {
        let mut rng = RngStream::new(17, 0);
        for n in 1..=4 {
            let rho = state::make_random_mixed(n, &mut rng).unwrap();
            let dist = outcome_distribution(&rho, &"X".repeat(n).parse().unwrap()).unwrap();
            let sum: f64 = dist.probs().iter().sum();
            assert!((sum - 1.0).abs() < 1e-10);
            assert!(dist.probs().iter().all(|&p| p >= 0.0));
        }
    }

    #[test]
    fn sampling_point_mass_and_support() {
        let mut probs = vec![0.0; 8];
        probs[5] = 1.0;
        let dist = OutcomeDistribution::new(3, probs).unwrap();
        let mut rng = RngStream::new(1, 0);
        for _ in 0..100 {
            assert_eq!(sample_outcome(&dist, &mut rng).bits(), 5);
        }
        // GHZ/Z measurement only ever yields 000 or 111
        let g = state::make_ghz(3).unwrap();
        let dist = outcome_distribution(&g, &"ZZZ".parse().unwrap()).unwrap();
        for _ in 0..10_000 {
            let b = sample_outcome(&dist, &mut rng).bits();
            assert!(b == 0 || b == 7);
        }
    }

    #[test]
    fn sampling_bernoulli_frequency() {
        let dist = OutcomeDistribution::new(1, vec![0.5, 0.5]).unwrap();
        let mut rng = RngStream::new(2024, 0);
        let trials = 100_000;
        let mut zeros = 0usize;
        for _ in 0..trials {
            if sample_outcome(&dist, &mut rng).bits() == 0 {
                zeros += 1;
            }
        }
        let freq = zeros as f64 / trials as f64;
        let sigma = 0.5 / (trials as f64).sqrt();
        assert!((freq - 0.5).abs() < 3.0 * sigma, "freq={freq}");
    }

    #[test]
    fn replay_is_bit_exact() {
        let g = state::depolarize(&state::make_ghz(3).unwrap(), 0.2).unwrap();
        let dist = outcome_distribution(&g, &"XYZ".parse().unwrap()).unwrap();
        let draw = |seed, stream| {
            let mut rng = RngStream::new(seed, stream);
            (0..64)
                .map(|_| sample_outcome(&dist, &mut rng).bits())
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(9, 4), draw(9, 4));
        assert_ne!(draw(9, 4), draw(9, 5));
    }

    #[test]
    fn rotation_conventions() {
        // V_X X V_X† = Z and V_Y Y V_Y† = Z as 2x2 identities
        let to_mat = |r: [[C64; 2]; 2]| {
            let mut m = CMatrix::zeros(2);
            for i in 0..2 {
                for j in 0..2 {
                    m[(i, j)] = r[i][j];
                }
            }
            m
        };
        let x = CMatrix::from_rows(
            2,
            vec![
                C64::new(0., 0.),
                C64::new(1., 0.),
                C64::new(1., 0.),
                C64::new(0., 0.),
            ],
        );
        let y = CMatrix::from_rows(
            2,
            vec![
                C64::new(0., 0.),
                C64::new(0., -1.),
                C64::new(0., 1.),
                C64::new(0., 0.),
            ],
        );
        let z = CMatrix::from_rows(
            2,
            vec![
                C64::new(1., 0.),
                C64::new(0., 0.),
                C64::new(0., 0.),
                C64::new(-1., 0.),
            ],
        );
        let vx = to_mat(rotation_x());
        let vy = to_mat(rotation_y());
        assert!(vx.matmul(&x).matmul(&vx.dagger()).frobenius_distance(&z) < 1e-12);
        assert!(vy.matmul(&y).matmul(&vy.dagger()).frobenius_distance(&z) < 1e-12);
    }
}
