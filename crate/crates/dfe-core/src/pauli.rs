//! Pauli strings, measurement bitstrings, and characteristic vectors.
//!
//! Conventions fixed here and relied on everywhere else:
//! - letters order as I < X < Y < Z (codes 0..3);
//! - qubit 0 is the most significant position, so the packed code of a string
//!   read as an integer equals its lexicographic index;
//! - characteristic values are real (Pauli expectations of Hermitian
//!   operators); any imaginary residue above 1e-12 is an internal error.

use crate::matrix::{CMatrix, C64};
use crate::{Error, Result};
use std::fmt;

pub const MAX_DENSE_QUBITS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum Letter {
    I = 0,
    X = 1,
    Y = 2,
    Z = 3,
}

impl Letter {
    pub fn from_code(code: u8) -> Letter {
        match code & 3 {
            0 => Letter::I,
            1 => Letter::X,
            2 => Letter::Y,
            _ => Letter::Z,
        }
    }

    pub fn to_char(self) -> char {
        match self {
            Letter::I => 'I',
            Letter::X => 'X',
            Letter::Y => 'Y',
            Letter::Z => 'Z',
        }
    }

    pub fn from_char(c: char) -> Result<Letter> {
        match c {
            'I' => Ok(Letter::I),
            'X' => Ok(Letter::X),
            'Y' => Ok(Letter::Y),
            'Z' => Ok(Letter::Z),
            _ => Err(Error::Parse(format!("invalid Pauli letter '{c}'"))),
        }
    }
}

/// An n-qubit Pauli word, packed two bits per qubit (qubit 0 most significant).
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    n: u8,
    bits: u64,
}

impl PauliString {
    pub fn identity(n: usize) -> PauliString {
        assert!((1..=32).contains(&n));
        PauliString {
            n: n as u8,
            bits: 0,
        }
    }

    pub fn from_letters(letters: &[Letter]) -> PauliString {
        assert!((1..=32).contains(&letters.len()));
        let n = letters.len();
        let mut bits = 0u64;
        for (i, &l) in letters.iter().enumerate() {
            bits |= (l as u64) << (2 * (n - 1 - i));
        }
        PauliString { n: n as u8, bits }
    }

    /// Reconstruct from the lexicographic index used by `CharacteristicVector`.
    pub fn from_index(n: usize, index: u64) -> PauliString {
        assert!((1..=32).contains(&n));
        debug_assert!(index < 1u64 << (2 * n));
        PauliString {
            n: n as u8,
            bits: index,
        }
    }

    pub fn len(&self) -> usize {
        self.n as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn letter(&self, i: usize) -> Letter {
        debug_assert!(i < self.len());
        Letter::from_code(((self.bits >> (2 * (self.len() - 1 - i))) & 3) as u8)
    }

    pub fn letters(&self) -> impl Iterator<Item = Letter> + '_ {
        (0..self.len()).map(|i| self.letter(i))
    }

    pub fn is_identity(&self) -> bool {
        self.bits == 0
    }

    /// Lexicographic index (I<X<Y<Z per qubit, qubit 0 most significant).
    pub fn index(&self) -> u64 {
        self.bits
    }

    /// Bit mask (qubit 0 = most significant bit) of positions equal to `l`.
    pub fn letter_mask(&self, l: Letter) -> u64 {
        let n = self.len();
        let mut mask = 0u64;
        for i in 0..n {
            if self.letter(i) == l {
                mask |= 1 << (n - 1 - i);
            }
        }
        mask
    }

    /// Non-identity support as a bit mask (qubit 0 = most significant bit).
    pub fn support(&self) -> u64 {
        let n = self.len();
        let mut mask = 0u64;
        for i in 0..n {
            if self.letter(i) != Letter::I {
                mask |= 1 << (n - 1 - i);
            }
        }
        mask
    }

    pub fn weight(&self) -> u32 {
        self.support().count_ones()
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in self.letters() {
            write!(f, "{}", l.to_char())?;
        }
        Ok(())
    }
}

impl fmt::Debug for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl std::str::FromStr for PauliString {
    type Err = Error;
    fn from_str(s: &str) -> Result<PauliString> {
        if s.is_empty() || s.len() > 32 {
            return Err(Error::Parse(format!("bad Pauli string length {}", s.len())));
        }
        let letters: Result<Vec<Letter>> = s.chars().map(Letter::from_char).collect();
        Ok(PauliString::from_letters(&letters?))
    }
}

/// Measurement outcome over n qubits (qubit 0 first in the ASCII form, and
/// most significant in the packed integer).
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitString {
    n: u8,
    bits: u64,
}

impl BitString {
    pub fn new(n: usize, bits: u64) -> BitString {
        assert!((1..=32).contains(&n));
        debug_assert!(bits < 1u64 << n);
        BitString { n: n as u8, bits }
    }

    pub fn len(&self) -> usize {
        self.n as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn bit(&self, i: usize) -> u8 {
        debug_assert!(i < self.len());
        ((self.bits >> (self.len() - 1 - i)) & 1) as u8
    }

    pub fn hamming_weight(&self) -> u32 {
        self.bits.count_ones()
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len() {
            write!(f, "{}", self.bit(i))?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl std::str::FromStr for BitString {
    type Err = Error;
    fn from_str(s: &str) -> Result<BitString> {
        if s.is_empty() || s.len() > 32 {
            return Err(Error::Parse(format!("bad bitstring length {}", s.len())));
        }
        let mut bits = 0u64;
        for c in s.chars() {
            bits <<= 1;
            match c {
                '0' => {}
                '1' => bits |= 1,
                _ => return Err(Error::Parse(format!("invalid bit '{c}'"))),
            }
        }
        Ok(BitString {
            n: s.len() as u8,
            bits,
        })
    }
}

/// The real coefficients of a Hermitian operator in the normalized Pauli
/// frame, indexed lexicographically over all 4^n strings.
#[derive(Clone, Debug)]
pub struct CharacteristicVector {
    n: usize,
    entries: Vec<f64>,
}

impl CharacteristicVector {
    pub fn qubits(&self) -> usize {
        self.n
    }

    pub fn entry(&self, p: &PauliString) -> f64 {
        assert_eq!(p.len(), self.n);
        self.entries[p.index() as usize]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn iter(&self) -> impl Iterator<Item = (PauliString, f64)> + '_ {
        self.entries
            .iter()
            .enumerate()
            .map(move |(i, &v)| (PauliString::from_index(self.n, i as u64), v))
    }

    /// Strings with |chi| above threshold, identity included.
    pub fn support(&self, threshold: f64) -> Vec<(PauliString, f64)> {
        self.iter().filter(|(_, v)| v.abs() > threshold).collect()
    }

    /// Support with the identity string removed, as (strings, chis) pairs
    /// ready for sorted insertion.
    pub fn support_without_identity(&self) -> (Vec<PauliString>, Vec<f64>) {
        let mut strings = Vec::new();
        let mut chis = Vec::new();
        for (p, v) in self.iter() {
            if !p.is_identity() && v.abs() > 1e-12 {
                strings.push(p);
                chis.push(v);
            }
        }
        (strings, chis)
    }

    pub fn sum_of_squares(&self) -> f64 {
        self.entries.iter().map(|v| v * v).sum()
    }
}

/// tr(A · P) / sqrt(d) for Hermitian A, computed by the signed-permutation
/// walk of P in O(d).
pub fn char_value(a: &CMatrix, p: &PauliString) -> Result<f64> {
    let n = p.len();
    let d = 1usize << n;
    if a.dim() != d {
        return Err(Error::DimensionMismatch {
            left: a.dim(),
            right: d,
        });
    }
    let xm = p.letter_mask(Letter::X);
    let ym = p.letter_mask(Letter::Y);
    let zm = p.letter_mask(Letter::Z);
    let flip = (xm | ym) as usize;
    let sign_mask = (ym | zm) as usize;
    let mut t = C64::new(0.0, 0.0);
    for j in 0..d {
        let s = if (j & sign_mask).count_ones() % 2 == 0 {
            1.0
        } else {
            -1.0
        };
        t += a[(j, j ^ flip)] * s;
    }
    // global phase i^{|Y|}
    let t = match ym.count_ones() % 4 {
        0 => t,
        1 => t * C64::new(0.0, 1.0),
        2 => -t,
        _ => t * C64::new(0.0, -1.0),
    };
    if t.im.abs() > 1e-12 {
        return Err(Error::Numerical(format!(
            "imaginary residue {:.3e} in Pauli trace of {p}",
            t.im
        )));
    }
    Ok(t.re / (d as f64).sqrt())
}

/// All 4^n characteristic values of a Hermitian operator (dense enumeration,
/// n ≤ 8).
pub fn char_vector(a: &CMatrix) -> Result<CharacteristicVector> {
    let d = a.dim();
    let n = d.trailing_zeros() as usize;
    if d != 1 << n || n == 0 || n > MAX_DENSE_QUBITS {
        return Err(Error::QubitCount {
            n,
            min: 1,
            max: MAX_DENSE_QUBITS,
        });
    }
    let mut entries = Vec::with_capacity(1 << (2 * n));
    for idx in 0..(1u64 << (2 * n)) {
        let p = PauliString::from_index(n, idx);
        entries.push(char_value(a, &p)?);
    }
    Ok(CharacteristicVector { n, entries })
}

/// Position-wise commutation: equal letters or identity at every qubit.
pub fn qubitwise_commutes(p: &PauliString, q: &PauliString) -> Result<bool> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    for i in 0..p.len() {
        let (a, b) = (p.letter(i), q.letter(i));
        if a != b && a != Letter::I && b != Letter::I {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Bit mask of positions where p carries the given non-identity letter.
pub fn support_mask(p: &PauliString, letter: Letter) -> BitString {
    assert_ne!(letter, Letter::I, "support mask is defined for X, Y, Z");
    BitString::new(p.len(), p.letter_mask(letter))
}

/// Single-shot eigenvalue of a string diagonal in the measured basis:
/// (-1)^(b · supp(p)).
pub fn eigen_sign(p: &PauliString, b: &BitString) -> i32 {
    debug_assert_eq!(p.len(), b.len());
    if (p.support() & b.bits()).count_ones() % 2 == 0 {
        1
    } else {
        -1
    }
}
