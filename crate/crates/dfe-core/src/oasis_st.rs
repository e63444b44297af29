//! Closed-form grouped estimators for GHZ and W targets.
//!
//! Both estimators sample one of three branches per round: the identity
//! (deterministic value 1, zero shots), the Z-diagonal group, or an
//! off-diagonal pivot family whose pivots are drawn on the fly in O(n) —
//! no group catalog is ever materialized during estimation. The catalogs
//! exist as explicit constructors for diffing against sorted insertion and
//! for the group-count reports.
//!
//! Branch layout (GHZ, d = 2^n ≥ 4):
//! - identity with probability 1/d;
//! - pivot Z..Z covering the even-weight {I,Z}^n strings, probability
//!   (d-2)/(2d), shot value 1 when the outcome is all-zeros/all-ones and
//!   -2/(d-2) otherwise;
//! - the 2^(n-1) strings in {X,Y}^n with an even Y-count, probability 1/d
//!   each, shot value (-1)^(|Y|/2 + |b|).
//!
//! Branch layout (W):
//! - identity 1/d;
//! - pivot Z..Z covering {I,Z}^n, probability (d-n)/(nd), shot value 1 when
//!   the outcome has Hamming weight one and -n/(d-n) otherwise;
//! - for every qubit pair (i, j) and letter A in {X, Y}, the pivot with A at
//!   i, j and Z elsewhere, probability 1/n^2, shot value
//!   (n/2)(-1)^(b_i+b_j) when all other bits are zero and 0 otherwise.

use crate::grouping::{EstimateReport, GroupingResult, PauliGroup};
use crate::measurement::{
    outcome_distribution, sample_outcome, MeasurementSetting, OutcomeDistribution, RngStream,
};
use crate::pauli::{char_value, Letter, PauliString};
use crate::state::{make_ghz, make_w, DensityMatrix};
use crate::{Error, Result};
use std::collections::HashMap;

pub const MAX_MOMENT_QUBITS: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TargetKind {
    Ghz,
    W,
}

/// A structured target family member.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StructuredTarget {
    pub kind: TargetKind,
    pub n: usize,
}

impl StructuredTarget {
    pub fn new(kind: TargetKind, n: usize) -> Result<StructuredTarget> {
        if n < 2 || n > crate::pauli::MAX_DENSE_QUBITS {
            return Err(Error::QubitCount {
                n,
                min: 2,
                max: crate::pauli::MAX_DENSE_QUBITS,
            });
        }
        Ok(StructuredTarget { kind, n })
    }

    pub fn density_matrix(&self) -> Result<DensityMatrix> {
        match self.kind {
            TargetKind::Ghz => make_ghz(self.n),
            TargetKind::W => make_w(self.n),
        }
    }
}

/// One estimator round: which branch ran, how many measurements it consumed,
/// and the round value it contributed.
#[derive(Clone, Copy, Debug)]
pub struct RoundOutcome {
    pub branch: u8,
    pub shots: u64,
    pub round_value: f64,
}

// ---------------------------------------------------------------------------
// budgets
// ---------------------------------------------------------------------------

fn check_eps_delta(epsilon: f64, delta: f64) -> Result<()> {
    if epsilon <= 0.0 || delta <= 0.0 || delta >= 1.0 {
        return Err(Error::InvalidArgument(format!(
            "invalid accuracy parameters eps={epsilon} delta={delta}"
        )));
    }
    Ok(())
}

/// Rounds and per-round shots for the GHZ estimator:
/// l = ceil(1/(eps^2 delta)), m = ceil(2 ln(2/delta) / (l eps^2)).
pub fn ghz_budget(epsilon: f64, delta: f64) -> Result<(u64, u64)> {
    check_eps_delta(epsilon, delta)?;
    let l = (1.0 / (epsilon * epsilon * delta)).ceil() as u64;
    let m = (2.0 * (2.0 / delta).ln() / (l as f64 * epsilon * epsilon)).ceil() as u64;
    Ok((l, m.max(1)))
}

/// ln C(n, k) with a log-gamma fallback so large n cannot overflow.
fn ln_binomial(n: u64, k: u64) -> f64 {
    if n <= 30 {
        let mut v = 1.0f64;
        for i in 0..k {
            v = v * (n - i) as f64 / (i + 1) as f64;
        }
        v.ln()
    } else {
        ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
    }
}

fn ln_factorial(n: u64) -> f64 {
    (1..=n).map(|i| (i as f64).ln()).sum()
}

/// Rounds and per-branch shots for the W estimator.
pub fn w_budget(n: usize, epsilon: f64, delta: f64) -> Result<(u64, u64, u64)> {
    check_eps_delta(epsilon, delta)?;
    if n < 2 {
        return Err(Error::QubitCount {
            n,
            min: 2,
            max: usize::MAX,
        });
    }
    let l = (1.0 / (epsilon * epsilon * delta)).ceil() as u64;
    let d = 2f64.powi(n as i32);
    let nn = n as f64;
    let binom = ln_binomial(n as u64 - 1, (n / 2) as u64).exp();
    let ratio = (2.0 * binom - 1.0) / (d - nn);
    let k = (2.0 / delta).ln() / (l as f64 * epsilon * epsilon);
    let m1 = (2.0 * nn * nn * ratio * ratio * k).ceil() as u64;
    let m2 = (nn * nn * k / 2.0).ceil() as u64;
    Ok((l, m1.max(1), m2.max(1)))
}

// ---------------------------------------------------------------------------
// analytic group catalogs
// ---------------------------------------------------------------------------

fn letters_from_masks(n: usize, y_mask: u64, base: Letter, on: Letter) -> Vec<Letter> {
    (0..n)
        .map(|i| {
            if (y_mask >> (n - 1 - i)) & 1 == 1 {
                on
            } else {
                base
            }
        })
        .collect()
}

/// The GHZ grouping, built analytically: one Z group plus 2^(n-1) singleton
/// pivots in {X,Y}^n with an even Y count.
pub fn ghz_group_catalog(n: usize) -> Result<GroupingResult> {
    if n < 2 || n > crate::pauli::MAX_DENSE_QUBITS {
        return Err(Error::QubitCount {
            n,
            min: 2,
            max: crate::pauli::MAX_DENSE_QUBITS,
        });
    }
    let d = 1u64 << n;
    let chi = 1.0 / (d as f64).sqrt();
    let mut groups = Vec::new();
    let mut z_members = Vec::new();
    for mask in 1..d {
        if mask.count_ones() % 2 == 0 {
            let letters = letters_from_masks(n, mask, Letter::I, Letter::Z);
            z_members.push((PauliString::from_letters(&letters), chi));
        }
    }
    groups.push(PauliGroup {
        pivot: MeasurementSetting::from_letters(&vec![Letter::Z; n])?,
        members: z_members,
    });
    for word in 0..(1u64 << (n - 1)) {
        let parity = (word.count_ones() % 2) as u64;
        let y_mask = (word << 1) | parity;
        let ny = y_mask.count_ones();
        let sign = if (ny / 2) % 2 == 0 { 1.0 } else { -1.0 };
        let letters = letters_from_masks(n, y_mask, Letter::X, Letter::Y);
        let p = PauliString::from_letters(&letters);
        groups.push(PauliGroup {
            pivot: MeasurementSetting::new(p)?,
            members: vec![(p, sign * chi)],
        });
    }
    Ok(GroupingResult::new(n, groups))
}

/// The W grouping, built analytically: one Z group plus an (X/Y, i, j) pivot
/// family of n(n-1) groups with d/4 members each.
pub fn w_group_catalog(n: usize) -> Result<GroupingResult> {
    if n < 2 || n > crate::pauli::MAX_DENSE_QUBITS {
        return Err(Error::QubitCount {
            n,
            min: 2,
            max: crate::pauli::MAX_DENSE_QUBITS,
        });
    }
    let d = 1u64 << n;
    let sqrt_d = (d as f64).sqrt();
    let nn = n as f64;
    let mut groups = Vec::new();
    let mut z_members = Vec::new();
    for mask in 1..d {
        let k = mask.count_ones() as f64;
        let chi = (nn - 2.0 * k) / (nn * sqrt_d);
        if chi.abs() > 1e-15 {
            let letters = letters_from_masks(n, mask, Letter::I, Letter::Z);
            z_members.push((PauliString::from_letters(&letters), chi));
        }
    }
    groups.push(PauliGroup {
        pivot: MeasurementSetting::from_letters(&vec![Letter::Z; n])?,
        members: z_members,
    });
    let pair_chi = 2.0 / (nn * sqrt_d);
    for i in 0..n {
        for j in (i + 1)..n {
            for on in [Letter::X, Letter::Y] {
                let pivot_letters: Vec<Letter> = (0..n)
                    .map(|q| if q == i || q == j { on } else { Letter::Z })
                    .collect();
                let mut members = Vec::new();
                let rest: Vec<usize> = (0..n).filter(|&q| q != i && q != j).collect();
                for tails in 0..(1u64 << rest.len()) {
                    let mut letters = vec![Letter::I; n];
                    letters[i] = on;
                    letters[j] = on;
                    for (t, &q) in rest.iter().enumerate() {
                        if (tails >> t) & 1 == 1 {
                            letters[q] = Letter::Z;
                        }
                    }
                    members.push((PauliString::from_letters(&letters), pair_chi));
                }
                members.sort_by_key(|(p, _)| *p);
                groups.push(PauliGroup {
                    pivot: MeasurementSetting::from_letters(&pivot_letters)?,
                    members,
                });
            }
        }
    }
    Ok(GroupingResult::new(n, groups))
}

// ---------------------------------------------------------------------------
// shot values
// ---------------------------------------------------------------------------

fn ghz_branch1_value(d: u64, outcome: u64) -> f64 {
    if outcome == 0 || outcome == d - 1 {
        1.0
    } else {
        -2.0 / (d as f64 - 2.0)
    }
}

fn ghz_branch2_value(y_mask: u64, outcome: u64) -> f64 {
    let exponent = y_mask.count_ones() / 2 + outcome.count_ones();
    if exponent % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn w_branch1_value(n: usize, d: u64, outcome: u64) -> f64 {
    if outcome.count_ones() == 1 {
        1.0
    } else {
        -(n as f64) / (d as f64 - n as f64)
    }
}

fn w_branch2_value(n: usize, i: usize, j: usize, outcome: u64) -> f64 {
    let bi = (outcome >> (n - 1 - i)) & 1;
    let bj = (outcome >> (n - 1 - j)) & 1;
    let rest = outcome & !((1 << (n - 1 - i)) | (1 << (n - 1 - j)));
    if rest != 0 {
        0.0
    } else if (bi + bj) % 2 == 0 {
        n as f64 / 2.0
    } else {
        -(n as f64) / 2.0
    }
}

// ---------------------------------------------------------------------------
// estimators
// ---------------------------------------------------------------------------

struct PivotCache<'a> {
    rho: &'a DensityMatrix,
    dists: HashMap<u64, OutcomeDistribution>,
}

impl<'a> PivotCache<'a> {
    fn new(rho: &'a DensityMatrix) -> PivotCache<'a> {
        PivotCache {
            rho,
            dists: HashMap::new(),
        }
    }

    fn get(&mut self, key: u64, setting: &MeasurementSetting) -> Result<&OutcomeDistribution> {
        if !self.dists.contains_key(&key) {
            let dist = outcome_distribution(self.rho, setting)?;
            self.dists.insert(key, dist);
        }
        Ok(self.dists.get(&key).unwrap())
    }
}

fn check_structured(rho: &DensityMatrix, n: usize) -> Result<()> {
    if n < 2 || n > crate::pauli::MAX_DENSE_QUBITS {
        return Err(Error::QubitCount {
            n,
            min: 2,
            max: crate::pauli::MAX_DENSE_QUBITS,
        });
    }
    if rho.qubits() != n {
        return Err(Error::DimensionMismatch {
            left: rho.qubits(),
            right: n,
        });
    }
    Ok(())
}

/// GHZ fidelity estimate with an explicit (l, m) budget.
pub fn ghz_estimate_with_budget(
    rho: &DensityMatrix,
    n: usize,
    l: u64,
    m: u64,
    rng: &mut RngStream,
) -> Result<EstimateReport> {
    check_structured(rho, n)?;
    if l == 0 || m == 0 {
        return Err(Error::InvalidArgument("l and m must be at least 1".into()));
    }
    let d = 1u64 << n;
    let z_setting = MeasurementSetting::from_letters(&vec![Letter::Z; n])?;
    let mut cache = PivotCache::new(rho);
    let mut sum = 0.0;
    let mut shots_used = 0u64;
    let mut branch_rounds = [0u64; 3];
    for _ in 0..l {
        let out = ghz_round(n, d, l, m, &z_setting, &mut cache, rng)?;
        branch_rounds[out.branch as usize] += 1;
        shots_used += out.shots;
        sum += out.round_value;
    }
    Ok(EstimateReport {
        estimate: sum / l as f64,
        shots_used,
        rounds: l,
        branch_rounds,
    })
}

fn ghz_round(
    n: usize,
    d: u64,
    _l: u64,
    m: u64,
    z_setting: &MeasurementSetting,
    cache: &mut PivotCache<'_>,
    rng: &mut RngStream,
) -> Result<RoundOutcome> {
    if rng.coin() {
        let k = 1 + rng.below(d);
        if k <= 2 {
            // identity branch: m constant shots average to 1, no measurements
            return Ok(RoundOutcome {
                branch: 0,
                shots: 0,
                round_value: 1.0,
            });
        }
        let dist = cache.get(u64::MAX, z_setting)?;
        let mut acc = 0.0;
        for _ in 0..m {
            let b = sample_outcome(dist, rng);
            acc += ghz_branch1_value(d, b.bits());
        }
        Ok(RoundOutcome {
            branch: 1,
            shots: m,
            round_value: acc / m as f64,
        })
    } else {
        let mut acc = 0.0;
        for _ in 0..m {
            // even-|Y| word: n-1 free bits, last bit fixes the parity
            let word = rng.below(1 << (n - 1));
            let parity = (word.count_ones() % 2) as u64;
            let y_mask = (word << 1) | parity;
            let letters = letters_from_masks(n, y_mask, Letter::X, Letter::Y);
            let setting = MeasurementSetting::from_letters(&letters)?;
            let dist = cache.get(y_mask, &setting)?;
            let b = sample_outcome(dist, rng);
            acc += ghz_branch2_value(y_mask, b.bits());
        }
        Ok(RoundOutcome {
            branch: 2,
            shots: m,
            round_value: acc / m as f64,
        })
    }
}

/// GHZ fidelity estimate from accuracy parameters (eps, delta).
pub fn ghz_estimate(
    rho: &DensityMatrix,
    n: usize,
    epsilon: f64,
    delta: f64,
    rng: &mut RngStream,
) -> Result<EstimateReport> {
    let (l, m) = ghz_budget(epsilon, delta)?;
    ghz_estimate_with_budget(rho, n, l, m, rng)
}

/// W fidelity estimate with an explicit (l, m1, m2) budget.
pub fn w_estimate_with_budget(
    rho: &DensityMatrix,
    n: usize,
    l: u64,
    m1: u64,
    m2: u64,
    rng: &mut RngStream,
) -> Result<EstimateReport> {
    check_structured(rho, n)?;
    if l == 0 || m1 == 0 || m2 == 0 {
        return Err(Error::InvalidArgument(
            "l, m1, m2 must be at least 1".into(),
        ));
    }
    let d = 1u64 << n;
    let z_setting = MeasurementSetting::from_letters(&vec![Letter::Z; n])?;
    let mut cache = PivotCache::new(rho);
    let mut sum = 0.0;
    let mut shots_used = 0u64;
    let mut branch_rounds = [0u64; 3];
    for _ in 0..l {
        let k = 1 + rng.below(n as u64);
        let out = if k == 1 {
            let k2 = 1 + rng.below(d);
            if k2 <= n as u64 {
                RoundOutcome {
                    branch: 0,
                    shots: 0,
                    round_value: 1.0,
                }
            } else {
                let dist = cache.get(u64::MAX, &z_setting)?;
                let mut acc = 0.0;
                for _ in 0..m1 {
                    let b = sample_outcome(dist, rng);
                    acc += w_branch1_value(n, d, b.bits());
                }
                RoundOutcome {
                    branch: 1,
                    shots: m1,
                    round_value: acc / m1 as f64,
                }
            }
        } else {
            let mut acc = 0.0;
            for _ in 0..m2 {
                let letter = if rng.below(2) == 0 {
                    Letter::X
                } else {
                    Letter::Y
                };
                let a = rng.below(n as u64) as usize;
                let b_raw = rng.below(n as u64 - 1) as usize;
                let other = if b_raw >= a { b_raw + 1 } else { b_raw };
                let (i, j) = (a.min(other), a.max(other));
                let letters: Vec<Letter> = (0..n)
                    .map(|q| if q == i || q == j { letter } else { Letter::Z })
                    .collect();
                let setting = MeasurementSetting::from_letters(&letters)?;
                let key = ((letter as u64) << 32) | ((i as u64) << 16) | j as u64;
                let dist = cache.get(key, &setting)?;
                let b = sample_outcome(dist, rng);
                acc += w_branch2_value(n, i, j, b.bits());
            }
            RoundOutcome {
                branch: 2,
                shots: m2,
                round_value: acc / m2 as f64,
            }
        };
        branch_rounds[out.branch as usize] += 1;
        shots_used += out.shots;
        sum += out.round_value;
    }
    Ok(EstimateReport {
        estimate: sum / l as f64,
        shots_used,
        rounds: l,
        branch_rounds,
    })
}

/// W fidelity estimate from accuracy parameters (eps, delta).
pub fn w_estimate(
    rho: &DensityMatrix,
    n: usize,
    epsilon: f64,
    delta: f64,
    rng: &mut RngStream,
) -> Result<EstimateReport> {
    let (l, m1, m2) = w_budget(n, epsilon, delta)?;
    w_estimate_with_budget(rho, n, l, m1, m2, rng)
}

/// Single-shot variance bound of the GHZ estimator in terms of the true
/// fidelity: 1 - f^2, tight as f -> 1.
pub fn ghz_variance_bound(f: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&f) {
        return Err(Error::InvalidArgument(format!(
            "fidelity {f} outside [0, 1]"
        )));
    }
    Ok(1.0 - f * f)
}

/// Exact estimator moments: mean, variance of the final estimate, and the
/// expected number of measurement shots.
#[derive(Clone, Copy, Debug)]
pub struct StMoments {
    pub mean: f64,
    pub variance: f64,
    pub expected_shots: f64,
}

/// Exact moments of the structured estimators by enumerating branch
/// probabilities and per-branch outcome statistics, combined with the law of
/// total variance. `m1` is the Z-branch shot count; `m2` the off-diagonal
/// one (the GHZ algorithm uses m1 = m2 = m).
pub fn exact_moments_st(
    target: &StructuredTarget,
    rho: &DensityMatrix,
    l: u64,
    m1: u64,
    m2: u64,
) -> Result<StMoments> {
    let n = target.n;
    if n > MAX_MOMENT_QUBITS {
        return Err(Error::QubitCount {
            n,
            min: 2,
            max: MAX_MOMENT_QUBITS,
        });
    }
    check_structured(rho, n)?;
    if l == 0 || m1 == 0 || m2 == 0 {
        return Err(Error::InvalidArgument(
            "l, m1, m2 must be at least 1".into(),
        ));
    }
    let d = 1u64 << n;
    let z_setting = MeasurementSetting::from_letters(&vec![Letter::Z; n])?;
    let z_dist = outcome_distribution(rho, &z_setting)?;
    match target.kind {
        TargetKind::Ghz => {
            let p_acc = z_dist.probs()[0] + z_dist.probs()[d as usize - 1];
            let e1 = {
                let neg = -2.0 / (d as f64 - 2.0);
                p_acc + (1.0 - p_acc) * neg
            };
            let e1_sq = p_acc + (1.0 - p_acc) * (2.0 / (d as f64 - 2.0)).powi(2);
            let v1 = e1_sq - e1 * e1;
            // branch 2: per-pivot means via the Pauli expectation of the
            // pivot string itself; the square is identically 1
            let mut e2_sum = 0.0;
            for word in 0..(1u64 << (n - 1)) {
                let parity = (word.count_ones() % 2) as u64;
                let y_mask = (word << 1) | parity;
                let letters = letters_from_masks(n, y_mask, Letter::X, Letter::Y);
                let p = PauliString::from_letters(&letters);
                let sign = if (y_mask.count_ones() / 2) % 2 == 0 {
                    1.0
                } else {
                    -1.0
                };
                let expectation = (d as f64).sqrt() * char_value(rho.matrix(), &p)?;
                e2_sum += sign * expectation;
            }
            let e2 = e2_sum / (1u64 << (n - 1)) as f64;
            let v2 = 1.0 - e2 * e2;
            let p0 = 1.0 / d as f64;
            let p1 = (d as f64 - 2.0) / (2.0 * d as f64);
            let p2 = 0.5;
            let mean = p0 + p1 * e1 + p2 * e2;
            let var_round = p0 * (1.0 - mean).powi(2)
                + p1 * ((e1 - mean).powi(2) + v1 / m1 as f64)
                + p2 * ((e2 - mean).powi(2) + v2 / m2 as f64);
            Ok(StMoments {
                mean,
                variance: var_round / l as f64,
                expected_shots: l as f64 * (p1 * m1 as f64 + p2 * m2 as f64),
            })
        }
        TargetKind::W => {
            let w1: f64 = (0..d)
                .filter(|b| b.count_ones() == 1)
                .map(|b| z_dist.probs()[b as usize])
                .sum();
            let neg = -(n as f64) / (d as f64 - n as f64);
            let e1 = w1 + (1.0 - w1) * neg;
            let e1_sq = w1 + (1.0 - w1) * neg * neg;
            let v1 = e1_sq - e1 * e1;
            // branch 2: full per-pivot outcome statistics
            let mut e2_sum = 0.0;
            let mut e2_sq_sum = 0.0;
            let mut pivots = 0usize;
            for i in 0..n {
                for j in (i + 1)..n {
                    for on in [Letter::X, Letter::Y] {
                        let letters: Vec<Letter> = (0..n)
                            .map(|q| if q == i || q == j { on } else { Letter::Z })
                            .collect();
                        let setting = MeasurementSetting::from_letters(&letters)?;
                        let dist = outcome_distribution(rho, &setting)?;
                        let mut e = 0.0;
                        let mut esq = 0.0;
                        for b in 0..d {
                            let pb = dist.probs()[b as usize];
                            if pb == 0.0 {
                                continue;
                            }
                            let s = w_branch2_value(n, i, j, b);
                            e += pb * s;
                            esq += pb * s * s;
                        }
                        e2_sum += e;
                        e2_sq_sum += esq;
                        pivots += 1;
                    }
                }
            }
            let e2 = e2_sum / pivots as f64;
            let e2_sq = e2_sq_sum / pivots as f64;
            let v2 = e2_sq - e2 * e2;
            let p0 = 1.0 / d as f64;
            let p1 = (d as f64 - n as f64) / (n as f64 * d as f64);
            let p2 = (n as f64 - 1.0) / n as f64;
            let mean = p0 + p1 * e1 + p2 * e2;
            let var_round = p0 * (1.0 - mean).powi(2)
                + p1 * ((e1 - mean).powi(2) + v1 / m1 as f64)
                + p2 * ((e2 - mean).powi(2) + v2 / m2 as f64);
            Ok(StMoments {
                mean,
                variance: var_round / l as f64,
                expected_shots: l as f64 * (p1 * m1 as f64 + p2 * m2 as f64),
            })
        }
    }
}
