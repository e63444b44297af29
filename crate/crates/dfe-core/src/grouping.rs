//! Qubit-wise-commuting grouping of Pauli strings and the grouped baseline
//! estimator built on it.
//!
//! Sorted insertion visits strings in decreasing |chi| (ties broken by the
//! frozen lexicographic order, I<X<Y<Z with qubit 0 most significant) and
//! inserts each into the first group whose merged letter pattern it commutes
//! with. Group pivots are the merged patterns completed with Z on untouched
//! qubits. The identity string is handled outside the grouping as a
//! deterministic zero-shot branch.

use crate::measurement::{
    outcome_distribution, sample_outcome, MeasurementSetting, OutcomeDistribution, RngStream,
};
use crate::pauli::{qubitwise_commutes, BitString, Letter, PauliString};
use crate::state::DensityMatrix;
use crate::{Error, Result};
use std::io::Write;

/// One measurement setting and the strings estimated from it.
#[derive(Clone, Debug)]
pub struct PauliGroup {
    pub pivot: MeasurementSetting,
    pub members: Vec<(PauliString, f64)>,
}

impl PauliGroup {
    pub fn probability(&self) -> f64 {
        group_probability(self)
    }
}

/// Sum of squared member coefficients: the sampling weight of the group.
pub fn group_probability(group: &PauliGroup) -> f64 {
    group.members.iter().map(|(_, c)| c * c).sum()
}

/// Single-shot estimator value of a group given outcome `b` in the pivot
/// basis: (1 / (sqrt(d) * prob)) * sum_members chi * (-1)^(b · supp).
pub fn group_shot_value(group: &PauliGroup, b: &BitString) -> f64 {
    let d = (1u64 << group.pivot.qubits()) as f64;
    let prob = group_probability(group);
    let mut acc = 0.0;
    for (p, chi) in &group.members {
        acc += chi * crate::pauli::eigen_sign(p, b) as f64;
    }
    acc / (d.sqrt() * prob)
}

/// A complete partition of a target's nonzero non-identity strings.
#[derive(Clone, Debug)]
pub struct GroupingResult {
    n: usize,
    pub groups: Vec<PauliGroup>,
    pub identity_weight: f64,
    pub group_probs: Vec<f64>,
}

impl GroupingResult {
    pub fn new(n: usize, groups: Vec<PauliGroup>) -> GroupingResult {
        let group_probs = groups.iter().map(group_probability).collect();
        GroupingResult {
            n,
            groups,
            identity_weight: 1.0 / (1u64 << n) as f64,
            group_probs,
        }
    }

    pub fn qubits(&self) -> usize {
        self.n
    }

    /// Total groups including the identity singleton.
    pub fn total_groups(&self) -> usize {
        self.groups.len() + 1
    }

    /// identity weight + group probabilities; 1 for a pure target.
    pub fn probability_sum(&self) -> f64 {
        self.identity_weight + self.group_probs.iter().sum::<f64>()
    }

    /// Partition as sorted member sets, for structural comparison.
    pub fn partition_sets(&self) -> Vec<Vec<PauliString>> {
        let mut sets: Vec<Vec<PauliString>> = self
            .groups
            .iter()
            .map(|g| {
                let mut v: Vec<PauliString> = g.members.iter().map(|(p, _)| *p).collect();
                v.sort();
                v
            })
            .collect();
        sets.sort();
        sets
    }

    /// One line per measured group: pivot, then `member:chi` pairs.
    pub fn write_text<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(
            w,
            "# groups={} (including identity singleton) n={}",
            self.total_groups(),
            self.n
        )?;
        writeln!(w, "identity weight={:.17e}", self.identity_weight)?;
        for g in &self.groups {
            write!(w, "{}", g.pivot)?;
            for (p, chi) in &g.members {
                write!(w, " {p}:{chi:.17e}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Greedy first-fit grouping in decreasing |chi| with the frozen tie-break.
///
/// The caller supplies the nonzero support with the identity string removed.
pub fn sorted_insertion(strings: &[PauliString], chis: &[f64]) -> Result<GroupingResult> {
    if strings.is_empty() {
        return Err(Error::MisalignedInput("empty support".into()));
    }
    if strings.len() != chis.len() {
        return Err(Error::LengthMismatch {
            left: strings.len(),
            right: chis.len(),
        });
    }
    let n = strings[0].len();
    for p in strings {
        if p.len() != n {
            return Err(Error::LengthMismatch {
                left: p.len(),
                right: n,
            });
        }
        if p.is_identity() {
            return Err(Error::MisalignedInput(
                "identity string must be excluded by the caller".into(),
            ));
        }
    }
    let mut order: Vec<usize> = (0..strings.len()).collect();
    order.sort_by(|&a, &b| {
        chis[b]
            .abs()
            .partial_cmp(&chis[a].abs())
            .unwrap()
            .then(strings[a].cmp(&strings[b]))
    });
    // each group tracked by its merged non-identity letter pattern
    let mut patterns: Vec<PauliString> = Vec::new();
    let mut members: Vec<Vec<(PauliString, f64)>> = Vec::new();
    for idx in order {
        let s = strings[idx];
        let mut placed = false;
        for (pat, mem) in patterns.iter_mut().zip(members.iter_mut()) {
            if qubitwise_commutes(&s, pat)? {
                let merged: Vec<Letter> = (0..n)
                    .map(|i| {
                        if s.letter(i) != Letter::I {
                            s.letter(i)
                        } else {
                            pat.letter(i)
                        }
                    })
                    .collect();
                *pat = PauliString::from_letters(&merged);
                mem.push((s, chis[idx]));
                placed = true;
                break;
            }
        }
        if !placed {
            patterns.push(s);
            members.push(vec![(s, chis[idx])]);
        }
    }
    let groups = patterns
        .into_iter()
        .zip(members)
        .map(|(pat, mem)| {
            let completed: Vec<Letter> = pat
                .letters()
                .map(|l| if l == Letter::I { Letter::Z } else { l })
                .collect();
            PauliGroup {
                pivot: MeasurementSetting::from_letters(&completed).expect("full support"),
                members: mem,
            }
        })
        .collect();
    Ok(GroupingResult::new(n, groups))
}

/// Shot count for one group: ceil(2 |chi|_1^2 / (|chi|^4 d l eps^2) ln(2/delta)).
pub fn shots_for_group(group: &PauliGroup, l: u64, epsilon: f64, delta: f64) -> u64 {
    let d = (1u64 << group.pivot.qubits()) as f64;
    let l1: f64 = group.members.iter().map(|(_, c)| c.abs()).sum();
    let p = group_probability(group);
    let raw = 2.0 * l1 * l1 / (p * p * d * l as f64 * epsilon * epsilon) * (2.0 / delta).ln();
    (raw.ceil() as u64).max(1)
}

/// Round and shot budget for the grouped estimator.
#[derive(Clone, Debug)]
pub struct EstimationBudget {
    pub epsilon: Option<f64>,
    pub delta: Option<f64>,
    pub l: u64,
    pub shots_per_group: Vec<u64>,
}

impl EstimationBudget {
    /// l = ceil(1/(eps^2 delta)) rounds with the per-group shot formula.
    pub fn from_eps_delta(
        epsilon: f64,
        delta: f64,
        grouping: &GroupingResult,
    ) -> Result<EstimationBudget> {
        if epsilon <= 0.0 || !(0.0..1.0).contains(&delta) || delta == 0.0 {
            return Err(Error::InvalidArgument(format!(
                "invalid accuracy parameters eps={epsilon} delta={delta}"
            )));
        }
        let l = (1.0 / (epsilon * epsilon * delta)).ceil() as u64;
        let shots_per_group = grouping
            .groups
            .iter()
            .map(|g| shots_for_group(g, l, epsilon, delta))
            .collect();
        Ok(EstimationBudget {
            epsilon: Some(epsilon),
            delta: Some(delta),
            l,
            shots_per_group,
        })
    }

    /// Fixed l rounds and a uniform per-group shot count.
    pub fn uniform(l: u64, m: u64, grouping: &GroupingResult) -> Result<EstimationBudget> {
        if l == 0 || m == 0 {
            return Err(Error::InvalidArgument("l and m must be at least 1".into()));
        }
        Ok(EstimationBudget {
            epsilon: None,
            delta: None,
            l,
            shots_per_group: vec![m; grouping.groups.len()],
        })
    }
}

/// What an estimator run produced.
#[derive(Clone, Debug)]
pub struct EstimateReport {
    pub estimate: f64,
    pub shots_used: u64,
    pub rounds: u64,
    /// Rounds landing in each branch: identity, Z-type, off-diagonal for the
    /// structured estimators; identity/grouped for the baseline.
    pub branch_rounds: [u64; 3],
}

const PROB_SUM_TOL: f64 = 1e-8;

fn check_grouping(grouping: &GroupingResult) -> Result<()> {
    let sum = grouping.probability_sum();
    if (sum - 1.0).abs() > PROB_SUM_TOL {
        return Err(Error::GroupTargetMismatch { sum });
    }
    Ok(())
}

/// Walker alias table for O(1) categorical draws.
#[derive(Clone, Debug)]
pub(crate) struct AliasTable {
    accept: Vec<f64>,
    alias: Vec<usize>,
}

impl AliasTable {
    pub(crate) fn new(weights: &[f64]) -> AliasTable {
        let k = weights.len();
        let total: f64 = weights.iter().sum();
        let mut accept = vec![0.0f64; k];
        let mut alias = vec![0usize; k];
        let mut scaled: Vec<f64> = weights.iter().map(|w| w * k as f64 / total).collect();
        let mut small: Vec<usize> = Vec::new();
        let mut large: Vec<usize> = Vec::new();
        for (i, &s) in scaled.iter().enumerate() {
            if s < 1.0 {
                small.push(i);
            } else {
                large.push(i);
            }
        }
        while let (Some(&s), Some(&l)) = (small.last(), large.last()) {
            small.pop();
            large.pop();
            accept[s] = scaled[s];
            alias[s] = l;
            scaled[l] = (scaled[l] + scaled[s]) - 1.0;
            if scaled[l] < 1.0 {
                small.push(l);
            } else {
                large.push(l);
            }
        }
        for &i in small.iter().chain(large.iter()) {
            accept[i] = 1.0;
            alias[i] = i;
        }
        AliasTable { accept, alias }
    }

    pub(crate) fn sample(&self, rng: &mut RngStream) -> usize {
        let k = self.accept.len() as u64;
        let slot = rng.below(k) as usize;
        if rng.uniform() < self.accept[slot] {
            slot
        } else {
            self.alias[slot]
        }
    }
}

/// Grouped baseline estimate of tr(rho O) from the target's grouping.
///
/// Each round samples the identity (weight 1/d, value 1, zero shots) or a
/// group; a sampled group's pivot is measured `shots_per_group` times and the
/// round value is the shot average of [`group_shot_value`].
pub fn gdfe_estimate(
    rho: &DensityMatrix,
    grouping: &GroupingResult,
    budget: &EstimationBudget,
    rng: &mut RngStream,
) -> Result<EstimateReport> {
    check_grouping(grouping)?;
    if budget.shots_per_group.len() != grouping.groups.len() {
        return Err(Error::MisalignedInput(
            "budget built for a different grouping".into(),
        ));
    }
    if rho.qubits() != grouping.n {
        return Err(Error::DimensionMismatch {
            left: rho.qubits(),
            right: grouping.n,
        });
    }
    // outcome 0 = identity branch, outcome g+1 = group g
    let mut weights = Vec::with_capacity(grouping.groups.len() + 1);
    weights.push(grouping.identity_weight);
    weights.extend_from_slice(&grouping.group_probs);
    let alias = AliasTable::new(&weights);
    let mut dists: Vec<Option<OutcomeDistribution>> = vec![None; grouping.groups.len()];
    let mut sum = 0.0;
    let mut shots_used = 0u64;
    let mut branch_rounds = [0u64; 3];
    for _ in 0..budget.l {
        let pick = alias.sample(rng);
        if pick == 0 {
            branch_rounds[0] += 1;
            sum += 1.0;
            continue;
        }
        branch_rounds[1] += 1;
        let g = pick - 1;
        let group = &grouping.groups[g];
        if dists[g].is_none() {
            dists[g] = Some(outcome_distribution(rho, &group.pivot)?);
        }
        let dist = dists[g].as_ref().unwrap();
        let m = budget.shots_per_group[g];
        let mut acc = 0.0;
        for _ in 0..m {
            let b = sample_outcome(dist, rng);
            acc += group_shot_value(group, &b);
        }
        shots_used += m;
        sum += acc / m as f64;
    }
    Ok(EstimateReport {
        estimate: sum / budget.l as f64,
        shots_used,
        rounds: budget.l,
        branch_rounds,
    })
}

/// Exact mean, estimate variance, and expected shots of the grouped estimator
/// by enumerating every (group, outcome) pair. Oracle for the sampled path.
pub fn gdfe_exact_moments(
    rho: &DensityMatrix,
    grouping: &GroupingResult,
    budget: &EstimationBudget,
) -> Result<(f64, f64, f64)> {
    check_grouping(grouping)?;
    if rho.qubits() != grouping.n {
        return Err(Error::DimensionMismatch {
            left: rho.qubits(),
            right: grouping.n,
        });
    }
    let d = 1usize << grouping.n;
    let mut mean = grouping.identity_weight;
    let mut rows = Vec::with_capacity(grouping.groups.len());
    let mut expected_shots_per_round = 0.0;
    for (g, group) in grouping.groups.iter().enumerate() {
        let dist = outcome_distribution(rho, &group.pivot)?;
        let mut e = 0.0;
        let mut esq = 0.0;
        for b in 0..d {
            let pb = dist.probs()[b];
            if pb == 0.0 {
                continue;
            }
            let s = group_shot_value(group, &BitString::new(grouping.n, b as u64));
            e += pb * s;
            esq += pb * s * s;
        }
        let prob = grouping.group_probs[g];
        let m = budget.shots_per_group[g];
        rows.push((prob, e, esq - e * e, m));
        mean += prob * e;
        expected_shots_per_round += prob * m as f64;
    }
    let mut var_round = grouping.identity_weight * (1.0 - mean) * (1.0 - mean);
    for (prob, e, v, m) in rows {
        var_round += prob * ((e - mean) * (e - mean) + v / m as f64);
    }
    Ok((
        mean,
        var_round / budget.l as f64,
        budget.l as f64 * expected_shots_per_round,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::char_vector;
    use crate::state;
    use proptest::prelude::*;

    fn support_of(dm: &DensityMatrix) -> (Vec<PauliString>, Vec<f64>) {
        char_vector(dm.matrix()).unwrap().support_without_identity()
    }

    fn si_of(dm: &DensityMatrix) -> GroupingResult {
        let (s, c) = support_of(dm);
        sorted_insertion(&s, &c).unwrap()
    }

    #[test]
    fn ghz3_partition() {
        let g = si_of(&state::make_ghz(3).unwrap());
        assert_eq!(g.total_groups(), 6);
        let z_group = g
            .groups
            .iter()
            .find(|gr| gr.pivot.to_string() == "ZZZ")
            .expect("Z pivot present");
        let mut mem: Vec<String> = z_group.members.iter().map(|(p, _)| p.to_string()).collect();
        mem.sort();
        assert_eq!(mem, ["IZZ", "ZIZ", "ZZI"]);
        assert!((group_probability(z_group) - 0.375).abs() < 1e-12);
        let singles: Vec<&PauliGroup> =
            g.groups.iter().filter(|gr| gr.members.len() == 1).collect();
        assert_eq!(singles.len(), 4);
        for gr in singles {
            assert!((group_probability(gr) - 0.125).abs() < 1e-12);
        }
        assert!((g.probability_sum() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn group_counts_regression() {
        // GHZ matches the analytic 2^(n-1) + 2; the W counts are what the
        // frozen tie-break produces on the fully degenerate |chi| ties.
        let ghz_expect = [6, 10, 18, 34];
        let w_expect = [10, 24, 54, 116];
        for (i, n) in (3..=6).enumerate() {
            let g = si_of(&state::make_ghz(n).unwrap());
            assert_eq!(g.total_groups(), ghz_expect[i], "GHZ n={n}");
            assert_eq!(g.total_groups(), (1 << (n - 1)) + 2, "GHZ analytic n={n}");
            let w = si_of(&state::make_w(n).unwrap());
            assert_eq!(w.total_groups(), w_expect[i], "W n={n}");
        }
    }

    #[test]
    fn w3_z_sector_probability() {
        let g = si_of(&state::make_w(3).unwrap());
        // strings in {I,Z}^3 may split across groups under the frozen
        // tie-break; their total probability is still (d-n)/(nd) = 5/24
        let ztotal: f64 = g
            .groups
            .iter()
            .flat_map(|gr| gr.members.iter())
            .filter(|(p, _)| p.letters().all(|l| l == Letter::I || l == Letter::Z))
            .map(|(_, c)| c * c)
            .sum();
        assert!((ztotal - 5.0 / 24.0).abs() < 1e-12);
        assert!((g.probability_sum() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn singleton_input() {
        let p: PauliString = "XZ".parse().unwrap();
        let g = sorted_insertion(&[p], &[0.5]).unwrap();
        assert_eq!(g.groups.len(), 1);
        assert!((g.group_probs[0] - 0.25).abs() < 1e-15);
        assert_eq!(g.groups[0].pivot.to_string(), "XZ");
    }

    #[test]
    fn rejects_identity_and_misaligned() {
        let id = PauliString::identity(3);
        assert!(sorted_insertion(&[id], &[1.0]).is_err());
        let p: PauliString = "XZ".parse().unwrap();
        assert!(sorted_insertion(&[p], &[0.5, 0.2]).is_err());
    }

    #[test]
    fn shot_formula_ghz_and_w() {
        // (eps, delta) = (0.1, 0.1): l = 1000, K = ln(20)/10
        let (eps, delta) = (0.1, 0.1);
        let ghz = si_of(&state::make_ghz(4).unwrap());
        for group in &ghz.groups {
            assert_eq!(shots_for_group(group, 1000, eps, delta), 1);
        }
        let w = si_of(&state::make_w(3).unwrap());
        for group in &w.groups {
            let pure_z = group
                .members
                .iter()
                .all(|(p, _)| p.letters().all(|l| l == Letter::I || l == Letter::Z));
            if pure_z && group.members.len() > 1 {
                // branch-1 closed form at n=3 gives 2 at this budget
                assert_eq!(shots_for_group(group, 1000, eps, delta), 2);
            }
        }
    }

    #[test]
    fn shot_values_ghz_z_group() {
        let g = si_of(&state::make_ghz(3).unwrap());
        let z = g
            .groups
            .iter()
            .find(|gr| gr.pivot.to_string() == "ZZZ")
            .unwrap();
        let v000 = group_shot_value(z, &"000".parse().unwrap());
        let v010 = group_shot_value(z, &"010".parse().unwrap());
        assert!((v000 - 1.0).abs() < 1e-12);
        assert!((v010 + 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn perfect_state_gives_exact_unit_estimate() {
        let o = state::make_ghz(3).unwrap();
        let g = si_of(&o);
        let budget = EstimationBudget::uniform(200, 1, &g).unwrap();
        let mut rng = RngStream::new(11, 0);
        let rep = gdfe_estimate(&o, &g, &budget, &mut rng).unwrap();
        assert!((rep.estimate - 1.0).abs() < 1e-12);
        assert_eq!(rep.rounds, 200);
        assert_eq!(rep.branch_rounds[0] + rep.branch_rounds[1], 200);
        assert!(rep.shots_used <= 200);
    }

    #[test]
    fn exact_expectation_depolarized_ghz() {
        let o = state::make_ghz(3).unwrap();
        let rho = state::depolarize(&o, 0.1).unwrap();
        let g = si_of(&o);
        let budget = EstimationBudget::uniform(1000, 1, &g).unwrap();
        let (mean, var, shots) = gdfe_exact_moments(&rho, &g, &budget).unwrap();
        assert!((mean - 0.9125).abs() < 1e-12);
        // identical grouping to the structured GHZ estimator
        assert!((var - 1.423_437_5e-4).abs() < 1e-9, "var={var:.6e}");
        assert!((shots - 875.0).abs() < 1e-9);
    }

    #[test]
    fn unbiased_by_enumeration_random_states() {
        let mut rng = RngStream::new(404, 0);
        for target in [state::make_ghz(3).unwrap(), state::make_w(3).unwrap()] {
            let g = si_of(&target);
            let budget = EstimationBudget::uniform(1, 1, &g).unwrap();
            for _ in 0..10 {
                let rho = state::make_random_mixed(3, &mut rng).unwrap();
                let (mean, _, _) = gdfe_exact_moments(&rho, &g, &budget).unwrap();
                let f = state::exact_fidelity(&rho, &target).unwrap();
                assert!((mean - f).abs() < 1e-10, "mean {mean} vs {f}");
            }
        }
        // a Haar target exercises non-degenerate |chi| ordering
        let target = state::make_haar(3, &mut rng).unwrap();
        let g = si_of(&target);
        let budget = EstimationBudget::uniform(1, 1, &g).unwrap();
        for _ in 0..10 {
            let rho = state::make_random_mixed(3, &mut rng).unwrap();
            let (mean, _, _) = gdfe_exact_moments(&rho, &g, &budget).unwrap();
            let f = state::exact_fidelity(&rho, &target).unwrap();
            assert!((mean - f).abs() < 1e-10);
        }
    }

    #[test]
    fn partition_covers_support_once() {
        let mut rng = RngStream::new(8, 0);
        for dm in [
            state::make_ghz(4).unwrap(),
            state::make_w(4).unwrap(),
            state::make_haar(3, &mut rng).unwrap(),
        ] {
            let (strings, _) = support_of(&dm);
            let g = si_of(&dm);
            let mut seen = std::collections::HashSet::new();
            for gr in &g.groups {
                for (p, _) in &gr.members {
                    assert!(seen.insert(*p), "{p} appears twice");
                }
            }
            assert_eq!(seen.len(), strings.len());
            assert!((g.probability_sum() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn mismatched_grouping_detected() {
        let o = state::make_ghz(3).unwrap();
        let (strings, chis) = support_of(&o);
        // drop one string: probabilities no longer sum to 1 - 1/d
        let g = sorted_insertion(&strings[1..], &chis[1..]).unwrap();
        let budget = EstimationBudget::uniform(10, 1, &g).unwrap();
        let mut rng = RngStream::new(0, 0);
        assert!(matches!(
            gdfe_estimate(&o, &g, &budget, &mut rng),
            Err(Error::GroupTargetMismatch { .. })
        ));
    }

    #[test]
    fn monte_carlo_agrees_with_enumeration() {
        let o = state::make_ghz(3).unwrap();
        let rho = state::depolarize(&o, 0.1).unwrap();
        let g = si_of(&o);
        let budget = EstimationBudget::uniform(1000, 1, &g).unwrap();
        let (mean, var, _) = gdfe_exact_moments(&rho, &g, &budget).unwrap();
        let trials = 400;
        let mut acc = 0.0;
        let mut sq = 0.0;
        for t in 0..trials {
            let mut rng = RngStream::new(909, t as u64);
            let rep = gdfe_estimate(&rho, &g, &budget, &mut rng).unwrap();
            acc += rep.estimate;
            sq += (rep.estimate - mean) * (rep.estimate - mean);
        }
        let emp_mean = acc / trials as f64;
        let emp_mse = sq / trials as f64;
        let se_mean = (var / trials as f64).sqrt();
        assert!(
            (emp_mean - mean).abs() < 4.0 * se_mean,
            "{emp_mean} vs {mean}"
        );
        let se_mse = var * (2.0 / trials as f64).sqrt();
        assert!(
            (emp_mse - var).abs() < 4.0 * se_mse,
            "{emp_mse:.3e} vs {var:.3e}"
        );
    }

    #[test]
    fn alias_table_matches_weights() {
        let weights = [0.5, 0.25, 0.2, 0.05];
        let table = AliasTable::new(&weights);
        let mut rng = RngStream::new(3, 0);
        let trials = 200_000;
        let mut counts = [0usize; 4];
        for _ in 0..trials {
            counts[table.sample(&mut rng)] += 1;
        }
        for (i, &w) in weights.iter().enumerate() {
            let freq = counts[i] as f64 / trials as f64;
            let sigma = (w * (1.0 - w) / trials as f64).sqrt();
            assert!((freq - w).abs() < 4.0 * sigma, "weight {i}: {freq} vs {w}");
        }
    }

    proptest! {
        #[test]
        fn groups_never_mix_noncommuting(codes in proptest::collection::vec(1u64..256, 2..40)) {
            // random distinct non-identity 4-qubit strings with arbitrary chis
            let mut seen = std::collections::HashSet::new();
            let strings: Vec<PauliString> = codes
                .iter()
                .filter(|&&c| seen.insert(c))
                .map(|&c| PauliString::from_index(4, c))
                .collect();
            let chis: Vec<f64> = (0..strings.len()).map(|i| 0.1 + 0.01 * i as f64).collect();
            let g = sorted_insertion(&strings, &chis).unwrap();
            for gr in &g.groups {
                for (i, (a, _)) in gr.members.iter().enumerate() {
                    for (b, _) in &gr.members[i + 1..] {
                        prop_assert!(qubitwise_commutes(a, b).unwrap());
                    }
                    prop_assert!(qubitwise_commutes(a, gr.pivot.pauli()).unwrap());
                }
            }
        }
    }
}
