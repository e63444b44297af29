//! LP-optimized importance sampling over the local Pauli POVM.
//!
//! The target operator is expanded in the informationally overcomplete POVM
//! of all 3^n Pauli product settings with uniform default probabilities. The
//! expansion weights are free parameters; minimizing the weighted worst-case
//! magnitude sum_U p(U) max_b |w_{U,b}| yields the sampling law with the
//! smallest surrogate variance bound. Estimation then importance-samples
//! settings from q(U) ∝ p(U) max_b |w_{U,b}| and averages S = w p(U)/q(U).
//!
//! Two solve routes produce the weights:
//! - `Direct` builds the literal LP (weights, per-setting maxima, slack-folded
//!   box rows) and hands it to the dense simplex; fine up to n = 3.
//! - `ColumnGeneration` (default) optimizes the same polytope expressed over
//!   aggregated columns: one column per (setting, sign pattern) with value
//!   sum_b s_b Pi_{U,b} written in Pauli coordinates. Each column has only
//!   2^n nonzeros and pricing reduces to a Walsh-Hadamard transform of the
//!   gathered duals, so the master has 4^n rows regardless of 6^n weights.
//!   Both routes agree to machine precision; tests pin that.

use crate::grouping::EstimateReport;
use crate::lp::{self, LpStatus, OptimizeOutcome, Simplex, SolverOptions, StandardLp};
use crate::matrix::{CMatrix, C64};
use crate::measurement::{
    outcome_distribution, sample_outcome, MeasurementSetting, OutcomeDistribution, RngStream,
};
use crate::pauli::{char_vector, Letter, PauliString};
use crate::state::DensityMatrix;
use crate::{Error, Result};
use std::collections::HashSet;
use std::io::{BufRead, Write};

pub const MAX_POVM_QUBITS: usize = 6;
pub const MAX_ENUMERATION_QUBITS: usize = 4;

/// All 3^n Pauli product settings with their uniform default probabilities.
#[derive(Clone, Debug)]
pub struct PovmEnsemble {
    n: usize,
    settings: Vec<MeasurementSetting>,
}

/// Letters of setting index u in base-3 (X=0, Y=1, Z=2), qubit 0 most
/// significant.
fn setting_letters(n: usize, u: usize) -> Vec<Letter> {
    let mut letters = vec![Letter::X; n];
    let mut rest = u;
    for i in (0..n).rev() {
        letters[i] = match rest % 3 {
            0 => Letter::X,
            1 => Letter::Y,
            _ => Letter::Z,
        };
        rest /= 3;
    }
    letters
}

impl PovmEnsemble {
    pub fn qubits(&self) -> usize {
        self.n
    }

    pub fn num_settings(&self) -> usize {
        self.settings.len()
    }

    pub fn num_elements(&self) -> usize {
        self.settings.len() << self.n
    }

    pub fn setting(&self, u: usize) -> &MeasurementSetting {
        &self.settings[u]
    }

    pub fn settings(&self) -> &[MeasurementSetting] {
        &self.settings
    }

    pub fn default_prob(&self) -> f64 {
        1.0 / self.settings.len() as f64
    }

    /// Product state |phi_{U,b}> with V |phi> = |b>.
    pub fn element_state(&self, u: usize, b: u64) -> Vec<C64> {
        let n = self.n;
        let setting = &self.settings[u];
        let mut v = vec![C64::new(1.0, 0.0)];
        let r = std::f64::consts::FRAC_1_SQRT_2;
        for i in 0..n {
            let bit = (b >> (n - 1 - i)) & 1;
            let (a0, a1) = match setting.letter(i) {
                Letter::Z => {
                    if bit == 0 {
                        (C64::new(1.0, 0.0), C64::new(0.0, 0.0))
                    } else {
                        (C64::new(0.0, 0.0), C64::new(1.0, 0.0))
                    }
                }
                Letter::X => {
                    let s = if bit == 0 { 1.0 } else { -1.0 };
                    (C64::new(r, 0.0), C64::new(s * r, 0.0))
                }
                Letter::Y => {
                    let s = if bit == 0 { 1.0 } else { -1.0 };
                    (C64::new(r, 0.0), C64::new(0.0, s * r))
                }
                Letter::I => unreachable!(),
            };
            // the new qubit is the least significant position so far
            let mut arranged = vec![C64::new(0.0, 0.0); 2 * v.len()];
            for (j, z) in v.iter().enumerate() {
                arranged[2 * j] = z * a0;
                arranged[2 * j + 1] = z * a1;
            }
            v = arranged;
        }
        v
    }

    /// POVM element Pi_{U,b} = p(U) |phi><phi|.
    pub fn element(&self, u: usize, b: u64) -> CMatrix {
        CMatrix::outer(&self.element_state(u, b)).scale(self.default_prob())
    }

    /// max elementwise deviation of sum_{U,b} Pi_{U,b} from the identity.
    pub fn completeness_defect(&self) -> f64 {
        let d = 1usize << self.n;
        let mut acc = CMatrix::zeros(d);
        for u in 0..self.num_settings() {
            for b in 0..d as u64 {
                acc.add_scaled(&self.element(u, b), 1.0);
            }
        }
        acc.frobenius_distance(&CMatrix::identity(d))
    }
}

/// The uniform Pauli-product POVM on n qubits.
pub fn build_pauli_povm(n: usize) -> Result<PovmEnsemble> {
    if n == 0 || n > MAX_POVM_QUBITS {
        return Err(Error::QubitCount {
            n,
            min: 1,
            max: MAX_POVM_QUBITS,
        });
    }
    let count = 3usize.pow(n as u32);
    let settings = (0..count)
        .map(|u| MeasurementSetting::from_letters(&setting_letters(n, u)).expect("full support"))
        .collect();
    Ok(PovmEnsemble { n, settings })
}

/// Optimized expansion weights, indexed by (setting, outcome).
#[derive(Clone, Debug)]
pub struct WeightTable {
    pub n: usize,
    /// omega[setting][outcome]
    pub omega: Vec<Vec<f64>>,
    /// per-setting maxima max_b |omega|
    pub max_abs: Vec<f64>,
}

impl WeightTable {
    pub fn from_omega(n: usize, omega: Vec<Vec<f64>>) -> WeightTable {
        let max_abs = omega
            .iter()
            .map(|row| row.iter().fold(0.0f64, |m, v| m.max(v.abs())))
            .collect();
        WeightTable { n, omega, max_abs }
    }

    /// sum_U p(U) max_b |omega_{U,b}|: the optimized objective, whose square
    /// bounds the single-shot second moment.
    pub fn objective(&self, default_prob: f64) -> f64 {
        self.max_abs.iter().map(|m| m * default_prob).sum()
    }

    /// Nonzero weights as `setting outcome omega` lines.
    pub fn write_text<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "n {}", self.n)?;
        for (u, row) in self.omega.iter().enumerate() {
            for (b, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    let setting: String = setting_letters(self.n, u)
                        .iter()
                        .map(|l| l.to_char())
                        .collect();
                    let outcome: String = (0..self.n)
                        .map(|i| {
                            if (b >> (self.n - 1 - i)) & 1 == 1 {
                                '1'
                            } else {
                                '0'
                            }
                        })
                        .collect();
                    writeln!(w, "{setting} {outcome} {v:.17e}")?;
                }
            }
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(r: R) -> Result<WeightTable> {
        let mut n = 0usize;
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for line in r.lines() {
            let line = line.map_err(|e| Error::Parse(e.to_string()))?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(rest) = line.strip_prefix("n ") {
                n = rest
                    .trim()
                    .parse()
                    .map_err(|e| Error::Parse(format!("bad qubit count: {e}")))?;
                if n == 0 || n > MAX_POVM_QUBITS {
                    return Err(Error::QubitCount {
                        n,
                        min: 1,
                        max: MAX_POVM_QUBITS,
                    });
                }
                rows = vec![vec![0.0; 1 << n]; 3usize.pow(n as u32)];
                continue;
            }
            if n == 0 {
                return Err(Error::Parse("weight line before the n header".into()));
            }
            let mut parts = line.split_whitespace();
            let setting: PauliString = parts
                .next()
                .ok_or_else(|| Error::Parse("missing setting".into()))?
                .parse()?;
            let outcome: crate::pauli::BitString = parts
                .next()
                .ok_or_else(|| Error::Parse("missing outcome".into()))?
                .parse()?;
            let value: f64 = parts
                .next()
                .ok_or_else(|| Error::Parse("missing weight".into()))?
                .parse()
                .map_err(|e| Error::Parse(format!("bad weight: {e}")))?;
            if setting.len() != n || outcome.len() != n {
                return Err(Error::LengthMismatch {
                    left: setting.len(),
                    right: n,
                });
            }
            let mut u = 0usize;
            for l in setting.letters() {
                let digit = match l {
                    Letter::X => 0,
                    Letter::Y => 1,
                    Letter::Z => 2,
                    Letter::I => {
                        return Err(Error::Parse(format!(
                            "identity letter in setting {setting}"
                        )))
                    }
                };
                u = u * 3 + digit;
            }
            rows[u][outcome.bits() as usize] = value;
        }
        if n == 0 {
            return Err(Error::Parse("missing n header".into()));
        }
        Ok(WeightTable::from_omega(n, rows))
    }
}

/// Importance-sampling law over settings: q(U) ∝ p(U) max_b |omega_{U,b}|.
#[derive(Clone, Debug)]
pub struct SamplingLaw {
    pub q: Vec<f64>,
    pub normalizer: f64,
    cumulative: Vec<f64>,
}

impl SamplingLaw {
    pub fn from_weights(default_prob: f64, weights: &WeightTable) -> Result<SamplingLaw> {
        let normalizer: f64 = weights.max_abs.iter().map(|m| m * default_prob).sum();
        if normalizer <= 0.0 {
            return Err(Error::Numerical("all weights vanish".into()));
        }
        let q: Vec<f64> = weights
            .max_abs
            .iter()
            .map(|m| m * default_prob / normalizer)
            .collect();
        let mut cumulative = Vec::with_capacity(q.len());
        let mut acc = 0.0;
        for &v in &q {
            acc += v;
            cumulative.push(acc);
        }
        Ok(SamplingLaw {
            q,
            normalizer,
            cumulative,
        })
    }

    pub fn sample(&self, rng: &mut RngStream) -> usize {
        let u = rng.uniform();
        self.cumulative
            .partition_point(|&c| c <= u)
            .min(self.q.len() - 1)
    }
}

/// sum_{U,b} omega Pi compared against O, Frobenius norm.
pub fn reconstruction_error(povm: &PovmEnsemble, weights: &WeightTable, o: &DensityMatrix) -> f64 {
    let d = 1usize << povm.n;
    let p = povm.default_prob();
    let mut acc = CMatrix::zeros(d);
    for u in 0..povm.num_settings() {
        for b in 0..d as u64 {
            let w = weights.omega[u][b as usize];
            if w == 0.0 {
                continue;
            }
            let phi = povm.element_state(u, b);
            // acc += w * p * |phi><phi| without building the full element
            for i in 0..d {
                let wi = phi[i] * (w * p);
                if wi.norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..d {
                    acc[(i, j)] += wi * phi[j].conj();
                }
            }
        }
    }
    acc.frobenius_distance(o.matrix())
}

/// Hermitian coordinate encoding used by the direct LP route: d diagonal
/// entries, then upper-triangle real parts, then upper-triangle imaginary
/// parts (row-major pairs).
fn hermitian_coords(m: &CMatrix) -> Vec<f64> {
    let d = m.dim();
    let mut out = Vec::with_capacity(d * d);
    for k in 0..d {
        out.push(m[(k, k)].re);
    }
    for j in 0..d {
        for k in (j + 1)..d {
            out.push(m[(j, k)].re);
        }
    }
    for j in 0..d {
        for k in (j + 1)..d {
            out.push(m[(j, k)].im);
        }
    }
    out
}

/// The literal weight-optimization LP: variables are all omega_{U,b}, one
/// t_U per setting, and two slack blocks folding the box constraints
/// omega - t <= 0 and -omega - t <= 0 into equalities.
pub fn assemble_lp(povm: &PovmEnsemble, o: &DensityMatrix) -> Result<StandardLp> {
    let n = povm.n;
    let d = 1usize << n;
    if o.dim() != d {
        return Err(Error::DimensionMismatch {
            left: o.dim(),
            right: d,
        });
    }
    let ns = povm.num_settings();
    let nw = ns * d;
    let herm_rows = d * d;
    let num_cols = nw + ns + 2 * nw;
    let p = povm.default_prob();

    let mut columns: Vec<Vec<(usize, f64)>> = vec![Vec::new(); num_cols];
    let mut objective = vec![0.0f64; num_cols];
    let mut lower = vec![0.0f64; num_cols];
    let upper = vec![f64::INFINITY; num_cols];

    for u in 0..ns {
        for b in 0..d {
            let j = u * d + b;
            lower[j] = f64::NEG_INFINITY;
            let coords = hermitian_coords(&povm.element(u, b as u64));
            let col = &mut columns[j];
            for (row, &v) in coords.iter().enumerate() {
                if v.abs() > 1e-15 {
                    col.push((row, v));
                }
            }
            // omega - t + s1 = 0 ; -omega - t + s2 = 0
            col.push((herm_rows + j, 1.0));
            col.push((herm_rows + nw + j, -1.0));
        }
    }
    for u in 0..ns {
        let j = nw + u;
        objective[j] = p;
        for b in 0..d {
            columns[j].push((herm_rows + u * d + b, -1.0));
            columns[j].push((herm_rows + nw + u * d + b, -1.0));
        }
    }
    for s in 0..2 * nw {
        columns[nw + ns + s].push((herm_rows + s, 1.0));
    }

    let mut rhs = hermitian_coords(o.matrix());
    rhs.extend(std::iter::repeat(0.0).take(2 * nw));
    Ok(StandardLp {
        objective,
        rhs,
        columns,
        lower,
        upper,
    })
}

/// Which LP machinery produces the weights.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SolveRoute {
    #[default]
    ColumnGeneration,
    Direct,
}

#[derive(Clone, Copy, Debug)]
pub struct GtOptions {
    pub route: SolveRoute,
    pub solver: SolverOptions,
    pub max_generation_rounds: u64,
    /// Cap on new columns admitted per pricing round.
    pub pricing_batch: usize,
}

impl Default for GtOptions {
    fn default() -> Self {
        GtOptions {
            route: SolveRoute::ColumnGeneration,
            solver: SolverOptions {
                presolve: false,
                ..SolverOptions::default()
            },
            max_generation_rounds: 10_000,
            pricing_batch: 96,
        }
    }
}

/// In-place Walsh-Hadamard transform: out[b] = sum_T in[T] (-1)^{popcount(T & b)}.
fn wht(v: &mut [f64]) {
    let len = v.len();
    let mut h = 1;
    while h < len {
        let mut i = 0;
        while i < len {
            for j in i..i + h {
                let (a, b) = (v[j], v[j + h]);
                v[j] = a + b;
                v[j + h] = a - b;
            }
            i += 2 * h;
        }
        h *= 2;
    }
}

/// Row index (Pauli index) of the sub-string of setting u supported on T.
fn sub_string_row(n: usize, letters: &[Letter], t_mask: usize) -> usize {
    let mut idx = 0usize;
    for (i, &l) in letters.iter().enumerate().take(n) {
        idx <<= 2;
        if (t_mask >> (n - 1 - i)) & 1 == 1 {
            idx |= l as usize;
        }
    }
    idx
}

/// Canonical dual-frame expansion weights of the uniform Pauli POVM: the
/// starting point that makes the master feasible before any pricing runs.
/// For each setting the per-outcome weight is the sign-weighted transform of
/// the target's sub-string expectations with letter weight 3/2 and identity
/// weight 1/2.
fn dual_frame_weights(
    povm: &PovmEnsemble,
    cv: &crate::pauli::CharacteristicVector,
) -> Vec<Vec<f64>> {
    let n = povm.n;
    let d = 1usize << n;
    let sqrt_d = (d as f64).sqrt();
    let mut out = Vec::with_capacity(povm.num_settings());
    for u in 0..povm.num_settings() {
        let lets = setting_letters(n, u);
        let mut g: Vec<f64> = (0..d)
            .map(|t| {
                let row = sub_string_row(n, &lets, t);
                let weight = 0.5f64.powi((n - t.count_ones() as usize) as i32)
                    * 1.5f64.powi(t.count_ones() as i32);
                weight * cv.entries()[row] * sqrt_d
            })
            .collect();
        wht(&mut g);
        out.push(g);
    }
    out
}

/// Decompose v into a nonnegative combination of sign patterns with total
/// mass |v|_inf: greedy peeling that makes one more coordinate tight per
/// step, so at most d+1 patterns come out.
fn sign_pattern_decomposition(v: &[f64]) -> Vec<(f64, u64)> {
    let d = v.len();
    let mut u = v.to_vec();
    let mut c = u.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut out = Vec::new();
    if c <= 0.0 {
        return out;
    }
    let floor = c * 1e-13;
    for _ in 0..=d + 1 {
        if c <= floor {
            break;
        }
        let mut mask = 0u64;
        for (b, &x) in u.iter().enumerate() {
            if x > 0.0 {
                mask |= 1 << b;
            }
        }
        // largest peel keeping the remainder inside the shrunken cube
        let mut alpha = c;
        for &x in &u {
            alpha = alpha.min((c + x.abs()) / 2.0);
        }
        if alpha <= floor {
            break;
        }
        for (b, x) in u.iter_mut().enumerate() {
            *x -= alpha * if (mask >> b) & 1 == 1 { 1.0 } else { -1.0 };
        }
        c -= alpha;
        out.push((alpha, mask));
    }
    out
}

fn optimize_by_column_generation(
    povm: &PovmEnsemble,
    o: &DensityMatrix,
    opts: &GtOptions,
) -> Result<WeightTable> {
    let n = povm.n;
    let d = 1usize << n;
    let ns = povm.num_settings();
    let cv = char_vector(o.matrix())?;
    // rows scaled so column entries are the integer-valued sign transforms
    let scale = ns as f64 * (d as f64).sqrt();
    let rhs: Vec<f64> = cv.entries().iter().map(|&x| x * scale).collect();
    let mut master = Simplex::new(rhs, opts.solver);
    let setting_lets: Vec<Vec<Letter>> = (0..ns).map(|u| setting_letters(n, u)).collect();
    let mut seen: HashSet<(usize, u64)> = HashSet::new();
    let mut generated: Vec<(usize, u64)> = Vec::new();
    let tol = 1e-9;

    let add_column = |master: &mut Simplex,
                      generated: &mut Vec<(usize, u64)>,
                      seen: &mut HashSet<(usize, u64)>,
                      u: usize,
                      mask: u64|
     -> bool {
        if !seen.insert((u, mask)) {
            return false;
        }
        let mut s: Vec<f64> = (0..d)
            .map(|b| if (mask >> b) & 1 == 1 { 1.0 } else { -1.0 })
            .collect();
        wht(&mut s);
        let entries: Vec<(usize, f64)> = (0..d)
            .filter(|&t| s[t] != 0.0)
            .map(|t| (sub_string_row(n, &setting_lets[u], t), s[t]))
            .collect();
        master.add_column(1.0, 0.0, f64::INFINITY, &entries);
        generated.push((u, mask));
        true
    };

    // seed each setting with the dominant patterns of its dual-frame
    // decomposition; enough to start phase two quickly without bloating the
    // pricing pool
    for (u, w0) in dual_frame_weights(povm, &cv).into_iter().enumerate() {
        let mut patterns = sign_pattern_decomposition(&w0);
        patterns.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
        for (_alpha, mask) in patterns.into_iter().take(3) {
            add_column(&mut master, &mut generated, &mut seen, u, mask);
        }
    }

    for round in 0..opts.max_generation_rounds {
        let outcome = master.optimize()?;
        if std::env::var_os("DFE_CG_TRACE").is_some() {
            eprintln!(
                "round {round}: outcome {outcome:?} iters {} (degen {} flips {}) cols {}",
                master.iterations,
                master.degenerate_pivots,
                master.bound_flips,
                master.num_structural()
            );
        }
        let threshold = match outcome {
            OptimizeOutcome::Optimal => 1.0,
            OptimizeOutcome::PrimalInfeasible(_) => 0.0,
            OptimizeOutcome::Unbounded => return Err(Error::LpUnbounded),
            OptimizeOutcome::IterationLimit => return Err(Error::LpIterationLimit),
        };
        let y = master.duals().to_vec();
        let mut candidates: Vec<(f64, usize, u64)> = Vec::new();
        for u in 0..ns {
            let lets = &setting_lets[u];
            let mut z: Vec<f64> = (0..d).map(|t| y[sub_string_row(n, lets, t)]).collect();
            wht(&mut z);
            let l1: f64 = z.iter().map(|v| v.abs()).sum();
            if l1 <= threshold + tol {
                continue;
            }
            let mut mask = 0u64;
            for (b, &v) in z.iter().enumerate() {
                if v > 0.0 {
                    mask |= 1 << b;
                }
            }
            candidates.push((l1 - threshold, u, mask));
        }
        candidates.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
        let mut added = 0usize;
        for &(_, u, mask) in &candidates {
            if added >= opts.pricing_batch {
                break;
            }
            if add_column(&mut master, &mut generated, &mut seen, u, mask) {
                added += 1;
            }
        }
        if added == 0 {
            return match outcome {
                OptimizeOutcome::Optimal => {
                    let off = master.structural_offset();
                    let mut omega = vec![vec![0.0f64; d]; ns];
                    for (k, &(u, mask)) in generated.iter().enumerate() {
                        let lam = master.primal(off + k);
                        if lam <= 0.0 {
                            continue;
                        }
                        for b in 0..d {
                            let sb = if (mask >> b) & 1 == 1 { 1.0 } else { -1.0 };
                            omega[u][b] += lam * sb;
                        }
                    }
                    Ok(WeightTable::from_omega(n, omega))
                }
                _ => Err(Error::LpInfeasible),
            };
        }
    }
    Err(Error::Numerical(
        "column generation did not converge".into(),
    ))
}

fn optimize_direct(
    povm: &PovmEnsemble,
    o: &DensityMatrix,
    opts: &GtOptions,
) -> Result<WeightTable> {
    let n = povm.n;
    let d = 1usize << n;
    let problem = assemble_lp(povm, o)?;
    let mut solver_opts = opts.solver;
    solver_opts.presolve = false; // rows are independent by construction
    let sol = lp::solve(&problem, &solver_opts)?;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => return Err(Error::LpInfeasible),
        LpStatus::Unbounded => return Err(Error::LpUnbounded),
        LpStatus::IterationLimit => return Err(Error::LpIterationLimit),
    }
    let omega: Vec<Vec<f64>> = (0..povm.num_settings())
        .map(|u| (0..d).map(|b| sol.primal[u * d + b]).collect())
        .collect();
    Ok(WeightTable::from_omega(n, omega))
}

const RECONSTRUCTION_TOL: f64 = 1e-8;

/// Solve the weight LP for a target and derive the sampling law.
///
/// Returns the weight table, the law q(U) ∝ p(U) max_b |omega|, and the
/// objective sum_U p(U) max_b |omega| (its square is the surrogate variance
/// bound). Non-pure targets are accepted.
pub fn optimize_weights(
    povm: &PovmEnsemble,
    o: &DensityMatrix,
    opts: &GtOptions,
) -> Result<(WeightTable, SamplingLaw, f64)> {
    if o.dim() != 1 << povm.n {
        return Err(Error::DimensionMismatch {
            left: o.dim(),
            right: 1 << povm.n,
        });
    }
    let weights = match opts.route {
        SolveRoute::ColumnGeneration => optimize_by_column_generation(povm, o, opts)?,
        SolveRoute::Direct => optimize_direct(povm, o, opts)?,
    };
    let err = reconstruction_error(povm, &weights, o);
    if err > RECONSTRUCTION_TOL {
        return Err(Error::Numerical(format!(
            "weight reconstruction residual {err:.3e}"
        )));
    }
    let law = SamplingLaw::from_weights(povm.default_prob(), &weights)?;
    let objective = weights.objective(povm.default_prob());
    Ok((weights, law, objective))
}

/// Importance-sampled fidelity estimate with N shots.
pub fn gt_estimate(
    rho: &DensityMatrix,
    povm: &PovmEnsemble,
    weights: &WeightTable,
    law: &SamplingLaw,
    shots: u64,
    rng: &mut RngStream,
) -> Result<EstimateReport> {
    if rho.qubits() != povm.n || weights.n != povm.n {
        return Err(Error::DimensionMismatch {
            left: rho.qubits(),
            right: povm.n,
        });
    }
    if law.q.len() != povm.num_settings() {
        return Err(Error::MisalignedInput("law and POVM sizes differ".into()));
    }
    // law consistency: q(U) proportional to p(U) M_U
    let p = povm.default_prob();
    for (u, &qv) in law.q.iter().enumerate() {
        if (qv * law.normalizer - p * weights.max_abs[u]).abs() > 1e-9 {
            return Err(Error::MisalignedInput(
                "sampling law not derived from weights".into(),
            ));
        }
    }
    let mut dists: Vec<Option<OutcomeDistribution>> = vec![None; povm.num_settings()];
    let mut sum = 0.0;
    for _ in 0..shots {
        let u = law.sample(rng);
        if law.q[u] <= 0.0 {
            return Err(Error::Numerical(
                "sampled a zero-probability setting".into(),
            ));
        }
        if dists[u].is_none() {
            dists[u] = Some(outcome_distribution(rho, povm.setting(u))?);
        }
        let b = sample_outcome(dists[u].as_ref().unwrap(), rng);
        sum += weights.omega[u][b.bits() as usize] * p / law.q[u];
    }
    Ok(EstimateReport {
        estimate: sum / shots as f64,
        shots_used: shots,
        rounds: shots,
        branch_rounds: [0, 0, 0],
    })
}

/// Exact single-shot mean and variance of S by enumerating all (U, b) pairs.
pub fn exact_moments_gt(
    rho: &DensityMatrix,
    povm: &PovmEnsemble,
    weights: &WeightTable,
    law: &SamplingLaw,
) -> Result<(f64, f64)> {
    if povm.n > MAX_ENUMERATION_QUBITS {
        return Err(Error::QubitCount {
            n: povm.n,
            min: 1,
            max: MAX_ENUMERATION_QUBITS,
        });
    }
    if rho.qubits() != povm.n {
        return Err(Error::DimensionMismatch {
            left: rho.qubits(),
            right: povm.n,
        });
    }
    let d = 1usize << povm.n;
    let p = povm.default_prob();
    let mut mean = 0.0;
    let mut second = 0.0;
    for u in 0..povm.num_settings() {
        let q = law.q[u];
        if q <= 0.0 {
            continue;
        }
        let dist = outcome_distribution(rho, povm.setting(u))?;
        for b in 0..d {
            let f = dist.probs()[b];
            if f == 0.0 {
                continue;
            }
            let s = weights.omega[u][b] * p / q;
            mean += q * f * s;
            second += q * f * s * s;
        }
    }
    Ok((mean, second - mean * mean))
}
