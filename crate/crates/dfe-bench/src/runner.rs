//! Trial execution, MSE aggregation, shot-budget correction, and reports.

use crate::config::{Budget, EstimatorSpec, ExperimentConfig, TargetSpec};
use dfe_core::grouping::{
    gdfe_estimate, gdfe_exact_moments, sorted_insertion, EstimationBudget, GroupingResult,
};
use dfe_core::measurement::RngStream;
use dfe_core::oasis_gt::{
    build_pauli_povm, gt_estimate, optimize_weights, GtOptions, PovmEnsemble, SamplingLaw,
    WeightTable,
};
use dfe_core::oasis_st::{
    ghz_budget, ghz_estimate_with_budget, ghz_group_catalog, w_budget, w_estimate_with_budget,
    w_group_catalog,
};
use dfe_core::pauli::char_vector;
use dfe_core::state::{depolarize, exact_fidelity, make_ghz, make_haar, make_w, DensityMatrix};
use rayon::prelude::*;
use std::io::Write;
use std::time::Instant;

#[derive(Debug)]
pub enum BenchError {
    Config(String),
    Numerical(String),
    Io(std::io::Error),
}

impl std::fmt::Display for BenchError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BenchError::Config(m) => write!(f, "config error: {m}"),
            BenchError::Numerical(m) => write!(f, "numerical failure: {m}"),
            BenchError::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl std::error::Error for BenchError {}

impl From<dfe_core::Error> for BenchError {
    fn from(e: dfe_core::Error) -> BenchError {
        BenchError::Numerical(e.to_string())
    }
}

impl From<std::io::Error> for BenchError {
    fn from(e: std::io::Error) -> BenchError {
        BenchError::Io(e)
    }
}

pub type BenchResult<T> = Result<T, BenchError>;

/// Bundled reference shot counts for the correction factor (n = 3..6).
pub fn reference_shots(target: TargetSpec, n: usize) -> Option<f64> {
    let idx = n.checked_sub(3)?;
    let row: [f64; 4] = match target {
        TargetSpec::Haar => [4426.0, 8126.6, 14083.3, 27399.4],
        TargetSpec::Ghz => [875.6, 937.5, 968.6, 984.3],
        TargetSpec::W => [1749.8, 2625.1, 3707.1, 5453.5],
    };
    row.get(idx).copied()
}

#[derive(Clone, Debug)]
pub struct TrialRecord {
    pub index: u64,
    pub estimate: f64,
    pub shots_used: u64,
    pub true_fidelity: f64,
    pub wall_seconds: f64,
}

#[derive(Clone, Debug)]
pub struct SummaryRow {
    pub target: TargetSpec,
    pub n: usize,
    pub estimator: EstimatorSpec,
    pub trials: u64,
    pub raw_mse: f64,
    pub corrected_mse: f64,
    pub mean_shots: f64,
    pub ref_shots: f64,
    pub mse_stderr: f64,
}

impl SummaryRow {
    pub fn csv_header() -> &'static str {
        "target,n,estimator,trials,raw_mse,corrected_mse,mean_shots,ref_shots,mse_stderr"
    }

    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{:.6e},{:.6e},{:.4},{:.4},{:.6e}",
            self.target,
            self.n,
            self.estimator,
            self.trials,
            self.raw_mse,
            self.corrected_mse,
            self.mean_shots,
            self.ref_shots,
            self.mse_stderr
        )
    }
}

#[derive(Clone, Debug)]
pub struct SummaryTable {
    pub rows: Vec<SummaryRow>,
}

impl SummaryTable {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{}", SummaryRow::csv_header())?;
        for row in &self.rows {
            writeln!(w, "{}", row.to_csv())?;
        }
        Ok(())
    }
}

fn structured_target(cfg: &ExperimentConfig) -> BenchResult<Option<DensityMatrix>> {
    Ok(match cfg.target {
        TargetSpec::Ghz => Some(make_ghz(cfg.n)?),
        TargetSpec::W => Some(make_w(cfg.n)?),
        TargetSpec::Haar => {
            if cfg.haar_fixed {
                let mut rng = RngStream::new(cfg.base_seed, u64::MAX);
                Some(make_haar(cfg.n, &mut rng)?)
            } else {
                None
            }
        }
    })
}

fn grouping_for(o: &DensityMatrix) -> BenchResult<GroupingResult> {
    let cv = char_vector(o.matrix())?;
    let (strings, chis) = cv.support_without_identity();
    Ok(sorted_insertion(&strings, &chis)?)
}

fn gdfe_budget_for(grouping: &GroupingResult, budget: Budget) -> BenchResult<EstimationBudget> {
    Ok(match budget {
        Budget::EpsDelta { epsilon, delta } => {
            EstimationBudget::from_eps_delta(epsilon, delta, grouping)?
        }
        Budget::Rounds { l, m } => EstimationBudget::uniform(l, m, grouping)?,
        Budget::Shots(_) => {
            return Err(BenchError::Config(
                "gdfe does not take a raw shot count".into(),
            ))
        }
    })
}

fn gt_options(cfg: &ExperimentConfig) -> GtOptions {
    let mut opts = GtOptions::default();
    if let Some(t) = cfg.lp_feasibility_tol {
        opts.solver.feasibility_tol = t;
    }
    if let Some(t) = cfg.lp_optimality_tol {
        opts.solver.optimality_tol = t;
    }
    opts
}

/// Per-config precomputation shared by every trial of a fixed-target run.
enum Prepared {
    Gdfe {
        grouping: GroupingResult,
        budget: EstimationBudget,
    },
    Gt {
        povm: PovmEnsemble,
        weights: WeightTable,
        law: SamplingLaw,
        shots: u64,
    },
    StGhz {
        l: u64,
        m: u64,
    },
    StW {
        l: u64,
        m1: u64,
        m2: u64,
    },
}

fn prepare(
    cfg: &ExperimentConfig,
    budget: Budget,
    fixed_target: Option<&DensityMatrix>,
) -> BenchResult<Option<Prepared>> {
    match cfg.estimator {
        EstimatorSpec::OasisSt => Ok(Some(match cfg.target {
            TargetSpec::Ghz => match budget {
                Budget::EpsDelta { epsilon, delta } => {
                    let (l, m) = ghz_budget(epsilon, delta)?;
                    Prepared::StGhz { l, m }
                }
                Budget::Rounds { l, m } => Prepared::StGhz { l, m },
                Budget::Shots(_) => unreachable!("validated"),
            },
            TargetSpec::W => match budget {
                Budget::EpsDelta { epsilon, delta } => {
                    let (l, m1, m2) = w_budget(cfg.n, epsilon, delta)?;
                    Prepared::StW { l, m1, m2 }
                }
                Budget::Rounds { l, m } => Prepared::StW { l, m1: m, m2: m },
                Budget::Shots(_) => unreachable!("validated"),
            },
            TargetSpec::Haar => unreachable!("validated"),
        })),
        EstimatorSpec::Gdfe => match fixed_target {
            Some(o) => {
                let grouping = grouping_for(o)?;
                let budget = gdfe_budget_for(&grouping, budget)?;
                Ok(Some(Prepared::Gdfe { grouping, budget }))
            }
            None => Ok(None),
        },
        EstimatorSpec::OasisGt => match fixed_target {
            Some(o) => {
                let povm = build_pauli_povm(cfg.n)?;
                let (weights, law, _) = optimize_weights(&povm, o, &gt_options(cfg))?;
                let shots = match budget {
                    Budget::Shots(s) => s,
                    _ => unreachable!("validated"),
                };
                Ok(Some(Prepared::Gt {
                    povm,
                    weights,
                    law,
                    shots,
                }))
            }
            None => Ok(None),
        },
    }
}

fn run_trial(
    cfg: &ExperimentConfig,
    budget: Budget,
    fixed_target: Option<&DensityMatrix>,
    prepared: Option<&Prepared>,
    trial: u64,
) -> BenchResult<TrialRecord> {
    let start = Instant::now();
    let mut rng = RngStream::new(cfg.base_seed, trial);
    let target_storage;
    let o: &DensityMatrix = match fixed_target {
        Some(o) => o,
        None => {
            target_storage = make_haar(cfg.n, &mut rng)?;
            &target_storage
        }
    };
    let rho = depolarize(o, cfg.noise_strength)?;
    let f = exact_fidelity(&rho, o)?;
    let report = match (cfg.estimator, prepared) {
        (EstimatorSpec::OasisSt, Some(Prepared::StGhz { l, m })) => {
            ghz_estimate_with_budget(&rho, cfg.n, *l, *m, &mut rng)?
        }
        (EstimatorSpec::OasisSt, Some(Prepared::StW { l, m1, m2 })) => {
            w_estimate_with_budget(&rho, cfg.n, *l, *m1, *m2, &mut rng)?
        }
        (EstimatorSpec::Gdfe, Some(Prepared::Gdfe { grouping, budget })) => {
            gdfe_estimate(&rho, grouping, budget, &mut rng)?
        }
        (EstimatorSpec::Gdfe, None) => {
            let grouping = grouping_for(o)?;
            let b = gdfe_budget_for(&grouping, budget)?;
            gdfe_estimate(&rho, &grouping, &b, &mut rng)?
        }
        (
            EstimatorSpec::OasisGt,
            Some(Prepared::Gt {
                povm,
                weights,
                law,
                shots,
            }),
        ) => gt_estimate(&rho, povm, weights, law, *shots, &mut rng)?,
        (EstimatorSpec::OasisGt, None) => {
            let povm = build_pauli_povm(cfg.n)?;
            let (weights, law, _) = optimize_weights(&povm, o, &gt_options(cfg))?;
            let shots = match budget {
                Budget::Shots(s) => s,
                _ => unreachable!("validated"),
            };
            gt_estimate(&rho, &povm, &weights, &law, shots, &mut rng)?
        }
        _ => unreachable!("prepared matches estimator"),
    };
    Ok(TrialRecord {
        index: trial,
        estimate: report.estimate,
        shots_used: report.shots_used,
        true_fidelity: f,
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Expected shots of the grouped baseline at the bundled (0.1, 0.1)
/// calibration for this run's target(s): the self-calibrated reference.
fn self_calibrated_reference(
    cfg: &ExperimentConfig,
    fixed_target: Option<&DensityMatrix>,
) -> BenchResult<f64> {
    let expected = |o: &DensityMatrix| -> BenchResult<f64> {
        let grouping = grouping_for(o)?;
        let budget = EstimationBudget::from_eps_delta(0.1, 0.1, &grouping)?;
        let rho = depolarize(o, cfg.noise_strength)?;
        let (_, _, shots) = gdfe_exact_moments(&rho, &grouping, &budget)?;
        Ok(shots)
    };
    match fixed_target {
        Some(o) => expected(o),
        None => {
            // average over a modest sample of the redrawn targets
            let samples = cfg.trials.min(64);
            let mut acc = 0.0;
            for t in 0..samples {
                let mut rng = RngStream::new(cfg.base_seed, t);
                let o = make_haar(cfg.n, &mut rng)?;
                acc += expected(&o)?;
            }
            Ok(acc / samples as f64)
        }
    }
}

/// Run every trial of a configuration and aggregate the summary row.
pub fn run_benchmark(cfg: &ExperimentConfig) -> BenchResult<(SummaryTable, Vec<TrialRecord>)> {
    let budget = cfg.validate().map_err(BenchError::Config)?;
    let fixed_target = structured_target(cfg)?;
    let prepared = prepare(cfg, budget, fixed_target.as_ref())?;

    let records: Vec<BenchResult<TrialRecord>> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| run_trial(cfg, budget, fixed_target.as_ref(), prepared.as_ref(), trial))
        .collect();
    let mut trials = Vec::with_capacity(records.len());
    for r in records {
        trials.push(r?);
    }
    // ordered reduction by trial index keeps output bytes independent of
    // the worker pool
    trials.sort_by_key(|t| t.index);

    let t = cfg.trials as f64;
    let sq_errors: Vec<f64> = trials
        .iter()
        .map(|r| (r.estimate - r.true_fidelity).powi(2))
        .collect();
    let raw_mse = sq_errors.iter().sum::<f64>() / t;
    let var_sq = if cfg.trials > 1 {
        sq_errors.iter().map(|s| (s - raw_mse).powi(2)).sum::<f64>() / (t - 1.0)
    } else {
        0.0
    };
    let mse_stderr = (var_sq / t).sqrt();
    let mean_shots = trials.iter().map(|r| r.shots_used as f64).sum::<f64>() / t;

    let ref_shots = match cfg.reference_shots {
        Some(r) => r,
        None if cfg.self_calibrate_reference => {
            self_calibrated_reference(cfg, fixed_target.as_ref())?
        }
        None => reference_shots(cfg.target, cfg.n).ok_or_else(|| {
            BenchError::Config(format!(
                "no bundled reference shots for ({}, {}); set reference_shots or \
                 self_calibrate_reference",
                cfg.target, cfg.n
            ))
        })?,
    };
    let corrected_mse = raw_mse * mean_shots / ref_shots;

    let row = SummaryRow {
        target: cfg.target,
        n: cfg.n,
        estimator: cfg.estimator,
        trials: cfg.trials,
        raw_mse,
        corrected_mse,
        mean_shots,
        ref_shots,
        mse_stderr,
    };
    Ok((SummaryTable { rows: vec![row] }, trials))
}

/// Grouping report for a structured target: group count plus the serialized
/// groups, from either sorted insertion or the analytic catalog.
pub fn group_report(target: TargetSpec, n: usize, analytic: bool) -> BenchResult<(usize, String)> {
    let grouping = match (target, analytic) {
        (TargetSpec::Ghz, true) => ghz_group_catalog(n)?,
        (TargetSpec::W, true) => w_group_catalog(n)?,
        (TargetSpec::Ghz, false) => grouping_for(&make_ghz(n)?)?,
        (TargetSpec::W, false) => grouping_for(&make_w(n)?)?,
        (TargetSpec::Haar, _) => {
            return Err(BenchError::Config(
                "group reports are defined for structured targets".into(),
            ))
        }
    };
    let mut buf = Vec::new();
    grouping.write_text(&mut buf)?;
    Ok((
        grouping.total_groups(),
        String::from_utf8(buf).expect("utf8"),
    ))
}

/// JSON sidecar carrying the full configuration next to a CSV output.
pub fn write_sidecar(path: &str, cfg: &ExperimentConfig) -> BenchResult<()> {
    let meta = serde_json::json!({
        "config": cfg,
        "correction": "corrected_mse = raw_mse * mean_shots / ref_shots",
        "reference_table": {
            "haar": [4426.0, 8126.6, 14083.3, 27399.4],
            "ghz": [875.6, 937.5, 968.6, 984.3],
            "w": [1749.8, 2625.1, 3707.1, 5453.5],
            "n": [3, 4, 5, 6],
        },
    });
    let text = serde_json::to_string_pretty(&meta).expect("serializable");
    std::fs::write(format!("{path}.meta.json"), text)?;
    Ok(())
}
