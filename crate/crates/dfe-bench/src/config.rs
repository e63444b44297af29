//! Benchmark configuration: flat JSON with explicit keys.
//!
//! Exactly one shot-budget specification must be present and it must match
//! the estimator: `shots` for the LP-optimized sampler, `epsilon`+`delta` or
//! `l`(+`m`) for the grouped and structured estimators.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetSpec {
    Haar,
    Ghz,
    W,
}

impl std::fmt::Display for TargetSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TargetSpec::Haar => write!(f, "haar"),
            TargetSpec::Ghz => write!(f, "ghz"),
            TargetSpec::W => write!(f, "w"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorSpec {
    Gdfe,
    OasisGt,
    OasisSt,
}

impl std::fmt::Display for EstimatorSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EstimatorSpec::Gdfe => write!(f, "gdfe"),
            EstimatorSpec::OasisGt => write!(f, "oasis_gt"),
            EstimatorSpec::OasisSt => write!(f, "oasis_st"),
        }
    }
}

fn default_noise() -> f64 {
    0.1
}

fn default_trials() -> u64 {
    1000
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub target: TargetSpec,
    pub n: usize,
    pub estimator: EstimatorSpec,
    #[serde(default = "default_noise")]
    pub noise_strength: f64,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default)]
    pub base_seed: u64,
    // budget: exactly one of the three forms
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shots: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<u64>,
    /// Reference shot count used by the MSE correction; defaults to the
    /// bundled reference table for (target, n).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_shots: Option<f64>,
    /// Derive the reference from this run's grouped-baseline expected shots
    /// instead of the bundled table.
    #[serde(default)]
    pub self_calibrate_reference: bool,
    /// Keep one Haar target across trials instead of redrawing per trial.
    #[serde(default)]
    pub haar_fixed: bool,
    /// Opt-in for the large weight LPs (n >= 5).
    #[serde(default)]
    pub allow_large_lp: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lp_feasibility_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lp_optimality_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
}

/// Budget as resolved against the estimator's interface.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Budget {
    Shots(u64),
    EpsDelta { epsilon: f64, delta: f64 },
    Rounds { l: u64, m: u64 },
}

impl ExperimentConfig {
    pub fn budget(&self) -> Result<Budget, String> {
        let forms = [
            self.shots.is_some(),
            self.epsilon.is_some() || self.delta.is_some(),
            self.l.is_some() || self.m.is_some(),
        ];
        if forms.iter().filter(|&&f| f).count() != 1 {
            return Err(
                "exactly one budget form required: shots, epsilon+delta, or l+m".to_string(),
            );
        }
        if let Some(shots) = self.shots {
            if shots == 0 {
                return Err("shots must be positive".into());
            }
            return Ok(Budget::Shots(shots));
        }
        if self.epsilon.is_some() || self.delta.is_some() {
            let (Some(epsilon), Some(delta)) = (self.epsilon, self.delta) else {
                return Err("epsilon and delta must be given together".into());
            };
            return Ok(Budget::EpsDelta { epsilon, delta });
        }
        let (Some(l), Some(m)) = (self.l, self.m) else {
            return Err("l and m must be given together".into());
        };
        if l == 0 || m == 0 {
            return Err("l and m must be positive".into());
        }
        Ok(Budget::Rounds { l, m })
    }

    pub fn validate(&self) -> Result<Budget, String> {
        if self.n < 1 || self.n > 8 {
            return Err(format!("n = {} outside the supported range 1..=8", self.n));
        }
        if !(0.0..=1.0).contains(&self.noise_strength) {
            return Err(format!(
                "noise_strength {} outside [0, 1]",
                self.noise_strength
            ));
        }
        if self.trials == 0 {
            return Err("trials must be positive".into());
        }
        let budget = self.budget()?;
        match self.estimator {
            EstimatorSpec::OasisSt => {
                if self.target == TargetSpec::Haar {
                    return Err("oasis_st requires a structured target (ghz or w)".into());
                }
                if self.n < 2 {
                    return Err("oasis_st requires n >= 2".into());
                }
                if matches!(budget, Budget::Shots(_)) {
                    return Err("oasis_st takes epsilon+delta or l+m, not a shot count".into());
                }
            }
            EstimatorSpec::Gdfe => {
                if matches!(budget, Budget::Shots(_)) {
                    return Err("gdfe takes epsilon+delta or l+m, not a shot count".into());
                }
            }
            EstimatorSpec::OasisGt => {
                if !matches!(budget, Budget::Shots(_)) {
                    return Err("oasis_gt takes an explicit shot count".into());
                }
                if self.n > 6 {
                    return Err("oasis_gt supports n <= 6".into());
                }
                if self.n >= 5 && !self.allow_large_lp {
                    return Err(
                        "oasis_gt at n >= 5 solves a large weight program; set allow_large_lp"
                            .into(),
                    );
                }
            }
        }
        Ok(budget)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> ExperimentConfig {
        serde_json::from_str(r#"{"target":"ghz","n":3,"estimator":"oasis_st","l":1000,"m":1}"#)
            .unwrap()
    }

    #[test]
    fn defaults_and_budget() {
        let c = base();
        assert_eq!(c.noise_strength, 0.1);
        assert_eq!(c.trials, 1000);
        assert_eq!(c.validate().unwrap(), Budget::Rounds { l: 1000, m: 1 });
    }

    #[test]
    fn budget_exclusivity() {
        let mut c = base();
        c.shots = Some(100);
        assert!(c.validate().is_err());
        c.shots = None;
        c.l = None;
        c.m = None;
        assert!(c.validate().is_err());
    }

    #[test]
    fn applicability() {
        let mut c = base();
        c.target = TargetSpec::Haar;
        assert!(c.validate().unwrap_err().contains("structured"));
        let mut c = base();
        c.estimator = EstimatorSpec::OasisGt;
        assert!(c.validate().is_err()); // wrong budget form
        c.l = None;
        c.m = None;
        c.shots = Some(1000);
        assert!(c.validate().is_ok());
        c.n = 5;
        assert!(c.validate().is_err()); // opt-in required
        c.allow_large_lp = true;
        assert!(c.validate().is_ok());
    }

    #[test]
    fn unknown_keys_rejected() {
        let r: Result<ExperimentConfig, _> = serde_json::from_str(
            r#"{"target":"ghz","n":3,"estimator":"gdfe","l":1,"m":1,"bogus":true}"#,
        );
        assert!(r.is_err());
    }
}
