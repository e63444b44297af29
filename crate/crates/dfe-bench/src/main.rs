//! Benchmark CLI: run estimator benchmarks, report groupings, optimize and
//! reuse importance-sampling weights, and regenerate the reference tables.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure.

mod config;
mod runner;
mod tables;

use clap::{Parser, Subcommand, ValueEnum};
use config::{ExperimentConfig, TargetSpec};
use dfe_core::measurement::RngStream;
use dfe_core::oasis_gt::{build_pauli_povm, gt_estimate, optimize_weights, GtOptions, WeightTable};
use dfe_core::state::{depolarize, exact_fidelity, make_ghz, make_haar, make_w, DensityMatrix};
use runner::{run_benchmark, write_sidecar, BenchError};
use std::io::Write as _;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "dfe-bench",
    about = "Direct fidelity estimation benchmark harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum GroupTarget {
    Ghz,
    W,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum GroupMethod {
    Si,
    Analytic,
}

#[derive(Subcommand)]
enum Command {
    /// Run a benchmark described by a JSON config file.
    Bench {
        #[arg(long)]
        config: String,
        /// Override the config's base seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the config's trial count.
        #[arg(long)]
        trials: Option<u64>,
        /// Override the config's CSV output path.
        #[arg(long)]
        out: Option<String>,
    },
    /// Report the measurement grouping of a structured target.
    Groups {
        #[arg(long, value_enum)]
        target: GroupTarget,
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum)]
        method: GroupMethod,
    },
    /// Solve the weight program for a target and write the weight table.
    Optimize {
        /// Target: "ghz", "w", or "haar-seed:<u64>".
        #[arg(long)]
        target: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out: String,
        /// Permit the large programs at n >= 5.
        #[arg(long)]
        allow_large_lp: bool,
    },
    /// Estimate fidelity of the depolarized target from a weight table.
    Estimate {
        #[arg(long)]
        weights: String,
        #[arg(long)]
        shots: u64,
        #[arg(long, default_value_t = 0.1)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Regenerate a reference table grid (1: Haar MSE, 2: GHZ MSE,
    /// 3: W MSE, 4: shot counts, 5: group counts).
    Tables {
        #[arg(long)]
        which: u8,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Include the n = 5, 6 columns that need large weight programs.
        #[arg(long)]
        full: bool,
        #[arg(long)]
        out: Option<String>,
    },
}

fn parse_optimize_target(desc: &str, n: usize) -> Result<(DensityMatrix, String), BenchError> {
    if desc == "ghz" {
        return Ok((make_ghz(n)?, "ghz".to_string()));
    }
    if desc == "w" {
        return Ok((make_w(n)?, "w".to_string()));
    }
    if let Some(seed) = desc.strip_prefix("haar-seed:") {
        let seed: u64 = seed
            .parse()
            .map_err(|e| BenchError::Config(format!("bad haar seed: {e}")))?;
        let mut rng = RngStream::new(seed, u64::MAX);
        return Ok((make_haar(n, &mut rng)?, format!("haar-seed:{seed}")));
    }
    Err(BenchError::Config(format!(
        "unknown target '{desc}' (expected ghz, w, or haar-seed:<u64>)"
    )))
}

fn cmd_bench(
    config_path: &str,
    seed: Option<u64>,
    trials: Option<u64>,
    out: Option<String>,
) -> Result<(), BenchError> {
    let text = std::fs::read_to_string(config_path)
        .map_err(|e| BenchError::Config(format!("cannot read {config_path}: {e}")))?;
    let mut cfg: ExperimentConfig =
        serde_json::from_str(&text).map_err(|e| BenchError::Config(format!("bad config: {e}")))?;
    if let Some(s) = seed {
        cfg.base_seed = s;
    }
    if let Some(t) = trials {
        cfg.trials = t;
    }
    if let Some(o) = out {
        cfg.out = Some(o);
    }
    let (table, trials_log) = run_benchmark(&cfg)?;
    let total_secs: f64 = trials_log.iter().map(|t| t.wall_seconds).sum();
    eprintln!(
        "ran {} trials in {:.2}s of per-trial work",
        trials_log.len(),
        total_secs
    );
    let mut stdout = std::io::stdout().lock();
    table.write_csv(&mut stdout)?;
    if let Some(path) = &cfg.out {
        let mut buf = Vec::new();
        table.write_csv(&mut buf)?;
        std::fs::write(path, buf)?;
        write_sidecar(path, &cfg)?;
    }
    Ok(())
}

fn cmd_groups(target: GroupTarget, n: usize, method: GroupMethod) -> Result<(), BenchError> {
    let target = match target {
        GroupTarget::Ghz => TargetSpec::Ghz,
        GroupTarget::W => TargetSpec::W,
    };
    let analytic = matches!(method, GroupMethod::Analytic);
    let (count, text) = runner::group_report(target, n, analytic)?;
    let mut stdout = std::io::stdout().lock();
    writeln!(stdout, "groups {count}")?;
    write!(stdout, "{text}")?;
    Ok(())
}

fn cmd_optimize(target: &str, n: usize, out: &str, allow_large: bool) -> Result<(), BenchError> {
    if n >= 5 && !allow_large {
        return Err(BenchError::Config(
            "weight programs at n >= 5 are opt-in; pass --allow-large-lp".into(),
        ));
    }
    let (o, desc) = parse_optimize_target(target, n)?;
    let povm = build_pauli_povm(n)?;
    let (weights, _, objective) = optimize_weights(&povm, &o, &GtOptions::default())?;
    let mut buf = Vec::new();
    writeln!(buf, "# target {desc}")?;
    writeln!(buf, "# objective {objective:.17e}")?;
    weights.write_text(&mut buf)?;
    std::fs::write(out, buf)?;
    println!("objective {objective:.12}");
    println!("weights {out}");
    Ok(())
}

fn cmd_estimate(weights_path: &str, shots: u64, noise: f64, seed: u64) -> Result<(), BenchError> {
    let text = std::fs::read_to_string(weights_path)
        .map_err(|e| BenchError::Config(format!("cannot read {weights_path}: {e}")))?;
    let mut target_desc: Option<String> = None;
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix("# target ") {
            target_desc = Some(rest.trim().to_string());
        }
    }
    let target_desc = target_desc
        .ok_or_else(|| BenchError::Config("weights file lacks a '# target' header".into()))?;
    let weights =
        WeightTable::read_text(std::io::Cursor::new(text.as_bytes())).map_err(BenchError::from)?;
    let n = weights.n;
    let (o, _) = parse_optimize_target(&target_desc, n)?;
    let povm = build_pauli_povm(n)?;
    let law = dfe_core::oasis_gt::SamplingLaw::from_weights(povm.default_prob(), &weights)?;
    let rho = depolarize(&o, noise)?;
    let mut rng = RngStream::new(seed, 0);
    let report = gt_estimate(&rho, &povm, &weights, &law, shots, &mut rng)?;
    println!("estimate {:.12}", report.estimate);
    println!("shots {}", report.shots_used);
    println!("true_fidelity {:.12}", exact_fidelity(&rho, &o)?);
    Ok(())
}

fn run(cli: Cli) -> Result<(), BenchError> {
    match cli.command {
        Command::Bench {
            config,
            seed,
            trials,
            out,
        } => cmd_bench(&config, seed, trials, out),
        Command::Groups { target, n, method } => cmd_groups(target, n, method),
        Command::Optimize {
            target,
            n,
            out,
            allow_large_lp,
        } => cmd_optimize(&target, n, &out, allow_large_lp),
        Command::Estimate {
            weights,
            shots,
            noise,
            seed,
        } => cmd_estimate(&weights, shots, noise, seed),
        Command::Tables {
            which,
            trials,
            seed,
            full,
            out,
        } => tables::cmd_tables(which, trials, seed, full, out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(BenchError::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
        Err(err) => {
            eprintln!("{err}");
            ExitCode::from(3)
        }
    }
}
