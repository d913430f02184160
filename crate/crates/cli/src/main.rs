//! Command-line front end: solver, trainer, and simulator workflows with
//! reproducible seeds and machine-readable outputs.

use std::fmt;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use incompat::alpha::{
    iterative_alpha_max, majorization_bound, penalty_alpha_max, AlphaResult, SolverOptions,
};
use incompat::observable::{haar_state, DensityMatrix, Observable};
use incompat::presets::parse_preset;
use incompat::qnn::{checkpoint_to_text, train, TrainingConfig};
use incompat::sampling::{
    analytic_variances, bernstein_bounds, fig3_sweep, lambda_haar, lambda_ratio,
    write_reports_csv, write_reports_jsonl,
};
use incompat::sdp::{export_sdp, to_text};

mod obsfile;

#[derive(Parser)]
#[command(
    name = "incompat",
    version,
    about = "Commensuration factors, channel training, and measurement cost simulation"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

/// Argument mistakes that should exit with the usage code.
#[derive(Debug)]
struct UsageError(String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Args)]
struct PairArgs {
    /// Named operator pair: example1, example2, zpair, or fig3:p=<x>
    #[arg(long, conflicts_with_all = ["obs1", "obs2"])]
    preset: Option<String>,
    /// First observable file (see the operator file format; requires --obs2)
    #[arg(long, requires = "obs2")]
    obs1: Option<PathBuf>,
    /// Second observable file (requires --obs1)
    #[arg(long, requires = "obs1")]
    obs2: Option<PathBuf>,
}

impl PairArgs {
    fn resolve(&self) -> anyhow::Result<(Observable, Observable)> {
        match (&self.preset, &self.obs1, &self.obs2) {
            (Some(name), None, None) => parse_preset(name)
                .map_err(|e| UsageError(format!("--preset {name}: {e}")).into()),
            (None, Some(p1), Some(p2)) => {
                Ok((obsfile::load_observable(p1)?, obsfile::load_observable(p2)?))
            }
            _ => Err(UsageError("pass --preset NAME or both --obs1 and --obs2".into()).into()),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    /// Ground-space sign consensus with feasibility polish
    Iterative,
    /// Penalty ascent on the smoothed minimal eigenvalue
    Penalty,
}

#[derive(Clone, Copy, ValueEnum)]
enum StateArg {
    /// Maximally mixed state I/2^n
    Mixed,
    /// Haar-random pure state drawn from --seed
    Haar,
}

#[derive(Subcommand)]
enum Cmd {
    /// Certify the largest commensuration factor for an observable pair
    AlphaSolve {
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long, value_enum, default_value_t = StrategyArg::Iterative)]
        strategy: StrategyArg,
        /// Output JSON path
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the mixed-unitary channel and scaling factor against a pair
    Train {
        #[command(flatten)]
        pair: PairArgs,
        /// Ancilla dimension (number of mixed unitaries)
        #[arg(long, default_value_t = 4)]
        da: usize,
        #[arg(long, default_value_t = 2000)]
        epochs: usize,
        /// Adam learning rate
        #[arg(long, default_value_t = 0.05)]
        lr: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output JSON path
        #[arg(long)]
        out: PathBuf,
        /// Also write a plain-text training checkpoint here
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Analytic estimator variances, cost ratios, and Bernstein bounds
    Variance {
        #[command(flatten)]
        pair: PairArgs,
        /// Scaling factor; defaults to the solver-certified maximum
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long, value_enum, default_value_t = StateArg::Mixed)]
        state: StateArg,
        /// Seed for --state haar
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Accuracy target for the Bernstein copy counts
        #[arg(long, default_value_t = 0.01)]
        epsilon: f64,
        /// Failure probability for the Bernstein copy counts
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
        /// Output JSON path
        #[arg(long)]
        out: PathBuf,
    },
    /// Copy-count sweep over the interpolating family (1-p)Z1Z2 + (p/2)(Z1+Z2) vs X1X2
    Sweep {
        /// Family parameter values: `start:end:step`, a comma list, or one value
        #[arg(long)]
        p: String,
        /// Haar-state trials per point (INCOMPAT_THREADS caps the worker pool)
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        /// Per-estimate accuracy target
        #[arg(long, default_value_t = 0.01)]
        epsilon: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output CSV path
        #[arg(long)]
        out: PathBuf,
        /// Optional JSON-lines copy of the same rows
        #[arg(long)]
        jsonl: Option<PathBuf>,
    },
    /// Majorization upper bound on the commensuration factor
    Majorization {
        #[command(flatten)]
        pair: PairArgs,
        /// Grid size over measurement directions
        #[arg(long, default_value_t = 360)]
        directions: usize,
        /// Output JSON path
        #[arg(long)]
        out: PathBuf,
    },
    /// Export the feasibility problem as a text SDP
    ExportSdp {
        #[command(flatten)]
        pair: PairArgs,
        /// Output path for the text problem
        #[arg(long)]
        out: PathBuf,
    },
}

fn alpha_result_json(result: &AlphaResult) -> serde_json::Value {
    let beta: serde_json::Map<String, serde_json::Value> = result
        .beta
        .iter()
        .map(|((k, j), v)| (format!("{k},{j}"), serde_json::json!(v)))
        .collect();
    serde_json::json!({
        "alpha_max": result.alpha_max,
        "alpha_history": result.alpha_history,
        "beta": beta,
        "ground_dim_history": result.ground_dim_history,
        "final_lambda_min": result.final_lambda_min,
        "iterations": result.iterations,
        "strategy": result.strategy.name(),
    })
}

fn write_json(path: &PathBuf, value: &serde_json::Value) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn parse_p_values(spec: &str) -> anyhow::Result<Vec<f64>> {
    let bad = |msg: String| -> anyhow::Error { UsageError(msg).into() };
    let parse_one = |tok: &str| -> anyhow::Result<f64> {
        tok.trim()
            .parse::<f64>()
            .map_err(|_| bad(format!("--p: bad value {tok:?}")))
    };
    let values: Vec<f64> = if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(bad(format!("--p: expected start:end:step, got {spec:?}")));
        }
        let (start, end, step) = (parse_one(parts[0])?, parse_one(parts[1])?, parse_one(parts[2])?);
        if step <= 0.0 || end < start {
            return Err(bad("--p: need step > 0 and end >= start".into()));
        }
        let count = ((end - start) / step + 0.5).floor() as usize + 1;
        (0..count).map(|k| start + k as f64 * step).collect()
    } else {
        spec.split(',').map(parse_one).collect::<anyhow::Result<_>>()?
    };
    if values.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(bad("--p: values must lie in [0, 1]".into()));
    }
    Ok(values)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Cmd::AlphaSolve { pair, strategy, out } => {
            let (o1, o2) = pair.resolve()?;
            let opts = SolverOptions::default();
            let result = match strategy {
                StrategyArg::Iterative => iterative_alpha_max(&[o1, o2], &opts)?,
                StrategyArg::Penalty => penalty_alpha_max(&[o1, o2], &opts)?,
            };
            write_json(&out, &alpha_result_json(&result))?;
            println!(
                "alpha_max = {:.6} ({}, {} iterations, {} beta terms) -> {}",
                result.alpha_max,
                result.strategy.name(),
                result.iterations,
                result.beta.len(),
                out.display()
            );
        }
        Cmd::Train { pair, da, epochs, lr, seed, out, checkpoint } => {
            let (o1, o2) = pair.resolve()?;
            let config = TrainingConfig {
                d_a: da,
                epochs,
                learning_rate: lr,
                seed,
                ..TrainingConfig::default()
            };
            let result = train(&o1, &o2, &config)?;
            let (_, final_l_o, final_loss) =
                *result.loss_history.last().expect("nonempty loss history");
            if let Some(path) = &checkpoint {
                fs::write(path, checkpoint_to_text(&result.channel, result.alpha, epochs))?;
            }
            write_json(
                &out,
                &serde_json::json!({
                    "alpha": result.alpha,
                    "final_l_o": final_l_o,
                    "final_loss": final_loss,
                    "d_a": da,
                    "epochs": epochs,
                    "learning_rate": lr,
                    "seed": seed,
                    "weights": result.channel.weights(),
                    "loss_history": result.loss_history,
                }),
            )?;
            println!(
                "trained alpha = {:.6}, final L_O = {:.3e} -> {}",
                result.alpha,
                final_l_o,
                out.display()
            );
        }
        Cmd::Variance { pair, alpha, state, seed, epsilon, delta, out } => {
            let (o1, o2) = pair.resolve()?;
            let (alpha, alpha_source) = match alpha {
                Some(a) => {
                    if !(a > 0.0 && a <= 1.0) {
                        return Err(UsageError(format!("--alpha must lie in (0, 1], got {a}")).into());
                    }
                    (a, "flag")
                }
                None => (
                    iterative_alpha_max(&[o1.clone(), o2.clone()], &SolverOptions::default())?
                        .alpha_max,
                    "solver",
                ),
            };
            let rho = match state {
                StateArg::Mixed => DensityMatrix::maximally_mixed(o1.n_qubits()),
                StateArg::Haar => haar_state(o1.n_qubits(), seed),
            };
            let (v1o, v1z) = analytic_variances(&rho, &o1, alpha)?;
            let (v2o, v2z) = analytic_variances(&rho, &o2, alpha)?;
            let lambda = lambda_ratio(&rho, &o1, &o2, alpha)?;
            let lam_haar = lambda_haar(&o1, &o2, alpha)?;
            let bounds = bernstein_bounds(&o1, &o2, &rho, alpha, epsilon, delta)?;
            write_json(
                &out,
                &serde_json::json!({
                    "alpha": alpha,
                    "alpha_source": alpha_source,
                    "state": match state { StateArg::Mixed => "mixed", StateArg::Haar => "haar" },
                    "seed": seed,
                    "var_o": [v1o, v2o],
                    "var_z": [v1z, v2z],
                    "lambda": lambda,
                    "lambda_haar": lam_haar,
                    "bernstein": {
                        "epsilon": bounds.epsilon,
                        "delta": bounds.delta,
                        "n_o": bounds.n_o,
                        "n_z": bounds.n_z,
                    },
                }),
            )?;
            println!(
                "alpha = {:.6}, lambda = {:.4}, lambda_H = {:.4} -> {}",
                alpha,
                lambda,
                lam_haar,
                out.display()
            );
        }
        Cmd::Sweep { p, trials, epsilon, seed, out, jsonl } => {
            let p_values = parse_p_values(&p)?;
            let reports = fig3_sweep(&p_values, trials, epsilon, seed)?;
            let mut csv = Vec::new();
            write_reports_csv(&reports, &mut csv)?;
            fs::write(&out, csv)?;
            if let Some(path) = &jsonl {
                let mut rows = Vec::new();
                write_reports_jsonl(&reports, &mut rows)?;
                fs::write(path, rows)?;
            }
            let below = reports.iter().filter(|r| r.lambda_exp < 1.0).count();
            println!(
                "sweep: {} points, {} trials each, lambda_exp < 1 at {} points -> {}",
                reports.len(),
                trials,
                below,
                out.display()
            );
        }
        Cmd::Majorization { pair, directions, out } => {
            let (o1, o2) = pair.resolve()?;
            let bound = majorization_bound(&[o1, o2], directions)?;
            write_json(
                &out,
                &serde_json::json!({
                    "alpha_majorization": bound,
                    "directions": directions,
                }),
            )?;
            println!(
                "alpha_majorization = {:.6} ({} directions) -> {}",
                bound,
                directions,
                out.display()
            );
        }
        Cmd::ExportSdp { pair, out } => {
            let (o1, o2) = pair.resolve()?;
            let problem = export_sdp(&[o1, o2])?;
            fs::write(&out, to_text(&problem))?;
            println!(
                "sdp: {}x{} psd block, {} constraints -> {}",
                problem.psd_dim(),
                problem.psd_dim(),
                problem.constraints.len(),
                out.display()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            if err.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
