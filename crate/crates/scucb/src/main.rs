//! Command-line front end: single runs, axis sweeps, gap reports, the
//! concentration-rate study, closed-form bound evaluators, and the
//! collusion solver.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use scucb::collusion::{solve_collusion_bruteforce, CollusionProgram};
use scucb::env::{ProblemInstance, RewardDistribution, RewardFamily};
use scucb::error::{Error, Result};
use scucb::harness::{
    emit_csv, emit_json, run_single, run_sweep, ExperimentConfig, StrategyKind, SweepAxis,
};
use scucb::metrics::{compute_opt_and_gaps, min_budget_for_pulls, regret_upper_bound};
use scucb::policy::PolicyKind;

const OUTPUT_DIR_ENV: &str = "SCUCB_OUTPUT_DIR";

#[derive(Parser)]
#[command(
    name = "scucb",
    version,
    about = "Budget-aware combinatorial bandit simulations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ConfigArgs {
    /// TOML experiment configuration.
    #[arg(long)]
    config: PathBuf,

    /// Override: number of arms.
    #[arg(long)]
    arms: Option<usize>,

    /// Override: arms played per round.
    #[arg(long)]
    action_size: Option<usize>,

    /// Override: rounds per replication.
    #[arg(long)]
    horizon: Option<usize>,

    /// Override: maximum strategic budget.
    #[arg(long)]
    bmax: Option<f64>,

    /// Override: exploration tuning factor.
    #[arg(long)]
    gamma: Option<f64>,

    /// Override: comma-separated seed list.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,

    /// Override: policies to run.
    #[arg(long, value_delimiter = ',')]
    policy: Option<Vec<PolicyKind>>,

    /// Override: arm manipulation strategy.
    #[arg(long)]
    strategy: Option<StrategyKind>,

    /// Override: rounds between recorded CSV rows.
    #[arg(long)]
    stride: Option<usize>,

    /// Output directory (falls back to $SCUCB_OUTPUT_DIR, then ".").
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

impl ConfigArgs {
    fn load(&self) -> Result<ExperimentConfig> {
        let text = std::fs::read_to_string(&self.config)?;
        let mut config = ExperimentConfig::from_toml(&text)?;
        if let Some(v) = self.arms {
            config.num_arms = v;
        }
        if let Some(v) = self.action_size {
            config.action_size = v;
        }
        if let Some(v) = self.horizon {
            config.horizon = v;
        }
        if let Some(v) = self.bmax {
            config.b_max = v;
        }
        if let Some(v) = self.gamma {
            config.gamma = v;
        }
        if let Some(v) = &self.seeds {
            config.seeds = v.clone();
        }
        if let Some(v) = &self.policy {
            config.policies = v.clone();
        }
        if let Some(v) = self.strategy {
            config.strategy = v;
        }
        if let Some(v) = self.stride {
            config.record_stride = Some(v);
        }
        config.validate()?;
        Ok(config)
    }

    fn output_dir(&self) -> PathBuf {
        self.output_dir
            .clone()
            .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("."))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured policies over the seed list and write CSV + JSON.
    Run(ConfigArgs),

    /// Sweep one axis (bmax=, k=, or policy=) with shared seeds per cell.
    Sweep {
        #[command(flatten)]
        config: ConfigArgs,

        /// Axis spec, e.g. "bmax=70,90,110,130", "k=2,4,6,8",
        /// or "policy=scucb,cucb".
        #[arg(long)]
        axis: String,
    },

    /// Print the exhaustive optimum and suboptimality gaps for a linear
    /// instance.
    Gaps {
        /// Comma-separated true means.
        #[arg(long, value_delimiter = ',')]
        means: Vec<f64>,

        #[arg(long)]
        action_size: usize,

        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
    },

    /// Measure how often the per-round concentration event fails without
    /// manipulation, against the 2m/t^2 ceiling.
    VerifyLemma1 {
        #[arg(long, default_value_t = 5)]
        arms: usize,

        #[arg(long, default_value_t = 10_000)]
        horizon: usize,

        /// Number of replications (seeds 0..n).
        #[arg(long, default_value_t = 50)]
        replications: u64,

        /// Rounds at which to report the empirical failure frequency.
        #[arg(long, value_delimiter = ',', default_values_t = vec![100usize, 1000, 10_000])]
        checkpoints: Vec<usize>,
    },

    /// Evaluate a closed-form bound.
    Bound {
        #[command(subcommand)]
        which: BoundCommand,
    },

    /// Solve the collusion program by brute force and print the plan.
    Collude {
        /// Comma-separated per-arm budgets.
        #[arg(long, value_delimiter = ',')]
        budgets: Vec<f64>,

        /// Comma-separated per-arm gaps to the best mean.
        #[arg(long, value_delimiter = ',')]
        gaps: Vec<f64>,

        #[arg(long, default_value_t = 50)]
        y_cap: u64,

        /// Maximize plain pull counts instead of gap-weighted ones.
        #[arg(long)]
        unit_weights: bool,

        #[arg(long)]
        horizon_hint: Option<u64>,
    },
}

#[derive(Subcommand)]
enum BoundCommand {
    /// The regret ceiling in terms of the gap extremes and b_max.
    Regret {
        #[arg(long)]
        arms: usize,

        #[arg(long)]
        delta_max: f64,

        #[arg(long)]
        delta_min: f64,

        #[arg(long)]
        bmax: f64,

        #[arg(long)]
        horizon: usize,

        /// Bounded-smoothness slope (k for the linear family).
        #[arg(long)]
        smoothness_slope: f64,
    },

    /// The minimum budget a strategic arm needs to sustain a pull count.
    Budget {
        #[arg(long)]
        delta: f64,

        #[arg(long)]
        pulls: u64,

        #[arg(long, default_value_t = 0.1)]
        eta: f64,
    },
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

fn cmd_run(args: &ConfigArgs) -> Result<()> {
    let config = args.load()?;
    let dir = args.output_dir();
    ensure_dir(&dir)?;
    let result = run_sweep(&config, &SweepAxis::Policy(config.policies.clone()))?;
    let stride = config.effective_stride();
    let hash = config.hash();
    let csv_path = dir.join(format!("run_{hash}.csv"));
    let json_path = dir.join(format!("run_{hash}.json"));
    emit_csv(&result.records, stride, &csv_path)?;
    emit_json(&result.summary, &json_path)?;
    for cell in &result.summary.cells {
        println!(
            "{} {}: mean final regret {:.3} (std {:.3}) over {} seeds",
            cell.policy,
            cell.cell,
            cell.mean_final_regret,
            cell.std_final_regret,
            cell.seeds.len()
        );
    }
    println!("wrote {} and {}", csv_path.display(), json_path.display());
    Ok(())
}

fn parse_axis(spec: &str) -> Result<SweepAxis> {
    let (name, values) = spec
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("axis '{spec}' is not name=v1,v2,...")))?;
    let parts: Vec<&str> = values.split(',').filter(|s| !s.is_empty()).collect();
    if parts.is_empty() {
        return Err(Error::Config("axis needs at least one value".into()));
    }
    match name {
        "bmax" => Ok(SweepAxis::BMax(
            parts
                .iter()
                .map(|p| p.parse::<f64>().map_err(|e| Error::Config(e.to_string())))
                .collect::<Result<_>>()?,
        )),
        "k" | "action-size" => Ok(SweepAxis::ActionSize(
            parts
                .iter()
                .map(|p| p.parse::<usize>().map_err(|e| Error::Config(e.to_string())))
                .collect::<Result<_>>()?,
        )),
        "policy" => Ok(SweepAxis::Policy(
            parts
                .iter()
                .map(|p| match *p {
                    "scucb" => Ok(PolicyKind::Scucb),
                    "cucb" => Ok(PolicyKind::Cucb),
                    "tscb" => Ok(PolicyKind::Tscb),
                    "exp3cb" => Ok(PolicyKind::Exp3Cb),
                    other => Err(Error::Config(format!("unknown policy '{other}'"))),
                })
                .collect::<Result<_>>()?,
        )),
        other => Err(Error::Config(format!(
            "unknown axis '{other}' (expected bmax, k, or policy)"
        ))),
    }
}

fn cmd_sweep(args: &ConfigArgs, axis: &str) -> Result<()> {
    let config = args.load()?;
    let axis = parse_axis(axis)?;
    let dir = args.output_dir();
    ensure_dir(&dir)?;
    let result = run_sweep(&config, &axis)?;
    let stride = config.effective_stride();
    let hash = config.hash();
    let csv_path = dir.join(format!("sweep_{hash}.csv"));
    let json_path = dir.join(format!("sweep_{hash}.json"));
    emit_csv(&result.records, stride, &csv_path)?;
    emit_json(&result.summary, &json_path)?;
    for cell in &result.summary.cells {
        println!(
            "{} {}: mean final regret {:.3} (std {:.3})",
            cell.policy, cell.cell, cell.mean_final_regret, cell.std_final_regret
        );
    }
    println!("wrote {} and {}", csv_path.display(), json_path.display());
    Ok(())
}

fn cmd_gaps(means: &[f64], action_size: usize, alpha: f64) -> Result<()> {
    let instance = ProblemInstance::new(
        means.to_vec(),
        vec![0.0; means.len()],
        action_size,
        RewardFamily::Linear,
        RewardDistribution::Bernoulli,
    )?;
    let report = compute_opt_and_gaps(&instance, alpha)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&report).map_err(|e| Error::Config(e.to_string()))?
    );
    Ok(())
}

fn cmd_verify_lemma1(
    arms: usize,
    horizon: usize,
    replications: u64,
    checkpoints: &[usize],
) -> Result<()> {
    let config = ExperimentConfig {
        num_arms: arms,
        action_size: 1,
        horizon,
        b_max: 0.0,
        budget_rule: scucb::harness::BudgetRule::Fixed,
        policies: vec![PolicyKind::Scucb],
        strategy: StrategyKind::None,
        oracle: Default::default(),
        gamma: 1.0,
        distribution: Default::default(),
        reward_family: Default::default(),
        means: None,
        seeds: (0..replications).collect(),
        learner_b_max: None,
        record_stride: None,
        scale_budget_bonus: false,
    };
    config.validate()?;

    let mut failure_counts = vec![0u64; checkpoints.len()];
    for &seed in &config.seeds {
        let out = run_single(&config, PolicyKind::Scucb, seed)?;
        for (slot, &t) in checkpoints.iter().enumerate() {
            if t <= arms || t > horizon {
                continue;
            }
            if out.concentration_violations[t - arms - 1] {
                failure_counts[slot] += 1;
            }
        }
    }

    let rows: Vec<serde_json::Value> = checkpoints
        .iter()
        .zip(&failure_counts)
        .map(|(&t, &count)| {
            let empirical = count as f64 / replications as f64;
            let bound = (2.0 * arms as f64 / (t as f64 * t as f64)).min(1.0);
            serde_json::json!({
                "t": t,
                "empirical_failure_rate": empirical,
                "ceiling": bound,
                "replications": replications,
            })
        })
        .collect();
    println!(
        "{}",
        serde_json::to_string_pretty(&rows).map_err(|e| Error::Config(e.to_string()))?
    );
    Ok(())
}

fn cmd_collude(
    budgets: Vec<f64>,
    gaps: Vec<f64>,
    y_cap: u64,
    unit_weights: bool,
    horizon_hint: Option<u64>,
) -> Result<()> {
    let mut program = CollusionProgram::new(budgets, gaps)?;
    program.unit_weights = unit_weights;
    program.horizon_hint = horizon_hint;
    let solution = solve_collusion_bruteforce(&program, y_cap)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&solution).map_err(|e| Error::Config(e.to_string()))?
    );
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(args) => cmd_run(&args),
        Command::Sweep { config, axis } => cmd_sweep(&config, &axis),
        Command::Gaps {
            means,
            action_size,
            alpha,
        } => cmd_gaps(&means, action_size, alpha),
        Command::VerifyLemma1 {
            arms,
            horizon,
            replications,
            checkpoints,
        } => cmd_verify_lemma1(arms, horizon, replications, &checkpoints),
        Command::Bound { which } => match which {
            BoundCommand::Regret {
                arms,
                delta_max,
                delta_min,
                bmax,
                horizon,
                smoothness_slope,
            } => {
                let bound = regret_upper_bound(arms, delta_max, delta_min, bmax, horizon, |d| {
                    d / smoothness_slope
                })?;
                println!("{bound}");
                Ok(())
            }
            BoundCommand::Budget { delta, pulls, eta } => {
                println!("{}", min_budget_for_pulls(delta, pulls, eta));
                Ok(())
            }
        },
        Command::Collude {
            budgets,
            gaps,
            y_cap,
            unit_weights,
            horizon_hint,
        } => cmd_collude(budgets, gaps, y_cap, unit_weights, horizon_hint),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
