//! Deterministic experiment execution: one replication start-to-finish, and
//! axis sweeps with shared seeds across cells for paired comparisons.

use rayon::prelude::*;

use crate::collusion::{lsi_variant_plan, schedule_to_strategies, PrioritizedOrder};
use crate::env::{
    env_step, ArmHistory, BudgetLedger, ManipulationStrategy, ProblemInstance, RewardDistribution,
    RewardFamily, RoundTrace,
};
use crate::error::Result;
use crate::metrics::{compute_opt_and_gaps, concentration_monitor, regret_curve, GapReport};
use crate::oracle::InstanceShape;
use crate::policy::{PolicyKind, PolicyState};
use crate::rng::RunStreams;

use super::config::{BudgetRule, DistributionConfig, ExperimentConfig, FamilyConfig, StrategyKind};
use super::report::{summarize, RunRecord, RunSummary};

/// Everything one replication produced.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub seed: u64,
    pub traces: Vec<RoundTrace>,
    /// Cumulative regret after each round (benchmark scaled by the oracle's
    /// alpha and beta).
    pub regret_curve: Vec<f64>,
    /// Cumulative hidden expected reward after each round.
    pub reward_curve: Vec<f64>,
    /// Per post-initialization round: whether the concentration event failed.
    pub concentration_violations: Vec<bool>,
    pub oracle_failures: usize,
    pub final_policy: PolicyState,
    pub gap_report: GapReport,
    pub instance: ProblemInstance,
}

impl RunOutput {
    pub fn final_regret(&self) -> f64 {
        *self.regret_curve.last().expect("nonempty run")
    }

    pub fn final_reward(&self) -> f64 {
        *self.reward_curve.last().expect("nonempty run")
    }

    /// Cumulative concentration-event failures aligned with the regret
    /// curve (initialization rounds count zero).
    pub fn violation_curve(&self) -> Vec<u32> {
        let init = self.traces.len() - self.concentration_violations.len();
        let mut acc = 0u32;
        let mut curve = vec![0u32; init];
        curve.extend(self.concentration_violations.iter().map(|&v| {
            acc += u32::from(v);
            acc
        }));
        curve
    }

    /// Subsets played after initialization, for counter replays.
    pub fn post_init_subsets(&self) -> Vec<Vec<usize>> {
        self.traces
            .iter()
            .skip(self.instance.num_arms())
            .map(|t| t.subset.clone())
            .collect()
    }
}

/// Builds the replication's instance from the config and the seed's
/// instance-generation stream, normalizing optimal-arm budgets to zero.
/// Budget uniforms are always drawn so the stream position does not depend
/// on the budget rule.
pub fn build_instance(
    config: &ExperimentConfig,
    streams: &mut RunStreams,
) -> Result<ProblemInstance> {
    use rand::Rng;
    let m = config.num_arms;
    let rng = &mut streams.instance;

    let means: Vec<f64> = match &config.means {
        Some(explicit) => explicit.clone(),
        None => (0..m).map(|_| rng.gen::<f64>()).collect(),
    };
    let family = match &config.reward_family {
        FamilyConfig::Linear => RewardFamily::Linear,
        FamilyConfig::Coverage { num_targets } => {
            let weights: Vec<f64> = (0..*num_targets).map(|_| rng.gen::<f64>()).collect();
            let link_probs: Vec<Vec<f64>> = (0..m)
                .map(|_| (0..*num_targets).map(|_| rng.gen::<f64>()).collect())
                .collect();
            RewardFamily::Coverage {
                weights,
                link_probs,
            }
        }
    };
    let distribution = match config.distribution {
        DistributionConfig::Bernoulli => RewardDistribution::Bernoulli,
        DistributionConfig::TruncatedGaussian { sigma } => {
            RewardDistribution::TruncatedGaussian { sigma }
        }
    };
    let budget_uniforms: Vec<f64> = (0..m).map(|_| rng.gen::<f64>()).collect();

    let mut instance = ProblemInstance::new(
        means,
        vec![0.0; m],
        config.action_size,
        family,
        distribution,
    )?;
    let (optimal, _) = instance.optimal_subset()?;

    let mut budgets = vec![0.0; m];
    for arm in 0..m {
        if optimal.contains(&arm) {
            continue;
        }
        budgets[arm] = match &config.budget_rule {
            BudgetRule::UniformRandom => budget_uniforms[arm] * config.b_max,
            BudgetRule::Fixed => config.b_max,
            BudgetRule::PerArm { budgets } => budgets[arm],
        };
    }
    instance = ProblemInstance::new(
        instance.means().to_vec(),
        budgets,
        config.action_size,
        instance.family().clone(),
        instance.distribution().clone(),
    )?;
    debug_assert!(instance.is_budget_normalized()?);
    Ok(instance)
}

/// Per-arm strategies for the configured kind. The prioritized variants
/// receive the true gaps to the best mean, matching the assumption that
/// arms know the mean profile when planning.
fn build_strategies(
    config: &ExperimentConfig,
    instance: &ProblemInstance,
) -> Vec<ManipulationStrategy> {
    let m = instance.num_arms();
    let order = match config.strategy {
        StrategyKind::None => return vec![ManipulationStrategy::Honest; m],
        StrategyKind::Lsi => return vec![ManipulationStrategy::LumpSum; m],
        StrategyKind::Random => return vec![ManipulationStrategy::Random; m],
        StrategyKind::PbLsi => PrioritizedOrder::Budget,
        StrategyKind::PdLsi => PrioritizedOrder::Gap,
        StrategyKind::PbdLsi => PrioritizedOrder::BudgetMinusGap,
    };
    let best = instance.means().iter().cloned().fold(0.0, f64::max);
    let gaps: Vec<f64> = instance.means().iter().map(|mu| best - mu).collect();
    let plan = lsi_variant_plan(order, instance.budgets(), &gaps, m);
    schedule_to_strategies(&plan, m)
}

/// Runs one policy on one seed, start to finish. Deterministic in
/// `(config, policy, seed)`.
pub fn run_single(
    config: &ExperimentConfig,
    policy_kind: PolicyKind,
    seed: u64,
) -> Result<RunOutput> {
    config.validate()?;
    let mut streams = RunStreams::new(seed, config.num_arms);
    let instance = build_instance(config, &mut streams)?;
    let oracle = config.oracle.build()?;
    let gap_report = compute_opt_and_gaps(&instance, oracle.alpha())?;
    let strategies = build_strategies(config, &instance);

    let mut policy = PolicyState::new(
        policy_kind,
        config.num_arms,
        config.gamma,
        config.learner_b_max(),
    )
    .with_scaled_budget_bonus(config.scale_budget_bonus);

    let mut ledger = BudgetLedger::new(&instance);
    let mut histories = vec![ArmHistory::new(); config.num_arms];
    let mut traces: Vec<RoundTrace> = Vec::with_capacity(config.horizon);
    let mut concentration_violations = Vec::with_capacity(config.horizon - config.num_arms);
    let mut oracle_failures = 0usize;

    let RunStreams {
        instance: _,
        mut rewards,
        strategies: mut strategy_rngs,
        policy: mut policy_rng,
        oracle: mut oracle_rng,
    } = streams;

    policy.initialize(config.action_size, &mut policy_rng, |round, subset| {
        let trace = env_step(
            &instance,
            &strategies,
            &mut ledger,
            &mut histories,
            subset,
            round,
            &mut rewards,
            &mut strategy_rngs,
        )?;
        let observed = trace.observed.clone();
        traces.push(trace);
        Ok(observed)
    })?;

    let shape = InstanceShape::of(&instance);
    for round in config.num_arms + 1..=config.horizon {
        let monitor = concentration_monitor(instance.means(), &policy, &ledger, round);
        concentration_violations.push(!monitor.event_holds);

        let (subset, failed) =
            policy.select(round, &oracle, &shape, &mut policy_rng, &mut oracle_rng)?;
        if failed {
            oracle_failures += 1;
        }
        let trace = env_step(
            &instance,
            &strategies,
            &mut ledger,
            &mut histories,
            &subset,
            round,
            &mut rewards,
            &mut strategy_rngs,
        )?;
        policy.update(&trace.subset, &trace.observed, round, &mut policy_rng)?;
        traces.push(trace);
    }

    let hidden: Vec<f64> = traces.iter().map(|t| t.expected_true_reward).collect();
    let curve = regret_curve(&hidden, gap_report.opt, oracle.alpha(), oracle.beta());
    let mut acc = 0.0;
    let reward_curve: Vec<f64> = hidden
        .iter()
        .map(|r| {
            acc += r;
            acc
        })
        .collect();

    Ok(RunOutput {
        seed,
        traces,
        regret_curve: curve,
        reward_curve,
        concentration_violations,
        oracle_failures,
        final_policy: policy,
        gap_report,
        instance,
    })
}

/// One swept dimension; cells share every other config field and the full
/// seed list.
#[derive(Clone, Debug)]
pub enum SweepAxis {
    BMax(Vec<f64>),
    ActionSize(Vec<usize>),
    Policy(Vec<PolicyKind>),
}

/// Sweep outcome: flat per-run records plus the aggregated summary.
#[derive(Clone, Debug)]
pub struct SweepResult {
    pub records: Vec<RunRecord>,
    pub summary: RunSummary,
}

/// Cross-product execution over cells, policies, and seeds. Replications run
/// concurrently; aggregation order is fixed by (cell, policy, seed)
/// regardless of completion order.
pub fn run_sweep(config: &ExperimentConfig, axis: &SweepAxis) -> Result<SweepResult> {
    config.validate()?;
    let cells: Vec<(String, ExperimentConfig)> = match axis {
        SweepAxis::BMax(values) => values
            .iter()
            .map(|&b| {
                let mut cell = config.clone();
                cell.b_max = b;
                (format!("bmax={b}"), cell)
            })
            .collect(),
        SweepAxis::ActionSize(values) => values
            .iter()
            .map(|&k| {
                let mut cell = config.clone();
                cell.action_size = k;
                (format!("k={k}"), cell)
            })
            .collect(),
        SweepAxis::Policy(kinds) => {
            let mut cell = config.clone();
            cell.policies = kinds.clone();
            vec![("base".to_string(), cell)]
        }
    };

    let mut jobs: Vec<(String, ExperimentConfig, PolicyKind, u64)> = Vec::new();
    for (label, cell) in &cells {
        cell.validate()?;
        for &policy in &cell.policies {
            for &seed in &cell.seeds {
                jobs.push((label.clone(), cell.clone(), policy, seed));
            }
        }
    }

    let records: Vec<RunRecord> = jobs
        .into_par_iter()
        .map(|(label, cell, policy, seed)| {
            run_single(&cell, policy, seed).map(|out| RunRecord {
                policy: policy.name().to_string(),
                cell: label,
                seed,
                final_regret: out.final_regret(),
                final_reward: out.final_reward(),
                violation_curve: out.violation_curve(),
                regret_curve: out.regret_curve,
                reward_curve: out.reward_curve,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let summary = summarize(config, &records);
    Ok(SweepResult { records, summary })
}

/// Convenience: a single-cell "sweep" over the configured policies.
pub fn run_all(config: &ExperimentConfig) -> Result<SweepResult> {
    run_sweep(config, &SweepAxis::Policy(config.policies.clone()))
}
