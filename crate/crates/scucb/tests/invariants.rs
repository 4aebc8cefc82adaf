//! Cross-module invariants that need full simulation runs: the
//! regret/counter link, the closed-form ceiling, counter replays on real
//! traces, and the collusion-plan round trip.

use scucb::collusion::{plan_to_strategy, solve_collusion_bruteforce, CollusionProgram};
use scucb::env::{
    env_step, ArmHistory, BudgetLedger, ProblemInstance, RewardDistribution, RewardFamily,
};
use scucb::harness::{run_single, BudgetRule, ExperimentConfig, OracleConfig, StrategyKind};
use scucb::metrics::{regret_upper_bound, suboptimal_pull_counters};
use scucb::policy::{ucb_index, PolicyKind};
use scucb::rng::stream;

fn small_config(seed_count: u64) -> ExperimentConfig {
    ExperimentConfig {
        num_arms: 5,
        action_size: 2,
        horizon: 400,
        b_max: 8.0,
        budget_rule: BudgetRule::UniformRandom,
        policies: vec![PolicyKind::Scucb],
        strategy: StrategyKind::Lsi,
        oracle: OracleConfig::ExactTopK,
        gamma: 0.2,
        distribution: scucb::harness::DistributionConfig::Bernoulli,
        reward_family: scucb::harness::FamilyConfig::Linear,
        means: None,
        seeds: (0..seed_count).collect(),
        learner_b_max: None,
        record_stride: None,
        scale_budget_bonus: true,
    }
}

#[test]
fn protocol_scale_run_finishes_quickly() {
    let mut config = small_config(1);
    config.num_arms = 10;
    config.horizon = 5000;
    config.b_max = 70.0;
    let started = std::time::Instant::now();
    let out = run_single(&config, PolicyKind::Scucb, 0).unwrap();
    assert_eq!(out.traces.len(), 5000);
    assert!(
        started.elapsed().as_secs_f64() < 5.0,
        "single replication took {:.2}s",
        started.elapsed().as_secs_f64()
    );
}

#[test]
fn regret_is_bounded_by_worst_gap_times_suboptimal_rounds() {
    let config = small_config(5);
    for &seed in &config.seeds {
        let out = run_single(&config, PolicyKind::Scucb, seed).unwrap();
        let report = &out.gap_report;
        let suboptimal_rounds = out
            .traces
            .iter()
            .filter(|t| report.is_suboptimal(t.expected_true_reward))
            .count();
        let Some(delta_max) = report.delta_max else {
            continue;
        };
        assert!(
            out.final_regret() <= delta_max * suboptimal_rounds as f64 + 1e-9,
            "seed {seed}: regret {} > {delta_max} * {suboptimal_rounds}",
            out.final_regret()
        );
    }
}

#[test]
fn closed_form_ceiling_dominates_empirical_regret() {
    let config = small_config(5);
    for &seed in &config.seeds {
        let out = run_single(&config, PolicyKind::Scucb, seed).unwrap();
        let report = &out.gap_report;
        let (Some(delta_min), Some(delta_max)) = (report.delta_min, report.delta_max) else {
            continue;
        };
        let k = config.action_size as f64;
        let bound = regret_upper_bound(
            config.num_arms,
            delta_max,
            delta_min,
            out.instance.b_max(),
            config.horizon,
            |d| d / k,
        )
        .unwrap();
        assert!(
            out.final_regret() <= bound,
            "seed {seed}: regret {} exceeds the ceiling {bound}",
            out.final_regret()
        );
    }
}

#[test]
fn counter_replay_accounts_for_every_suboptimal_round() {
    let mut config = small_config(3);
    config.horizon = 100 + config.num_arms;
    for &seed in &config.seeds {
        let out = run_single(&config, PolicyKind::Scucb, seed).unwrap();
        let subsets = out.post_init_subsets();
        let counters = suboptimal_pull_counters(&subsets, &out.instance, &out.gap_report).unwrap();
        let suboptimal_rounds = subsets
            .iter()
            .filter(|s| {
                out.gap_report
                    .is_suboptimal(out.instance.expected_reward(s).unwrap())
            })
            .count() as u64;
        assert_eq!(
            counters.iter().sum::<u64>(),
            config.num_arms as u64 + suboptimal_rounds
        );
    }
}

/// Round trip: solve the program, realize it as spend schedules, and run a
/// plain UCB learner against it. The program models pull counts
/// heuristically, so this is a soft check: the strategic arm must reach its
/// pull target in most seeds.
#[test]
fn collusion_plan_round_trip_reaches_pull_targets() {
    let program = CollusionProgram::new(vec![60.0, 0.0], vec![0.3, 0.0]).unwrap();
    let solution = solve_collusion_bruteforce(&program, 120).unwrap();
    assert!(solution.target_pulls[0] >= 1);
    let strategies = plan_to_strategy(&program, &solution).unwrap();

    let instance = ProblemInstance::new(
        vec![0.5, 0.8],
        vec![60.0, 0.0],
        1,
        RewardFamily::Linear,
        RewardDistribution::Bernoulli,
    )
    .unwrap();
    let horizon = 4 * solution.target_pulls[0] as usize + 200;

    let mut reached = 0;
    for seed in 0..20u64 {
        let mut ledger = BudgetLedger::new(&instance);
        let mut histories = vec![ArmHistory::new(), ArmHistory::new()];
        let mut rewards: Vec<_> = (0..2).map(|i| stream(seed, "reward", i)).collect();
        let mut strategy_rngs: Vec<_> = (0..2).map(|i| stream(seed, "strategy", i)).collect();
        let mut counts = [0u64; 2];
        let mut sums = [0.0f64; 2];
        for round in 1..=horizon {
            let arm = if round <= 2 {
                round - 1
            } else {
                let idx =
                    |i: usize| ucb_index(sums[i] / counts[i] as f64, counts[i], round, 0.0, 1.0);
                usize::from(idx(1) > idx(0))
            };
            let trace = env_step(
                &instance,
                &strategies,
                &mut ledger,
                &mut histories,
                &[arm],
                round,
                &mut rewards,
                &mut strategy_rngs,
            )
            .unwrap();
            counts[arm] += 1;
            sums[arm] += trace.observed[0];
        }
        if counts[0] >= solution.target_pulls[0] {
            reached += 1;
        }
    }
    assert!(
        reached >= 12,
        "strategic arm reached its target in only {reached}/20 seeds \
         (target {} pulls)",
        solution.target_pulls[0]
    );
}
