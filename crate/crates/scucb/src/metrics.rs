//! Ground-truth accounting: optima and suboptimality gaps by exhaustive
//! enumeration, regret, the closed-form regret ceiling, the per-round
//! concentration event monitor, and the minimum-budget estimate for a
//! strategic arm.

use serde::Serialize;

use crate::env::{k_subsets, subset_count, BudgetLedger, ProblemInstance};
use crate::error::{Error, Result};
use crate::policy::PolicyState;

/// Gap pair for one arm: distances from `alpha * OPT` to the best and worst
/// suboptimal subsets containing it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ArmGaps {
    pub delta_min: f64,
    pub delta_max: f64,
}

/// Exhaustive optimum, the suboptimal-subset family, and all gap statistics
/// for one instance at a given oracle approximation ratio.
#[derive(Clone, Debug, Serialize)]
pub struct GapReport {
    pub alpha: f64,
    pub opt: f64,
    pub optimal_subset: Vec<usize>,
    /// `None` for arms that appear in no suboptimal subset; such arms are
    /// excluded from the `delta_min`/`delta_max` reductions.
    pub arm_gaps: Vec<Option<ArmGaps>>,
    pub delta_min: Option<f64>,
    pub delta_max: Option<f64>,
    pub suboptimal_subsets: Vec<Vec<usize>>,
}

impl GapReport {
    /// Whether a subset's expected reward falls below the scaled optimum.
    pub fn is_suboptimal(&self, expected_reward: f64) -> bool {
        expected_reward < self.alpha * self.opt
    }
}

/// Enumerates all feasible subsets to compute `OPT`, the suboptimal family
/// `{S : r(S) < alpha * OPT}`, and per-arm gap extremes.
pub fn compute_opt_and_gaps(instance: &ProblemInstance, alpha: f64) -> Result<GapReport> {
    let m = instance.num_arms();
    if m > 20 || subset_count(m, instance.action_size()).is_none() {
        return Err(Error::Capability(format!(
            "gap computation enumerates all subsets; {m} arms is too many"
        )));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Domain(format!("alpha {alpha} not in [0, 1]")));
    }

    let scored: Vec<(Vec<usize>, f64)> = k_subsets(m, instance.action_size())
        .map(|s| {
            let r = instance.family().reward(instance.means(), &s);
            (s, r)
        })
        .collect();
    let (optimal_subset, opt) = scored
        .iter()
        .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)))
        .map(|(s, r)| (s.clone(), *r))
        .expect("at least one subset");

    let threshold = alpha * opt;
    let mut arm_gaps: Vec<Option<ArmGaps>> = vec![None; m];
    let mut suboptimal_subsets = Vec::new();
    for (subset, r) in &scored {
        if *r < threshold {
            suboptimal_subsets.push(subset.clone());
            let gap = threshold - r;
            for &i in subset {
                let entry = arm_gaps[i].get_or_insert(ArmGaps {
                    delta_min: f64::INFINITY,
                    delta_max: f64::NEG_INFINITY,
                });
                entry.delta_min = entry.delta_min.min(gap);
                entry.delta_max = entry.delta_max.max(gap);
            }
        }
    }

    let delta_min = arm_gaps
        .iter()
        .flatten()
        .map(|g| g.delta_min)
        .fold(None, |acc: Option<f64>, v| {
            Some(acc.map_or(v, |a| a.min(v)))
        });
    let delta_max = arm_gaps
        .iter()
        .flatten()
        .map(|g| g.delta_max)
        .fold(None, |acc: Option<f64>, v| {
            Some(acc.map_or(v, |a| a.max(v)))
        });

    Ok(GapReport {
        alpha,
        opt,
        optimal_subset,
        arm_gaps,
        delta_min,
        delta_max,
        suboptimal_subsets,
    })
}

/// Scaled-benchmark regret over a completed run:
/// `T * alpha * beta * OPT - sum_t r_mu(S_t)`. Negative values are possible
/// (and reported as-is) when `beta < 1` lowers the benchmark.
pub fn regret_of_trace(hidden_rewards: &[f64], opt: f64, alpha: f64, beta: f64) -> f64 {
    let total: f64 = hidden_rewards.iter().sum();
    hidden_rewards.len() as f64 * alpha * beta * opt - total
}

/// Cumulative regret after each round.
pub fn regret_curve(hidden_rewards: &[f64], opt: f64, alpha: f64, beta: f64) -> Vec<f64> {
    let per_round = alpha * beta * opt;
    let mut acc = 0.0;
    hidden_rewards
        .iter()
        .map(|r| {
            acc += per_round - r;
            acc
        })
        .collect()
}

/// Closed-form regret ceiling:
/// `m * dmax * ((8 B f^{-1}(dmin) + 6 ln T) / f^{-1}(dmin)^2 + pi^2/3 + 1)`.
pub fn regret_upper_bound(
    num_arms: usize,
    delta_max: f64,
    delta_min: f64,
    b_max: f64,
    horizon: usize,
    f_inv: impl Fn(f64) -> f64,
) -> Result<f64> {
    if delta_min <= 0.0 {
        return Err(Error::Domain("delta_min must be positive".into()));
    }
    let y = f_inv(delta_min);
    if y <= 0.0 || !y.is_finite() {
        return Err(Error::Domain(format!(
            "f_inv(delta_min) must be positive, got {y}"
        )));
    }
    let log_term = (horizon as f64).ln();
    Ok(num_arms as f64
        * delta_max
        * ((8.0 * b_max * y + 6.0 * log_term) / (y * y) + std::f64::consts::PI.powi(2) / 3.0 + 1.0))
}

/// Minimum-budget estimate for a strategic arm to sustain `pulls` pulls
/// under the confidence-parameterized UCB:
/// `max(0, (delta - sqrt(2 ln(K^2 / eta^2) / K)) * K)`.
pub fn min_budget_for_pulls(delta: f64, pulls: u64, eta: f64) -> f64 {
    assert!(pulls >= 1);
    assert!(eta > 0.0 && eta < 1.0);
    let k = pulls as f64;
    let radius = (2.0 * (k * k / (eta * eta)).ln() / k).sqrt();
    ((delta - radius) * k).max(0.0)
}

/// Per-round concentration monitor for one arm.
#[derive(Clone, Debug)]
pub struct ConcentrationRound {
    /// `Lambda_{i,t} = sqrt(3 ln t / (2 K_{i,t-1})) + rho_{i,t-1} / K_{i,t-1}`.
    pub lambda: Vec<f64>,
    /// Whether `|mu_tilde_{i,t-1} - mu_i| <= Lambda_{i,t}` per arm.
    pub within: Vec<bool>,
    /// The conjunction over arms (the event `E_t`).
    pub event_holds: bool,
}

/// Checks the concentration event at round `t` against ground truth. Uses
/// the simulator's true spend from the ledger, which the learner never sees.
pub fn concentration_monitor(
    true_means: &[f64],
    policy: &PolicyState,
    ledger: &BudgetLedger,
    round: usize,
) -> ConcentrationRound {
    let mut lambda = Vec::with_capacity(true_means.len());
    let mut within = Vec::with_capacity(true_means.len());
    for (arm, &mu) in true_means.iter().enumerate() {
        let pulls = policy.pull_counts()[arm].max(1) as f64;
        let lam = (3.0 * (round as f64).ln() / (2.0 * pulls)).sqrt() + ledger.spent(arm) / pulls;
        let dev = (policy.mean_estimate(arm) - mu).abs();
        lambda.push(lam);
        within.push(dev <= lam);
    }
    let event_holds = within.iter().all(|&w| w);
    ConcentrationRound {
        lambda,
        within,
        event_holds,
    }
}

/// Replays the suboptimal-pull audit counters over a subset sequence:
/// counters start at 1 after initialization; each suboptimal round increments
/// the counter of its least-counted member (lowest index on ties). Their sum
/// upper-bounds the number of suboptimal rounds played.
pub fn suboptimal_pull_counters(
    post_init_subsets: &[Vec<usize>],
    instance: &ProblemInstance,
    report: &GapReport,
) -> Result<Vec<u64>> {
    let mut counters = vec![1u64; instance.num_arms()];
    for subset in post_init_subsets {
        let r = instance.expected_reward(subset)?;
        if report.is_suboptimal(r) {
            let target = subset
                .iter()
                .copied()
                .min_by(|&a, &b| counters[a].cmp(&counters[b]).then(a.cmp(&b)))
                .expect("nonempty subset");
            counters[target] += 1;
        }
    }
    Ok(counters)
}
