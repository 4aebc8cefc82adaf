//! Coordinated-arm planning: a brute-force solver for the gap-weighted
//! pull-maximization program, conversion of its solutions into spend
//! schedules, and the prioritized lump-sum spend orderings.
//!
//! The program assigns each arm a target extra-pull count `Y_i` and a
//! deadline `t_i`. A plan is feasible when, for every arm with `Y_i >= 1`,
//!
//! ```text
//! B_i / Y_i + sqrt(3 ln t_i / Y_i) >= delta_i + sqrt(3 ln t_i)
//! ```
//!
//! and the deadlines respect the cumulative pull ordering
//! `t_{i_j} >= Y_{i_1} + ... + Y_{i_j}` for some permutation `i_1..i_m`.
//! Setting each deadline to its lower bound is optimal: the constraint slack
//! `sqrt(3 ln t)(1/sqrt(Y) - 1)` is nonincreasing in `t` for `Y >= 1`, so a
//! plan feasible at any larger deadline stays feasible at the minimum.

use serde::Serialize;

use crate::env::{ManipulationStrategy, SpendEntry};
use crate::error::{Error, Result};

/// Inputs of the planning program.
#[derive(Clone, Debug)]
pub struct CollusionProgram {
    /// Per-arm lifetime budgets `B_i`.
    pub budgets: Vec<f64>,
    /// Per-arm suboptimality gaps `delta_i` (to the best arm's mean).
    pub gaps: Vec<f64>,
    /// Optional horizon; deadlines beyond it are infeasible.
    pub horizon_hint: Option<u64>,
    /// Maximize plain pull counts instead of gap-weighted pull counts.
    pub unit_weights: bool,
}

impl CollusionProgram {
    pub fn new(budgets: Vec<f64>, gaps: Vec<f64>) -> Result<Self> {
        if budgets.len() != gaps.len() || budgets.is_empty() {
            return Err(Error::Config(
                "budgets and gaps must be nonempty and equal-length".into(),
            ));
        }
        if budgets.iter().any(|b| *b < 0.0 || !b.is_finite()) {
            return Err(Error::Config("budgets must be finite and >= 0".into()));
        }
        Ok(Self {
            budgets,
            gaps,
            horizon_hint: None,
            unit_weights: false,
        })
    }

    pub fn num_arms(&self) -> usize {
        self.budgets.len()
    }

    fn weight(&self, arm: usize) -> f64 {
        if self.unit_weights {
            1.0
        } else {
            self.gaps[arm]
        }
    }

    /// Checks one (permutation, Y) assignment; returns the minimal feasible
    /// deadlines on success.
    pub fn feasible_deadlines(
        &self,
        permutation: &[usize],
        target_pulls: &[u64],
    ) -> Option<Vec<u64>> {
        let mut deadlines = vec![1u64; self.num_arms()];
        let mut prefix = 0u64;
        for &arm in permutation {
            prefix += target_pulls[arm];
            let deadline = prefix.max(1);
            if let Some(horizon) = self.horizon_hint {
                if deadline > horizon {
                    return None;
                }
            }
            deadlines[arm] = deadline;
            let y = target_pulls[arm];
            if y == 0 {
                continue;
            }
            let yf = y as f64;
            let log_term = 3.0 * (deadline as f64).ln();
            let lhs = self.budgets[arm] / yf + (log_term / yf).sqrt();
            let rhs = self.gaps[arm] + log_term.sqrt();
            if lhs < rhs - 1e-9 {
                return None;
            }
        }
        Some(deadlines)
    }
}

/// A feasible maximizer of the program.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CollusionSolution {
    /// Spend order over arms.
    pub permutation: Vec<usize>,
    /// Target extra pulls per arm (indexed by arm, not by position).
    pub target_pulls: Vec<u64>,
    /// Minimal feasible deadline per arm.
    pub deadlines: Vec<u64>,
    /// Achieved objective value.
    pub objective: f64,
}

const BRUTE_FORCE_WORK_LIMIT: u128 = 50_000_000;

/// Enumerates permutations and per-arm pull targets on a bounded grid,
/// keeping the feasible maximizer. Ties go to the lexicographically smallest
/// `(permutation, Y)` because enumeration is lexicographic and replacement
/// requires strict improvement.
pub fn solve_collusion_bruteforce(
    program: &CollusionProgram,
    y_cap: u64,
) -> Result<CollusionSolution> {
    let m = program.num_arms();
    if m > 6 {
        return Err(Error::Capability(format!(
            "brute force handles at most 6 arms, got {m}"
        )));
    }
    let grid = (y_cap as u128 + 1).pow(m as u32);
    let perms: u128 = (1..=m as u128).product();
    if grid.saturating_mul(perms) > BRUTE_FORCE_WORK_LIMIT {
        return Err(Error::Capability(format!(
            "{perms} permutations x {grid} grid points exceeds the search budget"
        )));
    }

    let mut best: Option<CollusionSolution> = None;
    let mut target_pulls = vec![0u64; m];
    for permutation in permutations(m) {
        loop {
            if let Some(deadlines) = program.feasible_deadlines(&permutation, &target_pulls) {
                let objective: f64 = (0..m)
                    .map(|i| program.weight(i) * target_pulls[i] as f64)
                    .sum();
                if best.as_ref().is_none_or(|b| objective > b.objective) {
                    best = Some(CollusionSolution {
                        permutation: permutation.clone(),
                        target_pulls: target_pulls.clone(),
                        deadlines,
                        objective,
                    });
                }
            }
            if !advance_odometer(&mut target_pulls, y_cap) {
                break;
            }
        }
    }
    Ok(best.expect("the all-zero assignment is always feasible"))
}

/// Lexicographic permutations of `0..m`.
fn permutations(m: usize) -> Vec<Vec<usize>> {
    use itertools::Itertools;
    (0..m).permutations(m).collect()
}

/// Advances a base-(cap+1) odometer; the leftmost digit is most significant
/// so iteration order is lexicographic. Returns false after wrapping to zero.
fn advance_odometer(digits: &mut [u64], cap: u64) -> bool {
    for d in digits.iter_mut().rev() {
        if *d < cap {
            *d += 1;
            return true;
        }
        *d = 0;
    }
    false
}

/// Converts a feasible solution into per-arm strategies: each arm with a
/// positive pull target spreads its whole budget uniformly over its first
/// `Y_i` pulls, holding its manipulated mean at `B_i / Y_i` through the
/// target. Zero-target or zero-budget arms stay honest.
pub fn plan_to_strategy(
    program: &CollusionProgram,
    solution: &CollusionSolution,
) -> Result<Vec<ManipulationStrategy>> {
    if program
        .feasible_deadlines(&solution.permutation, &solution.target_pulls)
        .is_none()
    {
        return Err(Error::Infeasible(
            "solution violates the program constraints".into(),
        ));
    }
    Ok((0..program.num_arms())
        .map(|arm| {
            let y = solution.target_pulls[arm];
            let budget = program.budgets[arm];
            if y == 0 || budget == 0.0 {
                ManipulationStrategy::Honest
            } else {
                ManipulationStrategy::PerPull(vec![budget / y as f64; y as usize])
            }
        })
        .collect())
}

/// Ordering key for the prioritized lump-sum spend variants.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PrioritizedOrder {
    /// Descending budget.
    Budget,
    /// Ascending gap.
    Gap,
    /// Ascending budget-minus-gap.
    BudgetMinusGap,
}

/// One planned spend: `amount` becomes due for `arm` at `round`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SpendTriple {
    pub arm: usize,
    pub round: usize,
    pub amount: f64,
}

/// Builds the staggered spend schedule for a prioritized lump-sum variant:
/// every arm owes `min(delta_i, B_i)` from round 1 (paid at its first pull,
/// during initialization), and the `j`-th arm in the ordering owes its
/// remainder from round `m + j`.
pub fn lsi_variant_plan(
    order: PrioritizedOrder,
    budgets: &[f64],
    gaps: &[f64],
    num_arms: usize,
) -> Vec<SpendTriple> {
    assert_eq!(budgets.len(), num_arms);
    assert_eq!(gaps.len(), num_arms);
    let mut arms: Vec<usize> = (0..num_arms).collect();
    match order {
        PrioritizedOrder::Budget => {
            arms.sort_by(|&a, &b| budgets[b].total_cmp(&budgets[a]).then(a.cmp(&b)))
        }
        PrioritizedOrder::Gap => arms.sort_by(|&a, &b| gaps[a].total_cmp(&gaps[b]).then(a.cmp(&b))),
        PrioritizedOrder::BudgetMinusGap => arms.sort_by(|&a, &b| {
            (budgets[a] - gaps[a])
                .total_cmp(&(budgets[b] - gaps[b]))
                .then(a.cmp(&b))
        }),
    }
    let mut plan = Vec::new();
    for (position, &arm) in arms.iter().enumerate() {
        let initial = gaps[arm].clamp(0.0, budgets[arm]);
        if initial > 0.0 {
            plan.push(SpendTriple {
                arm,
                round: 1,
                amount: initial,
            });
        }
        let burst = budgets[arm] - initial;
        if burst > 0.0 {
            plan.push(SpendTriple {
                arm,
                round: num_arms + position + 1,
                amount: burst,
            });
        }
    }
    plan
}

/// Groups a spend schedule into per-arm strategies.
pub fn schedule_to_strategies(plan: &[SpendTriple], num_arms: usize) -> Vec<ManipulationStrategy> {
    let mut entries: Vec<Vec<SpendEntry>> = vec![Vec::new(); num_arms];
    for triple in plan {
        entries[triple.arm].push(SpendEntry {
            due_round: triple.round,
            amount: triple.amount,
        });
    }
    entries
        .into_iter()
        .map(|list| {
            if list.is_empty() {
                ManipulationStrategy::Honest
            } else {
                ManipulationStrategy::Scheduled(list)
            }
        })
        .collect()
}

/// The ordered spend positions (arm order) a plan implies, for reporting.
pub fn spend_order(plan: &[SpendTriple], num_arms: usize) -> Vec<usize> {
    let mut bursts: Vec<(usize, usize)> = plan
        .iter()
        .filter(|t| t.round > 1)
        .map(|t| (t.round, t.arm))
        .collect();
    bursts.sort_unstable();
    let mut order: Vec<usize> = bursts.into_iter().map(|(_, arm)| arm).collect();
    // arms whose budget fit entirely in the initial spend keep their sorted
    // position only implicitly; report them last in index order
    for arm in 0..num_arms {
        if !order.contains(&arm) {
            order.push(arm);
        }
    }
    order
}
