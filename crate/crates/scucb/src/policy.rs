//! Sequential decision policies behind one interface: initialize over the
//! first `m` rounds, then select a subset and update from semi-bandit
//! feedback each round.
//!
//! The budget-aware UCB policy widens each arm's confidence radius by
//! `B_max / K_i`, the worst-case mean inflation an arm with lifetime budget
//! `B_max` can still be hiding after `K_i` pulls. Its naive counterpart is
//! the same policy with that term forced to zero. The Thompson and
//! exponential-weight baselines share the counter/mean bookkeeping.

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::{oracle_select, InstanceShape, OracleSpec};

/// Which decision rule a [`PolicyState`] runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum PolicyKind {
    /// Budget-aware combinatorial UCB.
    Scucb,
    /// Plain combinatorial UCB (budget term forced to zero).
    Cucb,
    /// Combinatorial Thompson sampling with per-arm Beta posteriors.
    Tscb,
    /// Combinatorial exponential weights.
    Exp3Cb,
}

impl PolicyKind {
    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Scucb => "scucb",
            PolicyKind::Cucb => "cucb",
            PolicyKind::Tscb => "tscb",
            PolicyKind::Exp3Cb => "exp3cb",
        }
    }
}

/// Exponential-weights knobs. Inclusion probabilities under the
/// without-replacement draw have no closed form, so they are estimated by
/// Monte Carlo with `mc_samples` draws per update.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Exp3Params {
    pub learning_rate: f64,
    pub mc_samples: usize,
}

impl Default for Exp3Params {
    fn default() -> Self {
        Self {
            learning_rate: 0.05,
            mc_samples: 1000,
        }
    }
}

const EXP3_WEIGHT_FLOOR: f64 = 1e-12;

/// The UCB index: `mu_tilde + gamma * sqrt(3 ln t / (2 K)) + b_max / K`.
///
/// `gamma` tunes only the concentration term here; callers that tune the
/// budget term pre-scale `b_max`.
pub fn ucb_index(mean_estimate: f64, pulls: u64, round: usize, b_max: f64, gamma: f64) -> f64 {
    assert!(
        pulls >= 1,
        "index needs at least one pull (initialization guarantees this)"
    );
    assert!(
        round >= 2,
        "index is defined for post-initialization rounds"
    );
    let k = pulls as f64;
    mean_estimate + gamma * (3.0 * (round as f64).ln() / (2.0 * k)).sqrt() + b_max / k
}

/// Per-arm learner state shared by all policy kinds, plus kind-specific
/// extras (Beta posteriors, weights).
#[derive(Clone, Debug)]
pub struct PolicyState {
    kind: PolicyKind,
    gamma: f64,
    b_max: f64,
    scale_budget_bonus: bool,
    pull_counts: Vec<u64>,
    signal_sums: Vec<f64>,
    beta_posteriors: Vec<(f64, f64)>,
    weights: Vec<f64>,
    exp3: Exp3Params,
}

impl PolicyState {
    /// Fresh state: all counters zero, uniform priors and weights.
    /// `b_max` is the learner-side budget bound (any value >= 0; it need not
    /// equal the environment's true maximum).
    pub fn new(kind: PolicyKind, num_arms: usize, gamma: f64, b_max: f64) -> Self {
        Self {
            kind,
            gamma,
            b_max,
            scale_budget_bonus: false,
            pull_counts: vec![0; num_arms],
            signal_sums: vec![0.0; num_arms],
            beta_posteriors: vec![(1.0, 1.0); num_arms],
            weights: vec![1.0; num_arms],
            exp3: Exp3Params::default(),
        }
    }

    pub fn with_exp3_params(mut self, params: Exp3Params) -> Self {
        self.exp3 = params;
        self
    }

    /// Also scales the `b_max / K` term by gamma, reading the tuning factor
    /// as applying to the whole exploration bonus instead of just the
    /// concentration term.
    pub fn with_scaled_budget_bonus(mut self, scale: bool) -> Self {
        self.scale_budget_bonus = scale;
        self
    }

    pub fn kind(&self) -> PolicyKind {
        self.kind
    }

    pub fn num_arms(&self) -> usize {
        self.pull_counts.len()
    }

    pub fn pull_counts(&self) -> &[u64] {
        &self.pull_counts
    }

    pub fn signal_sums(&self) -> &[f64] {
        &self.signal_sums
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn b_max(&self) -> f64 {
        self.b_max
    }

    /// Running average of all observed (manipulated) signals for one arm.
    pub fn mean_estimate(&self, arm: usize) -> f64 {
        if self.pull_counts[arm] == 0 {
            0.0
        } else {
            self.signal_sums[arm] / self.pull_counts[arm] as f64
        }
    }

    fn effective_b_max(&self) -> f64 {
        let b = match self.kind {
            PolicyKind::Scucb => self.b_max,
            _ => 0.0,
        };
        if self.scale_budget_bonus {
            self.gamma * b
        } else {
            b
        }
    }

    /// UCB index vector fed to the oracle.
    pub fn indices(&self, round: usize) -> Vec<f64> {
        let b = self.effective_b_max();
        (0..self.num_arms())
            .map(|i| {
                ucb_index(
                    self.mean_estimate(i),
                    self.pull_counts[i],
                    round,
                    b,
                    self.gamma,
                )
            })
            .collect()
    }

    /// Plays the deterministic initialization schedule: round `t` plays arm
    /// `t` (1-indexed) plus the lowest-indexed other arms up to the action
    /// size, so every arm has at least one pull afterwards. `env_round`
    /// receives `(round, subset)` and returns the observed signals.
    pub fn initialize<F>(
        &mut self,
        action_size: usize,
        rng: &mut ChaCha12Rng,
        mut env_round: F,
    ) -> Result<()>
    where
        F: FnMut(usize, &[usize]) -> Result<Vec<f64>>,
    {
        let m = self.num_arms();
        if action_size < 1 || action_size > m {
            return Err(Error::Subset(format!(
                "action size {action_size} not in [1, {m}]"
            )));
        }
        if self.pull_counts.iter().any(|&c| c != 0) {
            return Err(Error::Config("initialize requires a fresh state".into()));
        }
        for t in 1..=m {
            let subset = initialization_subset(m, action_size, t);
            let observed = env_round(t, &subset)?;
            self.fold_observations(&subset, &observed, rng)?;
        }
        Ok(())
    }

    /// Chooses the round-`t` subset. UCB kinds go through the oracle; the
    /// exponential-weights kind draws `k` distinct arms from its normalized
    /// weights without replacement. Returns the subset and whether the
    /// oracle's failure branch fired.
    pub fn select(
        &self,
        round: usize,
        oracle: &OracleSpec,
        shape: &InstanceShape,
        policy_rng: &mut ChaCha12Rng,
        oracle_rng: &mut ChaCha12Rng,
    ) -> Result<(Vec<usize>, bool)> {
        match self.kind {
            PolicyKind::Scucb | PolicyKind::Cucb => {
                let outcome = oracle_select(oracle, &self.indices(round), shape, oracle_rng)?;
                Ok((outcome.subset, outcome.oracle_failed))
            }
            PolicyKind::Tscb => {
                let samples: Vec<f64> = self
                    .beta_posteriors
                    .iter()
                    .map(|&(a, b)| {
                        Beta::new(a, b)
                            .expect("posterior parameters stay positive")
                            .sample(policy_rng)
                    })
                    .collect();
                let outcome = oracle_select(oracle, &samples, shape, oracle_rng)?;
                Ok((outcome.subset, outcome.oracle_failed))
            }
            PolicyKind::Exp3Cb => {
                if shape.num_arms != self.num_arms() || shape.action_size > self.num_arms() {
                    return Err(Error::Shape {
                        got: shape.num_arms,
                        expected: self.num_arms(),
                    });
                }
                let subset = weighted_sample_without_replacement(
                    &self.weights,
                    shape.action_size,
                    policy_rng,
                );
                Ok((subset, false))
            }
        }
    }

    /// Folds one round of semi-bandit feedback into the state. `observed`
    /// carries one signal per subset member, in subset order.
    pub fn update(
        &mut self,
        subset: &[usize],
        observed: &[f64],
        round: usize,
        rng: &mut ChaCha12Rng,
    ) -> Result<()> {
        let _ = round;
        if self.kind == PolicyKind::Exp3Cb {
            self.exp3_reweight(subset, observed, rng)?;
        }
        self.fold_observations(subset, observed, rng)
    }

    /// Shared counter/mean/posterior bookkeeping for selected arms only.
    fn fold_observations(
        &mut self,
        subset: &[usize],
        observed: &[f64],
        rng: &mut ChaCha12Rng,
    ) -> Result<()> {
        if subset.len() != observed.len() {
            return Err(Error::Shape {
                got: observed.len(),
                expected: subset.len(),
            });
        }
        for (&arm, &signal) in subset.iter().zip(observed) {
            if arm >= self.num_arms() {
                return Err(Error::ArmIndex {
                    arm,
                    num_arms: self.num_arms(),
                });
            }
            self.pull_counts[arm] += 1;
            self.signal_sums[arm] += signal;
            if self.kind == PolicyKind::Tscb {
                // signals can exceed 1 under manipulation; clip before the
                // Bernoulli conversion to keep the Beta update conjugate
                let p = signal.clamp(0.0, 1.0);
                if rng.gen::<f64>() < p {
                    self.beta_posteriors[arm].0 += 1.0;
                } else {
                    self.beta_posteriors[arm].1 += 1.0;
                }
            }
        }
        Ok(())
    }

    /// Importance-weighted exponential update with losses clipped to [0, 1].
    /// Inclusion probabilities are Monte Carlo estimates under the current
    /// weights; weights are renormalized and floored so they stay positive
    /// and finite indefinitely.
    fn exp3_reweight(
        &mut self,
        subset: &[usize],
        observed: &[f64],
        rng: &mut ChaCha12Rng,
    ) -> Result<()> {
        let k = subset.len();
        let mc = self.exp3.mc_samples.max(1);
        let mut hits = vec![0u32; self.num_arms()];
        for _ in 0..mc {
            for arm in weighted_sample_without_replacement(&self.weights, k, rng) {
                hits[arm] += 1;
            }
        }
        for (&arm, &signal) in subset.iter().zip(observed) {
            let p = (f64::from(hits[arm]) / mc as f64).max(0.5 / mc as f64);
            let loss = 1.0 - signal.clamp(0.0, 1.0);
            self.weights[arm] *= (-self.exp3.learning_rate * loss / p).exp();
        }
        let top = self
            .weights
            .iter()
            .cloned()
            .fold(f64::MIN_POSITIVE, f64::max);
        for w in &mut self.weights {
            *w = (*w / top).max(EXP3_WEIGHT_FLOOR);
        }
        Ok(())
    }
}

/// The deterministic initialization subset for round `t` (1-indexed): arm
/// `t-1` plus the lowest-indexed other arms.
pub fn initialization_subset(num_arms: usize, action_size: usize, round: usize) -> Vec<usize> {
    let lead = round - 1;
    let mut subset = vec![lead];
    for arm in 0..num_arms {
        if subset.len() == action_size {
            break;
        }
        if arm != lead {
            subset.push(arm);
        }
    }
    subset.sort_unstable();
    subset
}

/// Draws `k` distinct arms by repeated draws from the normalized weight
/// distribution, removing each winner.
fn weighted_sample_without_replacement(
    weights: &[f64],
    k: usize,
    rng: &mut impl Rng,
) -> Vec<usize> {
    let mut remaining: Vec<usize> = (0..weights.len()).collect();
    let mut chosen = Vec::with_capacity(k);
    for _ in 0..k {
        let total: f64 = remaining.iter().map(|&i| weights[i]).sum();
        let mut u = rng.gen::<f64>() * total;
        let mut pick = remaining.len() - 1;
        for (pos, &i) in remaining.iter().enumerate() {
            u -= weights[i];
            if u <= 0.0 {
                pick = pos;
                break;
            }
        }
        chosen.push(remaining.swap_remove(pick));
    }
    chosen.sort_unstable();
    chosen
}
