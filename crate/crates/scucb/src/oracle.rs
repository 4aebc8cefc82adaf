//! (alpha, beta)-approximation oracles: subset selectors that return an
//! alpha-fraction-of-optimal subset with probability at least beta, given an
//! arbitrary per-arm estimate vector.
//!
//! The failure-injected wrapper realizes beta < 1 reproducibly: with
//! probability `1 - beta` per call it discards the inner answer and returns a
//! uniformly random feasible subset, reporting which branch fired.

use rand::Rng;

use crate::env::{k_subsets, subset_count, ProblemInstance, RewardFamily};
use crate::error::{Error, Result};

/// Shape information an oracle needs about the problem; no ground truth.
#[derive(Clone, Debug)]
pub struct InstanceShape<'a> {
    pub num_arms: usize,
    pub action_size: usize,
    pub family: &'a RewardFamily,
}

impl<'a> InstanceShape<'a> {
    pub fn of(instance: &'a ProblemInstance) -> Self {
        Self {
            num_arms: instance.num_arms(),
            action_size: instance.action_size(),
            family: instance.family(),
        }
    }
}

#[derive(Clone, Debug)]
enum OracleKind {
    ExactTopK,
    GreedyCoverage,
    Failing {
        inner: Box<OracleSpec>,
        success_prob: f64,
    },
}

/// An oracle together with its declared (alpha, beta) guarantee.
#[derive(Clone, Debug)]
pub struct OracleSpec {
    kind: OracleKind,
}

impl OracleSpec {
    /// Picks the k largest estimates exactly: alpha = 1, beta = 1.
    pub fn exact_top_k() -> Self {
        Self {
            kind: OracleKind::ExactTopK,
        }
    }

    /// Standard greedy on the coverage objective: alpha = 1 - 1/e, beta = 1.
    pub fn greedy_coverage() -> Self {
        Self {
            kind: OracleKind::GreedyCoverage,
        }
    }

    /// Wraps `inner`, succeeding with probability `success_prob` per call and
    /// otherwise returning a uniformly random feasible subset.
    pub fn failing(inner: OracleSpec, success_prob: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&success_prob) {
            return Err(Error::Config(format!(
                "oracle success probability {success_prob} not in [0, 1]"
            )));
        }
        Ok(Self {
            kind: OracleKind::Failing {
                inner: Box::new(inner),
                success_prob,
            },
        })
    }

    pub fn alpha(&self) -> f64 {
        match &self.kind {
            OracleKind::ExactTopK => 1.0,
            OracleKind::GreedyCoverage => 1.0 - (-1.0f64).exp(),
            OracleKind::Failing { inner, .. } => inner.alpha(),
        }
    }

    pub fn beta(&self) -> f64 {
        match &self.kind {
            OracleKind::ExactTopK | OracleKind::GreedyCoverage => 1.0,
            OracleKind::Failing {
                inner,
                success_prob,
            } => inner.beta() * success_prob,
        }
    }
}

/// A selected subset plus whether a failure branch fired on this call.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleOutcome {
    pub subset: Vec<usize>,
    pub oracle_failed: bool,
}

/// Runs the oracle on an estimate vector. Estimates may exceed 1; only their
/// order (and, for coverage, their magnitudes) matters.
pub fn oracle_select(
    spec: &OracleSpec,
    estimates: &[f64],
    shape: &InstanceShape,
    rng: &mut impl Rng,
) -> Result<OracleOutcome> {
    if estimates.len() != shape.num_arms {
        return Err(Error::Shape {
            got: estimates.len(),
            expected: shape.num_arms,
        });
    }
    if shape.action_size < 1 || shape.action_size > shape.num_arms {
        return Err(Error::Subset(format!(
            "action size {} not in [1, {}]",
            shape.action_size, shape.num_arms
        )));
    }
    select_inner(spec, estimates, shape, rng)
}

fn select_inner(
    spec: &OracleSpec,
    estimates: &[f64],
    shape: &InstanceShape,
    rng: &mut impl Rng,
) -> Result<OracleOutcome> {
    match &spec.kind {
        OracleKind::ExactTopK => Ok(OracleOutcome {
            subset: top_k(estimates, shape.action_size),
            oracle_failed: false,
        }),
        OracleKind::GreedyCoverage => Ok(OracleOutcome {
            subset: greedy(estimates, shape),
            oracle_failed: false,
        }),
        OracleKind::Failing {
            inner,
            success_prob,
        } => {
            if rng.gen::<f64>() < *success_prob {
                select_inner(inner, estimates, shape, rng)
            } else {
                let mut subset =
                    rand::seq::index::sample(rng, shape.num_arms, shape.action_size).into_vec();
                subset.sort_unstable();
                Ok(OracleOutcome {
                    subset,
                    oracle_failed: true,
                })
            }
        }
    }
}

/// The k indices with the largest values; ties break toward the lowest index.
fn top_k(estimates: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..estimates.len()).collect();
    order.sort_by(|&a, &b| estimates[b].total_cmp(&estimates[a]).then(a.cmp(&b)));
    let mut subset = order[..k].to_vec();
    subset.sort_unstable();
    subset
}

/// Greedy marginal-gain selection on the objective evaluated at the
/// estimates; ties break toward the lowest index.
fn greedy(estimates: &[f64], shape: &InstanceShape) -> Vec<usize> {
    let mut chosen: Vec<usize> = Vec::with_capacity(shape.action_size);
    for _ in 0..shape.action_size {
        let mut best: Option<(usize, f64)> = None;
        for arm in 0..shape.num_arms {
            if chosen.contains(&arm) {
                continue;
            }
            let mut candidate = chosen.clone();
            candidate.push(arm);
            let value = shape.family.reward(estimates, &candidate);
            if best.is_none_or(|(_, v)| value > v) {
                best = Some((arm, value));
            }
        }
        let (arm, _) = best.expect("action size <= arm count");
        chosen.push(arm);
    }
    chosen.sort_unstable();
    chosen
}

/// Empirically measures how often the oracle's answer reaches
/// `alpha * OPT(estimates)`, with OPT found by exhaustive enumeration.
pub fn oracle_guarantee_check(
    spec: &OracleSpec,
    estimates: &[f64],
    shape: &InstanceShape,
    trials: usize,
    rng: &mut impl Rng,
) -> Result<f64> {
    if estimates.len() != shape.num_arms {
        return Err(Error::Shape {
            got: estimates.len(),
            expected: shape.num_arms,
        });
    }
    if shape.num_arms > 15 || subset_count(shape.num_arms, shape.action_size).is_none() {
        return Err(Error::Capability(format!(
            "guarantee check enumerates all subsets; {} arms is too many",
            shape.num_arms
        )));
    }
    let opt = k_subsets(shape.num_arms, shape.action_size)
        .map(|s| shape.family.reward(estimates, &s))
        .fold(f64::NEG_INFINITY, f64::max);
    let threshold = spec.alpha() * opt;
    let mut successes = 0usize;
    for _ in 0..trials {
        let outcome = oracle_select(spec, estimates, shape, rng)?;
        if shape.family.reward(estimates, &outcome.subset) >= threshold - 1e-12 {
            successes += 1;
        }
    }
    Ok(successes as f64 / trials as f64)
}
