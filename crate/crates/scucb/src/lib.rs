//! Combinatorial bandit simulations under budget-constrained strategic
//! reward manipulation.
//!
//! A learner plays a size-`k` arm subset per round and sees one signal per
//! pulled arm. Each arm may inflate its emitted signal by a nonnegative
//! amount, capped by a lifetime budget. The budget-aware UCB policy defends
//! itself knowing only the largest budget across arms; its naive
//! counterpart, Thompson sampling, and exponential weights serve as
//! baselines. The crate bundles the environment, (alpha, beta)-approximation
//! oracles, regret/gap/budget analyses, a brute-force planner for colluding
//! arms, and a config-driven experiment harness behind the `scucb` binary.

pub mod collusion;
pub mod env;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod oracle;
pub mod policy;
pub mod rng;
