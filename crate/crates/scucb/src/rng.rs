//! Deterministic named random streams.
//!
//! Every replication owns a root seed. Substreams are derived by mixing the
//! root with a stream label (and an index for per-arm streams), so draws on
//! one stream never shift another. This is what makes paired comparisons
//! across sweep cells meaningful: two policies sharing a seed see identical
//! reward sequences whenever they pull the same arms, because each arm's
//! reward stream advances only when that arm is pulled.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

fn label_hash(label: &str) -> u64 {
    // FNV-1a; stable across platforms and versions.
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Derives the seed for stream `label[index]` under `root`.
pub fn stream_seed(root: u64, label: &str, index: u64) -> u64 {
    splitmix64(root ^ splitmix64(label_hash(label).wrapping_add(index)))
}

/// Opens the named substream as a seeded generator.
pub fn stream(root: u64, label: &str, index: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(stream_seed(root, label, index))
}

/// The full set of streams owned by one replication.
///
/// Policy and oracle randomness are isolated from environment randomness so
/// that changing the policy cannot perturb instance generation or rewards.
pub struct RunStreams {
    pub instance: ChaCha12Rng,
    pub rewards: Vec<ChaCha12Rng>,
    pub strategies: Vec<ChaCha12Rng>,
    pub policy: ChaCha12Rng,
    pub oracle: ChaCha12Rng,
}

impl RunStreams {
    pub fn new(root: u64, num_arms: usize) -> Self {
        Self {
            instance: stream(root, "instance", 0),
            rewards: (0..num_arms)
                .map(|i| stream(root, "reward", i as u64))
                .collect(),
            strategies: (0..num_arms)
                .map(|i| stream(root, "strategy", i as u64))
                .collect(),
            policy: stream(root, "policy", 0),
            oracle: stream(root, "oracle", 0),
        }
    }
}
