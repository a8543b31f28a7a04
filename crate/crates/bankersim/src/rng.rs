//! Counter-based random streams for reproducible parallel Monte Carlo.
//!
//! Every replica draws from its own ChaCha stream derived from
//! `(master seed, domain, replica index)`, so replicas are independent,
//! order-insensitive, and the aggregate output does not depend on how many
//! workers ran them.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Domain separators so different phases of a run never share a stream.
pub mod domains {
    pub const ENV_PATH: u64 = 1;
    pub const WALK_FREE: u64 = 2;
    pub const WALK_DEADLOCK: u64 = 3;
    pub const RSDE: u64 = 4;
    pub const RSDE_UNFOLDED: u64 = 5;
    pub const REGIMES: u64 = 6;
}

/// Stream for one replica of one simulation phase.
pub fn replica_rng(master_seed: u64, domain: u64, replica: u64) -> ChaCha8Rng {
    let mut rng =
        ChaCha8Rng::seed_from_u64(master_seed ^ domain.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.set_stream(replica);
    rng
}
