//! Deterministic random stream derivation.
//!
//! Every random quantity in a simulation is drawn from a ChaCha stream keyed
//! by the master seed and a stream identifier mixed from the realization
//! index, the purpose of the draws and (for rewards) the task and arm. Runs
//! therefore do not depend on the order in which realizations execute.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub(crate) const PURPOSE_MEANS: u64 = 1;
pub(crate) const PURPOSE_REWARDS: u64 = 2;
pub(crate) const PURPOSE_UNPAIRED: u64 = 3;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds a list of identifiers into one 64-bit stream id.
pub(crate) fn stream_id(parts: &[u64]) -> u64 {
    parts.iter().fold(0x243F_6A88_85A3_08D3, |acc, &p| {
        splitmix64(acc ^ splitmix64(p))
    })
}

/// Opens the stream `parts` under `master_seed`.
pub fn open_stream(master_seed: u64, parts: &[u64]) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream_id(parts));
    rng
}
