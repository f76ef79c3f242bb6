//! Deterministic per-task random streams.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// Generator for task `task_index` of a run seeded with `master_seed`.
///
/// The ChaCha key comes from the master seed and the task index selects the
/// stream, so streams are independent and reproducible in any order.
pub fn seed_stream(master_seed: u64, task_index: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(master_seed);
    rng.set_stream(task_index);
    rng
}
