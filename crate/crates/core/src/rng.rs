use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent stream keyed on (seed, replication, scenario).
pub fn scenario_rng(seed: u64, replication: u32, scenario: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((replication as u64) << 32) | scenario as u64);
    rng
}
