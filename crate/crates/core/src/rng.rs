//! Counter-based random streams.
//!
//! Every consumer of randomness draws from a ChaCha8 stream whose key is the
//! expanded master seed and whose 64-bit stream id encodes the logical owner
//! (path, particle, estimator). Results therefore do not depend on which
//! worker runs which path, or in which order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Bits reserved for the particle index inside a path stream id.
const PARTICLE_BITS: u32 = 12;

/// Stream-id namespaces, kept disjoint so that e.g. the Bessel check never
/// reuses a particle noise stream.
pub mod domain {
    pub const PARTICLE_NOISE: u64 = 0;
    pub const INITIAL_STATE: u64 = 1;
    pub const BESSEL: u64 = 2;
    pub const PROJECTIONS: u64 = 3;
    pub const PERMUTATIONS: u64 = 4;
    pub const QUADRATURE: u64 = 5;
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn key(master_seed: u64, domain: u64) -> [u8; 32] {
    let mut state = master_seed ^ domain.wrapping_mul(0xD6E8_FEB8_6659_FD93);
    let mut out = [0u8; 32];
    for chunk in out.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    out
}

/// A generic stream in `domain` with id `stream`.
pub fn stream(master_seed: u64, domain: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::from_seed(key(master_seed, domain));
    rng.set_stream(stream);
    rng
}

/// Noise stream for one particle of one path.
pub fn particle_stream(master_seed: u64, path: u64, particle: usize) -> ChaCha8Rng {
    debug_assert!(particle < (1 << PARTICLE_BITS));
    stream(
        master_seed,
        domain::PARTICLE_NOISE,
        (path << PARTICLE_BITS) | particle as u64,
    )
}

/// Run `f` inside a dedicated pool of `workers` threads.
pub fn with_workers<R: Send>(workers: usize, f: impl FnOnce() -> R + Send) -> R {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .expect("thread pool construction");
    pool.install(f)
}
