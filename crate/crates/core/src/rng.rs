//! Seeded random streams. Each concern draws from its own ChaCha stream so
//! changing one (e.g. loss draws) never perturbs another (e.g. placement).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const STREAM_TOPOLOGY: u64 = 1;
pub const STREAM_TRAFFIC: u64 = 2;
pub const STREAM_ROUTING: u64 = 3;
pub const STREAM_LINK: u64 = 4;

pub fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
