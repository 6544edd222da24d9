//! Deterministic derivation of independent RNG substream seeds.
//!
//! Campaign generation, per-patch sampling, and per-step noise each need
//! their own stream so results do not depend on evaluation order or worker
//! count. Seeds are derived by folding tag values through splitmix64.

const GAMMA: u64 = 0x9e3779b97f4a7c15;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(GAMMA);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Seed for the substream identified by `tags` under a master seed.
pub fn substream(master: u64, tags: &[u64]) -> u64 {
    let mut state = master;
    let mut out = splitmix64(&mut state);
    for &t in tags {
        state ^= t;
        out ^= splitmix64(&mut state);
    }
    out
}
