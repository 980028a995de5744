//! Deterministic seed and stream derivation.
//!
//! Everything stochastic in this crate is keyed by a single `u64` master
//! seed. Two rules cover all fan-out:
//!
//! * replica / sub-experiment seeds come from [`derive_seed`], a splitmix64
//!   mix of `(master, index)` — seed `k` does not depend on how many other
//!   indices are drawn;
//! * per-particle noise inside one integration uses ChaCha8 with the run
//!   seed as key and the particle slot as the ChaCha stream number
//!   ([`particle_stream`]), so draws for one particle are independent of the
//!   order particles are processed in.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// splitmix64 finalizer step.
pub fn splitmix64(z: u64) -> u64 {
    let mut z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Counter-based seed derivation: `mix(master ^ mix(index))`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index))
}

/// Seeded RNG for a whole run (sampler chains, Poisson draws).
pub fn run_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent noise stream for particle slot `slot` under `seed`.
pub fn particle_stream(seed: u64, slot: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(slot as u64);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    #[test]
    fn derivation_is_stable() {
        // frozen values: the derivation rule is an output-format contract
        assert_eq!(derive_seed(0, 0), 12035550249420947055);
        assert_eq!(derive_seed(1, 0), 627405149472732430);
        assert_eq!(derive_seed(1, 1), 16860738450190168606);
        assert_ne!(derive_seed(1, 0), derive_seed(2, 0));
    }

    #[test]
    fn particle_streams_are_independent_of_order() {
        let mut a0 = particle_stream(7, 0);
        let mut a1 = particle_stream(7, 1);
        let first_of_0 = a0.next_u64();
        let first_of_1 = a1.next_u64();
        // re-derive in the opposite order
        let mut b1 = particle_stream(7, 1);
        let mut b0 = particle_stream(7, 0);
        assert_eq!(b0.next_u64(), first_of_0);
        assert_eq!(b1.next_u64(), first_of_1);
        assert_ne!(first_of_0, first_of_1);
    }
}
