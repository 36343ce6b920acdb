//! Seeded randomness. Every multi-start or sampling routine derives
//! independent per-task seeds from a master seed so results do not depend
//! on scheduling.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// splitmix64 finalizer over `(master, index)`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master
        .wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn normal_vec(rng: &mut SeededRng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// Uniform point on the unit sphere in `R^n`.
pub fn unit_vec(rng: &mut SeededRng, n: usize) -> DVector<f64> {
    loop {
        let v = DVector::from_vec(normal_vec(rng, n));
        let nrm = v.norm();
        if nrm > 1e-12 {
            return v / nrm;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_seeds_differ_and_repeat() {
        assert_ne!(derive_seed(1, 0), derive_seed(1, 1));
        assert_ne!(derive_seed(1, 0), derive_seed(2, 0));
        assert_eq!(derive_seed(7, 3), derive_seed(7, 3));
    }

    #[test]
    fn unit_vectors_are_unit() {
        let mut rng = seeded(3);
        for n in 1..5 {
            assert!((unit_vec(&mut rng, n).norm() - 1.0).abs() < 1e-12);
        }
    }
}
