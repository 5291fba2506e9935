use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use super::SetCoverError;

/// Number of random variants drawn per radius by default.
pub const DEFAULT_VARIANTS: usize = 3;

/// `variants` independent uniform `k`-subsets of `0..n`, each sorted.
/// The same seed always yields the same subsets.
pub fn random_baseline(n: usize, k: usize, seed: u64, variants: usize) -> Result<Vec<Vec<usize>>, SetCoverError> {
    if k > n {
        return Err(SetCoverError::BaselineTooLarge { k, n });
    }
    if variants == 0 {
        return Err(SetCoverError::ZeroVariants);
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    Ok((0..variants)
        .map(|_| {
            let mut subset = rand::seq::index::sample(&mut rng, n, k).into_vec();
            subset.sort_unstable();
            subset
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_draw_is_everything() {
        for seed in [0, 7, 12345] {
            let v = random_baseline(10, 10, seed, 2).unwrap();
            assert!(v.iter().all(|s| *s == (0..10).collect::<Vec<_>>()));
        }
    }

    #[test]
    fn deterministic_per_seed() {
        assert_eq!(random_baseline(243, 5, 3, 3).unwrap(), random_baseline(243, 5, 3, 3).unwrap());
        assert_ne!(random_baseline(243, 5, 3, 3).unwrap(), random_baseline(243, 5, 4, 3).unwrap());
    }

    #[test]
    fn subsets_are_distinct_and_in_range() {
        for s in random_baseline(50, 7, 1, DEFAULT_VARIANTS).unwrap() {
            assert_eq!(s.len(), 7);
            assert!(s.windows(2).all(|w| w[0] < w[1]));
            assert!(s.iter().all(|&i| i < 50));
        }
    }

    #[test]
    fn argument_errors() {
        assert_eq!(random_baseline(3, 4, 0, 1), Err(SetCoverError::BaselineTooLarge { k: 4, n: 3 }));
        assert_eq!(random_baseline(3, 1, 0, 0), Err(SetCoverError::ZeroVariants));
    }
}
