use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tfsim::hafnian::{
    hafnian, hafnian_perm_sum, hafnian_repeated, reduce, ReductionPattern, SymMatrix,
};

fn rel_err(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

fn random(dim: usize, seed: u64) -> SymMatrix {
    SymMatrix::random(dim, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn fast_path_matches_permutation_sum(seed in any::<u64>(), half in 1usize..=4) {
        let b = random(2 * half, seed);
        prop_assert!(rel_err(hafnian(&b).unwrap(), hafnian_perm_sum(&b).unwrap()) < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn simultaneous_permutation_invariance(seed in any::<u64>(), half in 1usize..=6) {
        let dim = 2 * half;
        let b = random(dim, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let mut perm: Vec<usize> = (0..dim).collect();
        perm.shuffle(&mut rng);
        let m = b.to_matrix();
        let permuted = SymMatrix::new(&DMatrix::from_fn(dim, dim, |i, j| m[(perm[i], perm[j])])).unwrap();
        prop_assert!(rel_err(hafnian(&permuted).unwrap(), hafnian(&b).unwrap()) < 1e-10);
    }

    #[test]
    fn homogeneous_of_degree_half_dim(seed in any::<u64>(), half in 1usize..=5, re in -2.0f64..2.0, im in -2.0f64..2.0) {
        let b = random(2 * half, seed);
        let c = Complex64::new(re, im);
        let scaled = SymMatrix::new(&(b.to_matrix() * c)).unwrap();
        let expected = hafnian(&b).unwrap() * c.powu(half as u32);
        prop_assert!((hafnian(&scaled).unwrap() - expected).norm() <= 1e-10 * expected.norm().max(1.0));
    }

    #[test]
    fn diagonal_is_ignored(seed in any::<u64>(), half in 1usize..=5) {
        let b = random(2 * half, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(!seed);
        let mut m = b.to_matrix();
        for i in 0..2 * half {
            m[(i, i)] = Complex64::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
        }
        let changed = SymMatrix::new(&m).unwrap();
        prop_assert_eq!(hafnian(&changed).unwrap(), hafnian(&b).unwrap());
        if half <= 4 {
            prop_assert_eq!(hafnian_perm_sum(&changed).unwrap(), hafnian_perm_sum(&b).unwrap());
        }
    }

    #[test]
    fn repeated_dp_matches_explicit_reduction(seed in any::<u64>(), pattern in prop::collection::vec(0usize..3, 1..=3)) {
        let n = pattern.len();
        let a = random(2 * n, seed);
        let p = ReductionPattern(pattern.clone());
        let direct = hafnian(&reduce(&a, &p).unwrap()).unwrap();
        let reps: Vec<usize> = pattern.iter().chain(&pattern).copied().collect();
        let dp = hafnian_repeated(&a, &reps).unwrap();
        prop_assert!((dp - direct).norm() <= 1e-10 * direct.norm().max(1.0));
    }
}

#[test]
fn parallel_and_sequential_sums_are_bitwise_identical() {
    let b = random(14, 77);
    let first = hafnian(&b).unwrap();
    for _ in 0..3 {
        assert_eq!(hafnian(&b).unwrap(), first);
    }
}
