mod common;

use common::{dot, oracle_for, random_structure, random_vec, rel_diff};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use splinecolloc::abd::{factorize, random_abd, staircase_structure};
use splinecolloc::osc1d::block_structure;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_structures_match_dense_lu(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_structure(&mut rng, 200);
        let n = s.dim();
        let m = random_abd(s, 0.0, &mut rng);
        let oracle = oracle_for(&m);
        let fac = factorize(&m).unwrap();
        let f = random_vec(&mut rng, n);
        let g = random_vec(&mut rng, n);
        prop_assert!(rel_diff(&fac.solve(&f).unwrap(), &oracle.solve(&f)) < 1e-8);
        prop_assert!(rel_diff(&fac.solve_transpose(&g).unwrap(), &oracle.solve_transpose(&g)) < 1e-8);
    }

    #[test]
    fn adjoint_identity(seed in any::<u64>(), cells in 1usize..12, r in 2usize..7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_abd(block_structure(cells, r).unwrap(), 1.0, &mut rng);
        let fac = factorize(&m).unwrap();
        let n = fac.dim();
        let f = random_vec(&mut rng, n);
        let g = random_vec(&mut rng, n);
        let lhs = dot(&fac.solve(&f).unwrap(), &g);
        let rhs = dot(&f, &fac.solve_transpose(&g).unwrap());
        prop_assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(rhs.abs()).max(1.0));
    }

    #[test]
    fn residual_is_small(seed in any::<u64>(), n in 64usize..400) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = ((n as f64).sqrt() as usize).max(2);
        let m = random_abd(staircase_structure(n, w).unwrap(), 2.0, &mut rng);
        let f = random_vec(&mut rng, n);
        let x = factorize(&m).unwrap().solve(&f).unwrap();
        let back = m.apply(&x).unwrap();
        prop_assert!(rel_diff(&back, &f) < 1e-10);
    }
}

#[test]
fn oracle_agrees_with_itself_on_identity() {
    let id = splinecolloc::linalg::Matrix::identity(5);
    let o = common::DenseOracle::new(&id);
    let b = [1.0, -2.0, 3.0, 0.5, 0.0];
    assert_eq!(o.solve(&b), b);
    assert_eq!(o.solve_transpose(&b), b);
}
