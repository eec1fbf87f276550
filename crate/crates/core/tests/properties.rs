mod common;

use common::*;
use locc_core::analysis::{is_irreducible, orthogonal_complement, reducibility_witness};
use locc_core::numerics::{c64, equal_up_to_phase, random_state, schmidt_factor, ComplexVector};
use locc_core::{Error, OrthogonalProductSet, ProductState};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn base_set(which: usize, seed: u64) -> OrthogonalProductSet {
    match which {
        0 => b9(),
        1 => b8(),
        2 => tiles(),
        3 => computational(3, 3),
        _ => random_r9_basis(seed),
    }
}

fn tensor_distance(x: &ComplexVector, y: &ComplexVector) -> f64 {
    // distance between rays
    let phase = x.dotc(y);
    let phase = if phase.norm() > 0.0 { phase / phase.norm() } else { phase };
    (x * phase - y).norm()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn schmidt_factor_inverts_the_tensor_product(seed in any::<u64>(), m in 1usize..6, n in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_state(&mut rng, m);
        let b = random_state(&mut rng, n);
        let t = kron_oracle(&a, &b);
        let (fa, fb) = schmidt_factor(&t, m, n, tol()).unwrap();
        prop_assert!((fa.norm() - 1.0).abs() < 1e-12 && (fb.norm() - 1.0).abs() < 1e-12);
        prop_assert!(tensor_distance(&kron_oracle(&fa, &fb), &t) <= 1e-10);
    }

    #[test]
    fn entangled_vectors_are_refused(seed in any::<u64>(), m in 2usize..5, n in 2usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = kron_oracle(&random_state(&mut rng, m), &random_state(&mut rng, n))
            + kron_oracle(&random_state(&mut rng, m), &random_state(&mut rng, n));
        let refused = matches!(schmidt_factor(&t, m, n, tol()), Err(Error::EntangledVector { .. }));
        prop_assert!(refused);
    }

    #[test]
    fn local_unitaries_preserve_structure(seed in any::<u64>(), which in 0usize..5, mask in 1u64..512) {
        let base = base_set(which, seed);
        let e = subset(&base, mask % (1 << base.len()) | 1);
        let moved = rephased(&conjugated(&e, seed), seed);
        prop_assert_eq!(is_irreducible(&e), is_irreducible(&moved));
        prop_assert_eq!(is_irreducible(&moved), irreducible_oracle(&moved));
        prop_assert_eq!(e.aligned_pairs(), moved.aligned_pairs());
        if let Some(w) = reducibility_witness(&moved) {
            prop_assert!(w.check(&moved));
        }
    }

    #[test]
    fn broken_orthogonality_survives_local_unitaries(seed in any::<u64>(), k in 1usize..9) {
        // tilt one state of B9 towards phi1; the set is invalid before and after W_A ⊗ W_B
        let e = b9();
        let tilted = e.state(k).a() + e.state(0).a() * c64(0.1, 0.0);
        let mut states: Vec<ProductState> = e.states().to_vec();
        states[k] = ProductState::new(e.state(k).label(), tilted, e.state(0).b().clone(), tol()).unwrap();
        let (wa, wb) = local_unitaries(&e, seed);
        let moved: Vec<ProductState> = states.iter().map(|s| s.transformed(&wa, &wb)).collect();
        let before = OrthogonalProductSet::new(3, 3, states, tol());
        let after = OrthogonalProductSet::new(3, 3, moved, tol());
        prop_assert!(before.is_err() && after.is_err());
    }

    #[test]
    fn complement_restores_the_removed_state(seed in any::<u64>(), k in 0usize..9) {
        let full = conjugated(&random_r9_basis(seed), seed);
        let removed = full.state(k).clone();
        let e = full.without(removed.label()).unwrap();
        let perp = orthogonal_complement(&e).unwrap();
        prop_assert!(equal_up_to_phase(perp.a(), removed.a(), tol()).unwrap());
        prop_assert!(equal_up_to_phase(perp.b(), removed.b(), tol()).unwrap());
        prop_assert!(e.with_state(perp).unwrap().is_basis());
    }
}

#[test]
fn kron_matches_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for (m, n) in [(1, 1), (2, 3), (4, 2)] {
        let a = random_state(&mut rng, m);
        let b = random_state(&mut rng, n);
        assert!((locc_core::numerics::kron(&a, &b) - kron_oracle(&a, &b)).norm() < 1e-15);
    }
}

#[test]
fn rank_agrees_with_elimination() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for d in 1..6 {
        for count in 1..=d + 1 {
            let mut vs: Vec<ComplexVector> = (0..count).map(|_| random_state(&mut rng, d)).collect();
            if count > 1 {
                let dup = &vs[0] * c64(2.0, 0.0) - &vs[1];
                vs.push(dup);
            }
            let refs: Vec<&ComplexVector> = vs.iter().collect();
            assert_eq!(
                locc_core::numerics::rank(&refs, d, tol()).unwrap(),
                rank_oracle(&vs, 1e-9),
                "d={d} count={count}"
            );
        }
    }
}
