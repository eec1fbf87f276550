mod common;

use common::*;
use locc_core::analysis::{is_extendable, is_irreducible, is_upb, opb_indistinguishable_general};
use locc_core::catalog::{family, FamilySpec};
use locc_core::classify::{class3_predicate, classify_3x3, classify_general, ClassTag, Verdict};
use locc_core::numerics::{kron, nullspace, ComplexMatrix};
use locc_core::{OrthogonalProductSet, ProductState};
use proptest::prelude::*;

fn verdict(e: &OrthogonalProductSet) -> (Verdict, Option<ClassTag>) {
    let r = classify_3x3(e).unwrap();
    (r.verdict, r.class_tag)
}

#[test]
fn named_sets() {
    assert_eq!(verdict(&b9()), (Verdict::Indistinguishable, Some(ClassTag::IrreducibleOpb)));
    assert_eq!(verdict(&b8()), (Verdict::Indistinguishable, Some(ClassTag::Class3)));
    assert_eq!(verdict(&tiles()), (Verdict::Indistinguishable, Some(ClassTag::Upb)));
    for k in 1..=8 {
        let e = b9().without(&format!("phi{k}")).unwrap();
        assert_eq!(verdict(&e), (Verdict::Distinguishable, None), "phi{k}");
    }
}

#[test]
fn b8_complement_is_the_center_state() {
    let r = classify_3x3(&b8()).unwrap();
    let c = r.witnesses.complement.clone().unwrap();
    assert!(same_ray(c.a(), &unit(3, 1), 1e-12) && same_ray(c.b(), &unit(3, 1), 1e-12));
    assert!(r.witnesses.revalidate(&b8()));
}

#[test]
fn removing_an_outer_state_aligns_the_complement() {
    let e = b9().without("phi1").unwrap();
    assert!(!class3_predicate(&e).unwrap());
    let r = classify_3x3(&e).unwrap();
    let hit = r.witnesses.alignment.unwrap();
    assert_eq!(e.state(hit.index).label(), "phi2");
    assert!(r.witnesses.revalidate(&e));
}

#[test]
fn complement_oracle_agrees_on_b8() {
    // kernel of the 8 tensors, computed from the stacked conjugate rows
    let e = b8();
    let rows = ComplexMatrix::from_fn(8, 9, |r, c| e.state(r).tensor()[c].conj());
    let kernel = nullspace(&rows, tol());
    assert_eq!(kernel.dim(), 1);
    assert!(same_ray(&kernel.basis()[0], &kron(&unit(3, 1), &unit(3, 1)), 1e-12));
}

#[test]
fn exhaustive_b9_sweep() {
    let e = b9();
    let mut hits = Vec::new();
    for mask in 0u64..512 {
        let s = subset(&e, mask);
        let r = classify_3x3(&s).unwrap();
        assert_eq!(r.verdict == Verdict::Indistinguishable, r.class_tag.is_some());
        assert_ne!(r.verdict, Verdict::Unknown);
        if r.verdict == Verdict::Indistinguishable {
            assert!(r.witnesses.revalidate(&s));
            hits.push(mask);
        }
    }
    assert_eq!(hits, vec![0xff, 0x1ff]);
}

#[test]
fn upb_oracle_agrees_on_b9_five_subsets() {
    let e = b9();
    for mask in (0u64..512).filter(|m| m.count_ones() == 5) {
        let s = subset(&e, mask);
        assert_eq!(is_extendable(&s).unwrap(), extendable_oracle(&s), "mask {mask:#x}");
        assert!(!is_upb(&s).unwrap());
    }
    assert!(!extendable_oracle(&tiles()));
    for drop in 0..5 {
        let four: Vec<usize> = (0..5).filter(|&k| k != drop).collect();
        assert!(extendable_oracle(&tiles().subset(&four)));
        assert!(!is_upb(&tiles().subset(&four)).unwrap());
    }
}

#[test]
fn irreducibility_oracle_and_product_subsets_agree() {
    let mut sets = vec![computational(3, 3), b9()];
    sets.extend((0..30).map(random_r9_basis));
    for e in &sets {
        let irreducible = is_irreducible(e);
        assert_eq!(irreducible, irreducible_oracle(e));
        assert_eq!(opb_indistinguishable_general(e).unwrap(), irreducible);
        assert_eq!(classify_3x3(e).unwrap().verdict == Verdict::Indistinguishable, irreducible);
    }
}

#[test]
fn class3_random_family() {
    for seed in [7, 8, 9] {
        let e = family(&FamilySpec::Class3Random(seed)).unwrap();
        assert_eq!(verdict(&e), (Verdict::Indistinguishable, Some(ClassTag::Class3)));
    }
}

#[test]
fn general_dimensions() {
    let theta = family(&FamilySpec::Theta2x4(0.4)).unwrap();
    assert_eq!(classify_general(&theta).unwrap().rationale, "2xn");
    assert_eq!(classify_general(&computational(1, 5)).unwrap().verdict, Verdict::Distinguishable);
    assert_eq!(
        classify_general(&b9()).unwrap().class_tag,
        Some(ClassTag::IrreducibleOpb)
    );

    // six states of 3x4 chained by overlaps on both sides; neither unextendable
    // nor one short of a basis
    let t = tol();
    let v = |x: &[f64]| locc_core::numerics::real_vector(x);
    let states = vec![
        ProductState::new("s1", v(&[1.0, 0.0, 0.0]), v(&[1.0, 1.0, 0.0, 0.0]), t).unwrap(),
        ProductState::new("s2", v(&[1.0, 0.0, 0.0]), v(&[1.0, -1.0, 0.0, 0.0]), t).unwrap(),
        ProductState::new("s3", v(&[1.0, 1.0, 0.0]), v(&[0.0, 0.0, 1.0, 0.0]), t).unwrap(),
        ProductState::new("s4", v(&[1.0, -1.0, 0.0]), v(&[0.0, 0.0, 1.0, 0.0]), t).unwrap(),
        ProductState::new("s5", v(&[0.0, 0.0, 1.0]), v(&[1.0, 0.0, 1.0, 0.0]), t).unwrap(),
        ProductState::new("s6", v(&[0.0, 1.0, 1.0]), v(&[0.0, 1.0, 0.0, 0.0]), t).unwrap(),
    ];
    let e = OrthogonalProductSet::new(3, 4, states, t).unwrap();
    assert!(irreducible_oracle(&e));
    let r = classify_general(&e).unwrap();
    assert_eq!(r.verdict, Verdict::Unknown);
    assert_eq!(r.rationale, "uncharacterized");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn classification_is_local_unitary_invariant(seed in any::<u64>(), which in 0usize..4, mask in 0u64..512) {
        let e = match which {
            0 => b9(),
            1 => b8(),
            2 => tiles(),
            _ => subset(&b9(), mask),
        };
        let moved = conjugated(&e, seed);
        prop_assert_eq!(verdict(&e), verdict(&moved));
        let r = classify_3x3(&moved).unwrap();
        prop_assert!(r.witnesses.revalidate(&moved));
    }
}
