use std::collections::BTreeSet;

use proptest::prelude::*;

use endochain::resolver::Resolver;
use endochain::{ChainTree, CurveRing, FieldSpec, Lattice, LaurentPoly, Scalar};

fn poly(field: FieldSpec, terms: &[(i64, i64)]) -> LaurentPoly {
    LaurentPoly::from_terms(terms.iter().map(|&(e, c)| (e, field.from_i64(c))))
}

fn terms() -> impl Strategy<Value = Vec<(i64, i64)>> {
    prop::collection::vec((-3i64..8, -5i64..6), 0..5)
}

fn field() -> impl Strategy<Value = FieldSpec> {
    prop_oneof![
        Just(FieldSpec::Rational),
        Just(FieldSpec::Prime { p: 7 }),
        Just(FieldSpec::Prime { p: 101 })
    ]
}

/// Semigroup elements up to `bound`, by brute force.
fn semigroup_elements(gens: &[u64], bound: u64) -> BTreeSet<u64> {
    let mut s = BTreeSet::from([0]);
    for x in 1..=bound {
        if gens.iter().any(|&g| g <= x && s.contains(&(x - g))) {
            s.insert(x);
        }
    }
    s
}

fn coprime_gens() -> impl Strategy<Value = Vec<u64>> {
    prop::collection::vec(2u64..6, 1..4).prop_filter("gcd 1", |g| g.iter().fold(0u64, |a, &b| num_gcd(a, b)) == 1)
}

fn num_gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        num_gcd(b, a % b)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn laurent_ring_laws(f in field(), a in terms(), b in terms(), c in terms()) {
        let (a, b, c) = (poly(f, &a), poly(f, &b), poly(f, &c));
        prop_assert_eq!(a.mul(&b), b.mul(&a));
        prop_assert_eq!(a.mul(&b.add(&c)), a.mul(&b).add(&a.mul(&c)));
        prop_assert_eq!(a.mul(&b).mul(&c), a.mul(&b.mul(&c)));
        prop_assert!(a.sub(&a).is_zero());
        if let (Some(va), Some(vb)) = (a.valuation(), b.valuation()) {
            prop_assert_eq!(a.mul(&b).valuation(), Some(va + vb));
        }
    }

    #[test]
    fn division_with_remainder(f in field(), a in terms(), d in terms()) {
        let (a, d) = (poly(f, &a), poly(f, &d));
        prop_assume!(!d.is_zero());
        let (q, r) = a.div_rem(&d);
        prop_assert_eq!(q.mul(&d).add(&r), a);
    }

    #[test]
    fn semigroup_ring_invariants(gens in coprime_gens()) {
        let ring = CurveRing::semigroup(FieldSpec::Rational, &gens).unwrap();
        let elems = semigroup_elements(&gens, 80);
        let gaps = (0..80u64).filter(|x| !elems.contains(x)).count();
        let conductor = (0..=80u64).find(|&c| (c..=80).all(|x| elems.contains(&x))).unwrap();
        prop_assert_eq!(ring.delta(), gaps);
        prop_assert_eq!(ring.conductor(), &[conductor as i64][..]);
        let values: Vec<i64> = elems.iter().map(|&x| x as i64).filter(|&x| x < 40).collect();
        prop_assert_eq!(ring.value_set(40), values);
        prop_assert_eq!(ring.report().unwrap().multiplicity as u64, *elems.iter().find(|&&x| x > 0).unwrap());
    }

    #[test]
    fn chain_reaches_normalization(gens in coprime_gens()) {
        let ring = CurveRing::semigroup(FieldSpec::Rational, &gens).unwrap();
        let tree = ChainTree::build(&ring).unwrap();
        prop_assert!(tree.normalization_check());
        prop_assert!(tree.strictness_check());
        prop_assert!(tree.depth() <= ring.delta());
    }

    #[test]
    fn lattice_generation_is_canonical(gens in coprime_gens(), exps in prop::collection::vec(0i64..9, 1..4)) {
        let ring = CurveRing::semigroup(FieldSpec::Rational, &gens).unwrap();
        let f = ring.field();
        let vecs: Vec<Vec<LaurentPoly>> = exps.iter().map(|&e| vec![LaurentPoly::t_pow(f, e)]).collect();
        let l = Lattice::generate(ring.clone(), vec![0], &vecs).unwrap();
        let again = Lattice::generate(ring.clone(), vec![0], &l.module_generators()).unwrap();
        prop_assert_eq!(&again, &l);
        let rev: Vec<_> = vecs.iter().rev().cloned().collect();
        prop_assert_eq!(&Lattice::generate(ring.clone(), vec![0], &rev).unwrap(), &l);
        for v in &vecs {
            prop_assert!(l.contains(v));
        }
        let r = Lattice::of_ring(&ring, ring.clone());
        prop_assert_eq!(l.sum(&r).unwrap(), r.sum(&l).unwrap());
    }

}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn ideals_resolve_with_certificates(gens in coprime_gens(), exps in prop::collection::vec(0i64..7, 1..3)) {
        let ring = CurveRing::semigroup(FieldSpec::Rational, &gens).unwrap();
        let f = ring.field();
        let vecs: Vec<Vec<LaurentPoly>> = exps.iter().map(|&e| vec![LaurentPoly::t_pow(f, e)]).collect();
        let l = Lattice::generate(ring.clone(), vec![0], &vecs).unwrap();
        let tree = ChainTree::build(&ring).unwrap();
        let resolver = Resolver::new(&tree);
        let res = resolver.resolve(&l).unwrap();
        let cert = resolver.certify(&res);
        prop_assert!(cert.passed(), "{:?}", cert);
    }
}

#[test]
fn prime_field_arithmetic() {
    let f = FieldSpec::Prime { p: 5 };
    let three = f.from_i64(3);
    let inv = three.inv().unwrap();
    assert_eq!(&three * &inv, f.one());
    assert_eq!(f.from_i64(-1), f.from_i64(4));
    let _: Scalar = f.from_i64(0);
}
