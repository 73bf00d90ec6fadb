use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use endochain::endo::{family_global_dimension, DEFAULT_PD_CAP};
use endochain::resolver::Resolver;
use endochain::{hom_lattice, ChainTree, CurveRing, FieldSpec, Lattice, LaurentPoly};

fn chain(c: &mut Criterion) {
    let mut g = c.benchmark_group("chain");
    for gens in [&[2u64, 7][..], &[3, 5], &[4, 5, 6, 7]] {
        g.bench_function(format!("{gens:?}"), |b| {
            b.iter(|| {
                let ring = CurveRing::semigroup(FieldSpec::Rational, black_box(gens)).unwrap();
                ChainTree::build(&ring).unwrap()
            })
        });
    }
    g.finish();
}

fn resolve(c: &mut Criterion) {
    let ring = CurveRing::semigroup(FieldSpec::Rational, &[3, 4]).unwrap();
    let f = ring.field();
    let ideal = Lattice::generate(
        ring.clone(),
        vec![0],
        &[vec![LaurentPoly::t_pow(f, 0)], vec![LaurentPoly::t_pow(f, 1)]],
    )
    .unwrap();
    let tree = ChainTree::build(&ring).unwrap();
    let resolver = Resolver::new(&tree);
    c.bench_function("resolve <1,t> over <3,4>", |b| {
        b.iter(|| resolver.resolve(black_box(&ideal)).unwrap())
    });
    let res = resolver.resolve(&ideal).unwrap();
    c.bench_function("certify <1,t> over <3,4>", |b| {
        b.iter(|| resolver.certify(black_box(&res)))
    });
}

fn homs(c: &mut Criterion) {
    let ring = CurveRing::semigroup(FieldSpec::Rational, &[3, 5]).unwrap();
    let m = ChainTree::build(&ring).unwrap().family().representation_module();
    c.bench_function("Hom(M, M) over <3,5>", |b| b.iter(|| hom_lattice(black_box(&m), &m)));
}

fn gldim(c: &mut Criterion) {
    let mut g = c.benchmark_group("gldim");
    g.sample_size(20);
    for gens in [&[2u64, 5][..], &[3, 4]] {
        let ring = CurveRing::semigroup(FieldSpec::Rational, gens).unwrap();
        let tree = ChainTree::build(&ring).unwrap();
        g.bench_function(format!("{gens:?}"), |b| {
            b.iter(|| family_global_dimension(black_box(&tree), DEFAULT_PD_CAP).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, chain, resolve, homs, gldim);
criterion_main!(benches);
