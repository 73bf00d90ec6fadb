//! The example corpus and the seeded verification suites.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::chain::ChainTree;
use crate::curve_ring::{CurveRing, RingOptions};
use crate::endo::{family_global_dimension, fcmt_check, LatticeAlgebra, Pd};
use crate::error::Result;
use crate::field::FieldSpec;
use crate::io::{resolution_output, FieldDef, RingDefinition};
use crate::lattice::{hom_lattice, AmbVec, HomLattice, Lattice, LatticeMap};
use crate::polymat::PolyMatrix;
use crate::resolver::Resolver;
use crate::series::{BranchVector, LaurentPoly};

pub const SUITES: [&str; 7] = [
    "chain",
    "resolve",
    "gldim",
    "fcmt",
    "hom-restriction",
    "projectivization",
    "determinism",
];

pub const MIN_HOM_CASES: usize = 200;

#[derive(Clone, Debug, Serialize)]
pub struct CorpusEntry {
    pub name: String,
    pub definition: RingDefinition,
}

fn explicit(branches: usize, gens: &[&[&[(i64, i64)]]]) -> RingDefinition {
    RingDefinition::Explicit {
        field: Some(FieldDef::Rational),
        branches,
        generators: gens
            .iter()
            .map(|g| {
                g.iter()
                    .map(|p| p.iter().map(|&(e, c)| (e, c.to_string())).collect())
                    .collect()
            })
            .collect(),
    }
}

/// Semigroup rings, the node, the ordinary triple point, and two gluings of
/// two smooth branches.
pub fn corpus() -> Vec<CorpusEntry> {
    let mut out: Vec<CorpusEntry> = [
        &[1u64][..],
        &[2, 3],
        &[2, 5],
        &[2, 7],
        &[3, 4],
        &[3, 5],
        &[3, 4, 5],
        &[4, 5, 6, 7],
    ]
    .iter()
    .map(|g| CorpusEntry {
        name: format!("<{}>", g.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(",")),
        definition: RingDefinition::Semigroup {
            semigroup: g.to_vec(),
            field: None,
        },
    })
    .collect();
    out.push(CorpusEntry {
        name: "node".into(),
        definition: explicit(2, &[&[&[(1, 1)], &[]], &[&[], &[(1, 1)]]]),
    });
    out.push(CorpusEntry {
        name: "triple point".into(),
        definition: explicit(3, &[&[&[(1, 1)], &[], &[(1, 1)]], &[&[], &[(1, 1)], &[(1, 1)]]]),
    });
    out.push(CorpusEntry {
        name: "tacnode".into(),
        definition: explicit(2, &[&[&[(1, 1)], &[(1, 1)]], &[&[(2, 1)], &[(2, -1)]]]),
    });
    out.push(CorpusEntry {
        name: "A5".into(),
        definition: explicit(2, &[&[&[(1, 1)], &[(1, 1)]], &[&[(3, 1)], &[(3, -1)]]]),
    });
    out
}

#[derive(Clone, Copy, Debug)]
pub struct SuiteConfig {
    pub seed: u64,
    pub pd_cap: usize,
    pub options: RingOptions,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            seed: 0,
            pd_cap: crate::endo::DEFAULT_PD_CAP,
            options: RingOptions::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub name: String,
    pub cases: usize,
    pub passed: bool,
    pub failures: Vec<String>,
    pub notes: Vec<String>,
}

impl SuiteReport {
    fn new(name: &str, cases: usize, failures: Vec<String>, notes: Vec<String>) -> SuiteReport {
        SuiteReport {
            name: name.into(),
            cases,
            passed: failures.is_empty(),
            failures,
            notes,
        }
    }
}

fn small_coeff(field: FieldSpec, rng: &mut ChaCha8Rng) -> crate::field::Scalar {
    let c: i64 = *[-2, -1, 1, 2, 3].choose(rng).unwrap();
    field.from_i64(c)
}

/// A random element of `R` (truncations above the conductor stay in `R`).
pub fn random_ring_element(ring: &CurveRing, rng: &mut ChaCha8Rng) -> BranchVector {
    let h = ring.max_conductor() + 3;
    let field = ring.field();
    let mut acc = BranchVector::zero(ring.branches());
    for x in ring.basis_upto(h) {
        if rng.gen_bool(0.4) {
            let c = small_coeff(field, rng);
            acc = acc.add(&BranchVector(x.0.iter().map(|p| p.scale(&c)).collect()));
        }
    }
    acc
}

/// A random element of a hom lattice, as a matrix.
pub fn random_hom(h: &HomLattice, field: FieldSpec, rng: &mut ChaCha8Rng) -> PolyMatrix {
    let mut m = PolyMatrix::zero(h.rows, h.cols);
    for g in h.generator_matrices() {
        if rng.gen_bool(0.5) {
            let c = small_coeff(field, rng);
            for r in 0..m.rows {
                for k in 0..m.cols {
                    let v = m.get(r, k).add(&g.get(r, k).scale(&c));
                    m.set(r, k, v);
                }
            }
        }
    }
    m
}

fn conductor_element(ring: &CurveRing) -> AmbVec {
    ring.conductor()
        .iter()
        .map(|&c| LaurentPoly::t_pow(ring.field(), c.max(1)))
        .collect()
}

/// Torsion-free test lattices over `ring`: the ring, its maximal ideal, shifted
/// overrings, a random ideal, kernels of random maps between family members,
/// and a sum of two of these.
pub fn test_lattices(ring: &Arc<CurveRing>, tree: &ChainTree, rng: &mut ChaCha8Rng) -> Vec<(String, Lattice)> {
    let field = ring.field();
    let support = ring.support().to_vec();
    let fam = tree.family().as_lattices();
    let mut out: Vec<(String, Lattice)> = vec![
        ("R".into(), Lattice::of_ring(ring, ring.clone())),
        ("m".into(), Lattice::radical_of(ring)),
    ];
    let normal = CurveRing::normalization(field, support.clone(), ring.options());
    out.push((
        "t^2 normalization".into(),
        Lattice::of_ring(&normal, ring.clone()).shift(2),
    ));
    for (i, m) in tree.family().members.iter().enumerate().skip(1) {
        if m.support() == &support[..] && !m.is_dvr_product() {
            out.push((format!("t overring {i}"), fam[i].shift(1)));
        }
    }
    let x: AmbVec = random_ring_element(ring, rng)
        .0
        .iter()
        .zip(conductor_element(ring))
        .map(|(p, c)| p.add(&c))
        .collect();
    let y: AmbVec = random_ring_element(ring, rng).0;
    let ideal = Lattice::generate(ring.clone(), support.clone(), &[x.clone(), y.clone()])
        .or_else(|_| Lattice::generate(ring.clone(), support.clone(), &[x, y, conductor_element(ring)]))
        .expect("ideal containing a conductor element");
    out.push(("random ideal".into(), ideal));
    let mut kernels = 0;
    for _ in 0..12 {
        if kernels == 2 {
            break;
        }
        let a = &fam[rng.gen_range(0..fam.len())];
        let b = &fam[rng.gen_range(0..fam.len())];
        let z = &fam[rng.gen_range(0..fam.len())];
        let src = a.direct_sum(b);
        let f = random_hom(&hom_lattice(&src, z), field, rng);
        let Ok(map) = LatticeMap::new(src, z.clone(), f) else {
            continue;
        };
        let k = map.kernel().lattice;
        if !k.is_zero() {
            kernels += 1;
            out.push((format!("kernel {kernels}"), k));
        }
    }
    let last = fam.last().unwrap().clone();
    out.push(("m + last member".into(), Lattice::radical_of(ring).direct_sum(&last)));
    out
}

fn build(entry: &CorpusEntry, options: RingOptions) -> std::result::Result<(Arc<CurveRing>, ChainTree), String> {
    let ring = entry
        .definition
        .build_with(options)
        .map_err(|e| format!("{}: {e}", entry.name))?;
    let tree = ChainTree::build(&ring).map_err(|e| format!("{}: {e}", entry.name))?;
    Ok((ring, tree))
}

fn seed_for(seed: u64, index: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(index as u64))
}

fn collect(results: Vec<(Vec<String>, Vec<String>, usize)>) -> (Vec<String>, Vec<String>, usize) {
    let mut f = Vec::new();
    let mut n = Vec::new();
    let mut c = 0;
    for (a, b, k) in results {
        f.extend(a);
        n.extend(b);
        c += k;
    }
    (f, n, c)
}

pub fn chain_suite(corpus: &[CorpusEntry], cfg: &SuiteConfig) -> SuiteReport {
    let results: Vec<_> = corpus
        .par_iter()
        .map(|e| match build(e, cfg.options) {
            Err(msg) => (vec![msg], vec![], 1),
            Ok((_, tree)) => {
                let mut f = Vec::new();
                if let Some(d) = tree.normalization_diagnostic() {
                    f.push(format!("{}: {d}", e.name));
                }
                if !tree.strictness_check() {
                    f.push(format!("{}: chain is not strict", e.name));
                }
                let note = format!(
                    "{}: n = {}, {} family members",
                    e.name,
                    tree.depth(),
                    tree.family().members.len()
                );
                (f, vec![note], 1)
            }
        })
        .collect();
    let (f, n, c) = collect(results);
    SuiteReport::new("chain", c, f, n)
}

pub fn resolve_suite(corpus: &[CorpusEntry], cfg: &SuiteConfig) -> SuiteReport {
    let results: Vec<_> = corpus
        .par_iter()
        .enumerate()
        .map(|(i, e)| {
            let (ring, tree) = match build(e, cfg.options) {
                Ok(x) => x,
                Err(msg) => return (vec![msg], vec![], 1),
            };
            let mut rng = seed_for(cfg.seed, i);
            let lattices = test_lattices(&ring, &tree, &mut rng);
            let resolver = Resolver::new(&tree);
            let mut f = Vec::new();
            let mut lengths = Vec::new();
            for (name, l) in &lattices {
                match resolver.resolve(l) {
                    Err(err) => f.push(format!("{} / {name}: {err}", e.name)),
                    Ok(res) => {
                        let cert = resolver.certify(&res);
                        lengths.push(res.length());
                        if !cert.passed() {
                            f.push(format!("{} / {name}: {cert:?} on {l}", e.name));
                        }
                    }
                }
            }
            let note = format!("{}: n = {}, lengths {lengths:?}", e.name, tree.depth());
            (f, vec![note], lattices.len())
        })
        .collect();
    let (f, n, c) = collect(results);
    SuiteReport::new("resolve", c, f, n)
}

/// Known global dimensions.
fn gldim_fixture(name: &str) -> Option<usize> {
    match name {
        "<1>" => Some(1),
        "<2,3>" | "node" => Some(2),
        _ => None,
    }
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct LedgerRow {
    pub ring: String,
    pub chain_bound: usize,
    pub multiplicity: usize,
    pub delta: usize,
    pub gldim: Pd,
}

pub fn gldim_ledger(corpus: &[CorpusEntry], cfg: &SuiteConfig) -> Vec<std::result::Result<LedgerRow, String>> {
    corpus
        .par_iter()
        .map(|e| {
            let (ring, tree) = build(e, cfg.options)?;
            let rep = family_global_dimension(&tree, cfg.pd_cap).map_err(|err| format!("{}: {err}", e.name))?;
            Ok(LedgerRow {
                ring: e.name.clone(),
                chain_bound: tree.depth() + 1,
                multiplicity: rep.multiplicity_bound,
                delta: ring.delta(),
                gldim: rep.gldim,
            })
        })
        .collect()
}

pub fn gldim_suite(corpus: &[CorpusEntry], cfg: &SuiteConfig) -> SuiteReport {
    let mut f = Vec::new();
    let mut n = Vec::new();
    let rows = gldim_ledger(corpus, cfg);
    for row in &rows {
        match row {
            Err(msg) => f.push(msg.clone()),
            Ok(r) => {
                match r.gldim.exact() {
                    Some(g) if g <= r.chain_bound => {}
                    _ => f.push(format!(
                        "{}: gldim {} exceeds n + 1 = {}",
                        r.ring, r.gldim, r.chain_bound
                    )),
                }
                if let Some(want) = gldim_fixture(&r.ring) {
                    if r.gldim != Pd::Exact(want) {
                        f.push(format!("{}: gldim {} but expected {want}", r.ring, r.gldim));
                    }
                }
                let rel = match r.gldim.exact() {
                    Some(g) if g <= r.multiplicity => "gldim <= e",
                    _ => "gldim > e",
                };
                let cmp = match r.chain_bound.cmp(&r.multiplicity) {
                    std::cmp::Ordering::Greater => "n+1 > e",
                    std::cmp::Ordering::Equal => "n+1 = e",
                    std::cmp::Ordering::Less => "n+1 < e",
                };
                n.push(format!(
                    "{}: n+1 = {}, e = {}, delta = {}, gldim = {} ({rel}; {cmp})",
                    r.ring, r.chain_bound, r.multiplicity, r.delta, r.gldim
                ));
            }
        }
    }
    SuiteReport::new("gldim", rows.len(), f, n)
}

/// `⟨2, 2g+1⟩` with its overrings `⟨2, 2k+1⟩`, `k ≤ g`, as the module list.
pub fn fcmt_suite(max_g: u64, cfg: &SuiteConfig) -> SuiteReport {
    let results: Vec<_> = (1..=max_g)
        .into_par_iter()
        .map(|g| -> std::result::Result<String, String> {
            let field = FieldSpec::Rational;
            let ring = CurveRing::semigroup_with(field, &[2, 2 * g + 1], cfg.options).map_err(|e| e.to_string())?;
            let list: Vec<Lattice> = (0..=g)
                .rev()
                .map(|k| {
                    let s = CurveRing::semigroup_with(field, &[2, 2 * k + 1], cfg.options)?;
                    Ok(Lattice::of_ring(&s, ring.clone()))
                })
                .collect::<Result<_>>()
                .map_err(|e| e.to_string())?;
            let rep = fcmt_check(list, cfg.pd_cap).map_err(|e| format!("g = {g}: {e}"))?;
            if rep.gldim != Pd::Exact(2) {
                return Err(format!("g = {g}: gldim {}", rep.gldim));
            }
            Ok(format!("<2,{}>: gldim {} <= max(2, 1)", 2 * g + 1, rep.gldim))
        })
        .collect();
    let (f, n): (Vec<_>, Vec<_>) = results.into_iter().partition(|r| r.is_err());
    SuiteReport::new(
        "fcmt",
        max_g as usize,
        f.into_iter().map(|r| r.unwrap_err()).collect(),
        n.into_iter().map(|r| r.unwrap()).collect(),
    )
}

/// Overrings of `ring` on the same branches: the normalization and every
/// `End(𝔪)` and family member with full support.
fn overrings(ring: &Arc<CurveRing>, tree: &ChainTree) -> Vec<Arc<CurveRing>> {
    let mut out: Vec<Arc<CurveRing>> = Vec::new();
    let full = |s: &Arc<CurveRing>| s.support() == ring.support();
    for node in &tree.nodes {
        for s in std::iter::once(&node.ring).chain(node.endo.iter()) {
            if full(s) && !out.iter().any(|o| o.same_ring(s)) {
                out.push(s.clone());
            }
        }
    }
    let normal = CurveRing::normalization(ring.field(), ring.support().to_vec(), ring.options());
    if !out.iter().any(|o| o.same_ring(&normal)) {
        out.push(normal);
    }
    out
}

fn random_poly(field: FieldSpec, rng: &mut ChaCha8Rng, max_exp: i64) -> LaurentPoly {
    let terms = (0..rng.gen_range(1..=3)).map(|_| (rng.gen_range(0..=max_exp), small_coeff(field, rng)));
    LaurentPoly::from_terms(terms)
}

/// A random lattice over `s` of rank one or two per branch.
fn random_lattice(s: &Arc<CurveRing>, rng: &mut ChaCha8Rng) -> Lattice {
    let field = s.field();
    let mult = rng.gen_range(1..=2);
    let shape: Vec<usize> = (0..mult).flat_map(|_| s.support().iter().copied()).collect();
    let n = shape.len();
    let mut gens: Vec<AmbVec> = (0..rng.gen_range(1..=3))
        .map(|_| (0..n).map(|_| random_poly(field, rng, 5)).collect())
        .collect();
    for k in 0..n {
        let mut v = vec![LaurentPoly::zero(); n];
        v[k] = LaurentPoly::t_pow(field, rng.gen_range(2..=6));
        gens.push(v);
    }
    Lattice::generate(s.clone(), shape, &gens).expect("full rank by construction")
}

/// `Hom_R(C, D) = Hom_S(C, D)` for `S`-lattices, and images of `R`-maps out of
/// `S`-lattices are `S`-stable.
pub fn hom_restriction_suite(corpus: &[CorpusEntry], cfg: &SuiteConfig, cases: usize) -> SuiteReport {
    let built: Vec<_> = corpus.iter().map(|e| (e.name.clone(), build(e, cfg.options))).collect();
    let usable: Vec<(String, Arc<CurveRing>, Vec<Arc<CurveRing>>)> = built
        .into_iter()
        .filter_map(|(name, b)| b.ok().map(|(r, t)| (name, r.clone(), overrings(&r, &t))))
        .collect();
    let cases = cases.max(MIN_HOM_CASES);
    let results: Vec<Option<String>> = (0..cases)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed_for(cfg.seed ^ 0x5eed, i);
            let (name, ring, overs) = &usable[i % usable.len()];
            let s = overs.choose(&mut rng).unwrap();
            let c_s = random_lattice(s, &mut rng);
            let mut d_s = random_lattice(s, &mut rng);
            if d_s.shape() != c_s.shape() && rng.gen_bool(0.5) {
                d_s = random_lattice(s, &mut rng);
            }
            let c_r = c_s.with_ring(ring.clone());
            let d_r = d_s.with_ring(ring.clone());
            let over_r = hom_lattice(&c_r, &d_r);
            let over_s = hom_lattice(&c_s, &d_s);
            if over_r.lattice != over_s.lattice {
                return Some(format!(
                    "case {i} ({name}): Hom over R differs from Hom over S for C = {c_s}, D = {d_s}"
                ));
            }
            let f = random_hom(&over_r, ring.field(), &mut rng);
            let map = LatticeMap::new(c_r, d_r, f).ok()?;
            match map.image() {
                Ok(im) => match im.lattice.scalar_extension_test(s) {
                    Ok(true) => None,
                    Ok(false) => Some(format!("case {i} ({name}): image is not S-stable")),
                    Err(e) => Some(format!("case {i} ({name}): {e}")),
                },
                Err(e) => Some(format!("case {i} ({name}): {e}")),
            }
        })
        .collect();
    let f: Vec<String> = results.into_iter().flatten().collect();
    SuiteReport::new("hom-restriction", cases, f, vec![])
}

pub fn projectivization_suite(corpus: &[CorpusEntry], cfg: &SuiteConfig) -> SuiteReport {
    let results: Vec<_> = corpus
        .par_iter()
        .enumerate()
        .map(|(i, e)| {
            let (ring, tree) = match build(e, cfg.options) {
                Ok(x) => x,
                Err(msg) => return (vec![msg], vec![], 1),
            };
            let mut f = Vec::new();
            match LatticeAlgebra::of_family(&tree) {
                Err(err) => f.push(format!("{}: {err}", e.name)),
                Ok(alg) => {
                    if !alg.projectivization_check() {
                        f.push(format!("{}: projectivization check failed", e.name));
                    }
                    if alg.with_corrupted_composition().projectivization_check() {
                        f.push(format!("{}: corrupted composition was accepted", e.name));
                    }
                }
            }
            let m = tree.family().representation_module();
            let resolver = Resolver::new(&tree);
            let mut rng = seed_for(cfg.seed, i);
            let lattices = test_lattices(&ring, &tree, &mut rng);
            for (name, l) in &lattices {
                let res = match resolver.resolve(l) {
                    Ok(r) => r,
                    Err(err) => {
                        f.push(format!("{} / {name}: {err}", e.name));
                        continue;
                    }
                };
                if let Err(msg) = crate::resolver::verify_hom_exactness(&res, &m) {
                    f.push(format!("{} / {name}: Hom(M, -) not exact: {msg}", e.name));
                }
            }
            (f, vec![], lattices.len() + 1)
        })
        .collect();
    let (f, n, c) = collect(results);
    SuiteReport::new("projectivization", c, f, n)
}

/// Seed-independent and seed-dependent fingerprints of the reports for one ring.
fn fingerprints(entry: &CorpusEntry, index: usize, cfg: &SuiteConfig) -> std::result::Result<(String, String), String> {
    let (ring, tree) = build(entry, cfg.options)?;
    let gl = family_global_dimension(&tree, cfg.pd_cap).map_err(|e| e.to_string())?;
    let fixed = serde_json::to_string(&(
        crate::io::ring_output(&ring).report,
        ring.conductor(),
        tree.summary(),
        &gl,
    ))
    .unwrap();
    let resolver = Resolver::new(&tree);
    let mut rng = seed_for(cfg.seed, index);
    let outs: Vec<_> = test_lattices(&ring, &tree, &mut rng)
        .iter()
        .map(|(name, l)| {
            (
                name.clone(),
                resolver.resolve(l).map(|r| resolution_output(&resolver, &r)).ok(),
            )
        })
        .collect();
    Ok((fixed, serde_json::to_string(&outs).unwrap()))
}

/// Reports agree under a doubled window, and seed-independent reports agree
/// across two seeds.
pub fn determinism_suite(corpus: &[CorpusEntry], cfg: &SuiteConfig) -> SuiteReport {
    let doubled = SuiteConfig {
        options: RingOptions {
            window_scale: cfg.options.window_scale * 2,
            ..cfg.options
        },
        ..*cfg
    };
    let other = SuiteConfig {
        seed: cfg.seed.wrapping_add(1),
        ..*cfg
    };
    let results: Vec<_> = corpus
        .par_iter()
        .enumerate()
        .map(|(i, e)| {
            let mut f = Vec::new();
            match (
                fingerprints(e, i, cfg),
                fingerprints(e, i, &doubled),
                fingerprints(e, i, &other),
            ) {
                (Ok(a), Ok(b), Ok(c)) => {
                    if a != b {
                        f.push(format!("{}: reports differ under a doubled window", e.name));
                    }
                    if a.0 != c.0 {
                        f.push(format!("{}: seed-independent reports differ across seeds", e.name));
                    }
                }
                (a, b, c) => {
                    for r in [a, b, c] {
                        if let Err(msg) = r {
                            f.push(format!("{}: {msg}", e.name));
                        }
                    }
                }
            }
            (f, vec![], 1)
        })
        .collect();
    let (f, n, c) = collect(results);
    SuiteReport::new("determinism", c, f, n)
}

pub fn run_suite(name: &str, corpus: &[CorpusEntry], cfg: &SuiteConfig) -> Option<SuiteReport> {
    Some(match name {
        "chain" => chain_suite(corpus, cfg),
        "resolve" => resolve_suite(corpus, cfg),
        "gldim" => gldim_suite(corpus, cfg),
        "fcmt" => fcmt_suite(4, cfg),
        "hom-restriction" => hom_restriction_suite(corpus, cfg, MIN_HOM_CASES),
        "projectivization" => projectivization_suite(corpus, cfg),
        "determinism" => determinism_suite(corpus, cfg),
        _ => return None,
    })
}
