//! Resolutions of torsion-free modules by sums of rings from the chain tree.
//!
//! The recursion follows the chain tree. Over a discrete valuation ring every
//! lattice is free. A lattice stable under `S = End(𝔪)` splits along the
//! idempotents of `S` and is resolved over the children. Otherwise the largest
//! `S`-submodule `N'` is covered, a minimal free cover of `N/N'` is added, and
//! the kernel `L` of the combined map `π = [g | −f]` (always `S`-stable) is
//! resolved recursively and spliced in front.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::chain::{ChainTree, EFamily};
use crate::curve_ring::CurveRing;
use crate::error::{Error, Result};
use crate::lattice::{hom_lattice, AmbVec, HomLattice, Lattice, LatticeMap};
use crate::polymat::PolyMatrix;
use crate::series::LaurentPoly;

/// A direct sum of family members; `summands[i]` indexes [`EFamily::members`].
#[derive(Clone, Debug)]
pub struct Term {
    pub summands: Vec<usize>,
    pub lattice: Lattice,
}

/// `0 → C_m → ⋯ → C_0 → N → 0`; `maps[0]: C_0 → N`, `maps[j]: C_j → C_{j−1}`.
#[derive(Clone, Debug)]
pub struct Resolution {
    pub target: Lattice,
    pub terms: Vec<Term>,
    pub maps: Vec<LatticeMap>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Certificate {
    pub length: usize,
    pub chain_length: usize,
    pub exact: bool,
    pub decomposition: bool,
    /// Hom-exactness per family member, in member order.
    pub hom_exact: Vec<bool>,
    pub failure: Option<String>,
}

impl Certificate {
    pub fn passed(&self) -> bool {
        self.length <= self.chain_length && self.exact && self.decomposition && self.hom_exact.iter().all(|&b| b)
    }
}

impl Resolution {
    pub fn length(&self) -> usize {
        self.terms.len().saturating_sub(1)
    }
}

/// Resolution engine bound to a chain tree and its family.
pub struct Resolver<'a> {
    tree: &'a ChainTree,
    family: EFamily,
    node_member: Vec<usize>,
}

struct Partial {
    terms: Vec<Vec<usize>>,
    maps: Vec<PolyMatrix>,
}

/// Matrix of the map `⊕ S_j → N` sending the unit of the `j`-th summand to `images[j]`.
fn free_map(members: &[&CurveRing], images: &[AmbVec], target_shape: &[usize]) -> PolyMatrix {
    let n = target_shape.len();
    let cols: Vec<AmbVec> = members
        .iter()
        .zip(images)
        .flat_map(|(m, v)| {
            m.support()
                .iter()
                .map(|&l| {
                    (0..n)
                        .map(|a| {
                            if target_shape[a] == l {
                                v[a].clone()
                            } else {
                                LaurentPoly::zero()
                            }
                        })
                        .collect::<AmbVec>()
                })
                .collect::<Vec<_>>()
        })
        .collect();
    PolyMatrix::from_columns(n, &cols)
}

impl<'a> Resolver<'a> {
    pub fn new(tree: &'a ChainTree) -> Resolver<'a> {
        let family = tree.family();
        let node_member = tree
            .nodes
            .iter()
            .map(|n| family.index_of(&n.ring).expect("node ring is a member"))
            .collect();
        Resolver {
            tree,
            family,
            node_member,
        }
    }

    pub fn family(&self) -> &EFamily {
        &self.family
    }

    pub fn root(&self) -> &Arc<CurveRing> {
        self.tree.root()
    }

    pub fn chain_length(&self) -> usize {
        self.tree.depth()
    }

    /// Direct sum of the given members as a lattice over `ring`.
    pub fn term_lattice(&self, summands: &[usize], ring: &Arc<CurveRing>) -> Lattice {
        let parts: Vec<Lattice> = summands
            .iter()
            .map(|&i| Lattice::of_ring(&self.family.members[i], ring.clone()))
            .collect();
        Lattice::direct_sum_all(ring.clone(), &parts)
    }

    /// Resolves a lattice over the root ring.
    pub fn resolve(&self, n: &Lattice) -> Result<Resolution> {
        let root = self.root().clone();
        let p = self.resolve_at(0, &n.with_ring(root.clone()))?;
        let terms: Vec<Term> = p
            .terms
            .iter()
            .map(|s| Term {
                summands: s.clone(),
                lattice: self.term_lattice(s, &root),
            })
            .collect();
        let mut maps = Vec::new();
        for (j, m) in p.maps.into_iter().enumerate() {
            let target = if j == 0 {
                n.clone()
            } else {
                terms[j - 1].lattice.clone()
            };
            maps.push(LatticeMap::unchecked(terms[j].lattice.clone(), target, m)?);
        }
        Ok(Resolution {
            target: n.clone(),
            terms,
            maps,
        })
    }

    fn resolve_at(&self, node: usize, n: &Lattice) -> Result<Partial> {
        let a = self.tree.nodes[node].ring.clone();
        let n = n.with_ring(a.clone());
        if n.is_zero() {
            return Ok(Partial {
                terms: vec![Vec::new()],
                maps: vec![PolyMatrix::zero(n.rank(), 0)],
            });
        }
        // free over the node ring
        let gens = n.nakayama_generators();
        let ranks = n.ranks_by_branch();
        if ranks.len() == a.branches() && ranks.values().all(|&r| r == gens.len()) {
            let me = self.node_member[node];
            let members: Vec<&CurveRing> = vec![&*a; gens.len()];
            return Ok(Partial {
                terms: vec![vec![me; gens.len()]],
                maps: vec![free_map(&members, &gens, n.shape())],
            });
        }
        if a.is_dvr_product() {
            return Err(Error::FailedDecomposition(format!(
                "lattice over a discrete valuation ring is not free: {n}"
            )));
        }
        let s = self.tree.nodes[node].endo.clone().expect("interior node has End(m)");
        if n.scalar_extension_test(&s)? {
            return self.split(node, &n);
        }
        // N' and its cover
        let np = n.largest_submodule_over(&s)?;
        let cover = self.resolve_at(node, &np)?;
        let f = cover.maps[0].clone();
        let c_sum = cover.terms[0].clone();
        // minimal free cover of N/N'
        let q = np.sum(&radical_submodule(&n))?;
        let lifts = n.complement_lifts(&q);
        let k = lifts.len();
        let me = self.node_member[node];
        let members: Vec<&CurveRing> = vec![&*a; k];
        let g = free_map(&members, &lifts, n.shape());
        // g(𝔪F) ⊆ N'
        for v in &lifts {
            for r in a.radical_gens() {
                let w: AmbVec = v
                    .iter()
                    .zip(n.shape())
                    .map(|(p, &l)| r.0[a.local_index(l).unwrap()].mul(p))
                    .collect();
                if !np.contains(&w) {
                    return Err(Error::ClaimViolation);
                }
            }
        }
        let mut summands = vec![me; k];
        summands.extend_from_slice(&c_sum);
        let p_lat = self.term_lattice(&summands, &a);
        let mut pi = PolyMatrix::zero(n.rank(), g.cols + f.cols);
        for i in 0..n.rank() {
            for j in 0..g.cols {
                pi.set(i, j, g.get(i, j).clone());
            }
            for j in 0..f.cols {
                pi.set(i, g.cols + j, f.get(i, j).neg());
            }
        }
        let pi_map = LatticeMap::unchecked(p_lat, n.clone(), pi.clone())?;
        let ker = pi_map.kernel();
        if ker.lattice.is_zero() {
            return Ok(Partial {
                terms: vec![summands],
                maps: vec![pi],
            });
        }
        if !ker.lattice.scalar_extension_test(&s)? {
            return Err(Error::ClaimViolation);
        }
        let rest = self.resolve_at(node, &ker.lattice)?;
        let mut terms = vec![summands];
        terms.extend(rest.terms);
        let mut maps = vec![pi, ker.basis.basis.mul(&rest.maps[0])];
        maps.extend(rest.maps.into_iter().skip(1));
        Ok(Partial { terms, maps })
    }

    /// Resolution of an `End(𝔪)`-stable lattice, split over the children.
    fn split(&self, node: usize, n: &Lattice) -> Result<Partial> {
        let children = &self.tree.nodes[node].children;
        let mut parts: Vec<(Vec<usize>, Partial)> = Vec::new();
        for &c in children {
            let cr = self.tree.nodes[c].ring.clone();
            let coords: Vec<usize> = (0..n.rank())
                .filter(|&k| cr.local_index(n.shape()[k]).is_some())
                .collect();
            if coords.is_empty() {
                continue;
            }
            let sub = n.project(&coords, cr);
            parts.push((coords, self.resolve_at(c, &sub)?));
        }
        let len = parts.iter().map(|(_, p)| p.terms.len()).max().unwrap_or(1);
        let mut terms: Vec<Vec<usize>> = vec![Vec::new(); len];
        for (_, p) in &parts {
            for (j, t) in p.terms.iter().enumerate() {
                terms[j].extend_from_slice(t);
            }
        }
        let width = |s: &[usize]| -> usize { s.iter().map(|&i| self.family.members[i].branches()).sum() };
        let mut maps = Vec::new();
        for j in 0..len {
            let rows = if j == 0 { n.rank() } else { width(&terms[j - 1]) };
            let cols = width(&terms[j]);
            let mut m = PolyMatrix::zero(rows, cols);
            let (mut r0, mut c0) = (0, 0);
            for (coords, p) in &parts {
                let pr = if j == 0 {
                    coords.len()
                } else {
                    p.terms.get(j - 1).map_or(0, |t| width(t))
                };
                let pc = p.terms.get(j).map_or(0, |t| width(t));
                if let Some(pm) = p.maps.get(j) {
                    for a in 0..pm.rows {
                        for b in 0..pm.cols {
                            let row = if j == 0 { coords[a] } else { r0 + a };
                            m.set(row, c0 + b, pm.get(a, b).clone());
                        }
                    }
                }
                r0 += pr;
                c0 += pc;
            }
            maps.push(m);
        }
        Ok(Partial { terms, maps })
    }

    /// Copy of `res` with the last summand of `C_1` dropped; a negative control
    /// for the checks.
    pub fn corrupt_drop_summand(&self, res: &Resolution) -> Option<Resolution> {
        let t1 = res.terms.get(1)?;
        let mut summands = t1.summands.clone();
        let last = summands.pop()?;
        let width = t1.lattice.rank() - self.family.members[last].branches();
        let keep: Vec<usize> = (0..width).collect();
        let lattice = self.term_lattice(&summands, self.root());
        let mut out = res.clone();
        out.terms[1] = Term {
            summands,
            lattice: lattice.clone(),
        };
        let d1 = &res.maps[1];
        let rows: Vec<usize> = (0..d1.matrix.rows).collect();
        out.maps[1] =
            LatticeMap::unchecked(lattice.clone(), d1.target.clone(), d1.matrix.submatrix(&rows, &keep)).ok()?;
        if let Some(d2) = res.maps.get(2) {
            let cols: Vec<usize> = (0..d2.matrix.cols).collect();
            out.maps[2] = LatticeMap::unchecked(d2.source.clone(), lattice, d2.matrix.submatrix(&keep, &cols)).ok()?;
        }
        Some(out)
    }

    /// Exactness and Hom-exactness certificate for a resolution.
    pub fn certify(&self, res: &Resolution) -> Certificate {
        let mut failure = None;
        let exact = match check_exact(&res.maps, Some(&res.target)) {
            Ok(()) => true,
            Err(e) => {
                failure = Some(format!("complex: {e}"));
                false
            }
        };
        let root = self.root();
        let decomposition = res
            .terms
            .iter()
            .all(|t| t.lattice == self.term_lattice(&t.summands, root));
        let results: Vec<std::result::Result<(), String>> = self
            .family
            .as_lattices()
            .par_iter()
            .map(|x| verify_hom_exactness(res, x))
            .collect();
        let mut hom_exact = Vec::with_capacity(results.len());
        for (i, r) in results.into_iter().enumerate() {
            if let Err(e) = &r {
                failure.get_or_insert(format!("Hom(X_{i}, -): {e}"));
            }
            hom_exact.push(r.is_ok());
        }
        Certificate {
            length: res.length(),
            chain_length: self.chain_length(),
            exact,
            decomposition,
            hom_exact,
            failure,
        }
    }
}

/// `J·L` for the Jacobson radical `J` of the lattice's ring.
pub fn radical_submodule(l: &Lattice) -> Lattice {
    let ring = l.ring();
    let gens: Vec<AmbVec> = l
        .nakayama_generators()
        .iter()
        .flat_map(|v| {
            ring.radical_gens().iter().map(move |r| {
                v.iter()
                    .zip(l.shape())
                    .map(|(p, &lab)| r.0[ring.local_index(lab).unwrap()].mul(p))
                    .collect::<AmbVec>()
            })
        })
        .collect();
    let u = ring.max_conductor().max(1);
    let mut all = gens;
    for k in 0..l.rank() {
        for j in 0..u {
            all.push(crate::lattice::unit_vector(l.field(), l.rank(), k, l.hi() + u + j));
        }
    }
    Lattice::generate(ring.clone(), l.shape().to_vec(), &all).expect("full rank")
}

/// Exactness of `⋯ → C_1 → C_0 → T`; with `Some(T)` the last map must also be onto `T`.
pub fn check_exact(maps: &[LatticeMap], target: Option<&Lattice>) -> std::result::Result<(), String> {
    for j in 1..maps.len() {
        if !maps[j - 1].matrix.mul(&maps[j].matrix).is_zero() {
            return Err(format!("d_{} ∘ d_{} ≠ 0", j - 1, j));
        }
    }
    if let (Some(t), Some(d0)) = (target, maps.first()) {
        let im = d0.image().map_err(|e| e.to_string())?;
        if im.rank() != t.rank() || !t.module_generators().iter().all(|g| im.contains_ambient(g)) {
            return Err("C_0 → N is not surjective".into());
        }
    }
    for j in 0..maps.len() {
        let k = maps[j].kernel();
        match maps.get(j + 1) {
            None => {
                if !k.lattice.is_zero() {
                    return Err(format!("d_{j} is not injective on the last term"));
                }
            }
            Some(next) => {
                let im = next.image().map_err(|e| e.to_string())?;
                if im.rank() != k.rank() {
                    return Err(format!("rank of ker d_{j} differs from rank of im d_{}", j + 1));
                }
                if !k.ambient_generators().iter().all(|g| im.contains_ambient(g)) {
                    return Err(format!("homology at position {j}"));
                }
            }
        }
    }
    Ok(())
}

/// `Hom(X, d)`: post-composition with `d` between hom lattices.
pub fn postcompose(d: &LatticeMap, from: &HomLattice, to: &HomLattice) -> LatticeMap {
    let mut m = PolyMatrix::zero(to.entries.len(), from.entries.len());
    for (r, &(a, b)) in to.entries.iter().enumerate() {
        for (c, &(cc, bb)) in from.entries.iter().enumerate() {
            if b == bb {
                let x = d.matrix.get(a, cc);
                if !x.is_zero() {
                    m.set(r, c, x.clone());
                }
            }
        }
    }
    LatticeMap {
        source: from.lattice.clone(),
        target: to.lattice.clone(),
        matrix: m,
    }
}

/// Applies `Hom(X, −)` to the resolution and checks exactness, including onto `Hom(X, N)`.
pub fn verify_hom_exactness(res: &Resolution, x: &Lattice) -> std::result::Result<(), String> {
    let homs: Vec<HomLattice> = res.terms.iter().map(|t| hom_lattice(x, &t.lattice)).collect();
    let hn = hom_lattice(x, &res.target);
    let maps: Vec<LatticeMap> = res
        .maps
        .iter()
        .enumerate()
        .map(|(j, d)| postcompose(d, &homs[j], if j == 0 { &hn } else { &homs[j - 1] }))
        .collect();
    check_exact(&maps, Some(&hn.lattice))
}

/// Complex `C_m → ⋯ → C_0 → M_1 → M_0` from a map `f: M_1 → M_0`.
#[derive(Clone, Debug)]
pub struct PresentedResolution {
    /// `maps[0] = f`, `maps[1]: C_0 → M_1`, then the resolution of `ker f`.
    pub maps: Vec<LatticeMap>,
    pub kernel_resolution: Option<Resolution>,
}

impl PresentedResolution {
    /// Length of the projective resolution obtained after applying `Hom(M, −)`.
    pub fn projective_length(&self) -> usize {
        self.maps.len()
    }
}

pub fn resolve_presented_module(resolver: &Resolver<'_>, f: &LatticeMap) -> Result<PresentedResolution> {
    let ker = f.kernel();
    if ker.lattice.is_zero() {
        return Ok(PresentedResolution {
            maps: vec![f.clone()],
            kernel_resolution: None,
        });
    }
    let res = resolver.resolve(&ker.lattice)?;
    let mut maps = vec![f.clone()];
    let first = &res.maps[0];
    maps.push(LatticeMap::unchecked(
        first.source.clone(),
        f.source.clone(),
        ker.basis.basis.mul(&first.matrix),
    )?);
    maps.extend(res.maps.iter().skip(1).cloned());
    Ok(PresentedResolution {
        maps,
        kernel_resolution: Some(res),
    })
}

/// Exactness of `Hom(X, −)` applied to a presented complex, at every position
/// except the cokernel end.
pub fn verify_presented_hom_exactness(p: &PresentedResolution, x: &Lattice) -> std::result::Result<(), String> {
    let mut lattices: Vec<&Lattice> = vec![&p.maps[0].target];
    lattices.extend(p.maps.iter().map(|m| &m.source));
    let homs: Vec<HomLattice> = lattices.iter().map(|l| hom_lattice(x, l)).collect();
    let maps: Vec<LatticeMap> = p
        .maps
        .iter()
        .enumerate()
        .map(|(j, d)| postcompose(d, &homs[j + 1], &homs[j]))
        .collect();
    check_exact(&maps, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FieldSpec;
    use crate::series::BranchVector;

    fn q() -> FieldSpec {
        FieldSpec::Rational
    }

    fn sg(g: &[u64]) -> Arc<CurveRing> {
        CurveRing::semigroup(q(), g).unwrap()
    }

    fn mono(e: i64) -> AmbVec {
        vec![LaurentPoly::t_pow(q(), e)]
    }

    fn node() -> Arc<CurveRing> {
        let t = LaurentPoly::t_pow(q(), 1);
        let z = LaurentPoly::zero();
        CurveRing::build(
            q(),
            2,
            vec![BranchVector(vec![t.clone(), z.clone()]), BranchVector(vec![z, t])],
        )
        .unwrap()
    }

    #[test]
    fn free_module_has_length_zero() {
        let r = sg(&[2, 3]);
        let tree = ChainTree::build(&r).unwrap();
        let res = Resolver::new(&tree);
        let n = Lattice::of_ring(&r, r.clone());
        let out = res.resolve(&n).unwrap();
        assert_eq!(out.length(), 0);
        assert_eq!(out.terms[0].summands, vec![0]);
        assert!(res.certify(&out).passed());
    }

    #[test]
    fn maximal_ideal_over_2_5() {
        let r = sg(&[2, 5]);
        let tree = ChainTree::build(&r).unwrap();
        let res = Resolver::new(&tree);
        let m = Lattice::radical_of(&r);
        let out = res.resolve(&m).unwrap();
        assert_eq!(out.length(), 0);
        let member = &res.family().members[out.terms[0].summands[0]];
        assert!(member.same_ring(&sg(&[2, 3])));
        let cert = res.certify(&out);
        assert!(cert.passed(), "{cert:?}");
    }

    #[test]
    fn shifted_maximal_ideal_over_3_4() {
        let r = sg(&[3, 4]);
        let tree = ChainTree::build(&r).unwrap();
        let res = Resolver::new(&tree);
        let j = Lattice::generate(r.clone(), vec![0], &[mono(0), mono(1)]).unwrap();
        assert_eq!(j.value_set(8), vec![0, 1, 3, 4, 5, 6, 7]);
        let out = res.resolve(&j).unwrap();
        assert_eq!(out.length(), 1);
        let allowed = [sg(&[3, 4, 5]), sg(&[1])];
        for t in &out.terms {
            for &i in &t.summands {
                assert!(allowed.iter().any(|a| a.same_ring(&res.family().members[i])));
            }
        }
        let cert = res.certify(&out);
        assert!(cert.passed(), "{cert:?}");
        let bad = res.corrupt_drop_summand(&out).unwrap();
        let cert = res.certify(&bad);
        assert!(!cert.exact);
        assert!(!cert.hom_exact.iter().all(|&b| b));
    }

    #[test]
    fn non_stable_lattice_uses_the_cover() {
        // canonical ideal of <3,4,5>: not F[[t]]-stable, not free
        let r = sg(&[3, 4, 5]);
        let tree = ChainTree::build(&r).unwrap();
        let res = Resolver::new(&tree);
        let n = Lattice::generate(r.clone(), vec![0], &[mono(0), mono(1)]).unwrap();
        assert!(!n.scalar_extension_test(&sg(&[1])).unwrap());
        let out = res.resolve(&n).unwrap();
        assert_eq!(out.length(), 1);
        assert_eq!(out.terms[0].summands.len(), 3);
        assert!(res.certify(&out).passed());
    }

    #[test]
    fn node_lattices() {
        let r = node();
        let tree = ChainTree::build(&r).unwrap();
        let res = Resolver::new(&tree);
        let m = Lattice::radical_of(&r);
        let out = res.resolve(&m).unwrap();
        assert_eq!(out.length(), 0);
        assert_eq!(out.terms[0].summands.len(), 2);
        assert!(res.certify(&out).passed());
        let rr = Lattice::of_ring(&r, r.clone()).direct_sum(&m);
        let out = res.resolve(&rr).unwrap();
        assert!(res.certify(&out).passed());
    }

    #[test]
    fn presented_modules() {
        let r = sg(&[2, 3]);
        let tree = ChainTree::build(&r).unwrap();
        let res = Resolver::new(&tree);
        let fam = res.family().as_lattices();
        let rl = &fam[0];
        let p = resolve_presented_module(&res, &LatticeMap::identity(rl)).unwrap();
        assert!(p.kernel_resolution.is_none());
        let rt = Lattice::of_ring(&sg(&[1]), r.clone());
        let mut m = PolyMatrix::zero(1, 1);
        m.set(0, 0, LaurentPoly::t_pow(q(), 1));
        let f = LatticeMap::new(rt.clone(), rt.clone(), m).unwrap();
        let p = resolve_presented_module(&res, &f).unwrap();
        assert_eq!(p.projective_length(), 1);
        for x in &fam {
            verify_presented_hom_exactness(&p, x).unwrap();
        }
        let src = rl.direct_sum(&rt);
        let mut m = PolyMatrix::zero(1, 2);
        m.set(0, 0, LaurentPoly::t_pow(q(), 0));
        m.set(0, 1, LaurentPoly::t_pow(q(), 0));
        let f = LatticeMap::new(src, rt, m).unwrap();
        let p = resolve_presented_module(&res, &f).unwrap();
        let kr = p.kernel_resolution.as_ref().unwrap();
        assert_eq!(kr.length(), 0);
        assert_eq!(kr.terms[0].summands, vec![0]);
        assert!(p.projective_length() <= 2);
        for x in &fam {
            verify_presented_hom_exactness(&p, x).unwrap();
        }
    }
}
