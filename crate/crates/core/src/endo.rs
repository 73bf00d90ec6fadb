//! The endomorphism algebra `Γ = End_R(M)ᵒᵖ` of a sum of lattices and its
//! global dimension.
//!
//! Γ-modules are right `End(M)`-modules under precomposition. The projective
//! `P_i` is `Hom(M, X_i)` and its simple top is one-dimensional. Every syzygy
//! past the first has the form `Hom(M, K)` for an `R`-lattice `K`: a minimal
//! cover of `Hom(M, K)` is `Hom(M, Φ)` for an `add(M)`-approximation
//! `Φ: Y → K`, and its kernel is `Hom(M, ker Φ)`. Projective dimensions are
//! counted along this sequence of kernels.

use std::fmt;
use std::sync::Arc;

use serde::{Serialize, Serializer};

use crate::chain::{describe, ChainTree};
use crate::curve_ring::CurveRing;
use crate::error::{Error, Result};
use crate::field::Scalar;
use crate::lattice::{hom_lattice, to_win, vec_is_zero, AmbVec, HomLattice, Lattice, LatticeMap};
use crate::linalg::{nullspace_in, Echelon, SparseVec};
use crate::polymat::PolyMatrix;
use crate::series::LaurentPoly;

pub const DEFAULT_PD_CAP: usize = 16;

/// A projective dimension, or a lower bound when the cap was reached.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Pd {
    Exact(usize),
    AtLeast(usize),
}

impl Pd {
    pub fn exact(self) -> Option<usize> {
        match self {
            Pd::Exact(n) => Some(n),
            Pd::AtLeast(_) => None,
        }
    }
}

impl fmt::Display for Pd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pd::Exact(n) => write!(f, "{n}"),
            Pd::AtLeast(n) => write!(f, ">={n}"),
        }
    }
}

impl Serialize for Pd {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Pd::Exact(n) => s.serialize_u64(*n as u64),
            Pd::AtLeast(_) => s.serialize_str(&self.to_string()),
        }
    }
}

/// A right Γ-module.
#[derive(Clone, Debug)]
pub enum GammaModule {
    /// The top of `P_i`.
    Simple(usize),
    /// `P_i = Hom(M, X_i)`.
    Projective(usize),
    /// `Hom(M, K)` for a lattice `K`.
    Hom(Lattice),
}

/// Minimal projective resolution data: `terms[j][a]` is the multiplicity of
/// `P_a` in the `j`-th projective.
#[derive(Clone, Debug, Serialize)]
pub struct ProjectiveResolution {
    pub terms: Vec<Vec<usize>>,
    pub pd: Pd,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GldimReport {
    pub summands: Vec<String>,
    pub pd_per_simple: Vec<Pd>,
    pub gldim: Pd,
    pub chain_length: Option<usize>,
    /// `n + 1` for the chain length `n`, when `M` is the sum of the chain family.
    pub chain_bound: Option<usize>,
    /// `max{2, d}` with `d = 1`.
    pub dimension_bound: usize,
    pub multiplicity_bound: usize,
    pub within_chain_bound: Option<bool>,
    pub within_dimension_bound: bool,
    pub assumptions: Vec<String>,
}

/// `End_R(X_1 ⊕ ⋯ ⊕ X_k)` in blocks `homs[a][b] = Hom(X_a, X_b)`.
#[derive(Clone, Debug)]
pub struct LatticeAlgebra {
    ring: Arc<CurveRing>,
    summands: Vec<Lattice>,
    homs: Vec<Vec<HomLattice>>,
    radicals: Vec<Lattice>,
    twist: Option<i64>,
}

fn is_unit(x: &Lattice, f: &PolyMatrix) -> bool {
    let Ok(map) = LatticeMap::new(x.clone(), x.clone(), f.clone()) else {
        return false;
    };
    match map.image() {
        Ok(im) => im.rank() == x.rank() && x.module_generators().iter().all(|g| im.contains_ambient(g)),
        Err(_) => false,
    }
}

/// Free of rank one over the ring.
fn is_free_rank_one(x: &Lattice) -> bool {
    let ranks = x.ranks_by_branch();
    ranks.len() == x.ring().branches() && ranks.values().all(|&r| r == 1) && x.top_dim() == 1
}

/// `rad End(X)`: the preimage of the trace-form radical of `End(X)/t^c End(X)`.
fn end_radical(index: usize, x: &Lattice, end: &HomLattice) -> Result<Lattice> {
    let ring = x.ring();
    let field = x.field();
    let e = &end.lattice;
    let c = ring.max_conductor().max(1);
    let ideal = e.shift(c);
    let basis = e.complement_lifts(&ideal);
    let d = basis.len();
    let p = field.characteristic();
    if p != 0 && p as usize <= d {
        return Err(Error::CharacteristicTooSmall { p, dim: d });
    }
    let (lo, hi) = (e.lo(), ideal.hi().max(e.hi()));
    let win = |v: &AmbVec| to_win(v, lo, hi).expect("element of End(X)");
    let mut ech = Echelon::tracking();
    for v in ideal.basis_upto(hi) {
        ech.insert_tagged(win(&v), Vec::new());
    }
    for (k, v) in basis.iter().enumerate() {
        ech.insert_tagged(win(v), vec![(k, field.one())]);
    }
    let mats: Vec<PolyMatrix> = basis.iter().map(|v| end.to_matrix(v)).collect();
    let coords = |m: &PolyMatrix| -> Vec<Scalar> {
        let (rem, combo) = ech.reduce_tracked(&win(&end.from_matrix(m)));
        debug_assert!(rem.is_empty());
        let mut out = vec![field.zero(); d];
        for (k, s) in combo {
            out[k] = s;
        }
        out
    };
    // structure constants c[i][j] = b_i ∘ b_j
    let table: Vec<Vec<Vec<Scalar>>> = mats
        .iter()
        .map(|bi| mats.iter().map(|bj| coords(&bi.mul(bj))).collect())
        .collect();
    let traces: Vec<Scalar> = (0..d)
        .map(|k| (0..d).fold(field.zero(), |acc, i| &acc + &table[k][i][i]))
        .collect();
    let form: Vec<SparseVec> = (0..d)
        .map(|j| {
            (0..d)
                .filter_map(|i| {
                    let v = (0..d).fold(field.zero(), |acc, k| &acc + &(&table[i][j][k] * &traces[k]));
                    (!v.is_zero()).then_some((i, v))
                })
                .collect()
        })
        .collect();
    let null = nullspace_in(field, &form);
    if d - null.len() != 1 {
        return Err(Error::NotIndecomposable(index));
    }
    let lifts: Vec<AmbVec> = null
        .iter()
        .map(|lam| {
            let mut v = vec![LaurentPoly::zero(); e.rank()];
            for (k, s) in lam {
                for (slot, p) in v.iter_mut().zip(&basis[*k]) {
                    *slot = slot.add(&p.scale(s));
                }
            }
            v
        })
        .collect();
    let mut gens = ideal.module_generators();
    gens.extend(lifts.iter().cloned());
    let rad = Lattice::generate(ring.clone(), e.shape().to_vec(), &gens)?;
    // image-proper cross-check: radical generators are non-units, the rest are units
    if lifts.iter().any(|v| is_unit(x, &end.to_matrix(v))) {
        return Err(Error::CertificateFailed(format!(
            "radical of End(X_{index}) contains a unit"
        )));
    }
    if let Some(b) = basis.iter().find(|v| !rad.contains(v)) {
        if !is_unit(x, &end.to_matrix(b)) {
            return Err(Error::NotIndecomposable(index));
        }
    }
    Ok(rad)
}

impl LatticeAlgebra {
    pub fn build(summands: Vec<Lattice>) -> Result<LatticeAlgebra> {
        let ring = summands
            .first()
            .map(|x| x.ring().clone())
            .ok_or_else(|| Error::NotAModule("empty summand list".into()))?;
        if summands.iter().any(|x| !x.ring().same_ring(&ring)) {
            return Err(Error::AmbientMismatch);
        }
        let homs: Vec<Vec<HomLattice>> = summands
            .iter()
            .map(|xa| summands.iter().map(|xb| hom_lattice(xa, xb)).collect())
            .collect();
        let radicals = summands
            .iter()
            .enumerate()
            .map(|(a, x)| end_radical(a, x, &homs[a][a]))
            .collect::<Result<Vec<_>>>()?;
        let alg = LatticeAlgebra {
            ring,
            summands,
            homs,
            radicals,
            twist: None,
        };
        for a in 0..alg.len() {
            for b in a + 1..alg.len() {
                if alg.isomorphic(a, b) {
                    return Err(Error::DuplicateSummand(a, b));
                }
            }
        }
        Ok(alg)
    }

    /// `End(⊕ family)` for the chain family of `tree`.
    pub fn of_family(tree: &ChainTree) -> Result<LatticeAlgebra> {
        LatticeAlgebra::build(tree.family().as_lattices())
    }

    /// Copy whose composition is scaled by `t^{-1}`; a negative control.
    pub fn with_corrupted_composition(&self) -> LatticeAlgebra {
        LatticeAlgebra {
            twist: Some(-1),
            ..self.clone()
        }
    }

    pub fn len(&self) -> usize {
        self.summands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.summands.is_empty()
    }

    pub fn ring(&self) -> &Arc<CurveRing> {
        &self.ring
    }

    pub fn summands(&self) -> &[Lattice] {
        &self.summands
    }

    /// `Hom(X_a, X_b)`.
    pub fn block(&self, a: usize, b: usize) -> &HomLattice {
        &self.homs[a][b]
    }

    /// The part of `rad Γ` in `Hom(X_a, X_b)`: everything off the diagonal,
    /// `rad End(X_a)` on it.
    pub fn radical_block(&self, a: usize, b: usize) -> &Lattice {
        if a == b {
            &self.radicals[a]
        } else {
            &self.homs[a][b].lattice
        }
    }

    /// `g ∘ f`.
    pub fn compose(&self, g: &PolyMatrix, f: &PolyMatrix) -> PolyMatrix {
        let m = g.mul(f);
        match self.twist {
            None => m,
            Some(k) => {
                let mut out = m.clone();
                for r in 0..m.rows {
                    for c in 0..m.cols {
                        out.set(r, c, m.get(r, c).shift(k));
                    }
                }
                out
            }
        }
    }

    fn isomorphic(&self, a: usize, b: usize) -> bool {
        let fs = self.homs[a][b].generator_matrices();
        let gs = self.homs[b][a].generator_matrices();
        let end = &self.homs[a][a];
        fs.iter().any(|f| {
            gs.iter()
                .any(|g| !self.radicals[a].contains(&end.from_matrix(&self.compose(g, f))))
        })
    }

    fn radical_generators(&self, a: usize, b: usize) -> Vec<PolyMatrix> {
        let h = &self.homs[a][b];
        self.radical_block(a, b)
            .module_generators()
            .iter()
            .map(|v| h.to_matrix(v))
            .collect()
    }

    pub fn projective(&self, i: usize) -> GammaModule {
        GammaModule::Projective(i)
    }

    pub fn simple(&self, i: usize) -> GammaModule {
        GammaModule::Simple(i)
    }

    /// `dim_F` of the top of `P_i`, always one for a basic algebra.
    pub fn projective_top_dim(&self, i: usize) -> usize {
        self.homs[i][i]
            .lattice
            .quotient_dimension(&self.radicals[i])
            .unwrap_or(0)
    }

    /// Minimal cover of the submodule `⊕_a U_a ⊆ Hom(M, X)`: the multiplicities of
    /// each `X_a` and the map `Φ: ⊕ X_a^{m_a} → X`.
    fn cover(&self, x: &Lattice, to_x: &[HomLattice], u: &[Lattice]) -> Result<(Vec<usize>, LatticeMap)> {
        let k = self.len();
        let mut mult = vec![0; k];
        let mut parts: Vec<Lattice> = Vec::new();
        let mut cols: Vec<AmbVec> = Vec::new();
        let ugens: Vec<Vec<PolyMatrix>> = (0..k)
            .map(|b| u[b].module_generators().iter().map(|v| to_x[b].to_matrix(v)).collect())
            .collect();
        for a in 0..k {
            if u[a].is_zero() {
                continue;
            }
            let mut prods: Vec<AmbVec> = Vec::new();
            for b in 0..k {
                if ugens[b].is_empty() {
                    continue;
                }
                for r in self.radical_generators(a, b) {
                    for g in &ugens[b] {
                        let v = to_x[a].from_matrix(&self.compose(g, &r));
                        if !vec_is_zero(&v) {
                            prods.push(v);
                        }
                    }
                }
            }
            let q = Lattice::generate(self.ring.clone(), u[a].shape().to_vec(), &prods)?;
            for l in u[a].complement_lifts(&q) {
                let m = to_x[a].to_matrix(&l);
                for c in 0..m.cols {
                    cols.push(m.column(c));
                }
                parts.push(self.summands[a].clone());
                mult[a] += 1;
            }
        }
        let y = Lattice::direct_sum_all(self.ring.clone(), &parts);
        let phi = LatticeMap::new(y, x.clone(), PolyMatrix::from_columns(x.rank(), &cols))?;
        Ok((mult, phi))
    }

    fn full_homs(&self, k: &Lattice) -> (Vec<HomLattice>, Vec<Lattice>) {
        let homs: Vec<HomLattice> = self.summands.iter().map(|xa| hom_lattice(xa, k)).collect();
        let full = homs.iter().map(|h| h.lattice.clone()).collect();
        (homs, full)
    }

    /// Repeats minimal covers until the kernel vanishes.
    fn resolve_from(
        &self,
        mut x: Lattice,
        mut to_x: Vec<HomLattice>,
        mut u: Vec<Lattice>,
        mut terms: Vec<Vec<usize>>,
        cap: usize,
    ) -> Result<ProjectiveResolution> {
        loop {
            if terms.len() > cap {
                return Ok(ProjectiveResolution {
                    terms,
                    pd: Pd::AtLeast(cap),
                });
            }
            let (mult, phi) = self.cover(&x, &to_x, &u)?;
            terms.push(mult);
            let ker = phi.kernel().lattice;
            if ker.is_zero() {
                let pd = terms.len() - 1;
                return Ok(ProjectiveResolution {
                    terms,
                    pd: Pd::Exact(pd),
                });
            }
            x = ker;
            (to_x, u) = self.full_homs(&x);
        }
    }

    pub fn minimal_projective_resolution(&self, q: &GammaModule, cap: usize) -> Result<ProjectiveResolution> {
        let cap = cap.max(1);
        match q {
            GammaModule::Projective(i) => {
                let mut t = vec![0; self.len()];
                t[*i] = 1;
                Ok(ProjectiveResolution {
                    terms: vec![t],
                    pd: Pd::Exact(0),
                })
            }
            GammaModule::Hom(k) => {
                let (to_x, u) = self.full_homs(k);
                self.resolve_from(k.clone(), to_x, u, Vec::new(), cap)
            }
            GammaModule::Simple(i) => {
                let i = *i;
                let mut t = vec![0; self.len()];
                t[i] = 1;
                let to_x: Vec<HomLattice> = (0..self.len()).map(|a| self.homs[a][i].clone()).collect();
                let u: Vec<Lattice> = (0..self.len()).map(|a| self.radical_block(a, i).clone()).collect();
                self.resolve_from(self.summands[i].clone(), to_x, u, vec![t], cap)
            }
        }
    }

    pub fn pd_per_simple(&self, cap: usize) -> Result<Vec<Pd>> {
        (0..self.len())
            .map(|i| Ok(self.minimal_projective_resolution(&GammaModule::Simple(i), cap)?.pd))
            .collect()
    }

    pub fn global_dimension(&self, cap: usize) -> Result<GldimReport> {
        let pds = self.pd_per_simple(cap)?;
        let gldim = pds.iter().copied().max().unwrap_or(Pd::Exact(0));
        let multiplicity_bound = self.ring.report().map(|r| r.multiplicity).unwrap_or(0);
        Ok(GldimReport {
            summands: self.summands.iter().map(summand_name).collect(),
            pd_per_simple: pds,
            gldim,
            chain_length: None,
            chain_bound: None,
            dimension_bound: 2,
            multiplicity_bound,
            within_chain_bound: None,
            within_dimension_bound: gldim.exact().is_some_and(|g| g <= 2),
            assumptions: Vec::new(),
        })
    }

    /// Checks that composition is closed and unital on the blocks, that
    /// `Hom(M, X_i ⊕ X_j) = P_i ⊕ P_j`, and that evaluation on a free summand
    /// recovers each `X_i`.
    pub fn projectivization_check(&self) -> bool {
        let k = self.len();
        let gens: Vec<Vec<Vec<PolyMatrix>>> = (0..k)
            .map(|a| (0..k).map(|b| self.homs[a][b].generator_matrices()).collect())
            .collect();
        for a in 0..k {
            for b in 0..k {
                let id = PolyMatrix::identity(self.ring.field(), self.summands[b].rank());
                if gens[a][b].iter().any(|f| self.compose(&id, f) != *f) {
                    return false;
                }
                for c in 0..k {
                    for f in &gens[a][b] {
                        for g in &gens[b][c] {
                            if !self.homs[a][c].contains_matrix(&self.compose(g, f)) {
                                return false;
                            }
                        }
                    }
                }
            }
        }
        for i in 0..k {
            for j in i + 1..k {
                let sum = self.summands[i].direct_sum(&self.summands[j]);
                for a in 0..k {
                    let h = hom_lattice(&self.summands[a], &sum).lattice;
                    if h != self.homs[a][i].lattice.direct_sum(&self.homs[a][j].lattice) {
                        return false;
                    }
                }
            }
        }
        let Some(r) = self.summands.iter().position(is_free_rank_one) else {
            return false;
        };
        let ones: AmbVec = self.summands[r].module_generators()[0].clone();
        for i in 0..k {
            let evals: Vec<AmbVec> = gens[r][i].iter().map(|f| f.apply(&ones)).collect();
            match Lattice::generate(self.ring.clone(), self.summands[i].shape().to_vec(), &evals) {
                Ok(l) if l == self.summands[i] => {}
                _ => return false,
            }
        }
        true
    }
}

fn summand_name(x: &Lattice) -> String {
    if x.rank() == x.ring().branches() && x.ranks_by_branch().values().all(|&r| r == 1) {
        if let Ok(s) = x.as_ring() {
            return describe(&s);
        }
    }
    format!("lattice of rank {}", x.rank())
}

/// Global dimension of `End(⊕ family)ᵒᵖ` with the chain-length bound filled in.
pub fn family_global_dimension(tree: &ChainTree, cap: usize) -> Result<GldimReport> {
    let alg = LatticeAlgebra::of_family(tree)?;
    let mut rep = alg.global_dimension(cap)?;
    let n = tree.depth();
    rep.chain_length = Some(n);
    rep.chain_bound = Some(n + 1);
    rep.within_chain_bound = Some(rep.gldim.exact().is_some_and(|g| g <= n + 1));
    Ok(rep)
}

/// Global dimension for a list of indecomposable maximal Cohen–Macaulay
/// lattices that must include the free module.
pub fn fcmt_check(mcm_list: Vec<Lattice>, cap: usize) -> Result<GldimReport> {
    if !mcm_list.iter().any(is_free_rank_one) {
        return Err(Error::MissingFreeSummand);
    }
    let alg = LatticeAlgebra::build(mcm_list)?;
    let mut rep = alg.global_dimension(cap)?;
    rep.assumptions
        .push("the module list is a complete set of indecomposable lattices (not verified)".into());
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FieldSpec;

    fn sg(g: &[u64]) -> Arc<CurveRing> {
        CurveRing::semigroup(FieldSpec::Rational, g).unwrap()
    }

    fn gldim(g: &[u64]) -> GldimReport {
        family_global_dimension(&ChainTree::build(&sg(g)).unwrap(), DEFAULT_PD_CAP).unwrap()
    }

    #[test]
    fn dvr() {
        let rep = gldim(&[1]);
        assert_eq!(rep.gldim, Pd::Exact(1));
        assert_eq!(rep.chain_bound, Some(1));
    }

    #[test]
    fn cusp_blocks_and_radical() {
        let r = sg(&[2, 3]);
        let alg = LatticeAlgebra::of_family(&ChainTree::build(&r).unwrap()).unwrap();
        assert_eq!(alg.len(), 2);
        // Hom(R, R~) = R~ and Hom(R~, R) = t^2 F[[t]]
        assert_eq!(alg.block(0, 1).lattice.value_set(6), vec![0, 1, 2, 3, 4, 5]);
        assert_eq!(alg.block(1, 0).lattice.value_set(6), vec![2, 3, 4, 5]);
        assert_eq!(alg.radical_block(0, 0).value_set(6), vec![2, 3, 4, 5]);
        assert_eq!(alg.radical_block(1, 1).value_set(6), vec![1, 2, 3, 4, 5]);
        assert_eq!(alg.projective_top_dim(0), 1);
        assert_eq!(alg.projective_top_dim(1), 1);
        assert!(alg.projectivization_check());
        assert!(!alg.with_corrupted_composition().projectivization_check());
    }

    #[test]
    fn cusp_global_dimension() {
        let rep = gldim(&[2, 3]);
        // S_R has the cover P_R~ --t^2--> P_R; S_R~ needs R ⊕ R~ → R~ with kernel ≅ R~
        assert_eq!(rep.pd_per_simple, vec![Pd::Exact(1), Pd::Exact(2)]);
        assert_eq!(rep.gldim, Pd::Exact(2));
        assert_eq!(rep.within_chain_bound, Some(true));
        assert_eq!(rep.multiplicity_bound, 2);
    }

    #[test]
    fn projectives_have_pd_zero() {
        let r = sg(&[2, 3]);
        let alg = LatticeAlgebra::of_family(&ChainTree::build(&r).unwrap()).unwrap();
        for i in 0..alg.len() {
            assert_eq!(
                alg.minimal_projective_resolution(&alg.projective(i), 4).unwrap().pd,
                Pd::Exact(0)
            );
            let k = alg.summands()[i].clone();
            assert_eq!(
                alg.minimal_projective_resolution(&GammaModule::Hom(k), 4).unwrap().pd,
                Pd::Exact(0)
            );
        }
    }

    #[test]
    fn two_five() {
        let rep = gldim(&[2, 5]);
        assert_eq!(rep.chain_bound, Some(3));
        assert_eq!(rep.gldim, Pd::Exact(2));
    }

    #[test]
    fn duplicates_and_free_summand() {
        let r = sg(&[2, 3]);
        let rl = Lattice::of_ring(&r, r.clone());
        let shifted = rl.shift(2);
        assert_eq!(
            LatticeAlgebra::build(vec![rl.clone(), shifted]).unwrap_err(),
            Error::DuplicateSummand(0, 1)
        );
        let rt = Lattice::of_ring(&sg(&[1]), r.clone());
        assert_eq!(fcmt_check(vec![rt.clone()], 4).unwrap_err(), Error::MissingFreeSummand);
        let rep = fcmt_check(vec![rl, rt], 8).unwrap();
        assert_eq!(rep.gldim, Pd::Exact(2));
        assert!(rep.within_dimension_bound);
    }

    #[test]
    fn decomposable_summand_is_rejected() {
        let r = sg(&[2, 3]);
        let rl = Lattice::of_ring(&r, r.clone());
        let two = rl.direct_sum(&rl);
        assert!(matches!(
            LatticeAlgebra::build(vec![two]),
            Err(Error::NotIndecomposable(0))
        ));
    }

    #[test]
    fn small_characteristic() {
        let r = CurveRing::semigroup(FieldSpec::Prime { p: 2 }, &[2, 3]).unwrap();
        let rl = Lattice::of_ring(&r, r.clone());
        assert!(matches!(
            LatticeAlgebra::build(vec![rl]),
            Err(Error::CharacteristicTooSmall { p: 2, .. })
        ));
    }
}
