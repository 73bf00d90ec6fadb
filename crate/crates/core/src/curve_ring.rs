//! Reduced curve algebras `R ⊆ E = ∏ F[[t_i]]` with finite conductor.
//!
//! A ring is stored as a reduced echelon basis of its image in `E / t^w E`
//! together with per-branch conductor exponents `c_i` (so `t^{c_i} e_i ∈ R`).
//! Branches carry global labels so that factors of a ring keep referring to
//! the same coordinates of the ambient total quotient ring.

use std::collections::BTreeSet;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::{FieldSpec, Scalar};
use crate::linalg::{Echelon, SparseVec};
use crate::series::{BranchVector, LaurentPoly};

pub const DEFAULT_MAX_WINDOW: i64 = 512;

/// Knobs for ring construction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RingOptions {
    /// Largest closure window tried before giving up on a conductor.
    pub max_window: i64,
    /// Multiplier applied to the self-chosen window (2 under `--double-check`).
    pub window_scale: i64,
}

impl Default for RingOptions {
    fn default() -> Self {
        RingOptions {
            max_window: DEFAULT_MAX_WINDOW,
            window_scale: 1,
        }
    }
}

impl RingOptions {
    pub fn doubled() -> Self {
        RingOptions {
            window_scale: 2,
            ..RingOptions::default()
        }
    }
}

/// Summary invariants of a local ring.
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize)]
pub struct RingReport {
    pub multiplicity: usize,
    pub embedding_dim: usize,
    pub conductor: Vec<i64>,
    pub is_dvr_product: bool,
    pub delta: usize,
}

#[derive(Clone, Debug)]
pub struct CurveRing {
    field: FieldSpec,
    support: Vec<usize>,
    generators: Vec<BranchVector>,
    window: i64,
    rows: Vec<SparseVec>,
    ech: Echelon,
    conductor: Vec<i64>,
    blocks: Vec<Vec<usize>>,
    mult_gens: Vec<BranchVector>,
    radical_gens: Vec<BranchVector>,
    options: RingOptions,
}

pub(crate) fn to_window(v: &BranchVector, below: i64) -> Option<SparseVec> {
    let b = v.len() as i64;
    let mut out: Vec<(usize, Scalar)> = Vec::new();
    for (i, p) in v.0.iter().enumerate() {
        for (e, c) in p.terms() {
            if e < 0 {
                return None;
            }
            if e < below {
                out.push(((e * b) as usize + i, c.clone()));
            }
        }
    }
    out.sort_by_key(|(k, _)| *k);
    Some(out)
}

pub(crate) fn from_window(row: &SparseVec, b: usize) -> BranchVector {
    let mut v = BranchVector::zero(b);
    for (k, c) in row {
        v.0[k % b].add_term((k / b) as i64, c.clone());
    }
    v
}

fn unit(e: i64, i: usize, b: usize, field: FieldSpec) -> SparseVec {
    vec![((e as usize) * b + i, field.one())]
}

/// Span of `1` closed under multiplication by `gens`, modulo `t^h`.
fn closure(field: FieldSpec, b: usize, gens: &[BranchVector], h: i64) -> Echelon {
    let mut ech = Echelon::new();
    let one = BranchVector::ones(field, b);
    let mut queue = vec![one.clone()];
    ech.insert(to_window(&one, h).unwrap());
    while let Some(x) = queue.pop() {
        for g in gens {
            let y = x.mul_trunc(g, h);
            if ech.insert(to_window(&y, h).unwrap()) {
                queue.push(y);
            }
        }
    }
    ech
}

/// Smallest `c_i` with every `t^e e_i`, `c_i ≤ e < h`, in the span; `None` if
/// some branch has no such tail at all.
fn conductor_in(ech: &Echelon, field: FieldSpec, b: usize, h: i64) -> Option<Vec<i64>> {
    (0..b)
        .map(|i| {
            let mut e = h;
            while e > 0 && ech.contains(&unit(e - 1, i, b, field)) {
                e -= 1;
            }
            (e < h).then_some(e)
        })
        .collect()
}

fn truncate_rows(rows: &[SparseVec], b: usize, below: i64) -> Echelon {
    let cut = (below.max(0) as usize) * b;
    Echelon::from_rows(
        rows.iter()
            .map(|r| r.iter().filter(|(k, _)| *k < cut).cloned().collect::<SparseVec>()),
    )
}

impl CurveRing {
    /// The subalgebra of `E` generated by `generators` (1 is always adjoined).
    pub fn build(field: FieldSpec, branches: usize, generators: Vec<BranchVector>) -> Result<Arc<CurveRing>> {
        Self::build_with(field, branches, generators, RingOptions::default())
    }

    pub fn build_with(
        field: FieldSpec,
        branches: usize,
        generators: Vec<BranchVector>,
        options: RingOptions,
    ) -> Result<Arc<CurveRing>> {
        field.validate()?;
        if branches == 0 {
            return Err(Error::Parse("a ring needs at least one branch".into()));
        }
        for g in &generators {
            if g.len() != branches {
                return Err(Error::BranchCountMismatch {
                    expected: branches,
                    found: g.len(),
                });
            }
            for (i, p) in g.0.iter().enumerate() {
                if p.valuation().is_some_and(|v| v < 0) {
                    return Err(Error::NegativeValuation { branch: i });
                }
                for (_, c) in p.terms() {
                    if c.field() != field {
                        return Err(Error::InvalidField("coefficient from another field".into()));
                    }
                }
            }
        }
        let maxval = generators.iter().filter_map(BranchVector::valuation).max().unwrap_or(0);
        let mut h = (2 * maxval + 4).max(8).min(options.max_window);
        let (ech, c) = loop {
            let ech = closure(field, branches, &generators, h);
            if let Some(c) = conductor_in(&ech, field, branches, h) {
                let cmax = *c.iter().max().unwrap();
                if h >= 2 * cmax + 2 {
                    break (ech, c);
                }
            }
            if h >= options.max_window {
                return Err(Error::NoFiniteConductor {
                    max_window: options.max_window,
                });
            }
            h = (2 * h).min(options.max_window);
        };
        let cmax = *c.iter().max().unwrap();
        let w = ((2 * cmax + maxval + 2) * options.window_scale).max(2 * cmax + 2);
        let ech_w = if h >= w {
            truncate_rows(ech.rows(), branches, w)
        } else {
            closure(field, branches, &generators, w)
        };
        if conductor_in(&ech_w, field, branches, w).as_ref() != Some(&c) {
            return Err(Error::NoFiniteConductor {
                max_window: options.max_window,
            });
        }
        let support = (0..branches).collect();
        Ok(Arc::new(Self::assemble(
            field, support, generators, w, ech_w, c, options,
        )))
    }

    /// `F[[t^{a_1}, …, t^{a_k}]]` on one branch.
    pub fn semigroup(field: FieldSpec, gens: &[u64]) -> Result<Arc<CurveRing>> {
        Self::semigroup_with(field, gens, RingOptions::default())
    }

    pub fn semigroup_with(field: FieldSpec, gens: &[u64], options: RingOptions) -> Result<Arc<CurveRing>> {
        let g = gens.iter().fold(0u64, |acc, &a| num_integer::gcd(acc, a));
        if g != 1 || gens.contains(&0) {
            return Err(Error::NotCoprime(gens.to_vec()));
        }
        let generators = gens
            .iter()
            .map(|&a| BranchVector(vec![LaurentPoly::t_pow(field, a as i64)]))
            .collect();
        Self::build_with(field, 1, generators, options)
    }

    /// `∏_{i ∈ support} F[[t_i]]`.
    pub fn normalization(field: FieldSpec, support: Vec<usize>, options: RingOptions) -> Arc<CurveRing> {
        let b = support.len();
        let w = 2 * options.window_scale;
        let ech = Echelon::from_rows((0..w).flat_map(|e| (0..b).map(move |i| unit(e, i, b, field))));
        let gens = (0..b)
            .flat_map(|i| {
                [
                    BranchVector::idempotent(field, b, &[i]),
                    BranchVector::branch_monomial(field, b, i, 1),
                ]
            })
            .collect();
        Arc::new(Self::assemble(field, support, gens, w, ech, vec![0; b], options))
    }

    /// Ring whose image mod `t^hi` is spanned by `elements`, given `t^hi E ⊆ R`.
    ///
    /// Used for rings produced as lattices (endomorphism rings and colons).
    pub fn from_window(
        field: FieldSpec,
        support: Vec<usize>,
        elements: &[BranchVector],
        hi: i64,
        options: RingOptions,
    ) -> Result<Arc<CurveRing>> {
        let b = support.len();
        let hi = hi.max(0);
        let span_at = |w: i64| -> Result<Echelon> {
            let mut ech = Echelon::new();
            for x in elements {
                let sv =
                    to_window(x, w.min(hi)).ok_or_else(|| Error::NotARing("element with negative valuation".into()))?;
                ech.insert(sv);
            }
            for e in hi..w {
                for i in 0..b {
                    ech.insert(unit(e, i, b, field));
                }
            }
            Ok(ech)
        };
        let w0 = hi + 2;
        let ech0 = span_at(w0)?;
        if !ech0.contains(&to_window(&BranchVector::ones(field, b), w0).unwrap()) {
            return Err(Error::NotUnital);
        }
        let c = conductor_in(&ech0, field, b, w0).expect("tail present");
        let cmax = *c.iter().max().unwrap_or(&0);
        let w1 = (2 * cmax + 2).max(w0);
        let probe = Self::assemble(field, support.clone(), Vec::new(), w1, span_at(w1)?, c.clone(), options);
        let rows: Vec<BranchVector> = probe.rows.iter().map(|r| from_window(r, b)).collect();
        for (i, x) in rows.iter().enumerate() {
            for y in &rows[i..] {
                if !probe.contains(&x.mul_trunc(y, w1)) {
                    return Err(Error::NotARing(format!("product {x}·{y} leaves the span")));
                }
            }
        }
        let gens = probe.mult_gens.clone();
        let maxval = gens.iter().filter_map(BranchVector::valuation).max().unwrap_or(0);
        let w = ((2 * cmax + maxval + 2) * options.window_scale).max(2 * cmax + 2);
        Ok(Arc::new(Self::assemble(
            field,
            support,
            gens,
            w,
            span_at(w)?,
            c,
            options,
        )))
    }

    fn assemble(
        field: FieldSpec,
        support: Vec<usize>,
        generators: Vec<BranchVector>,
        window: i64,
        ech: Echelon,
        conductor: Vec<i64>,
        options: RingOptions,
    ) -> CurveRing {
        let b = support.len();
        let rows = ech.rref();
        let ech = Echelon::from_rows(rows.iter().cloned());
        // Idempotent blocks from the constant-term algebra R/(R ∩ tE) ⊆ F^b.
        let consts: Vec<&SparseVec> = rows.iter().filter(|r| r[0].0 < b).collect();
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        for i in 0..b {
            let same = |j: usize| {
                consts.iter().all(|r| {
                    let a = r.iter().find(|(k, _)| *k == i).map(|(_, c)| c.clone());
                    let bb = r.iter().find(|(k, _)| *k == j).map(|(_, c)| c.clone());
                    a == bb
                })
            };
            match blocks.iter_mut().find(|blk| same(blk[0])) {
                Some(blk) => blk.push(i),
                None => blocks.push(vec![i]),
            }
        }
        // Jacobson radical mod t^w: rows without constant term.
        let jrows: Vec<BranchVector> = rows.iter().filter(|r| r[0].0 >= b).map(|r| from_window(r, b)).collect();
        let mut sq = Echelon::new();
        for (i, x) in jrows.iter().enumerate() {
            for y in &jrows[i..] {
                sq.insert(to_window(&x.mul_trunc(y, window), window).unwrap());
            }
        }
        let mut radical_gens = Vec::new();
        for x in &jrows {
            if sq.insert(to_window(x, window).unwrap()) {
                radical_gens.push(x.clone());
            }
        }
        let mut mult_gens = radical_gens.clone();
        if blocks.len() > 1 {
            mult_gens.extend(blocks.iter().map(|blk| BranchVector::idempotent(field, b, blk)));
        }
        let generators = if generators.is_empty() {
            mult_gens.clone()
        } else {
            generators
        };
        CurveRing {
            field,
            support,
            generators,
            window,
            rows,
            ech,
            conductor,
            blocks,
            mult_gens,
            radical_gens,
            options,
        }
    }

    pub fn field(&self) -> FieldSpec {
        self.field
    }

    pub fn branches(&self) -> usize {
        self.support.len()
    }

    /// Global branch labels, ascending.
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn local_index(&self, label: usize) -> Option<usize> {
        self.support.iter().position(|&l| l == label)
    }

    pub fn generators(&self) -> &[BranchVector] {
        &self.generators
    }

    pub fn window(&self) -> i64 {
        self.window
    }

    pub fn options(&self) -> RingOptions {
        self.options
    }

    pub fn conductor(&self) -> &[i64] {
        &self.conductor
    }

    pub fn max_conductor(&self) -> i64 {
        self.conductor.iter().copied().max().unwrap_or(0)
    }

    /// Elements whose products with a module generate it over `R`: lifts of a
    /// basis of `J/J²` plus the primitive idempotents when `R` is not local.
    pub fn mult_gens(&self) -> &[BranchVector] {
        &self.mult_gens
    }

    /// Lifts of a basis of `J/J²`; these generate the Jacobson radical as an ideal.
    pub fn radical_gens(&self) -> &[BranchVector] {
        &self.radical_gens
    }

    /// Reduced echelon basis of `R mod t^w`, as ring elements.
    pub fn window_basis(&self) -> Vec<BranchVector> {
        self.rows.iter().map(|r| from_window(r, self.branches())).collect()
    }

    /// An `F`-spanning set of `R mod t^h` (any `h ≥ 0`).
    pub fn basis_upto(&self, h: i64) -> Vec<BranchVector> {
        let b = self.branches();
        let mut out: Vec<BranchVector> = self
            .rows
            .iter()
            .map(|r| from_window(r, b).truncate(h))
            .filter(|v| !v.is_zero())
            .collect();
        for e in self.window..h {
            for i in 0..b {
                out.push(BranchVector::branch_monomial(self.field, b, i, e));
            }
        }
        out
    }

    pub fn contains(&self, x: &BranchVector) -> bool {
        match to_window(x, self.window) {
            Some(sv) => self.ech.contains(&sv),
            None => false,
        }
    }

    pub fn dim_mod(&self) -> usize {
        self.rows.len()
    }

    /// `dim_F(E/R)`.
    pub fn delta(&self) -> usize {
        self.branches() * self.window as usize - self.rows.len()
    }

    pub fn is_local(&self) -> bool {
        self.blocks.len() == 1
    }

    pub fn is_dvr_product(&self) -> bool {
        self.conductor.iter().all(|&c| c == 0)
    }

    /// Minimal idempotent supports, as sets of global labels.
    pub fn branch_idempotents(&self) -> Vec<Vec<usize>> {
        self.blocks
            .iter()
            .map(|blk| blk.iter().map(|&i| self.support[i]).collect())
            .collect()
    }

    /// The projection `e_T R` for a set `T` of global labels with `e_T ∈ R`.
    pub fn factor(&self, labels: &[usize]) -> Result<Arc<CurveRing>> {
        let set: BTreeSet<usize> = labels.iter().copied().collect();
        let local: Vec<usize> = self
            .support
            .iter()
            .enumerate()
            .filter(|(_, l)| set.contains(l))
            .map(|(i, _)| i)
            .collect();
        if local.is_empty() || local.len() != set.len() {
            return Err(Error::NotIdempotentFactor(labels.to_vec()));
        }
        let b = self.branches();
        if !self.contains(&BranchVector::idempotent(self.field, b, &local)) {
            return Err(Error::NotIdempotentFactor(labels.to_vec()));
        }
        let project = |v: &BranchVector| BranchVector(local.iter().map(|&i| v.0[i].clone()).collect());
        let ech = Echelon::from_rows(
            self.rows
                .iter()
                .map(|r| to_window(&project(&from_window(r, b)), self.window).unwrap()),
        );
        let gens = self.generators.iter().map(project).collect();
        let conductor = local.iter().map(|&i| self.conductor[i]).collect();
        let support: Vec<usize> = local.iter().map(|&i| self.support[i]).collect();
        Ok(Arc::new(Self::assemble(
            self.field,
            support,
            gens,
            self.window,
            ech,
            conductor,
            self.options,
        )))
    }

    pub fn report(&self) -> Result<RingReport> {
        if !self.is_local() {
            return Err(Error::NotLocal {
                blocks: self.blocks.len(),
            });
        }
        let b = self.branches();
        let mut v = vec![self.window; b];
        for r in self.rows.iter().filter(|r| r[0].0 >= b) {
            for (k, _) in r {
                let (e, i) = ((k / b) as i64, k % b);
                v[i] = v[i].min(e);
            }
        }
        Ok(RingReport {
            multiplicity: v.iter().sum::<i64>() as usize,
            embedding_dim: self.radical_gens.len(),
            conductor: self.conductor.clone(),
            is_dvr_product: self.is_dvr_product(),
            delta: self.delta(),
        })
    }

    /// Exponents `e < bound` with some element of valuation exactly `e` (one branch only).
    pub fn value_set(&self, bound: i64) -> Vec<i64> {
        let b = self.branches() as i64;
        let mut vals: BTreeSet<i64> = self.rows.iter().map(|r| r[0].0 as i64 / b).collect();
        vals.extend(self.window..bound);
        vals.into_iter().filter(|&e| e < bound).collect()
    }

    /// Minimal generators of the value semigroup of a one-branch ring.
    pub fn value_semigroup_generators(&self) -> Vec<i64> {
        let c = self.max_conductor();
        let vals = self.value_set(2 * c + 2);
        let mut gens: Vec<i64> = Vec::new();
        for &v in vals.iter().filter(|&&v| v > 0) {
            let reachable = vals
                .iter()
                .filter(|&&a| a > 0 && a < v)
                .any(|&a| vals.binary_search(&(v - a)).is_ok());
            if !reachable {
                gens.push(v);
            }
        }
        gens
    }

    /// Same subring of `K` (same support, same elements).
    pub fn same_ring(&self, other: &CurveRing) -> bool {
        if self.support != other.support || self.conductor != other.conductor {
            return false;
        }
        let w = self.window.max(other.window);
        let (a, b) = (self.basis_upto(w), other.basis_upto(w));
        a.iter().all(|x| other.contains(x)) && b.iter().all(|x| self.contains(x))
    }

    /// Checks closure of the window basis under products and the conductor tail.
    pub fn verify_invariants(&self) -> bool {
        let b = self.branches();
        let basis = self.window_basis();
        let closed = basis
            .iter()
            .enumerate()
            .all(|(i, x)| basis[i..].iter().all(|y| self.contains(&x.mul_trunc(y, self.window))));
        let tail = (0..b).all(|i| {
            (self.conductor[i]..self.window).all(|e| self.contains(&BranchVector::branch_monomial(self.field, b, i, e)))
        });
        closed && tail && self.contains(&BranchVector::ones(self.field, b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q() -> FieldSpec {
        FieldSpec::Rational
    }

    fn mono(e: i64) -> LaurentPoly {
        LaurentPoly::t_pow(q(), e)
    }

    fn node() -> Arc<CurveRing> {
        CurveRing::build(
            q(),
            2,
            vec![
                BranchVector(vec![mono(1), LaurentPoly::zero()]),
                BranchVector(vec![LaurentPoly::zero(), mono(1)]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn diagonal_and_parabola_glue_to_tacnode() {
        let r = CurveRing::build(
            q(),
            2,
            vec![
                BranchVector(vec![mono(1), mono(1)]),
                BranchVector(vec![mono(2), LaurentPoly::zero()]),
            ],
        )
        .unwrap();
        assert_eq!(r.conductor(), &[2, 2]);
        assert!(!r.contains(&BranchVector(vec![mono(1), LaurentPoly::zero()])));
        assert_eq!(r.report().unwrap().delta, 2);
    }

    #[test]
    fn cusp() {
        let r = CurveRing::semigroup(q(), &[2, 3]).unwrap();
        assert_eq!(r.conductor(), &[2]);
        assert!(r.is_local());
        let rep = r.report().unwrap();
        assert_eq!((rep.multiplicity, rep.delta, rep.embedding_dim), (2, 1, 2));
        assert_eq!(r.value_set(6), vec![0, 2, 3, 4, 5]);
        assert!(r.verify_invariants());
        assert!(!r.contains(&BranchVector(vec![mono(1)])));
    }

    #[test]
    fn semigroup_examples() {
        let r = CurveRing::semigroup(q(), &[2, 5]).unwrap();
        assert_eq!(r.conductor(), &[4]);
        assert_eq!(r.value_set(7), vec![0, 2, 4, 5, 6]);
        assert_eq!(r.report().unwrap().delta, 2);
        let d = CurveRing::semigroup(q(), &[1]).unwrap();
        assert!(d.is_dvr_product());
        assert_eq!(d.report().unwrap().multiplicity, 1);
        assert!(matches!(CurveRing::semigroup(q(), &[2, 4]), Err(Error::NotCoprime(_))));
        let r = CurveRing::semigroup(q(), &[3, 4]).unwrap();
        assert_eq!(r.value_set(8), vec![0, 3, 4, 6, 7]);
        assert_eq!(r.report().unwrap().embedding_dim, 2);
    }

    #[test]
    fn node_ring() {
        let r = node();
        assert_eq!(r.conductor(), &[1, 1]);
        assert_eq!(r.branch_idempotents(), vec![vec![0, 1]]);
        assert!(matches!(r.factor(&[0]), Err(Error::NotIdempotentFactor(_))));
        let rep = r.report().unwrap();
        assert_eq!((rep.multiplicity, rep.delta), (2, 1));
    }

    #[test]
    fn split_product() {
        let f = q();
        let r = CurveRing::build(
            f,
            2,
            vec![
                BranchVector::idempotent(f, 2, &[0]),
                BranchVector::branch_monomial(f, 2, 0, 1),
                BranchVector::branch_monomial(f, 2, 1, 1),
            ],
        )
        .unwrap();
        assert_eq!(r.branch_idempotents(), vec![vec![0], vec![1]]);
        let f1 = r.factor(&[1]).unwrap();
        assert!(f1.is_dvr_product());
        assert_eq!(f1.support(), &[1]);
        assert!(r.report().is_err());
    }

    #[test]
    fn rejects_bad_input() {
        let f = q();
        let neg = BranchVector(vec![LaurentPoly::t_pow(f, -1)]);
        assert!(matches!(
            CurveRing::build(f, 1, vec![neg]),
            Err(Error::NegativeValuation { .. })
        ));
        // two identical branches: the conductor is infinite
        let diag = BranchVector(vec![mono(1), mono(1)]);
        assert!(matches!(
            CurveRing::build_with(
                f,
                2,
                vec![diag],
                RingOptions {
                    max_window: 64,
                    window_scale: 1
                }
            ),
            Err(Error::NoFiniteConductor { .. })
        ));
    }

    #[test]
    fn doubled_window_agrees() {
        let a = CurveRing::semigroup(q(), &[3, 5]).unwrap();
        let b = CurveRing::semigroup_with(q(), &[3, 5], RingOptions::doubled()).unwrap();
        assert_eq!(a.report().unwrap(), b.report().unwrap());
        assert!(a.same_ring(&b));
        assert!(b.window() > a.window());
    }

    #[test]
    fn from_window_roundtrip() {
        let r = CurveRing::semigroup(q(), &[3, 4, 5]).unwrap();
        let s = CurveRing::from_window(q(), vec![0], &r.window_basis(), r.window(), RingOptions::default()).unwrap();
        assert!(s.same_ring(&r));
        let bad = CurveRing::from_window(q(), vec![0], &[BranchVector(vec![mono(2)])], 4, RingOptions::default());
        assert!(matches!(bad, Err(Error::NotUnital)));
    }
}
