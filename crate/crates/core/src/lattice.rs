//! Finitely generated torsion-free modules over a [`CurveRing`], realized as
//! lattices `L ⊆ K^n` with an explicit tail.
//!
//! Each coordinate of the ambient `K^n` carries a global branch label. A lattice
//! is stored as the reduced echelon basis of `L / t^hi·std` inside the window of
//! exponents `[lo, hi)`, where `t^hi·std ⊆ L ⊆ t^lo·std`. Window index
//! `(e − lo)·n + k` orders entries by exponent first, so echelon pivots track
//! valuations. Canonical form minimizes `hi` and maximizes `lo`, which makes
//! equality of lattices syntactic.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::curve_ring::CurveRing;
use crate::error::{Error, Result};
use crate::field::FieldSpec;
use crate::linalg::{nullspace_in, Echelon, SparseVec};
use crate::polymat::{column_space_basis, kernel_basis, PolyMatrix, SaturatedBasis};
use crate::series::{BranchVector, LaurentPoly};

/// A vector of `K^n`.
pub type AmbVec = Vec<LaurentPoly>;

/// Largest window width tried when a tail has to be discovered.
pub const MAX_AUTO_WINDOW: i64 = 4096;

pub fn vec_valuation(v: &[LaurentPoly]) -> Option<i64> {
    v.iter().filter_map(LaurentPoly::valuation).min()
}

pub fn vec_is_zero(v: &[LaurentPoly]) -> bool {
    v.iter().all(LaurentPoly::is_zero)
}

pub fn unit_vector(field: FieldSpec, n: usize, k: usize, e: i64) -> AmbVec {
    let mut v = vec![LaurentPoly::zero(); n];
    v[k] = LaurentPoly::t_pow(field, e);
    v
}

/// Window coordinates of `v`, or `None` if some exponent lies below `lo`.
pub(crate) fn to_win(v: &[LaurentPoly], lo: i64, hi: i64) -> Option<SparseVec> {
    let n = v.len();
    let mut out = Vec::new();
    for (k, p) in v.iter().enumerate() {
        for (e, c) in p.terms() {
            if e < lo {
                return None;
            }
            if e < hi {
                out.push(((e - lo) as usize * n + k, c.clone()));
            }
        }
    }
    out.sort_by_key(|(i, _)| *i);
    Some(out)
}

fn from_win(row: &SparseVec, lo: i64, n: usize) -> AmbVec {
    let mut v = vec![LaurentPoly::zero(); n];
    for (i, c) in row {
        v[i % n].add_term(lo + (i / n) as i64, c.clone());
    }
    v
}

fn win_unit(e: i64, k: usize, lo: i64, n: usize, field: FieldSpec) -> SparseVec {
    vec![((e - lo) as usize * n + k, field.one())]
}

/// Local ring indices of the coordinates of `shape`.
fn coord_branches(ring: &CurveRing, shape: &[usize]) -> Vec<usize> {
    shape
        .iter()
        .map(|&l| {
            ring.local_index(l)
                .unwrap_or_else(|| panic!("branch {l} is not in the ring's support"))
        })
        .collect()
}

fn act(r: &BranchVector, x: &[LaurentPoly], cb: &[usize], below: i64) -> AmbVec {
    x.iter().zip(cb).map(|(p, &i)| r.0[i].mul_trunc(p, below)).collect()
}

/// Closure of `seeds` under the ring action modulo `t^hi`, in window `[lo, hi)`.
fn close(ring: &CurveRing, shape: &[usize], lo: i64, hi: i64, seeds: Vec<AmbVec>) -> Echelon {
    let cb = coord_branches(ring, shape);
    let mut ech = Echelon::new();
    let mut queue = Vec::new();
    for s in seeds {
        let sv = to_win(&s, lo, hi).expect("seed below window");
        if ech.insert(sv) {
            queue.push(s);
        }
    }
    while let Some(x) = queue.pop() {
        for g in ring.mult_gens() {
            let y = act(g, &x, &cb, hi);
            if ech.insert(to_win(&y, lo, hi).unwrap()) {
                queue.push(y);
            }
        }
    }
    ech
}

/// Largest conductor exponent among the branches met by `shape`.
fn shape_conductor(ring: &CurveRing, shape: &[usize]) -> i64 {
    coord_branches(ring, shape)
        .into_iter()
        .map(|i| ring.conductor()[i])
        .max()
        .unwrap_or(0)
}

#[derive(Clone, Debug)]
pub struct Lattice {
    ring: Arc<CurveRing>,
    shape: Vec<usize>,
    lo: i64,
    hi: i64,
    rows: Vec<SparseVec>,
    ech: Echelon,
}

impl PartialEq for Lattice {
    fn eq(&self, other: &Self) -> bool {
        self.shape == other.shape && self.lo == other.lo && self.hi == other.hi && self.rows == other.rows
    }
}

impl Eq for Lattice {}

impl Lattice {
    /// Canonical lattice from a subspace of the window `[lo, hi)`, where `hi`
    /// must be a genuine tail (`t^hi·std ⊆ L`).
    pub(crate) fn from_window(
        ring: Arc<CurveRing>,
        shape: Vec<usize>,
        lo: i64,
        hi: i64,
        rows: impl IntoIterator<Item = SparseVec>,
    ) -> Lattice {
        let n = shape.len();
        if n == 0 {
            return Lattice {
                ring,
                shape,
                lo: 0,
                hi: 0,
                rows: Vec::new(),
                ech: Echelon::new(),
            };
        }
        let field = ring.field();
        let ech = Echelon::from_rows(rows);
        let mut h0 = hi;
        while h0 > lo && (0..n).all(|k| ech.contains(&win_unit(h0 - 1, k, lo, n, field))) {
            h0 -= 1;
        }
        let cut = (h0 - lo) as usize * n;
        let trunc = Echelon::from_rows(
            ech.rows()
                .iter()
                .map(|r| r.iter().filter(|(i, _)| *i < cut).cloned().collect::<SparseVec>()),
        );
        let rows = trunc.rref();
        let new_lo = rows.first().map_or(h0, |r| lo + (r[0].0 / n) as i64);
        let off = (new_lo - lo) as usize * n;
        let rows: Vec<SparseVec> = rows
            .into_iter()
            .map(|r| r.into_iter().map(|(i, c)| (i - off, c)).collect())
            .collect();
        Lattice {
            ring,
            shape,
            lo: new_lo,
            hi: h0,
            ech: Echelon::from_rows(rows.iter().cloned()),
            rows,
        }
    }

    pub fn zero(ring: Arc<CurveRing>) -> Lattice {
        Lattice::from_window(ring, Vec::new(), 0, 0, Vec::new())
    }

    /// `t^e` times the standard lattice `∏ F[[t]]` on `shape`.
    pub fn standard(ring: Arc<CurveRing>, shape: Vec<usize>, e: i64) -> Lattice {
        Lattice::from_window(ring, shape, e, e, Vec::new())
    }

    /// Module generated by exact vectors; fails unless they span `K^n`.
    pub fn generate(ring: Arc<CurveRing>, shape: Vec<usize>, gens: &[AmbVec]) -> Result<Lattice> {
        let n = shape.len();
        if gens.iter().any(|g| g.len() != n) {
            return Err(Error::AmbientMismatch);
        }
        let field = ring.field();
        let mut labels: Vec<usize> = shape.clone();
        labels.sort_unstable();
        labels.dedup();
        for l in labels {
            let coords: Vec<usize> = (0..n).filter(|&k| shape[k] == l).collect();
            let cols: Vec<AmbVec> = gens
                .iter()
                .map(|g| coords.iter().map(|&k| g[k].clone()).collect())
                .collect();
            if PolyMatrix::from_columns(coords.len(), &cols).rank(field) < coords.len() {
                return Err(Error::NotTorsionFree(format!(
                    "generators do not span the ambient space on branch {l}"
                )));
            }
        }
        let lo = gens.iter().filter_map(|g| vec_valuation(g)).min().unwrap_or(0);
        let owned = gens.to_vec();
        Lattice::generate_auto(ring, shape, lo, &|h| {
            owned
                .iter()
                .map(|g| g.iter().map(|p| p.truncate(h)).collect())
                .collect()
        })
    }

    /// Module generated by vectors known modulo any power of `t`, of full rank,
    /// with valuations at least `lo`. The tail is found by Nakayama's lemma.
    pub(crate) fn generate_auto(
        ring: Arc<CurveRing>,
        shape: Vec<usize>,
        lo: i64,
        gens_at: &dyn Fn(i64) -> Vec<AmbVec>,
    ) -> Result<Lattice> {
        let n = shape.len();
        if n == 0 {
            return Ok(Lattice::zero(ring));
        }
        let field = ring.field();
        let cmax = shape_conductor(&ring, &shape);
        let u = cmax.max(1);
        let mut width = 2 * u + 2;
        loop {
            let h = lo + width;
            let ech = close(&ring, &shape, lo, h, gens_at(h));
            let mut a = h;
            while a > lo && (0..n).all(|k| ech.contains(&win_unit(a - 1, k, lo, n, field))) {
                a -= 1;
            }
            if h - a >= u {
                let tail = a + cmax;
                let cut = (tail - lo) as usize * n;
                let rows: Vec<SparseVec> = ech
                    .rows()
                    .iter()
                    .map(|r| r.iter().filter(|(i, _)| *i < cut).cloned().collect())
                    .collect();
                return Ok(Lattice::from_window(ring, shape, lo, tail, rows));
            }
            width *= 2;
            if width > MAX_AUTO_WINDOW {
                return Err(Error::WindowExceeded(MAX_AUTO_WINDOW));
            }
        }
    }

    /// Lattice read from a definition: generators plus per-coordinate tail exponents.
    pub fn from_definition(
        ring: Arc<CurveRing>,
        ambient_rank: &[usize],
        gens: &[AmbVec],
        tail: &[i64],
    ) -> Result<Lattice> {
        if ambient_rank.len() != ring.branches() {
            return Err(Error::AmbientMismatch);
        }
        let shape: Vec<usize> = ambient_rank
            .iter()
            .enumerate()
            .flat_map(|(i, &r)| std::iter::repeat_n(ring.support()[i], r))
            .collect();
        if tail.len() != shape.len() {
            return Err(Error::NotTorsionFree(format!(
                "{} tail exponents for ambient rank {}",
                tail.len(),
                shape.len()
            )));
        }
        let mut all = gens.to_vec();
        for (k, &w) in tail.iter().enumerate() {
            all.push(unit_vector(ring.field(), shape.len(), k, w));
        }
        Lattice::generate(ring, shape, &all)
    }

    /// The ring `S` (a subring of `K` on the same branches) as a rank-one lattice over `over`.
    pub fn of_ring(s: &CurveRing, over: Arc<CurveRing>) -> Lattice {
        let w = s.window();
        let rows = s.window_basis().into_iter().map(|x| to_win(&x.0, 0, w).unwrap());
        Lattice::from_window(over, s.support().to_vec(), 0, w, rows)
    }

    /// Inverse of [`Lattice::of_ring`]: the subring of `K` with this underlying set.
    pub fn as_ring(&self) -> Result<Arc<CurveRing>> {
        if self.shape.windows(2).any(|w| w[0] >= w[1]) || self.lo < 0 {
            return Err(Error::NotARing(
                "not a rank-one lattice inside the normalization".into(),
            ));
        }
        let elems: Vec<BranchVector> = self.window_basis().into_iter().map(BranchVector).collect();
        CurveRing::from_window(
            self.ring.field(),
            self.shape.clone(),
            &elems,
            self.hi,
            self.ring.options(),
        )
    }

    /// The Jacobson radical of a ring as a lattice over it.
    pub fn radical_of(ring: &Arc<CurveRing>) -> Lattice {
        let w = ring.window();
        let rows = ring
            .window_basis()
            .into_iter()
            .filter(|x| x.valuation().is_some_and(|v| v > 0))
            .map(|x| to_win(&x.0, 0, w).unwrap());
        Lattice::from_window(ring.clone(), ring.support().to_vec(), 0, w, rows)
    }

    pub fn ring(&self) -> &Arc<CurveRing> {
        &self.ring
    }

    pub fn field(&self) -> FieldSpec {
        self.ring.field()
    }

    /// Branch label of each ambient coordinate.
    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn is_zero(&self) -> bool {
        self.shape.is_empty()
    }

    /// `L ⊆ t^lo·std`.
    pub fn lo(&self) -> i64 {
        self.lo
    }

    /// `t^hi·std ⊆ L`.
    pub fn hi(&self) -> i64 {
        self.hi
    }

    /// `dim_F(L / t^hi·std)`.
    pub fn window_dim(&self) -> usize {
        self.rows.len()
    }

    /// `dim_F(L / t^h·std)` for `h ≥ hi`.
    pub fn dim_mod(&self, h: i64) -> usize {
        assert!(h >= self.hi);
        self.rows.len() + (h - self.hi) as usize * self.rank()
    }

    pub fn window_rows(&self) -> &[SparseVec] {
        &self.rows
    }

    pub fn window_basis(&self) -> Vec<AmbVec> {
        self.rows.iter().map(|r| from_win(r, self.lo, self.rank())).collect()
    }

    /// Per-label ranks in ascending label order.
    pub fn ranks_by_branch(&self) -> BTreeMap<usize, usize> {
        let mut m = BTreeMap::new();
        for &l in &self.shape {
            *m.entry(l).or_insert(0) += 1;
        }
        m
    }

    /// Same lattice viewed over another ring; the caller guarantees it is a module.
    pub(crate) fn with_ring(&self, ring: Arc<CurveRing>) -> Lattice {
        Lattice { ring, ..self.clone() }
    }

    pub fn contains(&self, x: &[LaurentPoly]) -> bool {
        if x.len() != self.rank() {
            return false;
        }
        if self.is_zero() {
            return true;
        }
        match to_win(x, self.lo, self.hi) {
            Some(sv) => self.ech.contains(&sv),
            None => false,
        }
    }

    /// Remainder of `x` modulo the lattice, as window coordinates over `[from, hi)`.
    fn residue(&self, x: &[LaurentPoly], from: i64) -> SparseVec {
        let n = self.rank();
        let sv = to_win(x, from, self.hi).expect("vector below residue window");
        let off = (self.lo - from) as usize * n;
        let mut below: SparseVec = Vec::new();
        let mut inside: SparseVec = Vec::new();
        for (i, c) in sv {
            if i < off {
                below.push((i, c));
            } else {
                inside.push((i - off, c));
            }
        }
        let rem = self.ech.reduce(&inside);
        below.extend(rem.into_iter().map(|(i, c)| (i + off, c)));
        below
    }

    /// Generators over the ring: the window basis plus tail vectors.
    pub fn module_generators(&self) -> Vec<AmbVec> {
        let n = self.rank();
        let field = self.field();
        let cb = coord_branches(&self.ring, &self.shape);
        let mut out = self.window_basis();
        for (k, &i) in cb.iter().enumerate() {
            for j in 0..self.ring.conductor()[i].max(1) {
                out.push(unit_vector(field, n, k, self.hi + j));
            }
        }
        out
    }

    /// An `F`-spanning set of `L mod t^h`.
    pub fn basis_upto(&self, h: i64) -> Vec<AmbVec> {
        let n = self.rank();
        let mut out: Vec<AmbVec> = self
            .window_basis()
            .into_iter()
            .map(|v| v.iter().map(|p| p.truncate(h)).collect::<AmbVec>())
            .filter(|v| !vec_is_zero(v))
            .collect();
        for e in self.hi..h {
            for k in 0..n {
                out.push(unit_vector(self.field(), n, k, e));
            }
        }
        out
    }

    fn radical_window(&self) -> i64 {
        self.hi + shape_conductor(&self.ring, &self.shape).max(1)
    }

    /// Echelon of `J·L mod t^h` in window `[lo, h)`.
    fn radical_times(&self, h: i64) -> Echelon {
        let cb = coord_branches(&self.ring, &self.shape);
        let mut ech = Echelon::new();
        for x in self.basis_upto(h) {
            for g in self.ring.radical_gens() {
                ech.insert(to_win(&act(g, &x, &cb, h), self.lo, h).unwrap());
            }
        }
        ech
    }

    /// Lifts of a basis of `L/JL` (`J` the Jacobson radical), in pivot order.
    pub fn nakayama_generators(&self) -> Vec<AmbVec> {
        if self.is_zero() {
            return Vec::new();
        }
        let h = self.radical_window();
        let mut ech = self.radical_times(h);
        self.basis_upto(h)
            .into_iter()
            .filter(|x| ech.insert(to_win(x, self.lo, h).unwrap()))
            .collect()
    }

    pub fn minimal_generators(&self) -> Result<Vec<AmbVec>> {
        if !self.ring.is_local() {
            return Err(Error::NotLocal {
                blocks: self.ring.branch_idempotents().len(),
            });
        }
        Ok(self.nakayama_generators())
    }

    /// `dim_F(L / JL)`.
    pub fn top_dim(&self) -> usize {
        self.nakayama_generators().len()
    }

    /// True iff `s·L ⊆ L` for every `s` in the overring `s_ring`.
    pub fn scalar_extension_test(&self, s_ring: &CurveRing) -> Result<bool> {
        check_overring(&self.ring, s_ring)?;
        let cb = coord_branches(s_ring, &self.shape);
        Ok(self.window_basis().iter().all(|x| {
            s_ring
                .mult_gens()
                .iter()
                .all(|g| self.contains(&act(g, x, &cb, self.hi)))
        }))
    }

    /// The same lattice as a module over the overring `s_ring`.
    pub fn extend_to(&self, s_ring: &Arc<CurveRing>) -> Result<Lattice> {
        if !self.scalar_extension_test(s_ring)? {
            return Err(Error::NotAModule("lattice is not stable under the overring".into()));
        }
        Ok(self.with_ring(s_ring.clone()))
    }

    /// `{x ∈ L : S·x ⊆ L}`, as a lattice over this lattice's ring.
    pub fn largest_submodule_over(&self, s_ring: &CurveRing) -> Result<Lattice> {
        check_overring(&self.ring, s_ring)?;
        if self.is_zero() {
            return Ok(self.clone());
        }
        let cb = coord_branches(s_ring, &self.shape);
        let n = self.rank();
        let (lo, hi) = (self.lo, self.hi);
        let width = (hi - lo) as usize * n;
        let mut basis: Vec<AmbVec> = self.window_basis();
        loop {
            let ech = Echelon::from_rows(basis.iter().map(|x| to_win(x, lo, hi).unwrap()));
            let cols: Vec<SparseVec> = basis
                .iter()
                .map(|x| {
                    let mut col = Vec::new();
                    for (si, g) in s_ring.mult_gens().iter().enumerate() {
                        let y = to_win(&act(g, x, &cb, hi), lo, hi).unwrap();
                        col.extend(ech.reduce(&y).into_iter().map(|(i, c)| (i + si * width, c)));
                    }
                    col
                })
                .collect();
            let ns = nullspace_in(self.field(), &cols);
            if ns.len() == basis.len() {
                break;
            }
            basis = ns
                .iter()
                .map(|rel| {
                    let mut acc = vec![LaurentPoly::zero(); n];
                    for (j, c) in rel {
                        for (k, p) in basis[*j].iter().enumerate() {
                            acc[k] = acc[k].add(&p.scale(c));
                        }
                    }
                    acc
                })
                .collect();
        }
        Ok(Lattice::from_window(
            self.ring.clone(),
            self.shape.clone(),
            lo,
            hi,
            basis.iter().map(|x| to_win(x, lo, hi).unwrap()),
        ))
    }

    /// Common frame `[lo, hi)` covering both lattices.
    fn frame(a: &Lattice, b: &Lattice) -> (i64, i64) {
        match (a.is_zero(), b.is_zero()) {
            (true, _) => (b.lo, b.hi),
            (_, true) => (a.lo, a.hi),
            _ => (a.lo.min(b.lo), a.hi.max(b.hi)),
        }
    }

    pub fn sum(&self, other: &Lattice) -> Result<Lattice> {
        if self.shape != other.shape {
            return Err(Error::AmbientMismatch);
        }
        let (lo, hi) = Lattice::frame(self, other);
        let rows = self
            .basis_upto(hi)
            .into_iter()
            .chain(other.basis_upto(hi))
            .map(|x| to_win(&x, lo, hi).unwrap())
            .collect::<Vec<_>>();
        Ok(Lattice::from_window(
            self.ring.clone(),
            self.shape.clone(),
            lo,
            hi,
            rows,
        ))
    }

    pub fn direct_sum(&self, other: &Lattice) -> Lattice {
        let (lo, hi) = Lattice::frame(self, other);
        let (n1, n2) = (self.rank(), other.rank());
        let mut shape = self.shape.clone();
        shape.extend_from_slice(&other.shape);
        let pad = |x: AmbVec, before: usize, after: usize| -> AmbVec {
            let mut v = vec![LaurentPoly::zero(); before];
            v.extend(x);
            v.extend(std::iter::repeat_n(LaurentPoly::zero(), after));
            v
        };
        let rows: Vec<SparseVec> = self
            .basis_upto(hi)
            .into_iter()
            .map(|x| pad(x, 0, n2))
            .chain(other.basis_upto(hi).into_iter().map(|x| pad(x, n1, 0)))
            .map(|x| to_win(&x, lo, hi).unwrap())
            .collect();
        Lattice::from_window(self.ring.clone(), shape, lo, hi, rows)
    }

    pub fn direct_sum_all(ring: Arc<CurveRing>, parts: &[Lattice]) -> Lattice {
        parts.iter().fold(Lattice::zero(ring), |acc, p| acc.direct_sum(p))
    }

    /// `t^k·L`.
    pub fn shift(&self, k: i64) -> Lattice {
        Lattice {
            lo: if self.is_zero() { 0 } else { self.lo + k },
            hi: if self.is_zero() { 0 } else { self.hi + k },
            ..self.clone()
        }
    }

    /// True iff every element of `self` lies in `other`.
    pub fn is_sublattice_of(&self, other: &Lattice) -> bool {
        self.shape == other.shape && self.module_generators().iter().all(|g| other.contains(g))
    }

    /// `dim_F(self / sub)`.
    pub fn quotient_dimension(&self, sub: &Lattice) -> Result<usize> {
        if self.shape != sub.shape {
            return Err(Error::AmbientMismatch);
        }
        if !sub.is_sublattice_of(self) {
            return Err(Error::NotASubmodule);
        }
        let h = self.hi.max(sub.hi);
        Ok(self.dim_mod(h) - sub.dim_mod(h))
    }

    /// Elements of `self` whose classes form a basis of `self / sub`, in pivot order.
    pub fn complement_lifts(&self, sub: &Lattice) -> Vec<AmbVec> {
        if self.is_zero() {
            return Vec::new();
        }
        let (lo, h) = if sub.is_zero() {
            (self.lo, self.hi)
        } else {
            (self.lo.min(sub.lo), self.hi.max(sub.hi))
        };
        let sub_rows = if sub.is_zero() { Vec::new() } else { sub.basis_upto(h) };
        let mut ech = Echelon::from_rows(sub_rows.iter().map(|x| to_win(x, lo, h).unwrap()));
        self.basis_upto(h)
            .into_iter()
            .filter(|x| ech.insert(to_win(x, lo, h).unwrap()))
            .collect()
    }

    /// Projection onto a subset of coordinates, as a lattice over `ring`.
    pub fn project(&self, coords: &[usize], ring: Arc<CurveRing>) -> Lattice {
        let shape: Vec<usize> = coords.iter().map(|&k| self.shape[k]).collect();
        let (lo, hi) = (self.lo, self.hi);
        let rows: Vec<SparseVec> = self
            .window_basis()
            .into_iter()
            .chain((0..coords.len()).map(|k| unit_vector(self.field(), self.rank(), coords[k], hi)))
            .map(|x| {
                let y: AmbVec = coords.iter().map(|&k| x[k].clone()).collect();
                to_win(&y, lo, hi).unwrap()
            })
            .collect();
        Lattice::from_window(ring, shape, lo, hi, rows)
    }

    /// Free bases over a product of discrete valuation rings, one block per branch.
    pub fn free_decomposition(&self) -> Result<Vec<FreeBlock>> {
        if !self.ring.is_dvr_product() {
            return Err(Error::NotDvrProduct);
        }
        let n = self.rank();
        let mut out = Vec::new();
        for &label in self.ranks_by_branch().keys() {
            let coords: Vec<usize> = (0..n).filter(|&k| self.shape[k] == label).collect();
            let factor = self.ring.factor(&[label])?;
            let part = self.project(&coords, factor);
            let basis = part
                .minimal_generators()?
                .into_iter()
                .map(|v| {
                    let mut full = vec![LaurentPoly::zero(); n];
                    for (j, &k) in coords.iter().enumerate() {
                        full[k] = v[j].clone();
                    }
                    full
                })
                .collect();
            out.push(FreeBlock { label, basis });
        }
        Ok(out)
    }

    /// Exponents of the pivots (one per window basis vector) followed by the tail.
    pub fn value_set(&self, bound: i64) -> Vec<i64> {
        let n = self.rank().max(1);
        let mut v: Vec<i64> = self.rows.iter().map(|r| self.lo + (r[0].0 / n) as i64).collect();
        v.extend(self.hi..bound);
        v.retain(|&e| e < bound);
        v
    }
}

fn check_overring(r: &CurveRing, s: &CurveRing) -> Result<()> {
    if r.support() != s.support() || r.field() != s.field() {
        return Err(Error::NotAnOverring);
    }
    let h = r.window().max(s.window());
    let inside =
        r.basis_upto(h).iter().all(|x| s.contains(x)) && r.conductor().iter().zip(s.conductor()).all(|(a, b)| b <= a);
    if inside {
        Ok(())
    } else {
        Err(Error::NotAnOverring)
    }
}

impl fmt::Display for Lattice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "lattice of rank {} on branches {:?}, window [{}, {}), {} basis vectors",
            self.rank(),
            self.shape,
            self.lo,
            self.hi,
            self.rows.len()
        )
    }
}

/// Free summand of a lattice over one discrete valuation ring factor.
#[derive(Clone, Debug)]
pub struct FreeBlock {
    pub label: usize,
    pub basis: Vec<AmbVec>,
}

/// A `K`-linear map between lattices, given by a matrix of Laurent polynomials.
#[derive(Clone, Debug)]
pub struct LatticeMap {
    pub source: Lattice,
    pub target: Lattice,
    pub matrix: PolyMatrix,
}

impl LatticeMap {
    /// Checks shapes, branch compatibility, and that the source lands in the target.
    pub fn new(source: Lattice, target: Lattice, matrix: PolyMatrix) -> Result<LatticeMap> {
        let m = LatticeMap::unchecked(source, target, matrix)?;
        if m.source
            .module_generators()
            .iter()
            .all(|g| m.target.contains(&m.apply(g)))
        {
            Ok(m)
        } else {
            Err(Error::NotAMap)
        }
    }

    pub(crate) fn unchecked(source: Lattice, target: Lattice, matrix: PolyMatrix) -> Result<LatticeMap> {
        if matrix.rows != target.rank() || matrix.cols != source.rank() {
            return Err(Error::AmbientMismatch);
        }
        for a in 0..matrix.rows {
            for b in 0..matrix.cols {
                if !matrix.get(a, b).is_zero() && target.shape[a] != source.shape[b] {
                    return Err(Error::AmbientMismatch);
                }
            }
        }
        Ok(LatticeMap { source, target, matrix })
    }

    pub fn identity(l: &Lattice) -> LatticeMap {
        LatticeMap {
            source: l.clone(),
            target: l.clone(),
            matrix: PolyMatrix::identity(l.field(), l.rank()),
        }
    }

    pub fn zero(source: Lattice, target: Lattice) -> LatticeMap {
        let matrix = PolyMatrix::zero(target.rank(), source.rank());
        LatticeMap { source, target, matrix }
    }

    pub fn apply(&self, x: &[LaurentPoly]) -> AmbVec {
        self.matrix.apply(x)
    }

    /// `next ∘ self`.
    pub fn then(&self, next: &LatticeMap) -> LatticeMap {
        LatticeMap {
            source: self.source.clone(),
            target: next.target.clone(),
            matrix: next.matrix.mul(&self.matrix),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.source
            .module_generators()
            .iter()
            .all(|g| vec_is_zero(&self.apply(g)))
    }

    /// `{x ∈ source : f(x) = 0}` in coordinates of a saturated kernel basis.
    pub fn kernel(&self) -> Sublattice {
        let field = self.source.field();
        let (n_src, n_tgt) = (self.source.rank(), self.target.rank());
        let mut labels: Vec<usize> = self.source.shape.clone();
        labels.sort_unstable();
        labels.dedup();
        let mut shape = Vec::new();
        let mut cols: Vec<AmbVec> = Vec::new();
        for l in labels {
            let sc: Vec<usize> = (0..n_src).filter(|&k| self.source.shape[k] == l).collect();
            let tc: Vec<usize> = (0..n_tgt).filter(|&k| self.target.shape[k] == l).collect();
            let kb = if tc.is_empty() {
                PolyMatrix::identity(field, sc.len())
            } else {
                kernel_basis(&self.matrix.submatrix(&tc, &sc), field)
            };
            for j in 0..kb.cols {
                let mut col = vec![LaurentPoly::zero(); n_src];
                for (i, &k) in sc.iter().enumerate() {
                    col[k] = kb.get(i, j).clone();
                }
                cols.push(col);
                shape.push(l);
            }
        }
        let basis = SaturatedBasis::new(PolyMatrix::from_columns(n_src, &cols), field);
        let ring = self.source.ring.clone();
        if shape.is_empty() {
            return Sublattice {
                lattice: Lattice::zero(ring),
                basis,
            };
        }
        let src = &self.source;
        let (lo, hi) = (src.lo, src.hi);
        let mut unknowns = Vec::new();
        for e in lo..hi {
            for col in &cols {
                let v: AmbVec = col.iter().map(|p| p.shift(e).truncate(hi)).collect();
                unknowns.push(src.residue(&v, lo));
            }
        }
        let rows = nullspace_in(field, &unknowns);
        let lattice = Lattice::from_window(ring, shape, lo, hi, rows);
        Sublattice { lattice, basis }
    }

    /// The image, in coordinates of a saturated basis of its `K`-span
    /// (the identity basis when the map has full rank on every branch).
    pub fn image(&self) -> Result<Sublattice> {
        let field = self.source.field();
        let n_tgt = self.target.rank();
        let n_src = self.source.rank();
        let mut labels: Vec<usize> = self.target.shape.clone();
        labels.sort_unstable();
        labels.dedup();
        let mut shape = Vec::new();
        let mut cols: Vec<AmbVec> = Vec::new();
        for l in labels {
            let sc: Vec<usize> = (0..n_src).filter(|&k| self.source.shape[k] == l).collect();
            let tc: Vec<usize> = (0..n_tgt).filter(|&k| self.target.shape[k] == l).collect();
            let cb = if sc.is_empty() {
                PolyMatrix::zero(tc.len(), 0)
            } else {
                let sub = self.matrix.submatrix(&tc, &sc);
                if sub.rank(field) == tc.len() {
                    PolyMatrix::identity(field, tc.len())
                } else {
                    column_space_basis(&sub, field)
                }
            };
            for j in 0..cb.cols {
                let mut col = vec![LaurentPoly::zero(); n_tgt];
                for (i, &k) in tc.iter().enumerate() {
                    col[k] = cb.get(i, j).clone();
                }
                cols.push(col);
                shape.push(l);
            }
        }
        let basis = SaturatedBasis::new(PolyMatrix::from_columns(n_tgt, &cols), field);
        let ring = self.source.ring.clone();
        let images: Vec<AmbVec> = self
            .source
            .module_generators()
            .iter()
            .map(|g| self.apply(g))
            .filter(|v| !vec_is_zero(v))
            .collect();
        let Some(lo) = images.iter().filter_map(|v| vec_valuation(v)).min() else {
            return Ok(Sublattice {
                lattice: Lattice::zero(ring),
                basis,
            });
        };
        let lattice = Lattice::generate_auto(ring, shape, lo, &|h| {
            images.iter().map(|x| basis.coordinates(x, h)).collect()
        })?;
        Ok(Sublattice { lattice, basis })
    }
}

/// A lattice given in coordinates `a` of a saturated basis `B` of a subspace
/// of some ambient `K^n`; the ambient vectors are `B·a`.
#[derive(Clone, Debug)]
pub struct Sublattice {
    pub lattice: Lattice,
    pub basis: SaturatedBasis,
}

impl Sublattice {
    pub fn rank(&self) -> usize {
        self.basis.dim()
    }

    /// Membership of an ambient vector assumed to lie in the `K`-span.
    pub fn contains_ambient(&self, x: &[LaurentPoly]) -> bool {
        if self.lattice.is_zero() {
            return vec_is_zero(x);
        }
        let a = self.basis.coordinates(x, self.lattice.hi());
        self.lattice.contains(&a)
    }

    /// Ambient images of the module generators.
    pub fn ambient_generators(&self) -> Vec<AmbVec> {
        self.lattice
            .module_generators()
            .iter()
            .map(|a| self.basis.basis.apply(a))
            .collect()
    }

    /// The inclusion map into `ambient`.
    pub fn inclusion(&self, ambient: &Lattice) -> LatticeMap {
        LatticeMap {
            source: self.lattice.clone(),
            target: ambient.clone(),
            matrix: self.basis.basis.clone(),
        }
    }
}

/// `Hom_R(C, D)` as a lattice whose coordinates are matrix entries `(a, b)`
/// with `D`-coordinate `a` and `C`-coordinate `b` on the same branch.
#[derive(Clone, Debug)]
pub struct HomLattice {
    pub lattice: Lattice,
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<(usize, usize)>,
}

impl HomLattice {
    pub fn to_matrix(&self, v: &[LaurentPoly]) -> PolyMatrix {
        let mut m = PolyMatrix::zero(self.rows, self.cols);
        for (k, &(a, b)) in self.entries.iter().enumerate() {
            m.set(a, b, v[k].clone());
        }
        m
    }

    pub fn from_matrix(&self, m: &PolyMatrix) -> AmbVec {
        self.entries.iter().map(|&(a, b)| m.get(a, b).clone()).collect()
    }

    /// Matrices of the module generators of the hom lattice.
    pub fn generator_matrices(&self) -> Vec<PolyMatrix> {
        self.lattice
            .module_generators()
            .iter()
            .map(|v| self.to_matrix(v))
            .collect()
    }

    pub fn contains_matrix(&self, m: &PolyMatrix) -> bool {
        self.lattice.contains(&self.from_matrix(m))
    }
}

/// `Hom(C, D)` using the given generators of `C`.
pub fn hom_with_generators(c: &Lattice, d: &Lattice, c_gens: &[AmbVec]) -> HomLattice {
    let entries: Vec<(usize, usize)> = (0..d.rank())
        .flat_map(|a| (0..c.rank()).map(move |b| (a, b)))
        .filter(|&(a, b)| d.shape[a] == c.shape[b])
        .collect();
    let shape: Vec<usize> = entries.iter().map(|&(a, _)| d.shape[a]).collect();
    let ring = c.ring.clone();
    let (rows, cols) = (d.rank(), c.rank());
    if entries.is_empty() || c.is_zero() {
        return HomLattice {
            lattice: Lattice::zero(ring),
            rows,
            cols,
            entries: Vec::new(),
        };
    }
    let lo = d.lo - c.hi;
    let hi = d.hi - c.lo;
    let base = lo + c.lo;
    let span = (d.hi - base) as usize * d.rank();
    let mut unknowns = Vec::with_capacity((hi - lo) as usize * entries.len());
    for e in lo..hi {
        for &(a, b) in &entries {
            let mut col: SparseVec = Vec::new();
            for (gi, g) in c_gens.iter().enumerate() {
                if g[b].is_zero() {
                    continue;
                }
                let mut v = vec![LaurentPoly::zero(); d.rank()];
                v[a] = g[b].shift(e).truncate(d.hi);
                col.extend(d.residue(&v, base).into_iter().map(|(i, x)| (i + gi * span, x)));
            }
            unknowns.push(col);
        }
    }
    let rows_ns = nullspace_in(c.field(), &unknowns);
    HomLattice {
        lattice: Lattice::from_window(ring, shape, lo, hi, rows_ns),
        rows,
        cols,
        entries,
    }
}

/// `Hom_R(C, D)` for lattices over the same ring.
pub fn hom_lattice(c: &Lattice, d: &Lattice) -> HomLattice {
    hom_with_generators(c, d, &c.nakayama_generators())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q() -> FieldSpec {
        FieldSpec::Rational
    }

    fn t(e: i64) -> LaurentPoly {
        LaurentPoly::t_pow(q(), e)
    }

    fn sg(g: &[u64]) -> Arc<CurveRing> {
        CurveRing::semigroup(q(), g).unwrap()
    }

    fn ideal(r: &Arc<CurveRing>, gens: &[i64]) -> Lattice {
        Lattice::generate(
            r.clone(),
            vec![0],
            &gens.iter().map(|&e| vec![t(e)]).collect::<Vec<_>>(),
        )
        .unwrap()
    }

    #[test]
    fn maximal_ideal_generators() {
        let r = sg(&[2, 3]);
        let m = Lattice::radical_of(&r);
        assert_eq!(m, ideal(&r, &[2, 3]));
        let gens = m.minimal_generators().unwrap();
        assert_eq!(gens, vec![vec![t(2)], vec![t(3)]]);
        assert!(m.contains(&[t(4)]));
        assert!(!Lattice::of_ring(&r, r.clone()).contains(&[t(1)]));
        assert!(m.contains(&[LaurentPoly::zero()]));
        let r34 = sg(&[3, 4]);
        let m34 = Lattice::radical_of(&r34);
        assert_eq!(m34.minimal_generators().unwrap(), vec![vec![t(3)], vec![t(4)]]);
        assert_eq!(
            Lattice::of_ring(&r34, r34.clone()).minimal_generators().unwrap().len(),
            1
        );
    }

    #[test]
    fn colon_rings() {
        let r = sg(&[2, 3]);
        let m = Lattice::radical_of(&r);
        let e = hom_lattice(&m, &m).lattice.as_ring().unwrap();
        assert!(e.is_dvr_product());
        let r = sg(&[3, 4]);
        let m = Lattice::radical_of(&r);
        let e = hom_lattice(&m, &m).lattice.as_ring().unwrap();
        assert!(e.same_ring(&sg(&[3, 4, 5])));
        let r = sg(&[2, 5]);
        let m = Lattice::radical_of(&r);
        let e = hom_lattice(&m, &m).lattice.as_ring().unwrap();
        assert!(e.same_ring(&sg(&[2, 3])));
    }

    #[test]
    fn hom_from_free_is_target() {
        let r = sg(&[3, 5]);
        let l = ideal(&r, &[3, 5, 7]);
        let h = hom_lattice(&Lattice::of_ring(&r, r.clone()), &l);
        assert_eq!(h.lattice, l);
    }

    #[test]
    fn sums_and_quotients() {
        let r = sg(&[2, 3]);
        let rl = Lattice::of_ring(&r, r.clone());
        let m = Lattice::radical_of(&r);
        assert_eq!(m.sum(&rl).unwrap(), rl);
        let e = Lattice::standard(r.clone(), vec![0], 0);
        assert_eq!(e.quotient_dimension(&rl).unwrap(), 1);
        assert_eq!(e.quotient_dimension(&e).unwrap(), 0);
        assert!(matches!(rl.quotient_dimension(&e), Err(Error::NotASubmodule)));
        let ds = rl.direct_sum(&e);
        assert_eq!(ds.rank(), 2);
        // R̃ = F[[t]] needs {1, t} over the cusp
        assert_eq!(ds.minimal_generators().unwrap().len(), 3);
        let t2 = Lattice::standard(r.clone(), vec![0], 2);
        let t3 = Lattice::standard(r.clone(), vec![0], 3);
        assert_eq!(t2.sum(&t3).unwrap(), t2);
    }

    #[test]
    fn overring_tests() {
        let r = sg(&[2, 5]);
        let s = sg(&[2, 3]);
        let m = Lattice::radical_of(&r);
        assert!(m.scalar_extension_test(&s).unwrap());
        let r23 = sg(&[2, 3]);
        let e = CurveRing::normalization(q(), vec![0], Default::default());
        assert!(!Lattice::of_ring(&r23, r23.clone()).scalar_extension_test(&e).unwrap());
        assert!(m.scalar_extension_test(&r).unwrap());
        assert!(matches!(
            Lattice::of_ring(&s, s.clone()).scalar_extension_test(&r),
            Err(Error::NotAnOverring)
        ));
    }

    #[test]
    fn largest_submodules() {
        let r = sg(&[3, 4, 5]);
        let e = CurveRing::normalization(q(), vec![0], Default::default());
        let j = ideal(&r, &[0, 1]);
        assert_eq!(j.value_set(6), vec![0, 1, 3, 4, 5]);
        let np = j.largest_submodule_over(&e).unwrap();
        assert_eq!(np, Lattice::standard(r.clone(), vec![0], 3));
        assert_eq!(j.quotient_dimension(&np).unwrap(), 2);
        let r23 = sg(&[2, 3]);
        let c = Lattice::of_ring(&r23, r23.clone()).largest_submodule_over(&e).unwrap();
        assert_eq!(c, Lattice::standard(r23.clone(), vec![0], 2));
        let t = Lattice::standard(r23.clone(), vec![0], 1);
        assert_eq!(t.largest_submodule_over(&e).unwrap(), t);
    }

    #[test]
    fn kernel_and_image() {
        let r = sg(&[2, 3]);
        let rl = Lattice::of_ring(&r, r.clone());
        let r2 = rl.direct_sum(&rl);
        let mut a = PolyMatrix::zero(1, 2);
        a.set(0, 0, t(2));
        a.set(0, 1, t(2).neg());
        let f = LatticeMap::new(r2.clone(), rl.clone(), a).unwrap();
        let k = f.kernel();
        assert_eq!(k.rank(), 1);
        assert_eq!(k.lattice, rl);
        let im = f.image().unwrap();
        assert_eq!(im.lattice, ideal(&r, &[2]));
        assert_eq!(im.lattice.value_set(7), vec![2, 4, 5, 6]);
        // multiplication by t on the DVR
        let d = sg(&[1]);
        let dl = Lattice::of_ring(&d, d.clone());
        let mut m = PolyMatrix::zero(1, 1);
        m.set(0, 0, t(1));
        let g = LatticeMap::new(dl.clone(), dl.clone(), m).unwrap();
        assert!(g.kernel().lattice.is_zero());
        assert_eq!(g.image().unwrap().lattice, Lattice::standard(d.clone(), vec![0], 1));
    }

    #[test]
    fn image_with_deficient_rank() {
        // (a) ↦ (a, a): image is the diagonal copy
        let r = sg(&[2, 3]);
        let rl = Lattice::of_ring(&r, r.clone());
        let mut m = PolyMatrix::zero(2, 1);
        m.set(0, 0, t(0));
        m.set(1, 0, t(0));
        let f = LatticeMap::new(rl.clone(), rl.direct_sum(&rl), m).unwrap();
        let im = f.image().unwrap();
        assert_eq!(im.rank(), 1);
        assert_eq!(im.lattice, rl);
        assert!(im.contains_ambient(&[t(2), t(2)]));
        assert!(!im.contains_ambient(&[t(1), t(1)]));
    }

    #[test]
    fn maps_are_checked() {
        let r = sg(&[2, 3]);
        let rl = Lattice::of_ring(&r, r.clone());
        let mut m = PolyMatrix::zero(1, 1);
        m.set(0, 0, t(1));
        assert!(matches!(
            LatticeMap::new(rl.clone(), rl.clone(), m),
            Err(Error::NotAMap)
        ));
    }

    #[test]
    fn free_decomposition_over_dvr() {
        let d = sg(&[1]);
        let l = ideal(&d, &[2, 3]);
        let blocks = l.free_decomposition().unwrap();
        assert_eq!(blocks.len(), 1);
        assert_eq!(blocks[0].basis, vec![vec![t(2)]]);
        let r = sg(&[2, 3]);
        assert!(matches!(
            Lattice::radical_of(&r).free_decomposition(),
            Err(Error::NotDvrProduct)
        ));
    }

    #[test]
    fn definitions_need_full_rank() {
        let r = sg(&[2, 3]);
        let bad = Lattice::generate(r.clone(), vec![0, 0], &[vec![t(0), t(0)]]);
        assert!(matches!(bad, Err(Error::NotTorsionFree(_))));
        let ok = Lattice::from_definition(r.clone(), &[2], &[vec![t(0), t(0)]], &[5, 5]).unwrap();
        assert_eq!(ok.rank(), 2);
        assert!(ok.contains(&[t(5), LaurentPoly::zero()]));
    }
}
