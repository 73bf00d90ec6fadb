//! Matrices of Laurent polynomials and the `K = F((t))`-linear algebra built on them.
//!
//! Kernels and column spaces are computed by column reduction over the Euclidean
//! ring `F[t]` and then saturated at `t`, which yields bases that are also bases
//! over `F[[t]]`. Coordinates with respect to such a basis are power series; they
//! are only ever needed modulo a lattice tail and are computed truncated.

use crate::field::{FieldSpec, Scalar};
use crate::linalg::{dense_inverse, nullspace_in, Echelon, SparseVec};
use crate::series::LaurentPoly;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolyMatrix {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<Vec<LaurentPoly>>,
}

impl PolyMatrix {
    pub fn zero(rows: usize, cols: usize) -> Self {
        PolyMatrix {
            rows,
            cols,
            entries: vec![vec![LaurentPoly::zero(); cols]; rows],
        }
    }

    pub fn identity(field: FieldSpec, n: usize) -> Self {
        let mut m = PolyMatrix::zero(n, n);
        for i in 0..n {
            m.entries[i][i] = LaurentPoly::constant(field.one());
        }
        m
    }

    pub fn get(&self, r: usize, c: usize) -> &LaurentPoly {
        &self.entries[r][c]
    }

    pub fn set(&mut self, r: usize, c: usize, p: LaurentPoly) {
        self.entries[r][c] = p;
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().flatten().all(LaurentPoly::is_zero)
    }

    pub fn mul(&self, other: &PolyMatrix) -> PolyMatrix {
        assert_eq!(self.cols, other.rows, "matrix shape mismatch");
        let mut out = PolyMatrix::zero(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self.entries[i][k];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = &other.entries[k][j];
                    if !b.is_zero() {
                        out.entries[i][j] = out.entries[i][j].add(&a.mul(b));
                    }
                }
            }
        }
        out
    }

    pub fn apply(&self, v: &[LaurentPoly]) -> Vec<LaurentPoly> {
        assert_eq!(self.cols, v.len(), "vector length mismatch");
        (0..self.rows)
            .map(|i| {
                let mut acc = LaurentPoly::zero();
                for (a, x) in self.entries[i].iter().zip(v) {
                    if !a.is_zero() && !x.is_zero() {
                        acc = acc.add(&a.mul(x));
                    }
                }
                acc
            })
            .collect()
    }

    pub fn column(&self, c: usize) -> Vec<LaurentPoly> {
        (0..self.rows).map(|r| self.entries[r][c].clone()).collect()
    }

    pub fn from_columns(rows: usize, cols: &[Vec<LaurentPoly>]) -> Self {
        let mut m = PolyMatrix::zero(rows, cols.len());
        for (j, c) in cols.iter().enumerate() {
            for (i, p) in c.iter().enumerate() {
                m.entries[i][j] = p.clone();
            }
        }
        m
    }

    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> PolyMatrix {
        let mut m = PolyMatrix::zero(rows.len(), cols.len());
        for (i, &r) in rows.iter().enumerate() {
            for (j, &c) in cols.iter().enumerate() {
                m.entries[i][j] = self.entries[r][c].clone();
            }
        }
        m
    }

    /// Minimal exponent among all entries.
    pub fn valuation(&self) -> Option<i64> {
        self.entries.iter().flatten().filter_map(LaurentPoly::valuation).min()
    }

    fn shifted(&self, k: i64) -> PolyMatrix {
        PolyMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self
                .entries
                .iter()
                .map(|r| r.iter().map(|p| p.shift(k)).collect())
                .collect(),
        }
    }

    fn col_axpy(&mut self, dst: usize, src: usize, q: &LaurentPoly) {
        for r in 0..self.rows {
            let s = &self.entries[r][src];
            if !s.is_zero() {
                let d = self.entries[r][dst].sub(&q.mul(s));
                self.entries[r][dst] = d;
            }
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        for r in 0..self.rows {
            self.entries[r].swap(a, b);
        }
    }

    /// Column echelon form `A·U = H` over `F[t]`; returns `(rank, H, U)`.
    ///
    /// Laurent entries are first moved into `F[t]` by a global power of `t`,
    /// which changes neither the kernel nor the `K`-span of the columns.
    pub fn column_echelon(&self, field: FieldSpec) -> (usize, PolyMatrix, PolyMatrix) {
        let shift = self.valuation().map(|v| -v.min(0)).unwrap_or(0);
        let mut h = self.shifted(shift);
        let mut u = PolyMatrix::identity(field, self.cols);
        let mut k = 0;
        for r in 0..self.rows {
            if k == self.cols {
                break;
            }
            loop {
                let nz: Vec<usize> = (k..self.cols).filter(|&j| !h.entries[r][j].is_zero()).collect();
                if nz.is_empty() {
                    break;
                }
                let p = *nz
                    .iter()
                    .min_by_key(|&&j| (h.entries[r][j].degree().unwrap(), j))
                    .unwrap();
                if nz.len() == 1 {
                    h.swap_cols(p, k);
                    u.swap_cols(p, k);
                    k += 1;
                    break;
                }
                let piv = h.entries[r][p].clone();
                for &j in &nz {
                    if j != p {
                        let (q, _) = h.entries[r][j].div_rem(&piv);
                        h.col_axpy(j, p, &q);
                        u.col_axpy(j, p, &q);
                    }
                }
            }
        }
        (k, h.shifted(-shift), u)
    }

    pub fn rank(&self, field: FieldSpec) -> usize {
        self.column_echelon(field).0
    }

    /// Constant-term matrix (entries must have nonnegative valuation).
    pub fn reduce_mod_t(&self, field: FieldSpec) -> Vec<Vec<Scalar>> {
        self.entries
            .iter()
            .map(|r| {
                r.iter()
                    .map(|p| p.coeff(0).cloned().unwrap_or_else(|| field.zero()))
                    .collect()
            })
            .collect()
    }
}

/// Replaces the columns of a polynomial matrix of full column rank by a basis of
/// `K-span ∩ F[[t]]^n` (all columns remain polynomials).
pub fn saturate_at_t(b: &PolyMatrix, field: FieldSpec) -> PolyMatrix {
    let mut m = b.clone();
    // Divide each column by its own t-content first.
    for j in 0..m.cols {
        let cv = (0..m.rows).filter_map(|i| m.entries[i][j].valuation()).min();
        if let Some(cv) = cv {
            for i in 0..m.rows {
                m.entries[i][j] = m.entries[i][j].shift(-cv);
            }
        }
    }
    loop {
        let consts = m.reduce_mod_t(field);
        let cols: Vec<SparseVec> = (0..m.cols)
            .map(|j| {
                (0..m.rows)
                    .filter(|&i| !consts[i][j].is_zero())
                    .map(|i| (i, consts[i][j].clone()))
                    .collect()
            })
            .collect();
        let rels = nullspace_in(field, &cols);
        let Some(rel) = rels.into_iter().next() else {
            return m;
        };
        // Replace the last column involved by (Σ c_j col_j) / t.
        let target = rel.last().unwrap().0;
        let mut combo = vec![LaurentPoly::zero(); m.rows];
        for (j, c) in &rel {
            for (i, slot) in combo.iter_mut().enumerate() {
                *slot = slot.add(&m.entries[i][*j].scale(c));
            }
        }
        for (i, p) in combo.into_iter().enumerate() {
            debug_assert!(p.valuation().is_none_or(|v| v >= 1));
            m.entries[i][target] = p.shift(-1);
        }
    }
}

/// `F[[t]]`-saturated basis of the `K`-kernel of `a` (columns of the result).
pub fn kernel_basis(a: &PolyMatrix, field: FieldSpec) -> PolyMatrix {
    let (rank, _, u) = a.column_echelon(field);
    let cols: Vec<usize> = (rank..a.cols).collect();
    let rows: Vec<usize> = (0..a.cols).collect();
    saturate_at_t(&u.submatrix(&rows, &cols), field)
}

/// `F[[t]]`-saturated basis of the `K`-span of the columns of `a`.
pub fn column_space_basis(a: &PolyMatrix, field: FieldSpec) -> PolyMatrix {
    let (rank, h, _) = a.column_echelon(field);
    let cols: Vec<usize> = (0..rank).collect();
    let rows: Vec<usize> = (0..a.rows).collect();
    saturate_at_t(&h.submatrix(&rows, &cols), field)
}

/// Rows on which a saturated basis is invertible modulo `t`.
pub fn unit_minor_rows(b: &PolyMatrix, field: FieldSpec) -> Vec<usize> {
    let consts = b.reduce_mod_t(field);
    // Row-space echelon of the constant matrix: pick rows greedily.
    let mut ech = Echelon::new();
    let mut rows = Vec::new();
    for (i, row) in consts.iter().enumerate() {
        let v: SparseVec = row
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(j, c)| (j, c.clone()))
            .collect();
        if ech.insert(v) {
            rows.push(i);
        }
        if rows.len() == b.cols {
            break;
        }
    }
    assert_eq!(rows.len(), b.cols, "basis is not saturated at t");
    rows
}

/// A saturated basis `B` of a `K`-subspace together with the data needed to read
/// off coordinates: `x = B·a` with `a = P⁻¹ x_P` for the unit minor `P`.
#[derive(Clone, Debug)]
pub struct SaturatedBasis {
    pub basis: PolyMatrix,
    pub pivot_rows: Vec<usize>,
    minor: Vec<Vec<Vec<Scalar>>>,
    minor0_inv: Vec<Vec<Scalar>>,
    field: FieldSpec,
}

impl SaturatedBasis {
    pub fn new(basis: PolyMatrix, field: FieldSpec) -> Self {
        let pivot_rows = unit_minor_rows(&basis, field);
        let s = basis.cols;
        let deg = basis
            .entries
            .iter()
            .flatten()
            .filter_map(LaurentPoly::degree)
            .max()
            .unwrap_or(0)
            .max(0) as usize;
        let mut minor = vec![vec![vec![field.zero(); s]; s]; deg + 1];
        for (i, &r) in pivot_rows.iter().enumerate() {
            for j in 0..s {
                for (e, c) in basis.entries[r][j].terms() {
                    minor[e as usize][i][j] = c.clone();
                }
            }
        }
        let minor0_inv = if s == 0 {
            Vec::new()
        } else {
            dense_inverse(&minor[0], field).expect("unit minor")
        };
        SaturatedBasis {
            basis,
            pivot_rows,
            minor,
            minor0_inv,
            field,
        }
    }

    /// Identity basis of `K^n`.
    pub fn identity(field: FieldSpec, n: usize) -> Self {
        SaturatedBasis::new(PolyMatrix::identity(field, n), field)
    }

    pub fn dim(&self) -> usize {
        self.basis.cols
    }

    pub fn ambient(&self) -> usize {
        self.basis.rows
    }

    /// Coordinates of `x` (assumed in the `K`-span), truncated below `t^below`.
    pub fn coordinates(&self, x: &[LaurentPoly], below: i64) -> Vec<LaurentPoly> {
        let s = self.dim();
        let f = self.field;
        let xp: Vec<&LaurentPoly> = self.pivot_rows.iter().map(|&r| &x[r]).collect();
        let Some(v) = xp.iter().filter_map(|p| p.valuation()).min() else {
            return vec![LaurentPoly::zero(); s];
        };
        let n = below - v;
        if n <= 0 {
            return vec![LaurentPoly::zero(); s];
        }
        let n = n as usize;
        // y_k = coefficient vectors of t^{-v} x_P
        let y_at = |k: usize| -> Vec<Scalar> {
            xp.iter()
                .map(|p| p.coeff(v + k as i64).cloned().unwrap_or_else(|| f.zero()))
                .collect()
        };
        let mut z: Vec<Vec<Scalar>> = Vec::with_capacity(n);
        for k in 0..n {
            let mut rhs = y_at(k);
            for j in 1..=k.min(self.minor.len() - 1) {
                let pj = &self.minor[j];
                let zk = &z[k - j];
                for (i, slot) in rhs.iter_mut().enumerate() {
                    for (l, zl) in zk.iter().enumerate() {
                        if !pj[i][l].is_zero() && !zl.is_zero() {
                            *slot = &*slot - &(&pj[i][l] * zl);
                        }
                    }
                }
            }
            let zk: Vec<Scalar> = (0..s)
                .map(|i| {
                    let mut acc = f.zero();
                    for (l, r) in rhs.iter().enumerate() {
                        if !r.is_zero() {
                            acc = &acc + &(&self.minor0_inv[i][l] * r);
                        }
                    }
                    acc
                })
                .collect();
            z.push(zk);
        }
        (0..s)
            .map(|i| LaurentPoly::from_terms(z.iter().enumerate().map(|(k, zk)| (v + k as i64, zk[i].clone()))))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64) -> Scalar {
        FieldSpec::Rational.from_i64(n)
    }

    fn poly(terms: &[(i64, i64)]) -> LaurentPoly {
        LaurentPoly::from_terms(terms.iter().map(|&(e, c)| (e, q(c))))
    }

    #[test]
    fn kernel_of_difference_map() {
        // (a, b) ↦ t²a − t²b
        let mut a = PolyMatrix::zero(1, 2);
        a.set(0, 0, poly(&[(2, 1)]));
        a.set(0, 1, poly(&[(2, -1)]));
        let k = kernel_basis(&a, FieldSpec::Rational);
        assert_eq!(k.cols, 1);
        assert!(a.mul(&k).is_zero());
        assert_eq!(k.get(0, 0), &k.get(1, 0).clone());
    }

    #[test]
    fn saturation_divides_by_t() {
        let b = PolyMatrix::from_columns(2, &[vec![poly(&[(1, 1)]), poly(&[(1, 1), (2, 1)])]]);
        let s = saturate_at_t(&b, FieldSpec::Rational);
        assert_eq!(s.get(0, 0), &poly(&[(0, 1)]));
        let b2 = PolyMatrix::from_columns(
            2,
            &[
                vec![poly(&[(0, 1)]), poly(&[(0, 1)])],
                vec![poly(&[(0, 1)]), poly(&[(0, 1), (1, 1)])],
            ],
        );
        let s2 = saturate_at_t(&b2, FieldSpec::Rational);
        let consts = s2.reduce_mod_t(FieldSpec::Rational);
        let det = &(&consts[0][0] * &consts[1][1]) - &(&consts[0][1] * &consts[1][0]);
        assert!(!det.is_zero());
    }

    #[test]
    fn truncated_coordinates() {
        // basis column (1+t, 1): x = (1+t)·a, a = t²/(1−t) has infinitely many terms
        let b = PolyMatrix::from_columns(2, &[vec![poly(&[(0, 1), (1, 1)]), poly(&[(0, 1)])]]);
        let sb = SaturatedBasis::new(b, FieldSpec::Rational);
        let a = poly(&[(2, 1), (3, 1), (4, 1), (5, 1)]);
        let x = sb.basis.apply(std::slice::from_ref(&a));
        let coords = sb.coordinates(&x, 5);
        assert_eq!(coords[0], a.truncate(5));
    }

    #[test]
    fn column_space_rank_deficient() {
        let mut a = PolyMatrix::zero(2, 2);
        a.set(0, 0, poly(&[(0, 1)]));
        a.set(1, 0, poly(&[(1, 1)]));
        a.set(0, 1, poly(&[(1, 1)]));
        a.set(1, 1, poly(&[(2, 1)]));
        assert_eq!(a.rank(FieldSpec::Rational), 1);
        let c = column_space_basis(&a, FieldSpec::Rational);
        assert_eq!(c.cols, 1);
    }
}
