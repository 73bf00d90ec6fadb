//! Sparse exact linear algebra over a [`Scalar`] field.
//!
//! Vectors are sorted `(index, value)` lists without zeros. [`Echelon`] keeps a
//! row-echelon basis whose pivot is the smallest index of each row, so lower
//! indices are eliminated first; lattice windows order indices by exponent,
//! which makes pivots coincide with valuations.

use std::collections::BTreeMap;

use crate::field::Scalar;

pub type SparseVec = Vec<(usize, Scalar)>;

pub fn sv_from_map(m: BTreeMap<usize, Scalar>) -> SparseVec {
    m.into_iter().filter(|(_, c)| !c.is_zero()).collect()
}

pub fn sv_scale(v: &SparseVec, c: &Scalar) -> SparseVec {
    if c.is_zero() {
        return Vec::new();
    }
    v.iter().map(|(i, x)| (*i, x * c)).collect()
}

/// `a + c·b`.
pub fn sv_add_scaled(a: &SparseVec, b: &SparseVec, c: &Scalar) -> SparseVec {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let take_a = j >= b.len() || (i < a.len() && a[i].0 < b[j].0);
        let take_b = i >= a.len() || (j < b.len() && b[j].0 < a[i].0);
        if take_a {
            out.push(a[i].clone());
            i += 1;
        } else if take_b {
            let v = &b[j].1 * c;
            if !v.is_zero() {
                out.push((b[j].0, v));
            }
            j += 1;
        } else {
            let v = &a[i].1 + &(&b[j].1 * c);
            if !v.is_zero() {
                out.push((a[i].0, v));
            }
            i += 1;
            j += 1;
        }
    }
    out
}

fn acc_add_scaled(acc: &mut BTreeMap<usize, Scalar>, row: &SparseVec, c: &Scalar) {
    for (j, v) in row {
        let d = v * c;
        match acc.get_mut(j) {
            Some(old) => {
                let s = &*old + &d;
                if s.is_zero() {
                    acc.remove(j);
                } else {
                    *old = s;
                }
            }
            None => {
                if !d.is_zero() {
                    acc.insert(*j, d);
                }
            }
        }
    }
}

/// A row-echelon basis of a subspace, optionally tracking each row as a
/// combination of tagged input vectors.
#[derive(Clone, Debug, Default)]
pub struct Echelon {
    rows: Vec<SparseVec>,
    pivots: BTreeMap<usize, usize>,
    combos: Vec<SparseVec>,
    tracking: bool,
}

impl Echelon {
    pub fn new() -> Self {
        Echelon::default()
    }

    pub fn tracking() -> Self {
        Echelon {
            tracking: true,
            ..Echelon::default()
        }
    }

    pub fn from_rows<I: IntoIterator<Item = SparseVec>>(rows: I) -> Self {
        let mut e = Echelon::new();
        for r in rows {
            e.insert(r);
        }
        e
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn is_pivot(&self, col: usize) -> bool {
        self.pivots.contains_key(&col)
    }

    pub fn pivot_cols(&self) -> impl Iterator<Item = usize> + '_ {
        self.pivots.keys().copied()
    }

    pub fn rows(&self) -> &[SparseVec] {
        &self.rows
    }

    fn reduce_acc(&self, acc: &mut BTreeMap<usize, Scalar>, mut combo: Option<&mut BTreeMap<usize, Scalar>>) {
        let mut cursor = 0usize;
        loop {
            let next = acc
                .range(cursor..)
                .find(|(k, _)| self.pivots.contains_key(k))
                .map(|(k, c)| (*k, c.clone()));
            let Some((k, c)) = next else { break };
            let r = self.pivots[&k];
            let neg = -&c;
            acc_add_scaled(acc, &self.rows[r], &neg);
            if let Some(cm) = combo.as_deref_mut() {
                acc_add_scaled(cm, &self.combos[r], &neg);
            }
            cursor = k + 1;
        }
    }

    /// Remainder of `v` after elimination; zero iff `v` lies in the span.
    pub fn reduce(&self, v: &SparseVec) -> SparseVec {
        let mut acc: BTreeMap<usize, Scalar> = v.iter().cloned().collect();
        self.reduce_acc(&mut acc, None);
        sv_from_map(acc)
    }

    /// Remainder plus the combination `c` of row tags with `v = Σ c·tagged + remainder`.
    pub fn reduce_tracked(&self, v: &SparseVec) -> (SparseVec, SparseVec) {
        let mut acc: BTreeMap<usize, Scalar> = v.iter().cloned().collect();
        let mut combo = BTreeMap::new();
        self.reduce_acc(&mut acc, Some(&mut combo));
        let neg: SparseVec = sv_from_map(combo).into_iter().map(|(i, c)| (i, -&c)).collect();
        (sv_from_map(acc), neg)
    }

    pub fn contains(&self, v: &SparseVec) -> bool {
        self.reduce(v).is_empty()
    }

    /// Inserts `v`; returns true if the span grew.
    pub fn insert(&mut self, v: SparseVec) -> bool {
        self.insert_tagged(v, Vec::new()).is_none()
    }

    /// Inserts `v` whose provenance is `tag` (a combination of input tags).
    ///
    /// Returns `None` if the span grew; otherwise `Some(dependency)`, where the
    /// dependency is a combination of tags that vanishes (only meaningful when
    /// tracking).
    pub fn insert_tagged(&mut self, v: SparseVec, tag: SparseVec) -> Option<SparseVec> {
        let mut acc: BTreeMap<usize, Scalar> = v.into_iter().collect();
        let mut combo: BTreeMap<usize, Scalar> = tag.into_iter().collect();
        self.reduce_acc(&mut acc, if self.tracking { Some(&mut combo) } else { None });
        if acc.is_empty() {
            return Some(sv_from_map(combo));
        }
        let (&p, lead) = acc.iter().next().unwrap();
        let inv = lead.inv().unwrap();
        let row = sv_scale(&sv_from_map(acc), &inv);
        let cm = if self.tracking {
            sv_scale(&sv_from_map(combo), &inv)
        } else {
            Vec::new()
        };
        self.pivots.insert(p, self.rows.len());
        self.rows.push(row);
        self.combos.push(cm);
        None
    }

    /// Reduced row-echelon rows sorted by pivot.
    pub fn rref(&self) -> Vec<SparseVec> {
        let mut out: BTreeMap<usize, SparseVec> = BTreeMap::new();
        // Process from the largest pivot down so each row is reduced by rows
        // that are already fully reduced.
        for (&p, &r) in self.pivots.iter().rev() {
            let mut acc: BTreeMap<usize, Scalar> = self.rows[r].iter().cloned().collect();
            for (&q, row) in out.iter() {
                if let Some(c) = acc.get(&q).cloned() {
                    acc_add_scaled(&mut acc, row, &-&c);
                }
            }
            out.insert(p, sv_from_map(acc));
        }
        out.into_values().collect()
    }
}

/// Basis of `{λ : Σ λ_j v_j = 0}` as sparse vectors over the index of `vectors`.
pub fn nullspace_in(field: crate::field::FieldSpec, vectors: &[SparseVec]) -> Vec<SparseVec> {
    let mut ech = Echelon::tracking();
    let mut out = Vec::new();
    for (j, v) in vectors.iter().enumerate() {
        if let Some(dep) = ech.insert_tagged(v.clone(), vec![(j, field.one())]) {
            if !dep.is_empty() {
                out.push(dep);
            }
        }
    }
    out
}

/// Dense square matrix inverse over a field; `None` if singular.
pub fn dense_inverse(m: &[Vec<Scalar>], field: crate::field::FieldSpec) -> Option<Vec<Vec<Scalar>>> {
    let n = m.len();
    let mut a: Vec<Vec<Scalar>> = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { field.one() } else { field.zero() }));
            r
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, piv);
        let inv = a[col][col].inv().unwrap();
        for x in a[col].iter_mut() {
            *x = &*x * &inv;
        }
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let c = a[r][col].clone();
                for k in 0..2 * n {
                    let d = &a[col][k] * &c;
                    a[r][k] = &a[r][k] - &d;
                }
            }
        }
    }
    Some(a.into_iter().map(|r| r[n..].to_vec()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FieldSpec;

    fn v(entries: &[(usize, i64)]) -> SparseVec {
        let f = FieldSpec::Rational;
        entries.iter().map(|&(i, c)| (i, f.from_i64(c))).collect()
    }

    #[test]
    fn echelon_membership_and_rank() {
        let mut e = Echelon::new();
        assert!(e.insert(v(&[(0, 1), (2, 1)])));
        assert!(e.insert(v(&[(1, 1), (2, 1)])));
        assert!(!e.insert(v(&[(0, 2), (1, -1), (2, 1)])));
        assert_eq!(e.rank(), 2);
        assert!(e.contains(&v(&[(0, 1), (1, 1), (2, 2)])));
        assert!(!e.contains(&v(&[(2, 1)])));
    }

    #[test]
    fn rref_is_reduced() {
        let e = Echelon::from_rows([v(&[(0, 1), (1, 1)]), v(&[(1, 1), (2, 3)])]);
        let r = e.rref();
        assert_eq!(r[0], v(&[(0, 1), (2, -3)]));
        assert_eq!(r[1], v(&[(1, 1), (2, 3)]));
    }

    #[test]
    fn nullspace_finds_relations() {
        let vs = vec![v(&[(0, 1)]), v(&[(1, 1)]), v(&[(0, 1), (1, 1)]), Vec::new()];
        let ns = nullspace_in(FieldSpec::Rational, &vs);
        assert_eq!(ns.len(), 2);
        for rel in ns {
            let mut acc: SparseVec = Vec::new();
            for (j, c) in rel {
                acc = sv_add_scaled(&acc, &vs[j], &c);
            }
            assert!(acc.is_empty());
        }
    }

    #[test]
    fn dense_inverse_roundtrip() {
        let f = FieldSpec::Rational;
        let m = vec![vec![f.from_i64(2), f.from_i64(1)], vec![f.from_i64(1), f.from_i64(1)]];
        let inv = dense_inverse(&m, f).unwrap();
        assert_eq!(inv[0][0], f.from_i64(1));
        assert_eq!(inv[0][1], f.from_i64(-1));
        assert!(dense_inverse(&[vec![f.zero()]], f).is_none());
    }
}
