//! Laurent polynomials over an exact field, and vectors of them indexed by branch.
//!
//! A [`LaurentPoly`] stores only nonzero coefficients, keyed by exponent. All
//! module data in the engine is made of these finite objects; genuine power
//! series never appear because every lattice carries an explicit tail.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::field::{FieldSpec, Scalar};

/// A finite sum `Σ c_e t^e` with `e ∈ ℤ` and nonzero `c_e`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct LaurentPoly {
    terms: BTreeMap<i64, Scalar>,
}

impl LaurentPoly {
    pub fn zero() -> Self {
        LaurentPoly::default()
    }

    pub fn monomial(coeff: Scalar, exp: i64) -> Self {
        let mut p = LaurentPoly::zero();
        p.add_term(exp, coeff);
        p
    }

    pub fn constant(coeff: Scalar) -> Self {
        Self::monomial(coeff, 0)
    }

    /// `t^exp` with coefficient one.
    pub fn t_pow(field: FieldSpec, exp: i64) -> Self {
        Self::monomial(field.one(), exp)
    }

    pub fn from_terms<I: IntoIterator<Item = (i64, Scalar)>>(terms: I) -> Self {
        let mut p = LaurentPoly::zero();
        for (e, c) in terms {
            p.add_term(e, c);
        }
        p
    }

    pub fn terms(&self) -> impl Iterator<Item = (i64, &Scalar)> + '_ {
        self.terms.iter().map(|(e, c)| (*e, c))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, exp: i64) -> Option<&Scalar> {
        self.terms.get(&exp)
    }

    /// Adds `c·t^e` in place, pruning a resulting zero.
    pub fn add_term(&mut self, exp: i64, c: Scalar) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&exp) {
            Some(old) => {
                let s = &*old + &c;
                if s.is_zero() {
                    self.terms.remove(&exp);
                } else {
                    *old = s;
                }
            }
            None => {
                self.terms.insert(exp, c);
            }
        }
    }

    /// Minimal exponent; `None` stands for `+∞` (the zero polynomial).
    pub fn valuation(&self) -> Option<i64> {
        self.terms.keys().next().copied()
    }

    /// Maximal exponent; `None` for zero.
    pub fn degree(&self) -> Option<i64> {
        self.terms.keys().next_back().copied()
    }

    pub fn leading_coeff(&self) -> Option<&Scalar> {
        self.terms.values().next_back()
    }

    pub fn add(&self, other: &LaurentPoly) -> LaurentPoly {
        let mut r = self.clone();
        for (e, c) in &other.terms {
            r.add_term(*e, c.clone());
        }
        r
    }

    pub fn sub(&self, other: &LaurentPoly) -> LaurentPoly {
        let mut r = self.clone();
        for (e, c) in &other.terms {
            r.add_term(*e, -c);
        }
        r
    }

    pub fn neg(&self) -> LaurentPoly {
        LaurentPoly {
            terms: self.terms.iter().map(|(e, c)| (*e, -c)).collect(),
        }
    }

    pub fn mul(&self, other: &LaurentPoly) -> LaurentPoly {
        let mut r = LaurentPoly::zero();
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                r.add_term(e1 + e2, c1 * c2);
            }
        }
        r
    }

    /// Product truncated to exponents below `below`.
    pub fn mul_trunc(&self, other: &LaurentPoly, below: i64) -> LaurentPoly {
        let mut r = LaurentPoly::zero();
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                if e1 + e2 >= below {
                    break;
                }
                r.add_term(e1 + e2, c1 * c2);
            }
        }
        r
    }

    pub fn scale(&self, c: &Scalar) -> LaurentPoly {
        if c.is_zero() {
            return LaurentPoly::zero();
        }
        LaurentPoly {
            terms: self.terms.iter().map(|(e, x)| (*e, x * c)).collect(),
        }
    }

    /// Multiplication by `t^k`.
    pub fn shift(&self, k: i64) -> LaurentPoly {
        LaurentPoly {
            terms: self.terms.iter().map(|(e, c)| (e + k, c.clone())).collect(),
        }
    }

    /// Drops every term of exponent `>= below`.
    pub fn truncate(&self, below: i64) -> LaurentPoly {
        LaurentPoly {
            terms: self.terms.range(..below).map(|(e, c)| (*e, c.clone())).collect(),
        }
    }

    /// Inverse of a unit power series modulo `t^order`.
    ///
    /// The result has exponents in `[0, order)` and satisfies
    /// `self · result ≡ 1 (mod t^order)`.
    pub fn invert_unit(&self, order: i64) -> Result<LaurentPoly> {
        if self.valuation() != Some(0) {
            return Err(Error::NotAUnit {
                valuation: self.valuation(),
            });
        }
        let a0 = self.coeff(0).expect("valuation 0");
        let a0_inv = a0.inv().ok_or(Error::NotAUnit { valuation: Some(0) })?;
        let mut b: Vec<Scalar> = Vec::with_capacity(order.max(0) as usize);
        for k in 0..order.max(0) {
            // b_k = -a0^{-1} Σ_{j=1..k} a_j b_{k-j}, b_0 = a0^{-1}
            let mut acc = if k == 0 { a0.field().one() } else { a0.zero_like() };
            if k > 0 {
                for (j, aj) in self.terms.range(1..=k) {
                    acc = &acc - &(aj * &b[(k - j) as usize]);
                }
            }
            b.push(&acc * &a0_inv);
        }
        Ok(LaurentPoly::from_terms(
            b.into_iter().enumerate().map(|(k, c)| (k as i64, c)),
        ))
    }

    /// Euclidean division of polynomials by degree: `self = q·d + r`, `deg r < deg d`.
    pub fn div_rem(&self, d: &LaurentPoly) -> (LaurentPoly, LaurentPoly) {
        let dd = d.degree().expect("division by zero polynomial");
        let dl_inv = d.leading_coeff().unwrap().inv().unwrap();
        let mut q = LaurentPoly::zero();
        let mut r = self.clone();
        while let Some(rd) = r.degree() {
            if rd < dd {
                break;
            }
            let c = r.leading_coeff().unwrap() * &dl_inv;
            let term = LaurentPoly::monomial(c, rd - dd);
            r = r.sub(&term.mul(d));
            q = q.add(&term);
        }
        (q, r)
    }

    /// Exact division by `t^k` of a polynomial all of whose exponents are `>= k`.
    pub fn div_t_pow(&self, k: i64) -> LaurentPoly {
        self.shift(-k)
    }
}

fn fmt_term(f: &mut fmt::Formatter<'_>, first: bool, e: i64, c: &Scalar) -> fmt::Result {
    let neg = c.is_negative();
    if !first {
        f.write_str(if neg { " - " } else { " + " })?;
    } else if neg {
        f.write_str("-")?;
    }
    let mag = if neg { -c } else { c.clone() };
    if e == 0 {
        write!(f, "{mag}")
    } else if mag.is_one() {
        write!(f, "t^{e}")
    } else {
        write!(f, "{mag}*t^{e}")
    }
}

impl fmt::Display for LaurentPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        for (i, (e, c)) in self.terms.iter().enumerate() {
            fmt_term(f, i == 0, *e, c)?;
        }
        Ok(())
    }
}

/// An element of `K = ∏ F((t_i))`: one Laurent polynomial per branch.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BranchVector(pub Vec<LaurentPoly>);

impl BranchVector {
    pub fn zero(branches: usize) -> Self {
        BranchVector(vec![LaurentPoly::zero(); branches])
    }

    pub fn ones(field: FieldSpec, branches: usize) -> Self {
        BranchVector(vec![LaurentPoly::constant(field.one()); branches])
    }

    /// The characteristic vector `e_T` of a branch subset.
    pub fn idempotent(field: FieldSpec, branches: usize, subset: &[usize]) -> Self {
        let mut v = Self::zero(branches);
        for &i in subset {
            v.0[i] = LaurentPoly::constant(field.one());
        }
        v
    }

    /// `t^exp` on branch `branch`, zero elsewhere.
    pub fn branch_monomial(field: FieldSpec, branches: usize, branch: usize, exp: i64) -> Self {
        let mut v = Self::zero(branches);
        v.0[branch] = LaurentPoly::t_pow(field, exp);
        v
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(LaurentPoly::is_zero)
    }

    pub fn add(&self, other: &BranchVector) -> BranchVector {
        BranchVector(self.0.iter().zip(&other.0).map(|(a, b)| a.add(b)).collect())
    }

    pub fn sub(&self, other: &BranchVector) -> BranchVector {
        BranchVector(self.0.iter().zip(&other.0).map(|(a, b)| a.sub(b)).collect())
    }

    pub fn mul(&self, other: &BranchVector) -> BranchVector {
        BranchVector(self.0.iter().zip(&other.0).map(|(a, b)| a.mul(b)).collect())
    }

    pub fn mul_trunc(&self, other: &BranchVector, below: i64) -> BranchVector {
        BranchVector(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a.mul_trunc(b, below))
                .collect(),
        )
    }

    pub fn truncate(&self, below: i64) -> BranchVector {
        BranchVector(self.0.iter().map(|a| a.truncate(below)).collect())
    }

    pub fn valuations(&self) -> Vec<Option<i64>> {
        self.0.iter().map(LaurentPoly::valuation).collect()
    }

    /// Minimum over branches; `None` for the zero vector.
    pub fn valuation(&self) -> Option<i64> {
        self.0.iter().filter_map(LaurentPoly::valuation).min()
    }
}

impl fmt::Display for BranchVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, p) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{p}")?;
        }
        f.write_str(")")
    }
}
