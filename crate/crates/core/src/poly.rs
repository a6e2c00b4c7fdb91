//! Sparse multivariate polynomials with real coefficients.
//!
//! Monomials are ordered graded-lexicographically: first by total degree,
//! then by exponent vector with `x1` ranking before `x2` before `x3` ... so the
//! degree-1 basis in two variables reads `[1, x1, x2]` and the degree-2 block
//! reads `[x1^2, x1*x2, x2^2]`. Every iteration over terms, every basis and
//! every assembled conic problem uses this order.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{check_dim, Error, Result};

/// Coefficients with magnitude below this are treated as exact zeros.
pub const ZERO_THRESHOLD: f64 = 1e-300;

/// A multi-index `alpha`, representing `x1^alpha_1 * ... * xn^alpha_n`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Monomial(Vec<u32>);

impl Monomial {
    pub fn new(exponents: Vec<u32>) -> Self {
        Monomial(exponents)
    }

    pub fn one(dim: usize) -> Self {
        Monomial(vec![0; dim])
    }

    /// The monomial `x_i` (zero-based `i`).
    pub fn var(dim: usize, i: usize) -> Self {
        let mut e = vec![0; dim];
        e[i] = 1;
        Monomial(e)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn degree(&self) -> usize {
        self.0.iter().map(|&e| e as usize).sum()
    }

    pub fn is_one(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        debug_assert_eq!(self.dim(), other.dim());
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// `self / other` if `other` divides `self`.
    pub fn checked_div(&self, other: &Monomial) -> Option<Monomial> {
        debug_assert_eq!(self.dim(), other.dim());
        self.0
            .iter()
            .zip(&other.0)
            .map(|(&a, &b)| a.checked_sub(b))
            .collect::<Option<Vec<_>>>()
            .map(Monomial)
    }

    /// Value at `x`; the caller guarantees `x.len() == self.dim()`.
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(x)
            .filter(|(&e, _)| e > 0)
            .map(|(&e, &xi)| xi.powi(e as i32))
            .product()
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_one() {
            return write!(f, "1");
        }
        let mut first = true;
        for (i, &e) in self.0.iter().enumerate() {
            if e == 0 {
                continue;
            }
            if !first {
                write!(f, "*")?;
            }
            first = false;
            if e == 1 {
                write!(f, "x{}", i + 1)?;
            } else {
                write!(f, "x{}^{}", i + 1, e)?;
            }
        }
        Ok(())
    }
}

/// Number of monomials of total degree at most `k` in `n` variables, `C(n+k, n)`.
pub fn basis_len(n: usize, k: usize) -> usize {
    let mut acc: u128 = 1;
    for i in 1..=n as u128 {
        acc = acc * (k as u128 + i) / i;
    }
    acc as usize
}

/// All monomials of total degree `<= k` in `n` variables, in increasing
/// graded-lexicographic order.
pub fn monomial_basis(n: usize, k: usize) -> Vec<Monomial> {
    let mut out = Vec::with_capacity(basis_len(n, k));
    let mut scratch = vec![0u32; n];
    for deg in 0..=k {
        push_exact_degree(&mut scratch, 0, deg as u32, &mut out);
    }
    out
}

fn push_exact_degree(scratch: &mut [u32], pos: usize, remaining: u32, out: &mut Vec<Monomial>) {
    if pos + 1 >= scratch.len() {
        if let Some(last) = scratch.last_mut() {
            *last = remaining;
        }
        out.push(Monomial(scratch.to_vec()));
        return;
    }
    for e in (0..=remaining).rev() {
        scratch[pos] = e;
        push_exact_degree(scratch, pos + 1, remaining - e, out);
    }
    scratch[pos] = 0;
}

/// Sparse polynomial in `dim` variables, kept canonical: no stored zeros and
/// terms keyed by monomial in graded-lex order.
#[derive(Clone, PartialEq, Debug)]
pub struct MultiPoly {
    dim: usize,
    terms: BTreeMap<Monomial, f64>,
}

impl MultiPoly {
    pub fn zero(dim: usize) -> Self {
        MultiPoly {
            dim,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        let mut p = Self::zero(dim);
        p.add_term(Monomial::one(dim), c);
        p
    }

    /// The coordinate polynomial `x_i` (zero-based).
    pub fn var(dim: usize, i: usize) -> Self {
        let mut p = Self::zero(dim);
        p.add_term(Monomial::var(dim, i), 1.0);
        p
    }

    /// Builds a polynomial from `(exponents, coefficient)` pairs, summing
    /// repeated monomials.
    pub fn from_terms<I>(dim: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<u32>, f64)>,
    {
        let mut p = Self::zero(dim);
        for (exps, c) in terms {
            check_dim(dim, exps.len())?;
            if !c.is_finite() {
                return Err(Error::invalid(format!("non-finite coefficient {c}")));
            }
            p.add_term(Monomial(exps), c);
        }
        Ok(p)
    }

    /// Coefficients given against `basis`, e.g. a solver's decision vector.
    pub fn from_basis(dim: usize, basis: &[Monomial], coeffs: &[f64]) -> Self {
        assert_eq!(basis.len(), coeffs.len());
        let mut p = Self::zero(dim);
        for (m, &c) in basis.iter().zip(coeffs) {
            p.add_term(m.clone(), c);
        }
        p
    }

    pub(crate) fn add_term(&mut self, m: Monomial, c: f64) {
        debug_assert_eq!(m.dim(), self.dim);
        let entry = self.terms.entry(m);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                if c.abs() >= ZERO_THRESHOLD {
                    v.insert(c);
                }
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let s = *o.get() + c;
                if s.abs() < ZERO_THRESHOLD {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Maximum total degree over the terms; the zero polynomial has degree 0.
    pub fn degree(&self) -> usize {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(Monomial::is_one)
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, m: &Monomial) -> f64 {
        self.terms.get(m).copied().unwrap_or(0.0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, f64)> + '_ {
        self.terms.iter().map(|(m, &c)| (m, c))
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().fold(0.0, |acc, c| acc.max(c.abs()))
    }

    /// Coefficient vector against `basis`. Terms outside the basis are dropped.
    pub fn coeffs_in(&self, basis: &[Monomial]) -> Vec<f64> {
        basis.iter().map(|m| self.coeff(m)).collect()
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim, x.len())?;
        Ok(self.eval_unchecked(x))
    }

    /// `eval` without the length check, for hot loops that validated once.
    pub fn eval_unchecked(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|(m, &c)| c * m.eval(x)).sum()
    }

    pub fn add(&self, other: &MultiPoly) -> Result<MultiPoly> {
        check_dim(self.dim, other.dim)?;
        let mut out = self.clone();
        for (m, &c) in &other.terms {
            out.add_term(m.clone(), c);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &MultiPoly) -> Result<MultiPoly> {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, c: f64) -> MultiPoly {
        let mut out = MultiPoly::zero(self.dim);
        for (m, &v) in &self.terms {
            out.add_term(m.clone(), v * c);
        }
        out
    }

    pub fn mul(&self, other: &MultiPoly) -> Result<MultiPoly> {
        check_dim(self.dim, other.dim)?;
        let mut out = MultiPoly::zero(self.dim);
        for (ma, &ca) in &self.terms {
            for (mb, &cb) in &other.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        Ok(out)
    }

    pub fn pow(&self, k: u32) -> MultiPoly {
        let mut acc = MultiPoly::constant(self.dim, 1.0);
        for _ in 0..k {
            acc = acc.mul(self).expect("same dimension");
        }
        acc
    }

    /// Substitutes `x_i = shift_i + scale_i * u_i` and returns the result as
    /// a polynomial in `u`.
    pub fn compose_affine(&self, shift: &[f64], scale: &[f64]) -> Result<MultiPoly> {
        check_dim(self.dim, shift.len())?;
        check_dim(self.dim, scale.len())?;
        let max_exp = self
            .terms
            .keys()
            .flat_map(|m| m.0.iter().copied())
            .max()
            .unwrap_or(0);
        // powers[i][k] = (shift_i + scale_i u_i)^k as univariate coefficients
        let powers: Vec<Vec<Vec<f64>>> = (0..self.dim)
            .map(|i| {
                let mut rows = vec![vec![1.0]];
                for k in 1..=max_exp as usize {
                    let prev = &rows[k - 1];
                    let mut next = vec![0.0; k + 1];
                    for (j, &c) in prev.iter().enumerate() {
                        next[j] += c * shift[i];
                        next[j + 1] += c * scale[i];
                    }
                    rows.push(next);
                }
                rows
            })
            .collect();

        let mut out = MultiPoly::zero(self.dim);
        for (m, &c) in &self.terms {
            let mut partial: Vec<(Vec<u32>, f64)> = vec![(Vec::with_capacity(self.dim), c)];
            for (i, &e) in m.0.iter().enumerate() {
                let factor = &powers[i][e as usize];
                let mut next = Vec::with_capacity(partial.len() * factor.len());
                for (exps, v) in &partial {
                    for (k, &f) in factor.iter().enumerate() {
                        if f == 0.0 {
                            continue;
                        }
                        let mut e2 = exps.clone();
                        e2.push(k as u32);
                        next.push((e2, v * f));
                    }
                }
                partial = next;
            }
            for (exps, v) in partial {
                out.add_term(Monomial(exps), v);
            }
        }
        Ok(out)
    }
}

impl fmt::Display for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (m, &c)) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " {} ", if c < 0.0 { '-' } else { '+' })?;
            } else if c < 0.0 {
                write!(f, "-")?;
            }
            if m.is_one() {
                write!(f, "{}", c.abs())?;
            } else {
                write!(f, "{}*{}", c.abs(), m)?;
            }
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct TermJson {
    exps: Vec<u32>,
    coeff: f64,
}

#[derive(Serialize, Deserialize)]
struct PolyJson {
    dim: usize,
    terms: Vec<TermJson>,
}

impl Serialize for MultiPoly {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PolyJson {
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .map(|(m, &c)| TermJson {
                    exps: m.0.clone(),
                    coeff: c,
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for MultiPoly {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = PolyJson::deserialize(d)?;
        MultiPoly::from_terms(raw.dim, raw.terms.into_iter().map(|t| (t.exps, t.coeff)))
            .map_err(serde::de::Error::custom)
    }
}

/// A symmetric Gram matrix `P` over the monomial basis of degree
/// `basis_degree`, standing for the polynomial `pi^T P pi`.
#[derive(Clone, Debug, PartialEq)]
pub struct GramDecomposition {
    pub basis_degree: usize,
    pub gram: DMatrix<f64>,
}

impl GramDecomposition {
    pub fn new(basis_degree: usize, gram: DMatrix<f64>) -> Self {
        GramDecomposition { basis_degree, gram }
    }

    /// Smallest eigenvalue of the symmetrized Gram matrix.
    pub fn min_eigenvalue(&self) -> f64 {
        if self.gram.nrows() == 0 {
            return 0.0;
        }
        let sym = (&self.gram + self.gram.transpose()) * 0.5;
        sym.symmetric_eigenvalues().min()
    }
}

/// Expands `pi^T P pi` into canonical form.
pub fn expand_gram(g: &GramDecomposition, n: usize) -> Result<MultiPoly> {
    let basis = monomial_basis(n, g.basis_degree);
    let (rows, cols) = g.gram.shape();
    if rows != cols || rows != basis.len() {
        return Err(Error::GramSize {
            basis_degree: g.basis_degree,
            expected: basis.len(),
            found: rows.max(cols),
        });
    }
    let mut out = MultiPoly::zero(n);
    for i in 0..rows {
        for j in 0..cols {
            let v = g.gram[(i, j)];
            if v != 0.0 {
                out.add_term(basis[i].mul(&basis[j]), v);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x(n: usize, i: usize) -> MultiPoly {
        MultiPoly::var(n, i)
    }

    #[test]
    fn eval_schur_generators_at_origin() {
        // 1 + 2 x2
        let g1 = MultiPoly::from_terms(2, [(vec![0, 0], 1.0), (vec![0, 1], 2.0)]).unwrap();
        assert_eq!(g1.eval(&[0.0, 0.0]).unwrap(), 1.0);
        let g4 = MultiPoly::from_terms(
            2,
            [
                (vec![0, 0], 1.0),
                (vec![0, 1], -1.0),
                (vec![2, 0], -8.0),
                (vec![1, 1], -2.0),
                (vec![0, 2], -1.0),
                (vec![2, 1], -8.0),
                (vec![1, 2], -6.0),
            ],
        )
        .unwrap();
        assert_eq!(g4.eval(&[0.0, 0.0]).unwrap(), 1.0);
        assert_eq!(g4.degree(), 3);
        assert_eq!(MultiPoly::zero(3).eval(&[1.0, 2.0, 3.0]).unwrap(), 0.0);
    }

    #[test]
    fn eval_rejects_wrong_length() {
        let p = x(2, 0);
        assert!(matches!(
            p.eval(&[1.0]),
            Err(Error::DimensionMismatch { expected: 2, found: 1 })
        ));
    }

    #[test]
    fn arithmetic_examples() {
        let x1 = x(1, 0);
        assert_eq!(x1.mul(&x1).unwrap(), MultiPoly::from_terms(1, [(vec![2], 1.0)]).unwrap());

        let p = MultiPoly::from_terms(2, [(vec![1, 0], 3.0), (vec![0, 2], -1.5)]).unwrap();
        let z = p.add(&p.scale(-1.0)).unwrap();
        assert!(z.is_zero());
        assert_eq!(z.degree(), 0);

        let one = MultiPoly::constant(1, 1.0);
        let a = one.add(&x1).unwrap();
        let b = one.sub(&x1).unwrap();
        let prod = a.mul(&b).unwrap();
        assert_eq!(
            prod,
            MultiPoly::from_terms(1, [(vec![0], 1.0), (vec![2], -1.0)]).unwrap()
        );
    }

    #[test]
    fn arithmetic_dimension_mismatch() {
        assert!(x(1, 0).add(&x(2, 0)).is_err());
        assert!(x(1, 0).mul(&x(2, 1)).is_err());
    }

    #[test]
    fn basis_order_and_length() {
        let b = monomial_basis(2, 1);
        assert_eq!(
            b,
            vec![
                Monomial::one(2),
                Monomial::new(vec![1, 0]),
                Monomial::new(vec![0, 1])
            ]
        );
        assert_eq!(monomial_basis(2, 3).len(), 10);
        assert_eq!(monomial_basis(3, 7).len(), 120);
        assert_eq!(basis_len(3, 7), 120);
        let b2 = monomial_basis(2, 2);
        assert_eq!(b2[3].exponents(), &[2, 0]);
        assert_eq!(b2[4].exponents(), &[1, 1]);
        assert_eq!(b2[5].exponents(), &[0, 2]);
    }

    #[test]
    fn expand_gram_examples() {
        let id = GramDecomposition::new(1, DMatrix::identity(2, 2));
        assert_eq!(
            expand_gram(&id, 1).unwrap(),
            MultiPoly::from_terms(1, [(vec![0], 1.0), (vec![2], 1.0)]).unwrap()
        );
        let zero = GramDecomposition::new(1, DMatrix::zeros(2, 2));
        assert!(expand_gram(&zero, 1).unwrap().is_zero());
        let ones = GramDecomposition::new(1, DMatrix::from_element(2, 2, 1.0));
        assert_eq!(
            expand_gram(&ones, 1).unwrap(),
            MultiPoly::from_terms(1, [(vec![0], 1.0), (vec![1], 2.0), (vec![2], 1.0)]).unwrap()
        );
    }

    #[test]
    fn expand_gram_size_mismatch() {
        let g = GramDecomposition::new(2, DMatrix::identity(2, 2));
        assert!(matches!(
            expand_gram(&g, 1),
            Err(Error::GramSize { expected: 3, found: 2, .. })
        ));
    }

    #[test]
    fn json_roundtrip_is_canonical() {
        let text = r#"{"dim":2,"terms":[{"exps":[0,1],"coeff":2.0},{"exps":[0,0],"coeff":1.0},{"exps":[0,1],"coeff":-2.0}]}"#;
        let p: MultiPoly = serde_json::from_str(text).unwrap();
        assert_eq!(p, MultiPoly::constant(2, 1.0));
        let out = serde_json::to_string(&p).unwrap();
        assert_eq!(out, r#"{"dim":2,"terms":[{"exps":[0,0],"coeff":1.0}]}"#);
        assert!(serde_json::from_str::<MultiPoly>(r#"{"dim":2,"terms":[{"exps":[1],"coeff":1.0}]}"#).is_err());
    }

    #[test]
    fn compose_affine_matches_pointwise() {
        let p = MultiPoly::from_terms(
            2,
            [(vec![3, 0], 1.0), (vec![1, 2], -2.0), (vec![0, 0], 0.5)],
        )
        .unwrap();
        let shift = [0.3, -0.2];
        let scale = [1.5, 0.7];
        let q = p.compose_affine(&shift, &scale).unwrap();
        for u in [[0.1, 0.2], [-0.9, 0.4], [1.0, -1.0]] {
            let xv = [shift[0] + scale[0] * u[0], shift[1] + scale[1] * u[1]];
            let lhs = q.eval(&u).unwrap();
            let rhs = p.eval(&xv).unwrap();
            assert!((lhs - rhs).abs() < 1e-12, "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn tiny_coefficients_are_dropped() {
        let p = MultiPoly::from_terms(1, [(vec![1], 1e-301), (vec![0], 1e-299)]).unwrap();
        assert_eq!(p.num_terms(), 1);
    }
}
