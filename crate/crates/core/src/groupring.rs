//! Exact arithmetic in the rational group ring ℚ[Γ] and in matrices over it.
//!
//! Coefficients are arbitrary-precision rationals. Floating point only enters
//! later, when a matrix is compressed to a finite operator.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::groups::{GroupElement, GroupSpec};

/// A finitely supported element of ℚ[Γ]. Zero coefficients are never stored.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RingElement {
    spec: GroupSpec,
    terms: BTreeMap<GroupElement, BigRational>,
}

pub fn rational(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn integer(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

impl RingElement {
    pub fn zero(spec: GroupSpec) -> Self {
        RingElement { spec, terms: BTreeMap::new() }
    }

    pub fn one(spec: GroupSpec) -> Self {
        let e = spec.identity();
        let mut terms = BTreeMap::new();
        terms.insert(e, BigRational::one());
        RingElement { spec, terms }
    }

    pub fn monomial(spec: GroupSpec, g: GroupElement, coeff: BigRational) -> Result<Self> {
        Self::from_terms(spec, [(g, coeff)])
    }

    /// Builds an element from (group element, coefficient) pairs, summing
    /// repeated group elements.
    pub fn from_terms(spec: GroupSpec, terms: impl IntoIterator<Item = (GroupElement, BigRational)>) -> Result<Self> {
        spec.validate()?;
        let mut out = RingElement::zero(spec);
        for (g, c) in terms {
            out.spec.check(&g)?;
            out.add_term(g, c);
        }
        Ok(out)
    }

    /// Integer-coefficient shorthand: `[(coords, coeff), ...]`.
    pub fn from_ints(spec: GroupSpec, terms: &[(&[i64], i64)]) -> Result<Self> {
        Self::from_terms(spec, terms.iter().map(|(g, c)| (GroupElement(g.to_vec()), integer(*c))))
    }

    fn add_term(&mut self, g: GroupElement, c: BigRational) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&g) {
            Some(existing) => {
                *existing += c;
                if existing.is_zero() {
                    self.terms.remove(&g);
                }
            }
            None => {
                self.terms.insert(g, c);
            }
        }
    }

    pub fn spec(&self) -> &GroupSpec {
        &self.spec
    }

    pub fn terms(&self) -> impl Iterator<Item = (&GroupElement, &BigRational)> {
        self.terms.iter()
    }

    pub fn support(&self) -> impl Iterator<Item = &GroupElement> {
        self.terms.keys()
    }

    pub fn coefficient(&self, g: &GroupElement) -> BigRational {
        self.terms.get(g).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_integral(&self) -> bool {
        self.terms.values().all(|c| c.is_integer())
    }

    fn same_spec(&self, other: &RingElement) -> Result<()> {
        if self.spec != other.spec {
            return Err(Error::SpecMismatch(self.spec.to_string(), other.spec.to_string()));
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &RingElement) -> Result<RingElement> {
        self.same_spec(other)?;
        let mut out = self.clone();
        for (g, c) in &other.terms {
            out.add_term(g.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn checked_sub(&self, other: &RingElement) -> Result<RingElement> {
        self.checked_add(&other.neg())
    }

    /// Convolution product `(ab)(g) = Σ_h a(h) b(h⁻¹g)`.
    pub fn checked_mul(&self, other: &RingElement) -> Result<RingElement> {
        self.same_spec(other)?;
        let mut out = RingElement::zero(self.spec.clone());
        let mut buf = vec![0; self.spec.arity()];
        for (g, a) in &self.terms {
            for (h, b) in &other.terms {
                self.spec.compose_into(&g.0, &h.0, &mut buf);
                out.add_term(GroupElement(buf.clone()), a * b);
            }
        }
        Ok(out)
    }

    pub fn neg(&self) -> RingElement {
        RingElement { spec: self.spec.clone(), terms: self.terms.iter().map(|(g, c)| (g.clone(), -c)).collect() }
    }

    pub fn scale(&self, s: &BigRational) -> RingElement {
        if s.is_zero() {
            return RingElement::zero(self.spec.clone());
        }
        RingElement { spec: self.spec.clone(), terms: self.terms.iter().map(|(g, c)| (g.clone(), c * s)).collect() }
    }

    /// The involution `a*(g) = a(g⁻¹)`.
    pub fn adjoint(&self) -> RingElement {
        let mut buf = vec![0; self.spec.arity()];
        let terms = self
            .terms
            .iter()
            .map(|(g, c)| {
                self.spec.inverse_into(&g.0, &mut buf);
                (GroupElement(buf.clone()), c.clone())
            })
            .collect();
        RingElement { spec: self.spec.clone(), terms }
    }

    /// τ(a), the coefficient of the identity.
    pub fn trace_tau(&self) -> BigRational {
        self.coefficient(&self.spec.identity())
    }

    /// ℓ¹ norm of the coefficients, an upper bound for the operator norm.
    pub fn l1_norm(&self) -> f64 {
        self.terms.values().map(|c| c.abs().to_f64().unwrap_or(f64::INFINITY)).sum()
    }
}

/// A sparse matrix over ℚ[Γ]. Missing entries are zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RingMatrix {
    spec: GroupSpec,
    rows: usize,
    cols: usize,
    entries: BTreeMap<(usize, usize), RingElement>,
}

impl RingMatrix {
    pub fn zeros(spec: GroupSpec, rows: usize, cols: usize) -> Self {
        RingMatrix { spec, rows, cols, entries: BTreeMap::new() }
    }

    pub fn identity(spec: GroupSpec, n: usize) -> Self {
        let mut m = RingMatrix::zeros(spec.clone(), n, n);
        for i in 0..n {
            m.entries.insert((i, i), RingElement::one(spec.clone()));
        }
        m
    }

    pub fn from_entries(
        spec: GroupSpec,
        rows: usize,
        cols: usize,
        entries: impl IntoIterator<Item = ((usize, usize), RingElement)>,
    ) -> Result<Self> {
        spec.validate()?;
        let mut m = RingMatrix::zeros(spec, rows, cols);
        for ((i, j), a) in entries {
            m.add_entry(i, j, a)?;
        }
        Ok(m)
    }

    /// A 1×1 matrix.
    pub fn scalar(a: RingElement) -> Self {
        let spec = a.spec().clone();
        let mut m = RingMatrix::zeros(spec, 1, 1);
        if !a.is_zero() {
            m.entries.insert((0, 0), a);
        }
        m
    }

    /// The elementary matrix `I + a·e_{ij}`, `i ≠ j`.
    pub fn elementary(n: usize, i: usize, j: usize, a: RingElement) -> Result<Self> {
        if i == j || i >= n || j >= n {
            return Err(Error::Dimension(format!("elementary matrix E_{i}{j} in size {n}")));
        }
        let mut m = RingMatrix::identity(a.spec().clone(), n);
        m.add_entry(i, j, a)?;
        Ok(m)
    }

    /// The diagonal unit with `±g` at position `i` and 1 elsewhere.
    pub fn diagonal_unit(spec: GroupSpec, n: usize, i: usize, sign: i64, g: GroupElement) -> Result<Self> {
        if i >= n || sign.abs() != 1 {
            return Err(Error::Dimension(format!("diagonal unit at {i} with sign {sign} in size {n}")));
        }
        let mut m = RingMatrix::identity(spec.clone(), n);
        m.entries.insert((i, i), RingElement::monomial(spec, g, integer(sign))?);
        Ok(m)
    }

    fn add_entry(&mut self, i: usize, j: usize, a: RingElement) -> Result<()> {
        if i >= self.rows || j >= self.cols {
            return Err(Error::Dimension(format!("entry ({i}, {j}) outside {}x{}", self.rows, self.cols)));
        }
        if a.spec() != &self.spec {
            return Err(Error::SpecMismatch(self.spec.to_string(), a.spec().to_string()));
        }
        let sum = match self.entries.remove(&(i, j)) {
            Some(existing) => existing.checked_add(&a)?,
            None => a,
        };
        if !sum.is_zero() {
            self.entries.insert((i, j), sum);
        }
        Ok(())
    }

    pub fn spec(&self) -> &GroupSpec {
        &self.spec
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> Option<&RingElement> {
        self.entries.get(&(i, j))
    }

    /// Nonzero entries in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (&(usize, usize), &RingElement)> {
        self.entries.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn first_nonzero(&self) -> Option<(usize, usize)> {
        self.entries.keys().next().copied()
    }

    pub fn is_integral(&self) -> bool {
        self.entries.values().all(RingElement::is_integral)
    }

    fn same_spec(&self, other: &RingMatrix) -> Result<()> {
        if self.spec != other.spec {
            return Err(Error::SpecMismatch(self.spec.to_string(), other.spec.to_string()));
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &RingMatrix) -> Result<RingMatrix> {
        self.same_spec(other)?;
        if (self.rows, self.cols) != (other.rows, other.cols) {
            return Err(Error::Dimension(format!(
                "{}x{} + {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = self.clone();
        for (&(i, j), a) in &other.entries {
            out.add_entry(i, j, a.clone())?;
        }
        Ok(out)
    }

    pub fn checked_sub(&self, other: &RingMatrix) -> Result<RingMatrix> {
        self.checked_add(&other.neg())
    }

    pub fn checked_mul(&self, other: &RingMatrix) -> Result<RingMatrix> {
        self.same_spec(other)?;
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "{}x{} * {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut by_row: BTreeMap<usize, Vec<(usize, &RingElement)>> = BTreeMap::new();
        for (&(k, j), b) in &other.entries {
            by_row.entry(k).or_default().push((j, b));
        }
        let mut out = RingMatrix::zeros(self.spec.clone(), self.rows, other.cols);
        for (&(i, k), a) in &self.entries {
            if let Some(row) = by_row.get(&k) {
                for (j, b) in row {
                    out.add_entry(i, *j, a.checked_mul(b)?)?;
                }
            }
        }
        Ok(out)
    }

    pub fn neg(&self) -> RingMatrix {
        RingMatrix {
            spec: self.spec.clone(),
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|(k, a)| (*k, a.neg())).collect(),
        }
    }

    /// `(A*)_{ij} = (A_{ji})*`.
    pub fn adjoint(&self) -> RingMatrix {
        RingMatrix {
            spec: self.spec.clone(),
            rows: self.cols,
            cols: self.rows,
            entries: self.entries.iter().map(|(&(i, j), a)| ((j, i), a.adjoint())).collect(),
        }
    }

    /// `Tr_τ(A) = Σ_i τ(A_ii)`.
    pub fn trace_tau(&self) -> Result<BigRational> {
        if !self.is_square() {
            return Err(Error::Dimension(format!("trace of non-square {}x{}", self.rows, self.cols)));
        }
        Ok((0..self.rows)
            .filter_map(|i| self.get(i, i))
            .fold(BigRational::zero(), |acc, a| acc + a.trace_tau()))
    }

    /// First entry where `A ≠ A*`, if any.
    pub fn self_adjoint_violation(&self) -> Option<(usize, usize)> {
        if !self.is_square() {
            return Some((0, 0));
        }
        let adj = self.adjoint();
        self.entries
            .keys()
            .chain(adj.entries.keys())
            .filter(|k| self.entries.get(k) != adj.entries.get(k))
            .min()
            .copied()
    }

    pub fn is_self_adjoint(&self) -> bool {
        self.self_adjoint_violation().is_none()
    }

    /// `max_j Σ_i ‖A_ij‖₁`, an upper bound for the operator norm of a
    /// self-adjoint matrix (and for the spectrum of its compressions).
    pub fn l1_bound(&self) -> f64 {
        let mut cols = vec![0.0; self.cols];
        let mut rows = vec![0.0; self.rows];
        for (&(i, j), a) in &self.entries {
            let n = a.l1_norm();
            cols[j] += n;
            rows[i] += n;
        }
        let c = cols.into_iter().fold(0.0, f64::max);
        let r = rows.into_iter().fold(0.0, f64::max);
        c.max(r)
    }

    /// Copies `block` (optionally negated) into this matrix at offset `(r0, c0)`.
    pub(crate) fn place(&mut self, r0: usize, c0: usize, block: &RingMatrix, negate: bool) -> Result<()> {
        for (&(i, j), a) in &block.entries {
            let a = if negate { a.neg() } else { a.clone() };
            self.add_entry(r0 + i, c0 + j, a)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn z(d: usize) -> GroupSpec {
        GroupSpec::free_abelian(d)
    }

    fn t_pow(k: i64) -> RingElement {
        RingElement::from_ints(z(1), &[(&[k], 1)]).unwrap()
    }

    fn laurent(terms: &[(i64, i64)]) -> RingElement {
        RingElement::from_terms(z(1), terms.iter().map(|(e, c)| (GroupElement(vec![*e]), integer(*c)))).unwrap()
    }

    /// Independent expansion: accumulates Σ a(h) b(k) over all pairs with
    /// h·k = g, scanning products rather than inserting.
    fn convolve_oracle(a: &RingElement, b: &RingElement, g: &GroupElement) -> BigRational {
        let spec = a.spec();
        let mut acc = BigRational::zero();
        for (h, x) in a.terms() {
            for (k, y) in b.terms() {
                if &spec.compose(h, k).unwrap() == g {
                    acc += x * y;
                }
            }
        }
        acc
    }

    #[test]
    fn laurent_identities() {
        let one = RingElement::one(z(1));
        let a = one.checked_add(&t_pow(1)).unwrap();
        let b = one.checked_sub(&t_pow(1)).unwrap();
        assert_eq!(a.checked_mul(&b).unwrap(), laurent(&[(0, 1), (2, -1)]));
        assert_eq!(t_pow(1).checked_mul(&t_pow(-1)).unwrap(), one);
    }

    #[test]
    fn heisenberg_commutator() {
        let h = GroupSpec::Heisenberg;
        let x = RingElement::from_ints(h.clone(), &[(&[1, 0, 0], 1)]).unwrap();
        let y = RingElement::from_ints(h.clone(), &[(&[0, 1, 0], 1)]).unwrap();
        let zc = RingElement::from_ints(h.clone(), &[(&[0, 0, 1], 1)]).unwrap();
        let xy = x.checked_mul(&y).unwrap();
        let yxz = y.checked_mul(&x).unwrap().checked_mul(&zc).unwrap();
        assert!(xy.checked_sub(&yxz).unwrap().is_zero());
        assert_ne!(xy, y.checked_mul(&x).unwrap());
    }

    #[test]
    fn spec_mismatch_is_an_error() {
        let a = RingElement::one(z(1));
        let b = RingElement::one(z(2));
        assert!(matches!(a.checked_mul(&b), Err(Error::SpecMismatch(..))));
        assert!(a.checked_add(&b).is_err());
    }

    #[test]
    fn adjoint_examples() {
        let a = laurent(&[(0, 2), (1, 3)]);
        assert_eq!(a.adjoint(), laurent(&[(0, 2), (-1, 3)]));
        assert_eq!(RingElement::one(GroupSpec::Heisenberg).adjoint(), RingElement::one(GroupSpec::Heisenberg));
        let b = RingElement::from_ints(z(2), &[(&[1, 0], 1), (&[0, -1], 2)]).unwrap();
        let expected = RingElement::from_ints(z(2), &[(&[-1, 0], 1), (&[0, 1], 2)]).unwrap();
        assert_eq!(b.adjoint(), expected);
    }

    #[test]
    fn trace_examples() {
        assert_eq!(RingMatrix::identity(z(2), 3).trace_tau().unwrap(), integer(3));
        let a = laurent(&[(0, 1), (1, 2)]);
        assert_eq!(a.adjoint().checked_mul(&a).unwrap().trace_tau(), integer(5));
        let rect = RingMatrix::zeros(z(1), 2, 3);
        assert!(rect.trace_tau().is_err());
    }

    #[test]
    fn matrix_examples() {
        let spec = z(1);
        let a = RingMatrix::from_entries(
            spec.clone(),
            2,
            2,
            [((0, 0), laurent(&[(1, 1)])), ((0, 1), laurent(&[(0, 2), (-1, 1)])), ((1, 1), laurent(&[(3, -1)]))],
        )
        .unwrap();
        assert_eq!(a.checked_mul(&RingMatrix::identity(spec.clone(), 2)).unwrap(), a);
        let e = RingMatrix::elementary(2, 0, 1, t_pow(1)).unwrap();
        let e_inv = RingMatrix::elementary(2, 0, 1, t_pow(1).neg()).unwrap();
        assert_eq!(e.checked_mul(&e_inv).unwrap(), RingMatrix::identity(spec.clone(), 2));
        let b = RingMatrix::zeros(spec, 3, 2);
        assert!(matches!(a.checked_mul(&b), Err(Error::Dimension(_))));
    }

    #[test]
    fn l1_bound_of_symmetric_symbol() {
        let a = laurent(&[(-1, 1), (0, 3), (1, 1)]);
        assert_eq!(RingMatrix::scalar(a).l1_bound(), 5.0);
    }

    fn arb_element(spec: GroupSpec, max_terms: usize) -> impl Strategy<Value = RingElement> {
        let arity = spec.arity();
        prop::collection::vec((prop::collection::vec(-2i64..=2, arity), -3i64..=3, 1i64..=3), 0..=max_terms).prop_map(
            move |terms| {
                RingElement::from_terms(
                    spec.clone(),
                    terms.into_iter().map(|(g, n, d)| (spec.normalize(&g).unwrap(), rational(n, d))),
                )
                .unwrap()
            },
        )
    }

    fn arb_matrix(spec: GroupSpec, n: usize) -> impl Strategy<Value = RingMatrix> {
        prop::collection::vec(arb_element(spec.clone(), 3), n * n).prop_map(move |es| {
            RingMatrix::from_entries(spec.clone(), n, n, es.into_iter().enumerate().map(|(k, a)| ((k / n, k % n), a)))
                .unwrap()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn convolution_matches_oracle(a in arb_element(GroupSpec::Heisenberg, 4), b in arb_element(GroupSpec::Heisenberg, 4)) {
            let ab = a.checked_mul(&b).unwrap();
            let mut candidates: Vec<GroupElement> = ab.support().cloned().collect();
            candidates.push(GroupSpec::Heisenberg.identity());
            for g in candidates {
                prop_assert_eq!(ab.coefficient(&g), convolve_oracle(&a, &b, &g));
            }
        }

        #[test]
        fn trace_is_cyclic_heisenberg(a in arb_element(GroupSpec::Heisenberg, 4), b in arb_element(GroupSpec::Heisenberg, 4)) {
            prop_assert_eq!(a.checked_mul(&b).unwrap().trace_tau(), b.checked_mul(&a).unwrap().trace_tau());
        }

        #[test]
        fn involution_laws(a in arb_element(GroupSpec::Heisenberg, 4), b in arb_element(GroupSpec::Heisenberg, 4)) {
            prop_assert_eq!(a.adjoint().adjoint(), a.clone());
            let lhs = a.checked_mul(&b).unwrap().adjoint();
            let rhs = b.adjoint().checked_mul(&a.adjoint()).unwrap();
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn trace_positivity(a in arb_element(GroupSpec::Heisenberg, 5)) {
            let t = a.adjoint().checked_mul(&a).unwrap().trace_tau();
            prop_assert!(t >= BigRational::zero());
            prop_assert_eq!(t.is_zero(), a.is_zero());
        }

        #[test]
        fn matrix_trace_cyclic_and_adjoint(a in arb_matrix(GroupSpec::free_abelian(2), 2), b in arb_matrix(GroupSpec::free_abelian(2), 2)) {
            let ab = a.checked_mul(&b).unwrap();
            prop_assert_eq!(ab.trace_tau().unwrap(), b.checked_mul(&a).unwrap().trace_tau().unwrap());
            prop_assert_eq!(ab.adjoint(), b.adjoint().checked_mul(&a.adjoint()).unwrap());
            prop_assert_eq!(a.adjoint().adjoint(), a.clone());
        }

        #[test]
        fn gram_matrices_are_self_adjoint(a in arb_matrix(GroupSpec::Heisenberg, 2)) {
            prop_assert!(a.adjoint().checked_mul(&a).unwrap().is_self_adjoint());
        }
    }
}
