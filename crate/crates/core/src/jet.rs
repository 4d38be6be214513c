//! Truncated Taylor expansions in six variables.
//!
//! A [`Jet`] stores the coefficients of a polynomial in the displacement
//! `u = x - p` from its base point `p`, truncated at a fixed total degree.
//! Coefficients are laid out densely in graded order (all degree-0 terms,
//! then degree 1, ...), so the monomials of degree `<= m` are always a prefix
//! of the array. Multiplication and differentiation run off index tables that
//! are built once for [`MAX_ORDER`] and shared by all lower orders.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

/// Number of chart variables.
pub const DIM: usize = 6;

/// Largest supported truncation order.
pub const MAX_ORDER: usize = 8;

/// Exponent vector of a monomial in the six chart variables
/// `(x1, x2, x3, y1, y2, y3)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MultiIndex(pub [u8; DIM]);

impl MultiIndex {
    pub const ZERO: MultiIndex = MultiIndex([0; DIM]);

    pub fn unit(axis: usize) -> Self {
        let mut e = [0u8; DIM];
        e[axis] = 1;
        MultiIndex(e)
    }

    pub fn degree(&self) -> usize {
        self.0.iter().map(|&e| e as usize).sum()
    }

    pub fn exponents(&self) -> [u8; DIM] {
        self.0
    }

    pub fn checked_add(&self, other: &MultiIndex) -> MultiIndex {
        let mut e = self.0;
        for (a, b) in e.iter_mut().zip(other.0.iter()) {
            *a += *b;
        }
        MultiIndex(e)
    }
}

impl Ord for MultiIndex {
    /// Graded order: lower degree first; within a degree, larger leading
    /// exponents first (`x1^2 < x1*x2 < x2^2`). Matches the storage layout.
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

struct Tables {
    monomials: Vec<MultiIndex>,
    index: HashMap<MultiIndex, usize>,
    /// `count[m]` = number of monomials of degree <= m.
    count: Vec<usize>,
    /// `product[i][j]` = index of monomial_i * monomial_j, for
    /// `j < count[MAX_ORDER - deg(i)]`.
    product: Vec<Vec<u32>>,
    /// `derivative[axis][k]` = (index of d/du_axis of monomial_k, exponent).
    derivative: Vec<Vec<(u32, u8)>>,
}

fn tables() -> &'static Tables {
    static TABLES: OnceLock<Tables> = OnceLock::new();
    TABLES.get_or_init(build_tables)
}

fn push_degree(prefix: &mut [u8; DIM], axis: usize, remaining: u8, out: &mut Vec<MultiIndex>) {
    if axis == DIM - 1 {
        prefix[axis] = remaining;
        out.push(MultiIndex(*prefix));
        return;
    }
    for e in (0..=remaining).rev() {
        prefix[axis] = e;
        push_degree(prefix, axis + 1, remaining - e, out);
    }
    prefix[axis] = 0;
}

fn build_tables() -> Tables {
    let mut monomials = Vec::new();
    let mut count = Vec::with_capacity(MAX_ORDER + 1);
    for d in 0..=MAX_ORDER {
        let mut prefix = [0u8; DIM];
        push_degree(&mut prefix, 0, d as u8, &mut monomials);
        count.push(monomials.len());
    }
    let index: HashMap<MultiIndex, usize> =
        monomials.iter().enumerate().map(|(i, m)| (*m, i)).collect();
    let product = monomials
        .iter()
        .map(|mi| {
            let room = MAX_ORDER - mi.degree();
            monomials[..count[room]]
                .iter()
                .map(|mj| index[&mi.checked_add(mj)] as u32)
                .collect()
        })
        .collect();
    let derivative = (0..DIM)
        .map(|axis| {
            monomials
                .iter()
                .map(|m| {
                    let e = m.0[axis];
                    if e == 0 {
                        (0, 0)
                    } else {
                        let mut lowered = m.0;
                        lowered[axis] -= 1;
                        (index[&MultiIndex(lowered)] as u32, e)
                    }
                })
                .collect()
        })
        .collect();
    Tables {
        monomials,
        index,
        count,
        product,
        derivative,
    }
}

/// Number of monomials of degree at most `order` in six variables.
pub fn monomial_count(order: usize) -> usize {
    tables().count[order]
}

/// Monomials of degree at most `order`, in storage order.
pub fn monomials(order: usize) -> &'static [MultiIndex] {
    let t = tables();
    &t.monomials[..t.count[order]]
}

fn check_order(order: usize) -> Result<()> {
    if order > MAX_ORDER {
        Err(Error::OrderTooHigh(order))
    } else {
        Ok(())
    }
}

/// Truncated Taylor expansion of a scalar field about a base point.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet<T> {
    order: usize,
    base: [T; DIM],
    coeffs: Vec<T>,
}

impl<T: Real> Jet<T> {
    pub fn zero(base: [T; DIM], order: usize) -> Self {
        assert!(order <= MAX_ORDER, "jet order {order} exceeds MAX_ORDER");
        Jet {
            order,
            base,
            coeffs: vec![T::zero(); monomial_count(order)],
        }
    }

    pub fn constant(value: T, base: [T; DIM], order: usize) -> Self {
        let mut j = Self::zero(base, order);
        j.coeffs[0] = value;
        j
    }

    /// The chart coordinate function `x_axis`, i.e. `p_axis + u_axis`.
    pub fn coordinate(axis: usize, base: [T; DIM], order: usize) -> Self {
        let mut j = Self::constant(base[axis], base, order);
        if order >= 1 {
            j.coeffs[1 + axis] = T::one();
        }
        j
    }

    /// Builds a jet from coefficients of the displacement monomials.
    pub fn from_displacement_terms(
        terms: &[(MultiIndex, T)],
        base: [T; DIM],
        order: usize,
    ) -> Result<Self> {
        check_order(order)?;
        let mut j = Self::zero(base, order);
        let t = tables();
        for (m, c) in terms {
            if m.degree() <= order {
                j.coeffs[t.index[m]] += *c;
            }
        }
        Ok(j)
    }

    /// Expands a polynomial given in absolute chart coordinates about `base`.
    pub fn from_polynomial(terms: &[(MultiIndex, T)], base: [T; DIM], order: usize) -> Result<Self> {
        check_order(order)?;
        let coords: Vec<Jet<T>> = (0..DIM).map(|a| Jet::coordinate(a, base, order)).collect();
        let mut out = Self::zero(base, order);
        let mut powers: HashMap<(usize, u8), Jet<T>> = HashMap::new();
        for (m, c) in terms {
            let mut term = Jet::constant(*c, base, order);
            for (axis, &e) in m.0.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                let p = powers
                    .entry((axis, e))
                    .or_insert_with(|| {
                        let mut acc = Jet::constant(T::one(), base, order);
                        for _ in 0..e {
                            acc = &acc * &coords[axis];
                        }
                        acc
                    })
                    .clone();
                term = &term * &p;
            }
            out += &term;
        }
        Ok(out)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn base_point(&self) -> &[T; DIM] {
        &self.base
    }

    /// Value at the base point.
    pub fn value(&self) -> T {
        self.coeffs[0]
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn coeff(&self, m: &MultiIndex) -> T {
        if m.degree() > self.order {
            return T::zero();
        }
        self.coeffs[tables().index[m]]
    }

    pub fn set_coeff(&mut self, m: &MultiIndex, value: T) {
        assert!(m.degree() <= self.order, "monomial degree exceeds jet order");
        self.coeffs[tables().index[m]] = value;
    }

    /// Nonzero terms as (displacement monomial, coefficient) pairs.
    pub fn terms(&self) -> Vec<(MultiIndex, T)> {
        monomials(self.order)
            .iter()
            .zip(self.coeffs.iter())
            .filter(|(_, c)| **c != T::zero())
            .map(|(m, c)| (*m, *c))
            .collect()
    }

    pub fn truncate(&self, order: usize) -> Self {
        if order >= self.order {
            return self.clone();
        }
        Jet {
            order,
            base: self.base,
            coeffs: self.coeffs[..monomial_count(order)].to_vec(),
        }
    }

    /// Zero-pads to a higher order. Only sound when the caller knows the
    /// missing coefficients cannot contribute, e.g. when the jet multiplies
    /// a factor vanishing at the base point.
    pub(crate) fn padded(&self, order: usize) -> Self {
        if order <= self.order {
            return self.clone();
        }
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(monomial_count(order), T::zero());
        Jet { order, base: self.base, coeffs }
    }

    /// Largest coefficient magnitude.
    pub fn max_abs(&self) -> T {
        self.coeffs
            .iter()
            .fold(T::zero(), |acc, c| acc.max(c.abs()))
    }

    pub fn is_compatible(&self, other: &Jet<T>) -> bool {
        self.base == other.base
    }

    fn aligned(&self, other: &Jet<T>) -> Result<usize> {
        if !self.is_compatible(other) {
            return Err(Error::BasePointMismatch);
        }
        Ok(self.order.min(other.order))
    }

    pub fn try_add(&self, other: &Jet<T>) -> Result<Jet<T>> {
        let order = self.aligned(other)?;
        let n = monomial_count(order);
        let coeffs = self.coeffs[..n]
            .iter()
            .zip(&other.coeffs[..n])
            .map(|(a, b)| *a + *b)
            .collect();
        Ok(Jet { order, base: self.base, coeffs })
    }

    pub fn try_sub(&self, other: &Jet<T>) -> Result<Jet<T>> {
        let order = self.aligned(other)?;
        let n = monomial_count(order);
        let coeffs = self.coeffs[..n]
            .iter()
            .zip(&other.coeffs[..n])
            .map(|(a, b)| *a - *b)
            .collect();
        Ok(Jet { order, base: self.base, coeffs })
    }

    /// Truncated product; the result order is the smaller operand order.
    pub fn try_mul(&self, other: &Jet<T>) -> Result<Jet<T>> {
        let order = self.aligned(other)?;
        let t = tables();
        let n = t.count[order];
        let mut out = vec![T::zero(); n];
        let a = &self.coeffs[..n];
        let b = &other.coeffs[..n];
        for (i, &ai) in a.iter().enumerate() {
            if ai == T::zero() {
                continue;
            }
            let room = order - t.monomials[i].degree();
            let row = &t.product[i][..t.count[room]];
            for (bj, &k) in b.iter().zip(row) {
                out[k as usize] += ai * *bj;
            }
        }
        Ok(Jet { order, base: self.base, coeffs: out })
    }

    pub fn scale(&self, s: T) -> Jet<T> {
        Jet {
            order: self.order,
            base: self.base,
            coeffs: self.coeffs.iter().map(|c| *c * s).collect(),
        }
    }

    /// Partial derivative along a chart axis (0-based). Drops one order.
    pub fn partial(&self, axis: usize) -> Result<Jet<T>> {
        if self.order == 0 {
            return Err(Error::InsufficientOrder {
                what: "partial derivative",
                needed: 1,
                available: 0,
            });
        }
        assert!(axis < DIM, "axis out of range");
        let t = tables();
        let order = self.order - 1;
        let mut out = vec![T::zero(); t.count[order]];
        let table = &t.derivative[axis];
        for (k, c) in self.coeffs.iter().enumerate().skip(1) {
            let (target, e) = table[k];
            if e != 0 {
                out[target as usize] += *c * lit::<T>(e as f64);
            }
        }
        Ok(Jet { order, base: self.base, coeffs: out })
    }

    /// Gradient at full jet precision (each component one order lower).
    pub fn gradient(&self) -> Result<Vec<Jet<T>>> {
        (0..DIM).map(|a| self.partial(a)).collect()
    }

    /// Multiplicative inverse by Newton iteration `r <- r (2 - a r)`.
    pub fn reciprocal(&self) -> Result<Jet<T>> {
        let v = self.value();
        if v == T::zero() {
            return Err(Error::Singular("reciprocal of a jet vanishing at the base point"));
        }
        let two = Jet::constant(lit(2.0), self.base, self.order);
        let mut r = Jet::constant(T::one() / v, self.base, self.order);
        let mut valid = 0usize;
        while valid < self.order {
            let ar = self * &r;
            r = &r * &(&two - &ar);
            valid = 2 * valid + 1;
        }
        Ok(r)
    }

    /// `exp` of a jet via the nilpotent part's truncated series.
    pub fn exp(&self) -> Jet<T> {
        let v = self.value();
        let mut nil = self.clone();
        nil.coeffs[0] = T::zero();
        let mut term = Jet::constant(T::one(), self.base, self.order);
        let mut sum = term.clone();
        for k in 1..=self.order {
            term = (&term * &nil).scale(T::one() / lit::<T>(k as f64));
            sum += &term;
        }
        sum.scale(v.exp())
    }

    /// Evaluates the truncated polynomial at an absolute chart point.
    pub fn evaluate(&self, point: &[T; DIM]) -> T {
        let u: Vec<T> = (0..DIM).map(|a| point[a] - self.base[a]).collect();
        monomials(self.order)
            .iter()
            .zip(self.coeffs.iter())
            .fold(T::zero(), |acc, (m, c)| {
                let mut p = *c;
                for (a, &e) in m.0.iter().enumerate() {
                    for _ in 0..e {
                        p *= u[a];
                    }
                }
                acc + p
            })
    }

    /// Substitutes jets for the displacement variables: returns `self(q + s(u))`
    /// where `s` are jets at another base point whose values are `q`, the base
    /// of `self`. Values are checked to tolerance and their constant parts
    /// dropped, so the substitution is a truncated composition.
    pub fn compose(&self, inner: &[Jet<T>]) -> Result<Jet<T>> {
        assert_eq!(inner.len(), DIM);
        let base = *inner[0].base_point();
        let order = inner.iter().map(|j| j.order).min().unwrap().min(self.order);
        let mut shifted = Vec::with_capacity(DIM);
        for (a, s) in inner.iter().enumerate() {
            if s.base != base {
                return Err(Error::BasePointMismatch);
            }
            let gap = (s.value() - self.base[a]).abs();
            let scale = T::one() + self.base[a].abs();
            if gap > lit::<T>(1e-9) * scale {
                return Err(Error::BasePointMismatch);
            }
            let mut d = s.truncate(order);
            d.coeffs[0] = T::zero();
            shifted.push(d);
        }
        // Horner-free accumulation over monomials with cached powers.
        let mut out = Jet::zero(base, order);
        let mut power_cache: Vec<Vec<Jet<T>>> = shifted
            .iter()
            .map(|d| vec![Jet::constant(T::one(), base, order), d.clone()])
            .collect();
        for (m, c) in monomials(self.order.min(order)).iter().zip(self.coeffs.iter()) {
            if *c == T::zero() {
                continue;
            }
            let mut term = Jet::constant(*c, base, order);
            for (a, &e) in m.0.iter().enumerate() {
                let e = e as usize;
                if e == 0 {
                    continue;
                }
                while power_cache[a].len() <= e {
                    let next = power_cache[a].last().unwrap() * &shifted[a];
                    power_cache[a].push(next);
                }
                term = &term * &power_cache[a][e];
            }
            out += &term;
        }
        Ok(out)
    }
}

impl<'a, T: Real> Add<&'a Jet<T>> for &'a Jet<T> {
    type Output = Jet<T>;
    /// Panics on base-point mismatch; use [`Jet::try_add`] for a checked sum.
    fn add(self, rhs: &'a Jet<T>) -> Jet<T> {
        self.try_add(rhs).expect("jet base point mismatch")
    }
}

impl<'a, T: Real> Sub<&'a Jet<T>> for &'a Jet<T> {
    type Output = Jet<T>;
    fn sub(self, rhs: &'a Jet<T>) -> Jet<T> {
        self.try_sub(rhs).expect("jet base point mismatch")
    }
}

impl<'a, T: Real> Mul<&'a Jet<T>> for &'a Jet<T> {
    type Output = Jet<T>;
    fn mul(self, rhs: &'a Jet<T>) -> Jet<T> {
        self.try_mul(rhs).expect("jet base point mismatch")
    }
}

impl<T: Real> Neg for &Jet<T> {
    type Output = Jet<T>;
    fn neg(self) -> Jet<T> {
        self.scale(-T::one())
    }
}

impl<T: Real> AddAssign<&Jet<T>> for Jet<T> {
    fn add_assign(&mut self, rhs: &Jet<T>) {
        assert!(self.is_compatible(rhs), "jet base point mismatch");
        if rhs.order < self.order {
            *self = self.truncate(rhs.order);
        }
        for (a, b) in self.coeffs.iter_mut().zip(rhs.coeffs.iter()) {
            *a += *b;
        }
    }
}

impl<T: Real> SubAssign<&Jet<T>> for Jet<T> {
    fn sub_assign(&mut self, rhs: &Jet<T>) {
        assert!(self.is_compatible(rhs), "jet base point mismatch");
        if rhs.order < self.order {
            *self = self.truncate(rhs.order);
        }
        for (a, b) in self.coeffs.iter_mut().zip(rhs.coeffs.iter()) {
            *a -= *b;
        }
    }
}

/// `acc += s * x` without allocating a temporary.
pub fn axpy<T: Real>(acc: &mut Jet<T>, s: T, x: &Jet<T>) {
    assert!(acc.is_compatible(x), "jet base point mismatch");
    if x.order < acc.order {
        *acc = acc.truncate(x.order);
    }
    for (a, b) in acc.coeffs.iter_mut().zip(x.coeffs.iter()) {
        *a += s * *b;
    }
}

/// Linear combination `sum_r weights[r] * jets[r]`, truncated to the lowest order.
pub fn linear_combination<T: Real>(weights: &[T], jets: &[&Jet<T>]) -> Jet<T> {
    assert_eq!(weights.len(), jets.len());
    let order = jets.iter().map(|j| j.order).min().expect("empty combination");
    let mut out = Jet::zero(jets[0].base, order);
    for (w, j) in weights.iter().zip(jets) {
        if *w != T::zero() {
            axpy(&mut out, *w, j);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const O: [f64; DIM] = [0.0; DIM];

    fn mi(e: [u8; 6]) -> MultiIndex {
        MultiIndex(e)
    }

    #[test]
    fn monomial_counts_match_binomials() {
        // C(n + 6, 6)
        assert_eq!(monomial_count(0), 1);
        assert_eq!(monomial_count(1), 7);
        assert_eq!(monomial_count(3), 84);
        assert_eq!(monomial_count(5), 462);
    }

    #[test]
    fn ordering_is_graded_and_matches_storage() {
        let ms = monomials(4);
        for w in ms.windows(2) {
            assert!(w[0] < w[1]);
        }
        assert!(mi([2, 0, 0, 0, 0, 0]) < mi([1, 1, 0, 0, 0, 0]));
        assert!(mi([0, 0, 0, 0, 0, 1]) < mi([1, 1, 0, 0, 0, 0]));
    }

    #[test]
    fn square_of_coordinate() {
        let x = Jet::coordinate(0, O, 3);
        let sq = &x * &x;
        for (m, c) in monomials(3).iter().zip(sq.coeffs()) {
            let want = if *m == mi([2, 0, 0, 0, 0, 0]) { 1.0 } else { 0.0 };
            assert_eq!(*c, want);
        }
    }

    #[test]
    fn additive_identity() {
        let a = Jet::from_polynomial(&[(mi([1, 2, 0, 0, 0, 1]), 3.0), (MultiIndex::ZERO, -1.5)], O, 4).unwrap();
        assert_eq!(&a + &Jet::zero(O, 4), a);
    }

    #[test]
    fn difference_of_squares() {
        let one = Jet::constant(1.0, O, 4);
        let x = Jet::coordinate(0, O, 4);
        let p = &(&one + &x) * &(&one - &x);
        let want = Jet::from_polynomial(&[(MultiIndex::ZERO, 1.0), (mi([2, 0, 0, 0, 0, 0]), -1.0)], O, 4).unwrap();
        assert_eq!(p, want);
    }

    #[test]
    fn partial_derivatives() {
        let x1 = Jet::coordinate(0, O, 3);
        let x2 = Jet::coordinate(1, O, 3);
        let sq = &x1 * &x1;
        assert_eq!(sq.partial(0).unwrap(), x1.scale(2.0).truncate(2));
        assert_eq!(x1.partial(1).unwrap(), Jet::zero(O, 2));
        let f = &(&x1 * &x2) + &(&sq * &x1);
        let want = Jet::from_polynomial(&[(mi([0, 1, 0, 0, 0, 0]), 1.0), (mi([2, 0, 0, 0, 0, 0]), 3.0)], O, 2).unwrap();
        assert_eq!(f.partial(0).unwrap(), want);
    }

    #[test]
    fn partial_of_order_zero_fails() {
        let c = Jet::constant(1.0, O, 0);
        assert!(matches!(c.partial(0), Err(Error::InsufficientOrder { .. })));
    }

    #[test]
    fn base_point_mismatch_is_reported() {
        let a = Jet::constant(1.0, O, 2);
        let b = Jet::constant(1.0, [1.0, 0.0, 0.0, 0.0, 0.0, 0.0], 2);
        assert_eq!(a.try_mul(&b), Err(Error::BasePointMismatch));
    }

    #[test]
    fn mixed_orders_truncate_to_minimum() {
        let a = Jet::coordinate(0, O, 5);
        let b = Jet::coordinate(1, O, 2);
        assert_eq!((&a * &b).order(), 2);
        assert_eq!((&a + &b).order(), 2);
    }

    #[test]
    fn expansion_about_shifted_base() {
        let p = [0.5, -1.0, 0.25, 2.0, 0.0, 1.0];
        // x1^2 * y3 re-expanded at p, then evaluated away from p.
        let j = Jet::from_polynomial(&[(mi([2, 0, 0, 0, 0, 1]), 2.0)], p, 3).unwrap();
        let q = [0.7, -0.9, 0.0, 1.0, 3.0, 1.5];
        assert!((j.evaluate(&q) - 2.0f64 * 0.7 * 0.7 * 1.5).abs() < 1e-12);
        assert!((j.value() - 2.0f64 * 0.25 * 1.0).abs() < 1e-15);
    }

    #[test]
    fn reciprocal_and_exp() {
        let p = [0.3, 0.0, 0.0, 0.0, 0.1, 0.0];
        let f = Jet::from_polynomial(&[(MultiIndex::ZERO, 2.0), (mi([1, 0, 0, 0, 1, 0]), 1.0), (mi([0, 0, 0, 0, 2, 0]), -1.0)], p, 5).unwrap();
        let r = f.reciprocal().unwrap();
        let one = &f * &r;
        assert!((&one - &Jet::constant(1.0, p, 5)).max_abs() < 1e-14);
        let g = Jet::from_polynomial(&[(mi([1, 0, 0, 0, 0, 0]), 1.0)], p, 5).unwrap();
        let e = g.exp();
        let q = [0.32, 0.0, 0.0, 0.0, 0.1, 0.0];
        assert!((e.evaluate(&q) - 0.32f64.exp()).abs() < 1e-12);
    }

    #[test]
    fn compose_with_linear_map() {
        let p = [0.0; 6];
        let f = Jet::from_polynomial(&[(mi([1, 1, 0, 0, 0, 0]), 1.0)], p, 3).unwrap();
        let inner: Vec<Jet<f64>> = (0..6).map(|a| Jet::coordinate(a, p, 3).scale(2.0)).collect();
        let g = f.compose(&inner).unwrap();
        assert_eq!(g.coeff(&mi([1, 1, 0, 0, 0, 0])), 4.0);
    }

    #[test]
    fn single_precision_arithmetic() {
        let o = [0.0f32; 6];
        let x = Jet::<f32>::coordinate(0, o, 3);
        let one = Jet::constant(1.0f32, o, 3);
        let p = &(&one + &x) * &(&one - &x);
        assert_eq!(p.coeff(&mi([2, 0, 0, 0, 0, 0])), -1.0);
        assert_eq!(p.partial(0).unwrap().coeff(&mi([1, 0, 0, 0, 0, 0])), -2.0);
    }
}
