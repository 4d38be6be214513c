//! Differential forms, vector fields and local maps with jet coefficients.
//!
//! A [`KForm`] stores one jet per strictly increasing index tuple, in the
//! lexicographic order of [`crate::combinatorics::Subsets`]. The same type is
//! also used for components relative to a coframe other than the chart
//! differentials; the wedge product does not depend on which basis is meant,
//! the exterior derivative does.

use std::ops::{Add, Neg, Sub};

use crate::combinatorics::subsets;
use crate::error::{Error, Result};
use crate::jet::{Jet, DIM};
use crate::linalg::{jet_matrix_inverse, jet_matrix_value, JetMatrix};
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct KForm<T> {
    degree: usize,
    coeffs: Vec<Jet<T>>,
}

impl<T: Real> KForm<T> {
    pub fn zero(degree: usize, base: [T; DIM], order: usize) -> Self {
        assert!(degree <= DIM);
        KForm {
            degree,
            coeffs: vec![Jet::zero(base, order); subsets().count(degree)],
        }
    }

    /// A function viewed as a 0-form.
    pub fn function(f: Jet<T>) -> Self {
        KForm { degree: 0, coeffs: vec![f] }
    }

    /// The chart differential `dx^axis`.
    pub fn dx(axis: usize, base: [T; DIM], order: usize) -> Self {
        let mut f = Self::zero(1, base, order);
        f.coeffs[axis] = Jet::constant(T::one(), base, order);
        f
    }

    /// Builds a form from one jet per index tuple, truncating to the
    /// lowest order present.
    pub fn from_coeffs(degree: usize, coeffs: Vec<Jet<T>>) -> Result<Self> {
        if degree > DIM {
            return Err(Error::DegreeOverflow(degree, 0));
        }
        if coeffs.len() != subsets().count(degree) {
            return Err(Error::InvalidArgument(format!(
                "a {degree}-form needs {} coefficients, got {}",
                subsets().count(degree),
                coeffs.len()
            )));
        }
        let base = *coeffs[0].base_point();
        if coeffs.iter().any(|c| *c.base_point() != base) {
            return Err(Error::BasePointMismatch);
        }
        let order = coeffs.iter().map(|c| c.order()).min().unwrap();
        let coeffs = coeffs.into_iter().map(|c| c.truncate(order)).collect();
        Ok(KForm { degree, coeffs })
    }

    /// Sum of `coeff * dx^a` over the chart differentials.
    pub fn one_form(coeffs: [Jet<T>; DIM]) -> Result<Self> {
        Self::from_coeffs(1, coeffs.to_vec())
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn order(&self) -> usize {
        self.coeffs[0].order()
    }

    pub fn base_point(&self) -> &[T; DIM] {
        self.coeffs[0].base_point()
    }

    pub fn coeffs(&self) -> &[Jet<T>] {
        &self.coeffs
    }

    pub fn coeff(&self, idx: usize) -> &Jet<T> {
        &self.coeffs[idx]
    }

    /// Coefficient of `dx^{i_1} ∧ ... ∧ dx^{i_k}` for an arbitrary tuple,
    /// including the sign of the sorting permutation.
    pub fn component(&self, tuple: &[usize]) -> Jet<T> {
        assert_eq!(tuple.len(), self.degree);
        let sign = crate::combinatorics::sort_sign(tuple);
        if sign == 0 {
            return Jet::zero(*self.base_point(), self.order());
        }
        let mut sorted = tuple.to_vec();
        sorted.sort_unstable();
        let c = &self.coeffs[subsets().index_of(&sorted)];
        if sign > 0 {
            c.clone()
        } else {
            -c
        }
    }

    /// Coefficient values at the base point.
    pub fn values(&self) -> Vec<T> {
        self.coeffs.iter().map(|c| c.value()).collect()
    }

    pub fn truncate(&self, order: usize) -> Self {
        KForm {
            degree: self.degree,
            coeffs: self.coeffs.iter().map(|c| c.truncate(order)).collect(),
        }
    }

    pub fn max_abs(&self) -> T {
        self.coeffs.iter().fold(T::zero(), |acc, c| acc.max(c.max_abs()))
    }

    pub fn scale(&self, s: T) -> Self {
        KForm {
            degree: self.degree,
            coeffs: self.coeffs.iter().map(|c| c.scale(s)).collect(),
        }
    }

    /// Multiplication by a function.
    pub fn mul_jet(&self, f: &Jet<T>) -> Result<Self> {
        let coeffs = self.coeffs.iter().map(|c| c.try_mul(f)).collect::<Result<Vec<_>>>()?;
        Ok(KForm { degree: self.degree, coeffs })
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.degree != other.degree {
            return Err(Error::InvalidArgument(format!(
                "cannot add forms of degree {} and {}",
                self.degree, other.degree
            )));
        }
        if self.base_point() != other.base_point() {
            return Err(Error::BasePointMismatch);
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a.try_add(b))
            .collect::<Result<Vec<_>>>()?;
        Ok(KForm { degree: self.degree, coeffs })
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a.try_sub(b))
            .collect::<Result<Vec<_>>>()?;
        Ok(KForm { degree: self.degree, coeffs })
    }

    /// `self + f * other` for a function `f`.
    pub fn add_scaled(&self, f: &Jet<T>, other: &Self) -> Result<Self> {
        self.try_add(&other.mul_jet(f)?)
    }

    pub fn wedge(&self, other: &Self) -> Result<Self> {
        let k = self.degree + other.degree;
        if k > DIM {
            return Err(Error::DegreeOverflow(self.degree, other.degree));
        }
        if self.base_point() != other.base_point() {
            return Err(Error::BasePointMismatch);
        }
        let order = self.order().min(other.order());
        let mut out = Self::zero(k, *self.base_point(), order);
        for &(i1, i2, target, sign) in subsets().wedge_table(self.degree, other.degree) {
            let a = &self.coeffs[i1];
            let b = &other.coeffs[i2];
            let prod = a.try_mul(b)?;
            if sign > 0 {
                out.coeffs[target] += &prod;
            } else {
                out.coeffs[target] -= &prod;
            }
        }
        Ok(out)
    }

    /// Exterior derivative in the chart; the result is one order lower.
    pub fn d(&self) -> Result<Self> {
        if self.degree == DIM {
            return Ok(Self::zero(DIM, *self.base_point(), self.order().saturating_sub(1)));
        }
        if self.order() == 0 {
            return Err(Error::InsufficientOrder {
                what: "exterior derivative",
                needed: 1,
                available: 0,
            });
        }
        let grads: Vec<Vec<Jet<T>>> = self.coeffs.iter().map(|c| c.gradient()).collect::<Result<_>>()?;
        let mut out = Self::zero(self.degree + 1, *self.base_point(), self.order() - 1);
        for &(c, i, target, sign) in subsets().wedge_table(1, self.degree) {
            let g = &grads[i][c];
            if sign > 0 {
                out.coeffs[target] += g;
            } else {
                out.coeffs[target] -= g;
            }
        }
        Ok(out)
    }

    /// Interior product `ι_X self`.
    pub fn interior(&self, x: &VectorField<T>) -> Result<Self> {
        if self.degree == 0 {
            return Err(Error::InvalidArgument("interior product of a 0-form".into()));
        }
        if self.base_point() != x.base_point() {
            return Err(Error::BasePointMismatch);
        }
        let order = self.order().min(x.order());
        let mut out = Self::zero(self.degree - 1, *self.base_point(), order);
        for &(c, j, target, sign) in subsets().wedge_table(1, self.degree - 1) {
            let prod = x.comps[c].try_mul(&self.coeffs[target])?;
            if sign > 0 {
                out.coeffs[j] += &prod;
            } else {
                out.coeffs[j] -= &prod;
            }
        }
        Ok(out)
    }

    /// `self(X_1, ..., X_k)` as a function.
    pub fn evaluate(&self, vectors: &[&VectorField<T>]) -> Result<Jet<T>> {
        if vectors.len() != self.degree {
            return Err(Error::InvalidArgument(format!(
                "a {}-form takes {} vectors, got {}",
                self.degree,
                self.degree,
                vectors.len()
            )));
        }
        let mut f = self.clone();
        for v in vectors {
            f = f.interior(v)?;
        }
        Ok(f.coeffs.into_iter().next().unwrap())
    }

    /// Pullback `Φ^* self` where `self` lives at the image of the base of `Φ`.
    pub fn pullback(&self, phi: &JetMap<T>) -> Result<Self> {
        let dphi = phi.differentials()?;
        let base = *phi.base_point();
        let s = subsets();
        // images of the basis k-forms dx^I, built up one factor at a time
        let mut images: Vec<KForm<T>> = vec![KForm::function(Jet::constant(T::one(), base, phi.order() - 1))];
        for k in 1..=self.degree {
            images = s
                .list(k)
                .iter()
                .map(|tuple| {
                    let rest = s.index_of(&tuple[1..]);
                    dphi[tuple[0]].wedge(&images[rest])
                })
                .collect::<Result<Vec<_>>>()?;
        }
        let order = self.order().min(phi.order() - 1);
        let mut out = Self::zero(self.degree, base, order);
        for (c, img) in self.coeffs.iter().zip(&images) {
            let c = c.compose(phi.comps())?;
            out = out.try_add(&img.mul_jet(&c)?)?;
        }
        Ok(out)
    }
}

impl<'a, T: Real> Add<&'a KForm<T>> for &'a KForm<T> {
    type Output = KForm<T>;
    fn add(self, rhs: &'a KForm<T>) -> KForm<T> {
        self.try_add(rhs).expect("incompatible forms")
    }
}

impl<'a, T: Real> Sub<&'a KForm<T>> for &'a KForm<T> {
    type Output = KForm<T>;
    fn sub(self, rhs: &'a KForm<T>) -> KForm<T> {
        self.try_sub(rhs).expect("incompatible forms")
    }
}

impl<T: Real> Neg for &KForm<T> {
    type Output = KForm<T>;
    fn neg(self) -> KForm<T> {
        self.scale(-T::one())
    }
}

/// A vector field given by its chart components.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField<T> {
    comps: Vec<Jet<T>>,
}

impl<T: Real> VectorField<T> {
    pub fn zero(base: [T; DIM], order: usize) -> Self {
        VectorField { comps: vec![Jet::zero(base, order); DIM] }
    }

    /// The coordinate field `∂/∂x^axis`.
    pub fn coordinate(axis: usize, base: [T; DIM], order: usize) -> Self {
        let mut v = Self::zero(base, order);
        v.comps[axis] = Jet::constant(T::one(), base, order);
        v
    }

    pub fn from_components(comps: Vec<Jet<T>>) -> Result<Self> {
        if comps.len() != DIM {
            return Err(Error::InvalidArgument(format!(
                "a vector field needs {DIM} components, got {}",
                comps.len()
            )));
        }
        let base = *comps[0].base_point();
        if comps.iter().any(|c| *c.base_point() != base) {
            return Err(Error::BasePointMismatch);
        }
        let order = comps.iter().map(|c| c.order()).min().unwrap();
        Ok(VectorField { comps: comps.into_iter().map(|c| c.truncate(order)).collect() })
    }

    pub fn comps(&self) -> &[Jet<T>] {
        &self.comps
    }

    pub fn order(&self) -> usize {
        self.comps[0].order()
    }

    pub fn base_point(&self) -> &[T; DIM] {
        self.comps[0].base_point()
    }

    pub fn values(&self) -> [T; DIM] {
        std::array::from_fn(|a| self.comps[a].value())
    }

    pub fn truncate(&self, order: usize) -> Self {
        VectorField { comps: self.comps.iter().map(|c| c.truncate(order)).collect() }
    }

    pub fn max_abs(&self) -> T {
        self.comps.iter().fold(T::zero(), |acc, c| acc.max(c.max_abs()))
    }

    pub fn scale(&self, s: T) -> Self {
        VectorField { comps: self.comps.iter().map(|c| c.scale(s)).collect() }
    }

    pub fn mul_jet(&self, f: &Jet<T>) -> Result<Self> {
        Ok(VectorField { comps: self.comps.iter().map(|c| c.try_mul(f)).collect::<Result<_>>()? })
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        Ok(VectorField {
            comps: self.comps.iter().zip(&other.comps).map(|(a, b)| a.try_add(b)).collect::<Result<_>>()?,
        })
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        Ok(VectorField {
            comps: self.comps.iter().zip(&other.comps).map(|(a, b)| a.try_sub(b)).collect::<Result<_>>()?,
        })
    }

    /// Directional derivative `X(f)`.
    pub fn apply(&self, f: &Jet<T>) -> Result<Jet<T>> {
        let grad = f.gradient()?;
        let mut acc = self.comps[0].try_mul(&grad[0])?;
        for a in 1..DIM {
            acc = acc.try_add(&self.comps[a].try_mul(&grad[a])?)?;
        }
        Ok(acc)
    }

    /// Lie bracket `[self, other]`.
    pub fn bracket(&self, other: &Self) -> Result<Self> {
        let comps = (0..DIM)
            .map(|a| self.apply(&other.comps[a])?.try_sub(&other.apply(&self.comps[a])?))
            .collect::<Result<Vec<_>>>()?;
        Ok(VectorField { comps })
    }

    /// Pushforward `Φ_* self`, a field at the image point. `inverse` must be
    /// the local inverse of `phi`.
    pub fn pushforward(&self, phi: &JetMap<T>, inverse: &JetMap<T>) -> Result<Self> {
        let jac = phi.jacobian()?;
        let mut comps = Vec::with_capacity(DIM);
        for row in jac.iter() {
            let mut acc = row[0].try_mul(&self.comps[0])?;
            for b in 1..DIM {
                acc = acc.try_add(&row[b].try_mul(&self.comps[b])?)?;
            }
            comps.push(acc.compose(inverse.comps())?);
        }
        Self::from_components(comps)
    }
}

impl<'a, T: Real> Add<&'a VectorField<T>> for &'a VectorField<T> {
    type Output = VectorField<T>;
    fn add(self, rhs: &'a VectorField<T>) -> VectorField<T> {
        self.try_add(rhs).expect("incompatible vector fields")
    }
}

impl<'a, T: Real> Sub<&'a VectorField<T>> for &'a VectorField<T> {
    type Output = VectorField<T>;
    fn sub(self, rhs: &'a VectorField<T>) -> VectorField<T> {
        self.try_sub(rhs).expect("incompatible vector fields")
    }
}

/// A local map between charts: component `a` is the jet of `y^a ∘ Φ` at the
/// base point.
#[derive(Clone, Debug, PartialEq)]
pub struct JetMap<T> {
    comps: Vec<Jet<T>>,
}

impl<T: Real> JetMap<T> {
    pub fn identity(base: [T; DIM], order: usize) -> Self {
        JetMap { comps: (0..DIM).map(|a| Jet::coordinate(a, base, order)).collect() }
    }

    pub fn from_components(comps: Vec<Jet<T>>) -> Result<Self> {
        let v = VectorField::from_components(comps)?;
        Ok(JetMap { comps: v.comps })
    }

    pub fn comps(&self) -> &[Jet<T>] {
        &self.comps
    }

    pub fn order(&self) -> usize {
        self.comps[0].order()
    }

    pub fn base_point(&self) -> &[T; DIM] {
        self.comps[0].base_point()
    }

    /// Image of the base point.
    pub fn image(&self) -> [T; DIM] {
        std::array::from_fn(|a| self.comps[a].value())
    }

    /// `jacobian[a][b] = ∂Φ^a/∂x^b`, one order lower.
    pub fn jacobian(&self) -> Result<JetMatrix<T>> {
        self.comps.iter().map(|c| c.gradient()).collect()
    }

    /// The 1-forms `dΦ^a`.
    pub fn differentials(&self) -> Result<Vec<KForm<T>>> {
        self.comps
            .iter()
            .map(|c| KForm::from_coeffs(1, c.gradient()?))
            .collect()
    }

    /// `self ∘ inner`, where `inner` maps onto the base point of `self`.
    pub fn compose(&self, inner: &JetMap<T>) -> Result<Self> {
        let comps = self.comps.iter().map(|c| c.compose(&inner.comps)).collect::<Result<_>>()?;
        Ok(JetMap { comps })
    }

    /// Local inverse by Newton iteration on jets; each step doubles the
    /// number of correct Taylor degrees.
    pub fn invert(&self) -> Result<Self> {
        let order = self.order();
        if order == 0 {
            return Err(Error::InsufficientOrder { what: "map inversion", needed: 1, available: 0 });
        }
        let p = *self.base_point();
        let q = self.image();
        let jac = self.jacobian()?;
        let j0 = jet_matrix_value(&jac);
        let sv = crate::linalg::singular_values(&j0);
        if sv[DIM - 1] <= sv[0] * crate::scalar::lit::<T>(1e-12) {
            return Err(Error::Singular("jacobian of map to invert"));
        }
        let j0inv = j0.try_inverse().ok_or(Error::Singular("jacobian of map to invert"))?;
        let ys: Vec<Jet<T>> = (0..DIM).map(|a| Jet::coordinate(a, q, order)).collect();
        let disp: Vec<Jet<T>> = (0..DIM)
            .map(|a| &ys[a] - &Jet::constant(q[a], q, order))
            .collect();
        let mut psi: Vec<Jet<T>> = (0..DIM)
            .map(|a| {
                let mut acc = Jet::constant(p[a], q, order);
                for b in 0..DIM {
                    crate::jet::axpy(&mut acc, j0inv[(a, b)], &disp[b]);
                }
                acc
            })
            .collect();
        let mut valid = 1usize;
        while valid < order {
            let err: Vec<Jet<T>> = (0..DIM)
                .map(|a| Ok(&self.comps[a].compose(&psi)? - &ys[a]))
                .collect::<Result<_>>()?;
            let jac_at: JetMatrix<T> = jac
                .iter()
                .map(|row| row.iter().map(|e| e.compose(&psi)).collect::<Result<Vec<_>>>())
                .collect::<Result<_>>()?;
            let inv = jet_matrix_inverse(&jac_at)?;
            for a in 0..DIM {
                let mut step = Jet::zero(q, order);
                for b in 0..DIM {
                    step += &(&inv[a][b].padded(order) * &err[b]);
                }
                psi[a] = &psi[a] - &step;
                let mut exact = psi[a].clone();
                exact.set_coeff(&crate::jet::MultiIndex::ZERO, p[a]);
                psi[a] = exact;
            }
            valid = 2 * valid + 1;
        }
        Ok(JetMap { comps: psi })
    }

    /// Evaluates the truncated map at an absolute point.
    pub fn evaluate(&self, point: &[T; DIM]) -> [T; DIM] {
        std::array::from_fn(|a| self.comps[a].evaluate(point))
    }

    pub fn max_abs(&self) -> T {
        self.comps.iter().fold(T::zero(), |acc, c| acc.max(c.max_abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::MultiIndex;

    fn x(a: usize, base: [f64; 6], order: usize) -> Jet<f64> {
        Jet::coordinate(a, base, order)
    }

    #[test]
    fn d_of_function_is_gradient() {
        let base = [0.5, -0.2, 0.1, 0.0, 0.3, 0.7];
        let f = &x(0, base, 3) * &x(3, base, 3);
        let df = KForm::function(f).d().unwrap();
        // d(x1 y1) = y1 dx1 + x1 dy1
        assert!((df.coeff(0).value() - base[3]).abs() < 1e-15);
        assert!((df.coeff(3).value() - base[0]).abs() < 1e-15);
    }

    #[test]
    fn dd_vanishes() {
        let base = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6];
        let f = &(&x(0, base, 4) * &x(1, base, 4)) * &x(4, base, 4);
        let g = &x(2, base, 4) * &x(2, base, 4);
        let a = KForm::function(f).d().unwrap().mul_jet(&g).unwrap();
        assert!(a.d().unwrap().d().unwrap().max_abs() < 1e-13);
    }

    #[test]
    fn wedge_is_graded_commutative() {
        let base = [0.0; 6];
        let a = KForm::dx(0, base, 2);
        let b = KForm::dx(4, base, 2).mul_jet(&x(1, base, 2)).unwrap();
        let ab = a.wedge(&b).unwrap();
        let ba = b.wedge(&a).unwrap();
        assert!((&ab + &ba).max_abs() < 1e-15);
        assert!(a.wedge(&a).unwrap().max_abs() == 0.0);
    }

    #[test]
    fn interior_and_evaluate() {
        let base = [0.0; 6];
        let w = KForm::dx(0, base, 2).wedge(&KForm::dx(1, base, 2)).unwrap();
        let e0 = VectorField::coordinate(0, base, 2);
        let e1 = VectorField::coordinate(1, base, 2);
        assert_eq!(w.evaluate(&[&e0, &e1]).unwrap().value(), 1.0);
        assert_eq!(w.evaluate(&[&e1, &e0]).unwrap().value(), -1.0);
        let i = w.interior(&e1).unwrap();
        assert_eq!(i.coeff(0).value(), -1.0);
    }

    #[test]
    fn bracket_of_flat_generators() {
        // X_k = ∂_{x^k} - ε_{ijk} x^j ∂_{y_i}; [X_1, X_2] = -2 ∂_{y_3}
        let base = [0.3, -0.1, 0.2, 0.0, 0.0, 0.0];
        let order = 3;
        let gen = |k: usize| {
            let mut comps: Vec<Jet<f64>> = (0..6).map(|_| Jet::zero(base, order)).collect();
            comps[k] = Jet::constant(1.0, base, order);
            for i in 0..3 {
                for j in 0..3 {
                    let e = crate::scalar::eps(i, j, k) as f64;
                    if e != 0.0 {
                        comps[3 + i] -= &x(j, base, order).scale(e);
                    }
                }
            }
            VectorField::from_components(comps).unwrap()
        };
        let br = gen(0).bracket(&gen(1)).unwrap();
        let want = VectorField::coordinate(5, base, order - 1).scale(-2.0);
        assert!((&br - &want).max_abs() < 1e-14);
    }

    #[test]
    fn inversion_round_trip() {
        let base = [0.2, 0.1, -0.3, 0.4, 0.0, 0.5];
        let order = 5;
        let mut comps: Vec<Jet<f64>> = (0..6).map(|a| x(a, base, order)).collect();
        comps[0] += &(&x(1, base, order) * &x(3, base, order)).scale(0.7);
        comps[4] += &(&(&x(2, base, order) * &x(2, base, order)) * &x(5, base, order)).scale(-0.4);
        comps[2] += &x(4, base, order).scale(0.3);
        let phi = JetMap::from_components(comps).unwrap();
        let psi = phi.invert().unwrap();
        assert_eq!(*psi.base_point(), phi.image());
        let id = phi.compose(&psi).unwrap();
        let want = JetMap::identity(phi.image(), order);
        for a in 0..6 {
            assert!((&id.comps()[a] - &want.comps()[a]).max_abs() < 1e-12);
        }
        let back = psi.compose(&phi).unwrap();
        for a in 0..6 {
            assert!((&back.comps()[a] - &x(a, base, order)).max_abs() < 1e-12);
        }
    }

    #[test]
    fn pullback_commutes_with_d() {
        let p = [0.1, 0.0, 0.2, -0.1, 0.3, 0.0];
        let order = 5;
        let mut comps: Vec<Jet<f64>> = (0..6).map(|a| x(a, p, order)).collect();
        comps[3] += &(&x(0, p, order) * &x(1, p, order)).scale(0.5);
        comps[1] += &(&x(5, p, order) * &x(5, p, order)).scale(-0.2);
        let phi = JetMap::from_components(comps).unwrap();
        let q = phi.image();
        let f = Jet::from_polynomial(
            &[(MultiIndex([1, 0, 0, 1, 0, 0]), 1.0), (MultiIndex([0, 2, 0, 0, 0, 1]), 0.5)],
            q,
            order,
        )
        .unwrap();
        let a = KForm::function(f).d().unwrap().mul_jet(&x(2, q, order)).unwrap();
        let lhs = a.d().unwrap().pullback(&phi).unwrap();
        let rhs = a.pullback(&phi).unwrap().d().unwrap();
        let o = lhs.order().min(rhs.order());
        assert!((&lhs.truncate(o) - &rhs.truncate(o)).max_abs() < 1e-12);
    }
}
