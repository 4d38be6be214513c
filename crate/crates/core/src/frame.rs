//! Coframes with their dual frames, and linear systems whose coefficients
//! are constant in a frame basis but whose right-hand sides are jets.
//!
//! Forms expressed relative to a coframe `η^0..η^5` are stored as plain
//! vectors of jets: six entries for a 1-form, fifteen (pairs `b < c` in
//! lexicographic order) for a 2-form.

use nalgebra::DMatrix;

use crate::combinatorics::{pair_index, subsets};
use crate::error::{Error, Result};
use crate::exterior::{KForm, VectorField};
use crate::jet::{Jet, DIM};
use crate::linalg::{jet_matrix_inverse, pseudo_inverse, PseudoInverse, RANK_RTOL};
use crate::scalar::{to_f64, Real};

pub const PAIRS: usize = 15;

#[derive(Clone, Debug)]
pub struct Coframe<T: Real> {
    forms: Vec<KForm<T>>,
    frame: Vec<VectorField<T>>,
}

impl<T: Real> Coframe<T> {
    pub fn new(forms: Vec<KForm<T>>) -> Result<Self> {
        if forms.len() != DIM || forms.iter().any(|f| f.degree() != 1) {
            return Err(Error::InvalidArgument("a coframe is six 1-forms".into()));
        }
        let order = forms.iter().map(|f| f.order()).min().unwrap();
        let forms: Vec<KForm<T>> = forms.iter().map(|f| f.truncate(order)).collect();
        let m: Vec<Vec<Jet<T>>> = forms.iter().map(|f| f.coeffs().to_vec()).collect();
        let inv = jet_matrix_inverse(&m).map_err(|_| Error::Singular("coframe"))?;
        let frame = (0..DIM)
            .map(|b| VectorField::from_components((0..DIM).map(|a| inv[a][b].clone()).collect()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Coframe { forms, frame })
    }

    pub fn forms(&self) -> &[KForm<T>] {
        &self.forms
    }

    /// Dual frame: `η^a(E_b) = δ^a_b`.
    pub fn frame(&self) -> &[VectorField<T>] {
        &self.frame
    }

    pub fn order(&self) -> usize {
        self.forms[0].order()
    }

    pub fn base_point(&self) -> &[T; DIM] {
        self.forms[0].base_point()
    }

    pub fn components1(&self, f: &KForm<T>) -> Result<Vec<Jet<T>>> {
        self.frame.iter().map(|e| f.evaluate(&[e])).collect()
    }

    /// `Ω(E_b, E_c)` for `b < c`, the coefficients of `η^b ∧ η^c`.
    pub fn components2(&self, f: &KForm<T>) -> Result<Vec<Jet<T>>> {
        if f.degree() != 2 {
            return Err(Error::InvalidArgument("expected a 2-form".into()));
        }
        let mut out = Vec::with_capacity(PAIRS);
        for pair in subsets().list(2) {
            let inner = f.interior(&self.frame[pair[0]])?;
            out.push(inner.evaluate(&[&self.frame[pair[1]]])?);
        }
        Ok(out)
    }

    /// The 1-form `Σ c_b η^b`.
    pub fn assemble1(&self, c: &[Jet<T>]) -> Result<KForm<T>> {
        let mut acc = self.forms[0].mul_jet(&c[0])?;
        for b in 1..DIM {
            acc = acc.try_add(&self.forms[b].mul_jet(&c[b])?)?;
        }
        Ok(acc)
    }

    /// Frame components of `dη^a`, one row of fifteen jets per form.
    pub fn structure_functions(&self) -> Result<Vec<Vec<Jet<T>>>> {
        self.forms.iter().map(|f| self.components2(&f.d()?)).collect()
    }
}

/// Frame components of `η^b ∧ η^c` as a (pair index, sign) entry.
pub fn wedge_entry(b: usize, c: usize) -> Option<(usize, f64)> {
    if b == c {
        None
    } else if b < c {
        Some((pair_index(b, c), 1.0))
    } else {
        Some((pair_index(c, b), -1.0))
    }
}

/// Dense constant-coefficient system `M u = r`, assembled row block by row
/// block.
#[derive(Clone, Debug)]
pub struct LinearSystem<T: Real> {
    pub matrix: DMatrix<T>,
}

impl<T: Real> LinearSystem<T> {
    pub fn new(rows: usize, unknowns: usize) -> Self {
        LinearSystem { matrix: DMatrix::zeros(rows, unknowns) }
    }

    pub fn add(&mut self, row: usize, unknown: usize, coeff: f64) {
        self.matrix[(row, unknown)] += crate::scalar::lit::<T>(coeff);
    }

    /// Adds `coeff * u * η^b ∧ η^c` to the 2-form occupying rows
    /// `first_row .. first_row + 15`.
    pub fn add_wedge(&mut self, first_row: usize, unknown: usize, coeff: f64, b: usize, c: usize) {
        if let Some((p, s)) = wedge_entry(b, c) {
            self.add(first_row + p, unknown, coeff * s);
        }
    }

    pub fn pseudo_inverse(&self) -> PseudoInverse<T> {
        pseudo_inverse(&self.matrix, RANK_RTOL)
    }
}

/// `pinv · rhs`, evaluated coefficient by coefficient on the jets.
pub fn apply_matrix<T: Real>(m: &DMatrix<T>, rhs: &[Jet<T>]) -> Vec<Jet<T>> {
    let base = *rhs[0].base_point();
    let order = rhs.iter().map(|j| j.order()).min().unwrap();
    (0..m.nrows())
        .map(|u| {
            let mut acc = Jet::zero(base, order);
            for (r, j) in rhs.iter().enumerate() {
                let w = m[(u, r)];
                if w != T::zero() {
                    crate::jet::axpy(&mut acc, w, j);
                }
            }
            acc
        })
        .collect()
}

/// Largest coefficient of `M u - rhs`.
pub fn residual<T: Real>(m: &DMatrix<T>, u: &[Jet<T>], rhs: &[Jet<T>]) -> f64 {
    let mu = apply_matrix(m, u);
    mu.iter()
        .zip(rhs)
        .map(|(a, b)| to_f64((a - b).max_abs()))
        .fold(0.0, f64::max)
}

/// Largest magnitude among the jets, at least one.
pub fn scale_of<T: Real>(jets: &[Jet<T>]) -> f64 {
    jets.iter().map(|j| to_f64(j.max_abs())).fold(1.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coordinate_coframe_has_zero_structure() {
        let base = [0.2; 6];
        let forms = (0..6).map(|a| KForm::dx(a, base, 3)).collect();
        let cf = Coframe::new(forms).unwrap();
        for row in cf.structure_functions().unwrap() {
            for c in row {
                assert_eq!(c.max_abs(), 0.0);
            }
        }
    }

    #[test]
    fn frame_is_dual() {
        let base = [0.1, -0.2, 0.3, 0.0, 0.5, -0.4];
        let d = crate::distribution::Distribution::flat_model(base, 3).unwrap();
        let mut forms: Vec<KForm<f64>> = d.annihilators().to_vec();
        forms.extend((0..3).map(|k| KForm::dx(k, base, 3)));
        let cf = Coframe::new(forms).unwrap();
        for a in 0..6 {
            let comps = cf.components1(&cf.forms()[a]).unwrap();
            for (b, c) in comps.iter().enumerate() {
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((c - &Jet::constant(want, base, 3)).max_abs() < 1e-14);
            }
        }
        // dθ̄_1 = 2 ω^2 ∧ ω^3 exactly in this coframe
        let s = cf.structure_functions().unwrap();
        let p = pair_index(4, 5);
        for (q, c) in s[0].iter().enumerate() {
            let want = if q == p { 2.0 } else { 0.0 };
            assert!((c.value() - want).abs() < 1e-14);
        }
    }

    #[test]
    fn wedge_entries_are_antisymmetric() {
        assert_eq!(wedge_entry(0, 1), Some((0, 1.0)));
        assert_eq!(wedge_entry(1, 0), Some((0, -1.0)));
        assert_eq!(wedge_entry(2, 2), None);
    }
}
