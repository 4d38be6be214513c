//! Rank-3 distributions on a 6-dimensional chart, described dually by three
//! spanning vector fields and three annihilating 1-forms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exterior::{JetMap, KForm, VectorField};
use crate::jet::{monomials, Jet, MultiIndex, DIM};
use crate::linalg::{jet_matrix_inverse, jet_matrix_value, singular_values, JetMatrix};
use crate::scalar::{eps, lit, to_f64, Real};

/// Singular-value ratio above which a 6x6 bracket matrix counts as invertible.
pub const NONDEGENERACY_RTOL: f64 = 1e-8;
const DEPENDENCE_RTOL: f64 = 1e-10;
/// Largest admissible annihilation residual, relative to the input scale.
pub const ANNIHILATION_TOL: f64 = 1e-10;

/// Chart coordinate names in storage order.
pub const COORD_NAMES: [&str; DIM] = ["x1", "x2", "x3", "y1", "y2", "y3"];

/// One term `coeff * x^monomial * d(coord)` of a polynomial 1-form written
/// in absolute chart coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct Term<T> {
    pub dcoord: usize,
    pub monomial: MultiIndex,
    pub coeff: T,
}

/// Three polynomial 1-forms spanning the annihilator of a distribution.
#[derive(Clone, Debug, PartialEq)]
pub struct PolynomialAnnihilators<T> {
    pub forms: [Vec<Term<T>>; 3],
}

impl<T: Real> PolynomialAnnihilators<T> {
    /// `dy_i + ε_{ijk} x^j dx^k`.
    pub fn flat() -> Self {
        let forms = std::array::from_fn(|i| {
            let mut terms = vec![Term { dcoord: 3 + i, monomial: MultiIndex::ZERO, coeff: T::one() }];
            for j in 0..3 {
                for k in 0..3 {
                    let e = eps(i, j, k);
                    if e != 0 {
                        terms.push(Term {
                            dcoord: k,
                            monomial: MultiIndex::unit(j),
                            coeff: lit(e as f64),
                        });
                    }
                }
            }
            terms
        });
        PolynomialAnnihilators { forms }
    }

    /// The flat annihilators plus `c * Q_i`, where each `Q_i = q_{ik} dx^k`
    /// has seed-generated polynomial coefficients of degree at most 3 with
    /// every monomial coefficient drawn uniformly from `[-1, 1]`.
    pub fn perturbed(c: T, seed: u64) -> Self {
        let mut out = Self::flat();
        if c == T::zero() {
            return out;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for form in out.forms.iter_mut() {
            for k in 0..3 {
                for m in monomials(3) {
                    let q: f64 = rng.gen_range(-1.0..=1.0);
                    form.push(Term { dcoord: k, monomial: *m, coeff: c * lit::<T>(q) });
                }
            }
        }
        out
    }

    /// Expands the three forms as jets about `base`.
    pub fn to_forms(&self, base: [T; DIM], order: usize) -> Result<[KForm<T>; 3]> {
        let mut out = Vec::with_capacity(3);
        for terms in &self.forms {
            let mut coeffs: Vec<Vec<(MultiIndex, T)>> = vec![Vec::new(); DIM];
            for t in terms {
                if t.dcoord >= DIM {
                    return Err(Error::InvalidArgument(format!("differential index {} out of range", t.dcoord)));
                }
                coeffs[t.dcoord].push((t.monomial, t.coeff));
            }
            let jets = coeffs
                .iter()
                .map(|c| Jet::from_polynomial(c, base, order))
                .collect::<Result<Vec<_>>>()?;
            out.push(KForm::from_coeffs(1, jets)?);
        }
        Ok(out.try_into().unwrap())
    }
}

/// Nondegeneracy verdict for the bracket-generating condition at the base
/// point.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct NondegeneracyCertificate {
    /// Determinant of the matrix whose rows are `X_1, X_2, X_3,
    /// [X_2,X_3], [X_3,X_1], [X_1,X_2]` at the base point.
    pub gram_determinant: f64,
    /// Smallest over largest singular value of the same matrix.
    pub singular_ratio: f64,
    pub verdict: bool,
}

#[derive(Clone, Debug)]
pub struct Distribution<T: Real> {
    generators: [VectorField<T>; 3],
    annihilators: [KForm<T>; 3],
    /// Coordinate fields completing the generators to a frame.
    complement: [usize; 3],
}

/// Column triples ordered so the `y` block is tried first.
fn candidate_triples() -> Vec<[usize; 3]> {
    let mut out = vec![[3, 4, 5]];
    for a in 0..DIM {
        for b in a + 1..DIM {
            for c in b + 1..DIM {
                if [a, b, c] != [3, 4, 5] {
                    out.push([a, b, c]);
                }
            }
        }
    }
    out
}

fn complement_of(cols: &[usize; 3]) -> [usize; 3] {
    let rest: Vec<usize> = (0..DIM).filter(|a| !cols.contains(a)).collect();
    [rest[0], rest[1], rest[2]]
}

/// Picks the best-conditioned 3x3 minor of a 3x6 value matrix, keeping an
/// earlier candidate unless a later one is at least twice as well
/// conditioned. Returns the chosen columns and the overall rank ratio.
fn pick_columns<T: Real>(rows: &[[T; DIM]; 3]) -> ([usize; 3], f64) {
    let full = nalgebra::DMatrix::from_fn(3, DIM, |i, a| to_f64(rows[i][a]));
    let sv = singular_values(&full);
    let ratio = if sv[0] > 0.0 { sv[2] / sv[0] } else { 0.0 };
    let mut best = ([3, 4, 5], -1.0);
    for cols in candidate_triples() {
        let m = nalgebra::DMatrix::from_fn(3, 3, |i, j| to_f64(rows[i][cols[j]]));
        let s = singular_values(&m);
        let r = if s[0] > 0.0 { s[2] / s[0] } else { 0.0 };
        if r > 2.0 * best.1 || best.1 < 0.0 {
            best = (cols, r);
        }
    }
    (best.0, ratio)
}

impl<T: Real> Distribution<T> {
    /// Builds the distribution annihilated by three independent 1-forms.
    /// Generators are `X_k = ∂_{f_k} + Σ_c a_{ck} ∂_c`, solved from the
    /// best-conditioned minor of the annihilator matrix.
    pub fn from_annihilators(theta: [KForm<T>; 3]) -> Result<Self> {
        for t in &theta {
            if t.degree() != 1 {
                return Err(Error::InvalidArgument("annihilators must be 1-forms".into()));
            }
        }
        let base = *theta[0].base_point();
        let rows: [[T; DIM]; 3] = std::array::from_fn(|i| std::array::from_fn(|a| theta[i].coeff(a).value()));
        let (cols, ratio) = pick_columns(&rows);
        if ratio <= DEPENDENCE_RTOL {
            return Err(Error::DependentTriple("annihilators"));
        }
        let free = complement_of(&cols);
        let m: JetMatrix<T> = (0..3)
            .map(|i| cols.iter().map(|&c| theta[i].coeff(c).clone()).collect())
            .collect();
        let minv = jet_matrix_inverse(&m)?;
        let order = theta.iter().map(|t| t.order()).min().unwrap();
        let generators = std::array::from_fn(|k| {
            let mut comps: Vec<Jet<T>> = vec![Jet::zero(base, order); DIM];
            comps[free[k]] = Jet::constant(T::one(), base, order);
            for (r, &c) in cols.iter().enumerate() {
                let mut acc = Jet::zero(base, order);
                for i in 0..3 {
                    acc -= &(&minv[r][i] * theta[i].coeff(free[k]));
                }
                comps[c] = acc;
            }
            VectorField::from_components(comps).unwrap()
        });
        Self::from_parts(generators, theta)
    }

    /// Builds the distribution spanned by three independent vector fields;
    /// annihilators are `θ_k = dx^{f_k} + Σ_c a_{kc} dx^c`.
    pub fn from_generators(x: [VectorField<T>; 3]) -> Result<Self> {
        let base = *x[0].base_point();
        let rows: [[T; DIM]; 3] = std::array::from_fn(|j| x[j].values());
        let (cols, ratio) = pick_columns(&rows);
        if ratio <= DEPENDENCE_RTOL {
            return Err(Error::DependentTriple("generators"));
        }
        let free = complement_of(&cols);
        // m[r][j] = X_j^{cols[r]}
        let m: JetMatrix<T> = cols.iter().map(|&c| (0..3).map(|j| x[j].comps()[c].clone()).collect()).collect();
        let minv = jet_matrix_inverse(&m)?;
        let order = x.iter().map(|v| v.order()).min().unwrap();
        let annihilators = std::array::from_fn(|k| {
            let mut coeffs: Vec<Jet<T>> = vec![Jet::zero(base, order); DIM];
            coeffs[free[k]] = Jet::constant(T::one(), base, order);
            // θ_k(X_j) = X_j^{f_k} + Σ_r a_r X_j^{c_r} = 0
            for (r, &c) in cols.iter().enumerate() {
                let mut acc = Jet::zero(base, order);
                for j in 0..3 {
                    acc -= &(&x[j].comps()[free[k]] * &minv[j][r]);
                }
                coeffs[c] = acc;
            }
            KForm::from_coeffs(1, coeffs).unwrap()
        });
        Self::from_parts(x, annihilators)
    }

    /// Pairs given generators with given annihilators after checking that
    /// both triples are independent and annihilate each other.
    pub fn from_parts(generators: [VectorField<T>; 3], annihilators: [KForm<T>; 3]) -> Result<Self> {
        let base = *generators[0].base_point();
        if generators.iter().any(|g| *g.base_point() != base) || annihilators.iter().any(|a| *a.base_point() != base) {
            return Err(Error::BasePointMismatch);
        }
        let grows: [[T; DIM]; 3] = std::array::from_fn(|j| generators[j].values());
        let (cols, ratio) = pick_columns(&grows);
        if ratio <= DEPENDENCE_RTOL {
            return Err(Error::DependentTriple("generators"));
        }
        let arows: [[T; DIM]; 3] = std::array::from_fn(|i| std::array::from_fn(|a| annihilators[i].coeff(a).value()));
        if pick_columns(&arows).1 <= DEPENDENCE_RTOL {
            return Err(Error::DependentTriple("annihilators"));
        }
        let d = Distribution { generators, annihilators, complement: complement_of(&cols) };
        let res = d.annihilation_residual()?;
        if res > ANNIHILATION_TOL {
            return Err(Error::Inconsistent { system: "annihilation of generators", residual: res });
        }
        Ok(d)
    }

    /// `dy_i + ε_{ijk} x^j dx^k` expanded at `base`.
    pub fn flat_model(base: [T; DIM], order: usize) -> Result<Self> {
        Self::from_annihilators(PolynomialAnnihilators::flat().to_forms(base, order)?)
    }

    /// Seeded perturbation of the flat model; fails if the result is not
    /// certified nondegenerate at `base`.
    pub fn perturbed_family(c: T, seed: u64, base: [T; DIM], order: usize) -> Result<Self> {
        let d = Self::from_annihilators(PolynomialAnnihilators::perturbed(c, seed).to_forms(base, order)?)?;
        let cert = d.check_nondegenerate()?;
        if !cert.verdict {
            return Err(Error::Degenerate { ratio: cert.singular_ratio });
        }
        Ok(d)
    }

    pub fn generators(&self) -> &[VectorField<T>; 3] {
        &self.generators
    }

    pub fn annihilators(&self) -> &[KForm<T>; 3] {
        &self.annihilators
    }

    /// Coordinate axes whose coordinate fields complete the generators to a
    /// frame at the base point.
    pub fn complement_axes(&self) -> [usize; 3] {
        self.complement
    }

    pub fn base_point(&self) -> &[T; DIM] {
        self.generators[0].base_point()
    }

    pub fn order(&self) -> usize {
        let g = self.generators.iter().map(|x| x.order()).min().unwrap();
        let a = self.annihilators.iter().map(|x| x.order()).min().unwrap();
        g.min(a)
    }

    /// Largest `|θ_i(X_j)|` coefficient relative to the input scale.
    pub fn annihilation_residual(&self) -> Result<f64> {
        let mut worst = T::zero();
        let mut scale = T::one();
        for t in &self.annihilators {
            for x in &self.generators {
                scale = scale.max(t.max_abs() * x.max_abs());
                worst = worst.max(t.evaluate(&[x])?.max_abs());
            }
        }
        Ok(to_f64(worst / scale))
    }

    pub fn check_nondegenerate(&self) -> Result<NondegeneracyCertificate> {
        let x = &self.generators;
        let rows = [
            x[0].values(),
            x[1].values(),
            x[2].values(),
            x[1].bracket(&x[2])?.values(),
            x[2].bracket(&x[0])?.values(),
            x[0].bracket(&x[1])?.values(),
        ];
        let m = nalgebra::DMatrix::from_fn(DIM, DIM, |r, a| to_f64(rows[r][a]));
        let sv = singular_values(&m);
        let singular_ratio = if sv[0] > 0.0 { sv[DIM - 1] / sv[0] } else { 0.0 };
        Ok(NondegeneracyCertificate {
            gram_determinant: m.determinant(),
            singular_ratio,
            verdict: singular_ratio > NONDEGENERACY_RTOL,
        })
    }

    /// Transports the distribution along `phi`: generators are pushed
    /// forward and annihilators pulled back by the inverse map. The result
    /// lives at the image of the base point and has order
    /// `min(self.order(), phi.order() - 1)`.
    pub fn apply_diffeo(&self, phi: &JetMap<T>) -> Result<Self> {
        if *phi.base_point() != *self.base_point() {
            return Err(Error::BasePointMismatch);
        }
        let psi = phi.invert()?;
        let mut gens = Vec::with_capacity(3);
        for g in &self.generators {
            gens.push(g.pushforward(phi, &psi)?);
        }
        let mut anns = Vec::with_capacity(3);
        for a in &self.annihilators {
            anns.push(a.pullback(&psi)?);
        }
        Self::from_parts(gens.try_into().unwrap(), anns.try_into().unwrap())
    }

    /// The frame `(Z_1, Z_2, Z_3, X_1, X_2, X_3)` made of the complementary
    /// coordinate fields followed by the generators, and its dual coframe.
    pub fn frame_and_dual(&self) -> Result<(Vec<VectorField<T>>, Vec<KForm<T>>)> {
        let base = *self.base_point();
        let order = self.order();
        let mut frame: Vec<VectorField<T>> =
            self.complement.iter().map(|&a| VectorField::coordinate(a, base, order)).collect();
        frame.extend(self.generators.iter().map(|g| g.truncate(order)));
        // columns are frame vectors; rows of the inverse are the dual forms
        let m: JetMatrix<T> = (0..DIM).map(|a| (0..DIM).map(|b| frame[b].comps()[a].clone()).collect()).collect();
        let inv = jet_matrix_inverse(&m)?;
        let dual = inv
            .into_iter()
            .map(|row| KForm::from_coeffs(1, row))
            .collect::<Result<Vec<_>>>()?;
        Ok((frame, dual))
    }

    /// Values of the annihilator coefficients at the base point.
    pub fn annihilator_values(&self) -> nalgebra::DMatrix<T> {
        let m: JetMatrix<T> = self.annihilators.iter().map(|t| t.coeffs().to_vec()).collect();
        jet_matrix_value(&m)
    }
}

/// Diffeomorphism fixing `base` of the form `x + quadratic + cubic` in the
/// displacement, with seed-generated coefficients scaled by `size`.
pub fn random_cubic_diffeo<T: Real>(seed: u64, size: T, base: [T; DIM], order: usize) -> Result<JetMap<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut comps = Vec::with_capacity(DIM);
    for a in 0..DIM {
        let mut terms = vec![(MultiIndex::ZERO, base[a]), (MultiIndex::unit(a), T::one())];
        for m in monomials(3) {
            if m.degree() >= 2 {
                let q: f64 = rng.gen_range(-1.0..=1.0);
                terms.push((*m, size * lit::<T>(q)));
            }
        }
        comps.push(Jet::from_displacement_terms(&terms, base, order)?);
    }
    JetMap::from_components(comps)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn origin() -> [f64; 6] {
        [0.0; 6]
    }

    #[test]
    fn coordinate_splitting() {
        let gens = std::array::from_fn(|k| VectorField::coordinate(k, origin(), 3));
        let d = Distribution::from_generators(gens).unwrap();
        let span = d.annihilator_values();
        for i in 0..3 {
            for a in 0..3 {
                assert_eq!(span[(i, a)], 0.0);
            }
        }
        let cert = d.check_nondegenerate().unwrap();
        assert!(!cert.verdict);
    }

    #[test]
    fn flat_annihilator_coefficients() {
        let d = Distribution::flat_model(origin(), 3).unwrap();
        let t1 = &d.annihilators()[0];
        assert_eq!(t1.coeff(3).value(), 1.0);
        assert_eq!(t1.coeff(2).coeff(&MultiIndex::unit(1)), 1.0);
        assert_eq!(t1.coeff(1).coeff(&MultiIndex::unit(2)), -1.0);
        // dθ̄_1 = 2 dx^2 ∧ dx^3
        let dt = t1.d().unwrap();
        let idx = crate::combinatorics::pair_index(1, 2);
        for (p, c) in dt.coeffs().iter().enumerate() {
            let want = if p == idx { 2.0 } else { 0.0 };
            assert!((c.value() - want).abs() < 1e-15);
            assert!(c.max_abs() - c.value().abs() < 1e-15);
        }
    }

    #[test]
    fn flat_generators_match_closed_form() {
        let base = [0.4, -0.3, 0.9, 0.1, 0.2, -0.5];
        let order = 3;
        let d = Distribution::flat_model(base, order).unwrap();
        for k in 0..3 {
            let mut comps: Vec<Jet<f64>> = vec![Jet::zero(base, order); 6];
            comps[k] = Jet::constant(1.0, base, order);
            for i in 0..3 {
                for j in 0..3 {
                    let e = eps(i, j, k) as f64;
                    if e != 0.0 {
                        comps[3 + i] -= &Jet::coordinate(j, base, order).scale(e);
                    }
                }
            }
            let want = VectorField::from_components(comps).unwrap();
            assert!((&d.generators()[k] - &want).max_abs() < 1e-14);
        }
        assert!(d.check_nondegenerate().unwrap().verdict);
    }

    #[test]
    fn dependent_annihilators_rejected() {
        let b = origin();
        let err = Distribution::from_annihilators([KForm::dx(0, b, 2), KForm::dx(0, b, 2), KForm::dx(1, b, 2)]);
        assert!(matches!(err, Err(Error::DependentTriple(_))));
    }

    #[test]
    fn zero_perturbation_is_flat() {
        assert_eq!(PolynomialAnnihilators::<f64>::perturbed(0.0, 7), PolynomialAnnihilators::flat());
        let a = Distribution::perturbed_family(0.0, 3, origin(), 3).unwrap();
        let b = Distribution::flat_model(origin(), 3).unwrap();
        for i in 0..3 {
            assert_eq!(a.annihilators()[i], b.annihilators()[i]);
        }
    }

    #[test]
    fn perturbed_is_nondegenerate() {
        for c in [0.05, 0.1] {
            let d = Distribution::perturbed_family(c, 1, origin(), 3).unwrap();
            assert!(d.check_nondegenerate().unwrap().verdict);
            assert!(d.annihilation_residual().unwrap() < 1e-12);
        }
    }

    #[test]
    fn diffeo_transport_keeps_certificate() {
        let base = [0.1, 0.2, -0.1, 0.3, 0.0, 0.2];
        let d = Distribution::flat_model(base, 4).unwrap();
        let phi = random_cubic_diffeo(11, 0.3, base, 5).unwrap();
        let e = d.apply_diffeo(&phi).unwrap();
        assert_eq!(e.order(), 4);
        assert!(e.check_nondegenerate().unwrap().verdict);
        let lin = JetMap::from_components((0..6).map(|a| Jet::coordinate(a, base, 5).scale(2.0)).collect()).unwrap();
        assert!(d.apply_diffeo(&lin).unwrap().check_nondegenerate().unwrap().verdict);
    }

    #[test]
    fn dual_frame_of_flat_model() {
        let base = [0.3, 0.1, -0.2, 0.0, 0.0, 0.0];
        let d = Distribution::flat_model(base, 3).unwrap();
        let (_, dual) = d.frame_and_dual().unwrap();
        for k in 0..3 {
            assert!((&dual[3 + k] - &KForm::dx(k, base, 3)).max_abs() < 1e-14);
        }
    }
}
