//! 1-adapted and 2-adapted coframes and the torsion `P` separating them.
//!
//! A coframe `(θ_1, θ_2, θ_3, ω^1, ω^2, ω^3)` is 1-adapted when the `θ_i`
//! annihilate the distribution and `dθ_i ≡ ε_{ijk} ω^j ∧ ω^k` modulo the
//! `θ`. Writing the structure equations with a pseudo-connection `(α, β)`
//! leaves a torsion term `P^{il} ε_{ljk} ω^j ∧ ω^k` in `dω^i`; the coframe
//! is 2-adapted when `P = 0`.

use std::collections::BTreeMap;

use crate::conventions::Conventions;
use crate::distribution::Distribution;
use crate::error::{Error, Result};
use crate::exterior::KForm;
use crate::frame::{apply_matrix, residual, scale_of, Coframe, LinearSystem, PAIRS};
use crate::jet::{Jet, DIM};
use crate::linalg::{jet_matrix_inverse, JetMatrix};
use crate::scalar::{eps, lit, to_f64, Real};

/// Tolerance on structure-equation residuals of adapted coframes.
pub const ADAPTATION_TOL: f64 = 1e-9;
/// Post-reduction bound on the torsion.
pub const REDUCTION_TOL: f64 = 1e-8;

/// Coframe index of `θ_i`.
pub const fn th(i: usize) -> usize {
    i
}

/// Coframe index of `ω^i`.
pub const fn om(i: usize) -> usize {
    3 + i
}

#[derive(Clone, Debug)]
pub struct AdaptedCoframe<T: Real> {
    coframe: Coframe<T>,
    level: u8,
}

impl<T: Real> AdaptedCoframe<T> {
    /// Wraps six forms without checking adaptation; see [`verify_adaptation`].
    pub fn new(theta: [KForm<T>; 3], omega: [KForm<T>; 3], level: u8) -> Result<Self> {
        let mut forms = theta.to_vec();
        forms.extend(omega);
        Ok(AdaptedCoframe { coframe: Coframe::new(forms)?, level })
    }

    pub fn theta(&self) -> &[KForm<T>] {
        &self.coframe.forms()[0..3]
    }

    pub fn omega(&self) -> &[KForm<T>] {
        &self.coframe.forms()[3..6]
    }

    pub fn level(&self) -> u8 {
        self.level
    }

    pub fn order(&self) -> usize {
        self.coframe.order()
    }

    pub fn base_point(&self) -> &[T; DIM] {
        self.coframe.base_point()
    }

    pub fn coframe(&self) -> &Coframe<T> {
        &self.coframe
    }
}

/// Fiber motion of the first-order structure group: `θ ↦ det(A) A^{-T} θ`,
/// `ω ↦ A(Bθ + ω)`.
#[derive(Clone, Debug)]
pub struct GroupElement<T: Real> {
    pub a: [[T; 3]; 3],
    pub b: [[Jet<T>; 3]; 3],
}

impl<T: Real> GroupElement<T> {
    pub fn identity(base: [T; DIM], order: usize) -> Self {
        GroupElement {
            a: std::array::from_fn(|i| std::array::from_fn(|j| if i == j { T::one() } else { T::zero() })),
            b: std::array::from_fn(|_| std::array::from_fn(|_| Jet::zero(base, order))),
        }
    }

    /// Element with `A = I` and a constant `B`.
    pub fn shear(b: [[T; 3]; 3], base: [T; DIM], order: usize) -> Self {
        let mut g = Self::identity(base, order);
        g.b = std::array::from_fn(|i| std::array::from_fn(|j| Jet::constant(b[i][j], base, order)));
        g
    }

    pub fn b_is_skew_at_base(&self, tol: f64) -> bool {
        (0..3).all(|i| (0..3).all(|j| to_f64((self.b[i][j].value() + self.b[j][i].value()).abs()) <= tol))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdaptationReport {
    /// Symmetric part of the torsion at the base point.
    pub p: [[f64; 3]; 3],
    /// Frobenius norm of the skew part of the solved torsion.
    pub p_skew: f64,
    /// Dimension of the solution space of the torsion system.
    pub nullspace_dim: usize,
    pub residuals: BTreeMap<String, f64>,
}

impl AdaptationReport {
    pub fn p_norm(&self) -> f64 {
        self.p.iter().flatten().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.values().copied().fold(0.0, f64::max)
    }
}

/// Unknown layout of the torsion system.
const ALPHA0: usize = 0;
const BETA0: usize = 54;
const P0: usize = 108;
const LEVEL1_UNKNOWNS: usize = 117;

pub(crate) fn alpha_unknown(i: usize, j: usize, b: usize) -> usize {
    ALPHA0 + (i * 3 + j) * DIM + b
}

/// Adds `dθ_i = -α^k_k ∧ θ_i + α^j_i ∧ θ_j + ε_{ijk} ω^j ∧ ω^k` (unknown
/// part only) for all `i`, rows `15 i ..`.
pub(crate) fn add_theta_equations<T: Real>(sys: &mut LinearSystem<T>) {
    for i in 0..3 {
        let row = PAIRS * th(i);
        for b in 0..DIM {
            for k in 0..3 {
                sys.add_wedge(row, alpha_unknown(k, k, b), -1.0, b, th(i));
            }
            for j in 0..3 {
                sys.add_wedge(row, alpha_unknown(j, i, b), 1.0, b, th(j));
            }
        }
    }
}

/// Adds `-α^i_j ∧ ω^j` to the `dω^i` rows.
pub(crate) fn add_omega_alpha_terms<T: Real>(sys: &mut LinearSystem<T>) {
    for i in 0..3 {
        let row = PAIRS * om(i);
        for j in 0..3 {
            for b in 0..DIM {
                sys.add_wedge(row, alpha_unknown(i, j, b), -1.0, b, om(j));
            }
        }
    }
}

/// Structure functions with the fixed `ε_{ijk} ω^j ∧ ω^k` term removed
/// from the `dθ_i` rows.
pub(crate) fn reduced_rhs<T: Real>(cf: &Coframe<T>) -> Result<Vec<Jet<T>>> {
    let s = cf.structure_functions()?;
    let mut rhs: Vec<Jet<T>> = s.into_iter().flatten().collect();
    for i in 0..3 {
        let (p, sign) = crate::frame::wedge_entry(om((i + 1) % 3), om((i + 2) % 3)).unwrap();
        let r = &mut rhs[PAIRS * th(i) + p];
        let two = Jet::constant(lit(2.0 * sign), *r.base_point(), r.order());
        *r = &*r - &two;
    }
    Ok(rhs)
}

fn level1_system<T: Real>() -> LinearSystem<T> {
    let mut sys = LinearSystem::new(DIM * PAIRS, LEVEL1_UNKNOWNS);
    add_theta_equations(&mut sys);
    add_omega_alpha_terms(&mut sys);
    for i in 0..3 {
        let row = PAIRS * om(i);
        for j in 0..3 {
            for c in 0..DIM {
                // -β^{ij} ∧ θ_j with β^{ij} = b^{ij}_c η^c
                sys.add_wedge(row, BETA0 + (i * 3 + j) * DIM + c, -1.0, c, th(j));
            }
        }
        for l in 0..3 {
            // P^{il} ε_{ljk} ω^j ∧ ω^k = 2 P^{il} ω^{l+1} ∧ ω^{l+2}
            sys.add_wedge(row, P0 + i * 3 + l, 2.0, om((l + 1) % 3), om((l + 2) % 3));
        }
    }
    sys
}

/// Torsion of a 1-adapted coframe as jets, with its audit report.
#[derive(Clone, Debug)]
pub struct Torsion<T: Real> {
    /// Symmetric part `P^{(il)}`.
    pub p: [[Jet<T>; 3]; 3],
    pub report: AdaptationReport,
}

pub fn torsion<T: Real>(cf: &AdaptedCoframe<T>) -> Result<Torsion<T>> {
    if cf.level() < 1 {
        return Err(Error::InvalidArgument("torsion needs a 1-adapted coframe".into()));
    }
    if cf.order() < 2 {
        return Err(Error::InsufficientOrder { what: "torsion", needed: 2, available: cf.order() });
    }
    let sys = level1_system::<T>();
    let pinv = sys.pseudo_inverse();
    let rhs = reduced_rhs(cf.coframe())?;
    let u = apply_matrix(&pinv.pinv, &rhs);
    let res = residual(&sys.matrix, &u, &rhs) / scale_of(&rhs);
    // split each equation block's residual for the report
    let mu = apply_matrix(&sys.matrix, &u);
    let block = |forms: std::ops::Range<usize>| {
        forms
            .flat_map(|a| (0..PAIRS).map(move |p| PAIRS * a + p))
            .map(|r| to_f64((&mu[r] - &rhs[r]).max_abs()))
            .fold(0.0, f64::max)
            / scale_of(&rhs)
    };
    let raw = |i: usize, l: usize| &u[P0 + i * 3 + l];
    let p: [[Jet<T>; 3]; 3] = std::array::from_fn(|i| {
        std::array::from_fn(|l| (raw(i, l) + raw(l, i)).scale(lit(0.5)))
    });
    let mut skew = 0.0;
    for i in 0..3 {
        for l in 0..3 {
            skew += to_f64((raw(i, l).value() - raw(l, i).value()) * lit(0.5)).powi(2);
        }
    }
    let mut residuals = BTreeMap::new();
    residuals.insert("theta_equations".to_string(), block(0..3));
    residuals.insert("omega_equations".to_string(), block(3..6));
    residuals.insert("torsion_system".to_string(), res);
    let report = AdaptationReport {
        p: std::array::from_fn(|i| std::array::from_fn(|l| to_f64(p[i][l].value()))),
        p_skew: skew.sqrt(),
        nullspace_dim: pinv.nullspace.ncols(),
        residuals,
    };
    if res > ADAPTATION_TOL {
        return Err(Error::Inconsistent { system: "torsion", residual: res });
    }
    Ok(Torsion { p, report })
}

/// `N_i^m = ½ dθ̃_i(X_{m+1}, X_{m+2})`, so that `dθ̃_i ≡ N_i^m ε_{mjk}
/// ω̃^j ∧ ω̃^k` modulo the `θ̃`.
fn normalizer<T: Real>(d: &Distribution<T>) -> Result<JetMatrix<T>> {
    let x = d.generators();
    let mut n: JetMatrix<T> = Vec::with_capacity(3);
    for theta in d.annihilators() {
        let dt = theta.d()?;
        let row = (0..3)
            .map(|m| Ok(dt.evaluate(&[&x[(m + 1) % 3], &x[(m + 2) % 3]])?.scale(lit(0.5))))
            .collect::<Result<Vec<_>>>()?;
        n.push(row);
    }
    Ok(n)
}

/// A 1-adapted coframe: `θ = N^{-1} θ̃` from the given annihilators and `ω`
/// dual to the generators.
pub fn build_one_adapted<T: Real>(d: &Distribution<T>) -> Result<AdaptedCoframe<T>> {
    if d.order() < 2 {
        return Err(Error::InsufficientOrder { what: "1-adaptation", needed: 2, available: d.order() });
    }
    let (_, dual) = d.frame_and_dual()?;
    let n = normalizer(d)?;
    let ninv = jet_matrix_inverse(&n).map_err(|_| Error::Singular("normalizer of dθ̃ modulo θ̃"))?;
    let tt = d.annihilators();
    let theta: [KForm<T>; 3] = std::array::from_fn(|m| {
        let mut acc = tt[0].mul_jet(&ninv[m][0]).unwrap();
        for i in 1..3 {
            acc = acc.add_scaled(&ninv[m][i], &tt[i]).unwrap();
        }
        acc
    });
    let omega: [KForm<T>; 3] = std::array::from_fn(|k| dual[3 + k].clone());
    let cf = AdaptedCoframe::new(theta, omega, 1)?;
    let res = one_adapted_residual(&cf)?;
    if res > ADAPTATION_TOL {
        return Err(Error::Inconsistent { system: "1-adaptation", residual: res });
    }
    Ok(cf)
}

/// Largest `ω ∧ ω` coefficient of `dθ_i - ε_{ijk} ω^j ∧ ω^k`.
pub fn one_adapted_residual<T: Real>(cf: &AdaptedCoframe<T>) -> Result<f64> {
    let co = cf.coframe();
    let mut worst = 0.0f64;
    for i in 0..3 {
        let c = co.components2(&co.forms()[th(i)].d()?)?;
        for j in 0..3 {
            for k in j + 1..3 {
                let p = crate::combinatorics::pair_index(om(j), om(k));
                let want = 2.0 * eps(i, j, k) as f64;
                let got = &c[p];
                let dev = (to_f64(got.value()) - want).abs().max(to_f64((got - &Jet::constant(lit(want), *got.base_point(), got.order())).max_abs()));
                worst = worst.max(dev);
            }
        }
    }
    Ok(worst)
}

/// Applies `g` to the coframe. The level is kept when it is 1, and kept at
/// 2 only when `B` is skew at the base point.
pub fn apply_group_element<T: Real>(cf: &AdaptedCoframe<T>, g: &GroupElement<T>) -> Result<AdaptedCoframe<T>> {
    let a = nalgebra::Matrix3::from_fn(|i, j| g.a[i][j]);
    let det = a.determinant();
    let ainv = a.try_inverse().ok_or(Error::Singular("group element A"))?;
    let th_ = cf.theta();
    let om_ = cf.omega();
    let theta: [KForm<T>; 3] = std::array::from_fn(|i| {
        // (det A · A^{-T})_{ij} = det · ainv[j][i]
        let mut acc = th_[0].scale(det * ainv[(0, i)]);
        for j in 1..3 {
            acc = &acc + &th_[j].scale(det * ainv[(j, i)]);
        }
        acc
    });
    let shifted: Vec<KForm<T>> = (0..3)
        .map(|j| {
            let mut acc = om_[j].clone();
            for k in 0..3 {
                acc = acc.add_scaled(&g.b[j][k], &th_[k])?;
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let omega: [KForm<T>; 3] = std::array::from_fn(|i| {
        let mut acc = shifted[0].scale(g.a[i][0]);
        for j in 1..3 {
            acc = &acc + &shifted[j].scale(g.a[i][j]);
        }
        acc
    });
    let level = if cf.level() >= 2 && g.b_is_skew_at_base(1e-12) { 2 } else { cf.level().min(1) };
    AdaptedCoframe::new(theta, omega, level)
}

pub fn reduce_to_two_adapted<T: Real>(cf: &AdaptedCoframe<T>, d: &Distribution<T>) -> Result<AdaptedCoframe<T>> {
    reduce_to_two_adapted_with(cf, d, &Conventions::default())
}

/// `ω ↦ ω - κ^{-1} P θ`, then checks that the torsion vanishes.
pub fn reduce_to_two_adapted_with<T: Real>(
    cf: &AdaptedCoframe<T>,
    d: &Distribution<T>,
    conv: &Conventions,
) -> Result<AdaptedCoframe<T>> {
    let t = torsion(cf)?;
    let s = -T::one() / lit::<T>(conv.kappa);
    let b: [[Jet<T>; 3]; 3] = std::array::from_fn(|i| std::array::from_fn(|j| t.p[i][j].scale(s)));
    let base = *cf.base_point();
    let mut g = GroupElement::identity(base, 0);
    g.b = b;
    let out = apply_group_element(cf, &g)?;
    let out = AdaptedCoframe::new(
        std::array::from_fn(|i| out.theta()[i].clone()),
        std::array::from_fn(|i| out.omega()[i].clone()),
        2,
    )?;
    let rep = verify_adaptation(&out, d)?;
    if rep.p_norm() > REDUCTION_TOL {
        return Err(Error::Integrity(format!(
            "torsion {:.3e} survives reduction; the shift constant is miscalibrated",
            rep.p_norm()
        )));
    }
    Ok(out)
}

/// Recomputes annihilation, 1-adaptation and torsion residuals.
pub fn verify_adaptation<T: Real>(cf: &AdaptedCoframe<T>, d: &Distribution<T>) -> Result<AdaptationReport> {
    let mut ann = 0.0f64;
    for t in cf.theta() {
        for x in d.generators() {
            ann = ann.max(to_f64(t.evaluate(&[x])?.max_abs()));
        }
    }
    let one = one_adapted_residual(cf)?;
    let mut rep = match torsion(cf) {
        Ok(t) => t.report,
        Err(Error::Inconsistent { residual, .. }) => {
            let mut r = BTreeMap::new();
            r.insert("torsion_system".to_string(), residual);
            AdaptationReport { p: [[f64::NAN; 3]; 3], p_skew: f64::NAN, nullspace_dim: 0, residuals: r }
        }
        Err(e) => return Err(e),
    };
    rep.residuals.insert("annihilation".to_string(), ann);
    rep.residuals.insert("one_adapted".to_string(), one);
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_model_is_already_adapted() {
        let base = [0.0; 6];
        let d = Distribution::flat_model(base, 4).unwrap();
        let cf = build_one_adapted(&d).unwrap();
        for k in 0..3 {
            assert!((&cf.theta()[k] - &d.annihilators()[k].truncate(cf.order())).max_abs() < 1e-14);
            assert!((&cf.omega()[k] - &KForm::dx(k, base, cf.order())).max_abs() < 1e-14);
        }
        let rep = verify_adaptation(&cf, &d).unwrap();
        assert!(rep.p_norm() < 1e-12);
        assert!(rep.max_residual() < 1e-12);
    }

    #[test]
    fn rescaled_annihilator_is_undone() {
        let base = [0.2, -0.1, 0.3, 0.0, 0.1, 0.0];
        let d = Distribution::flat_model(base, 4).unwrap();
        let mut anns = d.annihilators().clone();
        anns[0] = anns[0].scale(2.0);
        let d2 = Distribution::from_parts(d.generators().clone(), anns).unwrap();
        let cf = build_one_adapted(&d2).unwrap();
        assert!((&cf.theta()[0] - &d.annihilators()[0].truncate(cf.order())).max_abs() < 1e-13);
    }

    #[test]
    fn symmetric_shear_calibrates_kappa() {
        let base = [0.3, 0.1, -0.2, 0.4, 0.0, 0.1];
        let d = Distribution::flat_model(base, 4).unwrap();
        let cf = build_one_adapted(&d).unwrap();
        let b = [[0.3, -0.2, 0.5], [-0.2, 0.1, 0.7], [0.5, 0.7, -0.4]];
        let sheared = apply_group_element(&cf, &GroupElement::shear(b, base, cf.order())).unwrap();
        let rep = verify_adaptation(&sheared, &d).unwrap();
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                num += rep.p[i][j] * b[i][j];
                den += b[i][j] * b[i][j];
            }
        }
        let kappa = num / den;
        assert!((kappa - crate::conventions::KAPPA).abs() < 1e-10, "kappa = {kappa}");
        for i in 0..3 {
            for j in 0..3 {
                assert!((rep.p[i][j] - kappa * b[i][j]).abs() < 1e-10);
            }
        }
        let back = reduce_to_two_adapted(&sheared, &d).unwrap();
        assert!(verify_adaptation(&back, &d).unwrap().p_norm() < 1e-10);
    }

    #[test]
    fn skew_shear_keeps_level_two() {
        let base = [0.0; 6];
        let d = Distribution::flat_model(base, 4).unwrap();
        let cf = reduce_to_two_adapted(&build_one_adapted(&d).unwrap(), &d).unwrap();
        let b = [[0.0, 0.4, -0.1], [-0.4, 0.0, 0.3], [0.1, -0.3, 0.0]];
        let out = apply_group_element(&cf, &GroupElement::shear(b, base, cf.order())).unwrap();
        assert_eq!(out.level(), 2);
        assert!(verify_adaptation(&out, &d).unwrap().p_norm() < 1e-10);
    }

    #[test]
    fn scaling_preserves_one_adaptation() {
        let base = [0.0; 6];
        let d = Distribution::flat_model(base, 4).unwrap();
        let cf = build_one_adapted(&d).unwrap();
        let mut g = GroupElement::identity(base, cf.order());
        g.a = [[2.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 2.0]];
        let out = apply_group_element(&cf, &g).unwrap();
        assert!(one_adapted_residual(&out).unwrap() < 1e-9);
    }

    #[test]
    fn perturbed_reduction() {
        let d = Distribution::perturbed_family(0.1, 1, [0.0; 6], 5).unwrap();
        let cf = build_one_adapted(&d).unwrap();
        let rep = verify_adaptation(&cf, &d).unwrap();
        assert!(rep.max_residual() < 1e-9, "{:?}", rep.residuals);
        assert!(rep.p_skew < 1e-8 * rep.p_norm() + 1e-12);
        let two = reduce_to_two_adapted(&cf, &d).unwrap();
        let rep2 = verify_adaptation(&two, &d).unwrap();
        assert!(rep2.p_norm() < 1e-8);
        assert!(rep2.max_residual() < 1e-8, "{:?}", rep2.residuals);
        // idempotent
        let again = reduce_to_two_adapted(&two, &d).unwrap();
        for k in 0..3 {
            assert!((&again.omega()[k] - &two.omega()[k].truncate(again.order())).max_abs() < 1e-8);
        }
    }

    #[test]
    fn corrupted_coframe_is_detected() {
        let base = [0.0; 6];
        let d = Distribution::flat_model(base, 4).unwrap();
        let cf = build_one_adapted(&d).unwrap();
        let mut theta: [KForm<f64>; 3] = std::array::from_fn(|i| cf.theta()[i].clone());
        theta[0] = &theta[0] + &KForm::dx(0, base, cf.order()).scale(0.1);
        let bad = AdaptedCoframe::new(theta, std::array::from_fn(|i| cf.omega()[i].clone()), 1).unwrap();
        let rep = verify_adaptation(&bad, &d).unwrap();
        assert!(rep.residuals["annihilation"] >= 0.05);
    }
}
