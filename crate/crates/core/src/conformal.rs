//! The split-signature conformal structure `[θ_i ∘ ω^i]` and the curvature
//! of its representative metric.

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::adaptation::{build_one_adapted, om, reduce_to_two_adapted, AdaptedCoframe};
use crate::combinatorics::subsets;
use crate::conventions::Conventions;
use crate::distribution::Distribution;
use crate::error::{Error, Result};
use crate::jet::{Jet, DIM};
use crate::linalg::{jet_matrix_inverse, JetMatrix};
use crate::reduction::reduce;
use crate::scalar::{lit, to_f64, Real};

/// Bound on identities of the curvature tensors, relative to their scale.
pub const CURVATURE_TOL: f64 = 1e-8;

const N4: usize = DIM * DIM * DIM * DIM;

pub fn idx4(a: usize, b: usize, c: usize, d: usize) -> usize {
    ((a * DIM + b) * DIM + c) * DIM + d
}

#[derive(Clone, Debug)]
pub struct MetricJet<T: Real> {
    pub g: JetMatrix<T>,
    /// Counts of positive and negative eigenvalues at the base point.
    pub signature: (usize, usize),
}

impl<T: Real> MetricJet<T> {
    pub fn new(g: JetMatrix<T>) -> Result<Self> {
        if g.len() != DIM || g.iter().any(|r| r.len() != DIM) {
            return Err(Error::InvalidArgument("a metric is a 6x6 matrix of jets".into()));
        }
        let v = DMatrix::from_fn(DIM, DIM, |a, b| to_f64(g[a][b].value()));
        let mut asym = 0.0f64;
        for a in 0..DIM {
            for b in 0..DIM {
                asym = asym.max(to_f64((&g[a][b] - &g[b][a]).max_abs()));
            }
        }
        if asym > 1e-12 * v.amax().max(1.0) {
            return Err(Error::InvalidArgument("metric is not symmetric".into()));
        }
        let eig = v.symmetric_eigen().eigenvalues;
        let top = eig.amax();
        if eig.iter().any(|e| e.abs() <= 1e-12 * top) {
            return Err(Error::Singular("metric"));
        }
        let pos = eig.iter().filter(|e| **e > 0.0).count();
        Ok(MetricJet { g, signature: (pos, DIM - pos) })
    }

    pub fn order(&self) -> usize {
        self.g[0][0].order()
    }

    pub fn values(&self) -> DMatrix<f64> {
        DMatrix::from_fn(DIM, DIM, |a, b| to_f64(self.g[a][b].value()))
    }

    /// `e^{2f} g`.
    pub fn rescaled(&self, f: &Jet<T>) -> Result<Self> {
        let w = f.scale(lit(2.0)).exp();
        let g = self
            .g
            .iter()
            .map(|row| row.iter().map(|x| x.try_mul(&w)).collect::<Result<Vec<_>>>())
            .collect::<Result<_>>()?;
        MetricJet::new(g)
    }
}

/// `g = ½ Σ (θ_i ⊗ ω^i + ω^i ⊗ θ_i)` in chart components.
pub fn canonical_metric<T: Real>(cf: &AdaptedCoframe<T>) -> Result<MetricJet<T>> {
    if cf.level() < 2 {
        return Err(Error::InvalidArgument("the canonical metric needs a 2-adapted coframe".into()));
    }
    if cf.order() < 2 {
        return Err(Error::InsufficientOrder { what: "canonical metric", needed: 2, available: cf.order() });
    }
    let (th, omg) = (cf.theta(), cf.omega());
    let half = lit::<T>(0.5);
    let mut g = vec![vec![Jet::zero(*cf.base_point(), cf.order()); DIM]; DIM];
    for a in 0..DIM {
        for b in a..DIM {
            let mut acc = Jet::zero(*cf.base_point(), cf.order());
            for i in 0..3 {
                acc += &th[i].coeff(a).try_mul(omg[i].coeff(b))?;
                acc += &th[i].coeff(b).try_mul(omg[i].coeff(a))?;
            }
            g[a][b] = acc.scale(half);
            g[b][a] = g[a][b].clone();
        }
    }
    let m = MetricJet::new(g)?;
    if m.signature != (3, 3) {
        return Err(Error::Integrity(format!("canonical metric has signature {:?}", m.signature)));
    }
    Ok(m)
}

/// `(θ_i ∘ ω^i) ⊗ (X_1 ∧ X_2 ∧ X_3)`, invariant under the structure group.
#[derive(Clone, Debug)]
pub struct WeightedForm<T: Real> {
    pub metric: MetricJet<T>,
    /// Components of `X_1 ∧ X_2 ∧ X_3` at the base point, indexed by the
    /// lexicographic 3-subsets of the coordinates.
    pub trivector: Vec<f64>,
}

impl<T: Real> WeightedForm<T> {
    /// Components `g_{ab} T^{cde}` at the base point.
    pub fn tensor(&self) -> Vec<f64> {
        let g = self.metric.values();
        let mut out = Vec::with_capacity(DIM * DIM * self.trivector.len());
        for a in 0..DIM {
            for b in 0..DIM {
                out.extend(self.trivector.iter().map(|t| g[(a, b)] * t));
            }
        }
        out
    }
}

pub fn weighted_form<T: Real>(cf: &AdaptedCoframe<T>) -> Result<WeightedForm<T>> {
    let metric = canonical_metric(cf)?;
    let frame = cf.coframe().frame();
    let x: Vec<[T; DIM]> = (0..3).map(|i| frame[om(i)].values()).collect();
    let trivector = subsets()
        .list(3)
        .iter()
        .map(|s| {
            let m = nalgebra::Matrix3::from_fn(|r, c| to_f64(x[c][s[r]]));
            m.determinant()
        })
        .collect();
    Ok(WeightedForm { metric, trivector })
}

/// Curvature of a metric at the base point, all indices down.
#[derive(Clone, Debug)]
pub struct CurvatureTensors {
    pub metric: DMatrix<f64>,
    pub inverse: DMatrix<f64>,
    /// `R_{abcd}` at `idx4(a, b, c, d)`.
    pub riemann: Vec<f64>,
    pub ricci: DMatrix<f64>,
    pub scalar: f64,
    pub schouten: DMatrix<f64>,
    /// `W_{abcd}` at `idx4(a, b, c, d)`.
    pub weyl: Vec<f64>,
    pub residuals: BTreeMap<&'static str, f64>,
}

impl CurvatureTensors {
    /// `W^a_{bcd}`.
    pub fn mixed_weyl(&self) -> Vec<f64> {
        raise_first(&self.inverse, &self.weyl)
    }

    pub fn mixed_riemann(&self) -> Vec<f64> {
        raise_first(&self.inverse, &self.riemann)
    }

    pub fn metric_scale(&self) -> f64 {
        self.metric.amax()
    }

    /// Largest Weyl component divided by the metric scale.
    pub fn weyl_norm(&self) -> f64 {
        max_abs(&self.weyl) / self.metric_scale()
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.values().cloned().fold(0.0, f64::max)
    }
}

fn raise_first(inv: &DMatrix<f64>, t: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; N4];
    for a in 0..DIM {
        for b in 0..DIM {
            for c in 0..DIM {
                for d in 0..DIM {
                    out[idx4(a, b, c, d)] = (0..DIM).map(|e| inv[(a, e)] * t[idx4(e, b, c, d)]).sum();
                }
            }
        }
    }
    out
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

/// `(P ⊙ g)_{abcd} = P_{ac} g_{bd} + P_{bd} g_{ac} - P_{ad} g_{bc} - P_{bc} g_{ad}`.
pub fn kulkarni_nomizu(p: &DMatrix<f64>, g: &DMatrix<f64>) -> Vec<f64> {
    let mut out = vec![0.0; N4];
    for a in 0..DIM {
        for b in 0..DIM {
            for c in 0..DIM {
                for d in 0..DIM {
                    out[idx4(a, b, c, d)] =
                        p[(a, c)] * g[(b, d)] + p[(b, d)] * g[(a, c)] - p[(a, d)] * g[(b, c)] - p[(b, c)] * g[(a, d)];
                }
            }
        }
    }
    out
}

pub fn weyl_tensor<T: Real>(g: &MetricJet<T>) -> Result<CurvatureTensors> {
    let ct = weyl_tensor_with(g, &Conventions::default())?;
    let worst = ct.max_residual();
    if worst > CURVATURE_TOL {
        let name = ct.residuals.iter().max_by(|a, b| a.1.total_cmp(b.1)).map(|(k, _)| *k).unwrap();
        return Err(Error::Integrity(format!("curvature identity `{name}` fails by {worst:.3e}")));
    }
    Ok(ct)
}

/// Curvature with the given conventions; identity residuals are recorded,
/// not enforced.
pub fn weyl_tensor_with<T: Real>(g: &MetricJet<T>, conv: &Conventions) -> Result<CurvatureTensors> {
    if g.order() < 2 {
        return Err(Error::InsufficientOrder { what: "Weyl tensor", needed: 2, available: g.order() });
    }
    let gj: JetMatrix<T> = g.g.iter().map(|r| r.iter().map(|x| x.truncate(2)).collect()).collect();
    let ginv = jet_matrix_inverse(&gj).map_err(|_| Error::Singular("metric"))?;
    // dg[a][b][c] = ∂_c g_ab
    let dg: Vec<Vec<Vec<Jet<T>>>> = gj
        .iter()
        .map(|row| row.iter().map(|x| x.gradient()).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let base = *gj[0][0].base_point();
    let half = lit::<T>(0.5);
    // Γ^a_{bc} = ½ g^{ad} (∂_b g_{dc} + ∂_c g_{db} - ∂_d g_{bc})
    let mut gamma = vec![vec![vec![Jet::zero(base, 1); DIM]; DIM]; DIM];
    for b in 0..DIM {
        for c in b..DIM {
            let lower: Vec<Jet<T>> =
                (0..DIM).map(|d| &(&dg[d][c][b] + &dg[d][b][c]) - &dg[b][c][d]).collect();
            for a in 0..DIM {
                let mut acc = Jet::zero(base, 1);
                for d in 0..DIM {
                    acc += &ginv[a][d].truncate(1).try_mul(&lower[d])?;
                }
                gamma[a][b][c] = acc.scale(half);
                gamma[a][c][b] = gamma[a][b][c].clone();
            }
        }
    }
    let gv = DMatrix::from_fn(DIM, DIM, |a, b| to_f64(gj[a][b].value()));
    let inv = DMatrix::from_fn(DIM, DIM, |a, b| to_f64(ginv[a][b].value()));
    let gval = |a: usize, b: usize, c: usize| to_f64(gamma[a][b][c].value());
    let dgam: Vec<Vec<Vec<Vec<f64>>>> = gamma
        .iter()
        .map(|p| {
            p.iter()
                .map(|q| {
                    q.iter()
                        .map(|x| (0..DIM).map(|e| to_f64(x.partial(e).unwrap().value())).collect())
                        .collect()
                })
                .collect()
        })
        .collect();
    // R^a_{bcd} = ∂_c Γ^a_{db} - ∂_d Γ^a_{cb} + Γ^a_{ce} Γ^e_{db} - Γ^a_{de} Γ^e_{cb}
    let mut up = vec![0.0; N4];
    for a in 0..DIM {
        for b in 0..DIM {
            for c in 0..DIM {
                for d in 0..DIM {
                    let mut r = dgam[a][d][b][c] - dgam[a][c][b][d];
                    for e in 0..DIM {
                        r += gval(a, c, e) * gval(e, d, b) - gval(a, d, e) * gval(e, c, b);
                    }
                    up[idx4(a, b, c, d)] = r;
                }
            }
        }
    }
    let riemann = raise_first(&gv, &up);
    let ricci = DMatrix::from_fn(DIM, DIM, |b, d| (0..DIM).map(|a| up[idx4(a, b, a, d)]).sum());
    let scalar = (inv.component_mul(&ricci)).sum();
    let n = DIM as f64;
    let schouten = (&ricci - &gv * (scalar / conv.schouten_trace_denominator)) / (n - 2.0);
    let kn = kulkarni_nomizu(&schouten, &gv);
    let weyl: Vec<f64> = riemann.iter().zip(&kn).map(|(r, k)| r - k).collect();

    let scale = max_abs(&riemann).max(gv.amax());
    let mut sym = 0.0f64;
    let mut bianchi = 0.0f64;
    let mut trace = 0.0f64;
    let mut ricci_rec = 0.0f64;
    for a in 0..DIM {
        for b in 0..DIM {
            for c in 0..DIM {
                for d in 0..DIM {
                    let r = riemann[idx4(a, b, c, d)];
                    sym = sym
                        .max((r + riemann[idx4(b, a, c, d)]).abs())
                        .max((r + riemann[idx4(a, b, d, c)]).abs())
                        .max((r - riemann[idx4(c, d, a, b)]).abs());
                    bianchi = bianchi.max((r + riemann[idx4(a, c, d, b)] + riemann[idx4(a, d, b, c)]).abs());
                }
            }
        }
    }
    for x in 0..DIM {
        for y in 0..DIM {
            let mut t = [0.0f64; 4];
            let mut rec = 0.0;
            for a in 0..DIM {
                for c in 0..DIM {
                    let h = inv[(a, c)];
                    t[0] += h * weyl[idx4(a, x, c, y)];
                    t[1] += h * weyl[idx4(a, x, y, c)];
                    t[2] += h * weyl[idx4(x, a, c, y)];
                    t[3] += h * weyl[idx4(x, a, y, c)];
                    rec += h * kn[idx4(a, x, c, y)];
                }
            }
            trace = t.iter().fold(trace, |m, v| m.max(v.abs()));
            ricci_rec = ricci_rec.max((rec - ricci[(x, y)]).abs());
        }
    }
    let mut residuals = BTreeMap::new();
    residuals.insert("riemann_symmetry", sym / scale);
    residuals.insert("first_bianchi", bianchi / scale);
    residuals.insert("weyl_trace", trace / scale);
    residuals.insert("ricci_reconstruction", ricci_rec / scale);
    Ok(CurvatureTensors { metric: gv, inverse: inv, riemann, ricci, scalar, schouten, weyl, residuals })
}

/// Largest difference between the mixed Weyl tensors of `g` and `e^{2f} g`,
/// relative to the curvature scale of `g`.
pub fn conformal_invariance_check<T: Real>(g: &MetricJet<T>, f: &Jet<T>) -> Result<f64> {
    conformal_invariance_check_with(g, f, &Conventions::default())
}

pub fn conformal_invariance_check_with<T: Real>(g: &MetricJet<T>, f: &Jet<T>, conv: &Conventions) -> Result<f64> {
    if f.order() < 2 {
        return Err(Error::InsufficientOrder { what: "conformal factor", needed: 2, available: f.order() });
    }
    let a = weyl_tensor_with(g, conv)?;
    let b = weyl_tensor_with(&g.rescaled(f)?, conv)?;
    let (wa, wb) = (a.mixed_weyl(), b.mixed_weyl());
    let scale = max_abs(&a.mixed_riemann()).max(max_abs(&wa)).max(f64::MIN_POSITIVE);
    Ok(wa.iter().zip(&wb).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / scale)
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlatnessComparison {
    /// `‖S4‖ + ‖S3‖ + ‖S2‖`.
    pub s_norm: f64,
    pub weyl_norm: f64,
    pub s_flat: bool,
    pub weyl_flat: bool,
}

impl FlatnessComparison {
    pub fn agree(&self) -> bool {
        self.s_flat == self.weyl_flat
    }
}

/// Runs the reduction and the conformal pipeline on `d` and compares their
/// flatness verdicts.
pub fn weyl_flatness_equivalence<T: Real>(d: &Distribution<T>, tol: f64) -> Result<FlatnessComparison> {
    if d.order() < 5 {
        return Err(Error::InsufficientOrder { what: "flatness comparison", needed: 5, available: d.order() });
    }
    let cf = reduce_to_two_adapted(&build_one_adapted(d)?, d)?;
    let red = reduce(&cf)?;
    let ct = weyl_tensor(&canonical_metric(&cf)?)?;
    let t = &red.tensor;
    let s_norm = t.s4_norm() + t.s3_norm() + t.s2_norm();
    let cmp = FlatnessComparison {
        s_norm,
        weyl_norm: ct.weyl_norm(),
        s_flat: crate::reduction::flatness_test(t, tol)?,
        weyl_flat: ct.weyl_norm() < tol,
    };
    if !cmp.agree() {
        return Err(Error::Integrity(format!(
            "flatness verdicts disagree: |S| = {:.3e}, |W| = {:.3e}",
            cmp.s_norm, cmp.weyl_norm
        )));
    }
    Ok(cmp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adaptation::{apply_group_element, GroupElement};
    use crate::jet::MultiIndex;

    fn two_adapted(d: &Distribution<f64>) -> AdaptedCoframe<f64> {
        reduce_to_two_adapted(&build_one_adapted(d).unwrap(), d).unwrap()
    }

    fn quadratic(coeffs: &[(usize, usize, f64)], base: [f64; 6], order: usize) -> Jet<f64> {
        let terms: Vec<(MultiIndex, f64)> = coeffs
            .iter()
            .map(|&(a, b, c)| {
                let mut e = [0u8; 6];
                e[a] += 1;
                e[b] += 1;
                (MultiIndex(e), c)
            })
            .collect();
        Jet::from_polynomial(&terms, base, order).unwrap()
    }

    #[test]
    fn flat_model_metric_at_origin() {
        let d = Distribution::flat_model([0.0; 6], 5).unwrap();
        let g = canonical_metric(&two_adapted(&d)).unwrap();
        let v = g.values();
        for a in 0..6 {
            for b in 0..6 {
                let want = if (a as i32 - b as i32).abs() == 3 { 0.5 } else { 0.0 };
                assert!((v[(a, b)] - want).abs() < 1e-12, "{a}{b}: {}", v[(a, b)]);
            }
        }
        let mut eig: Vec<f64> = v.symmetric_eigen().eigenvalues.iter().cloned().collect();
        eig.sort_by(f64::total_cmp);
        for (e, w) in eig.iter().zip([-0.5, -0.5, -0.5, 0.5, 0.5, 0.5]) {
            assert!((e - w).abs() < 1e-12);
        }
    }

    #[test]
    fn round_sphere_has_positive_curvature() {
        // 4 / (1 + |x|²)² δ, the unit 6-sphere in stereographic coordinates
        let base = [0.1, 0.0, -0.2, 0.3, 0.0, 0.1];
        let s = &Jet::constant(1.0, base, 4) + &r2_at(base);
        let w = s.try_mul(&s).unwrap().reciprocal().unwrap().scale(4.0);
        let g: JetMatrix<f64> =
            (0..6).map(|a| (0..6).map(|b| if a == b { w.clone() } else { Jet::zero(base, 4) }).collect()).collect();
        let ct = weyl_tensor(&MetricJet::new(g).unwrap()).unwrap();
        assert!(ct.riemann[idx4(0, 1, 0, 1)] > 0.0);
        assert!(ct.weyl_norm() < 1e-10);
        let ric = &ct.ricci - &ct.metric * 5.0;
        assert!(ric.amax() < 1e-10);
    }

    fn r2_at(base: [f64; 6]) -> Jet<f64> {
        let mut acc = Jet::zero(base, 4);
        for a in 0..6 {
            let x = Jet::coordinate(a, base, 4);
            acc += &x.try_mul(&x).unwrap();
        }
        acc
    }

    #[test]
    fn constant_metric_is_flat() {
        let base = [0.0; 6];
        let g: JetMatrix<f64> = (0..6)
            .map(|a| (0..6).map(|b| Jet::constant(if (a + 3) % 6 == b { 0.5 } else { 0.0 }, base, 3)).collect())
            .collect();
        let ct = weyl_tensor(&MetricJet::new(g).unwrap()).unwrap();
        assert_eq!(max_abs(&ct.riemann), 0.0);
    }

    #[test]
    fn flat_model_is_conformally_flat() {
        let d = Distribution::flat_model([0.4, -0.3, 0.2, 0.7, -0.1, 0.5], 5).unwrap();
        let g = canonical_metric(&two_adapted(&d)).unwrap();
        assert_eq!(g.signature, (3, 3));
        let ct = weyl_tensor(&g).unwrap();
        assert!(ct.weyl_norm() < 1e-8, "{}", ct.weyl_norm());
    }

    #[test]
    fn perturbed_weyl_and_invariance() {
        let base = [0.0; 6];
        let d = Distribution::perturbed_family(0.1, 1, base, 5).unwrap();
        let g = canonical_metric(&two_adapted(&d)).unwrap();
        let ct = weyl_tensor(&g).unwrap();
        assert!(ct.weyl_norm() > 1e-4);
        let zero = Jet::zero(base, 3);
        assert_eq!(conformal_invariance_check(&g, &zero).unwrap(), 0.0);
        assert!(conformal_invariance_check(&g, &Jet::constant(0.7, base, 3)).unwrap() < 1e-10);
        let f = quadratic(&[(0, 1, 0.3), (2, 5, -0.4), (3, 3, 0.2), (4, 1, 0.1)], base, 3);
        let f = &f + &Jet::coordinate(2, base, 3).scale(0.5);
        assert!(conformal_invariance_check(&g, &f).unwrap() < 1e-8);
        let wrong = Conventions { schouten_trace_denominator: 12.0, ..Conventions::default() };
        assert!(conformal_invariance_check_with(&g, &f, &wrong).unwrap() > 1e-6);
    }

    #[test]
    fn rescaled_coframe_keeps_conformal_class_and_weighted_form() {
        let base = [0.1, 0.2, -0.1, 0.0, 0.3, -0.2];
        let d = Distribution::perturbed_family(0.05, 3, base, 5).unwrap();
        let cf = two_adapted(&d);
        let mut ge = GroupElement::identity(base, cf.order());
        ge.a = [[1.5, 0.0, 0.0], [0.0, 1.5, 0.0], [0.0, 0.0, 1.5]];
        let cf2 = apply_group_element(&cf, &ge).unwrap();
        let (g1, g2) = (canonical_metric(&cf).unwrap(), canonical_metric(&cf2).unwrap());
        let (v1, v2) = (g1.values(), g2.values());
        for a in 0..6 {
            for b in 0..6 {
                assert!((v2[(a, b)] - 1.5f64.powi(3) * v1[(a, b)]).abs() < 1e-10);
            }
        }
        let (w1, w2) = (weyl_tensor(&g1).unwrap(), weyl_tensor(&g2).unwrap());
        for (x, y) in w1.mixed_weyl().iter().zip(w2.mixed_weyl()) {
            assert!((x - y).abs() < 1e-8);
        }
        let (h1, h2) = (weighted_form(&cf).unwrap(), weighted_form(&cf2).unwrap());
        for (x, y) in h1.tensor().iter().zip(h2.tensor()) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn flat_weighted_trivector() {
        let base = [0.0; 6];
        let d = Distribution::flat_model(base, 5).unwrap();
        let wf = weighted_form(&two_adapted(&d)).unwrap();
        let gens: Vec<[f64; 6]> = d.generators().iter().map(|x| x.values()).collect();
        for (s, t) in subsets().list(3).iter().zip(&wf.trivector) {
            let m = nalgebra::Matrix3::from_fn(|r, c| gens[c][s[r]]);
            assert!((m.determinant() - t).abs() < 1e-12);
        }
    }

    #[test]
    fn flatness_verdicts_agree() {
        let d = Distribution::flat_model([0.2; 6], 5).unwrap();
        let c = weyl_flatness_equivalence(&d, 1e-8).unwrap();
        assert!(c.s_flat && c.weyl_flat);
        let d = Distribution::perturbed_family(0.1, 1, [0.0; 6], 5).unwrap();
        let c = weyl_flatness_equivalence(&d, 1e-8).unwrap();
        assert!(!c.s_flat && !c.weyl_flat);
    }
}
