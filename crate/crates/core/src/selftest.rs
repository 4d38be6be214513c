//! Acceptance suite shared by the test harness and the `selftest` command.
//!
//! Every criterion is deterministic: random inputs come from fixed seeds and
//! the report carries no timings, so two runs serialize identically.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::adaptation::{build_one_adapted, reduce_to_two_adapted_with, AdaptedCoframe};
use crate::combinatorics::subsets;
use crate::conformal::{canonical_metric, conformal_invariance_check_with, weyl_tensor_with, CurvatureTensors};
use crate::conventions::Conventions;
use crate::distribution::{random_cubic_diffeo, Distribution};
use crate::error::Result;
use crate::exterior::{JetMap, KForm, VectorField};
use crate::jet::{monomials, Jet, MultiIndex, DIM};
use crate::reduction::{
    build_cartan_matrices, flatness_test, gamma_hat_layout, layout_value, maurer_cartan_defect, max_entry,
    orthogonal_algebra_dim, q7, q8, reduce, reduce_with_connection, Reduction, SYMBOLS,
};
use crate::spin::{
    build_iso, contraction_residual, filtration_split, piece27_mismatch, random_spin_form, spinor_kernel,
    weyl_to_spin_form, SpinorWeyl, CANONICAL_SPINOR,
};

pub const ORDER: usize = 5;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriterionResult {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        format!("criterion {:>2} [{verdict}] {}: {}", self.id, self.name, self.detail)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SelftestReport {
    pub criteria: Vec<CriterionResult>,
}

impl SelftestReport {
    pub fn all_passed(&self) -> bool {
        self.criteria.iter().all(|c| c.passed)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).unwrap()
    }

    pub fn table(&self) -> String {
        self.criteria.iter().map(|c| c.line() + "\n").collect()
    }
}

pub const NAMES: [&str; 10] = [
    "flat model has vanishing S",
    "flat model is conformally flat",
    "diffeomorphism invariance",
    "gauge dimension",
    "symmetry and trace relations",
    "vanishing equivalence",
    "spinor kernel",
    "Lie algebra facts",
    "calculus kernel",
    "determinism",
];

/// Runs criteria 1 to 10 with default conventions.
pub fn run_selftest() -> SelftestReport {
    run_selftest_with(&Conventions::default())
}

pub fn run_selftest_with(conv: &Conventions) -> SelftestReport {
    let first: Vec<CriterionResult> = (1..=9).map(|id| run_criterion(id, conv)).collect();
    let mut criteria = first.clone();
    criteria.push(determinism(&first, conv));
    SelftestReport { criteria }
}

pub fn run_criterion(id: u8, conv: &Conventions) -> CriterionResult {
    let outcome = match id {
        1 => flat_vanishing(conv),
        2 => flat_conformal(conv),
        3 => diffeo_invariance(conv),
        4 => gauge_dimension(conv),
        5 => relations(conv),
        6 => vanishing_equivalence(conv),
        7 => kernel_characterization(conv),
        8 => lie_algebra(conv),
        9 => calculus(conv),
        10 => {
            let first: Vec<CriterionResult> = (1..=9).map(|id| run_criterion(id, conv)).collect();
            return determinism(&first, conv);
        }
        _ => Err(crate::Error::InvalidArgument(format!("no criterion {id}"))),
    };
    let (passed, detail) = match outcome {
        Ok(v) => v,
        Err(e) => (false, format!("error: {e}")),
    };
    CriterionResult { id, name: NAMES[(id - 1) as usize], passed, detail }
}

fn determinism(first: &[CriterionResult], conv: &Conventions) -> CriterionResult {
    let again: Vec<CriterionResult> = (1..=9).map(|id| run_criterion(id, conv)).collect();
    let a = serde_json::to_string(first).unwrap();
    let b = serde_json::to_string(&again).unwrap();
    let passed = a == b;
    CriterionResult {
        id: 10,
        name: NAMES[9],
        passed,
        detail: format!("two runs of criteria 1-9 {} ({} bytes)", if passed { "identical" } else { "differ" }, a.len()),
    }
}

type Outcome = Result<(bool, String)>;

struct Run {
    cf: AdaptedCoframe<f64>,
    red: Reduction<f64>,
    ct: CurvatureTensors,
    sw: SpinorWeyl,
}

fn two_adapted(d: &Distribution<f64>, conv: &Conventions) -> Result<AdaptedCoframe<f64>> {
    reduce_to_two_adapted_with(&build_one_adapted(d)?, d, conv)
}

fn run(d: &Distribution<f64>, conv: &Conventions) -> Result<Run> {
    let cf = two_adapted(d, conv)?;
    let red = reduce(&cf)?;
    let g = canonical_metric(&cf)?;
    let ct = weyl_tensor_with(&g, conv)?;
    let sw = weyl_to_spin_form(&ct, &build_iso(&cf, &g)?)?;
    Ok(Run { cf, red, ct, sw })
}

fn random_points(seed: u64, n: usize, radius: f64) -> Vec<[f64; DIM]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| std::array::from_fn(|_| rng.gen_range(-radius..=radius))).collect()
}

fn perturbed(c: f64, seed: u64, conv: &Conventions) -> Result<Run> {
    run(&Distribution::perturbed_family(c, seed, [0.0; DIM], ORDER)?, conv)
}

fn collect<T: Send>(items: Vec<Result<T>>) -> Result<Vec<T>> {
    items.into_iter().collect()
}

fn s_max(red: &Reduction<f64>) -> f64 {
    let t = &red.tensor;
    t.s4_norm().max(t.s3_norm()).max(t.s2_norm())
}

fn flat_vanishing(conv: &Conventions) -> Outcome {
    let pts = random_points(1, 10, 1.0);
    let vals = collect(
        pts.par_iter()
            .map(|p| Ok(s_max(&reduce(&two_adapted(&Distribution::flat_model(*p, ORDER)?, conv)?)?)))
            .collect(),
    )?;
    let worst = vals.iter().cloned().fold(0.0, f64::max);
    Ok((worst < 1e-8, format!("max |S| over 10 points = {worst:.3e} (< 1e-8)")))
}

fn flat_weyl(d: &Distribution<f64>, conv: &Conventions) -> Result<f64> {
    let g = canonical_metric(&two_adapted(d, conv)?)?;
    Ok(weyl_tensor_with(&g, conv)?.weyl_norm())
}

fn flat_conformal(conv: &Conventions) -> Outcome {
    let pts = random_points(2, 10, 1.0);
    let vals = collect(pts.par_iter().map(|p| flat_weyl(&Distribution::flat_model(*p, ORDER)?, conv)).collect())?;
    let worst = vals.iter().cloned().fold(0.0, f64::max);
    Ok((worst < 1e-8, format!("max |W| / |g| over 10 points = {worst:.3e} (< 1e-8)")))
}

fn diffeo_invariance(conv: &Conventions) -> Outcome {
    let pts = random_points(3, 5, 0.5);
    let vals = collect(
        (0..5u64)
            .into_par_iter()
            .map(|k| {
                let base = pts[k as usize];
                let phi = random_cubic_diffeo(100 + k, 0.3, base, ORDER + 1)?;
                let d = Distribution::flat_model(base, ORDER)?.apply_diffeo(&phi)?;
                let cf = two_adapted(&d, conv)?;
                let s = s_max(&reduce(&cf)?);
                let w = weyl_tensor_with(&canonical_metric(&cf)?, conv)?.weyl_norm();
                Ok((s, w))
            })
            .collect(),
    )?;
    let s = vals.iter().map(|v| v.0).fold(0.0, f64::max);
    let w = vals.iter().map(|v| v.1).fold(0.0, f64::max);
    Ok((s < 1e-7 && w < 1e-7, format!("5 diffeomorphisms: max |S| = {s:.3e}, max |W| = {w:.3e} (< 1e-7)")))
}

fn gauge_dimension(conv: &Conventions) -> Outcome {
    let mut dims = vec![reduce(&two_adapted(&Distribution::flat_model([0.3, -0.2, 0.1, 0.4, 0.0, -0.5], ORDER)?, conv)?)?
        .connection
        .gauge_dim()];
    let more = collect(
        (1..=5u64)
            .into_par_iter()
            .map(|s| {
                let d = Distribution::perturbed_family(0.1, s, [0.0; DIM], ORDER)?;
                Ok(reduce(&two_adapted(&d, conv)?)?.connection.gauge_dim())
            })
            .collect(),
    )?;
    dims.extend(more);
    Ok((dims.iter().all(|d| *d == 3), format!("dimensions {dims:?} (all 3)")))
}

fn relations(conv: &Conventions) -> Outcome {
    let pts = random_points(5, 10, 0.5);
    let vals = collect(
        (0..10usize)
            .into_par_iter()
            .map(|k| {
                let d = Distribution::perturbed_family(0.1, 200 + k as u64, pts[k], ORDER)?;
                let cf = two_adapted(&d, conv)?;
                let red = reduce(&cf)?;
                let rel = red.tensor.relations().values().cloned().fold(0.0, f64::max);
                let mut rng = ChaCha8Rng::seed_from_u64(300 + k as u64);
                let t: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-1.0..=1.0));
                let w: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..=1.0)).collect();
                let shifted = crate::reduction::gauge_shift(&red.connection, t).shift_along_gauge(&w);
                let other = reduce_with_connection(&cf, shifted)?;
                let scale = red.tensor.s4_norm().max(1.0);
                let drift = red
                    .tensor
                    .s4
                    .iter()
                    .zip(&other.tensor.s4)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
                    / scale;
                Ok((rel, drift))
            })
            .collect(),
    )?;
    let rel = vals.iter().map(|v| v.0).fold(0.0, f64::max);
    let drift = vals.iter().map(|v| v.1).fold(0.0, f64::max);
    Ok((
        rel < 1e-8 && drift < 1e-9,
        format!("10 examples: max relation residual = {rel:.3e} (< 1e-8), S4 gauge drift = {drift:.3e} (< 1e-9)"),
    ))
}

fn vanishing_equivalence(conv: &Conventions) -> Outcome {
    let cases: Vec<(f64, u64)> = [0.0, 0.05, 0.1].iter().flat_map(|&c| (1..=3u64).map(move |s| (c, s))).collect();
    let vals = collect(
        cases
            .par_iter()
            .map(|&(c, s)| {
                let r = perturbed(c, s, conv)?;
                let s_flat = flatness_test(&r.red.tensor, 1e-8)?;
                let w = r.ct.weyl_norm();
                Ok((c, s_max(&r.red), w, s_flat == (w < 1e-8)))
            })
            .collect(),
    )?;
    let agree = vals.iter().all(|v| v.3);
    let zero_ok = vals.iter().filter(|v| v.0 == 0.0).all(|v| v.1 < 1e-8 && v.2 < 1e-8);
    let big_ok = vals.iter().filter(|v| v.0 > 0.0).all(|v| v.1 > 1e-5 && v.2 > 1e-5);
    let min_big = vals.iter().filter(|v| v.0 > 0.0).map(|v| v.1.min(v.2)).fold(f64::INFINITY, f64::min);
    let max_zero = vals.iter().filter(|v| v.0 == 0.0).map(|v| v.1.max(v.2)).fold(0.0, f64::max);
    let mismatch = collect(
        (101..=105u64)
            .into_par_iter()
            .map(|s| {
                let r = perturbed(0.1, s, conv)?;
                Ok(piece27_mismatch(&filtration_split(&r.sw)?, &r.red.tensor))
            })
            .collect(),
    )?;
    let mm = mismatch.iter().cloned().fold(0.0, f64::max);
    Ok((
        agree && zero_ok && big_ok && mm < 1e-6,
        format!(
            "verdicts agree: {agree}; c = 0 norms <= {max_zero:.3e}; c > 0 norms >= {min_big:.3e}; \
             piece27 vs S4 on 5 fresh seeds: {mm:.3e} (< 1e-6)"
        ),
    ))
}

fn kernel_characterization(conv: &Conventions) -> Outcome {
    let mut inputs: Vec<(f64, u64, [f64; DIM])> = vec![(0.0, 0, [0.0; DIM])];
    for (k, p) in random_points(7, 6, 0.5).into_iter().enumerate() {
        inputs.push((if k < 3 { 0.05 } else { 0.1 }, 400 + k as u64, p));
    }
    let vals = collect(
        inputs
            .par_iter()
            .map(|&(c, s, p)| {
                let r = run(&Distribution::perturbed_family(c, s, p, ORDER)?, conv)?;
                let _ = &r.cf;
                Ok((spinor_kernel(&r.sw).dimension, contraction_residual(&r.sw, &CANONICAL_SPINOR)))
            })
            .collect(),
    )?;
    let min_dim = vals.iter().map(|v| v.0).min().unwrap();
    let res = vals.iter().map(|v| v.1).fold(0.0, f64::max);
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let random_dims: Vec<usize> = (0..10).map(|_| spinor_kernel(&random_spin_form(&mut rng)).dimension).collect();
    let ok = min_dim >= 1 && res < 1e-7 && random_dims.iter().all(|d| *d == 0);
    Ok((
        ok,
        format!(
            "{} induced tensors: min kernel dim = {min_dim}, canonical residual = {res:.3e} (< 1e-7); \
             random kernel dims {random_dims:?}",
            vals.len()
        ),
    ))
}

fn lie_algebra(conv: &Conventions) -> Outcome {
    let dim = orthogonal_algebra_dim(&q7());
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (q, layout) = (q8(), gamma_hat_layout());
    let mut member = 0.0f64;
    for _ in 0..20 {
        let v: Vec<f64> = (0..SYMBOLS).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let a = layout_value(&layout, &v);
        member = member.max((&q * &a + a.transpose() * &q).amax());
    }
    let pts = random_points(9, 3, 1.0);
    let mc = collect(
        pts.par_iter()
            .map(|p| {
                let cf = two_adapted(&Distribution::flat_model(*p, ORDER)?, conv)?;
                let red = reduce(&cf)?;
                let cm = build_cartan_matrices(&cf, &red)?;
                Ok(max_entry(&maurer_cartan_defect(&cm.gamma, &cf)?))
            })
            .collect(),
    )?;
    let mc = mc.iter().cloned().fold(0.0, f64::max);
    Ok((
        dim == 21 && member < 1e-14 && mc < 1e-9,
        format!("dim so(Q7) = {dim}; Q8 membership defect = {member:.1e}; flat |dγ + γ∧γ| = {mc:.3e} (< 1e-9)"),
    ))
}

fn random_jet(rng: &mut ChaCha8Rng, base: [f64; DIM], order: usize) -> Jet<f64> {
    let terms: Vec<(MultiIndex, f64)> = monomials(order).iter().map(|m| (*m, rng.gen_range(-1.0..=1.0))).collect();
    let mut j = Jet::zero(base, order);
    for (m, c) in terms {
        j.set_coeff(&m, c);
    }
    j
}

fn random_field(rng: &mut ChaCha8Rng, base: [f64; DIM], order: usize) -> VectorField<f64> {
    VectorField::from_components((0..DIM).map(|_| random_jet(rng, base, order)).collect()).unwrap()
}

fn calculus(conv: &Conventions) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let base = [0.1, -0.2, 0.3, 0.0, 0.4, -0.1];
    let mut dd = 0.0f64;
    for k in 0..100 {
        let degree = k % 5;
        let n = subsets().count(degree);
        let f = KForm::from_coeffs(degree, (0..n).map(|_| random_jet(&mut rng, base, 4)).collect())?;
        dd = dd.max(f.d()?.d()?.max_abs() / f.max_abs());
    }
    let mut jac = 0.0f64;
    for _ in 0..5 {
        let (x, y, z) = (random_field(&mut rng, base, 4), random_field(&mut rng, base, 4), random_field(&mut rng, base, 4));
        let t = x.bracket(&y.bracket(&z)?)?.try_add(&y.bracket(&z.bracket(&x)?)?)?.try_add(&z.bracket(&x.bracket(&y)?)?)?;
        let scale = x.max_abs() * y.max_abs() * z.max_abs();
        jac = jac.max(t.max_abs() / scale);
    }
    let mut inv = 0.0f64;
    for s in 0..5u64 {
        let phi = random_cubic_diffeo(500 + s, 0.3, base, 6)?;
        let psi = phi.invert()?;
        let id = JetMap::identity(phi.image(), 6);
        let round = psi.compose(&phi)?;
        let back = phi.compose(&psi)?;
        let id0 = JetMap::identity(base, 6);
        let err = round
            .comps()
            .iter()
            .zip(id0.comps())
            .chain(back.comps().iter().zip(id.comps()))
            .map(|(a, b)| (a - b).max_abs())
            .fold(0.0, f64::max);
        inv = inv.max(err);
    }
    let d = Distribution::perturbed_family(0.1, 1, [0.0; DIM], ORDER)?;
    let g = canonical_metric(&two_adapted(&d, conv)?)?;
    let mut conf = 0.0f64;
    for _ in 0..5 {
        let mut f = Jet::zero([0.0; DIM], g.order());
        for m in monomials(2) {
            f.set_coeff(m, rng.gen_range(-0.5..=0.5));
        }
        conf = conf.max(conformal_invariance_check_with(&g, &f, conv)?);
    }
    Ok((
        dd < 1e-12 && jac < 1e-12 && inv < 1e-10 && conf < 1e-8,
        format!(
            "d∘d = {dd:.1e} (< 1e-12); Jacobi = {jac:.1e} (< 1e-12); inversion = {inv:.1e} (< 1e-10); \
             Weyl conformal invariance = {conf:.1e} (< 1e-8)"
        ),
    ))
}
