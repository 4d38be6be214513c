//! The Weyl tensor in the spinor picture `so(3,3) ≅ sl(4, R)`.
//!
//! `V = R⁴` has basis `f_0 = e, f_1, f_2, f_3` and volume `f_0 ∧ f_1 ∧ f_2 ∧ f_3 = 1`.
//! `Λ²V` is identified with the tangent space through
//! `f_0 ∧ f_i ↦ X_i` and `f_{i+1} ∧ f_{i+2} ↦ 2 Z_i`, where `Z_i, X_i` is the
//! frame dual to `θ_i, ω^i`. The plane `D = span(X_i)` is then `e ∧ V`.
//! Tensors in `V ⊗ V ⊗ V* ⊗ V*` are stored at `idx4v(a, c, b, d)` for the
//! component `T^{ac}_{bd}`.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};

use crate::adaptation::{om, th, AdaptedCoframe};
use crate::combinatorics::subsets;
use crate::conformal::{idx4, CurvatureTensors, MetricJet};
use crate::error::{Error, Result};
use crate::jet::DIM;
use crate::linalg::pseudo_inverse;
use crate::reduction::{s4_index, FundamentalTensor};
use crate::scalar::{to_f64, Real};

/// Tolerance for the structural identities of the identification.
pub const ISO_TOL: f64 = 1e-10;
/// Relative singular-value threshold of the contraction kernel.
pub const KERNEL_RTOL: f64 = 1e-8;
/// Absolute floor below which the contraction counts as zero.
pub const KERNEL_ATOL: f64 = 1e-10;
/// Symmetry and trace audit bound for transported Weyl tensors.
pub const PROJECTION_TOL: f64 = 1e-8;

/// `piece27 = PIECE27_SCALE · S^{ik}_{jl}` componentwise, calibrated once on
/// `perturbed_family(0.1, 1)` and checked on other seeds by the self-test.
pub const PIECE27_SCALE: f64 = 2.0;

const NV: usize = 4;
const NT: usize = NV * NV * NV * NV;

pub fn idx4v(a: usize, c: usize, b: usize, d: usize) -> usize {
    ((a * NV + c) * NV + b) * NV + d
}

/// Pairs `A < B` of `0..4` in lexicographic order, a basis of `Λ²V`.
const V_PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

fn v_pair(a: usize, b: usize) -> Option<(usize, f64)> {
    if a == b {
        return None;
    }
    let (lo, hi, s) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    V_PAIRS.iter().position(|&p| p == (lo, hi)).map(|i| (i, s))
}

#[derive(Clone, Debug)]
pub struct SpinIso {
    /// Columns are the frame components of the images of `f_A ∧ f_B`.
    pub plucker: DMatrix<f64>,
    /// Frame components of `g` at the base point.
    pub metric: DMatrix<f64>,
    /// `(f_A ∧ f_B) ∧ (f_C ∧ f_D) = q · vol` against `g` under `plucker`.
    pub quadratic_form_check: f64,
    /// Homomorphism and `g`-skewness defect of `sl(4) → so(T)`.
    pub bracket_check: f64,
    /// Bivector coordinates (pairs `a < b` of the frame) of the image of the
    /// traceless part of each matrix unit `E_{pq}`, one column at `p*4 + q`.
    coords: DMatrix<f64>,
    /// `frame[b]` is the chart vector of `E_b`.
    frame: DMatrix<f64>,
}

/// Wedge pairing on `Λ²V`: `α ∧ β = q(α, β) f_0 ∧ f_1 ∧ f_2 ∧ f_3`.
pub fn wedge_pairing() -> DMatrix<f64> {
    DMatrix::from_fn(6, 6, |r, s| {
        let (a, b) = V_PAIRS[r];
        let (c, d) = V_PAIRS[s];
        let idx = [a, b, c, d];
        let mut seen = [false; 4];
        for i in idx {
            if seen[i] {
                return 0.0;
            }
            seen[i] = true;
        }
        crate::combinatorics::sort_sign(&idx) as f64
    })
}

fn matrix_unit(p: usize, q: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(NV, NV);
    m[(p, q)] = 1.0;
    m
}

/// Action of `M ∈ gl(V)` on `Λ²V` in the pair basis.
fn lambda2(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(6, 6);
    for (s, &(a, b)) in V_PAIRS.iter().enumerate() {
        // M f_a ∧ f_b + f_a ∧ M f_b
        for x in 0..NV {
            if let Some((r, sg)) = v_pair(x, b) {
                out[(r, s)] += sg * m[(x, a)];
            }
            if let Some((r, sg)) = v_pair(a, x) {
                out[(r, s)] += sg * m[(x, b)];
            }
        }
    }
    out
}

/// `(E_a ∧ E_b)(w) = g(E_b, w) E_a - g(E_a, w) E_b` for frame index pairs.
fn bivector_endo(g: &DMatrix<f64>, a: usize, b: usize) -> DMatrix<f64> {
    DMatrix::from_fn(DIM, DIM, |r, w| {
        let mut v = 0.0;
        if r == a {
            v += g[(b, w)];
        }
        if r == b {
            v -= g[(a, w)];
        }
        v
    })
}

fn traceless(m: &DMatrix<f64>) -> DMatrix<f64> {
    let t = m.trace() / NV as f64;
    m - DMatrix::identity(NV, NV) * t
}

fn flatten(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_iterator(m.len(), m.iter().cloned())
}

/// Builds the identification at the base point of a 2-adapted coframe.
pub fn build_iso<T: Real>(cf: &AdaptedCoframe<T>, g: &MetricJet<T>) -> Result<SpinIso> {
    if cf.level() < 2 {
        return Err(Error::InvalidArgument("the spinor identification needs a 2-adapted coframe".into()));
    }
    let frame = DMatrix::from_fn(DIM, DIM, |a, b| to_f64(cf.coframe().frame()[b].values()[a]));
    let gc = g.values();
    let metric = frame.transpose() * &gc * &frame;

    let mut plucker = DMatrix::zeros(DIM, 6);
    for i in 0..3 {
        let (r, s) = v_pair(0, i + 1).unwrap();
        plucker[(om(i), r)] = s;
        let (r, s) = v_pair((i + 1) % 3 + 1, (i + 2) % 3 + 1).unwrap();
        plucker[(th(i), r)] = 2.0 * s;
    }
    let q = wedge_pairing();
    let quadratic_form_check = (plucker.transpose() * &metric * &plucker - &q).amax();
    let pinv = plucker.clone().try_inverse().ok_or(Error::Singular("Plücker map"))?;

    let rho = |m: &DMatrix<f64>| &plucker * lambda2(m) * &pinv;
    let pairs = subsets().list(2);
    let basis: Vec<DMatrix<f64>> = pairs.iter().map(|p| bivector_endo(&metric, p[0], p[1])).collect();
    let bmat = DMatrix::from_columns(&basis.iter().map(flatten).collect::<Vec<_>>());
    let bpinv = pseudo_inverse(&bmat, 1e-12).pinv;

    let mut coords = DMatrix::zeros(basis.len(), NV * NV);
    let mut defect = 0.0f64;
    for p in 0..NV {
        for q in 0..NV {
            let img = rho(&traceless(&matrix_unit(p, q)));
            let c = &bpinv * flatten(&img);
            defect = defect.max((&bmat * &c - flatten(&img)).amax());
            coords.set_column(p * NV + q, &c);
        }
    }
    let units: Vec<DMatrix<f64>> = (0..NV * NV).map(|u| traceless(&matrix_unit(u / NV, u % NV))).collect();
    for m in &units {
        for n in &units {
            let lhs = rho(&(m * n - n * m));
            let (rm, rn) = (rho(m), rho(n));
            defect = defect.max((lhs - (&rm * &rn - &rn * &rm)).amax());
        }
        let r = rho(m);
        defect = defect.max((r.transpose() * &metric + &metric * &r).amax());
    }
    let iso = SpinIso { plucker, metric, quadratic_form_check, bracket_check: defect, coords, frame };
    if iso.quadratic_form_check > ISO_TOL || iso.bracket_check > ISO_TOL {
        return Err(Error::Integrity(format!(
            "spinor identification misaligned: q {:.3e}, bracket {:.3e}",
            iso.quadratic_form_check, iso.bracket_check
        )));
    }
    Ok(iso)
}

impl SpinIso {
    /// Rank of the images of the three bivectors `f_0 ∧ f_i` together with
    /// the `ω`-dual frame vectors; 3 when `D` corresponds to `e ∧ V`.
    pub fn plane_rank(&self) -> usize {
        let cols: Vec<DVector<f64>> = (0..3).map(|i| self.plucker.column(i).into_owned()).collect();
        let mut all = cols.clone();
        for i in 0..3 {
            let mut x = DVector::zeros(DIM);
            x[om(i)] = 1.0;
            all.push(x);
        }
        crate::linalg::numerical_rank(&DMatrix::from_columns(&all), 1e-10, 1e-14)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpinorWeyl {
    /// `T^{ac}_{bd}` at `idx4v(a, c, b, d)`.
    pub components: Vec<f64>,
    /// `vol(f_0 ∧ f_1 ∧ f_2 ∧ f_3)` used to trivialize the density weight.
    pub weight_normalization: f64,
    /// Relative size of the parts removed by the projection.
    pub projection_residual: f64,
}

impl SpinorWeyl {
    pub fn norm(&self) -> f64 {
        self.components.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn get(&self, a: usize, c: usize, b: usize, d: usize) -> f64 {
        self.components[idx4v(a, c, b, d)]
    }

    /// `T^{ac}_{bd} e^b`, with rows `(a ≤ c, d)`.
    pub fn contract(&self, e: &[f64; NV]) -> Vec<f64> {
        let mut out = Vec::with_capacity(40);
        for a in 0..NV {
            for c in a..NV {
                for d in 0..NV {
                    out.push((0..NV).map(|b| self.get(a, c, b, d) * e[b]).sum());
                }
            }
        }
        out
    }

    pub fn scaled_add(&self, s: f64, other: &SpinorWeyl) -> SpinorWeyl {
        SpinorWeyl {
            components: self.components.iter().zip(&other.components).map(|(x, y)| x + s * y).collect(),
            weight_normalization: self.weight_normalization,
            projection_residual: self.projection_residual.max(other.projection_residual),
        }
    }
}

/// Orthonormal basis (columns) of `(S²V ⊗ S²V*)_0` inside the 256 components.
pub fn weyl_space_basis() -> &'static DMatrix<f64> {
    static BASIS: OnceLock<DMatrix<f64>> = OnceLock::new();
    BASIS.get_or_init(|| {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for a in 0..NV {
            for c in 0..NV {
                for b in 0..NV {
                    for d in 0..NV {
                        let mut r = vec![0.0; NT];
                        r[idx4v(a, c, b, d)] += 1.0;
                        r[idx4v(c, a, b, d)] -= 1.0;
                        rows.push(r);
                        let mut r = vec![0.0; NT];
                        r[idx4v(a, c, b, d)] += 1.0;
                        r[idx4v(a, c, d, b)] -= 1.0;
                        rows.push(r);
                    }
                }
            }
        }
        for c in 0..NV {
            for d in 0..NV {
                let mut r = vec![0.0; NT];
                for a in 0..NV {
                    r[idx4v(a, c, a, d)] += 1.0;
                }
                rows.push(r);
            }
        }
        let m = DMatrix::from_fn(rows.len(), NT, |r, c| rows[r][c]);
        pseudo_inverse(&m, 1e-12).nullspace
    })
}

/// Transports `W_{abcd}` to `(S²V ⊗ S²V*)_0`.
pub fn weyl_to_spin_form(ct: &CurvatureTensors, iso: &SpinIso) -> Result<SpinorWeyl> {
    // Weyl in the frame basis
    let f = &iso.frame;
    let chart = &ct.weyl;
    let mut half = vec![0.0; DIM * DIM * DIM * DIM];
    // contract one index at a time
    let mut cur = chart.clone();
    for slot in 0..4 {
        for a in 0..DIM {
            for b in 0..DIM {
                for c in 0..DIM {
                    for d in 0..DIM {
                        let idx = [a, b, c, d];
                        let mut acc = 0.0;
                        for x in 0..DIM {
                            let mut j = idx;
                            j[slot] = x;
                            acc += f[(x, idx[slot])] * cur[idx4(j[0], j[1], j[2], j[3])];
                        }
                        half[idx4(a, b, c, d)] = acc;
                    }
                }
            }
        }
        std::mem::swap(&mut cur, &mut half);
    }
    let wf = cur;
    let pairs = subsets().list(2);
    let np = pairs.len();
    // w_{rs} = W(B_r, B_s) on the bivector basis
    let w = DMatrix::from_fn(np, np, |r, s| {
        let (p, q) = (&pairs[r], &pairs[s]);
        wf[idx4(p[0], p[1], q[0], q[1])]
    });
    // bilinear form on gl(V) through the traceless parts of matrix units
    let wt = iso.coords.transpose() * &w * &iso.coords;
    // T^a_b^c_d = w̃(f_b ⊗ f^a, f_d ⊗ f^c): unit E_{pq} has p = row = b
    let mut t = vec![0.0; NT];
    for a in 0..NV {
        for b in 0..NV {
            for c in 0..NV {
                for d in 0..NV {
                    t[idx4v(a, c, b, d)] = wt[(b * NV + a, d * NV + c)];
                }
            }
        }
    }
    let basis = weyl_space_basis();
    let tv = DVector::from_vec(t);
    let proj = basis * (basis.transpose() * &tv);
    let scale = tv.amax().max(f64::MIN_POSITIVE);
    let projection_residual = if tv.amax() == 0.0 { 0.0 } else { (&tv - &proj).amax() / scale };
    let scale_ref = wf.iter().map(|x| x.abs()).fold(0.0, f64::max);
    if scale_ref > 1e-12 && projection_residual > PROJECTION_TOL {
        return Err(Error::Integrity(format!("input violates Weyl symmetries by {projection_residual:.3e}")));
    }
    Ok(SpinorWeyl { components: proj.iter().cloned().collect(), weight_normalization: 1.0, projection_residual })
}

/// Numerical kernel of `e ↦ C_e(sw)`.
#[derive(Clone, Debug)]
pub struct SpinorKernel {
    pub dimension: usize,
    /// Orthonormal spinors spanning the kernel.
    pub basis: Vec<[f64; NV]>,
    pub singular_values: Vec<f64>,
}

pub fn contraction_matrix(sw: &SpinorWeyl) -> DMatrix<f64> {
    let cols: Vec<DVector<f64>> = (0..NV)
        .map(|b| {
            let mut e = [0.0; NV];
            e[b] = 1.0;
            DVector::from_vec(sw.contract(&e))
        })
        .collect();
    DMatrix::from_columns(&cols)
}

pub fn spinor_kernel(sw: &SpinorWeyl) -> SpinorKernel {
    let m = contraction_matrix(sw);
    let svd = m.clone().svd(false, true);
    let mut order: Vec<usize> = (0..NV).collect();
    order.sort_by(|a, b| svd.singular_values[*b].total_cmp(&svd.singular_values[*a]));
    let sv: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let cutoff = (KERNEL_RTOL * sv[0]).max(KERNEL_ATOL);
    let vt = svd.v_t.unwrap();
    let basis: Vec<[f64; NV]> = order
        .iter()
        .filter(|&&i| svd.singular_values[i] <= cutoff)
        .map(|&i| std::array::from_fn(|k| vt[(i, k)]))
        .collect();
    SpinorKernel { dimension: basis.len(), basis, singular_values: sv }
}

/// `‖C_e(sw)‖ / ‖sw‖` for a given spinor.
pub fn contraction_residual(sw: &SpinorWeyl, e: &[f64; NV]) -> f64 {
    let c = sw.contract(e);
    let n = sw.norm();
    if n == 0.0 {
        return 0.0;
    }
    c.iter().map(|x| x * x).sum::<f64>().sqrt() / n
}

/// The distinguished spinor `e = f_0`.
pub const CANONICAL_SPINOR: [f64; NV] = [1.0, 0.0, 0.0, 0.0];

#[derive(Clone, Debug, PartialEq)]
pub struct FiltrationSplit {
    /// `T^{00}_{cd}`, `c, d ∈ 1..3`, at `c*3 + d`.
    pub piece6: Vec<f64>,
    /// `T^{0i}_{cd}` at `(i*3 + c)*3 + d`.
    pub piece15: Vec<f64>,
    /// `T^{ik}_{jl}` at `s4_index(i, k, j, l)`.
    pub piece27: Vec<f64>,
}

pub fn filtration_split(sw: &SpinorWeyl) -> Result<FiltrationSplit> {
    let res = contraction_residual(sw, &CANONICAL_SPINOR);
    if res > 1e-7 {
        return Err(Error::InvalidArgument(format!("spinor form is not annihilated by e ({res:.3e})")));
    }
    let mut piece6 = vec![0.0; 9];
    let mut piece15 = vec![0.0; 27];
    let mut piece27 = vec![0.0; 81];
    for c in 0..3 {
        for d in 0..3 {
            piece6[c * 3 + d] = sw.get(0, 0, c + 1, d + 1);
            for i in 0..3 {
                piece15[(i * 3 + c) * 3 + d] = sw.get(0, i + 1, c + 1, d + 1);
                for k in 0..3 {
                    piece27[s4_index(i, k, c, d)] = sw.get(i + 1, k + 1, c + 1, d + 1);
                }
            }
        }
    }
    Ok(FiltrationSplit { piece6, piece15, piece27 })
}

impl FiltrationSplit {
    /// Rebuilds the spinor form from its pieces, assuming `C_e` vanishes.
    pub fn reassemble(&self) -> SpinorWeyl {
        let mut t = vec![0.0; NT];
        for c in 0..3 {
            for d in 0..3 {
                t[idx4v(0, 0, c + 1, d + 1)] = self.piece6[c * 3 + d];
                for i in 0..3 {
                    let v = self.piece15[(i * 3 + c) * 3 + d];
                    t[idx4v(0, i + 1, c + 1, d + 1)] = v;
                    t[idx4v(i + 1, 0, c + 1, d + 1)] = v;
                    for k in 0..3 {
                        t[idx4v(i + 1, k + 1, c + 1, d + 1)] = self.piece27[s4_index(i, k, c, d)];
                    }
                }
            }
        }
        SpinorWeyl { components: t, weight_normalization: 1.0, projection_residual: 0.0 }
    }
}

/// Dimensions of `W`, `W_ξ` and the filtration steps `F_0 ⊂ F_1 ⊂ W_ξ`.
pub fn filtration_dimensions() -> [usize; 4] {
    let basis = weyl_space_basis();
    let dim_with = |zero: &dyn Fn(usize, usize, usize, usize) -> bool| {
        let mut rows = Vec::new();
        for a in 0..NV {
            for c in 0..NV {
                for b in 0..NV {
                    for d in 0..NV {
                        if zero(a, c, b, d) {
                            rows.push(basis.row(idx4v(a, c, b, d)).into_owned());
                        }
                    }
                }
            }
        }
        if rows.is_empty() {
            return basis.ncols();
        }
        let m = DMatrix::from_rows(&rows);
        basis.ncols() - crate::linalg::numerical_rank(&m, 1e-10, 1e-12)
    };
    let w_xi = |_a: usize, _c: usize, b: usize, d: usize| b == 0 || d == 0;
    let f1 = |a: usize, c: usize, b: usize, d: usize| w_xi(a, c, b, d) || (a != 0 && c != 0);
    let f0 = |a: usize, c: usize, b: usize, d: usize| w_xi(a, c, b, d) || a != 0 || c != 0;
    [dim_with(&|_, _, _, _| false), dim_with(&w_xi), dim_with(&f1), dim_with(&f0)]
}

/// Least-squares constant `λ` with `piece27 ≈ λ S4`, and the relative misfit.
pub fn piece27_ratio(split: &FiltrationSplit, ft: &FundamentalTensor) -> (f64, f64) {
    let ss: f64 = ft.s4.iter().map(|x| x * x).sum();
    let ps: f64 = split.piece27.iter().zip(&ft.s4).map(|(p, s)| p * s).sum();
    let lambda = if ss > 0.0 { ps / ss } else { 0.0 };
    let misfit = split.piece27.iter().zip(&ft.s4).map(|(p, s)| (p - lambda * s).abs()).fold(0.0, f64::max);
    let scale = split.piece27.iter().map(|x| x.abs()).fold(f64::MIN_POSITIVE, f64::max);
    (lambda, misfit / scale)
}

/// `max |piece27 - PIECE27_SCALE · S4| / max |piece27|`.
pub fn piece27_mismatch(split: &FiltrationSplit, ft: &FundamentalTensor) -> f64 {
    let scale = split.piece27.iter().map(|x| x.abs()).fold(f64::MIN_POSITIVE, f64::max);
    split
        .piece27
        .iter()
        .zip(&ft.s4)
        .map(|(p, s)| (p - PIECE27_SCALE * s).abs())
        .fold(0.0, f64::max)
        / scale
}

/// A random element of `(S²V ⊗ S²V*)_0`.
pub fn random_spin_form<R: rand::Rng>(rng: &mut R) -> SpinorWeyl {
    let basis = weyl_space_basis();
    let v = DVector::from_fn(basis.ncols(), |_, _| rng.gen_range(-1.0..1.0));
    SpinorWeyl { components: (basis * v).iter().cloned().collect(), weight_normalization: 1.0, projection_residual: 0.0 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adaptation::{build_one_adapted, reduce_to_two_adapted};
    use crate::conformal::{canonical_metric, weyl_tensor};
    use crate::distribution::Distribution;
    use crate::reduction::reduce;
    use rand::SeedableRng;

    struct Run {
        iso: SpinIso,
        sw: SpinorWeyl,
        ft: FundamentalTensor,
    }

    fn run(d: &Distribution<f64>) -> Run {
        let cf = reduce_to_two_adapted(&build_one_adapted(d).unwrap(), d).unwrap();
        let g = canonical_metric(&cf).unwrap();
        let iso = build_iso(&cf, &g).unwrap();
        let ct = weyl_tensor(&g).unwrap();
        let sw = weyl_to_spin_form(&ct, &iso).unwrap();
        let ft = reduce(&cf).unwrap().tensor;
        Run { iso, sw, ft }
    }

    #[test]
    fn wedge_pairing_is_split() {
        let eig = wedge_pairing().symmetric_eigen().eigenvalues;
        assert_eq!(eig.iter().filter(|e| **e > 0.5).count(), 3);
        assert_eq!(eig.iter().filter(|e| **e < -0.5).count(), 3);
    }

    #[test]
    fn representation_dimensions() {
        assert_eq!(weyl_space_basis().ncols(), 84);
        let [w, wxi, f1, f0] = filtration_dimensions();
        assert_eq!((w, wxi), (84, 48));
        assert_eq!((f0, f1 - f0, wxi - f1), (6, 15, 27));
    }

    #[test]
    fn flat_model_spin_form_vanishes() {
        let r = run(&Distribution::flat_model([0.1, 0.2, 0.3, -0.1, 0.0, 0.2], 5).unwrap());
        assert!(r.iso.quadratic_form_check < 1e-10);
        assert_eq!(r.iso.plane_rank(), 3);
        assert!(r.sw.norm() < 1e-8);
        assert_eq!(spinor_kernel(&r.sw).dimension, 4);
    }

    #[test]
    fn perturbed_spin_form_has_canonical_kernel() {
        let r = run(&Distribution::perturbed_family(0.1, 1, [0.0; 6], 5).unwrap());
        assert!(r.sw.norm() > 1e-4);
        let k = spinor_kernel(&r.sw);
        assert!(k.dimension >= 1, "{:?}", k.singular_values);
        assert!(contraction_residual(&r.sw, &CANONICAL_SPINOR) < 1e-7);
        let split = filtration_split(&r.sw).unwrap();
        let back = split.reassemble();
        for (x, y) in back.components.iter().zip(&r.sw.components) {
            assert!((x - y).abs() < 1e-9);
        }
        let (lambda, misfit) = piece27_ratio(&split, &r.ft);
        assert!(misfit < 1e-6);
        assert!((lambda - PIECE27_SCALE).abs() < 1e-6 * PIECE27_SCALE);
        assert!(piece27_mismatch(&split, &r.ft) < 1e-6);
    }

    #[test]
    fn random_forms_have_trivial_kernel() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            assert_eq!(spinor_kernel(&random_spin_form(&mut rng)).dimension, 0);
        }
    }

    #[test]
    fn transport_is_linear() {
        let a = run(&Distribution::perturbed_family(0.1, 1, [0.0; 6], 5).unwrap());
        let cf = {
            let d = Distribution::perturbed_family(0.1, 1, [0.0; 6], 5).unwrap();
            reduce_to_two_adapted(&build_one_adapted(&d).unwrap(), &d).unwrap()
        };
        let g = canonical_metric(&cf).unwrap();
        let mut ct = weyl_tensor(&g).unwrap();
        let base = weyl_to_spin_form(&ct, &a.iso).unwrap();
        for w in ct.weyl.iter_mut() {
            *w *= 2.0;
        }
        let doubled = weyl_to_spin_form(&ct, &a.iso).unwrap();
        let sum = base.scaled_add(1.0, &base);
        for (x, y) in doubled.components.iter().zip(&sum.components) {
            assert!((x - y).abs() < 1e-10);
        }
    }
}
