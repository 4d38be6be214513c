//! Pseudo-connection, curvature and the fundamental tensor of a 2-adapted
//! coframe, plus the matrix-valued forms `γ` and `γ̂`.
//!
//! All forms are handled through their components in the coframe basis.
//! Because the structure equations have constant coefficients in that
//! basis, each linear solve is a fixed matrix applied coefficient-wise to
//! jets of structure functions, so solutions are themselves jets.

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::adaptation::{add_omega_alpha_terms, add_theta_equations, alpha_unknown, om, reduced_rhs, th, AdaptedCoframe};
use crate::combinatorics::subsets;
use crate::error::{Error, Result};
use crate::exterior::KForm;
use crate::frame::{apply_matrix, residual, scale_of, wedge_entry, LinearSystem, PAIRS};
use crate::jet::{Jet, DIM};
use crate::scalar::{eps, lit, to_f64, Real};

/// Residual bound for the pseudo-connection equations.
pub const CONNECTION_TOL: f64 = 1e-9;
/// Bound on identities that hold by the structure theory.
pub const IDENTITY_TOL: f64 = 1e-8;
/// Dimension of the pseudo-connection gauge.
pub const GAUGE_DIM: usize = 3;

const BETA0: usize = 54;
const CONNECTION_UNKNOWNS: usize = 72;

#[derive(Clone, Debug)]
pub struct PseudoConnection<T: Real> {
    /// `alpha[i][j][b]` is the `η^b` component of `α^i_j`.
    pub alpha: Vec<Vec<Vec<Jet<T>>>>,
    /// `beta[k][b]` is the `η^b` component of `β_k`.
    pub beta: Vec<Vec<Jet<T>>>,
    /// Columns span the solution space of the homogeneous system.
    pub gauge_basis: DMatrix<T>,
    pub residual: f64,
    /// Constant gauge shift applied on top of the minimum-norm solution.
    pub t_offset: [T; 3],
}

impl<T: Real> PseudoConnection<T> {
    pub fn gauge_dim(&self) -> usize {
        self.gauge_basis.ncols()
    }

    fn unknowns(&self) -> Vec<Jet<T>> {
        let mut u: Vec<Jet<T>> = Vec::with_capacity(CONNECTION_UNKNOWNS);
        for i in 0..3 {
            for j in 0..3 {
                u.extend(self.alpha[i][j].iter().cloned());
            }
        }
        for k in 0..3 {
            u.extend(self.beta[k].iter().cloned());
        }
        u
    }

    fn from_unknowns(u: &[Jet<T>], gauge_basis: DMatrix<T>, residual: f64, t_offset: [T; 3]) -> Self {
        let alpha = (0..3)
            .map(|i| (0..3).map(|j| (0..DIM).map(|b| u[alpha_unknown(i, j, b)].clone()).collect()).collect())
            .collect();
        let beta = (0..3).map(|k| (0..DIM).map(|b| u[BETA0 + k * DIM + b].clone()).collect()).collect();
        PseudoConnection { alpha, beta, gauge_basis, residual, t_offset }
    }

    pub fn alpha_form(&self, cf: &AdaptedCoframe<T>, i: usize, j: usize) -> Result<KForm<T>> {
        cf.coframe().assemble1(&self.alpha[i][j])
    }

    pub fn beta_form(&self, cf: &AdaptedCoframe<T>, k: usize) -> Result<KForm<T>> {
        cf.coframe().assemble1(&self.beta[k])
    }

    /// Adds a constant combination of the gauge directions.
    pub fn shift_along_gauge(&self, weights: &[T]) -> Self {
        let mut u = self.unknowns();
        for (c, w) in weights.iter().enumerate() {
            for (r, x) in u.iter_mut().enumerate() {
                let delta = self.gauge_basis[(r, c)] * *w;
                let mut y = x.clone();
                y.set_coeff(&crate::jet::MultiIndex::ZERO, x.value() + delta);
                *x = y;
            }
        }
        Self::from_unknowns(&u, self.gauge_basis.clone(), self.residual, self.t_offset)
    }
}

fn connection_system<T: Real>() -> LinearSystem<T> {
    let mut sys = LinearSystem::new(DIM * PAIRS, CONNECTION_UNKNOWNS);
    add_theta_equations(&mut sys);
    add_omega_alpha_terms(&mut sys);
    for i in 0..3 {
        let row = PAIRS * om(i);
        for k in 0..3 {
            for j in 0..3 {
                let e = eps(i, k, j) as f64;
                if e == 0.0 {
                    continue;
                }
                for c in 0..DIM {
                    // -ε^{ikj} β_k ∧ θ_j
                    sys.add_wedge(row, BETA0 + k * DIM + c, -e, c, th(j));
                }
            }
        }
    }
    sys
}

/// Minimum-norm pseudo-connection with `dθ` and `dω` in normal form.
pub fn solve_pseudo_connection<T: Real>(cf: &AdaptedCoframe<T>) -> Result<PseudoConnection<T>> {
    if cf.level() < 2 {
        return Err(Error::InvalidArgument("the pseudo-connection needs a 2-adapted coframe".into()));
    }
    if cf.order() < 2 {
        return Err(Error::InsufficientOrder { what: "pseudo-connection", needed: 2, available: cf.order() });
    }
    let sys = connection_system::<T>();
    let pinv = sys.pseudo_inverse();
    let rhs = reduced_rhs(cf.coframe())?;
    let u = apply_matrix(&pinv.pinv, &rhs);
    let res = residual(&sys.matrix, &u, &rhs) / scale_of(&rhs);
    if res > CONNECTION_TOL {
        return Err(Error::Inconsistent { system: "pseudo-connection", residual: res });
    }
    if pinv.nullspace.ncols() != GAUGE_DIM {
        return Err(Error::GaugeDimension { expected: GAUGE_DIM, found: pinv.nullspace.ncols() });
    }
    Ok(PseudoConnection::from_unknowns(&u, pinv.nullspace, res, [T::zero(); 3]))
}

/// Structure-equation residual of an arbitrary pseudo-connection.
pub fn connection_residual<T: Real>(pc: &PseudoConnection<T>, cf: &AdaptedCoframe<T>) -> Result<f64> {
    let sys = connection_system::<T>();
    let rhs = reduced_rhs(cf.coframe())?;
    Ok(residual(&sys.matrix, &pc.unknowns(), &rhs) / scale_of(&rhs))
}

/// `α^i_j ↦ α^i_j + δ^i_j t^k θ_k - t^i θ_j`, `β_i ↦ β_i + ε_{ijk} t^j ω^k`.
pub fn gauge_shift<T: Real>(pc: &PseudoConnection<T>, t: [T; 3]) -> PseudoConnection<T> {
    let mut out = pc.clone();
    let bump = |j: &mut Jet<T>, d: T| {
        let v = j.value();
        j.set_coeff(&crate::jet::MultiIndex::ZERO, v + d);
    };
    for i in 0..3 {
        for k in 0..3 {
            bump(&mut out.alpha[i][i][th(k)], t[k]);
        }
        for j in 0..3 {
            bump(&mut out.alpha[i][j][th(j)], -t[i]);
        }
        for j in 0..3 {
            for k in 0..3 {
                let e = eps(i, j, k);
                if e != 0 {
                    bump(&mut out.beta[i][om(k)], lit::<T>(e as f64) * t[j]);
                }
            }
        }
    }
    for k in 0..3 {
        out.t_offset[k] += t[k];
    }
    out
}

/// Frame components of the curvature 2-forms
/// `A^i_j = dα^i_j + α^i_k ∧ α^k_j + 2 ω^i ∧ β_j` and
/// `B_i = dβ_i - α^j_i ∧ β_j`.
#[derive(Clone, Debug)]
pub struct CurvatureTwoForms<T: Real> {
    pub a: Vec<Vec<Vec<Jet<T>>>>,
    pub b: Vec<Vec<Jet<T>>>,
    /// Largest `ω ∧ ω` coefficient of any `A^i_j`.
    pub omega_omega: f64,
}

fn is_omega_pair(p: &[usize]) -> bool {
    p[0] >= 3 && p[1] >= 3
}

pub fn curvature_two_forms<T: Real>(pc: &PseudoConnection<T>, cf: &AdaptedCoframe<T>) -> Result<CurvatureTwoForms<T>> {
    let order = pc.alpha[0][0][0].order();
    if order < 1 {
        return Err(Error::InsufficientOrder { what: "curvature 2-forms", needed: 1, available: order });
    }
    let alpha: Vec<Vec<KForm<T>>> = (0..3)
        .map(|i| (0..3).map(|j| pc.alpha_form(cf, i, j)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let beta: Vec<KForm<T>> = (0..3).map(|k| pc.beta_form(cf, k)).collect::<Result<_>>()?;
    let omega = cf.omega();
    let co = cf.coframe();
    let mut a = vec![vec![Vec::new(); 3]; 3];
    let mut worst = 0.0f64;
    for i in 0..3 {
        for j in 0..3 {
            let mut f = alpha[i][j].d()?;
            for k in 0..3 {
                f = f.try_add(&alpha[i][k].wedge(&alpha[k][j])?)?;
            }
            f = f.try_add(&omega[i].wedge(&beta[j])?.scale(lit(2.0)))?;
            let comps = co.components2(&f)?;
            for (p, pair) in subsets().list(2).iter().enumerate() {
                if is_omega_pair(pair) {
                    worst = worst.max(to_f64(comps[p].value().abs()));
                }
            }
            a[i][j] = comps;
        }
    }
    let mut b = Vec::with_capacity(3);
    for i in 0..3 {
        let mut f = beta[i].d()?;
        for j in 0..3 {
            f = f.try_sub(&alpha[j][i].wedge(&beta[j])?)?;
        }
        b.push(co.components2(&f)?);
    }
    let scale = a.iter().flatten().flatten().map(|j| to_f64(j.value().abs())).fold(1.0, f64::max);
    let omega_omega = worst / scale;
    if omega_omega > IDENTITY_TOL {
        return Err(Error::Integrity(format!("A has ω∧ω components of size {omega_omega:.3e}")));
    }
    Ok(CurvatureTwoForms { a, b, omega_omega })
}

/// Values of `S^{ik}_{jl}`, `S^i_{jk}` and `S_{ij}` at the base point, in
/// row-major index order.
#[derive(Clone, Debug, PartialEq)]
pub struct FundamentalTensor {
    /// `S^{ik}_{jl}` at `((i*3 + k)*3 + j)*3 + l`.
    pub s4: Vec<f64>,
    /// `S^i_{jk}` at `(i*3 + j)*3 + k`; relative to the chosen gauge.
    pub s3: Vec<f64>,
    /// `S_{ij}` at `i*3 + j`; relative to the chosen gauge.
    pub s2: Vec<f64>,
}

pub fn s4_index(i: usize, k: usize, j: usize, l: usize) -> usize {
    ((i * 3 + k) * 3 + j) * 3 + l
}

fn frob(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

impl FundamentalTensor {
    pub fn s4_norm(&self) -> f64 {
        frob(&self.s4)
    }

    pub fn s3_norm(&self) -> f64 {
        frob(&self.s3)
    }

    pub fn s2_norm(&self) -> f64 {
        frob(&self.s2)
    }

    pub fn max_norm(&self) -> f64 {
        self.s4_norm().max(self.s3_norm()).max(self.s2_norm())
    }

    /// Residuals of the five trace and symmetry identities, each divided by
    /// `max(1, ‖S‖)`.
    pub fn relations(&self) -> BTreeMap<&'static str, f64> {
        let s4 = |i, k, j, l| self.s4[s4_index(i, k, j, l)];
        let s3 = |i: usize, j: usize, k: usize| self.s3[(i * 3 + j) * 3 + k];
        let s2 = |i: usize, j: usize| self.s2[i * 3 + j];
        let mut r = [0.0f64; 5];
        for i in 0..3 {
            for j in 0..3 {
                r[0] = r[0].max((s2(i, j) - s2(j, i)).abs());
                let mut tr3 = 0.0;
                for k in 0..3 {
                    r[1] = r[1].max((s3(i, j, k) - s3(i, k, j)).abs());
                    tr3 += s3(k, k, i) * if j == 0 { 1.0 } else { 0.0 };
                    let mut tr4 = 0.0;
                    for l in 0..3 {
                        r[3] = r[3].max((s4(i, k, j, l) - s4(k, i, j, l)).abs());
                        r[3] = r[3].max((s4(i, k, j, l) - s4(i, k, l, j)).abs());
                        tr4 += s4(l, i, l, j) * if k == 0 { 1.0 } else { 0.0 };
                    }
                    r[4] = r[4].max(tr4.abs());
                }
                r[2] = r[2].max(tr3.abs());
            }
        }
        let scale = self.max_norm().max(1.0);
        let names = ["S2 symmetric", "S3 symmetric", "S3 traceless", "S4 symmetric", "S4 traceless"];
        names.iter().zip(r).map(|(n, v)| (*n, v / scale)).collect()
    }
}

#[derive(Clone, Debug)]
pub struct NormalizationState<T: Real> {
    /// `tau[i][b]` is the `η^b` component of `τ^i`.
    pub tau: Vec<Vec<Jet<T>>>,
    /// Gauge shift of the pseudo-connection relative to the minimum-norm
    /// solution.
    pub t_gauge: [f64; 3],
    /// The symmetric `θ`-shift that the `S^{ij} = 0` condition applies to
    /// `τ` after the trace conditions alone.
    pub p_gauge: [[f64; 3]; 3],
    /// `R^i_{jk}` at `(i*3 + j)*3 + k`.
    pub r: Vec<f64>,
    /// Symmetric part `S^{ij}` of the skew part of `R` (normalized to 0).
    pub s_sym_part: Vec<f64>,
    /// Vector part `S_p` of the skew part of `R` (vanishes identically).
    pub s_vec_part: [f64; 3],
    pub residuals: BTreeMap<String, f64>,
}

const TAU0: usize = 0;
const R0: usize = 18;
const S0: usize = 45;
const NORMALIZATION_UNKNOWNS: usize = 126;

fn tau_u(i: usize, b: usize) -> usize {
    TAU0 + i * DIM + b
}

fn r_u(i: usize, j: usize, k: usize) -> usize {
    R0 + (i * 3 + j) * 3 + k
}

fn s_u(i: usize, k: usize, j: usize, l: usize) -> usize {
    S0 + s4_index(i, k, j, l)
}

/// `U^{il} = ½ ε_{ljk} R^i_{jk}` as coefficients on the `R` unknowns.
fn u_row(i: usize, l: usize) -> Vec<(usize, f64)> {
    let mut out = Vec::new();
    for j in 0..3 {
        for k in 0..3 {
            let e = eps(l, j, k);
            if e != 0 {
                out.push((r_u(i, j, k), 0.5 * e as f64));
            }
        }
    }
    out
}

fn normalization_system<T: Real>(with_symmetric_condition: bool) -> LinearSystem<T> {
    let rows = 9 * PAIRS + 3 + 9 + if with_symmetric_condition { 6 } else { 0 };
    let mut sys = LinearSystem::new(rows, NORMALIZATION_UNKNOWNS);
    for i in 0..3 {
        for j in 0..3 {
            let row = (i * 3 + j) * PAIRS;
            for b in 0..DIM {
                if i == j {
                    for k in 0..3 {
                        sys.add_wedge(row, tau_u(k, b), 1.0, b, th(k));
                    }
                }
                sys.add_wedge(row, tau_u(i, b), -1.0, b, th(j));
            }
            for k in 0..3 {
                // R^i_{jk} ε^{klm} θ_l ∧ θ_m = 2 R^i_{jk} θ_{k+1} ∧ θ_{k+2}
                sys.add_wedge(row, r_u(i, j, k), 2.0, th((k + 1) % 3), th((k + 2) % 3));
                for l in 0..3 {
                    sys.add_wedge(row, s_u(i, k, j, l), 1.0, th(k), om(l));
                }
            }
        }
    }
    let mut row = 9 * PAIRS;
    for k in 0..3 {
        for i in 0..3 {
            sys.add(row, r_u(i, i, k), 1.0);
        }
        row += 1;
    }
    for k in 0..3 {
        for l in 0..3 {
            for i in 0..3 {
                sys.add(row, s_u(i, k, i, l), 1.0);
            }
            row += 1;
        }
    }
    if with_symmetric_condition {
        for i in 0..3 {
            for l in i..3 {
                for (u, c) in u_row(i, l).into_iter().chain(u_row(l, i)) {
                    sys.add(row, u, c);
                }
                row += 1;
            }
        }
    }
    sys
}

/// Normalizes `τ` and reads off the curvature coefficients.
pub fn normalize_extract<T: Real>(
    ctf: &CurvatureTwoForms<T>,
    pc: &PseudoConnection<T>,
) -> Result<(NormalizationState<T>, FundamentalTensor)> {
    let base = *ctf.a[0][0][0].base_point();
    let order = ctf.a[0][0][0].order();
    let mut rhs: Vec<Jet<T>> = ctf.a.iter().flatten().flatten().cloned().collect();
    let full = normalization_system::<T>(true);
    rhs.resize(full.matrix.nrows(), Jet::zero(base, order));
    let pinv = full.pseudo_inverse();
    if pinv.rank != NORMALIZATION_UNKNOWNS {
        return Err(Error::Singular("τ normalization"));
    }
    let u = apply_matrix(&pinv.pinv, &rhs);
    let res = residual(&full.matrix, &u, &rhs) / scale_of(&rhs);

    let partial = normalization_system::<T>(false);
    let rhs1 = &rhs[..partial.matrix.nrows()];
    let u1 = apply_matrix(&partial.pseudo_inverse().pinv, rhs1);
    let mut p_gauge = [[0.0; 3]; 3];
    let mut p_skew = 0.0f64;
    for k in 0..3 {
        for l in 0..3 {
            p_gauge[k][l] = to_f64(u[tau_u(k, th(l))].value() - u1[tau_u(k, th(l))].value());
        }
    }
    for k in 0..3 {
        for l in 0..3 {
            p_skew = p_skew.max((p_gauge[k][l] - p_gauge[l][k]).abs());
        }
    }

    let v = |x: usize| to_f64(u[x].value());
    let r: Vec<f64> = (0..27).map(|x| v(R0 + x)).collect();
    let rr = |i: usize, j: usize, k: usize| r[(i * 3 + j) * 3 + k];
    let uu = |i: usize, l: usize| u_row(i, l).iter().map(|(x, c)| c * v(*x)).sum::<f64>();
    let mut s_sym_part = vec![0.0; 9];
    for i in 0..3 {
        for l in 0..3 {
            s_sym_part[i * 3 + l] = 0.5 * (uu(i, l) + uu(l, i));
        }
    }
    let s_vec_part: [f64; 3] = std::array::from_fn(|p| {
        let mut acc = 0.0;
        for i in 0..3 {
            for l in 0..3 {
                acc += 0.5 * eps(i, l, p) as f64 * uu(i, l);
            }
        }
        acc
    });
    let mut bianchi_r = 0.0f64;
    for i in 0..3 {
        let tr: f64 = (0..3).map(|j| rr(j, i, j)).sum();
        bianchi_r = bianchi_r.max(tr.abs());
    }

    let s4: Vec<f64> = (0..81).map(|x| v(S0 + x)).collect();
    let s3 = r.clone();
    // S_{ij} = ½ B_i[θ_{j+1} ∧ θ_{j+2}]
    let mut s2 = vec![0.0; 9];
    for i in 0..3 {
        for j in 0..3 {
            let (p, sign) = wedge_entry(th((j + 1) % 3), th((j + 2) % 3)).unwrap();
            s2[i * 3 + j] = 0.5 * sign * to_f64(ctf.b[i][p].value());
        }
    }
    let tau: Vec<Vec<Jet<T>>> = (0..3).map(|i| (0..DIM).map(|b| u[tau_u(i, b)].clone()).collect()).collect();
    let b_res = b_model_residual(ctf, &tau, &s3, &s2);

    let mut residuals = BTreeMap::new();
    residuals.insert("normalization_system".to_string(), res);
    residuals.insert("p_gauge_skew".to_string(), p_skew);
    residuals.insert("r_trace_identity".to_string(), bianchi_r);
    residuals.insert("s_vector_part".to_string(), frob(&s_vec_part));
    residuals.insert("b_structure".to_string(), b_res);
    let state = NormalizationState {
        tau,
        t_gauge: std::array::from_fn(|k| to_f64(pc.t_offset[k])),
        p_gauge,
        r,
        s_sym_part,
        s_vec_part,
        residuals,
    };
    let ft = FundamentalTensor { s4, s3, s2 };
    let scale = ft.max_norm().max(1.0);
    for (name, val) in &state.residuals {
        if *val > IDENTITY_TOL * scale {
            return Err(Error::Integrity(format!("{name} residual {val:.3e}")));
        }
    }
    Ok((state, ft))
}

/// `B_i - (ε_{ijk} τ^j ∧ ω^k - 2 S^j_{ik} θ_j ∧ ω^k + ε^{jkl} S_{ij} θ_k ∧ θ_l)`
/// at the base point.
fn b_model_residual<T: Real>(ctf: &CurvatureTwoForms<T>, tau: &[Vec<Jet<T>>], s3: &[f64], s2: &[f64]) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..3 {
        let mut model = [0.0f64; PAIRS];
        let mut put = |b: usize, c: usize, x: f64| {
            if let Some((p, s)) = wedge_entry(b, c) {
                model[p] += s * x;
            }
        };
        for j in 0..3 {
            for k in 0..3 {
                let e = eps(i, j, k) as f64;
                if e != 0.0 {
                    for b in 0..DIM {
                        put(b, om(k), e * to_f64(tau[j][b].value()));
                    }
                }
                put(th(j), om(k), -2.0 * s3[(j * 3 + i) * 3 + k]);
                for l in 0..3 {
                    put(th(k), th(l), eps(j, k, l) as f64 * s2[i * 3 + j]);
                }
            }
        }
        for p in 0..PAIRS {
            worst = worst.max((to_f64(ctf.b[i][p].value()) - model[p]).abs());
        }
    }
    worst
}

/// Flat iff `‖S4‖ < tol`; a flat verdict with large `S3` or `S2` breaks a
/// structural implication and is reported as an error.
pub fn flatness_test(ft: &FundamentalTensor, tol: f64) -> Result<bool> {
    let flat = ft.s4_norm() < tol;
    if flat && (ft.s3_norm() >= 10.0 * tol || ft.s2_norm() >= 10.0 * tol) {
        return Err(Error::Integrity(format!(
            "S4 vanishes but |S3| = {:.3e}, |S2| = {:.3e}",
            ft.s3_norm(),
            ft.s2_norm()
        )));
    }
    Ok(flat)
}

/// Everything the reduction stage produces for one coframe.
#[derive(Clone, Debug)]
pub struct Reduction<T: Real> {
    pub connection: PseudoConnection<T>,
    pub curvature: CurvatureTwoForms<T>,
    pub normalization: NormalizationState<T>,
    pub tensor: FundamentalTensor,
}

pub fn reduce<T: Real>(cf: &AdaptedCoframe<T>) -> Result<Reduction<T>> {
    let pc = solve_pseudo_connection(cf)?;
    reduce_with_connection(cf, pc)
}

pub fn reduce_with_connection<T: Real>(cf: &AdaptedCoframe<T>, pc: PseudoConnection<T>) -> Result<Reduction<T>> {
    let curvature = curvature_two_forms(&pc, cf)?;
    let (normalization, tensor) = normalize_extract(&curvature, &pc)?;
    Ok(Reduction { connection: pc, curvature, normalization, tensor })
}

// ---------------------------------------------------------------------------
// Cartan matrices

/// Symbols entering `γ` and `γ̂`: `α^i_j` (0..9), `β_i` (9..12), `τ^i`
/// (12..15), `θ_i` (15..18), `ω^i` (18..21).
pub const SYMBOLS: usize = 21;

fn sa(i: usize, j: usize) -> usize {
    i * 3 + j
}
fn sb(i: usize) -> usize {
    9 + i
}
fn st(i: usize) -> usize {
    12 + i
}
fn sth(i: usize) -> usize {
    15 + i
}
fn som(i: usize) -> usize {
    18 + i
}

/// A matrix whose entries are linear combinations of the symbols.
pub type Layout = Vec<Vec<Vec<(usize, f64)>>>;

/// The `so(4,3)`-valued form `γ`.
pub fn gamma_layout() -> Layout {
    let mut g: Layout = vec![vec![Vec::new(); 7]; 7];
    for i in 0..3 {
        for j in 0..3 {
            // upper-left block: -α^j_i at (i, j)
            g[i][j].push((sa(j, i), -1.0));
            // lower-right block: α^i_j
            g[4 + i][4 + j].push((sa(i, j), 1.0));
        }
        g[i][3].push((sb(i), 2.0));
        g[3][i].push((som(i), 1.0));
        g[3][4 + i].push((sb(i), -1.0));
        g[4 + i][3].push((som(i), -2.0));
        for j in 0..3 {
            for k in 0..3 {
                let e = eps(i, j, k) as f64;
                if e != 0.0 {
                    // upper-right: (i, 4+j) = -ε_{ijk} τ_k
                    g[i][4 + j].push((st(k), -e));
                    // lower-left: (4+i, j) = ε_{ijk} θ_k
                    g[4 + i][j].push((sth(k), e));
                }
            }
        }
    }
    g
}

/// The `so(4,4)`-valued form `γ̂`, with `φ = ½ α^i_i`.
pub fn gamma_hat_layout() -> Layout {
    let mut g: Layout = vec![vec![Vec::new(); 8]; 8];
    let phi: Vec<(usize, f64)> = (0..3).map(|i| (sa(i, i), 0.5)).collect();
    let neg = |v: &[(usize, f64)]| v.iter().map(|(s, c)| (*s, -c)).collect::<Vec<_>>();
    g[0][0] = neg(&phi);
    g[7][7] = phi.clone();
    for i in 0..3 {
        g[0][1 + i].push((sb(i), 1.0));
        g[0][4 + i].push((st(i), 1.0));
        g[1 + i][0].push((som(i), 1.0));
        g[4 + i][0].push((sth(i), 1.0));
        g[1 + i][7].push((st(i), 1.0));
        g[4 + i][7].push((sb(i), 1.0));
        g[7][1 + i].push((sth(i), 1.0));
        g[7][4 + i].push((som(i), 1.0));
        for j in 0..3 {
            g[1 + i][1 + j].push((sa(i, j), 1.0));
            g[4 + i][4 + j].push((sa(j, i), -1.0));
            for k in 0..3 {
                let e = eps(i, j, k) as f64;
                if e != 0.0 {
                    // (1+i, 4+j) = -ε_{ijk} β_k ; (4+i, 1+j) = ε_{ijk} ω^k
                    g[1 + i][4 + j].push((sb(k), -e));
                    g[4 + i][1 + j].push((som(k), e));
                }
            }
        }
        g[1 + i][1 + i].extend(neg(&phi));
        g[4 + i][4 + i].extend(phi.iter().cloned());
    }
    g
}

/// The constant matrix obtained by setting each symbol to `values[s]`.
pub fn layout_value(layout: &Layout, values: &[f64]) -> DMatrix<f64> {
    let n = layout.len();
    DMatrix::from_fn(n, n, |r, c| layout[r][c].iter().map(|(s, k)| k * values[*s]).sum())
}

/// `[[0,0,I],[0,2,0],[I,0,0]]`.
pub fn q7() -> DMatrix<f64> {
    let mut q = DMatrix::zeros(7, 7);
    for i in 0..3 {
        q[(i, 4 + i)] = 1.0;
        q[(4 + i, i)] = 1.0;
    }
    q[(3, 3)] = 2.0;
    q
}

/// Invariant form of `γ̂`, solved once from the layout and frozen here.
pub fn q8() -> DMatrix<f64> {
    let mut q = DMatrix::zeros(8, 8);
    q[(0, 7)] = 1.0;
    q[(7, 0)] = 1.0;
    for i in 0..3 {
        q[(1 + i, 4 + i)] = -1.0;
        q[(4 + i, 1 + i)] = -1.0;
    }
    q
}

/// Symmetric matrices `Q` with `Q a + aᵀ Q = 0` for every `a` in the span
/// of `generators`; columns of the result are the upper-triangular entries.
pub fn invariant_symmetric_forms(generators: &[DMatrix<f64>]) -> DMatrix<f64> {
    let n = generators[0].nrows();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|r| (r..n).map(move |c| (r, c))).collect();
    let mut rows = Vec::new();
    for a in generators {
        for r in 0..n {
            for c in 0..n {
                let mut row = vec![0.0; pairs.len()];
                for (u, &(p, q)) in pairs.iter().enumerate() {
                    let mut unit = DMatrix::zeros(n, n);
                    unit[(p, q)] = 1.0;
                    unit[(q, p)] = 1.0;
                    let m = &unit * a + a.transpose() * &unit;
                    row[u] = m[(r, c)];
                }
                rows.push(row);
            }
        }
    }
    let m = DMatrix::from_fn(rows.len(), pairs.len(), |r, c| rows[r][c]);
    crate::linalg::pseudo_inverse(&m, 1e-10).nullspace
}

/// Dimension of `{a : Q a + aᵀ Q = 0}`.
pub fn orthogonal_algebra_dim(q: &DMatrix<f64>) -> usize {
    let n = q.nrows();
    let mut m = DMatrix::zeros(n * n, n * n);
    for p in 0..n {
        for r in 0..n {
            let mut unit = DMatrix::zeros(n, n);
            unit[(p, r)] = 1.0;
            let img = q * &unit + unit.transpose() * q;
            for x in 0..n {
                for y in 0..n {
                    m[(x * n + y, p * n + r)] = img[(x, y)];
                }
            }
        }
    }
    crate::linalg::pseudo_inverse(&m, 1e-10).nullspace.ncols()
}

#[derive(Clone, Debug)]
pub struct CartanMatrices<T: Real> {
    pub gamma: Vec<Vec<KForm<T>>>,
    pub gamma_hat: Vec<Vec<KForm<T>>>,
    pub phi: KForm<T>,
}

fn symbol_forms<T: Real>(cf: &AdaptedCoframe<T>, red: &Reduction<T>) -> Result<Vec<KForm<T>>> {
    let co = cf.coframe();
    let mut out = Vec::with_capacity(SYMBOLS);
    for i in 0..3 {
        for j in 0..3 {
            out.push(co.assemble1(&red.connection.alpha[i][j])?);
        }
    }
    for k in 0..3 {
        out.push(co.assemble1(&red.connection.beta[k])?);
    }
    for k in 0..3 {
        out.push(co.assemble1(&red.normalization.tau[k])?);
    }
    out.extend(cf.theta().iter().cloned());
    out.extend(cf.omega().iter().cloned());
    let order = out.iter().map(|f| f.order()).min().unwrap();
    Ok(out.into_iter().map(|f| f.truncate(order)).collect())
}

fn realize<T: Real>(layout: &Layout, symbols: &[KForm<T>]) -> Result<Vec<Vec<KForm<T>>>> {
    let base = *symbols[0].base_point();
    let order = symbols[0].order();
    layout
        .iter()
        .map(|row| {
            row.iter()
                .map(|entry| {
                    let mut acc = KForm::zero(1, base, order);
                    for (s, c) in entry {
                        acc = acc.try_add(&symbols[*s].scale(lit(*c)))?;
                    }
                    Ok(acc)
                })
                .collect()
        })
        .collect()
}

pub fn build_cartan_matrices<T: Real>(cf: &AdaptedCoframe<T>, red: &Reduction<T>) -> Result<CartanMatrices<T>> {
    let sym = symbol_forms(cf, red)?;
    let gamma = realize(&gamma_layout(), &sym)?;
    let gamma_hat = realize(&gamma_hat_layout(), &sym)?;
    let phi = gamma_hat[7][7].clone();
    Ok(CartanMatrices { gamma, gamma_hat, phi })
}

/// Frame components at the base point of `dm + m ∧ m`, indexed
/// `[row][col][pair]`.
pub fn maurer_cartan_defect<T: Real>(m: &[Vec<KForm<T>>], cf: &AdaptedCoframe<T>) -> Result<Vec<Vec<Vec<f64>>>> {
    let n = m.len();
    if m[0][0].order() < 1 {
        return Err(Error::InsufficientOrder { what: "Cartan curvature", needed: 1, available: 0 });
    }
    let co = cf.coframe();
    let mut out = vec![vec![Vec::new(); n]; n];
    for r in 0..n {
        for c in 0..n {
            let mut f = m[r][c].d()?;
            for k in 0..n {
                f = f.try_add(&m[r][k].wedge(&m[k][c])?)?;
            }
            out[r][c] = co.components2(&f)?.iter().map(|j| to_f64(j.value())).collect();
        }
    }
    Ok(out)
}

/// `Φ̂ = dγ̂ + γ̂ ∧ γ̂` at the base point.
pub fn cartan_curvature<T: Real>(cm: &CartanMatrices<T>, cf: &AdaptedCoframe<T>) -> Result<Vec<Vec<Vec<f64>>>> {
    maurer_cartan_defect(&cm.gamma_hat, cf)
}

pub fn max_entry(m: &[Vec<Vec<f64>>]) -> f64 {
    m.iter().flatten().flatten().map(|x| x.abs()).fold(0.0, f64::max)
}

/// Largest `ω ∧ ω` component of a matrix of 2-form values.
pub fn max_omega_omega(m: &[Vec<Vec<f64>>]) -> f64 {
    let pairs = subsets().list(2);
    m.iter()
        .flatten()
        .flat_map(|v| v.iter().enumerate().filter(|(p, _)| is_omega_pair(&pairs[*p])).map(|(_, x)| x.abs()))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adaptation::{build_one_adapted, reduce_to_two_adapted};
    use crate::distribution::Distribution;

    fn two_adapted(d: &Distribution<f64>) -> AdaptedCoframe<f64> {
        reduce_to_two_adapted(&build_one_adapted(d).unwrap(), d).unwrap()
    }

    #[test]
    fn flat_model_connection_and_tensor() {
        let base = [0.3, -0.2, 0.5, 0.1, -0.4, 0.2];
        let d = Distribution::flat_model(base, 5).unwrap();
        let cf = two_adapted(&d);
        let red = reduce(&cf).unwrap();
        assert_eq!(red.connection.gauge_dim(), 3);
        assert!(red.connection.residual < 1e-10);
        assert!(red.tensor.max_norm() < 1e-8, "{}", red.tensor.max_norm());
        assert!(flatness_test(&red.tensor, 1e-8).unwrap());
        let cm = build_cartan_matrices(&cf, &red).unwrap();
        assert!(max_entry(&maurer_cartan_defect(&cm.gamma, &cf).unwrap()) < 1e-9);
        assert!(max_entry(&cartan_curvature(&cm, &cf).unwrap()) < 1e-9);
    }

    #[test]
    fn level_one_input_is_inconsistent() {
        let base = [0.0; 6];
        let d = Distribution::flat_model(base, 5).unwrap();
        let cf = build_one_adapted(&d).unwrap();
        let b = [[0.3, 0.1, 0.0], [0.1, -0.2, 0.4], [0.0, 0.4, 0.5]];
        let g = crate::adaptation::GroupElement::shear(b, base, cf.order());
        let bad = crate::adaptation::apply_group_element(&cf, &g).unwrap();
        let forced = AdaptedCoframe::new(
            std::array::from_fn(|i| bad.theta()[i].clone()),
            std::array::from_fn(|i| bad.omega()[i].clone()),
            2,
        )
        .unwrap();
        assert!(matches!(solve_pseudo_connection(&forced), Err(Error::Inconsistent { .. })));
    }

    #[test]
    fn perturbed_tensor_and_gauge_invariance() {
        let d = Distribution::perturbed_family(0.1, 1, [0.0; 6], 5).unwrap();
        let cf = two_adapted(&d);
        let red = reduce(&cf).unwrap();
        assert_eq!(red.connection.gauge_dim(), 3);
        assert!(red.tensor.s4_norm() > 1e-4);
        for (name, r) in red.tensor.relations() {
            assert!(r < 1e-8, "{name}: {r}");
        }
        assert!(!flatness_test(&red.tensor, 1e-8).unwrap());
        let shifted = gauge_shift(&red.connection, [1.0, -0.5, 0.25]);
        assert!(connection_residual(&shifted, &cf).unwrap() < 1e-9);
        let red2 = reduce_with_connection(&cf, shifted).unwrap();
        let scale = red.tensor.s4_norm();
        for (a, b) in red.tensor.s4.iter().zip(&red2.tensor.s4) {
            assert!((a - b).abs() < 1e-9 * scale.max(1.0));
        }
        let moved = red.connection.shift_along_gauge(&[0.3, -0.7, 0.2]);
        let red3 = reduce_with_connection(&cf, moved).unwrap();
        for (a, b) in red.tensor.s4.iter().zip(&red3.tensor.s4) {
            assert!((a - b).abs() < 1e-9 * scale.max(1.0));
        }
        let cm = build_cartan_matrices(&cf, &red).unwrap();
        let phi = cartan_curvature(&cm, &cf).unwrap();
        assert!(max_entry(&phi) > 1e-4);
        assert!(max_omega_omega(&phi) < 1e-8);
        assert!(max_entry(&maurer_cartan_defect(&cm.gamma, &cf).unwrap()) > 1e-4);
    }

    #[test]
    fn lie_algebra_dimensions_and_membership() {
        assert_eq!(orthogonal_algebra_dim(&q7()), 21);
        let gens = |layout: &Layout| -> Vec<DMatrix<f64>> {
            (0..SYMBOLS)
                .map(|s| {
                    let mut v = vec![0.0; SYMBOLS];
                    v[s] = 1.0;
                    layout_value(layout, &v)
                })
                .collect()
        };
        for (layout, q) in [(gamma_layout(), q7()), (gamma_hat_layout(), q8())] {
            for a in gens(&layout) {
                assert!((&q * &a + a.transpose() * &q).amax() < 1e-15);
            }
        }
        // the frozen Q8 spans the invariant forms of γ̂
        let null = invariant_symmetric_forms(&gens(&gamma_hat_layout()));
        assert_eq!(null.ncols(), 1);
    }
}
