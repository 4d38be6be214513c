//! Dense linear algebra: SVD-based least squares with explicit rank and
//! nullspace, plus inversion of small matrices whose entries are jets.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::jet::{Jet, DIM};
use crate::scalar::{lit, Real};

/// Relative singular-value threshold used for every rank decision.
pub const RANK_RTOL: f64 = 1e-10;

/// Pseudo-inverse of a (possibly rank-deficient) matrix together with its
/// numerical rank and an orthonormal nullspace basis.
#[derive(Clone, Debug)]
pub struct PseudoInverse<T: Real> {
    pub pinv: DMatrix<T>,
    pub rank: usize,
    /// Columns span the nullspace of the original matrix.
    pub nullspace: DMatrix<T>,
    pub singular_values: Vec<T>,
}

/// SVD of `a` with full right singular basis (rows are zero-padded when
/// `a` is wide, so the nullspace is always available).
pub fn pseudo_inverse<T: Real>(a: &DMatrix<T>, rtol: f64) -> PseudoInverse<T> {
    let (m, n) = a.shape();
    let padded = if m < n {
        let mut p = DMatrix::zeros(n, n);
        p.view_mut((0, 0), (m, n)).copy_from(a);
        p
    } else {
        a.clone()
    };
    let svd = padded.svd(true, true);
    let u = svd.u.expect("u requested");
    let vt = svd.v_t.expect("v_t requested");
    let sv: Vec<T> = svd.singular_values.iter().copied().collect();
    let smax = sv.iter().fold(T::zero(), |acc, s| acc.max(*s));
    let cut = smax * lit::<T>(rtol);
    let rows_u = u.nrows();
    let mut pinv = DMatrix::zeros(n, rows_u);
    let mut rank = 0;
    let mut null_cols = Vec::new();
    for (k, s) in sv.iter().enumerate() {
        if *s > cut && *s > T::zero() {
            rank += 1;
            let vk = vt.row(k).transpose();
            let uk = u.column(k);
            pinv += (vk * uk.transpose()) / *s;
        } else {
            null_cols.push(vt.row(k).transpose());
        }
    }
    // Thin SVD of a square/tall matrix yields exactly n right vectors.
    let nullspace = if null_cols.is_empty() {
        DMatrix::zeros(n, 0)
    } else {
        DMatrix::from_columns(&null_cols)
    };
    let pinv = pinv.columns(0, m).into_owned();
    PseudoInverse {
        pinv,
        rank,
        nullspace,
        singular_values: sv,
    }
}

pub fn singular_values<T: Real>(a: &DMatrix<T>) -> Vec<T> {
    let mut sv: Vec<T> = a.clone().svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|x, y| y.partial_cmp(x).unwrap());
    sv
}

/// Numerical rank with a relative threshold and an absolute floor.
pub fn numerical_rank<T: Real>(a: &DMatrix<T>, rtol: f64, atol: f64) -> usize {
    let sv = singular_values(a);
    let smax = sv.first().copied().unwrap_or(T::zero());
    let cut = (smax * lit::<T>(rtol)).max(lit(atol));
    sv.iter().filter(|s| **s > cut).count()
}

/// Square matrix with jet entries, row-major.
pub type JetMatrix<T> = Vec<Vec<Jet<T>>>;

pub fn jet_matrix_value<T: Real>(m: &JetMatrix<T>) -> DMatrix<T> {
    let n = m.len();
    DMatrix::from_fn(n, m[0].len(), |i, j| m[i][j].value())
}

pub fn jet_matrix_mul<T: Real>(a: &JetMatrix<T>, b: &JetMatrix<T>) -> JetMatrix<T> {
    let n = a.len();
    let k = b.len();
    let p = b[0].len();
    (0..n)
        .map(|i| {
            (0..p)
                .map(|j| {
                    let mut acc = &a[i][0] * &b[0][j];
                    for l in 1..k {
                        acc += &(&a[i][l] * &b[l][j]);
                    }
                    acc
                })
                .collect()
        })
        .collect()
}

fn constant_matrix<T: Real>(m: &DMatrix<T>, base: [T; DIM], order: usize) -> JetMatrix<T> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| Jet::constant(m[(i, j)], base, order)).collect())
        .collect()
}

/// Inverse of a jet-valued square matrix by Newton–Schulz iteration
/// `X <- X (2I - M X)`, which doubles the valid order at each step.
pub fn jet_matrix_inverse<T: Real>(m: &JetMatrix<T>) -> Result<JetMatrix<T>> {
    let n = m.len();
    let base = *m[0][0].base_point();
    let order = m.iter().flatten().map(|j| j.order()).min().unwrap();
    let m0 = jet_matrix_value(m);
    let sv = singular_values(&m0);
    let smax = sv[0];
    if sv[n - 1] <= smax * lit::<T>(1e-13) || smax == T::zero() {
        return Err(Error::Singular("jet matrix inverse"));
    }
    let inv0 = m0.try_inverse().ok_or(Error::Singular("jet matrix inverse"))?;
    let mut x = constant_matrix(&inv0, base, order);
    let two_i = constant_matrix(&(DMatrix::<T>::identity(n, n) * lit::<T>(2.0)), base, order);
    let mut valid = 0usize;
    while valid < order {
        let mx = jet_matrix_mul(m, &x);
        let corr: JetMatrix<T> = (0..n)
            .map(|i| (0..n).map(|j| &two_i[i][j] - &mx[i][j]).collect())
            .collect();
        x = jet_matrix_mul(&x, &corr);
        valid = 2 * valid + 1;
    }
    Ok(x)
}

/// Determinant of a 3x3 real matrix stored row-major.
pub fn det3<T: Real>(a: &[[T; 3]; 3]) -> T {
    a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pinv_of_rank_deficient_wide_matrix() {
        let a = DMatrix::from_row_slice(2, 3, &[1.0, 1.0, 0.0, 2.0, 2.0, 0.0]);
        let p = pseudo_inverse(&a, RANK_RTOL);
        assert_eq!(p.rank, 1);
        assert_eq!(p.nullspace.ncols(), 2);
        for c in 0..2 {
            assert!((&a * p.nullspace.column(c)).norm() < 1e-12);
        }
        // Moore–Penrose identity A A+ A = A
        assert!((&a * &p.pinv * &a - &a).norm() < 1e-12);
    }

    #[test]
    fn min_norm_solution() {
        let a = DMatrix::<f64>::from_row_slice(1, 2, &[1.0, 1.0]);
        let p = pseudo_inverse(&a, RANK_RTOL);
        let x = &p.pinv * nalgebra::DVector::from_vec(vec![2.0]);
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn jet_matrix_inverse_round_trip() {
        let base = [0.1, 0.2, -0.3, 0.0, 0.5, 0.0];
        let order = 4;
        let x = |a| Jet::coordinate(a, base, order);
        let m: JetMatrix<f64> = vec![
            vec![&Jet::constant(2.0, base, order) + &x(0), &x(1) * &x(2)],
            vec![x(3), &Jet::constant(1.0, base, order) + &(&x(4) * &x(4))],
        ];
        let inv = jet_matrix_inverse(&m).unwrap();
        let prod = jet_matrix_mul(&m, &inv);
        for i in 0..2 {
            for j in 0..2 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((&prod[i][j] - &Jet::constant(want, base, order)).max_abs() < 1e-13);
            }
        }
    }

    #[test]
    fn singular_jet_matrix_rejected() {
        let base = [0.0; 6];
        let m: JetMatrix<f64> = vec![
            vec![Jet::coordinate(0, base, 2), Jet::constant(0.0, base, 2)],
            vec![Jet::constant(0.0, base, 2), Jet::constant(1.0, base, 2)],
        ];
        assert!(jet_matrix_inverse(&m).is_err());
    }
}
