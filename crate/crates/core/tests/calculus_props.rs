use proptest::prelude::*;
use triplane::combinatorics::subsets;
use triplane::distribution::random_cubic_diffeo;
use triplane::exterior::{JetMap, KForm, VectorField};
use triplane::jet::{monomials, Jet, DIM};

const ORDER: usize = 4;

fn jet(coeffs: &[f64], base: [f64; DIM]) -> Jet<f64> {
    let mut j = Jet::zero(base, ORDER);
    for (m, c) in monomials(ORDER).iter().zip(coeffs) {
        j.set_coeff(m, *c);
    }
    j
}

fn jets(n: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-1.0..1.0f64, monomials(ORDER).len()), n)
}

fn base() -> impl Strategy<Value = [f64; DIM]> {
    prop::array::uniform6(-1.0..1.0f64)
}

fn form(degree: usize, c: &[Vec<f64>], b: [f64; DIM]) -> KForm<f64> {
    KForm::from_coeffs(degree, c.iter().map(|v| jet(v, b)).collect()).unwrap()
}

fn field(c: &[Vec<f64>], b: [f64; DIM]) -> VectorField<f64> {
    VectorField::from_components(c.iter().map(|v| jet(v, b)).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn d_squared_vanishes(degree in 0usize..5, c in jets(20), b in base()) {
        let f = form(degree, &c[..subsets().count(degree)], b);
        let dd = f.d().unwrap().d().unwrap();
        prop_assert!(dd.max_abs() <= 1e-12 * f.max_abs().max(1.0));
    }

    #[test]
    fn leibniz_rule(p in 0usize..3, q in 0usize..3, a in jets(15), c in jets(15), b in base()) {
        let f = form(p, &a[..subsets().count(p)], b);
        let g = form(q, &c[..subsets().count(q)], b);
        let lhs = f.wedge(&g).unwrap().d().unwrap();
        let sign = if p % 2 == 0 { 1.0 } else { -1.0 };
        let rhs = f.d().unwrap().wedge(&g).unwrap()
            .try_add(&f.wedge(&g.d().unwrap()).unwrap().scale(sign)).unwrap();
        let err = lhs.truncate(ORDER - 2).try_sub(&rhs.truncate(ORDER - 2)).unwrap().max_abs();
        prop_assert!(err <= 1e-10 * (1.0 + rhs.max_abs()), "err {err}");
    }

    #[test]
    fn jacobi_identity(c in jets(18), b in base()) {
        let (x, y, z) = (field(&c[0..6], b), field(&c[6..12], b), field(&c[12..18], b));
        let t = x.bracket(&y.bracket(&z).unwrap()).unwrap()
            .try_add(&y.bracket(&z.bracket(&x).unwrap()).unwrap()).unwrap()
            .try_add(&z.bracket(&x.bracket(&y).unwrap()).unwrap()).unwrap();
        prop_assert!(t.max_abs() <= 1e-12 * x.max_abs() * y.max_abs() * z.max_abs());
    }

    #[test]
    fn inversion_round_trip(seed in 0u64..10_000, size in 0.0..0.4f64, b in base()) {
        let phi = random_cubic_diffeo(seed, size, b, 6).unwrap();
        let psi = phi.invert().unwrap();
        let round = psi.compose(&phi).unwrap();
        for (r, id) in round.comps().iter().zip(JetMap::identity(b, 6).comps()) {
            prop_assert!(r.try_sub(id).unwrap().max_abs() < 1e-10);
        }
    }
}
