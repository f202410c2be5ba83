use jborg::herglotz::{xi_grid, XiGrid, XiTarget};
use jborg::linalg::{c, eye, max_abs_diff, CMat};
use jborg::models::{free, random_jacobi, random_matrix};
use jborg::quadrature::uniform_grid;
use jborg::series::*;
use jborg::weyl::{Side, WeylOptions};
use jborg::{truncate_jacobi, JacobiCoefficients};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn random_series(seed: u64, m: usize, valuation: i64, order: i64) -> MatrixSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeffs = (valuation..=order)
        .map(|i| {
            if i == valuation {
                eye(m) * c(2.0, 0.5) + random_matrix(&mut rng, m) * c(0.3, 0.0)
            } else {
                random_matrix(&mut rng, m)
            }
        })
        .collect();
    MatrixSeries::new(valuation, coeffs)
}

fn agree(a: &MatrixSeries, b: &MatrixSeries, lo: i64, hi: i64, tol: f64) -> bool {
    (lo..=hi).all(|n| max_abs_diff(&a.coeff(n), &b.coeff(n)) <= tol)
}

/// `(H^p)(k,k)` of a truncation wide enough to be exact.
fn moment(cf: &JacobiCoefficients, lo: i64, hi: i64, k: i64, p: usize) -> CMat {
    let h = truncate_jacobi(cf, lo, hi).unwrap().to_dense();
    let m = cf.dim();
    let mut x = CMat::identity(h.nrows(), h.nrows());
    for _ in 0..p {
        x = &h * x;
    }
    let o = (k - lo) as usize * m;
    x.view((o, o), (m, m)).into_owned()
}

#[test]
fn leading_constants() {
    let cf = random_jacobi(2, 31, 0.9, -6, 6).unwrap();
    let k = 1;
    let (a, am, b) = (cf.a(k).unwrap(), cf.a(k - 1).unwrap(), cf.b(k).unwrap());
    let mp = m_series(&cf, k, Side::Plus, 3).unwrap();
    assert!(max_abs_diff(&mp.coeff(1), &-eye(2)) < 1e-15);
    assert!(max_abs_diff(&mp.coeff(2), &-b.clone()) < 1e-15);
    assert!(max_abs_diff(&mp.coeff(3), &-(b * b + a * a)) < 1e-13);
    let mm = m_series(&cf, k, Side::Minus, 3).unwrap();
    assert!(max_abs_diff(&mm.coeff(3), &-(b * b + am * am)) < 1e-13);

    let big_p = M_series(&cf, k, Side::Plus, 2).unwrap();
    assert!(max_abs_diff(&big_p.coeff(1), &-(a * a)) < 1e-14);
    assert!(max_abs_diff(&big_p.coeff(2), &-(a * cf.b(k + 1).unwrap() * a)) < 1e-13);
    let big_m = M_series(&cf, k, Side::Minus, 2).unwrap();
    assert!(max_abs_diff(&big_m.coeff(-1), &-eye(2)) == 0.0);
    assert!(max_abs_diff(&big_m.coeff(0), b) < 1e-15);
    assert!(max_abs_diff(&big_m.coeff(1), &(am * am)) < 1e-14);
    assert!(max_abs_diff(&big_m.coeff(2), &(am * cf.b(k - 1).unwrap() * am)) < 1e-13);

    let g = g_series(&cf, k, 4).unwrap();
    assert!(max_abs_diff(&g.coeff(1), &-eye(2)) < 1e-15);
    assert!(max_abs_diff(&g.coeff(2), &-b.clone()) < 1e-14);
    assert!(max_abs_diff(&g.coeff(3), &-(am * am + a * a + b * b)) < 1e-13);

    let s = s_series(&cf, k, 3).unwrap();
    assert!(max_abs_diff(&s.coeff(1), &eye(2)) < 1e-15);
    assert!(max_abs_diff(&s.coeff(2), b) < 1e-13);
    let s3 = am * am * c(2.0, 0.0) + a * a * c(2.0, 0.0) + b * b;
    assert!(max_abs_diff(&s.coeff(3), &s3) < 1e-12);
}

#[test]
fn moments_match_truncated_powers() {
    for seed in 0..4 {
        let cf = random_jacobi(2, seed, 0.8, -10, 10).unwrap();
        let k = 0;
        let j = 8;
        let mp = m_series(&cf, k, Side::Plus, j).unwrap();
        let mm = m_series(&cf, k, Side::Minus, j).unwrap();
        let g = g_series(&cf, k, j).unwrap();
        for n in 1..=j {
            let p = n - 1;
            let w = p as i64 + 2;
            assert!(max_abs_diff(&mp.coeff(n as i64), &-moment(&cf, k, k + w, k, p)) < 1e-10);
            assert!(max_abs_diff(&mm.coeff(n as i64), &-moment(&cf, k - w, k, k, p)) < 1e-10);
            assert!(max_abs_diff(&g.coeff(n as i64), &-moment(&cf, k - w, k + w, k, p)) < 1e-10);
        }
    }
}

#[test]
fn big_m_from_small_m() {
    let cf = random_jacobi(2, 12, 0.7, -5, 5).unwrap();
    let k = 2;
    let j = 7;
    let small = m_series(&cf, k, Side::Plus, j + 2).unwrap();
    // M+ = -m+^{-1} - z + B(k)
    let inv = small.inverse().unwrap();
    let poly = MatrixSeries::polynomial(-1, vec![-eye(2), cf.b(k).unwrap().clone()], inv.order());
    let via = inv.scale(c(-1.0, 0.0)).add(&poly);
    let direct = M_series(&cf, k, Side::Plus, j).unwrap();
    assert_eq!(via.order(), j as i64);
    assert!(agree(&via, &direct, -1, j as i64, 1e-10));
}

#[test]
fn order_limits() {
    let cf = free(1);
    assert!(m_series(&cf, 0, Side::Plus, 0).is_err());
    assert!(g_series(&cf, 0, MAX_ORDER + 1).is_err());
    let narrow = random_jacobi(1, 1, 0.5, 0, 2).unwrap();
    assert!(m_series(&narrow, 0, Side::Plus, 6).is_ok());
}

#[test]
fn trace_right_hand_side() {
    let grid =
        |values: Vec<CMat>, lambdas: Vec<f64>| XiGrid { k: 0, lambdas, values, epsilon: 1e-3, target: XiTarget::XiOfG };
    let l = uniform_grid(-1.0, 3.0, 101);
    let half = grid(vec![eye(2) * c(0.5, 0.0); 101], l.clone());
    assert!(max_abs_diff(&trace_rhs(1, &half, -1.0, 3.0).unwrap(), &eye(2)) < 1e-14);
    assert!(max_abs_diff(&trace_rhs(2, &half, -1.0, 3.0).unwrap(), &eye(2)) < 1e-12);
    let short = grid(vec![eye(1); 9], uniform_grid(0.0, 1.0, 9));
    assert!(matches!(trace_rhs(2, &short, 0.0, 1.0), Err(jborg::Error::GridTooCoarse { .. })));

    let opts = WeylOptions::default();
    let lambdas = uniform_grid(-2.0, 2.0, 2001);
    let xi = xi_grid(&free(1), 0, &lambdas, 1e-3, XiTarget::XiOfG, &opts).unwrap();
    assert!(trace_rhs(2, &xi, -2.0, 2.0).unwrap()[(0, 0)].norm() < 2e-2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]
    #[test]
    fn inverse_is_two_sided(seed in 0u64..10_000, m in 1usize..4, v in -2i64..3, len in 1i64..8) {
        let s = random_series(seed, m, v, v + len);
        let inv = s.inverse().unwrap();
        let id = MatrixSeries::identity(m, len);
        prop_assert!(agree(&s.mul(&inv), &id, 0, len, 1e-9));
        prop_assert!(agree(&inv.mul(&s), &id, 0, len, 1e-9));
    }

    #[test]
    fn product_rule(seed in 0u64..10_000, m in 1usize..4, v in -1i64..3, w in -1i64..3) {
        let s = random_series(seed, m, v, v + 6);
        let t = random_series(seed + 1, m, w, w + 6);
        let lhs = s.mul(&t).derivative();
        let rhs = s.derivative().mul(&t).add(&s.mul(&t.derivative()));
        let hi = lhs.order().min(rhs.order());
        prop_assert!(agree(&lhs, &rhs, v + w, hi, 1e-10));
    }
}
