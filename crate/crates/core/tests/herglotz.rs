use jborg::herglotz::*;
use jborg::linalg::{c, eye, from_real_rows, max_abs_diff, CMat};
use jborg::models::{borg_jacobi, free, random_jacobi};
use jborg::quadrature::uniform_grid;
use jborg::weyl::{diagonal_green, greens_full, Side, WeylOptions};
use jborg::{validate_jacobi, Extension, MatrixSeq};

#[test]
fn free_xi_values() {
    let opts = WeylOptions::default();
    let x0 = xi(&free(1), 0, 0.0, 1e-6, &opts).unwrap()[(0, 0)].re;
    assert!((x0 - 0.5).abs() < 1e-6);
    assert!((xi(&free(1), 0, 3.0, 1e-6, &opts).unwrap()[(0, 0)].re - 1.0).abs() < 1e-6);
    assert!(xi(&free(1), 0, -3.0, 1e-6, &opts).unwrap()[(0, 0)].re.abs() < 1e-6);
}

#[test]
fn borg_plateau_and_bounds() {
    let (em, ep) = (-1.0, 3.0);
    let cf = borg_jacobi(em, ep, 2).unwrap();
    let opts = WeylOptions::default();
    let lambdas = uniform_grid(em - 1.0, ep + 1.0, 401);
    for k in [-3, 0, 5] {
        let g = xi_grid(&cf, k, &lambdas, 1e-3, XiTarget::XiOfG, &opts).unwrap();
        assert!(g.bounds_violation() <= 1e-6);
        assert!(g.max_deviation_from_half(em + 0.4, ep - 0.4) <= 2e-2);
        for (l, x) in g.lambdas.iter().zip(&g.values) {
            if *l < em - 5e-3 {
                assert!(max_abs_diff(x, &CMat::zeros(2, 2)) < 5e-2);
            } else if *l > ep + 5e-3 {
                assert!(max_abs_diff(x, &eye(2)) < 5e-2);
            }
        }
    }
    for target in [XiTarget::XiPM(Side::Plus), XiTarget::XiPM(Side::Minus), XiTarget::UpsilonBig] {
        let g = xi_grid(&cf, 0, &lambdas, 1e-3, target, &opts).unwrap();
        assert!(g.bounds_violation() <= 1e-6, "{target:?}");
    }
}

#[test]
fn reflectionless_verdicts() {
    let opts = WeylOptions::default();
    let borg = borg_jacobi(-1.0, 3.0, 2).unwrap();
    let r = reflectionless_check(&borg, -1.0, 3.0, &[0, 1, 2], 1e-3, 2e-2, 101, &opts).unwrap();
    assert!(r.verdict, "{r:?}");
    assert!(reflectionless_check(&free(1), -2.0, 2.0, &[0], 1e-3, 2e-2, 101, &opts).unwrap().verdict);

    // A single bump in the middle of the Borg coefficients opens reflection.
    let mut b: Vec<CMat> = vec![eye(2); 5];
    b[2] = from_real_rows(2, &[1.6, 0.3, 0.3, 0.7]);
    let bumped =
        validate_jacobi(MatrixSeq::constant(eye(2), 0, 0), MatrixSeq::new(-2, b, Extension::ConstantTail).unwrap())
            .unwrap();
    let r = reflectionless_check(&bumped, -1.0, 3.0, &[0], 1e-3, 2e-2, 101, &opts).unwrap();
    assert!(!r.verdict, "{r:?}");
}

#[test]
fn reference_functions() {
    let g = borg_reference_g(c(0.0, 2.0), -2.0, 2.0, 1).unwrap()[(0, 0)];
    assert!((g - c(0.0, 1.0 / (2.0 * 2f64.sqrt()))).norm() < 1e-15);
    let z = c(1e4, 3e3);
    let far = borg_reference_g(z, -1.0, 3.0, 2).unwrap() * -z;
    assert!(max_abs_diff(&far, &eye(2)) < 1e-3);
    for z in [c(0.3, 0.4), c(-5.0, -1.0), c(2.0, 7.0)] {
        let s = borg_reference_m(z, -1.0, 3.0, Side::Plus, 2).unwrap()
            + borg_reference_m(z, -1.0, 3.0, Side::Minus, 2).unwrap();
        assert!(max_abs_diff(&s, &(eye(2) * (-z + 1.0))) < 1e-14);
    }
    assert!(matches!(borg_reference_g(c(0.5, 0.0), -1.0, 3.0, 1), Err(jborg::Error::OnCut { .. })));
    assert!((gamma_density(1.0, -1.0, 3.0) - 2.0 / std::f64::consts::PI).abs() < 1e-15);
}

#[test]
fn stieltjes_inversion() {
    let opts = WeylOptions::default();
    let free1 = free(1);
    let plus = |z| jborg::weyl::weyl_m_big(&free1, z, 0, Side::Plus, &opts).map(|v| v.value);
    let mu = stieltjes_measure(plus, (-2.0, 2.0), 10_001, 1e-4).unwrap();
    assert!((mu.total_mass()[(0, 0)].re - 1.0).abs() < 1e-2);
    let (l, d) = &mu.density.as_ref().unwrap()[5000];
    assert!((d[(0, 0)].re - (4.0 - l * l).sqrt() / (2.0 * std::f64::consts::PI)).abs() < 1e-3);

    // Constant coefficients: both half-line measures are ½dΓ.
    let (em, ep) = (-1.0, 3.0);
    let cf = borg_jacobi(em, ep, 2).unwrap();
    for side in [Side::Plus, Side::Minus] {
        let sgn = if side == Side::Plus { 1.0 } else { -1.0 };
        let f = |z| jborg::weyl::weyl_m_big(&cf, z, 0, side, &opts).map(|v| v.value * c(sgn, 0.0));
        let mu = stieltjes_measure(f, (em, ep), 801, 1e-5).unwrap();
        for (l, d) in mu.density.unwrap().iter().skip(40).step_by(40).take(18) {
            let want = 0.5 * gamma_density(*l, em, ep);
            assert!(max_abs_diff(d, &(eye(2) * c(want, 0.0))) < 1e-3, "{l}");
        }
    }

    let zero = stieltjes_measure(|_| Ok(from_real_rows(1, &[2.5])), (0.0, 1.0), 32, 1e-3).unwrap();
    assert!(zero.total_mass()[(0, 0)].norm() == 0.0);
    assert!(stieltjes_measure(|_| Ok(eye(1)), (0.0, 1.0), 8, 1e-3).is_err());
}

#[test]
fn green_routes_agree_near_axis() {
    let cf = random_jacobi(2, 6, 0.7, -4, 4).unwrap();
    let opts = WeylOptions::default();
    for l in [-1.5, 0.2, 1.9] {
        let z = c(l, 1e-3);
        let a = diagonal_green(&cf, z, 1, &opts).unwrap();
        let b = greens_full(&cf, z, 1, 1, &opts).unwrap();
        assert!(max_abs_diff(&a, &b) < 1e-9);
    }
}
