use jborg::dirac::*;
use jborg::herglotz::borg_reference_m;
use jborg::linalg::{
    block2, c, eye, from_real_diag, herm_eig, herm_eigenvalues, im_part, inverse, max_abs_diff, CMat, C64,
};
use jborg::models::{random_hermitian, random_matrix};
use jborg::weyl::{weyl_m_big, Side, WeylOptions};
use jborg::{spectrum_estimate, truncate_jacobi, Extension, MatrixSeq};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn unit_pair() -> DiracCoefficients {
    validate_dirac(MatrixSeq::constant(eye(1), 0, 0), MatrixSeq::constant(eye(1), 0, 0)).unwrap()
}

fn off_axis(i: usize) -> C64 {
    let t = i as f64;
    let re = (0.3 + 0.11 * t) * if i.is_multiple_of(2) { 1.0 } else { -1.0 };
    let im = (0.5 + 0.06 * t) * if i.is_multiple_of(3) { 1.0 } else { -1.0 };
    c(re, im)
}

#[test]
fn unit_pair_spectra() {
    let d = unit_pair();
    let (h1, h2) = factorize_susy(&d);
    for k in -3..4 {
        assert_eq!(h1.a(k).unwrap(), h2.a(k).unwrap());
        assert_eq!(h1.b(k).unwrap(), h2.b(k).unwrap());
        assert_eq!(h1.a(k).unwrap()[(0, 0)], c(1.0, 0.0));
        assert_eq!(h1.b(k).unwrap()[(0, 0)], c(2.0, 0.0));
    }
    let ev = spectrum_estimate(&truncate_jacobi(&h1, 0, 399).unwrap());
    assert!(ev[0] >= -1e-12 && ev[0] < 1e-3 && (ev[399] - 4.0).abs() < 1e-3);
    let dv = truncate_dirac(&d, 0, 199, DiracBoundary::Periodic).unwrap().eigenvalues();
    assert!((dv[0] + 2.0).abs() < 1e-12 && (dv[dv.len() - 1] - 2.0).abs() < 1e-12);
}

#[test]
fn finite_level_algebra() {
    for seed in 0..3 {
        let d = random_dirac(2, seed, 3, 0.8).unwrap();
        let t = truncate_dirac(&d, -5, 34, DiracBoundary::Open).unwrap();
        let dm = t.to_dense();
        assert!(max_abs_diff(&dm, &dm.adjoint()) == 0.0);
        let e = t.e_matrix();
        let z = CMat::zeros(e.nrows(), e.ncols());
        let sq = block2(&(e.adjoint() * &e), &z, &z, &(&e * e.adjoint()));
        assert!(max_abs_diff(&(&dm * &dm), &sq) < 1e-12);
        let (h1, h2) = t.squares_from_coefficients();
        assert!(max_abs_diff(&(e.adjoint() * &e), &h1) < 1e-12);
        assert!(max_abs_diff(&(&e * e.adjoint()), &h2) < 1e-12);

        // Interior blocks of the squares are the Jacobi coefficients of H1, H2.
        let (j1, j2) = factorize_susy(&d);
        let m = 2;
        for (k, i) in [(0i64, 5usize), (7, 12)] {
            let blk = |h: &CMat, r: usize, s: usize| h.view((r * m, s * m), (m, m)).into_owned();
            assert!(max_abs_diff(&blk(&h1, i, i), j1.b(k).unwrap()) < 1e-12);
            assert!(max_abs_diff(&blk(&h1, i, i + 1), j1.a(k).unwrap()) < 1e-12);
            assert!(max_abs_diff(&blk(&h2, i, i), j2.b(k).unwrap()) < 1e-12);
            assert!(max_abs_diff(&blk(&h2, i, i + 1), j2.a(k).unwrap()) < 1e-12);
        }

        let ev = t.eigenvalues();
        let n = ev.len();
        assert!((0..n).all(|i| (ev[i] + ev[n - 1 - i]).abs() < 1e-12));
    }
}

#[test]
fn susy_pairing() {
    let d = random_dirac(2, 4, 3, 0.7).unwrap();
    let t = truncate_dirac(&d, 0, 39, DiracBoundary::Open).unwrap();
    let e = t.e_matrix();
    let (w1, v1) = herm_eig(&(e.adjoint() * &e));
    let (w2, v2) = herm_eig(&(&e * e.adjoint()));
    let mut worst: f64 = 0.0;
    for (w, v, which) in [(&w1, &v1, SquareComponent::Upper), (&w2, &v2, SquareComponent::Lower)] {
        for (i, &lam) in w.iter().enumerate() {
            if lam <= 1e-10 {
                continue;
            }
            let u = v.column(i).into_owned();
            let u = CMat::from_column_slice(u.nrows(), 1, u.as_slice());
            for z in [lam.sqrt(), -lam.sqrt()] {
                let (stacked, r) = susy_eigen_map(&e, &u, z, which).unwrap();
                assert_eq!(stacked.nrows(), 2 * u.nrows());
                worst = worst.max(r);
            }
        }
    }
    assert!(worst <= 1e-10, "{worst}");
    // Nonzero eigenvalues of E*E and EE* coincide with multiplicity.
    assert!(w1.iter().zip(&w2).all(|(a, b)| (a - b).abs() < 1e-10));
    assert!(matches!(
        susy_eigen_map(&e, &CMat::zeros(e.nrows(), 1), 0.0, SquareComponent::Upper),
        Err(jborg::Error::ZeroEnergy)
    ));
}

#[test]
fn routes_agree_off_axis() {
    let opts = WeylOptions::default();
    let unit = unit_pair();
    let w = dirac_weyl(&unit, c(1.0, 1.0), 0, Side::Plus, DiracRoute::H1, &opts).unwrap();
    assert!(w.cross_route.unwrap() < 1e-9);
    for seed in [1, 2] {
        let d = random_dirac(2, seed, 3, 0.6).unwrap();
        for i in 0..20 {
            for side in [Side::Plus, Side::Minus] {
                let w = dirac_weyl(&d, off_axis(i), i as i64 % 4 - 1, side, DiracRoute::H2, &opts).unwrap();
                assert!(w.cross_route.unwrap() <= 1e-8, "{:?}", w.cross_route);
            }
        }
    }
}

#[test]
fn family_member_weyl_closed_form() {
    let (em, ep) = (1.0, 4.0);
    let member = borg_family(em, ep, &[1]).unwrap();
    let d = member.coefficients().unwrap();
    let r = member.rho_value[0];
    let opts = WeylOptions::default();
    for z in [c(0.5, 1.0), c(-1.5, 0.7), c(2.5, -0.6)] {
        for side in [Side::Plus, Side::Minus] {
            let mh = borg_reference_m(z * z, em, ep, side, 1).unwrap()[(0, 0)];
            let want = (mh / r - r) / z;
            let got = dirac_weyl(&d, z, 3, side, DiracRoute::H1, &opts).unwrap().value[(0, 0)];
            assert!((got - want).norm() < 1e-9);
        }
    }
}

#[test]
fn dirac_weyl_matrix() {
    let d = random_dirac(2, 9, 2, 0.5).unwrap();
    let opts = WeylOptions::default();
    for i in 0..20 {
        let z = c(off_axis(i).re, off_axis(i).im.abs());
        let bw = dirac_big_weyl(&d, z, 1, &opts).unwrap();
        assert!(herm_eigenvalues(&im_part(&bw.to_matrix()))[0] >= -1e-9);
        let p = dirac_weyl(&d, z, 1, Side::Plus, DiracRoute::H1, &opts).unwrap().value;
        let m = dirac_weyl(&d, z, 1, Side::Minus, DiracRoute::H1, &opts).unwrap().value;
        assert!(max_abs_diff(&bw.m11, &inverse(&(m - p)).unwrap()) < 1e-9);
        // ρ is scalar here, so ρ^{1/2} commutes with everything.
        let r = d.rho(1).unwrap()[(0, 0)].re;
        let hp = weyl_m_big(d.h1(), z * z, 1, Side::Plus, &opts).unwrap().value;
        let hm = weyl_m_big(d.h1(), z * z, 1, Side::Minus, &opts).unwrap().value;
        let want = inverse(&(hm - hp)).unwrap() * (z * r);
        assert!(max_abs_diff(&bw.m11, &want) < 1e-9);
    }
}

#[test]
fn family_members() {
    let collapsed = borg_family_all(0.0, 4.0, 3).unwrap();
    assert_eq!(collapsed.len(), 8);
    assert!(collapsed.iter().all(|f| f.rho_value == vec![1.0; 3] && f.chi_value == vec![1.0; 3]));

    let plus = borg_family(1.0, 4.0, &[1]).unwrap();
    assert_eq!((plus.rho_value[0], plus.chi_value[0]), (0.5, 1.5));
    let minus = borg_family(1.0, 4.0, &[-1]).unwrap();
    assert_eq!((minus.rho_value[0], minus.chi_value[0]), (1.5, 0.5));

    for f in borg_family_all(1.0, 4.0, 2).unwrap() {
        let d = f.coefficients().unwrap();
        let (h1, h2) = factorize_susy(&d);
        for h in [&h1, &h2] {
            assert!(max_abs_diff(h.a(0).unwrap(), &(eye(2) * c(0.75, 0.0))) < 1e-14);
            assert!(max_abs_diff(h.b(0).unwrap(), &(eye(2) * c(2.5, 0.0))) < 1e-14);
        }
        let ev = truncate_dirac(&d, 0, 99, DiracBoundary::Periodic).unwrap().eigenvalues();
        assert!(ev.iter().all(|x| x.abs() >= 1.0 - 1e-9 && x.abs() <= 2.0 + 1e-9));
    }
    assert!(matches!(borg_family(-1.0, 4.0, &[1]), Err(jborg::Error::BadInterval(_))));
    assert!(matches!(borg_family(2.0, 2.0, &[1]), Err(jborg::Error::BadInterval(_))));
    assert!(borg_family(1.0, 4.0, &[0]).is_err());
}

#[test]
fn normal_form_conjugation() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let n = 30;
    let rho: Vec<CMat> = (0..n).map(|_| random_hermitian(&mut rng, 2, 1.0) + from_real_diag(&[0.05, -0.05])).collect();
    let chi: Vec<CMat> = (0..n).map(|_| eye(2) * c(1.5, 0.0) + random_matrix(&mut rng, 2) * c(0.3, 0.0)).collect();
    let rho = MatrixSeq::new(0, rho, Extension::Forbidden).unwrap();
    let chi = MatrixSeq::new(0, chi, Extension::Forbidden).unwrap();
    let nf = normal_form(&rho, &chi).unwrap();
    for k in 0..n as i64 {
        let u = nf.u.at(k).unwrap();
        assert!(max_abs_diff(&(u * u.adjoint()), &eye(4)) < 1e-12);
        let r = nf.rho_hat.at(k).unwrap();
        assert!(jborg::linalg::is_diagonal(r, 0.0) && (0..2).all(|i| r[(i, i)].re > 0.0));
    }
    let before = truncate_pair(&rho, &chi, 1, n as i64 - 1, DiracBoundary::Open).unwrap().eigenvalues();
    let after = truncate_pair(&nf.rho_hat, &nf.chi_hat, 1, n as i64 - 1, DiracBoundary::Open).unwrap().eigenvalues();
    assert!(before.iter().zip(&after).all(|(a, b)| (a - b).abs() < 1e-10));

    // Already in normal form: nothing changes.
    let d = random_dirac(2, 3, 4, 0.5).unwrap();
    let rho = MatrixSeq::new(0, (0..6).map(|k| d.rho(k).unwrap().clone()).collect(), Extension::Forbidden).unwrap();
    let chi = MatrixSeq::new(0, (0..6).map(|k| d.chi(k).unwrap().clone()).collect(), Extension::Forbidden).unwrap();
    let nf = normal_form(&rho, &chi).unwrap();
    for k in 1..6 {
        assert!(max_abs_diff(nf.rho_hat.at(k).unwrap(), rho.at(k).unwrap()) < 1e-14);
        assert!(max_abs_diff(nf.chi_hat.at(k).unwrap(), chi.at(k).unwrap()) < 1e-14);
    }
    let singular = MatrixSeq::new(0, vec![from_real_diag(&[1.0, 0.0])], Extension::Forbidden).unwrap();
    let one = MatrixSeq::new(0, vec![eye(2)], Extension::Forbidden).unwrap();
    assert!(matches!(normal_form(&singular, &one), Err(jborg::Error::SingularRho(0))));
}
