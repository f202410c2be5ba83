use jborg::linalg::{c, eye, from_real_rows, hermitian_defect, max_abs_diff, zeros, CMat};
use jborg::models::{borg_jacobi, free, random_jacobi};
use jborg::weyl::fundamental_solutions;
use jborg::{spectrum_estimate, truncate_jacobi, validate_jacobi, wronskian, Error, Extension, MatrixSeq};
use proptest::prelude::*;

#[test]
fn validation_examples() {
    let ok = validate_jacobi(MatrixSeq::constant(eye(2), 0, 0), MatrixSeq::constant(zeros(2), 0, 0)).unwrap();
    assert!((ok.bound() - 1.0).abs() < 1e-15);

    let a = MatrixSeq::new(0, vec![from_real_rows(2, &[1.0, 0.0, 0.0, 0.0])], Extension::ConstantTail).unwrap();
    let err = validate_jacobi(a, MatrixSeq::constant(zeros(2), 0, 0)).unwrap_err();
    assert_eq!(err, Error::NotPositiveDefinite(0));

    let b = MatrixSeq::new(0, vec![from_real_rows(2, &[0.0, 1.0, 0.0, 0.0])], Extension::ConstantTail).unwrap();
    let err = validate_jacobi(MatrixSeq::constant(eye(2), 0, 0), b).unwrap_err();
    assert_eq!(err, Error::NotHermitian(0));

    let err = validate_jacobi(MatrixSeq::constant(eye(2), 0, 0), MatrixSeq::constant(zeros(3), 0, 0)).unwrap_err();
    assert!(matches!(err, Error::DimensionMismatch { .. }));
}

#[test]
fn path_graph_spectrum() {
    let t = truncate_jacobi(&free(1), 0, 4).unwrap();
    let ev = spectrum_estimate(&t);
    let want = [-3f64.sqrt(), -1.0, 0.0, 1.0, 3f64.sqrt()];
    for (a, b) in ev.iter().zip(want) {
        assert!((a - b).abs() < 1e-13, "{ev:?}");
    }
    let one = truncate_jacobi(&free(2), 3, 3).unwrap();
    assert_eq!(one.to_dense(), zeros(2));
}

#[test]
fn long_truncations() {
    let ev = spectrum_estimate(&truncate_jacobi(&free(1), 0, 1999).unwrap());
    assert!((ev[0] + 2.0).abs() < 1e-3 && (ev[1999] - 2.0).abs() < 1e-3);

    let b = MatrixSeq::constant(eye(2) * c(5.0, 0.0), 0, 0);
    let a = MatrixSeq::constant(eye(2) * c(1e-6, 0.0), 0, 0);
    let clustered = validate_jacobi(a, b).unwrap();
    let ev = spectrum_estimate(&truncate_jacobi(&clustered, 0, 49).unwrap());
    assert!(ev.iter().all(|x| (x - 5.0).abs() <= 3e-6));

    let ev = spectrum_estimate(&truncate_jacobi(&borg_jacobi(-1.0, 3.0, 2).unwrap(), 0, 999).unwrap());
    assert!(ev[0] >= -1.0 - 1e-8 && *ev.last().unwrap() <= 3.0 + 1e-8);
}

#[test]
fn random_truncation_is_hermitian() {
    let cf = random_jacobi(2, 5, 0.9, -4, 4).unwrap();
    let t = truncate_jacobi(&cf, -6, 6).unwrap();
    assert!(hermitian_defect(&t.to_dense()) <= 1e-14);
}

#[test]
fn wronskian_constancy_and_initial_value() {
    let cf = random_jacobi(2, 9, 0.7, -10, 10).unwrap();
    let z = c(0.4, 0.1);
    let k0 = 0;
    let fz = fundamental_solutions(&cf, z, k0, -60, 60).unwrap();
    let fzb = fundamental_solutions(&cf, z.conj(), k0, -60, 60).unwrap();
    let (lo, hi) = fz.range();
    let theta_bar = fzb.theta.map(|_, x| x.adjoint());
    let a = cf.a_seq();
    let w0 = wronskian(&theta_bar, &fz.phi, a, k0).unwrap();
    assert!(max_abs_diff(&w0, cf.a(k0).unwrap()) < 1e-14);

    // Two solutions of the same equation: W(θ(z̄)*, φ(z))(k) does not depend on k.
    for k in (lo..hi).step_by(7) {
        if (k - k0).abs() > 50 {
            continue;
        }
        let th = MatrixSeq::new(
            k,
            vec![fzb.theta_at(k).unwrap().adjoint(), fzb.theta_at(k + 1).unwrap().adjoint()],
            Extension::Forbidden,
        )
        .unwrap();
        let ph =
            MatrixSeq::new(k, vec![fz.phi_at(k).unwrap(), fz.phi_at(k + 1).unwrap()], Extension::Forbidden).unwrap();
        let w = wronskian(&th, &ph, a, k).unwrap();
        assert!(max_abs_diff(&w, &w0) <= 1e-10 * jborg::linalg::op_norm(&w0).max(1.0), "k={k}");
    }
}

proptest! {
    #[test]
    fn periodic_extension_is_exact(period in 1usize..6, shift in -40i64..40, lo in -5i64..5) {
        let vals: Vec<CMat> = (0..period).map(|i| eye(2) * c(i as f64 + 0.5, -(i as f64))).collect();
        let s = MatrixSeq::periodic(lo, vals).unwrap();
        let k = lo + shift;
        prop_assert_eq!(s.at(k).unwrap(), s.at(k + period as i64).unwrap());
    }
}
