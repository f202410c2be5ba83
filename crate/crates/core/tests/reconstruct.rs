use jborg::herglotz::MatrixMeasure;
use jborg::io::{measure_from_json, measure_to_json};
use jborg::linalg::{c, eye, max_abs_diff, CMat};
use jborg::models::{borg_jacobi, random_jacobi};
use jborg::reconstruct::*;
use jborg::weyl::Side;
use jborg::Error;

fn scalar(x: f64) -> CMat {
    eye(1) * c(x, 0.0)
}

#[test]
fn two_point_measure() {
    let mu = MatrixMeasure::discrete(vec![-1.0, 1.0], vec![scalar(0.5), scalar(0.5)], true);
    let sys = block_lanczos(&mu, 1, 0, Side::Plus).unwrap();
    assert!(sys.recovered_b.at(0).unwrap()[(0, 0)].norm() < 1e-15);
    assert!((sys.recovered_a.at(0).unwrap()[(0, 0)].re - 1.0).abs() < 1e-15);
    assert!(matches!(block_lanczos(&mu, 2, 0, Side::Plus), Err(Error::Breakdown(_))));
    let unnormalized = MatrixMeasure::discrete(vec![-1.0, 1.0], vec![scalar(1.0), scalar(0.5)], false);
    assert!(block_lanczos(&unnormalized, 1, 0, Side::Plus).is_err());
}

#[test]
fn mass_and_orthonormality() {
    for seed in 0..3 {
        let cf = random_jacobi(2, seed, 0.9, -14, 14).unwrap();
        for side in [Side::Plus, Side::Minus] {
            let mu = spectral_measure_halfline(&cf, 2, side, 12).unwrap();
            assert!(max_abs_diff(&mu.total_mass(), &eye(2)) < 1e-12);
            assert!(mu.min_weight_eigenvalue() > -1e-14);
            let sys = block_lanczos(&mu, 6, 2, side).unwrap();
            assert!(sys.orthonormality_defect() < 1e-8);
            for k in 0..6 {
                assert!(jborg::linalg::min_herm_eigenvalue(sys.recovered_a.entries().get(k).unwrap()) > 0.0);
            }
        }
    }
}

#[test]
fn merged_duplicates_reconstruct_identically() {
    let cf = random_jacobi(2, 77, 0.8, -10, 10).unwrap();
    let mu = spectral_measure_halfline(&cf, 0, Side::Plus, 12).unwrap();
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    for (x, w) in mu.nodes.iter().zip(&mu.weights) {
        for _ in 0..2 {
            nodes.push(*x);
            weights.push(w * c(0.5, 0.0));
        }
    }
    let split = MatrixMeasure::discrete(nodes, weights, true);
    let a = block_lanczos(&mu, 5, 0, Side::Plus).unwrap();
    let b = block_lanczos(&split.merged(1e-12), 5, 0, Side::Plus).unwrap();
    for k in 0..5 {
        assert!(max_abs_diff(a.recovered_a.at(k).unwrap(), b.recovered_a.at(k).unwrap()) < 1e-12);
        assert!(max_abs_diff(a.recovered_b.at(k).unwrap(), b.recovered_b.at(k).unwrap()) < 1e-12);
    }
}

#[test]
fn same_measure_same_operator() {
    // Two operators that differ only outside the reach of a short truncation
    // give the same measure and therefore the same reconstruction.
    let base = random_jacobi(2, 5, 0.7, -3, 30).unwrap();
    let far = random_jacobi(2, 6, 0.7, -3, 30).unwrap();
    let splice = |seq: &jborg::MatrixSeq, alt: &jborg::MatrixSeq| {
        let entries = (-3..=30).map(|k| if k < 10 { seq.at(k) } else { alt.at(k) }.unwrap().clone()).collect();
        jborg::MatrixSeq::new(-3, entries, jborg::Extension::ConstantTail).unwrap()
    };
    let other = jborg::validate_jacobi(splice(base.a_seq(), far.a_seq()), splice(base.b_seq(), far.b_seq())).unwrap();
    assert_ne!(other, base);
    let mu1 = spectral_measure_halfline(&base, 0, Side::Plus, 8).unwrap();
    let mu2 = spectral_measure_halfline(&other, 0, Side::Plus, 8).unwrap();
    let back = measure_from_json(&measure_to_json(&mu2)).unwrap();
    let s1 = block_lanczos(&mu1, 5, 0, Side::Plus).unwrap();
    let s2 = block_lanczos(&back, 5, 0, Side::Plus).unwrap();
    for k in 0..5 {
        assert!(max_abs_diff(s1.recovered_a.at(k).unwrap(), s2.recovered_a.at(k).unwrap()) < 1e-12);
        assert!(max_abs_diff(s1.recovered_a.at(k).unwrap(), base.a(k).unwrap()) < 1e-8);
    }
}

#[test]
fn borg_measure_reconstructs_constants() {
    let (em, ep) = (-1.0, 3.0);
    let mu = borg_measure(em, ep, 2, 10_000).unwrap();
    assert!(max_abs_diff(&mu.total_mass(), &eye(2)) < 1e-12);
    let want = borg_jacobi(em, ep, 2).unwrap();
    for side in [Side::Plus, Side::Minus] {
        let sys = block_lanczos(&mu, 5, 0, side).unwrap();
        let (alo, ahi) = sys.recovered_a.window();
        for k in alo..=ahi {
            assert!(max_abs_diff(sys.recovered_a.at(k).unwrap(), want.a(k).unwrap()) < 1e-6);
        }
        let (blo, bhi) = sys.recovered_b.window();
        for k in blo..=bhi {
            assert!(max_abs_diff(sys.recovered_b.at(k).unwrap(), want.b(k).unwrap()) < 1e-6);
        }
    }
    assert!(borg_measure(1.0, 1.0, 1, 10).is_err());
}

#[test]
fn polynomial_identities() {
    let cf = random_jacobi(2, 19, 0.6, -15, 15).unwrap();
    assert!(poly_solution_identity(&cf, 0, c(0.1, 0.9), 0, 12).unwrap() < 1e-14);
    for k in 1..=4 {
        for z in [c(0.3, 0.8), c(-1.2, 0.2)] {
            assert!(poly_solution_identity(&cf, 1, z, k, 12).unwrap() < 1e-8);
        }
    }
}
