use num_complex::Complex64;
use proptest::prelude::*;

use super::*;
use crate::algebra::matrix::{c64, diag, from_real_rows, identity, inverse, max_abs, product, scale_of, zeros, CMatrix};
use crate::bundles::Representation;
use crate::localforms::LocalLogConnection;
use crate::synth::{commutative_fuchsian, FuchsianSystem};

fn abelian_pair(x: f64) -> FuchsianSystem {
    FuchsianSystem::new(
        vec![c64(0.0, 0.0), c64(1.0, 0.0)],
        vec![from_real_rows(1, 1, &[x]), from_real_rows(1, 1, &[-x])],
    )
    .unwrap()
}

fn three_point_system() -> FuchsianSystem {
    let b1 = from_real_rows(2, 2, &[0.1, 0.3, -0.2, 0.05]);
    let b2 = from_real_rows(2, 2, &[-0.25, 0.1, 0.4, 0.2]);
    let b3 = -(&b1 + &b2);
    FuchsianSystem::new(vec![c64(0.0, 0.0), c64(1.0, 0.0), c64(0.3, 1.1)], vec![b1, b2, b3]).unwrap()
}

#[test]
fn zero_system_has_trivial_monodromy() {
    let sys = FuchsianSystem::new(vec![c64(0.0, 0.0), c64(2.0, 1.0)], vec![zeros(2, 2), zeros(2, 2)]).unwrap();
    let mono = monodromy(&sys, 1e-10).unwrap();
    for g in &mono.matrices {
        assert!(max_abs(&(g - identity(2))) < 1e-12);
    }
}

#[test]
fn abelian_loop_matches_closed_form() {
    let sys = abelian_pair(0.25);
    let plan = standard_loops(sys.punctures()).unwrap();
    assert_eq!(plan.loops[0].winding, vec![1, 0]);
    let g = integrate_fuchsian(&sys, &plan.loops[0], 1e-11).unwrap();
    assert!((g[(0, 0)] - c64(0.0, -1.0)).norm() < 1e-8);
}

#[test]
fn loops_compose_to_identity_and_reverse_cancels() {
    let sys = three_point_system();
    let mono = monodromy(&sys, 1e-10).unwrap();
    assert!(mono.product_defect < 1e-9, "defect {}", mono.product_defect);
    let plan = standard_loops(sys.punctures()).unwrap();
    for lp in &plan.loops {
        let there = integrate_fuchsian(&sys, lp, 1e-10).unwrap();
        let back = integrate_fuchsian(&sys, &lp.reversed(), 1e-10).unwrap();
        assert!(max_abs(&(there * back - identity(2))) < 1e-9);
    }
}

#[test]
fn conjugating_residues_conjugates_monodromy() {
    let sys = three_point_system();
    let s = from_real_rows(2, 2, &[1.0, 2.0, -0.5, 1.0]);
    let moved = sys.conjugated(&s).unwrap();
    let a = monodromy(&sys, 1e-10).unwrap().matrices;
    let b = monodromy(&moved, 1e-10).unwrap().matrices;
    let s_inv = inverse(&s).unwrap();
    for (ga, gb) in a.iter().zip(&b) {
        assert!(max_abs(&(&s_inv * ga * &s - gb)) < 1e-8);
    }
    assert!(conjugacy_compare(&a, &b, 1e-6).unwrap().conjugate);
}

#[test]
fn conjugacy_examples() {
    let a = vec![
        from_real_rows(2, 2, &[1.0, 1.0, 0.0, 2.0]),
        from_real_rows(2, 2, &[0.0, 1.0, 1.0, 1.0]),
    ];
    let same = conjugacy_compare(&a, &a, 1e-9).unwrap();
    assert!(same.conjugate);
    assert!(max_abs(&(same.conjugator.unwrap() - identity(2))) < 1e-9);

    let s0 = from_real_rows(2, 2, &[2.0, 1.0, 0.5, 1.5]);
    let s0_inv = inverse(&s0).unwrap();
    let b: Vec<CMatrix> = a.iter().map(|g| &s0_inv * g * &s0).collect();
    let found = conjugacy_compare(&a, &b, 1e-9).unwrap();
    assert!(found.conjugate);
    let s = found.conjugator.unwrap();
    // proportional to s0
    let ratio = s[(0, 0)] / s0[(0, 0)];
    assert!(max_abs(&(&s - &s0 * ratio)) < 1e-9);

    let mut c = b.clone();
    c[0] = from_real_rows(2, 2, &[1.0, 1.0, 0.0, 3.0]);
    assert!(!conjugacy_compare(&a, &c, 1e-9).unwrap().conjugate);
}

#[test]
fn commutative_synthesis_round_trip() {
    let g1 = diag(&[c64(2.0, 0.0), c64(1.0, 0.0)]);
    let g2 = diag(&[c64(0.5, 0.0), c64(1.0, 0.0)]);
    let rep = Representation::new(vec![c64(0.0, 0.0), c64(1.0, 0.0)], vec![g1, g2]).unwrap();
    let sys = commutative_fuchsian(&rep).unwrap();
    let report = verify_monodromy(&sys, rep.matrices(), 1e-10, 1e-6).unwrap();
    assert!(report.conjugate);
    assert!(report.residuals.iter().all(|&r| r < 1e-6));
}

fn geometric(start: f64, ratio: f64, count: usize) -> Vec<f64> {
    (0..count).map(|i| start * ratio.powi(i as i32)).collect()
}

#[test]
fn growth_examples() {
    let radii = geometric(1.0, 0.1, 9);
    let conn = LocalLogConnection::constant(from_real_rows(1, 1, &[-1.5]), 0).unwrap();
    let est = growth_exponent(&conn, &from_real_rows(1, 1, &[1.0]), &radii, 1e-10).unwrap();
    assert_eq!(est.exponent, 1);
    assert!((est.slope - 1.5).abs() < 1e-6, "{est:?}");
    assert!(est.reliable);

    let conn = LocalLogConnection::constant(zeros(1, 1), 0).unwrap();
    let est = growth_exponent(&conn, &from_real_rows(1, 1, &[1.0]), &radii, 1e-10).unwrap();
    assert_eq!(est.exponent, 0);
    assert!(est.reliable);

    // weights 1 and 0; the generic vector sees the smaller one
    let conn = LocalLogConnection::constant(diag(&[c64(-1.5, 0.0), c64(-0.2, 0.0)]), 0).unwrap();
    let deep = geometric(1e-3, 0.1, 9);
    let est = growth_exponent(&conn, &from_real_rows(2, 1, &[1.0, 1.0]), &deep, 1e-10).unwrap();
    assert_eq!(est.exponent, 0);

    assert!(growth_exponent(&conn, &from_real_rows(2, 1, &[1.0, 1.0]), &radii[..5], 1e-10).is_err());
}

#[test]
fn growth_at_fuchsian_puncture() {
    let sys = abelian_pair(-1.5);
    let radii = geometric(0.1, 0.25, 10);
    let est = growth_exponent_at(&sys, 0, &from_real_rows(1, 1, &[1.0]), &radii, 1e-10).unwrap();
    assert_eq!(est.exponent, 1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn random_systems_satisfy_product_relation(
        entries in proptest::collection::vec(-0.4f64..0.4, 16),
        shift in 0.0f64..6.0,
    ) {
        let b1 = CMatrix::from_fn(2, 2, |i, k| Complex64::new(entries[2 * i + k], entries[4 + 2 * i + k]));
        let b2 = CMatrix::from_fn(2, 2, |i, k| Complex64::new(entries[8 + 2 * i + k], entries[12 + 2 * i + k]));
        let b3 = -(&b1 + &b2);
        let punctures = vec![
            c64(0.0, 0.0),
            Complex64::from_polar(1.0, shift),
            Complex64::from_polar(1.7, shift + 2.0),
        ];
        let sys = FuchsianSystem::new(punctures, vec![b1, b2, b3]).unwrap();
        let mono = monodromy(&sys, 1e-10).unwrap();
        let scale: f64 = mono.matrices.iter().map(scale_of).product();
        prop_assert!(mono.product_defect < 1e-9 * scale);
        let prod = product(&mono.matrices).unwrap();
        prop_assert!(max_abs(&(prod - identity(2))) < 1e-9 * scale);
        let dets: Complex64 = mono.matrices.iter().map(|g| g.determinant()).product();
        prop_assert!((dets - c64(1.0, 0.0)).norm() < 1e-9 * scale * scale);
        // trace of the residue sum vanishes
        let tr: Complex64 = sys.residues().iter().map(|b| b.trace()).sum();
        prop_assert!(tr.norm() < 1e-12);
    }
}
