use num_complex::Complex64;
use num_rational::Rational64;
use proptest::prelude::*;

use super::*;
use crate::algebra::matrix::{c64, from_real_rows, identity, inverse, max_abs, CMatrix};
use crate::localforms::normal_form;

fn col(data: &[f64]) -> CMatrix {
    from_real_rows(data.len(), 1, data)
}

fn closing_rep(mut mats: Vec<CMatrix>) -> Representation {
    let prod = crate::algebra::matrix::product(&mats).unwrap();
    mats.push(inverse(&prod).unwrap());
    Representation::with_default_punctures(mats).unwrap()
}

fn trivial_rep(r: usize, n: usize) -> Representation {
    Representation::with_default_punctures(vec![identity(r); n]).unwrap()
}

fn irreducible_rank3() -> Representation {
    let a = from_real_rows(3, 3, &[2.0, 1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 3.0]);
    let b = from_real_rows(3, 3, &[1.0, 0.0, 0.0, 1.0, 2.0, 0.0, 0.0, 1.0, 1.5]);
    closing_rep(vec![a, b])
}

#[test]
fn weight_of_examples() {
    let flag = WeightedFlag::new(vec![col(&[1.0, 0.0]), identity(2)], vec![1, 0]).unwrap();
    assert_eq!(weight_of(&flag, &col(&[0.0, 0.0])), Weight::Infinite);
    assert_eq!(weight_of(&flag, &col(&[1.0, 0.0])), Weight::Finite(1));
    assert_eq!(weight_of(&flag, &col(&[1.0, 1.0])), Weight::Finite(0));
}

#[test]
fn flag_validation() {
    assert!(WeightedFlag::new(vec![col(&[1.0, 0.0]), identity(2)], vec![0, 1]).is_err());
    assert!(WeightedFlag::new(vec![col(&[1.0, 0.0])], vec![0]).is_err());
    assert!(WeightedFlag::new(vec![col(&[1.0, 0.0]), col(&[2.0, 0.0]), identity(2)], vec![2, 1, 0]).is_err());
}

#[test]
fn degree_examples() {
    let wfb = WeightedFlatBundle::with_constant_weights(trivial_rep(2, 2), &[0, 0]).unwrap();
    assert_eq!(wfb.degree().unwrap(), 0);

    let f1 = WeightedFlag::from_basis(&identity(2), &[3, -1]).unwrap();
    let f2 = WeightedFlag::from_basis(&identity(2), &[2, 0]).unwrap();
    let wfb = WeightedFlatBundle::new(trivial_rep(2, 2), vec![f1, f2]).unwrap();
    assert_eq!(wfb.degree().unwrap(), 4);
    assert_eq!(wfb.slope().unwrap(), Rational64::from_integer(2));

    let rep = Representation::new(
        vec![c64(0.0, 0.0), c64(1.0, 0.0)],
        vec![from_real_rows(1, 1, &[2.0]), from_real_rows(1, 1, &[0.5])],
    )
    .unwrap();
    let wfb = WeightedFlatBundle::with_constant_weights(rep, &[0, 0]).unwrap();
    assert!(wfb.degree_value().unwrap().norm() < 1e-15);
    assert_eq!(wfb.degree().unwrap(), 0);

    let wfb = WeightedFlatBundle::with_constant_weights(trivial_rep(3, 2), &[0, 0]).unwrap();
    assert_eq!(wfb.slope().unwrap(), Rational64::from_integer(0));
}

#[test]
fn product_relation_is_enforced() {
    let g = from_real_rows(1, 1, &[2.0]);
    assert!(Representation::with_default_punctures(vec![g.clone(), g]).is_err());
}

#[test]
fn sub_bundle_slope_above_total() {
    let f1 = WeightedFlag::new(vec![col(&[1.0, 0.0]), identity(2)], vec![1, -1]).unwrap();
    let wfb = WeightedFlatBundle::new(trivial_rep(2, 2), vec![f1, WeightedFlag::trivial(2, 0)]).unwrap();
    assert_eq!(wfb.degree().unwrap(), 0);
    let sub = SubBundle::new(&wfb, &col(&[1.0, 0.0])).unwrap();
    assert_eq!(sub.bundle.slope().unwrap(), Rational64::from_integer(1));
}

#[test]
fn irreducible_algebra_is_complete() {
    let rep = irreducible_rank3();
    let inv = invariant_subspaces(&rep, DEFAULT_BUDGET, 1).unwrap();
    assert_eq!(inv.algebra_dim, 9);
    assert!(inv.is_irreducible());
}

#[test]
fn invariant_line_is_found() {
    let a = from_real_rows(2, 2, &[2.0, 1.0, 0.0, 3.0]);
    let b = from_real_rows(2, 2, &[1.0, -1.0, 0.0, 0.5]);
    let rep = closing_rep(vec![a, b]);
    let inv = invariant_subspaces(&rep, DEFAULT_BUDGET, 1).unwrap();
    assert_eq!(inv.completeness, Completeness::Complete);
    assert_eq!(inv.subspaces.len(), 1);
    let w = &inv.subspaces[0];
    assert!(crate::algebra::matrix::projection_residual(w, &col(&[1.0, 0.0])) < 1e-9);
}

#[test]
fn identity_rep_is_undetermined() {
    let inv = invariant_subspaces(&trivial_rep(2, 3), DEFAULT_BUDGET, 1).unwrap();
    assert_eq!(inv.completeness, Completeness::Undetermined);
    assert!(!inv.subspaces.is_empty());
}

#[test]
fn semistability_examples() {
    let rep = irreducible_rank3();
    let wfb = WeightedFlatBundle::with_constant_weights(rep, &[5, -2, 0]).unwrap();
    // degree need not vanish for an irreducible rep to be stable
    assert_eq!(semistable(&wfb).unwrap(), Stability::Stable);

    let f1 = WeightedFlag::new(vec![col(&[1.0, 0.0]), identity(2)], vec![1, -1]).unwrap();
    let wfb = WeightedFlatBundle::new(trivial_rep(2, 2), vec![f1, WeightedFlag::trivial(2, 0)]).unwrap();
    assert_eq!(semistable(&wfb).unwrap(), Stability::Unstable);

    // two copies of the weighted line (G = i, i, -1) with weights (0, 0, -1):
    // slope = 1/4 + 1/4 + 1/2 - 1 = 0
    let i = c64(0.0, 1.0);
    let mats = vec![identity(2) * i, identity(2) * i, identity(2) * c64(-1.0, 0.0)];
    let rep = Representation::with_default_punctures(mats).unwrap();
    let wfb = WeightedFlatBundle::with_constant_weights(rep, &[0, 0, -1]).unwrap();
    assert_eq!(wfb.degree().unwrap(), 0);
    assert_eq!(semistable(&wfb).unwrap(), Stability::Semistable);
}

fn line_bundle(weights: &[i64]) -> WeightedFlatBundle {
    WeightedFlatBundle::with_constant_weights(trivial_rep(1, weights.len()), weights).unwrap()
}

#[test]
fn split_extension_of_trivial_lines() {
    let sub = line_bundle(&[1, 1]);
    let quot = line_bundle(&[0, 0]);
    let split = SplitData {
        total: trivial_rep(2, 2),
        puncture: 0,
        alpha: col(&[0.0, 1.0]),
    };
    let total = induce_weights_split_extension(&sub, &quot, &split).unwrap();
    for f in total.flags() {
        assert_eq!(f.weights(), &[1, 0]);
        assert_eq!(f.spaces()[0].ncols(), 1);
        assert!(crate::algebra::matrix::projection_residual(&f.spaces()[0], &col(&[1.0, 0.0])) < 1e-12);
    }
    assert_eq!(total.degree().unwrap(), sub.degree().unwrap() + quot.degree().unwrap());
}

#[test]
fn split_extension_rejects_weight_overlap() {
    let split = SplitData {
        total: trivial_rep(2, 2),
        puncture: 0,
        alpha: col(&[0.0, 1.0]),
    };
    let err = induce_weights_split_extension(&line_bundle(&[0, 0]), &line_bundle(&[0, 0]), &split).unwrap_err();
    assert!(matches!(err, crate::Error::Precondition(_)));
    let bad_alpha = SplitData {
        alpha: col(&[0.0, 2.0]),
        ..split
    };
    assert!(induce_weights_split_extension(&line_bundle(&[1, 1]), &line_bundle(&[0, 0]), &bad_alpha).is_err());
}

#[test]
fn nontrivial_extension_with_equivariant_splitting() {
    // Upper triangular rank 2 extension of two lines at three punctures.
    let g1 = from_real_rows(2, 2, &[2.0, 1.0, 0.0, -1.0]);
    let g2 = from_real_rows(2, 2, &[0.5, 0.3, 0.0, 2.0]);
    let total = closing_rep(vec![g1.clone(), g2]);
    let sub_rep = total.restricted(&col(&[1.0, 0.0])).unwrap();
    let quot_mats = total.matrices().iter().map(|g| g.view((1, 1), (1, 1)).into_owned()).collect();
    let quot_rep = Representation::with_default_punctures(quot_mats).unwrap();
    let sub = WeightedFlatBundle::with_constant_weights(sub_rep, &[0, 3, 1]).unwrap();
    let quot = WeightedFlatBundle::with_constant_weights(quot_rep, &[0, 0, -1]).unwrap();
    // eigenvector of g1 for eigenvalue -1, normalized to have last entry 1
    let alpha = col(&[-1.0 / 3.0, 1.0]);
    assert!(max_abs(&(&g1 * &alpha + &alpha)) < 1e-14);
    let split = SplitData { total, puncture: 0, alpha };
    let bundle = induce_weights_split_extension(&sub, &quot, &split).unwrap();
    assert_eq!(bundle.degree().unwrap(), sub.degree().unwrap() + quot.degree().unwrap());
    let pi = from_real_rows(1, 2, &[0.0, 1.0]);
    for (j, f) in bundle.flags().iter().enumerate() {
        assert!(is_surjection(&pi, f, &quot.flags()[j]));
        assert!(is_injection(&col(&[1.0, 0.0]), &sub.flags()[j], f));
    }
}

#[test]
fn local_extension_examples() {
    let conn = local_extension(&identity(2), &WeightedFlag::trivial(2, 0)).unwrap();
    assert!(max_abs(conn.residue()) < 1e-15);

    let conn = local_extension(&from_real_rows(1, 1, &[-1.0]), &WeightedFlag::trivial(1, 0)).unwrap();
    assert!((conn.residue()[(0, 0)] - c64(-0.5, 0.0)).norm() < 1e-15);

    let g = from_real_rows(2, 2, &[2.0, 1.0, 0.0, -1.0]);
    let flag = WeightedFlag::new(vec![col(&[1.0, 0.0]), identity(2)], vec![1, 0]).unwrap();
    let conn = local_extension(&g, &flag).unwrap();
    assert_eq!(conn.order(), 1);
    assert_eq!(conn.matrix().coeff(0)[(0, 1)], Complex64::new(0.0, 0.0));
    assert!(conn.matrix().coeff(1)[(0, 1)].norm() > 1e-3);
    let (_, k) = adapted_log(&g, &flag).unwrap();
    let nf = normal_form(&conn).unwrap();
    assert_eq!(nf.phi.entries(), &[1, 0]);
    assert!(max_abs(&(&nf.k - &k)) < 1e-12);
    let residue_trace = conn.residue().trace();
    assert!((-residue_trace - (k.trace() + 1.0)).norm() < 1e-12);
}

#[test]
fn non_invariant_flag_is_rejected() {
    let g = from_real_rows(2, 2, &[1.0, 0.0, 1.0, 1.0]);
    let flag = WeightedFlag::new(vec![col(&[1.0, 0.0]), identity(2)], vec![1, 0]).unwrap();
    assert!(local_extension(&g, &flag).is_err());
}

fn random_rep_strategy() -> impl Strategy<Value = Representation> {
    (1usize..=3, 2usize..=4)
        .prop_flat_map(|(r, n)| (Just(r), Just(n), prop::collection::vec(-1.0f64..1.0, 2 * r * r * (n - 1))))
        .prop_map(|(r, n, d)| {
            let mats: Vec<CMatrix> = (0..n - 1)
                .map(|j| {
                    let off = 2 * r * r * j;
                    CMatrix::from_fn(r, r, |a, b| c64(d[off + 2 * (a * r + b)], d[off + 2 * (a * r + b) + 1]))
                        + identity(r) * c64(1.5, 0.0)
                })
                .collect();
            closing_rep(mats)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn degree_is_integral(rep in random_rep_strategy(), w in prop::collection::vec(-3i64..3, 4)) {
        let n = rep.len();
        let wfb = WeightedFlatBundle::with_constant_weights(rep, &w[..n]).unwrap();
        let d = wfb.degree_value().unwrap();
        prop_assert!((d.re - d.re.round()).abs() < 1e-6 && d.im.abs() < 1e-6);
    }

    #[test]
    fn shift_changes_degree_by_rank_times_total(rep in random_rep_strategy(), s in prop::collection::vec(-3i64..3, 4)) {
        let n = rep.len();
        let r = rep.rank() as i64;
        let wfb = WeightedFlatBundle::with_constant_weights(rep, &vec![0; n]).unwrap();
        let shifted = wfb.shifted(&s[..n]).unwrap();
        prop_assert_eq!(shifted.degree().unwrap() - wfb.degree().unwrap(), r * s[..n].iter().sum::<i64>());
    }
}
