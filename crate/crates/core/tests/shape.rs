use std::f64::consts::PI;

use qwres::barrier::BarrierSpec;
use qwres::lattice::{WalkOperator, C64};
use qwres::shape::{
    condition_c_check, corner_quantization, make_corner_family, make_shape_family, migration_scan, qc2_roots,
    subdeterminant_exponent, CornerPreset, CornerState, ScanFamily, Weave,
};
use qwres::Error;
use proptest::prelude::*;

#[test]
fn one_corner_quantization_splits_into_bound_and_resonant() {
    let eps = 0.3;
    let fam = make_corner_family(2, 2, eps, CornerPreset::OneCorner).unwrap();
    let q = corner_quantization(&fam).unwrap();
    let op = WalkOperator::new(fam.coin_field());
    let (mut bound, mut resonant) = (0, 0);
    for mode in &q.modes {
        match &mode.state {
            CornerState::Eigenfunction(u) => {
                bound += 1;
                assert!(mode.kappa.im.abs() < 1e-12);
                let w = (C64::new(0.0, -1.0) * mode.kappa).exp();
                let mut r = op.apply(u);
                r.axpy(-w, u);
                assert!(r.norm() < 1e-12, "eigen residual {}", r.norm());
            }
            CornerState::Resonant(_) => {
                resonant += 1;
                let expect = (1.0 - eps * eps).sqrt().ln() / 8.0;
                assert!((mode.kappa.im - expect).abs() < 1e-12);
            }
        }
    }
    assert_eq!((bound, resonant), (8, 8));
}

#[test]
fn preset_eigenvalue_counts() {
    let count = |p| {
        let fam = make_corner_family(2, 2, 0.2, p).unwrap();
        corner_quantization(&fam)
            .unwrap()
            .modes
            .iter()
            .filter(|m| matches!(m.state, CornerState::Eigenfunction(_)))
            .count()
    };
    assert_eq!(count(CornerPreset::OpenCorner), 0);
    assert_eq!(count(CornerPreset::PhaseCorner), 16);
}

#[test]
fn corner_family_rejects_bad_eps() {
    for eps in [-0.1, 1.5, f64::NAN] {
        assert!(make_corner_family(2, 2, eps, CornerPreset::OneCorner).is_err());
    }
    assert!(make_corner_family(0, 2, 0.1, CornerPreset::OneCorner).is_err());
}

#[test]
fn full_weave_satisfies_condition_c() {
    let spec = BarrierSpec::trivial(1).unwrap();
    let fam = make_shape_family(&spec, 0.2, Weave::Full).unwrap();
    assert!(condition_c_check(&fam.coin_field()).holds());
    let p = subdeterminant_exponent(&spec, Weave::Full, 0.1, 0.05).unwrap();
    assert!((p - 2.0).abs() < 0.05, "exponent {p}");
}

#[test]
fn per_side_weave_fails_condition_c() {
    let spec = BarrierSpec::trivial(1).unwrap();
    let fam = make_shape_family(&spec, 0.2, Weave::PerSide).unwrap();
    assert!(!condition_c_check(&fam.coin_field()).holds());
    assert!(subdeterminant_exponent(&spec, Weave::PerSide, 0.1, 0.05).is_err());
}

#[test]
fn zero_eps_shape_is_the_barrier() {
    let spec = BarrierSpec::trivial(2).unwrap();
    let fam = make_shape_family(&spec, 0.0, Weave::Full).unwrap();
    assert_eq!(fam.coin_field(), spec.coin_field());
    assert!(!condition_c_check(&fam.coin_field()).holds());
}

#[test]
fn overlapping_loops_are_rejected() {
    let family = ScanFamily::Corner { m0: 2, n0: 2, preset: CornerPreset::OneCorner };
    let mu0s = [0.0, PI / 4.0];
    let r = migration_scan(&family, &[0.5], &mu0s, 1.0, 1e-9);
    assert!(matches!(r, Err(Error::OverlappingLoops(_))));
    assert!(migration_scan(&family, &[0.1], &mu0s, 1.5, 1e-9).is_err());
}

#[test]
fn corner_scan_counts_double_roots() {
    let family = ScanFamily::Corner { m0: 2, n0: 2, preset: CornerPreset::OneCorner };
    let rows = migration_scan(&family, &[0.05, 0.1], &[PI / 4.0], 1.0, 1e-9).unwrap();
    assert!(rows.iter().all(|r| r.count == 2), "{rows:?}");
}

proptest! {
    #[test]
    fn qc2_roots_solve_their_equation(re in -2.0f64..2.0, im in -2.0f64..2.0, n in 1usize..12) {
        let c = C64::new(re, im);
        prop_assume!(c.norm() > 1e-3);
        let roots = qc2_roots(c, n);
        prop_assert_eq!(roots.len(), n);
        for k in &roots {
            let lhs = (C64::new(0.0, -(n as f64)) * k).exp();
            prop_assert!((lhs - c).norm() < 1e-12 * (1.0 + c.norm()));
            prop_assert!(k.re >= 0.0 && k.re < 2.0 * PI);
        }
        for w in roots.windows(2) {
            prop_assert!(w[1].re - w[0].re > 1e-9);
        }
    }
}
