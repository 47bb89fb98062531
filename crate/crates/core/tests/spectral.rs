use std::f64::consts::{FRAC_PI_4, TAU};

use proptest::prelude::*;
use qwres::lattice::{random_coin_field, random_unitary_coin, Chirality, CoinField, Site, WalkOperator, WalkState, C64};
use qwres::shape::{corner_mode, make_corner_family, CornerPreset, CornerState, OrbitSign};
use qwres::spectral::{
    det_value, locate_roots, locate_roots_in_strip, projection_element, winding_number, ContinuedResolvent,
    InteractionModel, Rect, RootKind,
};
use qwres::Error;

use Chirality::{Left, Right};

const I: C64 = C64::new(0.0, 1.0);

fn two_site_field(seed: u64) -> CoinField {
    let mut f = CoinField::new(1).unwrap();
    f.set(Site::new(0, 0), random_unitary_coin(seed)).unwrap();
    f.set(Site::new(1, 0), random_unitary_coin(seed + 1000)).unwrap();
    f
}

/// Only the bounce between A=(0,0) and B=(1,0) couples the two sites:
/// D = 1 − z² C_B[←][→] C_A[→][←], z = e^{iκ}.
fn two_site_oracle(f: &CoinField, kappa: C64) -> C64 {
    let (a, b) = (f.coin(Site::new(0, 0)), f.coin(Site::new(1, 0)));
    let z = (I * kappa).exp();
    C64::new(1.0, 0.0) - z * z * b[Left.index()][Right.index()] * a[Right.index()][Left.index()]
}

#[test]
fn single_site_determinant_is_one() {
    let mut f = CoinField::new(1).unwrap();
    f.set(Site::ORIGIN, random_unitary_coin(3)).unwrap();
    let model = InteractionModel::new(&f);
    for kappa in [C64::new(0.3, 0.0), C64::new(2.0, -1.5), C64::new(5.0, 0.7)] {
        assert!((model.det(kappa) - 1.0).norm() < 1e-14);
    }
    let set = locate_roots_in_strip(&f, 2.0, 1e-9).unwrap();
    assert!(set.roots.is_empty());
}

#[test]
fn two_site_determinant_matches_oracle() {
    for seed in 0..20 {
        let f = two_site_field(seed);
        let model = InteractionModel::new(&f);
        for kappa in [C64::new(0.4, -0.3), C64::new(3.0, 0.2), C64::new(5.5, -1.9)] {
            let want = two_site_oracle(&f, kappa);
            assert!((model.det(kappa) - want).norm() < 1e-12, "seed {seed} kappa {kappa}");
        }
    }
}

#[test]
fn two_site_roots_match_oracle() {
    for seed in 0..5 {
        let f = two_site_field(seed);
        let (a, b) = (f.coin(Site::new(0, 0)), f.coin(Site::new(1, 0)));
        let p = b[Left.index()][Right.index()] * a[Right.index()][Left.index()];
        // z² = 1/p
        let oracle: Vec<C64> = (0..2)
            .map(|k| {
                let k2 = (-I * (C64::new(1.0, 0.0) / p).ln() + TAU * k as f64) / 2.0;
                C64::new(k2.re.rem_euclid(TAU), k2.im)
            })
            .collect();
        let depth = 1.0 - oracle[0].im;
        let set = locate_roots_in_strip(&f, depth, 1e-10).unwrap();
        assert_eq!(set.winding_total, 2, "seed {seed}");
        for o in &oracle {
            let d = set.roots.iter().map(|r| (r.kappa - o).norm()).fold(f64::INFINITY, f64::min);
            assert!(d < 1e-9, "seed {seed}: oracle {o} missed by {d:e}");
        }
    }
}

#[test]
fn dlog_matches_finite_difference() {
    let f = random_coin_field(1, 0.7, 17);
    let kappa = C64::new(1.1, -0.4);
    let v = det_value(&f, kappa).unwrap();
    let h = 1e-6;
    let model = InteractionModel::new(&f);
    let fd = (model.det(kappa + h) - model.det(kappa - h)) / (2.0 * h) / v.d;
    assert!((fd - v.dlog).norm() < 1e-6 * (1.0 + fd.norm()));
}

#[test]
fn continued_resolvent_inverts_walk_in_upper_half_plane() {
    let f = random_coin_field(1, 0.8, 5);
    let op = WalkOperator::new(f.clone());
    let model = InteractionModel::new(&f);
    let kappa = C64::new(0.9, 0.6);
    let w = (-I * kappa).exp();
    let r = ContinuedResolvent::new(&model, kappa).unwrap();
    let src = WalkState::delta(Site::new(1, -1), Chirality::Up);
    let window: Vec<Site> = qwres::lattice::box_sites(12);
    let u = r.apply_at(&src, &window);
    // (U − w)u = f on an inner window
    let mut lhs = op.apply(&u);
    lhs.axpy(-w, &u);
    for x in qwres::lattice::box_sites(10) {
        for j in Chirality::ALL {
            let want = src.component(x, j);
            assert!((lhs.component(x, j) - want).norm() < 1e-12, "{x} {j}");
        }
    }
}

#[test]
fn projection_onto_corner_eigenvalue() {
    let fam = make_corner_family(2, 2, 0.2, CornerPreset::OneCorner).unwrap();
    let kappa = C64::new(FRAC_PI_4, 0.0);
    let CornerState::Eigenfunction(mut e) = corner_mode(&fam, OrbitSign::Minus, kappa).unwrap() else {
        panic!("Φ₋ modes are eigenfunctions for the one-corner preset");
    };
    e.scale(C64::new(1.0 / e.norm(), 0.0));
    let f = WalkState::delta(Site::new(1, 0), Chirality::Right);
    let g = WalkState::delta(Site::new(2, 1), Chirality::Up);
    let rect = Rect::centered(kappa, 0.1, 1e-3).unwrap();
    let p = projection_element(&fam.coin_field(), &rect, &f, &g, 1e-10).unwrap();
    let want = f.inner(&e) * e.inner(&g);
    assert!((p - want).norm() < 1e-7, "got {p}, want {want}");
}

#[test]
fn boundary_zero_is_reported() {
    let fam = make_corner_family(2, 2, 0.0, CornerPreset::Unperturbed).unwrap();
    let rect = Rect::new(0.0, 1.0, -0.5, 0.5).unwrap();
    assert!(matches!(winding_number(&fam.coin_field(), &rect), Err(Error::Winding(_))));
    // locate_roots grows the rectangle instead
    let set = locate_roots(&fam.coin_field(), rect, 1e-9).unwrap();
    assert_eq!(set.winding_total, 4);
    assert!(set.roots.iter().all(|r| r.kind == RootKind::Eigenvalue && r.multiplicity == 2));
}

#[test]
fn rejects_bad_tolerance() {
    let f = two_site_field(1);
    assert!(locate_roots(&f, Rect::strip(1.0).unwrap(), 0.5).is_err());
    assert!(Rect::strip(-1.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn no_roots_in_upper_half_plane(seed in 0u64..10_000, density in 0.2f64..1.0) {
        let f = random_coin_field(1, density, seed);
        let r = Rect::new(0.0, TAU, 1e-6, 1.0).unwrap();
        prop_assert_eq!(winding_number(&f, &r).unwrap(), 0);
    }

    #[test]
    fn determinant_is_two_pi_periodic(seed in 0u64..10_000, re in 0.0f64..TAU, im in -1.0f64..0.5) {
        let f = random_coin_field(1, 0.6, seed);
        let model = InteractionModel::new(&f);
        let k = C64::new(re, im);
        let (a, b) = (model.det(k), model.det(k + TAU));
        prop_assert!((a - b).norm() <= 1e-9 * (1.0 + a.norm()));
    }
}
