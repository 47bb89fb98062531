use proptest::prelude::*;
use qwres::lattice::{random_coin_field, Chirality, Site, WalkOperator, WalkState, C64};
use qwres::translation::{apply_t_theta, apply_u_theta, theta_weight, verify_outgoing, OutgoingState, Theta};

#[test]
fn theta_must_be_in_lower_half_plane() {
    assert!(Theta::new(C64::new(0.1, 0.2)).is_err());
    assert!(Theta::new(C64::new(0.1, -0.2)).is_ok());
}

#[test]
fn weights_are_signed_by_chirality() {
    let th = C64::new(0.0, -0.5);
    let x = Site::new(3, -2);
    let e = |a: f64| C64::new(a.exp(), 0.0);
    // e^{iθx1} with θ = −0.5i gives e^{0.5·x1}
    assert!((theta_weight(th, x, Chirality::Left) - e(1.5)).norm() < 1e-12);
    assert!((theta_weight(th, x, Chirality::Right) - e(-1.5)).norm() < 1e-12);
    assert!((theta_weight(th, x, Chirality::Down) - e(-1.0)).norm() < 1e-12);
    assert!((theta_weight(th, x, Chirality::Up) - e(1.0)).norm() < 1e-12);
}

#[test]
fn real_part_is_periodic() {
    let x = Site::new(-4, 7);
    for j in Chirality::ALL {
        let a = theta_weight(C64::new(0.3, -0.1), x, j);
        let b = theta_weight(C64::new(0.3 + std::f64::consts::TAU, -0.1), x, j);
        assert!((a - b).norm() < 1e-12);
    }
}

#[test]
fn free_walk_commutes_with_translation() {
    let op = WalkOperator::new(qwres::lattice::CoinField::free(1));
    let th = Theta::new(C64::new(0.4, -0.3)).unwrap();
    let u = WalkState::delta(Site::new(1, 1), Chirality::Up);
    // U_0(θ) δ = e^{∓iθ} U_0 δ: the shift picks up one weight factor
    let got = apply_u_theta(&op, th, &u);
    let want = op.apply(&u).map_entries(|_, _, z| z * (C64::new(0.0, -1.0) * th.value()).exp());
    assert!(got.max_abs_diff(&want) < 1e-12);
}

#[test]
fn verify_outgoing_rejects_bound_states() {
    let op = WalkOperator::new(qwres::lattice::CoinField::free(1));
    let s = OutgoingState::new(C64::new(0.5, 0.0), 1, WalkState::new(), Default::default()).unwrap();
    assert!(verify_outgoing(&op, &s, 6).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn translation_inverse(re in -5.0f64..5.0, im in -1.0f64..0.0, x in -6i64..6, y in -6i64..6, j in 0usize..4) {
        let u = WalkState::delta(Site::new(x, y), Chirality::from_index(j));
        let th = C64::new(re, im);
        let back = apply_t_theta(-th, &apply_t_theta(th, &u));
        prop_assert!(back.max_abs_diff(&u) < 1e-12);
    }

    #[test]
    fn conjugated_walk_is_similar(seed in 0u64..10_000, im in -0.8f64..0.0) {
        let op = WalkOperator::new(random_coin_field(1, 0.6, seed));
        let th = Theta::new(C64::new(0.2, im)).unwrap();
        let u = WalkState::delta(Site::ORIGIN, Chirality::Left);
        let t = |v: &WalkState| apply_t_theta(th.value(), v);
        let lhs = apply_u_theta(&op, th, &t(&u));
        let rhs = t(&op.apply(&u));
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-12);
    }
}
