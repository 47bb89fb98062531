use proptest::prelude::*;
use qwres::lattice::{
    coin_adjoint, coin_mul, identity_coin, permutation_coin, random_coin_field, random_unitary_coin,
    unitarity_residual, Chirality, CoinField, Site, WalkOperator, WalkState, C64,
};
use qwres::Error;

use Chirality::{Down, Left, Right, Up};

fn random_state(seed: u64, radius: i64) -> WalkState {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut u = WalkState::new();
    for x in qwres::lattice::box_sites(radius) {
        for j in Chirality::ALL {
            u.set(x, j, C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        }
    }
    u
}

#[test]
fn chirality_steps_and_order() {
    assert_eq!(Chirality::ALL, [Left, Right, Down, Up]);
    assert_eq!(Left.step(), Site::new(-1, 0));
    assert_eq!(Right.step(), Site::new(1, 0));
    assert_eq!(Down.step(), Site::new(0, -1));
    assert_eq!(Up.step(), Site::new(0, 1));
    for j in Chirality::ALL {
        assert_eq!(j.reverse().reverse(), j);
        assert_eq!(Chirality::from_index(j.index()), j);
        assert_eq!(Chirality::parse(j.name()), Some(j));
    }
}

#[test]
fn free_walk_moves_ballistically() {
    let op = WalkOperator::new(CoinField::free(1));
    for j in Chirality::ALL {
        let u = op.evolve(&WalkState::delta(Site::new(2, -1), j), 7);
        let target = Site::new(2, -1) + j.step().scaled(7);
        assert_eq!(u.support(), vec![target]);
        assert_eq!(u.component(target, j), C64::new(1.0, 0.0));
    }
}

#[test]
fn shift_after_coin() {
    // (Uu)_j(x) = (C u)_j(x − d_j)
    let c = random_unitary_coin(9);
    let field = CoinField::new(1).unwrap().with(Site::ORIGIN, c).unwrap();
    let op = WalkOperator::new(field);
    let u = op.apply(&WalkState::delta(Site::ORIGIN, Down));
    for j in Chirality::ALL {
        assert_eq!(u.component(j.step(), j), c[j.index()][Down.index()]);
    }
    assert_eq!(u.len(), 4);
}

#[test]
fn random_coins_are_unitary_and_deterministic() {
    for seed in 0..50 {
        let c = random_unitary_coin(seed);
        assert!(unitarity_residual(&c) <= 1e-12);
        assert_eq!(c, random_unitary_coin(seed));
        let p = coin_mul(&coin_adjoint(&c), &c);
        assert!(unitarity_residual(&p) <= 1e-12);
    }
}

#[test]
fn coin_field_validation() {
    let mut f = CoinField::new(1).unwrap();
    assert!(matches!(f.set(Site::new(2, 0), identity_coin()), Err(Error::SiteOutsideBox { .. })));
    let mut bad = identity_coin();
    bad[0][0] = C64::new(2.0, 0.0);
    assert!(matches!(f.set(Site::ORIGIN, bad), Err(Error::NonUnitaryCoin { .. })));
    assert!(CoinField::new(0).is_err());
}

#[test]
fn coin_field_json_round_trip() {
    let f = random_coin_field(2, 0.5, 44);
    let back = CoinField::from_json(&f.to_json()).unwrap();
    assert!(f == back, "coin field changed in a JSON round trip");
    assert!(matches!(CoinField::from_json("{\"M0\": 1, \"coins\": [], \"extra\": 1}"), Err(Error::Malformed(_))));
    assert!(matches!(CoinField::from_json("[1,2"), Err(Error::Malformed(_))));
}

#[test]
fn permutation_coin_routes_inputs() {
    let c = permutation_coin([Up, Left, Right, Down], [0.5, 0.0, 0.0, 0.0]);
    assert!(unitarity_residual(&c) <= 1e-15);
    assert_eq!(c[Up.index()][Left.index()], C64::from_polar(1.0, 0.5));
}

#[test]
fn evolve_matches_repeated_apply() {
    let op = WalkOperator::new(random_coin_field(1, 0.8, 3));
    let u0 = random_state(1, 1);
    let mut u = u0.clone();
    for _ in 0..25 {
        u = op.apply(&u);
    }
    assert!(op.evolve(&u0, 25).max_abs_diff(&u) < 1e-13);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn apply_preserves_norm(seed in 0u64..100_000, density in 0.0f64..1.0) {
        let op = WalkOperator::new(random_coin_field(2, density, seed));
        let u = random_state(seed, 3);
        prop_assert!((op.apply(&u).norm() - u.norm()).abs() <= 1e-12 * u.norm());
    }

    #[test]
    fn adjoint_inverts_apply(seed in 0u64..100_000) {
        let op = WalkOperator::new(random_coin_field(1, 0.7, seed));
        let u = random_state(seed ^ 0xabc, 2);
        prop_assert!(op.apply_adjoint(&op.apply(&u)).max_abs_diff(&u) <= 1e-13);
    }

    #[test]
    fn long_evolution_keeps_norm(seed in 0u64..100_000, j in 0usize..4) {
        let op = WalkOperator::new(random_coin_field(1, 0.9, seed));
        let u = op.evolve(&WalkState::delta(Site::ORIGIN, Chirality::from_index(j)), 2000);
        prop_assert!((u.norm() - 1.0).abs() <= 1e-10);
    }
}
