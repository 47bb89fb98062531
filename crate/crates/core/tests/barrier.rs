use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Schur};
use qwres::barrier::{
    boundary_sites, build_nonpenetrable, green_apply, interior_spectrum, norm_on_loop, swap_coin, BarrierSpec,
    ContourLoop, InteriorGraph,
};
use qwres::lattice::{identity_coin, Site, WalkOperator, WalkState, C64};
use qwres::Error;

/// Interior matrix assembled by applying the full walk to each basis state.
fn brute_interior(spec: &BarrierSpec) -> (InteriorGraph, DMatrix<C64>, f64) {
    let graph = InteriorGraph::new(spec.m0());
    let op = WalkOperator::new(spec.coin_field());
    let n = graph.len();
    let mut m = DMatrix::zeros(n, n);
    let mut leak: f64 = 0.0;
    for (c, (x, j)) in graph.basis().iter().enumerate() {
        let u = op.apply(&WalkState::delta(*x, *j));
        for (y, k, z) in u.entries() {
            match graph.index_of(y, k) {
                Some(r) => m[(r, c)] = z,
                None => leak = leak.max(z.norm()),
            }
        }
    }
    (graph, m, leak)
}

fn sorted_phases(values: impl Iterator<Item = C64>) -> Vec<f64> {
    let mut p: Vec<f64> = values.map(|v| (-v.arg()).rem_euclid(2.0 * PI)).collect();
    p.sort_by(f64::total_cmp);
    p
}

#[test]
fn interior_dimension_formula() {
    for m0 in 1..=3 {
        assert_eq!(InteriorGraph::new(m0).len() as i64, 8 * m0 * (2 * m0 + 1));
    }
}

#[test]
fn trivial_barrier_spectrum() {
    let spec = BarrierSpec::trivial(1).unwrap();
    let np = build_nonpenetrable(&spec).unwrap();
    let iu = interior_spectrum(&np).unwrap();
    let clusters = iu.phase_clusters(1e-8);
    let mults: Vec<usize> = clusters.iter().map(|c| c.1).collect();
    assert_eq!(mults, vec![10, 2, 10, 2]);
    for (k, (p, _)) in clusters.iter().enumerate() {
        assert!((p - PI / 2.0 * k as f64).abs() < 1e-10);
    }
}

#[test]
fn interior_matrix_matches_walk() {
    for spec in [BarrierSpec::trivial(2).unwrap(), BarrierSpec::random_interior(2, 8).unwrap()] {
        let (_, brute, leak) = brute_interior(&spec);
        assert!(leak <= 1e-14);
        let np = build_nonpenetrable(&spec).unwrap();
        assert!((&np.matrix - &brute).iter().all(|z| z.norm() < 1e-14));
        assert!(np.exterior.leakage <= 1e-12);
    }
}

#[test]
fn eigenphases_match_schur() {
    let spec = BarrierSpec::random_interior(1, 21).unwrap();
    let (_, brute, _) = brute_interior(&spec);
    let oracle = Schur::new(brute).eigenvalues().expect("triangular Schur form");
    let iu = interior_spectrum(&build_nonpenetrable(&spec).unwrap()).unwrap();
    let (a, b) = (sorted_phases(oracle.iter().copied()), sorted_phases(iu.eigenvalues.iter().copied()));
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(&b) {
        let d = (x - y).abs();
        assert!(d.min(2.0 * PI - d) < 1e-9, "{x} vs {y}");
    }
}

#[test]
fn green_apply_solves_resolvent_equation() {
    let spec = BarrierSpec::random_interior(2, 3).unwrap();
    let iu = interior_spectrum(&build_nonpenetrable(&spec).unwrap()).unwrap();
    let n = iu.graph.len();
    let f = DVector::from_fn(n, |i, _| C64::new((i as f64).sin(), (i as f64 * 0.3).cos()));
    let kappa = C64::new(1.3, -0.2);
    let u = green_apply(&iu, kappa, &f, None).unwrap();
    let w = (C64::new(0.0, -1.0) * kappa).exp();
    let r = &iu.matrix * &u - &u * w - &f;
    assert!(r.iter().all(|z| z.norm() < 1e-11));
    // exactly on an eigenvalue there is no resolvent
    let on = C64::new(iu.phases[0], 0.0);
    assert!(matches!(green_apply(&iu, on, &f, None), Err(Error::NearPole(_))));
}

#[test]
fn pinned_rows_are_enforced() {
    let mut boundary: BTreeMap<Site, _> = boundary_sites(1).into_iter().map(|s| (s, swap_coin())).collect();
    boundary.insert(Site::new(-1, 0), identity_coin());
    assert!(matches!(BarrierSpec::new(1, boundary, BTreeMap::new(), "x"), Err(Error::PinnedRow { .. })));
    let partial: BTreeMap<Site, _> = [(Site::new(1, 1), swap_coin())].into_iter().collect();
    assert!(BarrierSpec::new(1, partial, BTreeMap::new(), "x").is_err());
}

#[test]
fn loop_norm_grows_like_inverse_distance() {
    let iu = interior_spectrum(&build_nonpenetrable(&BarrierSpec::trivial(1).unwrap()).unwrap()).unwrap();
    // with s = 1 the loop passes at distance ~ε from the eigenvalue
    let a = norm_on_loop(&iu, PI / 2.0, 0.02, 1.0).unwrap().max_norm;
    let b = norm_on_loop(&iu, PI / 2.0, 0.01, 1.0).unwrap().max_norm;
    assert!((b / a - 2.0).abs() < 0.05, "ratio {}", b / a);
    assert!(norm_on_loop(&iu, 0.3, 0.1, 0.5).is_err());
    let lp = ContourLoop::new(1.0, 0.25, 0.5, 1.0, 2.0).unwrap();
    assert_eq!((lp.half_re, lp.half_im), (0.5, 1.0));
}

#[test]
fn exterior_has_no_closed_orbits() {
    let np = build_nonpenetrable(&BarrierSpec::trivial(2).unwrap()).unwrap();
    assert!(np.exterior.non_trapping);
    assert_eq!(np.exterior.closed_orbits, 0);
}
