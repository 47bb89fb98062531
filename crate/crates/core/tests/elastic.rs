use std::f64::consts::{FRAC_PI_4, TAU};

use qwres::elastic::{
    build_orbit_eigenfunction, classify_trapping, elastic_spectrum, normalize_phase, qc_spectrum, trace_trajectory,
    ElasticSite, PermutationCoin, TraceOutcome,
};
use qwres::lattice::{Chirality, Site, WalkOperator, C64};
use qwres::shape::elastic_corner_field;
use qwres::Error;

use Chirality::{Down, Left, Right, Up};

#[test]
fn corner_orbits_have_period_eight() {
    let pc = elastic_corner_field(2, 2).unwrap();
    let rep = classify_trapping(&pc);
    assert!(!rep.non_trapping);
    assert_eq!(rep.orbits.len(), 2);
    for o in &rep.orbits {
        assert_eq!(o.period(), 8);
        assert_eq!(o.phase_sum(), 0.0);
        let spec = qc_spectrum(o);
        for (k, l) in spec.iter().enumerate() {
            let want = normalize_phase(FRAC_PI_4 * k as f64);
            assert!(spec.iter().any(|x| (x - want).abs() < 1e-12), "missing {want} (k={k}, got {l})");
        }
    }
    let lines = elastic_spectrum(&rep.orbits, 1e-10);
    assert_eq!(lines.len(), 8);
    assert!(lines.iter().all(|l| l.orbits.len() == 2));
}

#[test]
fn orbit_eigenfunctions_are_eigenvectors() {
    let mut pc = elastic_corner_field(3, 1).unwrap();
    pc.set(Site::new(3, 1), ElasticSite::new([Right, Down, Up, Left], [0.0, 0.7, 1.3, 0.0]).unwrap()).unwrap();
    let op = WalkOperator::new(pc.to_coin_field());
    let rep = classify_trapping(&pc);
    assert!(!rep.orbits.is_empty());
    for o in &rep.orbits {
        for lambda in qc_spectrum(o) {
            let u = build_orbit_eigenfunction(o, lambda).unwrap();
            assert!((u.norm() - 1.0).abs() < 1e-12);
            let mut r = op.apply(&u);
            r.axpy(-C64::from_polar(1.0, -lambda), &u);
            assert!(r.norm() < 1e-12, "lambda {lambda}");
        }
        assert!(matches!(build_orbit_eigenfunction(o, 0.123), Err(Error::QuantizationViolation { .. })));
    }
}

#[test]
fn free_field_is_non_trapping() {
    let pc = PermutationCoin::new(2).unwrap();
    let rep = classify_trapping(&pc);
    assert!(rep.non_trapping && rep.orbits.is_empty());
    assert!(matches!(trace_trajectory(&pc, Site::ORIGIN, Up), TraceOutcome::Escaped(_)));
}

#[test]
fn reflecting_pair_traps_one_orbit() {
    // both sites swap ← and →
    let mut pc = PermutationCoin::new(1).unwrap();
    pc.set(Site::new(0, 0), ElasticSite::new([Right, Left, Down, Up], [0.5, 0.0, 0.0, 0.0]).unwrap()).unwrap();
    pc.set(Site::new(1, 0), ElasticSite::new([Right, Left, Down, Up], [0.0; 4]).unwrap()).unwrap();
    let TraceOutcome::Closed(o) = trace_trajectory(&pc, Site::new(0, 0), Left) else {
        panic!("bounce should close");
    };
    assert_eq!(o.period(), 2);
    let spec = qc_spectrum(&o);
    // 2λ + 0.5 ≡ 0 mod 2π
    for l in spec {
        assert!((normalize_phase(2.0 * l + 0.5)).min(TAU - normalize_phase(2.0 * l + 0.5)) < 1e-12);
    }
}

#[test]
fn elastic_site_needs_a_permutation() {
    assert!(ElasticSite::new([Left, Left, Down, Up], [0.0; 4]).is_err());
    let pc = elastic_corner_field(2, 2).unwrap();
    let back = PermutationCoin::from_coin_field(&pc.to_coin_field()).unwrap();
    assert_eq!(back.to_coin_field(), pc.to_coin_field());
}
