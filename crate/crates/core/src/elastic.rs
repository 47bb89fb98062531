//! Elastic walks: permutation coins, trajectories, closed orbits and their
//! quantization-condition spectra.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{
    box_sites, permutation_coin, ray_meets_box, Chirality, Coin, CoinField, Site, WalkState, C64, ZERO,
};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ElasticSite {
    /// sigma[j]: outgoing chirality for incoming chirality j.
    pub sigma: [Chirality; 4],
    pub alpha: [f64; 4],
}

impl ElasticSite {
    pub fn new(sigma: [Chirality; 4], alpha: [f64; 4]) -> Result<ElasticSite> {
        let distinct: BTreeSet<_> = sigma.iter().collect();
        if distinct.len() != 4 {
            return Err(Error::InvalidParameter(format!("{sigma:?} is not a permutation")));
        }
        Ok(ElasticSite { sigma, alpha: alpha.map(|a| a.rem_euclid(TAU)) })
    }

    pub fn plain(sigma: [Chirality; 4]) -> Result<ElasticSite> {
        ElasticSite::new(sigma, [0.0; 4])
    }

    pub fn coin(&self) -> Coin {
        permutation_coin(self.sigma, self.alpha)
    }
}

/// Phased permutation coin field, identity outside the box.
#[derive(Clone, Debug, PartialEq)]
pub struct PermutationCoin {
    m0: i64,
    sites: BTreeMap<Site, ElasticSite>,
}

impl PermutationCoin {
    pub fn new(m0: i64) -> Result<PermutationCoin> {
        if m0 < 1 {
            return Err(Error::InvalidParameter(format!("M0 must be positive, got {m0}")));
        }
        Ok(PermutationCoin { m0, sites: BTreeMap::new() })
    }

    pub fn set(&mut self, site: Site, e: ElasticSite) -> Result<()> {
        if !site.in_box(self.m0) {
            return Err(Error::SiteOutsideBox { site, m0: self.m0 });
        }
        self.sites.insert(site, e);
        Ok(())
    }

    pub fn m0(&self) -> i64 {
        self.m0
    }

    pub fn sites(&self) -> impl Iterator<Item = (&Site, &ElasticSite)> {
        self.sites.iter()
    }

    pub fn to_coin_field(&self) -> CoinField {
        let mut f = CoinField::free(self.m0);
        for (s, e) in &self.sites {
            f.set(*s, e.coin()).expect("permutation coins are unitary and in the box");
        }
        f
    }

    /// Recovers the elastic structure of a coin field whose overrides are all
    /// phased permutation matrices.
    pub fn from_coin_field(field: &CoinField) -> Option<PermutationCoin> {
        let mut out = PermutationCoin::new(field.m0()).ok()?;
        for (site, c) in field.overrides() {
            let mut sigma = [Chirality::Left; 4];
            let mut alpha = [0.0; 4];
            for k in 0..4 {
                let nz: Vec<usize> = (0..4).filter(|&j| c[j][k] != ZERO).collect();
                if nz.len() != 1 || (c[nz[0]][k].norm() - 1.0).abs() > 1e-12 {
                    return None;
                }
                sigma[k] = Chirality::from_index(nz[0]);
                alpha[k] = c[nz[0]][k].arg();
            }
            out.set(*site, ElasticSite::new(sigma, alpha).ok()?).ok()?;
        }
        Some(out)
    }

    /// One step from state (q, p): returns the next state and the phase β.
    pub fn step(&self, q: Site, p: Chirality) -> (Site, Chirality, f64) {
        let (next, beta) = match self.sites.get(&q) {
            Some(e) => (e.sigma[p.index()], e.alpha[p.index()]),
            None => (p, 0.0),
        };
        (q.offset(next), next, beta)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Trajectory {
    pub origin: (Site, Chirality),
    /// Φ(0), Φ(1), ... up to the point where escape was decided.
    pub samples: Vec<(Site, Chirality)>,
    pub phases: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClosedOrbit {
    /// Φ(0..N−1); Φ(N) = Φ(0).
    pub states: Vec<(Site, Chirality)>,
    /// β_t = α_{p(t)}(q(t)).
    pub phases: Vec<f64>,
}

impl ClosedOrbit {
    pub fn period(&self) -> usize {
        self.states.len()
    }

    pub fn phase_sum(&self) -> f64 {
        self.phases.iter().sum()
    }

    pub fn sites(&self) -> Vec<Site> {
        self.states.iter().map(|(s, _)| *s).collect()
    }

    /// Rotated so that the smallest state comes first.
    fn canonical(mut self) -> ClosedOrbit {
        let k = (0..self.states.len()).min_by_key(|&i| self.states[i]).unwrap_or(0);
        self.states.rotate_left(k);
        self.phases.rotate_left(k);
        self
    }

    pub fn contains(&self, state: (Site, Chirality)) -> bool {
        self.states.contains(&state)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum TraceOutcome {
    Closed(ClosedOrbit),
    Escaped(Trajectory),
}

/// Follows the deterministic orbit from (y, j) until it closes or leaves the
/// box on a ray that never comes back.
pub fn trace_trajectory(coin: &PermutationCoin, y: Site, j: Chirality) -> TraceOutcome {
    let m = coin.m0;
    let mut samples = vec![(y, j)];
    let mut phases = Vec::new();
    let (mut q, mut p) = (y, j);
    loop {
        if !q.in_box(m) && !ray_meets_box(q, p, m) {
            return TraceOutcome::Escaped(Trajectory { origin: (y, j), samples, phases });
        }
        let (nq, np, beta) = coin.step(q, p);
        phases.push(beta);
        q = nq;
        p = np;
        if (q, p) == (y, j) {
            return TraceOutcome::Closed(ClosedOrbit { states: samples, phases });
        }
        samples.push((q, p));
    }
}

/// N phases λ_k = (−Σβ + 2πk)/N reduced to [0, 2π).
pub fn qc_spectrum(orbit: &ClosedOrbit) -> Vec<f64> {
    let n = orbit.period() as f64;
    let sum = orbit.phase_sum();
    (0..orbit.period())
        .map(|k| normalize_phase((-sum + TAU * k as f64) / n))
        .collect()
}

/// Maps to [0, 2π), snapping values within 1e-12 of 2π to 0.
pub fn normalize_phase(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    if TAU - r < 1e-12 {
        0.0
    } else {
        r + 0.0
    }
}

/// Distance on the circle.
pub fn phase_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

/// Unit-norm eigenfunction f_t along the orbit with eigenvalue e^{−iλ}.
pub fn build_orbit_eigenfunction(orbit: &ClosedOrbit, lambda: f64) -> Result<WalkState> {
    let n = orbit.period();
    let mismatch = phase_distance(lambda * n as f64 + orbit.phase_sum(), 0.0);
    if mismatch > 1e-10 {
        return Err(Error::QuantizationViolation { lambda, mismatch });
    }
    let mut u = WalkState::new();
    let mut f = C64::new(1.0 / (n as f64).sqrt(), 0.0);
    for t in 0..n {
        let (q, p) = orbit.states[t];
        u.set(q, p, f);
        f *= C64::from_polar(1.0, orbit.phases[t] + lambda);
    }
    Ok(u)
}

#[derive(Clone, Debug)]
pub struct TrappingReport {
    pub orbits: Vec<ClosedOrbit>,
    pub non_trapping: bool,
}

/// Traces every start in the box dilated by one; orbits not meeting that set
/// are straight lines.
pub fn classify_trapping(coin: &PermutationCoin) -> TrappingReport {
    let starts: Vec<(Site, Chirality)> = box_sites(coin.m0 + 1)
        .into_iter()
        .flat_map(|s| Chirality::ALL.map(|j| (s, j)))
        .collect();
    let found: Vec<ClosedOrbit> = starts
        .par_iter()
        .filter_map(|&(s, j)| match trace_trajectory(coin, s, j) {
            TraceOutcome::Closed(o) => Some(o.canonical()),
            TraceOutcome::Escaped(_) => None,
        })
        .collect();
    let mut unique: BTreeMap<(Site, Chirality), ClosedOrbit> = BTreeMap::new();
    for o in found {
        unique.entry(o.states[0]).or_insert(o);
    }
    let orbits: Vec<ClosedOrbit> = unique.into_values().collect();
    let non_trapping = orbits.is_empty();
    TrappingReport { orbits, non_trapping }
}

/// A phase of the elastic spectrum with the orbits producing it.
#[derive(Clone, Debug, Serialize)]
pub struct SpectralLine {
    pub phase: f64,
    pub orbits: Vec<usize>,
}

/// Union of per-orbit spectra, merged within `tol`, sorted by phase.
pub fn elastic_spectrum(orbits: &[ClosedOrbit], tol: f64) -> Vec<SpectralLine> {
    let mut all: Vec<(f64, usize)> = orbits
        .iter()
        .enumerate()
        .flat_map(|(i, o)| qc_spectrum(o).into_iter().map(move |l| (l, i)))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut lines: Vec<SpectralLine> = Vec::new();
    for (l, i) in all {
        match lines.iter_mut().find(|line| phase_distance(line.phase, l) <= tol) {
            Some(line) => line.orbits.push(i),
            None => lines.push(SpectralLine { phase: l, orbits: vec![i] }),
        }
    }
    lines
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounce_orbit_has_phases_zero_and_pi() {
        let mut c = PermutationCoin::new(1).unwrap();
        let swap = [Chirality::Right, Chirality::Left, Chirality::Up, Chirality::Down];
        c.set(Site::new(0, 0), ElasticSite::plain(swap).unwrap()).unwrap();
        c.set(Site::new(1, 0), ElasticSite::plain(swap).unwrap()).unwrap();
        match trace_trajectory(&c, Site::new(0, 0), Chirality::Left) {
            TraceOutcome::Closed(o) => {
                assert_eq!(o.period(), 2);
                let mut s = qc_spectrum(&o);
                s.sort_by(f64::total_cmp);
                assert!(s[0].abs() < 1e-15 && (s[1] - std::f64::consts::PI).abs() < 1e-15);
            }
            other => panic!("expected a closed orbit, got {other:?}"),
        }
    }

    #[test]
    fn phase_normalization_snaps() {
        assert_eq!(normalize_phase(TAU - 1e-14), 0.0);
        assert!((normalize_phase(-1.0) - (TAU - 1.0)).abs() < 1e-15);
    }
}
