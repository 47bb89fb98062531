//! Non-penetrable barrier: the walk splits into a finite interior walk on the
//! directed edges of the box and an exterior walk.

use std::collections::{BTreeMap, HashMap};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::elastic::{classify_trapping, normalize_phase, phase_distance, ElasticSite, PermutationCoin};
use crate::error::{Error, Result};
use crate::lattice::{
    box_sites, random_unitary_coin, unitarity_residual, Chirality, Coin, CoinField, Site, WalkState,
    C64, ONE, UNITARITY_TOL, ZERO,
};
use crate::linalg::{unitarity_defect, unitary_eigen};
use crate::spectral::Rect;
use crate::translation::theta_weight;

/// The four sides of the boundary layer K of the box [-M0, M0]².
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Side {
    /// x1 = −M0
    K1Minus,
    /// x1 = +M0
    K1Plus,
    /// x2 = −M0
    K2Minus,
    /// x2 = +M0
    K2Plus,
}

impl Side {
    /// Row that is pinned on this side, and the unit row it must equal.
    pub fn pinned_row(self) -> (Chirality, Chirality) {
        match self {
            Side::K1Minus => (Chirality::Left, Chirality::Right),
            Side::K1Plus => (Chirality::Right, Chirality::Left),
            Side::K2Minus => (Chirality::Down, Chirality::Up),
            Side::K2Plus => (Chirality::Up, Chirality::Down),
        }
    }
}

pub fn sides_of(site: Site, m0: i64) -> Vec<Side> {
    let mut out = Vec::new();
    if site.x == -m0 {
        out.push(Side::K1Minus);
    }
    if site.x == m0 {
        out.push(Side::K1Plus);
    }
    if site.y == -m0 {
        out.push(Side::K2Minus);
    }
    if site.y == m0 {
        out.push(Side::K2Plus);
    }
    out
}

pub fn boundary_sites(m0: i64) -> Vec<Site> {
    box_sites(m0).into_iter().filter(|s| s.linf() == m0).collect()
}

/// The boundary coin [[0,1,0,0],[1,0,0,0],[0,0,0,1],[0,0,1,0]].
pub fn swap_coin() -> Coin {
    let mut c = [[ZERO; 4]; 4];
    c[0][1] = ONE;
    c[1][0] = ONE;
    c[2][3] = ONE;
    c[3][2] = ONE;
    c
}

pub fn check_pinned_rows(site: Site, m0: i64, c: &Coin) -> Result<()> {
    for side in sides_of(site, m0) {
        let (row, one) = side.pinned_row();
        for k in Chirality::ALL {
            let target = if k == one { ONE } else { ZERO };
            if (c[row.index()][k.index()] - target).norm() > UNITARITY_TOL {
                return Err(Error::PinnedRow {
                    site,
                    detail: format!("row {row} on {side:?} must be the unit row {one}"),
                });
            }
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct BarrierSpec {
    m0: i64,
    boundary: BTreeMap<Site, Coin>,
    interior: BTreeMap<Site, Coin>,
    label: String,
}

impl BarrierSpec {
    /// `boundary` must give a coin for every site of K.
    pub fn new(m0: i64, boundary: BTreeMap<Site, Coin>, interior: BTreeMap<Site, Coin>, label: &str) -> Result<BarrierSpec> {
        if m0 < 1 {
            return Err(Error::InvalidParameter(format!("M0 must be positive, got {m0}")));
        }
        for s in boundary_sites(m0) {
            if !boundary.contains_key(&s) {
                return Err(Error::InvalidParameter(format!("no boundary coin at {s}")));
            }
        }
        for (s, c) in &boundary {
            if s.linf() != m0 {
                return Err(Error::InvalidParameter(format!("{s} is not a boundary site")));
            }
            let residual = unitarity_residual(c);
            if !(residual <= UNITARITY_TOL) {
                return Err(Error::NonUnitaryCoin { site: *s, residual });
            }
            check_pinned_rows(*s, m0, c)?;
        }
        for (s, c) in &interior {
            if s.linf() >= m0 {
                return Err(Error::InvalidParameter(format!("{s} is not strictly inside the box")));
            }
            let residual = unitarity_residual(c);
            if !(residual <= UNITARITY_TOL) {
                return Err(Error::NonUnitaryCoin { site: *s, residual });
            }
        }
        Ok(BarrierSpec { m0, boundary, interior, label: label.to_string() })
    }

    /// Swap coin on K, identity inside.
    pub fn trivial(m0: i64) -> Result<BarrierSpec> {
        let boundary = boundary_sites(m0.max(1)).into_iter().map(|s| (s, swap_coin())).collect();
        BarrierSpec::new(m0, boundary, BTreeMap::new(), "identity")
    }

    /// Swap coin on K, seeded random unitaries at every interior site.
    pub fn random_interior(m0: i64, seed: u64) -> Result<BarrierSpec> {
        let boundary = boundary_sites(m0.max(1)).into_iter().map(|s| (s, swap_coin())).collect();
        let interior = box_sites(m0 - 1)
            .into_iter()
            .enumerate()
            .map(|(i, s)| (s, random_unitary_coin(seed.wrapping_mul(1000).wrapping_add(i as u64))))
            .collect();
        BarrierSpec::new(m0, boundary, interior, &format!("random(seed={seed})"))
    }

    pub fn m0(&self) -> i64 {
        self.m0
    }

    /// Description of the interior coins, recorded in output metadata.
    pub fn interior_label(&self) -> &str {
        &self.label
    }

    pub fn boundary(&self) -> &BTreeMap<Site, Coin> {
        &self.boundary
    }

    pub fn interior(&self) -> &BTreeMap<Site, Coin> {
        &self.interior
    }

    pub fn coin_field(&self) -> CoinField {
        let mut f = CoinField::free(self.m0);
        for (s, c) in self.boundary.iter().chain(self.interior.iter()) {
            f.set(*s, *c).expect("validated at construction");
        }
        f
    }
}

/// Directed edges of the box graph, identified with amplitudes u_j(x) whose
/// edge x − d_j → x stays inside the box.
#[derive(Clone, Debug)]
pub struct InteriorGraph {
    m0: i64,
    basis: Vec<(Site, Chirality)>,
    index: HashMap<(Site, Chirality), usize>,
}

impl InteriorGraph {
    pub fn new(m0: i64) -> InteriorGraph {
        let mut basis = Vec::new();
        for x in box_sites(m0) {
            for j in Chirality::ALL {
                if (x - j.step()).in_box(m0) {
                    basis.push((x, j));
                }
            }
        }
        let index = basis.iter().enumerate().map(|(i, e)| (*e, i)).collect();
        InteriorGraph { m0, basis, index }
    }

    pub fn m0(&self) -> i64 {
        self.m0
    }

    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    pub fn basis(&self) -> &[(Site, Chirality)] {
        &self.basis
    }

    pub fn index_of(&self, site: Site, j: Chirality) -> Option<usize> {
        self.index.get(&(site, j)).copied()
    }

    /// (origin, terminus) of each basis edge.
    pub fn edges(&self) -> Vec<(Site, Site)> {
        self.basis.iter().map(|(x, j)| (*x - j.step(), *x)).collect()
    }

    pub fn to_state(&self, v: &DVector<C64>) -> WalkState {
        self.basis.iter().zip(v.iter()).map(|((s, j), z)| (*s, *j, *z)).collect()
    }

    pub fn from_state(&self, u: &WalkState) -> DVector<C64> {
        DVector::from_iterator(self.len(), self.basis.iter().map(|(s, j)| u.component(*s, *j)))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ExteriorDescriptor {
    /// Largest amplitude transferred between interior and exterior states.
    pub leakage: f64,
    /// Closed elastic orbits of the exterior reflection structure.
    pub closed_orbits: usize,
    pub non_trapping: bool,
}

#[derive(Clone, Debug)]
pub struct NonPenetrable {
    pub coin: CoinField,
    pub graph: InteriorGraph,
    pub matrix: DMatrix<C64>,
    pub exterior: ExteriorDescriptor,
}

fn column_of(coin: &CoinField, x: Site, j: Chirality) -> [(Site, Chirality, C64); 4] {
    let c = coin.coin(x);
    Chirality::ALL.map(|k| (x.offset(k), k, c[k.index()][j.index()]))
}

pub fn build_nonpenetrable(spec: &BarrierSpec) -> Result<NonPenetrable> {
    let coin = spec.coin_field();
    let graph = InteriorGraph::new(spec.m0);
    let n = graph.len();
    let mut matrix = DMatrix::zeros(n, n);
    let mut leakage: f64 = 0.0;
    for (col, (x, j)) in graph.basis().iter().enumerate() {
        for (y, k, z) in column_of(&coin, *x, *j) {
            match graph.index_of(y, k) {
                Some(row) => matrix[(row, col)] += z,
                None => leakage = leakage.max(z.norm()),
            }
        }
    }
    // exterior states near the box must not feed the interior
    for x in box_sites(spec.m0 + 1) {
        for j in Chirality::ALL {
            if graph.index_of(x, j).is_some() {
                continue;
            }
            for (y, k, z) in column_of(&coin, x, j) {
                if graph.index_of(y, k).is_some() {
                    leakage = leakage.max(z.norm());
                }
            }
        }
    }
    if leakage > 1e-12 {
        return Err(Error::PinnedRow { site: Site::ORIGIN, detail: format!("interior/exterior leakage {leakage:.3e}") });
    }
    let exterior = exterior_structure(spec.m0, &graph, leakage);
    Ok(NonPenetrable { coin, graph, matrix, exterior })
}

/// The exterior walk only sees the pinned rows, which act as reflections;
/// trace that reflection structure and count orbits through exterior states.
fn exterior_structure(m0: i64, graph: &InteriorGraph, leakage: f64) -> ExteriorDescriptor {
    let mut reflect = PermutationCoin::new(m0).expect("m0 >= 1");
    let swap = [Chirality::Right, Chirality::Left, Chirality::Up, Chirality::Down];
    for s in boundary_sites(m0) {
        reflect.set(s, ElasticSite::plain(swap).expect("permutation")).expect("in box");
    }
    let report = classify_trapping(&reflect);
    let closed_orbits = report
        .orbits
        .iter()
        .filter(|o| o.states.iter().any(|(s, j)| graph.index_of(*s, *j).is_none()))
        .count();
    ExteriorDescriptor { leakage, closed_orbits, non_trapping: closed_orbits == 0 }
}

#[derive(Clone, Debug)]
pub struct InteriorUnitary {
    pub graph: InteriorGraph,
    pub matrix: DMatrix<C64>,
    pub eigenvalues: Vec<C64>,
    /// κ_j with e^{−iκ_j} = eigenvalue, in [0, 2π).
    pub phases: Vec<f64>,
    /// Orthonormal eigenvectors as columns.
    pub vectors: DMatrix<C64>,
}

pub fn interior_spectrum(np: &NonPenetrable) -> Result<InteriorUnitary> {
    let defect = unitarity_defect(&np.matrix);
    if defect > 1e-10 {
        return Err(Error::EigenSolver(format!("interior matrix not unitary (defect {defect:.3e})")));
    }
    let eig = unitary_eigen(&np.matrix)?;
    let n = np.graph.len();
    let gram = eig.vectors.adjoint() * &eig.vectors - DMatrix::<C64>::identity(n, n);
    let gram_err = gram.iter().fold(0.0f64, |a, z| a.max(z.norm()));
    if gram_err > 1e-8 {
        return Err(Error::EigenSolver(format!("eigenvectors not orthonormal ({gram_err:.3e})")));
    }
    if let Some(bad) = eig.values.iter().find(|v| (v.norm() - 1.0).abs() > 1e-10) {
        return Err(Error::EigenSolver(format!("eigenvalue {bad} off the unit circle")));
    }
    let phases = eig.values.iter().map(|v| normalize_phase(-v.arg())).collect();
    Ok(InteriorUnitary {
        graph: np.graph.clone(),
        matrix: np.matrix.clone(),
        eigenvalues: eig.values,
        phases,
        vectors: eig.vectors,
    })
}

impl InteriorUnitary {
    /// Distinct eigen-phases (merged within `tol`) with multiplicities, sorted.
    pub fn phase_clusters(&self, tol: f64) -> Vec<(f64, usize)> {
        let mut ph = self.phases.clone();
        ph.sort_by(f64::total_cmp);
        let mut out: Vec<(f64, usize)> = Vec::new();
        for p in ph {
            match out.iter_mut().find(|(q, _)| phase_distance(*q, p) <= tol) {
                Some(c) => c.1 += 1,
                None => out.push((p, 1)),
            }
        }
        out
    }

    /// Diagonal of T(θ) on the interior basis.
    pub fn theta_weights(&self, theta: C64) -> DVector<C64> {
        DVector::from_iterator(
            self.graph.len(),
            self.graph.basis().iter().map(|(s, j)| theta_weight(theta, *s, *j)),
        )
    }
}

/// Interior resolvent by the eigen-expansion
/// u = Σ (f, u_j)/(e^{−iκ_j} − e^{−iκ}) u_j, optionally conjugated by T(θ).
pub fn green_apply(iu: &InteriorUnitary, kappa: C64, f: &DVector<C64>, theta: Option<C64>) -> Result<DVector<C64>> {
    let w = (C64::new(0.0, -1.0) * kappa).exp();
    let gap = iu.eigenvalues.iter().map(|l| (l - w).norm()).fold(f64::INFINITY, f64::min);
    if gap <= 1e-12 {
        return Err(Error::NearPole(format!("e^(-i kappa) at distance {gap:.3e} from the interior spectrum")));
    }
    let input = match theta {
        Some(t) => f.component_mul(&iu.theta_weights(-t)),
        None => f.clone(),
    };
    let mut out = DVector::zeros(f.len());
    for (j, lam) in iu.eigenvalues.iter().enumerate() {
        let u = iu.vectors.column(j);
        let coef = u.dotc(&input) / (lam - w);
        out += u * coef;
    }
    if let Some(t) = theta {
        out = out.component_mul(&iu.theta_weights(t));
    }
    Ok(out)
}

/// Rectangle μ0 ± aε^s, ±ibε^s.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ContourLoop {
    pub center: f64,
    pub half_re: f64,
    pub half_im: f64,
}

impl ContourLoop {
    pub fn new(mu0: f64, eps: f64, s: f64, a: f64, b: f64) -> Result<ContourLoop> {
        if !(eps > 0.0 && s > 0.0 && a > 0.0 && b > 0.0) {
            return Err(Error::InvalidParameter(format!("loop needs eps, s, a, b > 0 (eps={eps}, s={s})")));
        }
        let r = eps.powf(s);
        Ok(ContourLoop { center: mu0, half_re: a * r, half_im: b * r })
    }

    pub fn rect(&self) -> Rect {
        Rect {
            re_lo: self.center - self.half_re,
            re_hi: self.center + self.half_re,
            im_lo: -self.half_im,
            im_hi: self.half_im,
        }
    }

    /// `per_side` points on each of the four sides, counterclockwise.
    pub fn samples(&self, per_side: usize) -> Vec<C64> {
        let c = self.rect().corners();
        (0..4)
            .flat_map(|k| {
                let (a, b) = (c[k], c[(k + 1) % 4]);
                (0..per_side).map(move |i| a + (b - a) * (i as f64 / per_side as f64))
            })
            .collect()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LoopNorm {
    pub eps: f64,
    pub s: f64,
    pub max_norm: f64,
    pub samples: usize,
}

/// max over the loop of ‖(Ũ_i − e^{−iκ})^{-1}‖, the largest singular value.
pub fn norm_on_loop(iu: &InteriorUnitary, mu0: f64, eps: f64, s: f64) -> Result<LoopNorm> {
    let lp = ContourLoop::new(mu0, eps, s, 1.0, 1.0)?;
    let near = iu.phases.iter().map(|p| phase_distance(*p, mu0)).fold(f64::INFINITY, f64::min);
    if near > 1e-8 {
        return Err(Error::InvalidParameter(format!("mu0 = {mu0} is not an interior eigen-phase")));
    }
    if let Some(p) = iu
        .phases
        .iter()
        .find(|p| phase_distance(**p, mu0) > 1e-8 && phase_distance(**p, mu0) <= lp.half_re)
    {
        return Err(Error::InvalidParameter(format!("eigen-phase {p} lies inside the loop around {mu0}")));
    }
    let n = iu.graph.len();
    let pts = lp.samples(16);
    let norms: Vec<f64> = pts
        .par_iter()
        .map(|k| {
            let w = (C64::new(0.0, -1.0) * k).exp();
            let a = &iu.matrix - DMatrix::<C64>::identity(n, n) * w;
            let smin = a.singular_values().iter().fold(f64::INFINITY, |m, s| m.min(*s));
            1.0 / smin
        })
        .collect();
    let max_norm = norms.iter().fold(0.0f64, |m, v| m.max(*v));
    Ok(LoopNorm { eps, s, max_norm, samples: pts.len() })
}
