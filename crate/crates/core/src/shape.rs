//! ε-families: the four-corner elastic model with perturbed corners, and
//! barriers opened by weaving ε into the boundary coins.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde::Serialize;

use crate::barrier::{sides_of, BarrierSpec, ContourLoop, Side};
use crate::elastic::{normalize_phase, phase_distance, trace_trajectory, ElasticSite, PermutationCoin, TraceOutcome};
use crate::error::{Error, Result};
use crate::lattice::{
    basis, coin_distance, coin_from_columns, unitarity_residual, Chirality, Coin, CoinField, Site, WalkState, C64,
    ONE, UNITARITY_TOL, ZERO,
};
use crate::spectral::{locate_roots, ContinuedResolvent, InteractionModel, Root};
use crate::translation::{apply_t_theta, theta_weight, OutgoingState};

use Chirality::{Down, Left, Right, Up};

const I: C64 = C64::new(0.0, 1.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CornerPreset {
    /// ε ignored; the elastic corner model itself.
    Unperturbed,
    /// (0,0) opens the Φ₊ loop only: c⁺ = √(1−ε²), c⁻ = 1.
    OneCorner,
    /// (0,0) opens both loops: c⁺ = c⁻ = √(1−ε²).
    OpenCorner,
    /// Pure phase e^{iε} on the Φ₊ transition at (0,0): |c⁺| = 1.
    PhaseCorner,
}

/// Corner sites (0,0), (m0,0), (m0,n0), (0,n0).
pub fn corner_sites(m0: i64, n0: i64) -> [Site; 4] {
    [Site::new(0, 0), Site::new(m0, 0), Site::new(m0, n0), Site::new(0, n0)]
}

/// Elastic corner coins, listed by columns ←, →, ↓, ↑.
pub fn elastic_corner_coins() -> [[Chirality; 4]; 4] {
    [[Up, Left, Right, Down], [Right, Up, Left, Down], [Right, Down, Up, Left], [Down, Left, Up, Right]]
}

/// Entries (row, column) that must vanish at each corner.
const ZERO_PATTERN: [[(Chirality, Chirality); 2]; 4] = [
    [(Right, Left), (Up, Down)],
    [(Up, Down), (Left, Right)],
    [(Down, Up), (Left, Right)],
    [(Right, Left), (Down, Up)],
];

/// Transitions (out, in) along Φ₊ and Φ₋ at each corner.
const PLUS_TRANSITIONS: [(Chirality, Chirality); 4] = [(Up, Left), (Left, Down), (Down, Right), (Right, Up)];
const MINUS_TRANSITIONS: [(Chirality, Chirality); 4] = [(Right, Down), (Up, Right), (Left, Up), (Down, Left)];

#[derive(Clone, Debug, PartialEq)]
pub struct CornerFamily {
    pub m0: i64,
    pub n0: i64,
    pub eps: f64,
    pub coins: [Coin; 4],
}

pub fn elastic_corner_field(m0: i64, n0: i64) -> Result<PermutationCoin> {
    if m0 < 1 || n0 < 1 {
        return Err(Error::InvalidParameter(format!("m0, n0 must be positive (got {m0}, {n0})")));
    }
    let mut pc = PermutationCoin::new(m0.max(n0))?;
    for (s, sigma) in corner_sites(m0, n0).into_iter().zip(elastic_corner_coins()) {
        pc.set(s, ElasticSite::plain(sigma)?)?;
    }
    Ok(pc)
}

pub fn make_corner_family(m0: i64, n0: i64, eps: f64, preset: CornerPreset) -> Result<CornerFamily> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::InvalidParameter(format!("eps must lie in [0, 1], got {eps}")));
    }
    let el = elastic_corner_field(m0, n0)?;
    let mut coins: [Coin; 4] = elastic_corner_coins().map(|sigma| ElasticSite::plain(sigma).expect("perm").coin());
    let s = (1.0 - eps * eps).sqrt();
    let e = C64::new(eps, 0.0);
    let sc = C64::new(s, 0.0);
    let col = |v: [(Chirality, C64); 2]| {
        let mut c = [ZERO; 4];
        for (j, z) in v {
            c[j.index()] += z;
        }
        c
    };
    let c00 = &mut coins[0];
    match preset {
        CornerPreset::Unperturbed => {}
        CornerPreset::OneCorner | CornerPreset::OpenCorner => {
            let mut cols = [basis(Up), basis(Left), basis(Right), basis(Down)];
            cols[Left.index()] = col([(Up, sc), (Down, e)]);
            cols[Up.index()] = col([(Up, -e), (Down, sc)]);
            if preset == CornerPreset::OpenCorner {
                cols[Down.index()] = col([(Right, sc), (Left, e)]);
                cols[Right.index()] = col([(Right, -e), (Left, sc)]);
            }
            *c00 = coin_from_columns(cols);
        }
        CornerPreset::PhaseCorner => {
            c00[Up.index()][Left.index()] = C64::from_polar(1.0, eps);
        }
    }
    let fam = CornerFamily { m0, n0, eps, coins };
    fam.validate(&el.to_coin_field())?;
    Ok(fam)
}

impl CornerFamily {
    /// Family with caller-supplied corner coins.
    pub fn custom(m0: i64, n0: i64, eps: f64, coins: [Coin; 4]) -> Result<CornerFamily> {
        let el = elastic_corner_field(m0, n0)?;
        let fam = CornerFamily { m0, n0, eps, coins };
        fam.validate(&el.to_coin_field())?;
        Ok(fam)
    }

    fn validate(&self, el: &CoinField) -> Result<()> {
        for (k, site) in corner_sites(self.m0, self.n0).into_iter().enumerate() {
            let c = &self.coins[k];
            let residual = unitarity_residual(c);
            if !(residual <= UNITARITY_TOL) {
                return Err(Error::NonUnitaryCoin { site, residual });
            }
            for (row, colm) in ZERO_PATTERN[k] {
                if c[row.index()][colm.index()] != ZERO {
                    return Err(Error::InvalidParameter(format!(
                        "entry ({row}, {colm}) at corner {site} must vanish"
                    )));
                }
            }
            // equality with ε is allowed; strictness is waived there
            let dev = coin_distance(c, &el.coin(site));
            if dev > self.eps + 1e-15 {
                return Err(Error::InvalidParameter(format!("corner {site} deviates by {dev} > eps = {}", self.eps)));
            }
        }
        Ok(())
    }

    pub fn period(&self) -> usize {
        (2 * (self.m0 + self.n0)) as usize
    }

    pub fn coin_field(&self) -> CoinField {
        let mut f = CoinField::free(self.m0.max(self.n0));
        for (s, c) in corner_sites(self.m0, self.n0).into_iter().zip(self.coins.iter()) {
            f.set(s, *c).expect("validated");
        }
        f
    }

    fn product(&self, transitions: &[(Chirality, Chirality); 4]) -> C64 {
        transitions
            .iter()
            .zip(self.coins.iter())
            .map(|((out, inc), c)| c[out.index()][inc.index()])
            .product()
    }

    pub fn c_plus(&self) -> C64 {
        self.product(&PLUS_TRANSITIONS)
    }

    pub fn c_minus(&self) -> C64 {
        self.product(&MINUS_TRANSITIONS)
    }
}

/// Roots κ of e^{−iNκ} = c with Re κ in [0, 2π), sorted by Re κ.
pub fn qc2_roots(c: C64, n: usize) -> Vec<C64> {
    let nf = n as f64;
    let mut out: Vec<C64> = (0..n)
        .map(|k| C64::new(normalize_phase(-(c.arg() + TAU * k as f64) / nf), c.norm().ln() / nf))
        .collect();
    out.sort_by(|a, b| a.re.total_cmp(&b.re));
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct QuantizationData {
    pub c_plus: C64,
    pub c_minus: C64,
    pub roots_plus: Vec<C64>,
    pub roots_minus: Vec<C64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum OrbitSign {
    Plus,
    Minus,
}

#[derive(Clone, Debug)]
pub enum CornerState {
    Eigenfunction(WalkState),
    Resonant(OutgoingState),
}

#[derive(Clone, Debug)]
pub struct CornerMode {
    pub sign: OrbitSign,
    pub kappa: C64,
    pub state: CornerState,
}

#[derive(Clone, Debug)]
pub struct CornerQuantization {
    pub data: QuantizationData,
    pub modes: Vec<CornerMode>,
}

fn corner_orbit(fam: &CornerFamily, sign: OrbitSign) -> Vec<(Site, Chirality)> {
    let el = elastic_corner_field(fam.m0, fam.n0).expect("validated family");
    let start = match sign {
        OrbitSign::Plus => Left,
        OrbitSign::Minus => Down,
    };
    match trace_trajectory(&el, Site::ORIGIN, start) {
        TraceOutcome::Closed(o) => o.states,
        TraceOutcome::Escaped(_) => unreachable!("corner orbits are closed"),
    }
}

/// Walks the orbit with the perturbed coins: f_{t+1} = e^{iκ} c f_t along the
/// orbit, and every off-orbit coin output starts an outgoing ray.
pub fn corner_mode(fam: &CornerFamily, sign: OrbitSign, kappa: C64) -> Result<CornerState> {
    let field = fam.coin_field();
    let m = field.m0();
    let orbit = corner_orbit(fam, sign);
    let n = orbit.len();
    let mut core = WalkState::new();
    let mut tails: [BTreeMap<i64, C64>; 4] = Default::default();
    let mut f = ONE;
    for t in 0..n {
        let (q, p) = orbit[t];
        let next = orbit[(t + 1) % n].1;
        core.set(q, p, f);
        let c = field.coin(q);
        let mut f_next = ZERO;
        for k in Chirality::ALL {
            let out = c[k.index()][p.index()] * f;
            if out == ZERO {
                continue;
            }
            if k == next {
                f_next = (I * kappa).exp() * out;
                continue;
            }
            let mut step = 1;
            loop {
                let y = q + k.step().scaled(step);
                if !y.in_box(m) {
                    break;
                }
                core.set(y, k, (I * kappa * step as f64).exp() * out);
                step += 1;
            }
            let (idx, coord) = if k.is_horizontal() { (q.y, q.x) } else { (q.x, q.y) };
            let a = match k {
                Left | Down => out * (I * kappa * coord as f64).exp(),
                Right | Up => out * (-I * kappa * coord as f64).exp(),
            };
            tails[k.index()].insert(idx, a);
        }
        f = f_next;
    }
    if (f - ONE).norm() > 1e-9 {
        return Err(Error::QuantizationViolation { lambda: kappa.re, mismatch: (f - ONE).norm() });
    }
    if tails.iter().all(|t| t.is_empty()) {
        Ok(CornerState::Eigenfunction(core))
    } else {
        Ok(CornerState::Resonant(OutgoingState::new(kappa, m, core, tails)?))
    }
}

pub fn corner_quantization(fam: &CornerFamily) -> Result<CornerQuantization> {
    let n = fam.period();
    let data = QuantizationData {
        c_plus: fam.c_plus(),
        c_minus: fam.c_minus(),
        roots_plus: qc2_roots(fam.c_plus(), n),
        roots_minus: qc2_roots(fam.c_minus(), n),
    };
    let mut modes = Vec::new();
    for (sign, roots) in [(OrbitSign::Plus, &data.roots_plus), (OrbitSign::Minus, &data.roots_minus)] {
        if roots.iter().any(|k| !k.is_finite()) {
            continue;
        }
        for &kappa in roots {
            modes.push(CornerMode { sign, kappa, state: corner_mode(fam, sign, kappa)? });
        }
    }
    Ok(CornerQuantization { data, modes })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Weave {
    /// Rotate the (←,→) and (↓,↑) column pairs at every boundary site.
    Full,
    /// Rotate only the pair belonging to each side the site lies on.
    PerSide,
}

#[derive(Clone, Debug)]
pub struct ShapeFamily {
    pub base: BarrierSpec,
    pub eps: f64,
    pub weave: Weave,
    pub boundary: BTreeMap<Site, Coin>,
}

/// new col_a = s col_a + ε col_b, new col_b = s col_b − ε col_a.
fn rotate_pair(c: &Coin, a: Chirality, b: Chirality, eps: f64) -> Coin {
    let s = (1.0 - eps * eps).sqrt();
    let mut out = *c;
    for r in 0..4 {
        let (ca, cb) = (c[r][a.index()], c[r][b.index()]);
        out[r][a.index()] = ca * s + cb * eps;
        out[r][b.index()] = cb * s - ca * eps;
    }
    out
}

pub fn make_shape_family(spec: &BarrierSpec, eps: f64, weave: Weave) -> Result<ShapeFamily> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::InvalidParameter(format!("eps must lie in [0, 1], got {eps}")));
    }
    let m0 = spec.m0();
    let mut boundary = BTreeMap::new();
    for (site, c) in spec.boundary() {
        let mut pairs = Vec::new();
        let sides = sides_of(*site, m0);
        let horizontal = weave == Weave::Full || sides.iter().any(|s| matches!(s, Side::K1Minus | Side::K1Plus));
        let vertical = weave == Weave::Full || sides.iter().any(|s| matches!(s, Side::K2Minus | Side::K2Plus));
        if horizontal {
            pairs.push((Left, Right));
        }
        if vertical {
            pairs.push((Down, Up));
        }
        let mut out = *c;
        for (a, b) in pairs {
            let exchanges = (c[a.index()][b.index()].norm() - 1.0).abs() < 1e-12
                || (c[b.index()][a.index()].norm() - 1.0).abs() < 1e-12;
            if !exchanges {
                return Err(Error::InvalidParameter(format!(
                    "base coin at {site} has no unit entry in the ({a}, {b}) block to weave into"
                )));
            }
            out = rotate_pair(&out, a, b, eps);
        }
        let residual = unitarity_residual(&out);
        if !(residual <= UNITARITY_TOL) {
            return Err(Error::NonUnitaryCoin { site: *site, residual });
        }
        boundary.insert(*site, out);
    }
    Ok(ShapeFamily { base: spec.clone(), eps, weave, boundary })
}

impl ShapeFamily {
    pub fn coin_field(&self) -> CoinField {
        let mut f = CoinField::free(self.base.m0());
        for (s, c) in self.boundary.iter().chain(self.base.interior().iter()) {
            f.set(*s, *c).expect("validated");
        }
        f
    }

    pub fn base_field(&self) -> CoinField {
        self.base.coin_field()
    }

    /// max over K of |C_ε − C_np|.
    pub fn deviation(&self) -> f64 {
        self.boundary
            .iter()
            .map(|(s, c)| coin_distance(c, &self.base.boundary()[s]))
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SiteDeterminants {
    pub site: Site,
    /// det over rows/columns {←,↓} and {→,↑}
    pub left_down: f64,
    pub right_up: f64,
    /// det over {←,↑} and {→,↓}
    pub left_up: f64,
    pub right_down: f64,
    pub clause1: bool,
    pub clause2: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConditionCReport {
    pub sites: Vec<SiteDeterminants>,
    pub clause1: bool,
    pub clause2: bool,
}

impl ConditionCReport {
    pub fn holds(&self) -> bool {
        self.clause1 || self.clause2
    }

    pub fn failing_sites(&self, clause: u8) -> Vec<Site> {
        self.sites
            .iter()
            .filter(|s| if clause == 1 { !s.clause1 } else { !s.clause2 })
            .map(|s| s.site)
            .collect()
    }
}

fn minor(c: &Coin, a: Chirality, b: Chirality) -> C64 {
    let (a, b) = (a.index(), b.index());
    c[a][a] * c[b][b] - c[a][b] * c[b][a]
}

/// Evaluates both pairs of 2×2 sub-determinants at every override site.
pub fn condition_c_check(coin: &CoinField) -> ConditionCReport {
    let tol = 1e-12;
    let sites: Vec<SiteDeterminants> = coin
        .overrides()
        .map(|(site, c)| {
            let ld = minor(c, Left, Down).norm();
            let ru = minor(c, Right, Up).norm();
            let lu = minor(c, Left, Up).norm();
            let rd = minor(c, Right, Down).norm();
            SiteDeterminants {
                site: *site,
                left_down: ld,
                right_up: ru,
                left_up: lu,
                right_down: rd,
                clause1: ld > tol && ru > tol,
                clause2: lu > tol && rd > tol,
            }
        })
        .collect();
    let clause1 = sites.iter().all(|s| s.clause1);
    let clause2 = sites.iter().all(|s| s.clause2);
    ConditionCReport { sites, clause1, clause2 }
}

/// Exponent p with min over K of the boundary sub-determinants ∝ ε^p,
/// estimated from two values of ε.
pub fn subdeterminant_exponent(spec: &BarrierSpec, weave: Weave, eps_a: f64, eps_b: f64) -> Result<f64> {
    let smallest = |eps: f64| -> Result<f64> {
        let fam = make_shape_family(spec, eps, weave)?;
        let field = fam.coin_field();
        let rep = condition_c_check(&field);
        Ok(rep
            .sites
            .iter()
            .filter(|s| s.site.linf() == spec.m0())
            .map(|s| s.left_down.min(s.right_up).max(s.left_up.min(s.right_down)))
            .fold(f64::INFINITY, f64::min))
    };
    let (da, db) = (smallest(eps_a)?, smallest(eps_b)?);
    if !(da > 0.0 && db > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "a boundary sub-determinant vanishes under {weave:?} weaving (condition C fails)"
        )));
    }
    Ok((da / db).ln() / (eps_a / eps_b).ln())
}

#[derive(Clone, Debug)]
pub enum ScanFamily {
    Corner { m0: i64, n0: i64, preset: CornerPreset },
    Shape { spec: BarrierSpec, weave: Weave },
}

impl ScanFamily {
    pub fn coin_field(&self, eps: f64) -> Result<CoinField> {
        match self {
            ScanFamily::Corner { m0, n0, preset } => Ok(make_corner_family(*m0, *n0, eps, *preset)?.coin_field()),
            ScanFamily::Shape { spec, weave } => Ok(make_shape_family(spec, eps, *weave)?.coin_field()),
        }
    }

    /// Unperturbed eigen-phases with multiplicities.
    pub fn default_centers(&self) -> Result<Vec<(f64, usize)>> {
        match self {
            ScanFamily::Corner { m0, n0, .. } => {
                let n = m0 + n0;
                Ok((0..2 * n).map(|k| (PI * k as f64 / n as f64, 2)).collect())
            }
            ScanFamily::Shape { spec, .. } => {
                let np = crate::barrier::build_nonpenetrable(spec)?;
                Ok(crate::barrier::interior_spectrum(&np)?.phase_clusters(1e-8))
            }
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanRow {
    pub eps: f64,
    pub mu0: f64,
    pub count: i64,
    pub root: Option<C64>,
    pub w_abs: Option<f64>,
    pub dist_to_mu0: Option<f64>,
    pub multiplicity: usize,
}

/// Counts and locates the roots of D inside each loop ℒ_{ε,s}(μ0).
pub fn migration_scan(family: &ScanFamily, eps_grid: &[f64], mu0s: &[f64], s: f64, tol: f64) -> Result<Vec<ScanRow>> {
    if !(s > 0.0 && s <= 1.0) {
        return Err(Error::InvalidParameter(format!("s must lie in (0, 1], got {s}")));
    }
    for &eps in eps_grid {
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(Error::InvalidParameter(format!("scan eps must lie in (0, 1], got {eps}")));
        }
        let r = eps.powf(s);
        for (i, a) in mu0s.iter().enumerate() {
            for b in &mu0s[i + 1..] {
                if phase_distance(*a, *b) <= 2.0 * r {
                    return Err(Error::OverlappingLoops(format!(
                        "loops of half-width {r:.4} around {a:.6} and {b:.6} (eps = {eps})"
                    )));
                }
            }
        }
    }
    let jobs: Vec<(f64, f64)> = eps_grid.iter().flat_map(|e| mu0s.iter().map(move |m| (*e, *m))).collect();
    let fields: Vec<(f64, CoinField)> =
        eps_grid.iter().map(|e| Ok((*e, family.coin_field(*e)?))).collect::<Result<_>>()?;
    let results: Vec<Result<Vec<ScanRow>>> = jobs
        .par_iter()
        .map(|&(eps, mu0)| {
            let field = &fields.iter().find(|(e, _)| *e == eps).expect("field for eps").1;
            let rect = ContourLoop::new(mu0, eps, s, 1.0, 1.0)?.rect();
            let set = locate_roots(field, rect, tol)?;
            let count = set.winding_total;
            if set.roots.is_empty() {
                return Ok(vec![ScanRow {
                    eps,
                    mu0,
                    count,
                    root: None,
                    w_abs: None,
                    dist_to_mu0: None,
                    multiplicity: 0,
                }]);
            }
            Ok(set
                .roots
                .iter()
                .map(|r: &Root| ScanRow {
                    eps,
                    mu0,
                    count,
                    root: Some(r.kappa),
                    w_abs: Some(r.w().norm()),
                    dist_to_mu0: Some((r.kappa - C64::new(mu0, 0.0)).norm()),
                    multiplicity: r.multiplicity,
                })
                .collect())
        })
        .collect();
    let mut rows = Vec::new();
    for r in results {
        rows.extend(r?);
    }
    Ok(rows)
}

#[derive(Clone, Debug, Serialize)]
pub struct IdentityReport {
    /// ⟨T(θ)(R_ε − R_np)T(θ)^{-1} f, g⟩
    pub direct: C64,
    /// via R_ε Q R_np
    pub eps_first: C64,
    /// via R_np Q R_ε
    pub np_first: C64,
    pub residual: f64,
}

/// Q h = S (C_np − C_ε) h for h given on the sites where the coins differ.
fn apply_q(np: &CoinField, pert: &CoinField, h: &WalkState) -> WalkState {
    let mut out = WalkState::new();
    for (site, a) in h.iter() {
        let (cn, ce) = (np.coin(*site), pert.coin(*site));
        for k in Chirality::ALL {
            let z: C64 = (0..4).map(|j| (cn[k.index()][j] - ce[k.index()][j]) * a[j]).sum();
            if z != ZERO {
                out.add(site.offset(k), k, z);
            }
        }
    }
    out
}

fn weighted_pairing(theta: C64, u: &WalkState, g: &WalkState) -> C64 {
    g.entries().map(|(x, j, gz)| theta_weight(theta, x, j) * u.component(x, j) * gz.conj()).sum()
}

/// Checks T_ε = R_ε Q R_np = R_np Q R_ε on the matrix element ⟨T_ε f, g⟩.
pub fn perturbation_identities(fam: &ShapeFamily, kappa: C64, theta: C64, f: &WalkState, g: &WalkState) -> Result<IdentityReport> {
    if kappa.im > 0.0 || !(theta.im < kappa.im) {
        return Err(Error::InvalidParameter(format!("need Im theta < Im kappa <= 0 (kappa={kappa}, theta={theta})")));
    }
    let (pert, np) = (fam.coin_field(), fam.base_field());
    let (me, mn) = (InteractionModel::new(&pert), InteractionModel::new(&np));
    let re = ContinuedResolvent::new(&me, kappa)?;
    let rn = ContinuedResolvent::new(&mn, kappa)?;
    let ff = apply_t_theta(-theta, f);
    let gsites = g.support();
    let diff_sites: Vec<Site> = fam
        .boundary
        .iter()
        .filter(|(s, c)| coin_distance(c, &np.coin(**s)) > 0.0)
        .map(|(s, _)| *s)
        .collect();

    let mut d = re.apply_at(&ff, &gsites);
    d.axpy(-ONE, &rn.apply_at(&ff, &gsites));
    let direct = weighted_pairing(theta, &d, g);

    let q1 = apply_q(&np, &pert, &rn.apply_at(&ff, &diff_sites));
    let eps_first = weighted_pairing(theta, &re.apply_at(&q1, &gsites), g);
    let q2 = apply_q(&np, &pert, &re.apply_at(&ff, &diff_sites));
    let np_first = weighted_pairing(theta, &rn.apply_at(&q2, &gsites), g);

    let scale = 1.0f64.max(direct.norm());
    let residual = (eps_first - direct).norm().max((np_first - direct).norm()) / scale;
    Ok(IdentityReport { direct, eps_first, np_first, residual })
}

/// ⟨P̃_ε f, g⟩ = ⟨(P_ε − P_np) f, g⟩ over the loop ℒ_{ε,s}(μ0).
pub fn projection_difference(fam: &ShapeFamily, mu0: f64, s: f64, f: &WalkState, g: &WalkState, tol: f64) -> Result<C64> {
    let rect = ContourLoop::new(mu0, fam.eps, s, 1.0, 1.0)?.rect();
    let pe = crate::spectral::projection_element(&fam.coin_field(), &rect, f, g, tol)?;
    let pn = crate::spectral::projection_element(&fam.base_field(), &rect, f, g, tol)?;
    Ok(pe - pn)
}
