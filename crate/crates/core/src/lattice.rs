//! Sites, chiralities, coin fields and the walk operator U = SC.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// 4×4 coin matrix, row-major, rows and columns in chirality order ←, →, ↓, ↑.
pub type Coin = [[C64; 4]; 4];

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Tolerance used when validating coin unitarity.
pub const UNITARITY_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Chirality {
    Left,
    Right,
    Down,
    Up,
}

impl Chirality {
    pub const ALL: [Chirality; 4] = [Chirality::Left, Chirality::Right, Chirality::Down, Chirality::Up];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Chirality {
        Self::ALL[i]
    }

    /// Displacement applied by the shift to this component.
    pub fn step(self) -> Site {
        match self {
            Chirality::Left => Site::new(-1, 0),
            Chirality::Right => Site::new(1, 0),
            Chirality::Down => Site::new(0, -1),
            Chirality::Up => Site::new(0, 1),
        }
    }

    pub fn reverse(self) -> Chirality {
        match self {
            Chirality::Left => Chirality::Right,
            Chirality::Right => Chirality::Left,
            Chirality::Down => Chirality::Up,
            Chirality::Up => Chirality::Down,
        }
    }

    pub fn is_horizontal(self) -> bool {
        matches!(self, Chirality::Left | Chirality::Right)
    }

    pub fn name(self) -> &'static str {
        match self {
            Chirality::Left => "left",
            Chirality::Right => "right",
            Chirality::Down => "down",
            Chirality::Up => "up",
        }
    }

    pub fn parse(s: &str) -> Option<Chirality> {
        match s {
            "left" | "l" | "←" => Some(Chirality::Left),
            "right" | "r" | "→" => Some(Chirality::Right),
            "down" | "d" | "↓" => Some(Chirality::Down),
            "up" | "u" | "↑" => Some(Chirality::Up),
            _ => None,
        }
    }
}

impl fmt::Display for Chirality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Chirality::Left => "←",
            Chirality::Right => "→",
            Chirality::Down => "↓",
            Chirality::Up => "↑",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Site {
    pub x: i64,
    pub y: i64,
}

impl Site {
    pub const ORIGIN: Site = Site { x: 0, y: 0 };

    pub const fn new(x: i64, y: i64) -> Site {
        Site { x, y }
    }

    pub fn offset(self, j: Chirality) -> Site {
        self + j.step()
    }

    pub fn linf(self) -> i64 {
        self.x.abs().max(self.y.abs())
    }

    pub fn in_box(self, m: i64) -> bool {
        self.linf() <= m
    }

    pub fn scaled(self, n: i64) -> Site {
        Site::new(self.x * n, self.y * n)
    }
}

impl std::ops::Add for Site {
    type Output = Site;
    fn add(self, o: Site) -> Site {
        Site::new(self.x + o.x, self.y + o.y)
    }
}

impl std::ops::Sub for Site {
    type Output = Site;
    fn sub(self, o: Site) -> Site {
        Site::new(self.x - o.x, self.y - o.y)
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Sites of the square [-m, m]², row by row.
pub fn box_sites(m: i64) -> Vec<Site> {
    let mut out = Vec::with_capacity(((2 * m + 1) * (2 * m + 1)) as usize);
    for x in -m..=m {
        for y in -m..=m {
            out.push(Site::new(x, y));
        }
    }
    out
}

/// Whether the ray `site + n·step(j)`, n ≥ 0, meets the box [-m, m]².
pub fn ray_meets_box(site: Site, j: Chirality, m: i64) -> bool {
    match j {
        Chirality::Left => site.y.abs() <= m && site.x >= -m,
        Chirality::Right => site.y.abs() <= m && site.x <= m,
        Chirality::Down => site.x.abs() <= m && site.y >= -m,
        Chirality::Up => site.x.abs() <= m && site.y <= m,
    }
}

pub fn identity_coin() -> Coin {
    let mut c = [[ZERO; 4]; 4];
    for (i, row) in c.iter_mut().enumerate() {
        row[i] = ONE;
    }
    c
}

pub fn coin_mul(a: &Coin, b: &Coin) -> Coin {
    let mut c = [[ZERO; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            let mut s = ZERO;
            for k in 0..4 {
                s += a[i][k] * b[k][j];
            }
            c[i][j] = s;
        }
    }
    c
}

pub fn coin_adjoint(a: &Coin) -> Coin {
    let mut c = [[ZERO; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            c[i][j] = a[j][i].conj();
        }
    }
    c
}

pub fn coin_apply(c: &Coin, v: &[C64; 4]) -> [C64; 4] {
    let mut out = [ZERO; 4];
    for (i, o) in out.iter_mut().enumerate() {
        *o = c[i][0] * v[0] + c[i][1] * v[1] + c[i][2] * v[2] + c[i][3] * v[3];
    }
    out
}

/// max |C*C − I| entrywise.
pub fn unitarity_residual(c: &Coin) -> f64 {
    let p = coin_mul(&coin_adjoint(c), c);
    let mut r: f64 = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            let target = if i == j { ONE } else { ZERO };
            r = r.max((p[i][j] - target).norm());
        }
    }
    r
}

/// Entrywise max |a − b|.
pub fn coin_distance(a: &Coin, b: &Coin) -> f64 {
    let mut r: f64 = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            r = r.max((a[i][j] - b[i][j]).norm());
        }
    }
    r
}

pub fn is_identity(c: &Coin) -> bool {
    coin_distance(c, &identity_coin()) == 0.0
}

/// Coin from its four columns (column k is the image of chirality k).
pub fn coin_from_columns(cols: [[C64; 4]; 4]) -> Coin {
    let mut c = [[ZERO; 4]; 4];
    for k in 0..4 {
        for j in 0..4 {
            c[j][k] = cols[k][j];
        }
    }
    c
}

pub fn coin_column(c: &Coin, k: usize) -> [C64; 4] {
    [c[0][k], c[1][k], c[2][k], c[3][k]]
}

/// Unit vector for a chirality.
pub fn basis(j: Chirality) -> [C64; 4] {
    let mut v = [ZERO; 4];
    v[j.index()] = ONE;
    v
}

/// Phased permutation coin: column j is e^{iα_j} e_{σ(j)}.
pub fn permutation_coin(sigma: [Chirality; 4], alpha: [f64; 4]) -> Coin {
    let mut c = [[ZERO; 4]; 4];
    for j in 0..4 {
        c[sigma[j].index()][j] = C64::from_polar(1.0, alpha[j]);
    }
    c
}

/// Haar-like random unitary: Gaussian matrix orthonormalized by two passes of
/// modified Gram–Schmidt over the columns.
pub fn random_unitary_coin(seed: u64) -> Coin {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cols = [[ZERO; 4]; 4];
    for col in cols.iter_mut() {
        for v in col.iter_mut() {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            *v = C64::new(re, im);
        }
    }
    for _ in 0..2 {
        for k in 0..4 {
            for p in 0..k {
                let (head, tail) = cols.split_at_mut(k);
                let q = &head[p];
                let v = &mut tail[0];
                let dot: C64 = (0..4).map(|i| q[i].conj() * v[i]).sum();
                for i in 0..4 {
                    v[i] -= dot * q[i];
                }
            }
            let n = cols[k].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            for v in cols[k].iter_mut() {
                *v /= n;
            }
        }
    }
    coin_from_columns(cols)
}

/// Finitely supported C⁴-valued sequence on Z².
#[derive(Clone, Debug, Default, PartialEq)]
pub struct WalkState {
    amps: BTreeMap<Site, [C64; 4]>,
}

impl WalkState {
    pub fn new() -> WalkState {
        WalkState::default()
    }

    pub fn delta(site: Site, j: Chirality) -> WalkState {
        let mut s = WalkState::new();
        s.set(site, j, ONE);
        s
    }

    pub fn get(&self, site: Site) -> [C64; 4] {
        self.amps.get(&site).copied().unwrap_or([ZERO; 4])
    }

    pub fn component(&self, site: Site, j: Chirality) -> C64 {
        self.amps.get(&site).map_or(ZERO, |a| a[j.index()])
    }

    pub fn set(&mut self, site: Site, j: Chirality, v: C64) {
        self.amps.entry(site).or_insert([ZERO; 4])[j.index()] = v;
    }

    pub fn set_site(&mut self, site: Site, v: [C64; 4]) {
        self.amps.insert(site, v);
    }

    pub fn add(&mut self, site: Site, j: Chirality, v: C64) {
        self.amps.entry(site).or_insert([ZERO; 4])[j.index()] += v;
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Site, &[C64; 4])> {
        self.amps.iter()
    }

    /// Nonzero (site, chirality, amplitude) triples.
    pub fn entries(&self) -> impl Iterator<Item = (Site, Chirality, C64)> + '_ {
        self.amps.iter().flat_map(|(s, a)| {
            Chirality::ALL
                .into_iter()
                .filter(move |j| a[j.index()] != ZERO)
                .map(move |j| (*s, j, a[j.index()]))
        })
    }

    pub fn support(&self) -> Vec<Site> {
        self.amps
            .iter()
            .filter(|(_, a)| a.iter().any(|z| *z != ZERO))
            .map(|(s, _)| *s)
            .collect()
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.values().flat_map(|a| a.iter()).map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// (self, other) = Σ self_j(x) conj(other_j(x)).
    pub fn inner(&self, other: &WalkState) -> C64 {
        let mut s = ZERO;
        for (site, a) in &self.amps {
            if let Some(b) = other.amps.get(site) {
                for j in 0..4 {
                    s += a[j] * b[j].conj();
                }
            }
        }
        s
    }

    pub fn scale(&mut self, c: C64) {
        for a in self.amps.values_mut() {
            for z in a.iter_mut() {
                *z *= c;
            }
        }
    }

    pub fn axpy(&mut self, c: C64, other: &WalkState) {
        for (site, b) in &other.amps {
            let a = self.amps.entry(*site).or_insert([ZERO; 4]);
            for j in 0..4 {
                a[j] += c * b[j];
            }
        }
    }

    /// Max componentwise difference over the union of supports.
    pub fn max_abs_diff(&self, other: &WalkState) -> f64 {
        let mut r: f64 = 0.0;
        for (site, a) in &self.amps {
            let b = other.get(*site);
            for j in 0..4 {
                r = r.max((a[j] - b[j]).norm());
            }
        }
        for (site, b) in &other.amps {
            if !self.amps.contains_key(site) {
                for z in b {
                    r = r.max(z.norm());
                }
            }
        }
        r
    }

    /// Drop sites whose amplitudes are all exactly zero.
    pub fn prune(&mut self) {
        self.amps.retain(|_, a| a.iter().any(|z| *z != ZERO));
    }

    pub fn map_entries(&self, mut f: impl FnMut(Site, Chirality, C64) -> C64) -> WalkState {
        let mut out = WalkState::new();
        for (site, a) in &self.amps {
            let mut b = [ZERO; 4];
            for j in Chirality::ALL {
                b[j.index()] = f(*site, j, a[j.index()]);
            }
            out.amps.insert(*site, b);
        }
        out
    }
}

impl FromIterator<(Site, Chirality, C64)> for WalkState {
    fn from_iter<I: IntoIterator<Item = (Site, Chirality, C64)>>(iter: I) -> Self {
        let mut s = WalkState::new();
        for (site, j, v) in iter {
            s.add(site, j, v);
        }
        s
    }
}

/// Site-dependent coin, identity outside the explicit overrides.
#[derive(Clone, Debug, PartialEq)]
pub struct CoinField {
    m0: i64,
    overrides: BTreeMap<Site, Coin>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CoinEntryJson {
    x: [i64; 2],
    m: [[[f64; 2]; 4]; 4],
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CoinFieldJson {
    #[serde(rename = "M0")]
    m0: i64,
    coins: Vec<CoinEntryJson>,
}

impl CoinField {
    pub fn new(m0: i64) -> Result<CoinField> {
        if m0 < 1 {
            return Err(Error::InvalidParameter(format!("M0 must be positive, got {m0}")));
        }
        Ok(CoinField { m0, overrides: BTreeMap::new() })
    }

    pub fn free(m0: i64) -> CoinField {
        CoinField { m0: m0.max(1), overrides: BTreeMap::new() }
    }

    pub fn set(&mut self, site: Site, coin: Coin) -> Result<()> {
        if !site.in_box(self.m0) {
            return Err(Error::SiteOutsideBox { site, m0: self.m0 });
        }
        let residual = unitarity_residual(&coin);
        if !(residual <= UNITARITY_TOL) {
            return Err(Error::NonUnitaryCoin { site, residual });
        }
        self.overrides.insert(site, coin);
        Ok(())
    }

    pub fn with(mut self, site: Site, coin: Coin) -> Result<CoinField> {
        self.set(site, coin)?;
        Ok(self)
    }

    pub fn m0(&self) -> i64 {
        self.m0
    }

    pub fn coin(&self, site: Site) -> Coin {
        self.overrides.get(&site).copied().unwrap_or_else(identity_coin)
    }

    pub fn coin_ref(&self, site: Site) -> Option<&Coin> {
        self.overrides.get(&site)
    }

    pub fn overrides(&self) -> impl Iterator<Item = (&Site, &Coin)> {
        self.overrides.iter()
    }

    /// Sites whose coin differs from the identity.
    pub fn active_sites(&self) -> Vec<Site> {
        self.overrides.iter().filter(|(_, c)| !is_identity(c)).map(|(s, _)| *s).collect()
    }

    pub fn is_free(&self) -> bool {
        self.active_sites().is_empty()
    }

    pub fn from_json(text: &str) -> Result<CoinField> {
        let raw: CoinFieldJson =
            serde_json::from_str(text).map_err(|e| Error::Malformed(e.to_string()))?;
        let mut field = CoinField::new(raw.m0)?;
        for entry in raw.coins {
            let mut c = [[ZERO; 4]; 4];
            for (i, row) in entry.m.iter().enumerate() {
                for (j, z) in row.iter().enumerate() {
                    c[i][j] = C64::new(z[0], z[1]);
                }
            }
            field.set(Site::new(entry.x[0], entry.x[1]), c)?;
        }
        Ok(field)
    }

    pub fn to_json(&self) -> String {
        let coins = self
            .overrides
            .iter()
            .map(|(s, c)| CoinEntryJson {
                x: [s.x, s.y],
                m: std::array::from_fn(|i| std::array::from_fn(|j| [c[i][j].re, c[i][j].im])),
            })
            .collect();
        serde_json::to_string(&CoinFieldJson { m0: self.m0, coins }).expect("coin field serializes")
    }
}

/// Random coin field: each site of the box gets a random unitary with
/// probability `density`.
pub fn random_coin_field(m0: i64, density: f64, seed: u64) -> CoinField {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut field = CoinField::free(m0);
    for site in box_sites(m0) {
        if rng.random::<f64>() < density {
            let c = random_unitary_coin(rng.random());
            field.overrides.insert(site, c);
        }
    }
    field
}

/// The walk U = SC with (Su)_j(x) = u_j(x − d_j).
#[derive(Clone, Debug)]
pub struct WalkOperator {
    coin: CoinField,
}

impl WalkOperator {
    pub fn new(coin: CoinField) -> WalkOperator {
        WalkOperator { coin }
    }

    pub fn coin(&self) -> &CoinField {
        &self.coin
    }

    /// Half-width of the box containing supp(U − U_0).
    pub fn perturbation_radius(&self) -> i64 {
        self.coin.m0 + 1
    }

    pub fn apply(&self, u: &WalkState) -> WalkState {
        let mut out = WalkState::new();
        for (site, a) in u.iter() {
            let v = match self.coin.coin_ref(*site) {
                Some(c) => coin_apply(c, a),
                None => *a,
            };
            for j in Chirality::ALL {
                let z = v[j.index()];
                if z != ZERO {
                    out.add(site.offset(j), j, z);
                }
            }
        }
        out
    }

    /// U* = C* S*, with (S* u)_j(y) = u_j(y + d_j).
    pub fn apply_adjoint(&self, u: &WalkState) -> WalkState {
        let mut shifted = WalkState::new();
        for (site, j, z) in u.entries() {
            shifted.add(site - j.step(), j, z);
        }
        let mut out = WalkState::new();
        for (site, a) in shifted.iter() {
            let v = match self.coin.coin_ref(*site) {
                Some(c) => coin_apply(&coin_adjoint(c), a),
                None => *a,
            };
            out.set_site(*site, v);
        }
        out
    }

    /// U^t u. Amplitude that has left the box on a ray that never returns is
    /// moved ballistically in one shot at the end.
    pub fn evolve(&self, u: &WalkState, t: u64) -> WalkState {
        let m = self.coin.m0;
        let mut active: BTreeMap<Site, [C64; 4]> = BTreeMap::new();
        let mut ballistic: Vec<(Site, Chirality, C64, u64)> = Vec::new();
        let mut route = |site: Site, j: Chirality, z: C64, now: u64, active: &mut BTreeMap<Site, [C64; 4]>| {
            if !site.in_box(m) && !ray_meets_box(site, j, m) {
                ballistic.push((site, j, z, now));
            } else {
                active.entry(site).or_insert([ZERO; 4])[j.index()] += z;
            }
        };
        for (site, j, z) in u.entries() {
            route(site, j, z, 0, &mut active);
        }
        for step in 1..=t {
            let mut next: BTreeMap<Site, [C64; 4]> = BTreeMap::new();
            for (site, a) in &active {
                let v = match self.coin.coin_ref(*site) {
                    Some(c) => coin_apply(c, a),
                    None => *a,
                };
                for j in Chirality::ALL {
                    let z = v[j.index()];
                    if z != ZERO {
                        route(site.offset(j), j, z, step, &mut next);
                    }
                }
            }
            active = next;
        }
        let mut out = WalkState::new();
        for (site, a) in active {
            for j in Chirality::ALL {
                if a[j.index()] != ZERO {
                    out.add(site, j, a[j.index()]);
                }
            }
        }
        for (site, j, z, born) in ballistic {
            out.add(site + j.step().scaled((t - born) as i64), j, z);
        }
        out
    }
}
