//! Complex translation T(θ), the conjugated walk U(θ), and outgoing states.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::lattice::{box_sites, Chirality, Site, WalkOperator, WalkState, C64, ZERO};

/// Conjugation parameter with Im θ ≤ 0.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Theta(C64);

impl Theta {
    pub fn new(theta: C64) -> Result<Theta> {
        if theta.im > 0.0 || !theta.is_finite() {
            return Err(Error::InvalidParameter(format!("theta must satisfy Im theta <= 0, got {theta}")));
        }
        Ok(Theta(theta))
    }

    pub fn value(self) -> C64 {
        self.0
    }
}

/// Weight of T(θ) on component j at x. Re θ is reduced mod 2π first, which
/// makes θ and θ + 2π act identically.
pub fn theta_weight(theta: C64, site: Site, j: Chirality) -> C64 {
    let t = C64::new(theta.re.rem_euclid(TAU), theta.im);
    let i = C64::new(0.0, 1.0);
    match j {
        Chirality::Left => (i * t * site.x as f64).exp(),
        Chirality::Right => (-i * t * site.x as f64).exp(),
        Chirality::Down => (i * t * site.y as f64).exp(),
        Chirality::Up => (-i * t * site.y as f64).exp(),
    }
}

/// T(θ)u for any complex θ (T(θ)^{-1} = T(−θ)).
pub fn apply_t_theta(theta: C64, u: &WalkState) -> WalkState {
    u.map_entries(|s, j, z| if z == ZERO { ZERO } else { z * theta_weight(theta, s, j) })
}

/// U(θ)u = T(θ) U T(θ)^{-1} u.
pub fn apply_u_theta(op: &WalkOperator, theta: Theta, u: &WalkState) -> WalkState {
    let th = theta.value();
    apply_t_theta(th, &op.apply(&apply_t_theta(-th, u)))
}

/// Outgoing solution: explicit values on Ω^i plus four exponential tails.
///
/// Outside Ω^i the components are
/// u_←(x) = a_←(x2) e^{−iκx1} for x1 < −M0, u_→(x) = a_→(x2) e^{iκx1} for x1 > M0,
/// u_↓(x) = a_↓(x1) e^{−iκx2} for x2 < −M0, u_↑(x) = a_↑(x1) e^{iκx2} for x2 > M0,
/// and zero otherwise.
#[derive(Clone, Debug)]
pub struct OutgoingState {
    kappa: C64,
    m0: i64,
    core: WalkState,
    tails: [BTreeMap<i64, C64>; 4],
}

impl OutgoingState {
    pub fn new(kappa: C64, m0: i64, core: WalkState, tails: [BTreeMap<i64, C64>; 4]) -> Result<OutgoingState> {
        if let Some(s) = core.support().into_iter().find(|s| !s.in_box(m0)) {
            return Err(Error::InvalidParameter(format!("core site {s} outside the box")));
        }
        for t in &tails {
            if let Some(k) = t.keys().find(|k| k.abs() > m0) {
                return Err(Error::InvalidParameter(format!("tail index {k} outside [-M0, M0]")));
            }
        }
        Ok(OutgoingState { kappa, m0, core, tails })
    }

    pub fn kappa(&self) -> C64 {
        self.kappa
    }

    pub fn m0(&self) -> i64 {
        self.m0
    }

    pub fn core(&self) -> &WalkState {
        &self.core
    }

    pub fn tail(&self, j: Chirality) -> &BTreeMap<i64, C64> {
        &self.tails[j.index()]
    }

    pub fn is_trivial(&self) -> bool {
        self.core.entries().next().is_none() && self.tails.iter().all(|t| t.values().all(|z| *z == ZERO))
    }

    pub fn component(&self, site: Site, j: Chirality) -> C64 {
        if site.in_box(self.m0) {
            return self.core.component(site, j);
        }
        let i = C64::new(0.0, 1.0);
        let k = self.kappa;
        let m = self.m0;
        let tail = &self.tails[j.index()];
        let coef = |idx: i64| tail.get(&idx).copied().unwrap_or(ZERO);
        match j {
            Chirality::Left if site.x < -m => coef(site.y) * (-i * k * site.x as f64).exp(),
            Chirality::Right if site.x > m => coef(site.y) * (i * k * site.x as f64).exp(),
            Chirality::Down if site.y < -m => coef(site.x) * (-i * k * site.y as f64).exp(),
            Chirality::Up if site.y > m => coef(site.x) * (i * k * site.y as f64).exp(),
            _ => ZERO,
        }
    }

    pub fn values(&self, site: Site) -> [C64; 4] {
        Chirality::ALL.map(|j| self.component(site, j))
    }

    /// ‖T(θ)u‖² outside Ω^i by closed-form geometric sums; `None` when the
    /// tails are not square-summable (Im(κ − θ) ≤ 0 with a nonzero tail).
    pub fn tail_norm_sqr(&self, theta: C64) -> Option<f64> {
        let gamma = (self.kappa - theta).im;
        let mut total = 0.0;
        for (jdx, tail) in self.tails.iter().enumerate() {
            let j = Chirality::from_index(jdx);
            for (&idx, &a) in tail {
                if a == ZERO {
                    continue;
                }
                if gamma <= 0.0 {
                    return None;
                }
                // |T(θ)u_j| along the ray is |a|·|w(θ)|·e^{-γ n}, n = M0+1, M0+2, ...
                let start = self.m0 + 1;
                let ray_site = |n: i64| match j {
                    Chirality::Left => Site::new(-n, idx),
                    Chirality::Right => Site::new(n, idx),
                    Chirality::Down => Site::new(idx, -n),
                    Chirality::Up => Site::new(idx, n),
                };
                let first = (self.component(ray_site(start), j) * theta_weight(theta, ray_site(start), j)).norm_sqr();
                total += first / (1.0 - (-2.0 * gamma).exp());
            }
        }
        Some(total)
    }
}

#[derive(Clone, Debug)]
pub struct OutgoingReport {
    pub residual: f64,
    pub trivial: bool,
    pub window: i64,
    /// Tails are square-summable under T(θ) exactly when Im θ < this value.
    pub summability_threshold: f64,
    /// (Im θ, ‖T(θ)u‖² outside Ω^i) for a few sample θ below the threshold.
    pub samples: Vec<(f64, Option<f64>)>,
}

impl OutgoingReport {
    pub fn summable(&self) -> bool {
        self.samples.iter().all(|(_, n)| n.is_some_and(f64::is_finite))
    }
}

/// Checks (U − e^{−iκ})u = 0 on the box of radius `window` and reports tail
/// summability.
pub fn verify_outgoing(op: &WalkOperator, s: &OutgoingState, window: i64) -> Result<OutgoingReport> {
    let kappa = s.kappa();
    if !(kappa.im < 0.0) {
        return Err(Error::InvalidParameter(format!("outgoing states need Im kappa < 0, got {kappa}")));
    }
    let need = op.coin().m0().max(s.m0()) + 2;
    if window < need {
        return Err(Error::InvalidParameter(format!("window {window} smaller than {need}")));
    }
    let w = (C64::new(0.0, -1.0) * kappa).exp();
    let mut residual: f64 = 0.0;
    for x in box_sites(window) {
        for j in Chirality::ALL {
            let src = x - j.step();
            let c = op.coin().coin(src);
            let v = s.values(src);
            let uu: C64 = (0..4).map(|k| c[j.index()][k] * v[k]).sum();
            residual = residual.max((uu - w * s.component(x, j)).norm());
        }
    }
    let samples = [0.05, 0.5, 2.0]
        .iter()
        .map(|d| {
            let th = C64::new(0.0, kappa.im - d);
            (th.im, s.tail_norm_sqr(th))
        })
        .collect();
    Ok(OutgoingReport {
        residual,
        trivial: s.is_trivial(),
        window,
        summability_threshold: kappa.im,
        samples,
    })
}
