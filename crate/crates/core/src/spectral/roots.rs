//! Argument-principle root location for D(κ).

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_4, TAU};
use std::sync::Mutex;

use rayon::prelude::*;
use serde::Serialize;

use super::InteractionModel;
use crate::elastic::normalize_phase;
use crate::error::{Error, Result};
use crate::lattice::{CoinField, C64};

/// Default upper edge of the search strip, just above the real axis.
pub const DEFAULT_STRIP_TOP: f64 = 1e-6;

const COARSE_STEP: f64 = 0.05;
const EIGEN_IM_TOL: f64 = 1e-8;
const SPLITS: [f64; 5] = [0.5, 0.4713, 0.5381, 0.4459, 0.5617];
const STRIP_OFFSETS: [f64; 6] = [0.0, 0.1234, 0.2718, 0.3989, 0.5772, 0.0917];

/// Axis-aligned rectangle in the κ-plane, traversed counterclockwise.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Rect {
    pub re_lo: f64,
    pub re_hi: f64,
    pub im_lo: f64,
    pub im_hi: f64,
}

impl Rect {
    pub fn new(re_lo: f64, re_hi: f64, im_lo: f64, im_hi: f64) -> Result<Rect> {
        let ok = [re_lo, re_hi, im_lo, im_hi].iter().all(|v| v.is_finite()) && re_lo < re_hi && im_lo < im_hi;
        if !ok {
            return Err(Error::InvalidParameter(format!(
                "degenerate rectangle [{re_lo}, {re_hi}] x [{im_lo}, {im_hi}]"
            )));
        }
        Ok(Rect { re_lo, re_hi, im_lo, im_hi })
    }

    pub fn centered(center: C64, half_re: f64, half_im: f64) -> Result<Rect> {
        Rect::new(center.re - half_re, center.re + half_re, center.im - half_im, center.im + half_im)
    }

    /// One full period Re κ ∈ [0, 2π] with Im κ ∈ [−depth, DEFAULT_STRIP_TOP].
    pub fn strip(depth: f64) -> Result<Rect> {
        if !(depth > 0.0) {
            return Err(Error::InvalidParameter(format!("strip depth must be positive, got {depth}")));
        }
        Rect::new(0.0, TAU, -depth, DEFAULT_STRIP_TOP)
    }

    pub fn center(&self) -> C64 {
        C64::new(0.5 * (self.re_lo + self.re_hi), 0.5 * (self.im_lo + self.im_hi))
    }

    pub fn width(&self) -> f64 {
        self.re_hi - self.re_lo
    }

    pub fn height(&self) -> f64 {
        self.im_hi - self.im_lo
    }

    pub fn contains(&self, z: C64) -> bool {
        self.contains_with_slack(z, 0.0)
    }

    pub fn contains_with_slack(&self, z: C64, s: f64) -> bool {
        z.re >= self.re_lo - s && z.re <= self.re_hi + s && z.im >= self.im_lo - s && z.im <= self.im_hi + s
    }

    /// Counterclockwise corners starting bottom-left.
    pub fn corners(&self) -> [C64; 4] {
        [
            C64::new(self.re_lo, self.im_lo),
            C64::new(self.re_hi, self.im_lo),
            C64::new(self.re_hi, self.im_hi),
            C64::new(self.re_lo, self.im_hi),
        ]
    }

    pub fn expanded(&self, d: f64) -> Rect {
        Rect { re_lo: self.re_lo - d, re_hi: self.re_hi + d, im_lo: self.im_lo - d, im_hi: self.im_hi + d }
    }

    pub fn shifted(&self, dre: f64) -> Rect {
        Rect { re_lo: self.re_lo + dre, re_hi: self.re_hi + dre, ..*self }
    }

    fn split(&self, fx: f64, fy: f64) -> [Rect; 4] {
        let xm = self.re_lo + fx * self.width();
        let ym = self.im_lo + fy * self.height();
        [
            Rect { re_hi: xm, im_hi: ym, ..*self },
            Rect { re_lo: xm, im_hi: ym, ..*self },
            Rect { re_lo: xm, im_lo: ym, ..*self },
            Rect { re_hi: xm, im_lo: ym, ..*self },
        ]
    }

    pub fn is_full_period(&self) -> bool {
        self.width() >= TAU - 1e-9
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RootKind {
    Eigenvalue,
    Resonance,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Root {
    pub kappa: C64,
    pub multiplicity: usize,
    pub kind: RootKind,
    /// |D(κ)| at the reported κ.
    pub residual: f64,
}

impl Root {
    /// w = e^{−iκ}.
    pub fn w(&self) -> C64 {
        (C64::new(0.0, -1.0) * self.kappa).exp()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RootSet {
    pub roots: Vec<Root>,
    pub winding_total: i64,
    /// Rectangle actually traversed (after any boundary perturbation).
    pub contour: Option<Rect>,
}

impl RootSet {
    pub fn eigenvalue_count(&self) -> usize {
        self.roots.iter().filter(|r| r.kind == RootKind::Eigenvalue).map(|r| r.multiplicity).sum()
    }

    pub fn resonance_count(&self) -> usize {
        self.roots.iter().filter(|r| r.kind == RootKind::Resonance).map(|r| r.multiplicity).sum()
    }

    pub fn total_multiplicity(&self) -> usize {
        self.roots.iter().map(|r| r.multiplicity).sum()
    }
}

#[derive(Debug)]
enum WindFail {
    /// D vanished (numerically) on the contour.
    Hit,
    NonInteger(f64),
}

type SampleCache = Mutex<HashMap<(u64, u64), Sample>>;

struct Tracker<'a> {
    model: &'a InteractionModel,
    cache: Option<&'a SampleCache>,
}

/// Phase of D at a point, with |D′/D| bounding how fast it can turn.
#[derive(Clone, Copy)]
struct Sample {
    phase: C64,
    speed: f64,
}

impl Tracker<'_> {
    fn sample(&self, z: C64) -> std::result::Result<Sample, WindFail> {
        let key = (z.re.to_bits(), z.im.to_bits());
        if let Some(hit) = self.cache.and_then(|c| c.lock().expect("cache lock").get(&key).copied()) {
            return Ok(hit);
        }
        let (ld, g) = self.model.log_det_with_dlog(z);
        let sample = match g {
            Some(g) if ld.ln_abs.is_finite() && ld.phase.is_finite() => Sample { phase: ld.phase, speed: g.norm() },
            _ => return Err(WindFail::Hit),
        };
        if let Some(c) = self.cache {
            c.lock().expect("cache lock").insert(key, sample);
        }
        Ok(sample)
    }

    fn segment(&self, a: C64, sa: Sample, b: C64, sb: Sample) -> std::result::Result<f64, WindFail> {
        let h = (b - a).norm();
        if h < 1e-13 * (1.0 + a.norm()) {
            return Err(WindFail::Hit);
        }
        let m = 0.5 * (a + b);
        let sm = self.sample(m)?;
        let d1 = (sm.phase * sa.phase.conj()).arg();
        let d2 = (sb.phase * sm.phase.conj()).arg();
        // sampled phases alone alias around multiple zeros near the path
        let turn = 0.5 * h * sa.speed.max(sm.speed).max(sb.speed);
        if d1.abs() < FRAC_PI_4 && d2.abs() < FRAC_PI_4 && turn < FRAC_PI_4 {
            return Ok(d1 + d2);
        }
        Ok(self.segment(a, sa, m, sm)? + self.segment(m, sm, b, sb)?)
    }

    /// Phase change along an axis-parallel edge. Interior sample points sit
    /// on a fixed grid and the edge is walked in a canonical direction, so
    /// neighbouring rectangles share evaluations.
    fn edge(&self, a: C64, b: C64) -> std::result::Result<f64, WindFail> {
        if (b.re, b.im) < (a.re, a.im) {
            return self.edge(b, a).map(|t| -t);
        }
        let horizontal = a.im == b.im;
        let (lo, hi) = if horizontal { (a.re, b.re) } else { (a.im, b.im) };
        let at = |t: f64| if horizontal { C64::new(t, a.im) } else { C64::new(a.re, t) };
        let mut pts = vec![a];
        let mut k = (lo / COARSE_STEP).floor() + 1.0;
        while k * COARSE_STEP < hi {
            pts.push(at(k * COARSE_STEP));
            k += 1.0;
        }
        pts.push(b);
        let mut sa = self.sample(a)?;
        let mut total = 0.0;
        for w in pts.windows(2) {
            let sb = self.sample(w[1])?;
            total += self.segment(w[0], sa, w[1], sb)?;
            sa = sb;
        }
        Ok(total)
    }

    fn winding(&self, r: &Rect) -> std::result::Result<i64, WindFail> {
        if self.model.dim() == 0 {
            return Ok(0);
        }
        let c = r.corners();
        let mut total = 0.0;
        for k in 0..4 {
            total += self.edge(c[k], c[(k + 1) % 4])?;
        }
        let w = total / TAU;
        let n = w.round();
        if (w - n).abs() > 1e-6 {
            return Err(WindFail::NonInteger(w));
        }
        Ok(n as i64)
    }
}

struct Solver<'a> {
    model: &'a InteractionModel,
    tol: f64,
    cache: SampleCache,
}

impl Solver<'_> {
    fn tracker(&self) -> Tracker<'_> {
        Tracker { model: self.model, cache: Some(&self.cache) }
    }

    /// Newton on D′/D with multiplicity correction; `None` if it diverges.
    fn newton(&self, start: C64, mult: usize) -> Option<C64> {
        let mut k = start;
        let mut last = f64::INFINITY;
        for _ in 0..100 {
            let dl = match self.model.dlog(k) {
                Ok(d) => d,
                Err(_) => return Some(k),
            };
            if !dl.is_finite() || dl.norm() == 0.0 {
                return None;
            }
            let step = mult as f64 / dl;
            k -= step;
            if !k.is_finite() {
                return None;
            }
            last = step.norm();
            if last < 4e-16 * (1.0 + k.norm()) {
                return Some(k);
            }
        }
        (last < 1e-12 * (1.0 + k.norm())).then_some(k)
    }

    fn root(&self, k: C64, mult: usize) -> Result<Root> {
        if k.im.abs() <= EIGEN_IM_TOL {
            let snapped = C64::new(k.re, 0.0);
            let residual = self.model.log_det(snapped).abs();
            if residual <= 1e-8 {
                return Ok(Root { kappa: snapped, multiplicity: mult, kind: RootKind::Eigenvalue, residual });
            }
        }
        if k.im > 1e-10 {
            return Err(Error::UpperHalfRoot { im: k.im });
        }
        let residual = self.model.log_det(k).abs();
        Ok(Root { kappa: k, multiplicity: mult, kind: RootKind::Resonance, residual })
    }

    fn cluster_confirmed(&self, k: C64, mult: usize) -> bool {
        let mut h = (10.0 * self.tol).max(1e-12 * (1.0 + k.norm()));
        for _ in 0..3 {
            if let Ok(r) = Rect::centered(k, h, h) {
                match self.tracker().winding(&r) {
                    Ok(w) => return w == mult as i64,
                    Err(_) => h *= 1.7,
                }
            }
        }
        false
    }

    fn solve(&self, rect: Rect, w: i64) -> Result<Vec<Root>> {
        if w == 0 {
            return Ok(vec![]);
        }
        if w < 0 {
            return Err(Error::Winding(format!("negative winding {w} on {rect:?}")));
        }
        let mult = w as usize;
        let size = rect.width().max(rect.height());
        if w == 1 || size < 1e-2 {
            if let Some(k) = self.newton(rect.center(), mult) {
                if rect.contains_with_slack(k, 1e-14 * (1.0 + k.norm())) && (w == 1 || self.cluster_confirmed(k, mult)) {
                    return Ok(vec![self.root(k, mult)?]);
                }
            }
        }
        if size < self.tol {
            let k = self.newton(rect.center(), mult).filter(|k| rect.contains(*k)).unwrap_or(rect.center());
            return Ok(vec![self.root(k, mult)?]);
        }
        for (i, &fx) in SPLITS.iter().enumerate() {
            let fy = SPLITS[(i + 2) % SPLITS.len()];
            let children = rect.split(fx, fy);
            let windings: Vec<_> = children.par_iter().map(|c| self.tracker().winding(c)).collect();
            if windings.iter().any(|r| r.is_err()) {
                continue;
            }
            let ws: Vec<i64> = windings.into_iter().map(|r| r.unwrap_or(0)).collect();
            if ws.iter().sum::<i64>() != w {
                continue;
            }
            let parts: Vec<Result<Vec<Root>>> =
                children.par_iter().zip(ws.par_iter()).map(|(c, &cw)| self.solve(*c, cw)).collect();
            let mut out = Vec::new();
            for p in parts {
                out.extend(p?);
            }
            return Ok(out);
        }
        Err(Error::Winding(format!("could not subdivide {rect:?} consistently")))
    }
}

fn wind_error(e: WindFail, r: &Rect) -> Error {
    match e {
        WindFail::Hit => Error::Winding(format!("D vanishes on the boundary of {r:?}")),
        WindFail::NonInteger(w) => Error::Winding(format!("non-integer winding {w} on {r:?}")),
    }
}

/// Winding number of D along the rectangle, without boundary perturbation.
pub fn winding_number(coin: &CoinField, rect: &Rect) -> Result<i64> {
    let model = InteractionModel::new(coin);
    Tracker { model: &model, cache: None }.winding(rect).map_err(|e| wind_error(e, rect))
}

/// All zeros of D inside `region`, with winding multiplicities.
///
/// A region spanning a full period in Re κ is treated as the periodic strip:
/// its vertical edges may be moved, and returned roots have Re κ in [0, 2π).
/// Otherwise a boundary zero is handled by growing the rectangle by small
/// multiples of `tol`.
pub fn locate_roots(coin: &CoinField, region: Rect, tol: f64) -> Result<RootSet> {
    if !(tol > 0.0 && tol < 1e-2) {
        return Err(Error::InvalidParameter(format!("tol must lie in (0, 1e-2), got {tol}")));
    }
    let model = InteractionModel::new(coin);
    if model.dim() == 0 {
        return Ok(RootSet { roots: vec![], winding_total: 0, contour: Some(region) });
    }
    let solver = Solver { model: &model, tol, cache: Mutex::new(HashMap::new()) };
    let tracker = solver.tracker();
    let periodic = region.is_full_period();
    let candidates: Vec<Rect> = if periodic {
        STRIP_OFFSETS.iter().map(|d| region.shifted(*d)).collect()
    } else {
        [0.0, 1.0, 3.0, 10.0, 30.0, 100.0].iter().map(|f| region.expanded(f * tol)).collect()
    };
    let mut last_err = None;
    let mut chosen = None;
    for r in candidates {
        match tracker.winding(&r) {
            Ok(w) => {
                chosen = Some((r, w));
                break;
            }
            Err(e) => last_err = Some(wind_error(e, &r)),
        }
    }
    let Some((rect, w)) = chosen else {
        return Err(last_err.unwrap_or_else(|| Error::Winding("no contour".into())));
    };
    let mut roots = solver.solve(rect, w)?;
    let total: usize = roots.iter().map(|r| r.multiplicity).sum();
    if total as i64 != w {
        return Err(Error::Winding(format!("multiplicities sum to {total}, winding is {w}")));
    }
    if periodic {
        for r in roots.iter_mut() {
            r.kappa.re = normalize_phase(r.kappa.re);
        }
    }
    roots.sort_by(|a, b| a.kappa.re.total_cmp(&b.kappa.re).then(a.kappa.im.total_cmp(&b.kappa.im)));
    Ok(RootSet { roots, winding_total: w, contour: Some(rect) })
}

/// Full-period strip Im κ ∈ [−depth, DEFAULT_STRIP_TOP].
pub fn locate_roots_in_strip(coin: &CoinField, depth: f64, tol: f64) -> Result<RootSet> {
    locate_roots(coin, Rect::strip(depth)?, tol)
}
