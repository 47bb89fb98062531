//! Continued resolvent matrix elements and Riesz projections.

use std::f64::consts::TAU;

use nalgebra::DVector;
use rayon::prelude::*;

use super::{kernel_power, resolvent_kernel_entry, InteractionModel, Rect};
use crate::error::{Error, Result};
use crate::lattice::{Chirality, CoinField, Site, WalkState, C64, ZERO};
use crate::linalg::Lu;

/// R(κ) = R_0 − R_0 S (C − I) (I + M)^{-1} R_0 restricted to the active
/// sites, valid for every κ off the zeros of D.
pub struct ContinuedResolvent<'a> {
    model: &'a InteractionModel,
    kappa: C64,
    lu: Lu,
}

impl<'a> ContinuedResolvent<'a> {
    pub fn new(model: &'a InteractionModel, kappa: C64) -> Result<ContinuedResolvent<'a>> {
        let lu = model.factor(kappa);
        if model.dim() > 0 && lu.is_singular() {
            return Err(Error::NearPole(format!("kappa = {kappa} is (near) a zero of D")));
        }
        Ok(ContinuedResolvent { model, kappa, lu })
    }

    pub fn kappa(&self) -> C64 {
        self.kappa
    }

    fn free(&self, f: &WalkState, x: Site, j: Chirality) -> C64 {
        f.entries()
            .filter(|(_, k, _)| *k == j)
            .map(|(y, _, z)| resolvent_kernel_entry(j, x, y, self.kappa) * z)
            .sum()
    }

    /// (C − I)(I + M)^{-1} P R_0 f, one 4-vector per active site.
    fn correction(&self, f: &WalkState) -> Vec<[C64; 4]> {
        let sites = self.model.sites();
        if sites.is_empty() {
            return vec![];
        }
        let b = DVector::from_fn(self.model.dim(), |r, _| {
            self.free(f, sites[r / 4], Chirality::from_index(r % 4))
        });
        let h = self.lu.solve(&b);
        (0..sites.len())
            .map(|s| {
                let d = self.model.defect(s);
                std::array::from_fn(|j| (0..4).map(|k| d[j][k] * h[4 * s + k]).sum())
            })
            .collect()
    }

    fn value(&self, f: &WalkState, v: &[[C64; 4]], x: Site, j: Chirality) -> C64 {
        let mut r = self.free(f, x, j);
        for (s, y) in self.model.sites().iter().enumerate() {
            let c = v[s][j.index()];
            if c != ZERO && kernel_power(j, x, y.offset(j)).is_some() {
                r -= resolvent_kernel_entry(j, x, y.offset(j), self.kappa) * c;
            }
        }
        r
    }

    /// (R(κ)f) evaluated at the given sites.
    pub fn apply_at(&self, f: &WalkState, at: &[Site]) -> WalkState {
        let v = self.correction(f);
        let mut out = WalkState::new();
        for x in at {
            for j in Chirality::ALL {
                out.set(*x, j, self.value(f, &v, *x, j));
            }
        }
        out
    }

    /// (R(κ)f, g) = Σ (R f)_j(x) conj(g_j(x)).
    pub fn element(&self, f: &WalkState, g: &WalkState) -> C64 {
        let v = self.correction(f);
        g.entries().map(|(x, j, gz)| self.value(f, &v, x, j) * gz.conj()).sum()
    }
}

fn romberg_side<F>(f: &F, a: C64, b: C64, tol: f64) -> Result<C64>
where
    F: Fn(C64) -> Result<C64> + Sync,
{
    let h = b - a;
    let mut rows: Vec<Vec<C64>> = vec![vec![(f(a)? + f(b)?) * h * 0.5]];
    let mut n = 1usize;
    for level in 1..=16 {
        let pts: Vec<C64> = (0..n).map(|k| a + h * ((2 * k + 1) as f64 / (2 * n) as f64)).collect();
        let vals: Vec<Result<C64>> = pts.par_iter().map(|z| f(*z)).collect();
        let mut mid = ZERO;
        for v in vals {
            mid += v?;
        }
        let prev = &rows[level - 1];
        let mut row = vec![prev[0] * 0.5 + mid * h / (2 * n) as f64];
        let mut p4 = 1.0;
        for k in 1..=level {
            p4 *= 4.0;
            let r = row[k - 1] + (row[k - 1] - prev[k - 1]) / (p4 - 1.0);
            row.push(r);
        }
        n *= 2;
        let change = (row[level] - prev[level - 1]).norm();
        rows.push(row);
        if level >= 4 && change < tol {
            return Ok(rows[level][level]);
        }
    }
    Err(Error::Quadrature(format!("side {a} -> {b} did not reach {tol:e}")))
}

/// (1/2π)∮ e^{−iμ}(R(μ)f, g)dμ over the counterclockwise rectangle, by
/// trapezoid doubling with Richardson extrapolation on each side.
pub fn projection_element(coin: &CoinField, contour: &Rect, f: &WalkState, g: &WalkState, tol: f64) -> Result<C64> {
    let model = InteractionModel::new(coin);
    super::winding_number(coin, contour)
        .map_err(|e| Error::NearPole(format!("contour passes through a root of D: {e}")))?;
    let integrand = |mu: C64| -> Result<C64> {
        let r = ContinuedResolvent::new(&model, mu)?;
        Ok((C64::new(0.0, -1.0) * mu).exp() * r.element(f, g))
    };
    let c = contour.corners();
    let mut total = ZERO;
    for k in 0..4 {
        total += romberg_side(&integrand, c[k], c[(k + 1) % 4], tol * TAU / 4.0)?;
    }
    Ok(total / TAU)
}
