//! Free-resolvent kernel, interaction matrix M(κ) and D(κ) = det(I + M(κ)).

mod projection;
mod roots;

pub use projection::{projection_element, ContinuedResolvent};
pub use roots::{locate_roots, locate_roots_in_strip, winding_number, Rect, Root, RootKind, RootSet, DEFAULT_STRIP_TOP};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::lattice::{Chirality, Coin, CoinField, Site, WalkState, C64, ONE, ZERO};
use crate::linalg::{LogDet, Lu};

const I: C64 = C64::new(0.0, 1.0);

/// Exponent n of the kernel entry −e^{iκn}, or `None` where it vanishes.
pub fn kernel_power(j: Chirality, x: Site, y: Site) -> Option<i64> {
    match j {
        Chirality::Left if x.y == y.y && y.x >= x.x => Some(y.x - x.x + 1),
        Chirality::Right if x.y == y.y && y.x <= x.x => Some(x.x - y.x + 1),
        Chirality::Down if x.x == y.x && y.y >= x.y => Some(y.y - x.y + 1),
        Chirality::Up if x.x == y.x && y.y <= x.y => Some(x.y - y.y + 1),
        _ => None,
    }
}

/// Kernel of R_0(κ) = (U_0 − e^{−iκ})^{-1} continued to all κ.
pub fn resolvent_kernel_entry(j: Chirality, x: Site, y: Site, kappa: C64) -> C64 {
    match kernel_power(j, x, y) {
        Some(n) => -(I * kappa * n as f64).exp(),
        None => ZERO,
    }
}

/// (R_0(κ)f)_j(x) for finitely supported f.
pub fn apply_free_resolvent(f: &WalkState, x: Site, j: Chirality, kappa: C64) -> C64 {
    f.entries()
        .filter(|(_, k, _)| *k == j)
        .map(|(y, _, z)| resolvent_kernel_entry(j, x, y, kappa) * z)
        .sum()
}

#[derive(Clone, Debug)]
pub struct InteractionMatrix {
    pub kappa: C64,
    pub sites: Vec<Site>,
    pub matrix: DMatrix<C64>,
}

/// Sparse description of M(κ): entry (4a+j, 4b+k) is
/// K_j(x_a, y_b + d_j)·(C(y_b) − I)_{jk}, a sum of terms c·e^{iκn}.
#[derive(Clone, Debug)]
pub struct InteractionModel {
    sites: Vec<Site>,
    defects: Vec<Coin>,
    terms: Vec<(usize, usize, i64, C64)>,
    max_power: i64,
}

impl InteractionModel {
    /// Built over the sites where C ≠ I; the determinant is unchanged by
    /// adding sites with C = I.
    pub fn new(coin: &CoinField) -> InteractionModel {
        InteractionModel::on_sites(coin, &coin.active_sites())
    }

    pub fn on_sites(coin: &CoinField, sites: &[Site]) -> InteractionModel {
        let defects: Vec<Coin> = sites
            .iter()
            .map(|s| {
                let mut c = coin.coin(*s);
                for (i, row) in c.iter_mut().enumerate() {
                    row[i] -= ONE;
                }
                c
            })
            .collect();
        let mut terms = Vec::new();
        let mut max_power = 0;
        for (a, x) in sites.iter().enumerate() {
            for (b, y) in sites.iter().enumerate() {
                for j in Chirality::ALL {
                    let Some(n) = kernel_power(j, *x, y.offset(j)) else { continue };
                    for k in 0..4 {
                        let c = defects[b][j.index()][k];
                        if c != ZERO {
                            terms.push((4 * a + j.index(), 4 * b + k, n, -c));
                            max_power = max_power.max(n);
                        }
                    }
                }
            }
        }
        InteractionModel { sites: sites.to_vec(), defects, terms, max_power }
    }

    pub fn dim(&self) -> usize {
        4 * self.sites.len()
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn defect(&self, b: usize) -> &Coin {
        &self.defects[b]
    }

    fn powers(&self, kappa: C64) -> Vec<C64> {
        let z = (I * kappa).exp();
        let mut p = Vec::with_capacity(self.max_power as usize + 1);
        let mut acc = ONE;
        for _ in 0..=self.max_power {
            p.push(acc);
            acc *= z;
        }
        p
    }

    pub fn matrix(&self, kappa: C64) -> DMatrix<C64> {
        let p = self.powers(kappa);
        let mut m = DMatrix::zeros(self.dim(), self.dim());
        for &(r, c, n, coef) in &self.terms {
            m[(r, c)] += coef * p[n as usize];
        }
        m
    }

    pub fn derivative(&self, kappa: C64) -> DMatrix<C64> {
        let p = self.powers(kappa);
        let mut m = DMatrix::zeros(self.dim(), self.dim());
        for &(r, c, n, coef) in &self.terms {
            m[(r, c)] += coef * I * n as f64 * p[n as usize];
        }
        m
    }

    pub fn factor(&self, kappa: C64) -> Lu {
        let n = self.dim();
        Lu::new(self.matrix(kappa) + DMatrix::identity(n, n))
    }

    pub fn log_det(&self, kappa: C64) -> LogDet {
        if self.dim() == 0 {
            return LogDet { ln_abs: 0.0, phase: ONE };
        }
        self.factor(kappa).log_det()
    }

    pub fn det(&self, kappa: C64) -> C64 {
        self.log_det(kappa).value()
    }

    /// D′/D = tr((I + M)^{-1} M′).
    pub fn dlog(&self, kappa: C64) -> Result<C64> {
        let (ld, g) = self.log_det_with_dlog(kappa);
        g.ok_or(Error::NearZeroDeterminant { re: kappa.re, im: kappa.im }).map(|g| {
            debug_assert!(!ld.is_zero());
            g
        })
    }

    /// log D and D′/D from one factorization; the latter is `None` at a
    /// (near-)zero of D.
    pub fn log_det_with_dlog(&self, kappa: C64) -> (LogDet, Option<C64>) {
        if self.dim() == 0 {
            return (LogDet { ln_abs: 0.0, phase: ONE }, Some(ZERO));
        }
        let lu = self.factor(kappa);
        let ld = lu.log_det();
        if ld.is_zero() || ld.ln_abs < -690.0 {
            return (ld, None);
        }
        let tr = lu.trace_solve(&self.derivative(kappa));
        (ld, tr.is_finite().then_some(tr))
    }
}

pub fn interaction_matrix(coin: &CoinField, kappa: C64) -> InteractionMatrix {
    let model = InteractionModel::new(coin);
    InteractionMatrix { kappa, matrix: model.matrix(kappa), sites: model.sites }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DetValue {
    pub d: C64,
    pub dlog: C64,
}

/// (D(κ), D′(κ)/D(κ)); errors at a (near-)zero of D.
pub fn det_value(coin: &CoinField, kappa: C64) -> Result<DetValue> {
    let model = InteractionModel::new(coin);
    let dlog = model.dlog(kappa)?;
    Ok(DetValue { d: model.det(kappa), dlog })
}
