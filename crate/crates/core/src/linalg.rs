//! Dense complex LU with log-determinant, and a unitary eigensolver.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::lattice::{C64, ONE, ZERO};

/// det(A) kept as ln|det| plus a unit phase, so large boxes do not overflow.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogDet {
    pub ln_abs: f64,
    pub phase: C64,
}

impl LogDet {
    pub fn value(&self) -> C64 {
        self.phase * self.ln_abs.exp()
    }

    pub fn abs(&self) -> f64 {
        self.ln_abs.exp()
    }

    pub fn is_zero(&self) -> bool {
        self.ln_abs == f64::NEG_INFINITY
    }
}

/// PA = LU with partial pivoting, stored in place.
#[derive(Clone, Debug)]
pub struct Lu {
    lu: DMatrix<C64>,
    perm: Vec<usize>,
    swaps: usize,
}

impl Lu {
    pub fn new(mut a: DMatrix<C64>) -> Lu {
        let n = a.nrows();
        assert_eq!(n, a.ncols(), "LU needs a square matrix");
        let mut perm: Vec<usize> = (0..n).collect();
        let mut swaps = 0;
        // column-major storage: column j is data[j*n..(j+1)*n]
        let data = a.as_mut_slice();
        for k in 0..n {
            let col_k = &data[k * n..(k + 1) * n];
            let mut p = k;
            let mut best = col_k[k].norm();
            for (i, v) in col_k.iter().enumerate().skip(k + 1) {
                let r = v.norm();
                if r > best {
                    best = r;
                    p = i;
                }
            }
            if p != k {
                for j in 0..n {
                    data.swap(j * n + p, j * n + k);
                }
                perm.swap(p, k);
                swaps += 1;
            }
            let pivot = data[k * n + k];
            if pivot == ZERO {
                continue;
            }
            let inv = ONE / pivot;
            for v in &mut data[k * n + k + 1..(k + 1) * n] {
                *v *= inv;
            }
            let (head, tail) = data.split_at_mut((k + 1) * n);
            let lcol = &head[k * n + k + 1..(k + 1) * n];
            for col in tail.chunks_exact_mut(n) {
                let t = col[k];
                if t == ZERO {
                    continue;
                }
                for (x, l) in col[k + 1..].iter_mut().zip(lcol) {
                    *x -= l * t;
                }
            }
        }
        Lu { lu: a, perm, swaps }
    }

    pub fn dim(&self) -> usize {
        self.lu.nrows()
    }

    pub fn log_det(&self) -> LogDet {
        let mut ln_abs = 0.0;
        let mut phase = if self.swaps % 2 == 0 { ONE } else { -ONE };
        for k in 0..self.dim() {
            let p = self.lu[(k, k)];
            let r = p.norm();
            if r == 0.0 {
                return LogDet { ln_abs: f64::NEG_INFINITY, phase: ONE };
            }
            ln_abs += r.ln();
            phase *= p / r;
        }
        LogDet { ln_abs, phase }
    }

    pub fn det(&self) -> C64 {
        self.log_det().value()
    }

    /// Smallest |pivot| relative to the largest; a cheap conditioning proxy.
    pub fn pivot_ratio(&self) -> f64 {
        let n = self.dim();
        if n == 0 {
            return 1.0;
        }
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for k in 0..n {
            let r = self.lu[(k, k)].norm();
            lo = lo.min(r);
            hi = hi.max(r);
        }
        if hi == 0.0 {
            0.0
        } else {
            lo / hi
        }
    }

    pub fn is_singular(&self) -> bool {
        (0..self.dim()).any(|k| self.lu[(k, k)] == ZERO)
    }

    pub fn solve(&self, b: &DVector<C64>) -> DVector<C64> {
        let mut x: Vec<C64> = self.perm.iter().map(|&p| b[p]).collect();
        self.substitute(&mut x);
        DVector::from_vec(x)
    }

    /// Forward and back substitution in place on an already permuted vector.
    fn substitute(&self, x: &mut [C64]) {
        let n = self.dim();
        let lu = self.lu.as_slice();
        for j in 0..n {
            let t = x[j];
            if t != ZERO {
                for (xi, l) in x[j + 1..].iter_mut().zip(&lu[j * n + j + 1..(j + 1) * n]) {
                    *xi -= l * t;
                }
            }
        }
        for j in (0..n).rev() {
            x[j] /= lu[j * n + j];
            let t = x[j];
            if t != ZERO {
                for (xi, u) in x[..j].iter_mut().zip(&lu[j * n..j * n + j]) {
                    *xi -= u * t;
                }
            }
        }
    }

    pub fn solve_matrix(&self, b: &DMatrix<C64>) -> DMatrix<C64> {
        let n = self.dim();
        let mut out = DMatrix::zeros(n, b.ncols());
        for c in 0..b.ncols() {
            let src = b.column(c);
            let dst = &mut out.as_mut_slice()[c * n..(c + 1) * n];
            for (d, &p) in dst.iter_mut().zip(&self.perm) {
                *d = src[p];
            }
            self.substitute(dst);
        }
        out
    }

    /// tr(A^{-1} B).
    pub fn trace_solve(&self, b: &DMatrix<C64>) -> C64 {
        let n = self.dim();
        let mut x = vec![ZERO; n];
        let mut tr = ZERO;
        for c in 0..n {
            let src = b.column(c);
            if src.iter().all(|z| *z == ZERO) {
                continue;
            }
            for (d, &p) in x.iter_mut().zip(&self.perm) {
                *d = src[p];
            }
            self.substitute(&mut x);
            tr += x[c];
        }
        tr
    }

    pub fn inverse(&self) -> DMatrix<C64> {
        self.solve_matrix(&DMatrix::identity(self.dim(), self.dim()))
    }
}

pub fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// max |A*A − I|.
pub fn unitarity_defect(a: &DMatrix<C64>) -> f64 {
    let n = a.ncols();
    max_abs(&(a.adjoint() * a - DMatrix::<C64>::identity(n, n)))
}

/// Largest singular value.
pub fn spectral_norm(a: &DMatrix<C64>) -> f64 {
    a.clone().singular_values().iter().fold(0.0, |acc, s| acc.max(*s))
}

/// Eigen-decomposition of a unitary matrix.
#[derive(Clone, Debug)]
pub struct UnitaryEigen {
    pub values: Vec<C64>,
    pub vectors: DMatrix<C64>,
    pub residual: f64,
}

/// Diagonalizes a unitary U through the Hermitian Cayley transform
/// H = i(ω + U)(ω − U)^{-1}, with ω on the unit circle chosen away from the
/// spectrum. Eigenvalues are read back as Rayleigh quotients v*Uv.
pub fn unitary_eigen(u: &DMatrix<C64>) -> Result<UnitaryEigen> {
    let n = u.nrows();
    if n == 0 {
        return Ok(UnitaryEigen { values: vec![], vectors: DMatrix::zeros(0, 0), residual: 0.0 });
    }
    let defect = unitarity_defect(u);
    if defect > 1e-9 {
        return Err(Error::EigenSolver(format!("input not unitary (defect {defect:.3e})")));
    }
    let id = DMatrix::<C64>::identity(n, n);
    let mut best: Option<(f64, C64)> = None;
    for k in 0..24 {
        let gamma = 0.1309 + std::f64::consts::TAU * k as f64 / 24.0;
        let omega = C64::from_polar(1.0, gamma);
        let smin = (&id * omega - u)
            .singular_values()
            .iter()
            .fold(f64::INFINITY, |acc, s| acc.min(*s));
        if best.is_none_or(|(b, _)| smin > b) {
            best = Some((smin, omega));
        }
    }
    let (gap, omega) = best.expect("at least one shift");
    if gap < 1e-6 {
        return Err(Error::EigenSolver("no Cayley shift separated from the spectrum".into()));
    }
    let lu = Lu::new(&id * omega - u);
    let inv = lu.inverse();
    let h = (&id * omega + u) * inv * C64::new(0.0, 1.0);
    let h = (&h + h.adjoint()) * C64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(h);
    let vectors = eig.eigenvectors;
    let uv = u * &vectors;
    let mut values = Vec::with_capacity(n);
    let mut residual: f64 = 0.0;
    for c in 0..n {
        let v = vectors.column(c);
        let lam = v.dotc(&uv.column(c));
        let r = (uv.column(c) - v * lam).iter().fold(0.0f64, |a, z| a.max(z.norm()));
        residual = residual.max(r);
        values.push(lam);
    }
    if residual > 1e-10 {
        return Err(Error::EigenSolver(format!("eigen residual {residual:.3e} above tolerance")));
    }
    Ok(UnitaryEigen { values, vectors, residual })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn lu_det_matches_two_by_two() {
        let a = DMatrix::from_row_slice(2, 2, &[c(1.0, 2.0), c(3.0, 0.0), c(0.0, -1.0), c(2.0, 1.0)]);
        let expect = a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)];
        assert!((Lu::new(a).det() - expect).norm() < 1e-14);
    }

    #[test]
    fn lu_solve_roundtrip() {
        let a = DMatrix::from_fn(5, 5, |i, j| c((i * 7 + j * 3) as f64 % 5.0 - 2.0, (i + 2 * j) as f64 % 3.0));
        let b = DVector::from_fn(5, |i, _| c(i as f64, 1.0));
        let x = Lu::new(a.clone()).solve(&b);
        assert!((a * x - b).norm() < 1e-12);
    }

    #[test]
    fn singular_matrix_gives_zero_log_det() {
        let a = DMatrix::from_row_slice(2, 2, &[ONE, ONE, ONE, ONE]);
        assert!(Lu::new(a).log_det().is_zero());
    }

    #[test]
    fn permutation_matrix_eigen() {
        // 4-cycle: eigenvalues are the fourth roots of unity.
        let mut p = DMatrix::<C64>::zeros(4, 4);
        for i in 0..4 {
            p[((i + 1) % 4, i)] = ONE;
        }
        let e = unitary_eigen(&p).unwrap();
        let mut prod = ONE;
        for v in &e.values {
            assert!((v.norm() - 1.0).abs() < 1e-12);
            prod *= *v;
        }
        // product of fourth roots of unity is -1
        assert!((prod + ONE).norm() < 1e-12);
    }
}
