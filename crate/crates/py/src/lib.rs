//! Python bindings: preset models, D(κ), root location, evolution and the
//! barrier and corner spectra.

use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;

use qwres::barrier::{build_nonpenetrable, interior_spectrum, BarrierSpec};
use qwres::elastic::{classify_trapping, elastic_spectrum};
use qwres::presets::{build, Model, Preset, PresetParams};
use qwres::shape::{corner_quantization as quantize, qc2_roots as qc2, CornerState, OrbitSign};
use qwres::spectral::{locate_roots, winding_number, InteractionModel, Rect, RootKind};
use qwres::{Chirality, Site, WalkOperator, WalkState};

create_exception!(qwres, QwresError, PyException);

fn err(e: qwres::Error) -> PyErr {
    QwresError::new_err(format!("{}: {e}", e.kind()))
}

/// A preset coin field instantiated at concrete parameters.
#[pyclass(name = "Model", module = "qwres")]
struct PyModel {
    inner: Model,
    det: InteractionModel,
}

#[pymethods]
impl PyModel {
    #[new]
    #[pyo3(signature = (preset, m0=2, n0=2, big_m0=1, eps=0.0, seed=1))]
    fn new(preset: &str, m0: i64, n0: i64, big_m0: i64, eps: f64, seed: u64) -> PyResult<Self> {
        let preset: Preset = preset.parse().map_err(err)?;
        let inner = build(preset, &PresetParams { m0, n0, big_m0, eps, seed }).map_err(err)?;
        let det = InteractionModel::new(&inner.coin);
        Ok(PyModel { inner, det })
    }

    #[getter]
    fn preset(&self) -> &'static str {
        self.inner.preset.name()
    }

    /// Sites where the coin differs from the identity.
    fn active_sites(&self) -> Vec<(i64, i64)> {
        self.inner.coin.active_sites().iter().map(|s| (s.x, s.y)).collect()
    }

    /// D(κ) = det(I + M(κ)).
    fn det(&self, kappa: Complex64) -> Complex64 {
        self.det.det(kappa)
    }

    fn winding(&self, re_lo: f64, re_hi: f64, im_lo: f64, im_hi: f64) -> PyResult<i64> {
        let r = Rect::new(re_lo, re_hi, im_lo, im_hi).map_err(err)?;
        winding_number(&self.inner.coin, &r).map_err(err)
    }

    /// Zeros of D in the strip 0 ≤ Re κ < 2π, −depth < Im κ ≤ 0, as
    /// (κ, multiplicity, kind) tuples.
    #[pyo3(signature = (depth=2.0, tol=1e-9))]
    fn resonances(&self, py: Python<'_>, depth: f64, tol: f64) -> PyResult<Vec<(Complex64, usize, &'static str)>> {
        let coin = &self.inner.coin;
        let set = py
            .detach(|| Rect::strip(depth).and_then(|r| locate_roots(coin, r, tol)))
            .map_err(err)?;
        Ok(set
            .roots
            .iter()
            .map(|r| {
                let kind = match r.kind {
                    RootKind::Eigenvalue => "eigenvalue",
                    RootKind::Resonance => "resonance",
                };
                (r.kappa, r.multiplicity, kind)
            })
            .collect())
    }

    /// U^t δ_{start, chirality} as {(x, y, chirality): amplitude}.
    #[pyo3(signature = (t, start=(0, 0), chirality="left"))]
    fn evolve(&self, py: Python<'_>, t: u64, start: (i64, i64), chirality: &str) -> PyResult<Vec<((i64, i64, String), Complex64)>> {
        let j = Chirality::parse(chirality)
            .ok_or_else(|| QwresError::new_err(format!("unknown chirality '{chirality}'")))?;
        let op = WalkOperator::new(self.inner.coin.clone());
        let u = py.detach(|| op.evolve(&WalkState::delta(Site::new(start.0, start.1), j), t));
        Ok(u.entries().map(|(s, k, z)| ((s.x, s.y, k.name().to_string()), z)).collect())
    }

    /// Phases of the elastic spectrum, or None if the coin is not a phased
    /// permutation field.
    fn elastic_spectrum(&self) -> Option<Vec<f64>> {
        let pc = self.inner.elastic()?;
        let report = classify_trapping(&pc);
        Some(elastic_spectrum(&report.orbits, 1e-10).into_iter().map(|l| l.phase).collect())
    }
}

/// Interior eigen-phases of the barrier as (phase, multiplicity) clusters.
#[pyfunction]
#[pyo3(signature = (big_m0=1, seed=None))]
fn barrier_spectrum(big_m0: i64, seed: Option<u64>) -> PyResult<Vec<(f64, usize)>> {
    let spec = match seed {
        Some(s) => BarrierSpec::random_interior(big_m0, s),
        None => BarrierSpec::trivial(big_m0),
    }
    .map_err(err)?;
    let iu = build_nonpenetrable(&spec).and_then(|np| interior_spectrum(&np)).map_err(err)?;
    Ok(iu.phase_clusters(1e-8))
}

/// Explicit corner modes as (orbit sign, κ, kind) tuples.
#[pyfunction]
#[pyo3(signature = (preset="one-corner", m0=2, n0=2, eps=0.0))]
fn corner_quantization(preset: &str, m0: i64, n0: i64, eps: f64) -> PyResult<Vec<(&'static str, Complex64, &'static str)>> {
    let p: Preset = preset.parse().map_err(err)?;
    let model = build(p, &PresetParams { m0, n0, eps, ..PresetParams::default() }).map_err(err)?;
    let fam = model
        .corner
        .ok_or_else(|| QwresError::new_err(format!("'{preset}' is not a corner preset")))?;
    let q = quantize(&fam).map_err(err)?;
    Ok(q.modes
        .iter()
        .map(|m| {
            let sign = match m.sign {
                OrbitSign::Plus => "+",
                OrbitSign::Minus => "-",
            };
            let kind = match m.state {
                CornerState::Eigenfunction(_) => "eigenvalue",
                CornerState::Resonant(_) => "resonance",
            };
            (sign, m.kappa, kind)
        })
        .collect())
}

/// Roots of e^{−iNκ} = c with Re κ in [0, 2π).
#[pyfunction]
fn qc2_roots(c: Complex64, n: usize) -> Vec<Complex64> {
    qc2(c, n)
}

#[pymodule]
#[pyo3(name = "qwres")]
fn qwres_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(barrier_spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(corner_quantization, m)?)?;
    m.add_function(wrap_pyfunction!(qc2_roots, m)?)?;
    m.add("QwresError", m.py().get_type::<QwresError>())?;
    Ok(())
}
