//! Python bindings for the main types and operations: profile integration,
//! WKB far-field fits, parameter shooting, the explicit solution and the
//! direct NLS simulation.
//!
//! Build with `cargo build -p subnls-py --release`, then expose the produced
//! `libsubnls_py.so` as `subnls_py.so` on the Python path (the smoke test in
//! `python/smoke_test.py` does this automatically).

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use subnls::error::Error;
use subnls::{asymptotics, diagnostics, nls, profile, selfsimilar, shooting};

type ShootTraceRows = Vec<(usize, f64, f64, f64)>;
type DiagnosticsRows = Vec<(f64, f64, f64, f64, f64)>;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::InvalidParams(_)
        | Error::Precondition(_)
        | Error::Domain(_)
        | Error::NormDivergence { .. }
        | Error::Config(_) => PyValueError::new_err(e.to_string()),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

/// The quadruple (d, sigma, a, Q(0)) defining a profile problem.
#[pyclass(name = "ProfileParams", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyProfileParams {
    inner: profile::ProfileParams,
}

#[pymethods]
impl PyProfileParams {
    #[new]
    fn new(d: u32, sigma: f64, a: f64, q0: Complex64) -> PyResult<Self> {
        Ok(Self {
            inner: profile::ProfileParams::new(d, sigma, a, q0).map_err(to_py)?,
        })
    }

    #[getter]
    fn d(&self) -> u32 {
        self.inner.dim
    }

    #[getter]
    fn sigma(&self) -> f64 {
        self.inner.sigma
    }

    #[getter]
    fn a(&self) -> f64 {
        self.inner.a
    }

    #[getter]
    fn q0(&self) -> Complex64 {
        self.inner.q0
    }

    fn __repr__(&self) -> String {
        format!(
            "ProfileParams(d={}, sigma={}, a={}, q0={})",
            self.inner.dim, self.inner.sigma, self.inner.a, self.inner.q0
        )
    }
}

/// Sampled complex profile Q(rho) on the integrator's accepted grid.
#[pyclass(name = "RadialProfile", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyRadialProfile {
    inner: profile::RadialProfile,
}

#[pymethods]
impl PyRadialProfile {
    #[getter]
    fn rho(&self) -> Vec<f64> {
        self.inner.rho.clone()
    }

    #[getter]
    fn q(&self) -> Vec<Complex64> {
        self.inner.q.clone()
    }

    #[getter]
    fn dq(&self) -> Vec<Complex64> {
        self.inner.dq.clone()
    }

    #[getter]
    fn rho_max(&self) -> f64 {
        self.inner.rho_max()
    }

    /// Q(rho) by cubic Hermite interpolation; refuses rho beyond the grid.
    fn sample(&self, rho: f64) -> PyResult<Complex64> {
        self.inner.sample(rho).map_err(to_py)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

/// Far-field least-squares coefficients over a window.
#[pyclass(name = "FarFieldFit", frozen)]
struct PyFarFieldFit {
    inner: asymptotics::FarFieldFit,
}

#[pymethods]
impl PyFarFieldFit {
    #[getter]
    fn c1(&self) -> Complex64 {
        self.inner.c1
    }

    #[getter]
    fn c2(&self) -> Complex64 {
        self.inner.c2
    }

    #[getter]
    fn window(&self) -> (f64, f64) {
        self.inner.window
    }

    #[getter]
    fn residual(&self) -> f64 {
        self.inner.residual
    }

    fn __repr__(&self) -> String {
        format!(
            "FarFieldFit(c1={}, c2={}, window=({}, {}), residual={:.3e})",
            self.inner.c1,
            self.inner.c2,
            self.inner.window.0,
            self.inner.window.1,
            self.inner.residual
        )
    }
}

/// Outcome of a shooting run.
#[pyclass(name = "ShootResult", frozen)]
struct PyShootResult {
    inner: shooting::ShootResult,
}

#[pymethods]
impl PyShootResult {
    #[getter]
    fn a_opt(&self) -> f64 {
        self.inner.a_opt
    }

    #[getter]
    fn q0_opt(&self) -> f64 {
        self.inner.q0_opt
    }

    #[getter]
    fn c2_min(&self) -> f64 {
        self.inner.c2_min
    }

    #[getter]
    fn evaluations(&self) -> usize {
        self.inner.evaluations
    }

    #[getter]
    fn converged(&self) -> bool {
        self.inner.converged
    }

    fn __repr__(&self) -> String {
        format!(
            "ShootResult(a_opt={}, q0_opt={}, c2_min={:.4e}, evaluations={}, converged={})",
            self.inner.a_opt,
            self.inner.q0_opt,
            self.inner.c2_min,
            self.inner.evaluations,
            self.inner.converged
        )
    }
}

/// Complex field on a uniform grid at one instant.
#[pyclass(name = "FieldState", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyFieldState {
    inner: nls::FieldState,
}

#[pymethods]
impl PyFieldState {
    #[new]
    fn new(t: f64, x: Vec<f64>, psi: Vec<Complex64>) -> PyResult<Self> {
        if x.len() != psi.len() || x.len() < 2 {
            return Err(PyValueError::new_err(
                "x and psi must have equal length >= 2",
            ));
        }
        Ok(Self {
            inner: nls::FieldState { t, x, psi },
        })
    }

    #[getter]
    fn t(&self) -> f64 {
        self.inner.t
    }

    #[getter]
    fn x(&self) -> Vec<f64> {
        self.inner.x.clone()
    }

    #[getter]
    fn psi(&self) -> Vec<Complex64> {
        self.inner.psi.clone()
    }

    fn __len__(&self) -> usize {
        self.inner.x.len()
    }
}

/// The explicit singular solution built from a profile and a collapse time.
#[pyclass(name = "SelfSimilarSolution", frozen)]
struct PySelfSimilarSolution {
    inner: selfsimilar::SelfSimilarSolution,
}

#[pymethods]
impl PySelfSimilarSolution {
    /// Collapse time fixed by L(0) = 1, so psi(0, x) = Q(x).
    #[new]
    fn new(profile: &PyRadialProfile) -> Self {
        Self {
            inner: selfsimilar::SelfSimilarSolution::with_unit_initial_scale(profile.inner.clone()),
        }
    }

    #[getter]
    fn tc(&self) -> f64 {
        self.inner.tc
    }

    #[getter]
    fn a(&self) -> f64 {
        self.inner.a()
    }

    /// psi(t, r).
    fn evaluate(&self, t: f64, r: f64) -> PyResult<Complex64> {
        self.inner.evaluate(t, r).map_err(to_py)
    }

    /// Max residual of the NLS over the core grid |x| <= 10 L(t), both
    /// derivatives by centered differences of step h.
    fn residual_check(&self, t: f64, h: f64) -> PyResult<f64> {
        self.inner.residual_max(t, h).map_err(to_py)
    }

    /// ||psi(t)||_p = L^(d/p - 1/sigma) ||Q||_p; p = inf for the sup norm.
    fn blowup_norm(&self, t: f64, p: f64) -> PyResult<f64> {
        self.inner.lp_norm(t, p).map_err(to_py)
    }

    /// ||Q||_p of the stored profile.
    fn profile_norm(&self, p: f64) -> PyResult<f64> {
        self.inner.profile_norm(p).map_err(to_py)
    }
}

/// Two-term Taylor values (Q, Q') at the series-start radius rho0.
#[pyfunction]
fn taylor_start(params: &PyProfileParams, rho0: f64) -> PyResult<(Complex64, Complex64)> {
    profile::taylor_start(&params.inner, rho0).map_err(to_py)
}

/// Integrate the profile equation out to rho_max at the given tolerance.
#[pyfunction]
#[pyo3(signature = (params, rho_max, tol = 1e-10))]
fn integrate_profile(
    params: &PyProfileParams,
    rho_max: f64,
    tol: f64,
) -> PyResult<PyRadialProfile> {
    Ok(PyRadialProfile {
        inner: profile::integrate_profile(&params.inner, rho_max, tol).map_err(to_py)?,
    })
}

/// The WKB far-field basis (Q1, Q2) at radius rho.
#[pyfunction]
fn wkb_basis(params: &PyProfileParams, rho: f64) -> PyResult<(Complex64, Complex64)> {
    asymptotics::wkb_basis(&params.inner, rho).map_err(to_py)
}

/// Least-squares far-field coefficients over [lo, hi].
#[pyfunction]
fn fit_far_field(profile: &PyRadialProfile, lo: f64, hi: f64) -> PyResult<PyFarFieldFit> {
    Ok(PyFarFieldFit {
        inner: asymptotics::fit_far_field(&profile.inner, (lo, hi)).map_err(to_py)?,
    })
}

/// Slope of the log-log envelope of |Q| over [lo, hi].
#[pyfunction]
fn decay_exponent(profile: &PyRadialProfile, lo: f64, hi: f64) -> PyResult<f64> {
    asymptotics::decay_exponent(&profile.inner, (lo, hi)).map_err(to_py)
}

/// Cumulative L^p tail integrals at dyadic radii plus the trend verdict
/// ("converging" / "diverging" / "inconclusive").
#[pyfunction]
fn lp_integrability_check(profile: &PyRadialProfile, p: f64) -> PyResult<(Vec<f64>, String)> {
    let (partial, verdict) =
        asymptotics::lp_integrability_check(&profile.inner, p).map_err(to_py)?;
    Ok((partial, verdict.to_string()))
}

/// The critical Lebesgue exponent sigma d / (sigma d - 1).
#[pyfunction]
fn p_star(sigma: f64, d: u32) -> PyResult<f64> {
    diagnostics::p_star(sigma, d).map_err(to_py)
}

/// Width scale L(t) = sqrt(2a (Tc - t)).
#[pyfunction]
fn scale_l(a: f64, tc: f64, t: f64) -> PyResult<f64> {
    selfsimilar::scale_l(a, tc, t).map_err(to_py)
}

/// Accumulated phase tau(t) = ln(Tc/(Tc - t)) / (2a).
#[pyfunction]
fn phase_tau(a: f64, tc: f64, t: f64) -> PyResult<f64> {
    selfsimilar::phase_tau(a, tc, t).map_err(to_py)
}

/// |c2| of the far-field fit for the given parameters.
#[pyfunction]
#[pyo3(signature = (a, q0, d = 1, sigma = 1.9, rho_max = 40.0, window = (24.0, 40.0), tol = 1e-10))]
fn objective(
    a: f64,
    q0: f64,
    d: u32,
    sigma: f64,
    rho_max: f64,
    window: (f64, f64),
    tol: f64,
) -> PyResult<f64> {
    shooting::objective(a, q0, d, sigma, rho_max, window, tol).map_err(to_py)
}

/// Minimize the clean-far-field functional over (a, Q(0)) from a guess.
/// Returns the result plus the evaluation trace (iter, a, q0, |c2|).
#[pyfunction]
#[pyo3(signature = (d, sigma, a0, q00, max_evals = 500, term_tol = 1e-6))]
fn shoot(
    d: u32,
    sigma: f64,
    a0: f64,
    q00: f64,
    max_evals: usize,
    term_tol: f64,
) -> PyResult<(PyShootResult, ShootTraceRows)> {
    let opts = shooting::ShootOptions {
        max_evals,
        term_tol,
        ..Default::default()
    };
    let (res, trace) = shooting::shoot(d, sigma, (a0, q00), opts).map_err(to_py)?;
    let rows = trace
        .iter()
        .map(|r| (r.iter, r.a, r.q0, r.abs_c2))
        .collect();
    Ok((PyShootResult { inner: res }, rows))
}

/// psi_0(x) = Q(|x|) on the uniform simulation grid.
#[pyfunction]
#[pyo3(signature = (profile, sigma, half_width = 70.0, dx = 0.05, dt = 0.001))]
fn init_from_profile(
    profile: &PyRadialProfile,
    sigma: f64,
    half_width: f64,
    dx: f64,
    dt: f64,
) -> PyResult<PyFieldState> {
    let config = nls::SimulationConfig {
        half_width,
        dx,
        dt,
        sigma,
        t_end: dt,
        snapshot_times: vec![],
        ..nls::SimulationConfig::reference(sigma)
    };
    Ok(PyFieldState {
        inner: nls::init_from_profile(&profile.inner, &config).map_err(to_py)?,
    })
}

/// Run the direct simulation; returns (snapshots, diagnostics rows,
/// blowup time or None). Diagnostics rows are
/// (t, mass, hamiltonian, linf, focusing).
#[pyfunction]
#[pyo3(signature = (profile, sigma, t_end, snapshot_times, half_width = 70.0, dx = 0.05,
                    dt = 0.001, nonlinear_iters = 2, diag_every = 50))]
#[allow(clippy::too_many_arguments)]
fn simulate(
    profile: &PyRadialProfile,
    sigma: f64,
    t_end: f64,
    snapshot_times: Vec<f64>,
    half_width: f64,
    dx: f64,
    dt: f64,
    nonlinear_iters: usize,
    diag_every: usize,
) -> PyResult<(Vec<PyFieldState>, DiagnosticsRows, Option<f64>)> {
    let config = nls::SimulationConfig {
        half_width,
        dx,
        dt,
        sigma,
        t_end,
        boundary: Default::default(),
        nonlinear_iters,
        snapshot_times,
        diag_every,
    };
    let out = nls::run(&profile.inner, &config).map_err(to_py)?;
    let snapshots = out
        .snapshots
        .into_iter()
        .map(|s| PyFieldState { inner: s })
        .collect();
    let trace = out
        .trace
        .iter()
        .map(|r| (r.t, r.mass, r.hamiltonian, r.linf, r.focusing))
        .collect();
    let blowup = match out.stop {
        nls::StopReason::Blowup { t, .. } => Some(t),
        nls::StopReason::ReachedEnd => None,
    };
    Ok((snapshots, trace, blowup))
}

/// One Crank-Nicolson step of dt.
#[pyfunction]
#[pyo3(signature = (state, sigma, dt, nonlinear_iters = 2))]
fn step(
    state: &PyFieldState,
    sigma: f64,
    dt: f64,
    nonlinear_iters: usize,
) -> PyResult<PyFieldState> {
    let half_width = state.inner.x.last().copied().unwrap_or(0.0);
    let dx = state
        .inner
        .x
        .get(1)
        .map(|x1| x1 - state.inner.x[0])
        .unwrap_or(1.0);
    let config = nls::SimulationConfig {
        half_width,
        dx,
        dt,
        sigma,
        t_end: state.inner.t + dt,
        boundary: Default::default(),
        nonlinear_iters,
        snapshot_times: vec![],
        diag_every: 1,
    };
    Ok(PyFieldState {
        inner: nls::step(&state.inner, &config).map_err(to_py)?,
    })
}

/// Relative (L_inf, L2) errors of |psi| against the analytic solution over
/// the core |x| <= core_radius.
#[pyfunction]
fn compare_with_analytic(
    state: &PyFieldState,
    sol: &PySelfSimilarSolution,
    core_radius: f64,
) -> PyResult<(f64, f64)> {
    nls::compare_with_analytic(&state.inner, &sol.inner, core_radius).map_err(to_py)
}

/// ||psi||_2^2 by trapezoid quadrature.
#[pyfunction]
fn mass(state: &PyFieldState) -> f64 {
    diagnostics::mass(&state.inner)
}

/// ||grad psi||_2^2 - ||psi||_{2s+2}^{2s+2} / (s+1).
#[pyfunction]
fn hamiltonian(state: &PyFieldState, sigma: f64) -> f64 {
    diagnostics::hamiltonian(&state.inner, sigma)
}

/// ||psi||_p on the grid; p = inf for the max.
#[pyfunction]
fn lp_norm(state: &PyFieldState, p: f64) -> f64 {
    diagnostics::lp_norm(&state.inner, p)
}

/// Hoelder interpolation margins on the p grid {2s+2, 8, 16, 64, inf};
/// returns ([(p, margin)], holds).
#[pyfunction]
fn blowup_implication_check(state: &PyFieldState, sigma: f64) -> (Vec<(f64, f64)>, bool) {
    let rep = diagnostics::blowup_implication_check(&state.inner, sigma);
    (
        rep.entries.iter().map(|e| (e.p, e.margin)).collect(),
        rep.holds,
    )
}

#[pymodule]
fn subnls_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyProfileParams>()?;
    m.add_class::<PyRadialProfile>()?;
    m.add_class::<PyFarFieldFit>()?;
    m.add_class::<PyShootResult>()?;
    m.add_class::<PyFieldState>()?;
    m.add_class::<PySelfSimilarSolution>()?;
    m.add_function(wrap_pyfunction!(taylor_start, m)?)?;
    m.add_function(wrap_pyfunction!(integrate_profile, m)?)?;
    m.add_function(wrap_pyfunction!(wkb_basis, m)?)?;
    m.add_function(wrap_pyfunction!(fit_far_field, m)?)?;
    m.add_function(wrap_pyfunction!(decay_exponent, m)?)?;
    m.add_function(wrap_pyfunction!(lp_integrability_check, m)?)?;
    m.add_function(wrap_pyfunction!(p_star, m)?)?;
    m.add_function(wrap_pyfunction!(scale_l, m)?)?;
    m.add_function(wrap_pyfunction!(phase_tau, m)?)?;
    m.add_function(wrap_pyfunction!(objective, m)?)?;
    m.add_function(wrap_pyfunction!(shoot, m)?)?;
    m.add_function(wrap_pyfunction!(init_from_profile, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(step, m)?)?;
    m.add_function(wrap_pyfunction!(compare_with_analytic, m)?)?;
    m.add_function(wrap_pyfunction!(mass, m)?)?;
    m.add_function(wrap_pyfunction!(hamiltonian, m)?)?;
    m.add_function(wrap_pyfunction!(lp_norm, m)?)?;
    m.add_function(wrap_pyfunction!(blowup_implication_check, m)?)?;
    Ok(())
}
