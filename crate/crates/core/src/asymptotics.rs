//! WKB far-field basis, coefficient fitting, and decay/integrability checks.
//!
//! For large rho the profile behaves as c1*Q1 + c2*Q2 with
//!
//! ```text
//! Q1 ~ rho^(-i/a - 1/sigma)
//! Q2 ~ exp(-i a rho^2 / 2) rho^(i/a - d + 1/sigma)
//! ```
//!
//! Q1 decays like rho^(-1/sigma) and is square integrable; Q2 decays like
//! rho^(-d + 1/sigma), dominates as rho -> infinity, and is in L^p exactly
//! for p > p* = sigma d / (sigma d - 1).

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::profile::{ProfileParams, RadialProfile};

/// Complex least-squares coefficients of the far-field basis over a window.
#[derive(Debug, Clone, Copy)]
pub struct FarFieldFit {
    pub c1: Complex64,
    pub c2: Complex64,
    /// Radii (rho_a, rho_b) of the fit window.
    pub window: (f64, f64),
    /// Relative root-mean-square misfit over the window nodes.
    pub residual: f64,
}

/// The two WKB basis functions at radius rho. Complex powers use the
/// principal logarithm; rho > 0 keeps them single valued.
pub fn wkb_basis(params: &ProfileParams, rho: f64) -> Result<(Complex64, Complex64)> {
    if !(rho > 0.0) {
        return Err(Error::Domain(format!("rho = {rho} must be positive")));
    }
    let a = params.a;
    let sigma = params.sigma;
    let d = params.dim as f64;
    let ln = rho.ln();
    let q1 = (Complex64::new(-1.0 / sigma, -1.0 / a) * ln).exp();
    let q2 = Complex64::from_polar(1.0, -0.5 * a * rho * rho)
        * (Complex64::new(-d + 1.0 / sigma, 1.0 / a) * ln).exp();
    Ok((q1, q2))
}

/// Least-squares fit of Q ~ c1 Q1 + c2 Q2 over the profile nodes whose radii
/// lie inside `window`. Two complex unknowns; the 2x2 normal equations are
/// solved directly.
pub fn fit_far_field(profile: &RadialProfile, window: (f64, f64)) -> Result<FarFieldFit> {
    let (lo, hi) = window;
    if !(lo < hi) {
        return Err(Error::Precondition(format!(
            "window ({lo}, {hi}) must be increasing"
        )));
    }
    if lo < 5.0 {
        return Err(Error::Precondition(format!(
            "window start {lo} < 5; the WKB basis is a far-field expansion"
        )));
    }
    let idx = profile.window_indices(lo, hi);
    if idx.len() < 8 {
        return Err(Error::Precondition(format!(
            "window contains {} nodes; at least 8 required",
            idx.len()
        )));
    }

    let mut g11 = 0.0f64;
    let mut g22 = 0.0f64;
    let mut g12 = Complex64::ZERO;
    let mut b1 = Complex64::ZERO;
    let mut b2 = Complex64::ZERO;
    let mut qq = 0.0f64;
    let mut basis = Vec::with_capacity(idx.len());
    for &i in &idx {
        let (q1, q2) = wkb_basis(&profile.params, profile.rho[i])?;
        let q = profile.q[i];
        g11 += q1.norm_sqr();
        g22 += q2.norm_sqr();
        g12 += q1.conj() * q2;
        b1 += q1.conj() * q;
        b2 += q2.conj() * q;
        qq += q.norm_sqr();
        basis.push((q1, q2));
    }
    let det = g11 * g22 - g12.norm_sqr();
    if det <= 1e-12 * g11 * g22 {
        return Err(Error::Fit(format!(
            "normal system is rank deficient over ({lo}, {hi}): det/scale = {:e}",
            det / (g11 * g22)
        )));
    }
    let c1 = (g22 * b1 - g12 * b2) / det;
    let c2 = (g11 * b2 - g12.conj() * b1) / det;

    let mut misfit = 0.0f64;
    for (j, &i) in idx.iter().enumerate() {
        let (q1, q2) = basis[j];
        misfit += (profile.q[i] - c1 * q1 - c2 * q2).norm_sqr();
    }
    let residual = if qq > 0.0 { (misfit / qq).sqrt() } else { 0.0 };
    Ok(FarFieldFit {
        c1,
        c2,
        window,
        residual,
    })
}

/// Slope of ln(envelope of |Q|) against ln(rho) over the window.
///
/// The envelope is taken at local maxima of |Q| (three-point comparison) to
/// suppress oscillation bias; when the data carries fewer than three maxima
/// (a monotone modulus does not oscillate) the raw window nodes are their own
/// envelope and are used instead.
pub fn decay_exponent(profile: &RadialProfile, window: (f64, f64)) -> Result<f64> {
    let (lo, hi) = window;
    let idx = profile.window_indices(lo, hi);
    if idx.len() < 3 {
        return Err(Error::Fit(format!(
            "window contains {} nodes; need at least 3",
            idx.len()
        )));
    }
    let abs: Vec<f64> = profile.q.iter().map(|q| q.norm()).collect();
    let mut env: Vec<usize> = idx
        .iter()
        .copied()
        .filter(|&i| i > 0 && i + 1 < abs.len() && abs[i] >= abs[i - 1] && abs[i] >= abs[i + 1])
        .collect();
    if env.len() < 3 {
        env = idx;
    }
    let pts: Vec<(f64, f64)> = env
        .iter()
        .filter(|&&i| abs[i] > 0.0)
        .map(|&i| (profile.rho[i].ln(), abs[i].ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::Fit(
            "fewer than 3 usable envelope points in window".into(),
        ));
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom <= 0.0 {
        return Err(Error::Fit("degenerate abscissae in envelope fit".into()));
    }
    Ok((n * sxy - sx * sy) / denom)
}

/// Trend verdict of the cumulative L^p tail integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntegrabilityVerdict {
    Converging,
    Diverging,
    Inconclusive,
}

impl std::fmt::Display for IntegrabilityVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Converging => write!(f, "converging"),
            Self::Diverging => write!(f, "diverging"),
            Self::Inconclusive => write!(f, "inconclusive"),
        }
    }
}

/// Cumulative values of the integral of |Q|^p rho^(d-1) at the dyadic radii
/// rho_max/16, /8, /4, /2 and rho_max, plus a verdict from the trend of the
/// dyadic increments. This is a finite-window heuristic: it reads the trend,
/// it does not prove convergence.
pub fn lp_integrability_check(
    profile: &RadialProfile,
    p: f64,
) -> Result<(Vec<f64>, IntegrabilityVerdict)> {
    if !(p > 1.0) {
        return Err(Error::Domain(format!("p = {p} must exceed 1")));
    }
    let rho_max = profile.rho_max();
    if rho_max < 20.0 {
        return Err(Error::Precondition(format!(
            "profile reaches rho = {rho_max}; need rho_max >= 20"
        )));
    }
    let d = profile.params.dim as f64;
    let f = |i: usize| profile.q[i].norm().powf(p) * profile.rho[i].powf(d - 1.0);

    let checkpoints: Vec<f64> = (0..5).map(|k| rho_max / 2f64.powi(4 - k)).collect();
    let mut partial = Vec::with_capacity(5);
    let mut acc = 0.0f64;
    let mut next = 0usize;
    for i in 1..profile.rho.len() {
        acc += 0.5 * (f(i) + f(i - 1)) * (profile.rho[i] - profile.rho[i - 1]);
        while next < checkpoints.len() && profile.rho[i] >= checkpoints[next] {
            partial.push(acc);
            next += 1;
        }
    }
    while partial.len() < checkpoints.len() {
        partial.push(acc);
    }

    let increments: Vec<f64> = partial.windows(2).map(|w| w[1] - w[0]).collect();
    // The far-field oscillation modulates individual dyadic increments (the
    // inner octaves hold only a few periods), so the verdict reads the
    // geometric-mean increment ratio across the ladder, i.e. the net decay
    // rate (I_last / I_first)^(1/3), rather than each pairwise ratio.
    let k = increments.len();
    let verdict = if increments[0] <= 0.0 || increments[k - 1] < 0.0 {
        IntegrabilityVerdict::Inconclusive
    } else {
        let mean_ratio = (increments[k - 1] / increments[0]).powf(1.0 / (k - 1) as f64);
        if mean_ratio < 0.9 {
            IntegrabilityVerdict::Converging
        } else if mean_ratio > 0.99 {
            IntegrabilityVerdict::Diverging
        } else {
            IntegrabilityVerdict::Inconclusive
        }
    };
    Ok((partial, verdict))
}
