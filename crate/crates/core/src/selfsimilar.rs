//! The explicit singular solution and its verification.
//!
//! psi(t, r) = L(t)^(-1/sigma) Q(r / L(t)) e^(i tau(t)) with
//! L(t) = sqrt(2a (Tc - t)) and tau(t) = ln(Tc / (Tc - t)) / (2a). The width
//! scale L collapses to zero at Tc while every admissible L^p norm blows up.

use num_complex::Complex64;

use crate::diagnostics::p_star;
use crate::error::{Error, Result};
use crate::profile::RadialProfile;

/// Width scale L(t) = sqrt(2a (Tc - t)).
pub fn scale_l(a: f64, tc: f64, t: f64) -> Result<f64> {
    check_time(tc, t)?;
    Ok((2.0 * a * (tc - t)).sqrt())
}

/// Accumulated phase tau(t) = ln(Tc / (Tc - t)) / (2a); equals the integral
/// of L^(-2) from 0 to t.
pub fn phase_tau(a: f64, tc: f64, t: f64) -> Result<f64> {
    check_time(tc, t)?;
    Ok((tc / (tc - t)).ln() / (2.0 * a))
}

fn check_time(tc: f64, t: f64) -> Result<()> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("t = {t} must be nonnegative")));
    }
    if t >= tc {
        return Err(Error::Domain(format!(
            "t = {t} has reached the collapse time {tc}"
        )));
    }
    Ok(())
}

/// Surface area of the unit sphere in R^d.
fn unit_sphere_area(dim: u32) -> f64 {
    // 2 pi^{d/2} / Gamma(d/2), evaluated for half-integers.
    let d = dim as f64;
    let gamma_half = |two_k: u32| -> f64 {
        // Gamma(two_k / 2)
        if two_k.is_multiple_of(2) {
            (1..two_k / 2).map(|i| i as f64).product::<f64>().max(1.0)
        } else {
            let mut g = std::f64::consts::PI.sqrt();
            let mut x = 0.5;
            while x + 1.0 <= two_k as f64 / 2.0 {
                g *= x;
                x += 1.0;
            }
            g
        }
    };
    2.0 * std::f64::consts::PI.powf(d / 2.0) / gamma_half(dim)
}

/// A radial profile promoted to the explicit time-dependent solution by a
/// choice of collapse time. Immutable after construction.
#[derive(Debug, Clone)]
pub struct SelfSimilarSolution {
    pub profile: RadialProfile,
    pub tc: f64,
}

impl SelfSimilarSolution {
    pub fn new(profile: RadialProfile, tc: f64) -> Result<Self> {
        if !(tc > 0.0) || !tc.is_finite() {
            return Err(Error::Domain(format!(
                "collapse time {tc} must be positive"
            )));
        }
        Ok(Self { profile, tc })
    }

    /// Collapse time fixed by L(0) = 1, i.e. Tc = 1 / (2a); then
    /// psi(0, x) = Q(x) exactly.
    pub fn with_unit_initial_scale(profile: RadialProfile) -> Self {
        let tc = 1.0 / (2.0 * profile.params.a);
        Self { profile, tc }
    }

    pub fn a(&self) -> f64 {
        self.profile.params.a
    }

    pub fn sigma(&self) -> f64 {
        self.profile.params.sigma
    }

    /// psi(t, r). Radii that map beyond the stored profile are refused: the
    /// far field is oscillatory and extrapolation would be meaningless.
    pub fn evaluate(&self, t: f64, r: f64) -> Result<Complex64> {
        if !(r >= 0.0) {
            return Err(Error::Domain(format!("r = {r} must be nonnegative")));
        }
        let l = scale_l(self.a(), self.tc, t)?;
        let tau = phase_tau(self.a(), self.tc, t)?;
        let q = self.profile.sample(r / l)?;
        Ok(q * l.powf(-1.0 / self.sigma()) * Complex64::from_polar(1.0, tau))
    }

    /// Max over the core grid |x| <= 10 L(t) of
    /// |i psi_t + psi_xx + |psi|^{2 sigma} psi| with both derivatives by
    /// centered differences of step h; expected O(h^2). One dimension only.
    pub fn residual_max(&self, t: f64, h: f64) -> Result<f64> {
        if self.profile.params.dim != 1 {
            return Err(Error::Domain("residual check is defined for d = 1".into()));
        }
        if !(h > 0.0) {
            return Err(Error::Domain(format!("h = {h} must be positive")));
        }
        if t - h < 0.0 || t + h >= self.tc {
            return Err(Error::Precondition(format!(
                "stencil times [{}, {}] must lie within [0, Tc)",
                t - h,
                t + h
            )));
        }
        let l = scale_l(self.a(), self.tc, t)?;
        if l < 5.0 * h {
            return Err(Error::Precondition(format!(
                "L(t) = {l} is not well separated from h = {h}"
            )));
        }
        let sigma = self.sigma();
        let m = (10.0 * l / h + 1e-9).floor() as usize;
        let mut worst = 0.0f64;
        for j in 0..=m {
            let x = j as f64 * h;
            let center = self.evaluate(t, x)?;
            let xx = (self.evaluate(t, (x - h).abs())? - 2.0 * center + self.evaluate(t, x + h)?)
                / (h * h);
            let tt = (self.evaluate(t + h, x)? - self.evaluate(t - h, x)?) / (2.0 * h);
            let nl = center.norm_sqr().powf(sigma) * center;
            let res = Complex64::i() * tt + xx + nl;
            worst = worst.max(res.norm());
        }
        Ok(worst)
    }

    /// ||Q||_p over R^d by quadrature of |Q|^p rho^(d-1) on the stored grid
    /// (plus the tiny [0, rho_0] sliver); p = inf gives the sup.
    pub fn profile_norm(&self, p: f64) -> Result<f64> {
        if p.is_infinite() {
            return Ok(self.profile.sup_abs());
        }
        if !(p > 0.0) {
            return Err(Error::Domain(format!("p = {p} must be positive")));
        }
        let d = self.profile.params.dim as f64;
        let prof = &self.profile;
        let f = |rho: f64, q: Complex64| q.norm().powf(p) * rho.powf(d - 1.0);
        let mut acc = 0.5 * (f(0.0, prof.params.q0) + f(prof.rho[0], prof.q[0])) * prof.rho[0];
        for i in 1..prof.rho.len() {
            acc += 0.5
                * (f(prof.rho[i], prof.q[i]) + f(prof.rho[i - 1], prof.q[i - 1]))
                * (prof.rho[i] - prof.rho[i - 1]);
        }
        Ok((unit_sphere_area(self.profile.params.dim) * acc).powf(1.0 / p))
    }

    /// The exact scaling law ||psi(t)||_p = L^(d/p - 1/sigma) ||Q||_p.
    ///
    /// For p = inf this is ||Q||_inf / L^{1/sigma}. For finite p the
    /// change-of-variables factor L^{d/p} is kept; the exponent
    /// d/p - 1/sigma is negative throughout p > p*, so every admissible
    /// norm still diverges as t -> Tc.
    pub fn lp_norm(&self, t: f64, p: f64) -> Result<f64> {
        let l = scale_l(self.a(), self.tc, t)?;
        let sigma = self.sigma();
        if p.is_infinite() {
            return Ok(self.profile.sup_abs() * l.powf(-1.0 / sigma));
        }
        let ps = p_star(sigma, self.profile.params.dim)?;
        if p <= ps {
            return Err(Error::NormDivergence { p, p_star: ps });
        }
        let d = self.profile.params.dim as f64;
        Ok(self.profile_norm(p)? * l.powf(d / p - 1.0 / sigma))
    }
}
