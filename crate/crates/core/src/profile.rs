//! Radial profile equation and its integrator.
//!
//! The complex profile Q(rho) solves
//!
//! ```text
//! Q'' + (d-1)/rho Q' - Q + i a (Q/sigma + rho Q') + |Q|^{2 sigma} Q = 0
//! ```
//!
//! with Q(0) = q0 and Q'(0) = 0. The origin is a removable singular point of
//! the (d-1)/rho term, so integration starts from a two-term Taylor expansion
//! at a small rho0 and proceeds outward with an embedded Dormand-Prince 5(4)
//! pair. The far field oscillates with local wavenumber a*rho, so accepted
//! steps are additionally capped at `step_cap_coeff / (a rho)`.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// The quadruple (d, sigma, a, Q(0)) defining a profile problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileParams {
    /// Spatial dimension.
    pub dim: u32,
    /// Nonlinearity exponent.
    pub sigma: f64,
    /// Self-similarity rate.
    pub a: f64,
    /// Initial profile value Q(0).
    pub q0: Complex64,
}

impl ProfileParams {
    pub fn new(dim: u32, sigma: f64, a: f64, q0: Complex64) -> Result<Self> {
        let p = Self { dim, sigma, a, q0 };
        p.validate()?;
        Ok(p)
    }

    /// The product sigma*d classifying the nonlinearity.
    pub fn sigma_d(&self) -> f64 {
        self.sigma * self.dim as f64
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidParams("dimension must be positive".into()));
        }
        if !self.sigma.is_finite() || !self.a.is_finite() || !self.q0.is_finite() {
            return Err(Error::InvalidParams("parameters must be finite".into()));
        }
        let sd = self.sigma_d();
        if !(sd > 1.0 && sd < 2.0) {
            return Err(Error::InvalidParams(format!(
                "sigma*d = {sd} outside the subcritical window (1, 2)"
            )));
        }
        if self.a <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "a = {} must be positive",
                self.a
            )));
        }
        if self.q0.norm() == 0.0 {
            return Err(Error::InvalidParams("q0 must be nonzero".into()));
        }
        Ok(())
    }

    /// Q''(0) from the rho -> 0 limit of the profile equation, where the
    /// radial Laplacian acts as d * Q''(0) and the rho Q' term drops out.
    pub fn curvature_at_origin(&self) -> Complex64 {
        let q0 = self.q0;
        let nl = q0.norm_sqr().powf(self.sigma);
        (q0 - Complex64::i() * (self.a / self.sigma) * q0 - nl * q0) / self.dim as f64
    }
}

/// Two-term Taylor values (Q, Q') at a small series-start radius rho0.
pub fn taylor_start(params: &ProfileParams, rho0: f64) -> Result<(Complex64, Complex64)> {
    params.validate()?;
    if !(rho0 > 0.0) || !rho0.is_finite() {
        return Err(Error::Precondition(format!(
            "rho0 = {rho0} must be positive"
        )));
    }
    let qpp0 = params.curvature_at_origin();
    let q = params.q0 + 0.5 * qpp0 * rho0 * rho0;
    let dq = qpp0 * rho0;
    Ok((q, dq))
}

/// Right-hand side of the first-order system (Q, Q').
#[inline]
fn rhs(params: &ProfileParams, rho: f64, q: Complex64, dq: Complex64) -> (Complex64, Complex64) {
    let nl = q.norm_sqr().powf(params.sigma) * q;
    let qpp = q
        - Complex64::i() * params.a * (q / params.sigma + rho * dq)
        - nl
        - ((params.dim - 1) as f64 / rho) * dq;
    (dq, qpp)
}

/// Options for [`integrate_profile_with`]. Defaults match the CLI defaults.
#[derive(Debug, Clone, Copy)]
pub struct IntegrateOptions {
    /// Series-start radius.
    pub rho0: f64,
    /// Local error tolerance per step (used as both absolute and relative).
    pub tol: f64,
    /// Step cap coefficient c: accepted steps satisfy h <= c / (a rho), so
    /// the far-field phase a rho^2 / 2 advances less than ~c/2 per step.
    pub step_cap_coeff: f64,
    pub max_steps: usize,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        Self {
            rho0: 1e-6,
            tol: 1e-10,
            step_cap_coeff: 0.1,
            max_steps: 5_000_000,
        }
    }
}

/// Sampled complex profile on the integrator's accepted grid.
///
/// `rho` is strictly increasing with `rho[0]` the series-start radius; `q`
/// and `dq` hold Q and Q' at the nodes. Off-node values come from
/// [`RadialProfile::sample`], cubic Hermite on the stored state.
#[derive(Debug, Clone)]
pub struct RadialProfile {
    pub params: ProfileParams,
    pub rho: Vec<f64>,
    pub q: Vec<Complex64>,
    pub dq: Vec<Complex64>,
}

impl RadialProfile {
    pub fn rho_max(&self) -> f64 {
        *self.rho.last().expect("profile has at least one node")
    }

    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }

    /// max |Q| over the stored nodes and the origin value.
    pub fn sup_abs(&self) -> f64 {
        self.q
            .iter()
            .map(|q| q.norm())
            .fold(self.params.q0.norm(), f64::max)
    }

    /// Q(rho) by cubic Hermite interpolation between accepted nodes; inside
    /// [0, rho[0]) the two-term Taylor series is used. Radii beyond the grid
    /// are refused (the far field oscillates; extrapolation would be junk).
    pub fn sample(&self, rho: f64) -> Result<Complex64> {
        if !(rho >= 0.0) {
            return Err(Error::Domain(format!("rho = {rho} must be nonnegative")));
        }
        if rho > self.rho_max() {
            return Err(Error::Extrapolation {
                rho,
                rho_max: self.rho_max(),
            });
        }
        if rho < self.rho[0] {
            let qpp0 = self.params.curvature_at_origin();
            return Ok(self.params.q0 + 0.5 * qpp0 * rho * rho);
        }
        let k = match self.rho.binary_search_by(|x| x.partial_cmp(&rho).unwrap()) {
            Ok(i) => return Ok(self.q[i]),
            Err(i) => i - 1, // rho[k] < rho < rho[k+1]
        };
        let h = self.rho[k + 1] - self.rho[k];
        let s = (rho - self.rho[k]) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        Ok(h00 * self.q[k] + h10 * h * self.dq[k] + h01 * self.q[k + 1] + h11 * h * self.dq[k + 1])
    }

    /// Indices of nodes with rho inside [lo, hi].
    pub fn window_indices(&self, lo: f64, hi: f64) -> Vec<usize> {
        (0..self.rho.len())
            .filter(|&i| self.rho[i] >= lo && self.rho[i] <= hi)
            .collect()
    }
}

/// Integrate the profile out to `rho_max` with the default series start and
/// step cap; `tol` is the per-step local error tolerance.
pub fn integrate_profile(params: &ProfileParams, rho_max: f64, tol: f64) -> Result<RadialProfile> {
    integrate_profile_with(
        params,
        rho_max,
        IntegrateOptions {
            tol,
            ..Default::default()
        },
    )
}

// Dormand-Prince 5(4) tableau.
const DP_C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
// 5th-order weights coincide with the last tableau row (FSAL).
const DP_E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrate with explicit options. The returned grid is the sequence of
/// accepted steps, starting exactly at the Taylor values at `opts.rho0`.
pub fn integrate_profile_with(
    params: &ProfileParams,
    rho_max: f64,
    opts: IntegrateOptions,
) -> Result<RadialProfile> {
    params.validate()?;
    if !(opts.tol > 0.0) {
        return Err(Error::Precondition(format!(
            "tol = {} must be positive",
            opts.tol
        )));
    }
    if !(rho_max > opts.rho0) {
        return Err(Error::Precondition(format!(
            "rho_max = {rho_max} must exceed the series start {}",
            opts.rho0
        )));
    }

    let (q_start, dq_start) = taylor_start(params, opts.rho0)?;
    let mut rho = opts.rho0;
    let mut y = [q_start, dq_start];

    let mut grid = vec![rho];
    let mut qs = vec![y[0]];
    let mut dqs = vec![y[1]];

    let cap = |r: f64| opts.step_cap_coeff / (params.a * r.max(1e-3));
    let mut h = (1e-3_f64).min(cap(rho)).min(rho_max - rho);
    let mut k: [[Complex64; 2]; 7] = [[Complex64::ZERO; 2]; 7];
    let (f0, f1) = rhs(params, rho, y[0], y[1]);
    k[0] = [f0, f1];

    let mut steps = 0usize;
    while rho < rho_max {
        if steps >= opts.max_steps {
            return Err(Error::Integration {
                rho,
                reason: format!("exceeded {} steps", opts.max_steps),
            });
        }
        steps += 1;
        h = h.min(cap(rho)).min(rho_max - rho);
        if h < 1e-14 * rho.max(1.0) {
            return Err(Error::Integration {
                rho,
                reason: "step size underflow".into(),
            });
        }

        for stage in 1..7 {
            let mut yi = y;
            for (j, kj) in k.iter().enumerate().take(stage) {
                let a = DP_A[stage][j];
                if a != 0.0 {
                    yi[0] += h * a * kj[0];
                    yi[1] += h * a * kj[1];
                }
            }
            let (g0, g1) = rhs(params, rho + DP_C[stage] * h, yi[0], yi[1]);
            k[stage] = [g0, g1];
        }
        // Stage 7 is evaluated at the 5th-order solution (FSAL).
        let mut y_new = y;
        for (j, kj) in k.iter().enumerate().take(6) {
            let b = DP_A[6][j];
            if b != 0.0 {
                y_new[0] += h * b * kj[0];
                y_new[1] += h * b * kj[1];
            }
        }

        if !y_new[0].is_finite() || !y_new[1].is_finite() {
            return Err(Error::Integration {
                rho,
                reason: "non-finite state".into(),
            });
        }

        let mut err = 0.0f64;
        for c in 0..2 {
            let mut e = Complex64::ZERO;
            for (j, kj) in k.iter().enumerate() {
                e += DP_E[j] * kj[c];
            }
            let sk = opts.tol + opts.tol * y[c].norm().max(y_new[c].norm());
            let r = (h * e).norm() / sk;
            err += r * r;
        }
        err = (err / 2.0).sqrt();
        // Quantize the estimate to 1/64 in log2 so the accepted-step sequence
        // does not depend on last-ulp noise; phase-rotated initial data then
        // reproduces the exact same grid.
        if err > 0.0 {
            err = ((err.log2() * 64.0).round() / 64.0).exp2();
        }

        let fac = (0.9 * err.powf(-0.2)).clamp(0.2, 5.0);
        if err <= 1.0 {
            rho += h;
            y = y_new;
            grid.push(rho);
            qs.push(y[0]);
            dqs.push(y[1]);
            k[0] = k[6]; // FSAL
        }
        h *= fac;
    }

    Ok(RadialProfile {
        params: *params,
        rho: grid,
        q: qs,
        dq: dqs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig1a() -> ProfileParams {
        ProfileParams::new(1, 1.9, 0.5145, Complex64::new(1.2953, 0.0)).unwrap()
    }

    #[test]
    fn rejects_out_of_window_params() {
        // sigma*d = 2.2: supercritical
        assert!(ProfileParams::new(1, 2.2, 0.5, Complex64::ONE).is_err());
        // sigma*d = 0.8
        assert!(ProfileParams::new(1, 0.8, 0.5, Complex64::ONE).is_err());
        // zero initial value
        assert!(ProfileParams::new(1, 1.9, 0.5, Complex64::ZERO).is_err());
        // nonpositive rate
        assert!(ProfileParams::new(1, 1.9, -0.1, Complex64::ONE).is_err());
        assert!(ProfileParams::new(1, 1.9, 0.5145, Complex64::ONE).is_ok());
    }

    #[test]
    fn taylor_start_unit_q0() {
        // For q0 = 1 the real part of Q''(0) cancels: 1 - |1|^{2 sigma} = 0,
        // leaving Q''(0) = -i a / sigma.
        let p = ProfileParams::new(1, 1.9, 0.5145, Complex64::ONE).unwrap();
        let (q, dq) = taylor_start(&p, 1e-6).unwrap();
        let expect = Complex64::new(0.0, -0.5145 / 1.9);
        assert!((p.curvature_at_origin() - expect).norm() < 1e-15);
        assert!((dq - expect * 1e-6).norm() < 1e-18);
        assert!((q - Complex64::ONE).norm() < 1e-12);
    }

    #[test]
    fn taylor_start_fig1a_q0() {
        // Closed-form Q''(0) evaluated independently: |q0|^{2 sigma} computed
        // via exp(sigma * ln(q0^2)) = 2.6730518870386617 for q0 = 1.2953,
        // giving Q''(0) = -2.167104109281178 - 0.35075360526315785 i.
        let p = fig1a();
        let qpp = p.curvature_at_origin();
        assert!((qpp - Complex64::new(-2.167104109281178, -0.35075360526315785)).norm() < 1e-12);
        let (_, dq) = taylor_start(&p, 1e-6).unwrap();
        assert!((dq - qpp * 1e-6).norm() < 1e-20);
    }

    #[test]
    fn taylor_start_limits() {
        // rho0 -> 0: values tend to (q0, 0).
        let p = fig1a();
        for rho0 in [1e-4, 1e-6, 1e-8] {
            let (q, dq) = taylor_start(&p, rho0).unwrap();
            let qpp = p.curvature_at_origin().norm();
            assert!((q - p.q0).norm() <= 0.51 * qpp * rho0 * rho0);
            assert!(dq.norm() <= 1.01 * qpp * rho0);
        }
        assert!(taylor_start(&p, 0.0).is_err());
        assert!(taylor_start(&p, -1.0).is_err());
        // hand-built invalid parameters are caught by the operation itself
        let bad = ProfileParams {
            dim: 1,
            sigma: 2.5,
            a: 0.5,
            q0: Complex64::ONE,
        };
        assert!(matches!(
            taylor_start(&bad, 1e-6),
            Err(Error::InvalidParams(_))
        ));
    }

    #[test]
    fn first_node_matches_taylor_values() {
        let p = fig1a();
        let prof = integrate_profile(&p, 5.0, 1e-10).unwrap();
        let (q, dq) = taylor_start(&p, 1e-6).unwrap();
        assert_eq!(prof.rho[0], 1e-6);
        assert_eq!(prof.q[0], q);
        assert_eq!(prof.dq[0], dq);
    }

    #[test]
    fn reference_envelopes_decay() {
        // Both reference panels: the clean minimizer and the oscillatory
        // Q(0) = 3 profile at the same rate.
        for q0 in [1.2953, 3.0] {
            let p = ProfileParams::new(1, 1.9, 0.5145, Complex64::new(q0, 0.0)).unwrap();
            let prof = integrate_profile(&p, 40.0, 1e-10).unwrap();
            assert!(
                prof.rho.windows(2).all(|w| w[1] > w[0]),
                "grid must increase"
            );
            assert!(prof.q.iter().chain(prof.dq.iter()).all(|z| z.is_finite()));
            // max over the outer half is below max over the inner half
            let mid = prof.rho.partition_point(|&r| r < 20.0);
            let inner: f64 = prof.q[..mid].iter().map(|q| q.norm()).fold(0.0, f64::max);
            let outer: f64 = prof.q[mid..].iter().map(|q| q.norm()).fold(0.0, f64::max);
            assert!(outer < inner, "q0 = {q0}");
        }
        // |Q(40)| < 0.2 |Q(0)| for the clean panel
        let prof = integrate_profile(&fig1a(), 40.0, 1e-10).unwrap();
        assert!(prof.q.last().unwrap().norm() < 0.2 * 1.2953);
    }

    /// Independent fixed-step classic RK4 oracle with its own right-hand
    /// side, kept deliberately separate from the adaptive path it checks.
    fn rk4_oracle(p: &ProfileParams, rho_end: f64, h: f64) -> (Complex64, Complex64) {
        let d = p.dim as f64;
        let f = |rho: f64, q: Complex64, dq: Complex64| -> (Complex64, Complex64) {
            let qpp = q
                - Complex64::i() * p.a * (q / p.sigma + rho * dq)
                - q.norm_sqr().powf(p.sigma) * q
                - (d - 1.0) / rho * dq;
            (dq, qpp)
        };
        let qpp0 =
            (p.q0 - Complex64::i() * (p.a / p.sigma) * p.q0 - p.q0.norm_sqr().powf(p.sigma) * p.q0)
                / d;
        let mut rho = 1e-6;
        let mut q = p.q0 + 0.5 * qpp0 * rho * rho;
        let mut dq = qpp0 * rho;
        let n = ((rho_end - rho) / h).round() as usize;
        let h = (rho_end - rho) / n as f64;
        for _ in 0..n {
            let (k1q, k1d) = f(rho, q, dq);
            let (k2q, k2d) = f(rho + 0.5 * h, q + 0.5 * h * k1q, dq + 0.5 * h * k1d);
            let (k3q, k3d) = f(rho + 0.5 * h, q + 0.5 * h * k2q, dq + 0.5 * h * k2d);
            let (k4q, k4d) = f(rho + h, q + h * k3q, dq + h * k3d);
            q += h / 6.0 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q);
            dq += h / 6.0 * (k1d + 2.0 * k2d + 2.0 * k3d + k4d);
            rho += h;
        }
        (q, dq)
    }

    #[test]
    fn matches_fixed_step_oracle_at_rho_10() {
        let p = fig1a();
        let (q_ref, _) = rk4_oracle(&p, 10.0, 1e-4);
        let prof = integrate_profile(&p, 10.0, 1e-10).unwrap();
        let q = *prof.q.last().unwrap();
        assert!(
            (q - q_ref).norm() / q_ref.norm() < 1e-6,
            "adaptive vs oracle: {:e}",
            (q - q_ref).norm() / q_ref.norm()
        );
    }

    #[test]
    fn tolerance_monotonicity_against_oracle() {
        let p = fig1a();
        let (q_ref, _) = rk4_oracle(&p, 10.0, 1e-4);
        let mut prev = f64::INFINITY;
        for tol in [1e-5, 5e-6, 2.5e-6, 1.25e-6, 1e-7, 1e-8] {
            let prof = integrate_profile(&p, 10.0, tol).unwrap();
            let dev = (*prof.q.last().unwrap() - q_ref).norm();
            assert!(
                dev <= prev + 1e-10,
                "deviation grew when tightening tol to {tol}: {prev:e} -> {dev:e}"
            );
            prev = dev;
        }
    }

    #[test]
    fn gauge_covariance_under_phase_rotation() {
        let base = fig1a();
        for theta in [0.3_f64, 1.1, -2.4] {
            let phase = Complex64::from_polar(1.0, theta);
            let rotated =
                ProfileParams::new(1, 1.9, 0.5145, Complex64::new(1.2953, 0.0) * phase).unwrap();
            let a = integrate_profile(&base, 15.0, 1e-10).unwrap();
            let b = integrate_profile(&rotated, 15.0, 1e-10).unwrap();
            assert_eq!(a.rho.len(), b.rho.len(), "step sequences must coincide");
            for i in 0..a.rho.len() {
                assert!((b.q[i] - a.q[i] * phase).norm() <= 1e-10 * a.q[i].norm().max(1.0));
            }
        }
    }

    /// Residual of the profile equation from the stored (Q, Q') state, with
    /// Q'' replaced by a second-order nonuniform centered difference of Q'.
    fn resubstitution_max(prof: &RadialProfile, lo: f64, hi: f64) -> f64 {
        let p = &prof.params;
        let mut worst = 0.0f64;
        for i in 1..prof.rho.len() - 1 {
            let r = prof.rho[i];
            if r < lo || r > hi {
                continue;
            }
            let hm = prof.rho[i] - prof.rho[i - 1];
            let hp = prof.rho[i + 1] - prof.rho[i];
            let qpp = (hm * hm * prof.dq[i + 1] - hp * hp * prof.dq[i - 1]
                + (hp * hp - hm * hm) * prof.dq[i])
                / (hm * hp * (hm + hp));
            let q = prof.q[i];
            let res = qpp + (p.dim - 1) as f64 / r * prof.dq[i] - q
                + Complex64::i() * p.a * (q / p.sigma + r * prof.dq[i])
                + q.norm_sqr().powf(p.sigma) * q;
            worst = worst.max(res.norm());
        }
        worst
    }

    #[test]
    fn resubstitution_residual_shrinks_with_grid() {
        let p = fig1a();
        // Caps small enough that the oscillation guard, not the tolerance,
        // controls the grid; quartering the cap should then cut the
        // second-order re-substitution residual by about 16x.
        let mut res = Vec::new();
        for cap in [0.008, 0.002] {
            let prof = integrate_profile_with(
                &p,
                20.0,
                IntegrateOptions {
                    step_cap_coeff: cap,
                    ..Default::default()
                },
            )
            .unwrap();
            res.push(resubstitution_max(&prof, 5.0, 20.0));
        }
        let ratio = res[0] / res[1];
        assert!(
            ratio > 8.0 && res[1] < 1e-3,
            "residuals {res:?} ratio {ratio} not second order"
        );
    }

    #[test]
    fn sample_interpolates_between_nodes() {
        let p = fig1a();
        let prof = integrate_profile(&p, 20.0, 1e-10).unwrap();
        // Node values are reproduced exactly.
        let mid = prof.rho.len() / 2;
        assert_eq!(prof.sample(prof.rho[mid]).unwrap(), prof.q[mid]);
        // Off-node values agree with a much finer integration.
        let fine = integrate_profile_with(
            &p,
            20.0,
            IntegrateOptions {
                tol: 1e-12,
                step_cap_coeff: 0.02,
                ..Default::default()
            },
        )
        .unwrap();
        for &r in &[3.15, 7.77, 12.5, 19.9] {
            let coarse = prof.sample(r).unwrap();
            let reference = fine.sample(r).unwrap();
            assert!(
                (coarse - reference).norm() < 1e-7,
                "interpolation at rho = {r}: {:e}",
                (coarse - reference).norm()
            );
        }
        // Below the series start the Taylor expansion applies.
        assert!((prof.sample(0.0).unwrap() - p.q0).norm() < 1e-15);
        // Beyond the grid is refused.
        assert!(matches!(
            prof.sample(21.0),
            Err(Error::Extrapolation { .. })
        ));
    }
}
