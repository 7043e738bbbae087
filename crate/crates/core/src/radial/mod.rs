//! Direct integration of the radial initial value problem from `(u(0), v(0)) = (a, b)`.
//!
//! The stepped variables are the two momenta
//!
//! ```text
//! P = r^L (u')^{k-m},   P' = (k-m)/k r^{k+L-1} v^p
//! Q = r^{N-k} (v')^k,   Q' = r^{N-1} (u')^q v^s
//! ```
//!
//! together with `u` and `v`. Neither momentum equation carries a `1/r` term,
//! so the only singular behaviour left at the origin is the power-law onset
//! handled by [`startup`].

mod blowup;
mod estimates;
mod integrate;
mod scaling;

pub(crate) use blowup::fit_line;
pub use blowup::{estimate_blowup_rate, BlowupReport};
pub use estimates::{check_estimates, EstimateKind, Violation};
pub use integrate::{integrate, IntegrateOptions, RadialTrajectory, Terminal};
pub use scaling::{scale_solution, scaling_residual};

use serde::Serialize;

use crate::config::ExponentConfig;
use crate::error::{Error, Result};

/// One sample of a radial solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RadialState {
    pub r: f64,
    pub u: f64,
    pub du: f64,
    pub v: f64,
    pub dv: f64,
    /// `r^L (u')^{k-m}`
    #[serde(rename = "P")]
    pub p_mom: f64,
    /// `r^{N-k} (v')^k`
    #[serde(rename = "Q")]
    pub q_mom: f64,
}

/// Derivatives of the stepped variables `(P, Q, u, v)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rhs {
    pub dp: f64,
    pub dq: f64,
    pub du: f64,
    pub dv: f64,
}

pub(crate) fn require_solutions(cfg: &ExponentConfig) -> Result<f64> {
    cfg.l().ok_or_else(|| {
        Error::Precondition(format!(
            "k = {} <= m = {}: no non-constant radial solutions exist",
            cfg.k, cfg.m
        ))
    })
}

/// Fractional power of a quantity that is positive on exact trajectories.
/// Negative round-off is clamped to zero and counted.
#[inline]
pub(crate) fn guarded_pow(base: f64, exp: f64, clamps: &mut usize) -> f64 {
    if base < 0.0 {
        *clamps += 1;
        0.0
    } else {
        base.powf(exp)
    }
}

impl RadialState {
    /// Rebuilds the full state from the stepped variables.
    pub(crate) fn from_stepped(
        cfg: &ExponentConfig,
        l: f64,
        r: f64,
        y: &[f64; 4],
        clamps: &mut usize,
    ) -> Self {
        let du = guarded_pow(y[0] * r.powf(-l), 1.0 / cfg.km(), clamps);
        let dv = guarded_pow(y[1] * r.powf(cfg.kf() - cfg.nf()), 1.0 / cfg.kf(), clamps);
        RadialState {
            r,
            u: y[2],
            du,
            v: y[3],
            dv,
            p_mom: y[0],
            q_mom: y[1],
        }
    }

    pub(crate) fn stepped(&self) -> [f64; 4] {
        [self.p_mom, self.q_mom, self.u, self.v]
    }

    /// `Psi = (u')^{k-m}`.
    pub fn psi(&self, cfg: &ExponentConfig) -> f64 {
        self.du.powf(cfg.km())
    }

    /// `Psi'` from the first equation in non-conservative form.
    pub fn dpsi(&self, cfg: &ExponentConfig) -> f64 {
        let (n, k) = (cfg.nf(), cfg.kf());
        cfg.km() / k
            * (self.r.powf(k - 1.0) * self.v.powf(cfg.p) - (n - k) * self.psi(cfg) / self.r)
    }

    /// `u''` recovered from the first equation.
    pub fn d2u(&self, cfg: &ExponentConfig) -> f64 {
        let (n, k) = (cfg.nf(), cfg.kf());
        let r = self.r;
        (r.powf(k) * self.du.powf(cfg.m - k + 1.0) * self.v.powf(cfg.p) - (n - k) * self.du)
            / (k * r)
    }

    /// `v''` recovered from the second equation.
    pub fn d2v(&self, cfg: &ExponentConfig) -> f64 {
        let (n, k) = (cfg.nf(), cfg.kf());
        let r = self.r;
        (r.powf(k) * self.du.powf(cfg.q) * self.v.powf(cfg.s) * self.dv.powf(1.0 - k)
            - (n - k) * self.dv)
            / (k * r)
    }
}

pub(crate) fn stepped_rhs(
    cfg: &ExponentConfig,
    l: f64,
    r: f64,
    y: &[f64; 4],
    clamps: &mut usize,
) -> [f64; 4] {
    let (n, k) = (cfg.nf(), cfg.kf());
    let v = guarded_pow(y[3], 1.0, clamps);
    let du = guarded_pow(y[0] * r.powf(-l), 1.0 / cfg.km(), clamps);
    let dv = guarded_pow(y[1] * r.powf(k - n), 1.0 / k, clamps);
    [
        cfg.km() / k * r.powf(k + l - 1.0) * v.powf(cfg.p),
        r.powf(n - 1.0) * du.powf(cfg.q) * v.powf(cfg.s),
        du,
        dv,
    ]
}

/// Right-hand side of the momentum system at a state.
pub fn rhs(cfg: &ExponentConfig, state: &RadialState) -> Result<Rhs> {
    let l = require_solutions(cfg)?;
    let mut clamps = 0;
    let d = stepped_rhs(cfg, l, state.r, &state.stepped(), &mut clamps);
    Ok(Rhs {
        dp: d[0],
        dq: d[1],
        du: d[2],
        dv: d[3],
    })
}

/// Default startup radius for initial values `(a, b)`.
pub fn default_r0(a: f64, b: f64) -> f64 {
    1e-6 * 1f64.max(a).max(b)
}

/// Leading-order state at a small radius `r0`.
///
/// With `v ~ b` near the origin the first momentum integrates to
/// `u' = C_u r^{k/(k-m)}`, `C_u = [(k-m) b^p / (k (k+L))]^{1/(k-m)}`; feeding that
/// into the second momentum gives `v' = C_v r^{1 + q/(k-m)}`.
pub fn startup(cfg: &ExponentConfig, a: f64, b: f64, r0: f64) -> Result<RadialState> {
    let l = require_solutions(cfg)?;
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::Precondition(
            "initial values a, b must be positive".into(),
        ));
    }
    if !(r0 > 0.0 && r0.is_finite()) {
        return Err(Error::Precondition(
            "startup radius must be positive".into(),
        ));
    }
    let (n, k, km) = (cfg.nf(), cfg.kf(), cfg.km());
    let (p, q, s) = (cfg.p, cfg.q, cfg.s);

    let eu = k / km;
    let cu = (km * b.powf(p) / (k * (k + l))).powf(1.0 / km);
    let du = cu * r0.powf(eu);

    // Q = b^s C_u^q r^{N + qk/(k-m)} / (N + qk/(k-m))
    let qe = n + q * eu;
    let cq = b.powf(s) * cu.powf(q) / qe;
    let ev = (qe - n + k) / k;
    let cv = cq.powf(1.0 / k);
    let dv = cv * r0.powf(ev);

    let u = a + cu * r0.powf(eu + 1.0) / (eu + 1.0);
    let v = b + cv * r0.powf(ev + 1.0) / (ev + 1.0);
    Ok(RadialState {
        r: r0,
        u,
        du,
        v,
        dv,
        p_mom: r0.powf(l) * du.powf(km),
        q_mom: r0.powf(n - k) * dv.powf(k),
    })
}
