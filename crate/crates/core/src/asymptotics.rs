//! Large-`r` behaviour of global solutions.
//!
//! Every global radial solution approaches the singular pair
//! `(U, V) = (A r^{alpha_u}, B r^{alpha_v})`, whose constants come from the
//! interior rest point of the reduced flow.

use serde::Serialize;

use crate::config::ExponentConfig;
use crate::dynamics::{self, Equilibrium};
use crate::error::{Error, Result};
use crate::radial::{fit_line, RadialTrajectory};

/// `convergence_report` needs the trajectory to reach at least this radius.
pub const MIN_RANGE: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticProfile {
    pub alpha_u: f64,
    pub alpha_v: f64,
    #[serde(rename = "A")]
    pub a_const: f64,
    #[serde(rename = "B")]
    pub b_const: f64,
    pub ln_a: f64,
    pub ln_b: f64,
    pub equilibrium: Equilibrium,
}

/// `(ln A, ln B)` from a rest point `(X, Y, Z, W)`. The exponents scale like
/// `1 / delta`, so the constants themselves leave the double range when
/// `delta` is small.
pub fn ln_constants_from(cfg: &ExponentConfig, x: f64, y: f64, z: f64, w: f64) -> (f64, f64) {
    let (k, km, p, q, s) = (cfg.kf(), cfg.km(), cfg.p, cfg.q, cfg.s);
    let d = cfg.delta();
    let (ly, lz, lw) = (y.ln(), z.ln(), w.ln());
    let la = -(x.ln() + (k * p * ly + (k - s) * lz + p * lw) / d);
    let lb = -(k * km * ly + q * lz + km * lw) / d;
    (la, lb)
}

/// `(A, B)` from a rest point `(X, Y, Z, W)`.
pub fn constants_from(cfg: &ExponentConfig, x: f64, y: f64, z: f64, w: f64) -> (f64, f64) {
    let (la, lb) = ln_constants_from(cfg, x, y, z, w);
    (la.exp(), lb.exp())
}

pub fn profile(cfg: &ExponentConfig) -> Result<AsymptoticProfile> {
    let eq = dynamics::equilibrium(cfg)?;
    let (alpha_u, alpha_v) = cfg.alpha();
    let (ln_a, ln_b) = ln_constants_from(cfg, eq.x_inf, eq.y_inf, eq.z_inf, eq.w_inf);
    Ok(AsymptoticProfile {
        alpha_u,
        alpha_v,
        a_const: ln_a.exp(),
        b_const: ln_b.exp(),
        ln_a,
        ln_b,
        equilibrium: eq,
    })
}

/// Largest relative residual of `(A r^{alpha_u}, B r^{alpha_v})` in the two
/// radial equations over `r_grid`, given `ln A` and `ln B`. Both sides are
/// compared in logarithms.
pub fn singular_residual_ln(
    cfg: &ExponentConfig,
    ln_a: f64,
    ln_b: f64,
    r_grid: &[f64],
) -> Result<f64> {
    let (n, k, m, p, q, s) = (cfg.nf(), cfg.kf(), cfg.m, cfg.p, cfg.q, cfg.s);
    let (al, be) = cfg.alpha();
    let (f1, f2) = (n - 2.0 * k + k * al, n - 2.0 * k + k * be);
    if !(al > 0.0 && be > 0.0 && f1 > 0.0 && f2 > 0.0 && ln_a.is_finite() && ln_b.is_finite()) {
        return Err(Error::Precondition(
            "power-law pair is not increasing".into(),
        ));
    }
    // ln(A alpha_u), ln(B alpha_v)
    let (lca, lcb) = (ln_a + al.ln(), ln_b + be.ln());
    let mut worst = 0.0f64;
    for &r in r_grid {
        if r.is_nan() || r <= 0.0 {
            return Err(Error::Precondition(format!("radius {r} must be positive")));
        }
        let lr = r.ln();
        // r^{1-N} [r^{N-k} (U')^k]' = (A al)^k (N - 2k + k al) r^{k al - 2k}
        let lhs1 = k * lca + f1.ln() + (k * al - 2.0 * k) * lr;
        let rhs1 = m * (lca + (al - 1.0) * lr) + p * (ln_b + be * lr);
        let lhs2 = k * lcb + f2.ln() + (k * be - 2.0 * k) * lr;
        let rhs2 = q * (lca + (al - 1.0) * lr) + s * (ln_b + be * lr);
        worst = worst
            .max((lhs1 - rhs1).exp_m1().abs())
            .max((lhs2 - rhs2).exp_m1().abs());
    }
    Ok(worst)
}

/// [`singular_residual_ln`] for explicit constants `A`, `B`.
pub fn singular_residual_with(
    cfg: &ExponentConfig,
    a_const: f64,
    b_const: f64,
    r_grid: &[f64],
) -> Result<f64> {
    singular_residual_ln(cfg, a_const.ln(), b_const.ln(), r_grid)
}

/// Residual of the singular pair at the constants of [`profile`].
pub fn singular_residual(cfg: &ExponentConfig, r_grid: &[f64]) -> Result<f64> {
    let pr = profile(cfg)?;
    singular_residual_ln(cfg, pr.ln_a, pr.ln_b, r_grid)
}

/// Log-log slopes of `u` and `v` over the samples in `[r_end / 10, r_end]`.
pub fn decade_slopes(traj: &RadialTrajectory, r_end: f64) -> Option<(f64, f64)> {
    let win: Vec<_> = traj
        .samples
        .iter()
        .filter(|s| s.r >= 0.1 * r_end && s.r <= r_end)
        .collect();
    if win.len() < 3 {
        return None;
    }
    let lr: Vec<f64> = win.iter().map(|s| s.r.ln()).collect();
    let lu: Vec<f64> = win.iter().map(|s| s.u.ln()).collect();
    let lv: Vec<f64> = win.iter().map(|s| s.v.ln()).collect();
    Some((fit_line(&lr, &lu).1, fit_line(&lr, &lv).1))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub profile: AsymptoticProfile,
    pub r_end: f64,
    /// `(r, u / r^{alpha_u}, v / r^{alpha_v})` over the last decade.
    pub ratios: Vec<[f64; 3]>,
    pub slope_u: f64,
    pub slope_v: f64,
    pub slope_u_deviation: f64,
    pub slope_v_deviation: f64,
    pub u_ratio: f64,
    pub v_ratio: f64,
    /// `|u_ratio / A - 1|`
    pub a_deviation: f64,
    /// `|v_ratio / B - 1|`
    pub b_deviation: f64,
    /// Euclidean distance from the dyn image of the last sample to `(Y, Z, W)_inf`.
    pub equilibrium_distance: f64,
}

pub fn convergence_report(
    cfg: &ExponentConfig,
    traj: &RadialTrajectory,
) -> Result<ConvergenceReport> {
    let pr = profile(cfg)?;
    let last = *traj.last();
    if last.r < MIN_RANGE {
        return Err(Error::InsufficientRange {
            r_max: last.r,
            required: MIN_RANGE,
        });
    }
    let (al, be) = (pr.alpha_u, pr.alpha_v);
    let ratios: Vec<[f64; 3]> = traj
        .samples
        .iter()
        .filter(|s| s.r >= 0.1 * last.r)
        .map(|s| [s.r, s.u / s.r.powf(al), s.v / s.r.powf(be)])
        .collect();
    let (slope_u, slope_v) = decade_slopes(traj, last.r).ok_or(Error::InsufficientRange {
        r_max: last.r,
        required: MIN_RANGE,
    })?;
    let end = ratios[ratios.len() - 1];
    let d = dynamics::to_dyn(cfg, &last)?;
    let eq = pr.equilibrium;
    let equilibrium_distance =
        ((d.y - eq.y_inf).powi(2) + (d.z - eq.z_inf).powi(2) + (d.w - eq.w_inf).powi(2)).sqrt();
    Ok(ConvergenceReport {
        r_end: last.r,
        slope_u,
        slope_v,
        slope_u_deviation: (slope_u - al).abs(),
        slope_v_deviation: (slope_v - be).abs(),
        u_ratio: end[1],
        v_ratio: end[2],
        a_deviation: (end[1] / pr.a_const - 1.0).abs(),
        b_deviation: (end[2] / pr.b_const - 1.0).abs(),
        equilibrium_distance,
        ratios,
        profile: pr,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::validate;
    use crate::radial::{integrate, IntegrateOptions};

    fn reference() -> ExponentConfig {
        validate(5.0, 2.0, 0.0, 1.0, 1.0, 0.0).unwrap()
    }

    #[test]
    fn reference_profile() {
        let pr = profile(&reference()).unwrap();
        assert!((pr.alpha_u - 11.0 / 3.0).abs() < 1e-14);
        assert!((pr.alpha_v - 10.0 / 3.0).abs() < 1e-14);
        assert!((pr.a_const - 1.508e-2).abs() < 5e-5, "{}", pr.a_const);
        assert!(pr.b_const > 0.0 && pr.b_const.is_finite());
    }

    #[test]
    fn constants_agree_with_linear_solve_equilibrium() {
        let cfg = validate(4.0, 3.0, 0.5, 1.2, 0.7, 0.3).unwrap();
        let pr = profile(&cfg).unwrap();
        let [y, z, w] = dynamics::equilibrium_linear_solve(&cfg).unwrap();
        let x = z / cfg.kf() + (2.0 * cfg.kf() - cfg.nf()) / cfg.kf();
        let (a, b) = constants_from(&cfg, x, y, z, w);
        assert!((a / pr.a_const - 1.0).abs() < 1e-12);
        assert!((b / pr.b_const - 1.0).abs() < 1e-12);
    }

    #[test]
    fn singular_pair_solves_the_system() {
        let cfg = reference();
        assert!(singular_residual(&cfg, &[0.1, 1.0, 10.0, 100.0]).unwrap() <= 1e-9);
        let pr = profile(&cfg).unwrap();
        let bad = singular_residual_with(&cfg, 1.01 * pr.a_const, pr.b_const, &[1.0]).unwrap();
        assert!(bad > 1e-3);
    }

    #[test]
    fn residual_is_scale_invariant() {
        let cfg = validate(3.0, 1.0, 0.25, 0.5, 0.5, 0.1).unwrap();
        let pr = profile(&cfg).unwrap();
        let (a, b) = (1.003 * pr.a_const, pr.b_const);
        let r1 = singular_residual_with(&cfg, a, b, &[0.7]).unwrap();
        let r2 = singular_residual_with(&cfg, a, b, &[7.0]).unwrap();
        assert!((r1 - r2).abs() < 1e-12);
    }

    #[test]
    fn short_trajectory_is_rejected() {
        let cfg = reference();
        let t = integrate(&cfg, 1.0, 1.0, 10.0, &IntegrateOptions::default()).unwrap();
        assert!(matches!(
            convergence_report(&cfg, &t),
            Err(Error::InsufficientRange { .. })
        ));
    }
}
