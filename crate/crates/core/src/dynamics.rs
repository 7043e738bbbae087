//! Autonomous reduction in `t = ln r`.
//!
//! ```text
//! X = r u' / u     Y = r v' / v     Z = r^k v^p / (u')^{k-m}     W = r^k v^s (u')^q / (v')^k
//!
//! X_t = X ((2k-N)/k - X + Z/k)
//! Y_t = Y ((2k-N)/k - Y + W/k)
//! Z_t = Z ((kN - m(N-k))/k - (k-m)/k Z + p Y)
//! W_t = W ((kN - q(N-k))/k + s Y + q/k Z - W)
//! ```
//!
//! The `(Y, Z, W)` block is closed and cooperative; `X` is driven by `Z` alone.

use nalgebra::{Matrix3, Vector3};
use serde::Serialize;

use crate::config::ExponentConfig;
use crate::error::{Error, Result};
use crate::ode::{self, Control, StepperOptions, Tolerances};
use crate::radial::{RadialState, RadialTrajectory};

/// Flow integration stops once a component exceeds this.
pub const FLOW_CAP: f64 = 1e9;
/// Real parts must be below `-STABILITY_MARGIN` to count as stable.
pub const STABILITY_MARGIN: f64 = 1e-10;
const L2C_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DynState {
    pub t: f64,
    #[serde(rename = "X")]
    pub x: f64,
    #[serde(rename = "Y")]
    pub y: f64,
    #[serde(rename = "Z")]
    pub z: f64,
    #[serde(rename = "W")]
    pub w: f64,
}

impl DynState {
    pub fn yzw(&self) -> [f64; 3] {
        [self.y, self.z, self.w]
    }
}

fn require_global(cfg: &ExponentConfig) -> Result<()> {
    if !cfg.has_solutions() {
        return Err(Error::Precondition(format!(
            "k = {} <= m = {}",
            cfg.k, cfg.m
        )));
    }
    if cfg.delta() <= 0.0 {
        return Err(Error::Precondition(format!(
            "delta = {} <= 0: no positive interior equilibrium",
            cfg.delta()
        )));
    }
    Ok(())
}

/// Image of a radial state under the change of variables.
pub fn to_dyn(cfg: &ExponentConfig, st: &RadialState) -> Result<DynState> {
    let (r, u, du, v, dv) = (st.r, st.u, st.du, st.v, st.dv);
    let k = cfg.kf();
    for (name, x) in [("r", r), ("u", u), ("u'", du), ("v", v), ("v'", dv)] {
        if !(x > 0.0 && x.is_finite()) {
            return Err(Error::DegenerateState(format!(
                "{name} = {x} must be positive"
            )));
        }
    }
    let rk = r.powf(k);
    Ok(DynState {
        t: r.ln(),
        x: r * du / u,
        y: r * dv / v,
        z: rk * v.powf(cfg.p) / du.powf(cfg.km()),
        w: rk * v.powf(cfg.s) * du.powf(cfg.q) / dv.powf(k),
    })
}

/// Dyn image of every sample of a radial trajectory.
pub fn dyn_image(cfg: &ExponentConfig, traj: &RadialTrajectory) -> Result<Vec<DynState>> {
    traj.samples.iter().map(|s| to_dyn(cfg, s)).collect()
}

fn constants(cfg: &ExponentConfig) -> (f64, f64, f64) {
    let (n, k, m, q) = (cfg.nf(), cfg.kf(), cfg.m, cfg.q);
    (
        (2.0 * k - n) / k,
        (k * n - m * (n - k)) / k,
        (k * n - q * (n - k)) / k,
    )
}

/// `(Y_t, Z_t, W_t)`.
pub fn yzw_field(cfg: &ExponentConfig, y: f64, z: f64, w: f64) -> [f64; 3] {
    let (c1, c2, c3) = constants(cfg);
    let (k, km) = (cfg.kf(), cfg.km());
    [
        y * (c1 - y + w / k),
        z * (c2 - km / k * z + cfg.p * y),
        w * (c3 + cfg.s * y + cfg.q / k * z - w),
    ]
}

/// `(X_t, Y_t, Z_t, W_t)`.
pub fn vector_field(cfg: &ExponentConfig, st: &DynState) -> [f64; 4] {
    let (c1, ..) = constants(cfg);
    let [dy, dz, dw] = yzw_field(cfg, st.y, st.z, st.w);
    [st.x * (c1 - st.x + st.z / cfg.kf()), dy, dz, dw]
}

/// Jacobian of the `(Y, Z, W)` field.
pub fn jacobian(cfg: &ExponentConfig, y: f64, z: f64, w: f64) -> Matrix3<f64> {
    let (c1, c2, c3) = constants(cfg);
    let (k, km, p, q, s) = (cfg.kf(), cfg.km(), cfg.p, cfg.q, cfg.s);
    Matrix3::new(
        c1 - 2.0 * y + w / k,
        0.0,
        y / k,
        p * z,
        c2 - 2.0 * km / k * z + p * y,
        0.0,
        s * w,
        q / k * w,
        c3 + s * y + q / k * z - 2.0 * w,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Equilibrium {
    #[serde(rename = "X_inf")]
    pub x_inf: f64,
    #[serde(rename = "Y_inf")]
    pub y_inf: f64,
    #[serde(rename = "Z_inf")]
    pub z_inf: f64,
    #[serde(rename = "W_inf")]
    pub w_inf: f64,
    /// Largest absolute residual of the closed form in the linear equilibrium system.
    pub linear_residual: f64,
    /// Largest relative gap between the closed form and a numerical linear solve.
    pub solve_mismatch: f64,
}

/// The linear system satisfied by an interior rest point of the `(Y, Z, W)` field.
fn equilibrium_system(cfg: &ExponentConfig) -> (Matrix3<f64>, Vector3<f64>) {
    let (c1, c2, c3) = constants(cfg);
    let (k, km) = (cfg.kf(), cfg.km());
    let a = Matrix3::new(
        -1.0,
        0.0,
        1.0 / k,
        cfg.p,
        -km / k,
        0.0,
        cfg.s,
        cfg.q / k,
        -1.0,
    );
    (a, Vector3::new(-c1, -c2, -c3))
}

/// Solves the interior equilibrium system numerically.
pub fn equilibrium_linear_solve(cfg: &ExponentConfig) -> Result<[f64; 3]> {
    let (a, rhs) = equilibrium_system(cfg);
    let x = a
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Precondition("singular equilibrium system".into()))?;
    Ok([x[0], x[1], x[2]])
}

/// Interior rest point in closed form, cross-checked against a linear solve.
pub fn equilibrium(cfg: &ExponentConfig) -> Result<Equilibrium> {
    require_global(cfg)?;
    let (n, k, km) = (cfg.nf(), cfg.kf(), cfg.km());
    let y = (k * cfg.q + 2.0 * k * km) / cfg.delta();
    let z = k * cfg.p / km * y + n + k * cfg.m / km;
    let w = k * y + n - 2.0 * k;
    let x = z / k + (2.0 * k - n) / k;

    let (a, rhs) = equilibrium_system(cfg);
    let res = a * Vector3::new(y, z, w) - rhs;
    let solved = equilibrium_linear_solve(cfg)?;
    let solve_mismatch = [y, z, w]
        .iter()
        .zip(&solved)
        .map(|(c, s)| (c - s).abs() / c.abs().max(1.0))
        .fold(0.0, f64::max);
    Ok(Equilibrium {
        x_inf: x,
        y_inf: y,
        z_inf: z,
        w_inf: w,
        linear_residual: res.amax(),
        solve_mismatch,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryEquilibrium {
    pub name: &'static str,
    #[serde(rename = "Y")]
    pub y: f64,
    #[serde(rename = "Z")]
    pub z: f64,
    #[serde(rename = "W")]
    pub w: f64,
    /// All components non-negative.
    pub admissible: bool,
}

/// Rest points of the `(Y, Z, W)` field on the boundary of the octant.
pub fn boundary_equilibria(cfg: &ExponentConfig) -> Result<Vec<BoundaryEquilibrium>> {
    if !cfg.has_solutions() {
        return Err(Error::Precondition(format!(
            "k = {} <= m = {}",
            cfg.k, cfg.m
        )));
    }
    let (n, k, km, m, p, q) = (cfg.nf(), cfg.kf(), cfg.km(), cfg.m, cfg.p, cfg.q);
    let z0 = n + k * m / km;
    let pts = [
        ("zeta1", 0.0, z0, 0.0),
        ("zeta2", 0.0, z0, n + q * k / km),
        (
            "zeta3",
            (2.0 * k - n) / k,
            n + (m * k + p * (2.0 * k - n)) / km,
            0.0,
        ),
    ];
    Ok(pts
        .into_iter()
        .map(|(name, y, z, w)| BoundaryEquilibrium {
            name,
            y,
            z,
            w,
            admissible: y >= 0.0 && z >= 0.0 && w >= 0.0,
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    /// `det(lambda I - M) = lambda^3 + a lambda^2 + b lambda + c`
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// `[re, im]` pairs, sorted by real part.
    pub eigenvalues: Vec<[f64; 2]>,
    pub max_real_part: f64,
    pub stable: bool,
    pub ab_gt_9c: bool,
    /// `a > 0`, `c > 0` and `ab > c`.
    pub routh_hurwitz: bool,
    /// Relative gap between the closed-form coefficients and the ones read
    /// off the assembled matrix.
    pub coefficient_mismatch: f64,
    /// Gap between companion-matrix roots and eigenvalues of the matrix itself.
    pub eigen_mismatch: f64,
}

/// Linearization at the interior equilibrium.
pub fn linearization(cfg: &ExponentConfig, eq: &Equilibrium) -> Matrix3<f64> {
    let (k, km) = (cfg.kf(), cfg.km());
    let (y, z, w) = (eq.y_inf, eq.z_inf, eq.w_inf);
    Matrix3::new(
        -y,
        0.0,
        y / k,
        cfg.p * z,
        -km / k * z,
        0.0,
        cfg.s * w,
        cfg.q / k * w,
        -w,
    )
}

/// Characteristic coefficients of a 3x3 matrix by cofactor expansion.
pub fn char_poly(m: &Matrix3<f64>) -> [f64; 3] {
    let minor = |i: usize, j: usize| m[(i, i)] * m[(j, j)] - m[(i, j)] * m[(j, i)];
    let det = m[(0, 0)] * (m[(1, 1)] * m[(2, 2)] - m[(1, 2)] * m[(2, 1)])
        - m[(0, 1)] * (m[(1, 0)] * m[(2, 2)] - m[(1, 2)] * m[(2, 0)])
        + m[(0, 2)] * (m[(1, 0)] * m[(2, 1)] - m[(1, 1)] * m[(2, 0)]);
    [-m.trace(), minor(0, 1) + minor(0, 2) + minor(1, 2), -det]
}

fn sorted_eigs(m: &Matrix3<f64>) -> Vec<[f64; 2]> {
    let mut e: Vec<[f64; 2]> = m
        .complex_eigenvalues()
        .iter()
        .map(|z| [z.re, z.im])
        .collect();
    e.sort_by(|x, y| x[0].total_cmp(&y[0]).then(x[1].total_cmp(&y[1])));
    e
}

pub fn stability(cfg: &ExponentConfig) -> Result<StabilityReport> {
    let eq = equilibrium(cfg)?;
    let (k, km, s) = (cfg.kf(), cfg.km(), cfg.s);
    let (y, z, w) = (eq.y_inf, eq.z_inf, eq.w_inf);
    let a = y + km / k * z + w;
    let b = km / k * y * z + (k - s) / k * y * w + km / k * z * w;
    let c = cfg.delta() / (k * k) * y * z * w;

    let mat = linearization(cfg, &eq);
    let cp = char_poly(&mat);
    let coefficient_mismatch = [a, b, c]
        .iter()
        .zip(&cp)
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()))
        .fold(0.0, f64::max);

    let companion = Matrix3::new(-a, -b, -c, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0);
    let eigenvalues = sorted_eigs(&companion);
    let direct = sorted_eigs(&mat);
    let scale = eigenvalues
        .iter()
        .map(|e| e[0].hypot(e[1]))
        .fold(1.0, f64::max);
    let eigen_mismatch = eigenvalues
        .iter()
        .zip(&direct)
        .map(|(x, y)| (x[0] - y[0]).hypot(x[1] - y[1]) / scale)
        .fold(0.0, f64::max);
    let max_real_part = eigenvalues
        .iter()
        .map(|e| e[0])
        .fold(f64::NEG_INFINITY, f64::max);

    Ok(StabilityReport {
        a,
        b,
        c,
        max_real_part,
        stable: max_real_part < -STABILITY_MARGIN,
        ab_gt_9c: a * b > 9.0 * c,
        routh_hurwitz: a > 0.0 && c > 0.0 && a * b > c,
        coefficient_mismatch,
        eigen_mismatch,
        eigenvalues,
    })
}

fn flow_run(
    cfg: &ExponentConfig,
    start: &DynState,
    times: &[f64],
    tol: f64,
    keep_all: bool,
) -> Vec<DynState> {
    let opts = StepperOptions {
        tol: Tolerances {
            rtol: tol,
            atol: [tol; 4],
        },
        h_init: 1e-3,
        min_step_rel: 1e-15,
        max_steps: 10_000_000,
    };
    let mut out = vec![*start];
    let y0 = [start.x, start.y, start.z, start.w];
    let field = |_t: f64, s: &[f64; 4]| {
        vector_field(
            cfg,
            &DynState {
                t: 0.0,
                x: s[0],
                y: s[1],
                z: s[2],
                w: s[3],
            },
        )
    };
    ode::integrate(field, start.t, y0, times, &opts, |t, s, cp| {
        if keep_all || cp {
            out.push(DynState {
                t,
                x: s[0],
                y: s[1],
                z: s[2],
                w: s[3],
            });
        }
        if s.iter().any(|v| v.abs() > FLOW_CAP) {
            Control::Stop
        } else {
            Control::Continue
        }
    });
    out
}

/// Integrates the field from `start` up to time `t_end`, returning every
/// accepted step. Stops early when a component leaves `[-FLOW_CAP, FLOW_CAP]`.
pub fn flow_integrate(
    cfg: &ExponentConfig,
    start: &DynState,
    t_end: f64,
    tol: f64,
) -> Vec<DynState> {
    flow_run(cfg, start, &[t_end], tol, true)
}

/// Like [`flow_integrate`] but records the state only at the given times.
pub fn flow_on_grid(
    cfg: &ExponentConfig,
    start: &DynState,
    times: &[f64],
    tol: f64,
) -> Vec<DynState> {
    flow_run(cfg, start, times, tol, false)
}

/// A start point `(X, s Y_inf, Z_inf, W_inf)` with `X` taken from its rest relation.
pub fn scaled_start(eq: &Equilibrium, scale: f64) -> DynState {
    DynState {
        t: 0.0,
        x: eq.x_inf,
        y: scale * eq.y_inf,
        z: eq.z_inf,
        w: eq.w_inf,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CooperativityReport {
    pub cooperative: bool,
    pub irreducible: bool,
    /// Smallest off-diagonal Jacobian entry over all samples.
    pub min_off_diagonal: f64,
}

/// Sign check of the off-diagonal Jacobian entries over `(Y, Z, W)` samples.
///
/// Irreducibility is structural: the cycle `Y -> Z -> W -> Y` carries the
/// weights `p Z`, `q W / k` and `Y / k`, which are positive in the open
/// octant exactly when `p > 0` and `q > 0`.
pub fn cooperativity_check(cfg: &ExponentConfig, samples: &[[f64; 3]]) -> CooperativityReport {
    let mut min_off = f64::INFINITY;
    for &[y, z, w] in samples {
        let j = jacobian(cfg, y, z, w);
        for r in 0..3 {
            for c in 0..3 {
                if r != c {
                    min_off = min_off.min(j[(r, c)]);
                }
            }
        }
    }
    // Edge i -> j when g_j depends on x_i; weights are the structural coefficients.
    let (k, p, q, s) = (cfg.kf(), cfg.p, cfg.q, cfg.s);
    let edge = [[0.0, p, s], [0.0, 0.0, q / k], [1.0 / k, 0.0, 0.0]];
    CooperativityReport {
        cooperative: min_off >= 0.0 || samples.is_empty(),
        irreducible: strongly_connected(&edge),
        min_off_diagonal: min_off,
    }
}

fn strongly_connected(edge: &[[f64; 3]; 3]) -> bool {
    let reach = |from: usize, forward: bool| {
        let mut seen = [false; 3];
        let mut stack = vec![from];
        seen[from] = true;
        while let Some(i) = stack.pop() {
            for j in 0..3 {
                let w = if forward { edge[i][j] } else { edge[j][i] };
                if w > 0.0 && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen.iter().all(|&b| b)
    };
    reach(0, true) && reach(0, false)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BoundKind {
    YLower,
    YUpper,
    ZLower,
    ZUpper,
    WLower,
    WUpper,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundViolation {
    pub kind: BoundKind,
    pub index: usize,
    pub t: f64,
    pub value: f64,
    pub bound: f64,
}

/// Two-sided bounds `0 < Y < Y_inf`, `N + km/(k-m) < Z < Z_inf`, `N < W < W_inf`
/// along the image of a global solution.
pub fn lemma_l2c_check(cfg: &ExponentConfig, traj: &[DynState]) -> Result<Vec<BoundViolation>> {
    let eq = equilibrium(cfg)?;
    let n = cfg.nf();
    let z_lo = n + cfg.kf() * cfg.m / cfg.km();
    let mut out = Vec::new();
    let tol = |b: f64| L2C_SLACK * b.abs().max(1.0);
    for (i, st) in traj.iter().enumerate() {
        let checks = [
            (BoundKind::YLower, st.y, 0.0, false),
            (BoundKind::YUpper, st.y, eq.y_inf, true),
            (BoundKind::ZLower, st.z, z_lo, false),
            (BoundKind::ZUpper, st.z, eq.z_inf, true),
            (BoundKind::WLower, st.w, n, false),
            (BoundKind::WUpper, st.w, eq.w_inf, true),
        ];
        for (kind, value, bound, upper) in checks {
            let bad = if upper {
                value >= bound + tol(bound)
            } else {
                value <= bound - tol(bound)
            };
            if bad || !value.is_finite() {
                out.push(BoundViolation {
                    kind,
                    index: i,
                    t: st.t,
                    value,
                    bound,
                });
            }
        }
    }
    Ok(out)
}

/// Both sides of the two algebraic identities linking `(u, v)` to the dyn variables:
///
/// ```text
/// u^delta / r^{delta + k(k-s+2p)} = 1 / (X^delta Y^{kp} Z^{k-s} W^p)
/// v^delta / r^{k(2k-2m+q)}        = 1 / (Y^{k(k-m)} Z^q W^{k-m})
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentitySides {
    pub u_lhs: f64,
    pub u_rhs: f64,
    pub v_lhs: f64,
    pub v_rhs: f64,
}

pub fn identity_sides(cfg: &ExponentConfig, st: &RadialState) -> Result<IdentitySides> {
    let d = to_dyn(cfg, st)?;
    let (k, km, p, q, s, m) = (cfg.kf(), cfg.km(), cfg.p, cfg.q, cfg.s, cfg.m);
    let delta = cfg.delta();
    Ok(IdentitySides {
        u_lhs: st.u.powf(delta) / st.r.powf(delta + k * (k - s + 2.0 * p)),
        u_rhs: 1.0 / (d.x.powf(delta) * d.y.powf(k * p) * d.z.powf(k - s) * d.w.powf(p)),
        v_lhs: st.v.powf(delta) / st.r.powf(k * (2.0 * k - 2.0 * m + q)),
        v_rhs: 1.0 / (d.y.powf(k * km) * d.z.powf(q) * d.w.powf(km)),
    })
}

/// Relative defects of the two identities, evaluated in logarithms so that
/// extreme states do not overflow.
pub fn identity_defects(cfg: &ExponentConfig, st: &RadialState) -> Result<(f64, f64)> {
    let d = to_dyn(cfg, st)?;
    let (k, km, p, q, s, m) = (cfg.kf(), cfg.km(), cfg.p, cfg.q, cfg.s, cfg.m);
    let delta = cfg.delta();
    let lr = st.r.ln();
    let (lx, ly, lz, lw) = (d.x.ln(), d.y.ln(), d.z.ln(), d.w.ln());
    let eu = delta * st.u.ln() - (delta + k * (k - s + 2.0 * p)) * lr
        + delta * lx
        + k * p * ly
        + (k - s) * lz
        + p * lw;
    let ev = delta * st.v.ln() - k * (2.0 * k - 2.0 * m + q) * lr + k * km * ly + q * lz + km * lw;
    Ok((eu.exp_m1().abs(), ev.exp_m1().abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::validate;

    fn reference() -> ExponentConfig {
        validate(5.0, 2.0, 0.0, 1.0, 1.0, 0.0).unwrap()
    }

    fn worked_state() -> RadialState {
        RadialState {
            r: 2.0,
            u: 3.0,
            du: 5.0,
            v: 7.0,
            dv: 11.0,
            p_mom: 0.0,
            q_mom: 0.0,
        }
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1e-300)
    }

    #[test]
    fn to_dyn_worked_state() {
        let d = to_dyn(&reference(), &worked_state()).unwrap();
        assert!(close(d.x, 10.0 / 3.0, 1e-15));
        assert!(close(d.y, 22.0 / 7.0, 1e-15));
        assert!(close(d.z, 28.0 / 25.0, 1e-15));
        assert!(close(d.w, 20.0 / 121.0, 1e-15));
        assert_eq!(d.t, 2f64.ln());
    }

    #[test]
    fn to_dyn_rejects_zero_derivative() {
        let st = RadialState {
            du: 0.0,
            ..worked_state()
        };
        assert!(matches!(
            to_dyn(&reference(), &st),
            Err(Error::DegenerateState(_))
        ));
    }

    #[test]
    fn power_law_state_gives_exponents() {
        let (r, al, be) = (1.7f64, 2.5, 1.25);
        let st = RadialState {
            r,
            u: r.powf(al),
            du: al * r.powf(al - 1.0),
            v: r.powf(be),
            dv: be * r.powf(be - 1.0),
            p_mom: 0.0,
            q_mom: 0.0,
        };
        let d = to_dyn(&reference(), &st).unwrap();
        assert!(close(d.x, al, 1e-14) && close(d.y, be, 1e-14));
    }

    #[test]
    fn identities_on_worked_state() {
        let sides = identity_sides(&reference(), &worked_state()).unwrap();
        assert!(close(sides.u_lhs, 27.0 / 2048.0, 1e-14));
        assert!(close(sides.u_rhs, 27.0 / 2048.0, 1e-13));
        assert!(close(sides.v_lhs, 343.0 / 1024.0, 1e-14));
        assert!(close(sides.v_rhs, 343.0 / 1024.0, 1e-13));
        let (eu, ev) = identity_defects(&reference(), &worked_state()).unwrap();
        assert!(eu < 1e-13 && ev < 1e-13);
    }

    #[test]
    fn vector_field_worked_point() {
        let d = DynState {
            t: 0.0,
            x: 1.0,
            y: 1.0,
            z: 1.0,
            w: 1.0,
        };
        let f = vector_field(&reference(), &d);
        assert!(close(f[1], -1.0, 1e-15));
        assert!(close(f[2], 5.0, 1e-15));
        assert!(close(f[3], 3.0, 1e-15));
    }

    #[test]
    fn reference_equilibrium() {
        let e = equilibrium(&reference()).unwrap();
        assert!(close(e.y_inf, 10.0 / 3.0, 1e-15));
        assert!(close(e.z_inf, 25.0 / 3.0, 1e-15));
        assert!(close(e.w_inf, 23.0 / 3.0, 1e-15));
        assert!(close(e.x_inf, 11.0 / 3.0, 1e-15));
        assert!(e.linear_residual < 1e-12 && e.solve_mismatch < 1e-12);
        let st = DynState {
            t: 0.0,
            x: e.x_inf,
            y: e.y_inf,
            z: e.z_inf,
            w: e.w_inf,
        };
        assert!(vector_field(&reference(), &st)
            .iter()
            .all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn equilibrium_requires_positive_delta() {
        let cfg = validate(3.0, 1.0, 0.0, 2.0, 2.0, 0.0).unwrap();
        assert!(matches!(equilibrium(&cfg), Err(Error::Precondition(_))));
    }

    #[test]
    fn boundary_points_are_rest_points() {
        for cfg in [reference(), validate(3.0, 2.0, 0.0, 1.0, 1.0, 0.0).unwrap()] {
            for z in boundary_equilibria(&cfg).unwrap() {
                let f = yzw_field(&cfg, z.y, z.z, z.w);
                assert!(f.iter().all(|v| v.abs() < 1e-12), "{z:?}");
            }
        }
        let z3 = &boundary_equilibria(&reference()).unwrap()[2];
        assert!(!z3.admissible);
        let z3 = &boundary_equilibria(&validate(3.0, 2.0, 0.0, 1.0, 1.0, 0.0).unwrap()).unwrap()[2];
        assert!(z3.admissible && close(z3.y, 0.5, 1e-15) && close(z3.z, 3.5, 1e-15));
    }

    #[test]
    fn reference_stability() {
        let s = stability(&reference()).unwrap();
        assert!(close(s.a, 58.0 / 3.0, 1e-12));
        assert!(close(s.b, 1055.0 / 9.0, 1e-12));
        assert!(close(s.c, 5750.0 / 36.0, 1e-12));
        assert!(s.stable && s.ab_gt_9c && s.routh_hurwitz);
        assert!(s.coefficient_mismatch < 1e-10 && s.eigen_mismatch < 1e-8);
        assert_eq!(s.eigenvalues.len(), 3);
    }

    #[test]
    fn char_poly_of_diagonal() {
        let m = Matrix3::from_diagonal(&Vector3::new(1.0, 2.0, 3.0));
        assert_eq!(char_poly(&m), [-6.0, 11.0, -6.0]);
    }

    #[test]
    fn flow_from_equilibrium_stays_put() {
        let cfg = reference();
        let e = equilibrium(&cfg).unwrap();
        let traj = flow_integrate(&cfg, &scaled_start(&e, 1.0), 100.0, 1e-10);
        let last = traj.last().unwrap();
        assert!((last.y - e.y_inf).abs() < 1e-9 && (last.z - e.z_inf).abs() < 1e-9);
        assert!((last.t - 100.0).abs() < 1e-12);
    }

    #[test]
    fn flow_from_half_y_converges() {
        let cfg = reference();
        let e = equilibrium(&cfg).unwrap();
        let traj = flow_integrate(&cfg, &scaled_start(&e, 0.5), 200.0, 1e-10);
        let last = traj.last().unwrap();
        let d = (last.y - e.y_inf)
            .abs()
            .max((last.z - e.z_inf).abs())
            .max((last.w - e.w_inf).abs())
            .max((last.x - e.x_inf).abs());
        assert!(d < 1e-6, "{d}");
    }

    #[test]
    fn cooperativity_and_irreducibility() {
        let samples = [[1.0, 2.0, 3.0], [0.1, 10.0, 0.5], [0.0, 0.0, 0.0]];
        let r = cooperativity_check(&reference(), &samples);
        assert!(r.cooperative && r.irreducible);
        let cfg = validate(5.0, 2.0, 0.0, 0.0, 1.0, 0.0).unwrap();
        let r = cooperativity_check(&cfg, &samples);
        assert!(r.cooperative && !r.irreducible);
        let r = cooperativity_check(&reference(), &[[0.0, 0.0, 0.0]]);
        assert!(r.cooperative && r.min_off_diagonal == 0.0);
    }

    #[test]
    fn injected_z_violation_is_named() {
        let cfg = reference();
        let e = equilibrium(&cfg).unwrap();
        let st = DynState {
            t: 0.0,
            x: 1.0,
            y: 0.5 * e.y_inf,
            z: 1.1 * e.z_inf,
            w: 6.0,
        };
        let v = lemma_l2c_check(&cfg, &[st]).unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind, BoundKind::ZUpper);
    }
}
