//! Fixed-point construction of the local solution on `[0, rho]`.
//!
//! ```text
//! T1[u, v](r) = a + int_0^r ( (k-m)/k t^{-L} int_0^t tau^{k+L-1} v^p dtau )^{1/(k-m)} dt
//! T2[u, v](r) = b + int_0^r ( t^{k-N} int_0^t tau^{N-1} v^s (u')^q dtau )^{1/k} dt
//! ```
//!
//! Both nested integrals are cumulative trapezoid sums on a uniform grid.

use serde::Serialize;

use crate::config::ExponentConfig;
use crate::error::{Error, Result};
use crate::radial::require_solutions;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridFunctionPair {
    pub grid: Vec<f64>,
    pub u_vals: Vec<f64>,
    pub v_vals: Vec<f64>,
    pub du_vals: Vec<f64>,
}

impl GridFunctionPair {
    /// `(u, v, u') = (a, b, 0)` on `M + 1` uniform nodes of `[0, rho]`.
    pub fn seed(a: f64, b: f64, rho: f64, intervals: usize) -> Self {
        let grid: Vec<f64> = if rho == 0.0 {
            vec![0.0]
        } else {
            (0..=intervals)
                .map(|i| rho * i as f64 / intervals as f64)
                .collect()
        };
        let n = grid.len();
        GridFunctionPair {
            grid,
            u_vals: vec![a; n],
            v_vals: vec![b; n],
            du_vals: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        [&self.u_vals, &self.v_vals, &self.du_vals]
            .iter()
            .all(|xs| xs.iter().all(|x| x.is_finite()))
    }

    /// Right end of the grid.
    pub fn rho(&self) -> f64 {
        *self.grid.last().unwrap_or(&0.0)
    }

    /// Largest change in `u`, `v` or `u'`, relative to the sup norm of the
    /// function it belongs to (floored at one).
    pub fn distance(&self, other: &Self) -> f64 {
        [
            (&self.u_vals, &other.u_vals),
            (&self.v_vals, &other.v_vals),
            (&self.du_vals, &other.du_vals),
        ]
        .iter()
        .map(|(x, y)| {
            let scale = x.iter().chain(y.iter()).fold(1.0f64, |m, v| m.max(v.abs()));
            x.iter()
                .zip(y.iter())
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
                / scale
        })
        .fold(0.0, f64::max)
    }

    /// Piecewise-linear interpolation of `(u, v)` at `r` inside the grid.
    pub fn interpolate(&self, r: f64) -> Option<(f64, f64)> {
        let g = &self.grid;
        if g.len() < 2 || !(r >= 0.0 && r <= self.rho()) {
            return None;
        }
        let i = g.partition_point(|&x| x <= r).clamp(1, g.len() - 1);
        let w = (r - g[i - 1]) / (g[i] - g[i - 1]);
        Some((
            self.u_vals[i - 1] + w * (self.u_vals[i] - self.u_vals[i - 1]),
            self.v_vals[i - 1] + w * (self.v_vals[i] - self.v_vals[i - 1]),
        ))
    }
}

fn cumulative_trapezoid(grid: &[f64], f: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(f.len());
    let mut acc = 0.0;
    out.push(0.0);
    for i in 1..f.len() {
        acc += 0.5 * (grid[i] - grid[i - 1]) * (f[i] + f[i - 1]);
        out.push(acc);
    }
    out
}

/// One application of `(T1, T2)`. The output `u'` is the outer integrand of `T1`;
/// both outer integrands vanish at `t = 0`.
pub fn apply_t(
    cfg: &ExponentConfig,
    a: f64,
    b: f64,
    pair: &GridFunctionPair,
) -> Result<GridFunctionPair> {
    let l = require_solutions(cfg)?;
    let (n, k, km) = (cfg.nf(), cfg.kf(), cfg.km());
    let g = &pair.grid;

    let src_u: Vec<f64> = g
        .iter()
        .zip(&pair.v_vals)
        .map(|(&t, &v)| t.powf(k + l - 1.0) * v.max(0.0).powf(cfg.p))
        .collect();
    let inner_u = cumulative_trapezoid(g, &src_u);
    let du: Vec<f64> = g
        .iter()
        .zip(&inner_u)
        .map(|(&t, &i)| {
            if t > 0.0 {
                (km / k * t.powf(-l) * i).powf(1.0 / km)
            } else {
                0.0
            }
        })
        .collect();
    let u: Vec<f64> = cumulative_trapezoid(g, &du)
        .into_iter()
        .map(|x| a + x)
        .collect();

    let src_v: Vec<f64> = g
        .iter()
        .zip(pair.v_vals.iter().zip(&pair.du_vals))
        .map(|(&t, (&v, &du))| t.powf(n - 1.0) * v.max(0.0).powf(cfg.s) * du.max(0.0).powf(cfg.q))
        .collect();
    let inner_v = cumulative_trapezoid(g, &src_v);
    let dv: Vec<f64> = g
        .iter()
        .zip(&inner_v)
        .map(|(&t, &i)| {
            if t > 0.0 {
                (t.powf(k - n) * i).powf(1.0 / k)
            } else {
                0.0
            }
        })
        .collect();
    let v: Vec<f64> = cumulative_trapezoid(g, &dv)
        .into_iter()
        .map(|x| b + x)
        .collect();

    Ok(GridFunctionPair {
        grid: g.clone(),
        u_vals: u,
        v_vals: v,
        du_vals: du,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PicardOptions {
    /// Number of grid intervals `M`.
    pub intervals: usize,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PicardOptions {
    fn default() -> Self {
        PicardOptions {
            intervals: 512,
            tol: 1e-10,
            max_iter: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PicardSolution {
    pub pair: GridFunctionPair,
    pub iterations: usize,
    /// Distance between the last two iterates.
    pub last_change: f64,
}

/// Iterates `(T1, T2)` from the constant seed until successive iterates differ
/// by less than `opts.tol`.
pub fn picard_solve(
    cfg: &ExponentConfig,
    a: f64,
    b: f64,
    rho: f64,
    opts: &PicardOptions,
) -> Result<PicardSolution> {
    require_solutions(cfg)?;
    if !(rho >= 0.0 && rho.is_finite()) {
        return Err(Error::Precondition(format!(
            "rho = {rho} must be non-negative"
        )));
    }
    if !(opts.tol > 0.0 && opts.intervals > 0) {
        return Err(Error::Precondition(
            "tol and the interval count must be positive".into(),
        ));
    }
    let mut cur = GridFunctionPair::seed(a, b, rho, opts.intervals);
    if rho == 0.0 {
        return Ok(PicardSolution {
            pair: cur,
            iterations: 1,
            last_change: 0.0,
        });
    }
    for it in 1..=opts.max_iter {
        let next = apply_t(cfg, a, b, &cur)?;
        if !next.is_finite() {
            break;
        }
        let change = next.distance(&cur);
        cur = next;
        if change < opts.tol {
            return Ok(PicardSolution {
                pair: cur,
                iterations: it,
                last_change: change,
            });
        }
    }
    Err(Error::NoConvergence {
        max_iter: opts.max_iter,
    })
}

/// Number of halvings the auto driver tries after the first attempt.
pub const MAX_HALVINGS: usize = 10;

/// [`picard_solve`] starting from `rho`, halving it on non-convergence.
pub fn picard_solve_auto(
    cfg: &ExponentConfig,
    a: f64,
    b: f64,
    rho: f64,
    opts: &PicardOptions,
) -> Result<PicardSolution> {
    let mut rho = rho;
    let mut last = None;
    for _ in 0..=MAX_HALVINGS {
        match picard_solve(cfg, a, b, rho, opts) {
            Err(e @ Error::NoConvergence { .. }) => {
                last = Some(e);
                rho *= 0.5;
            }
            other => return other,
        }
    }
    Err(last.expect("at least one attempt"))
}
