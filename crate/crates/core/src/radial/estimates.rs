//! Pointwise and integrated a-priori bounds every radial solution obeys.
//!
//! * `K4`: `(N + km/(k-m)) (u')^{k-m} < r^k v^p`
//! * `K5`: `c_lo r^{k-1} v^p < [(u')^{k-m}]' < (k-m)/k r^{k-1} v^p`,
//!   `c_lo = k(k-m) / (kN - (N-k)m)`
//! * `K6`: `(v')^k < r^k (u')^q v^s / N`
//! * `K7`: `(k/N) r^{k-1} v^s (u')^q <= [(v')^k]' <= r^{k-1} v^s (u')^q`
//!
//! `K5` and `K7` are checked between consecutive samples after integrating the
//! bounds with the monotone factors frozen at the interval ends.

use serde::Serialize;

use super::integrate::RadialTrajectory;
use crate::config::ExponentConfig;

const REL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EstimateKind {
    K4,
    K5Lower,
    K5Upper,
    K6,
    K7Lower,
    K7Upper,
    Monotonicity,
    Clamp,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub kind: EstimateKind,
    pub index: usize,
    pub r: f64,
    /// The side that should be smaller.
    pub lhs: f64,
    pub rhs: f64,
}

fn exceeds(lhs: f64, rhs: f64) -> bool {
    lhs > rhs + REL_TOL * lhs.abs().max(rhs.abs())
}

/// Returns every bound that fails on the trajectory; empty when all hold.
pub fn check_estimates(cfg: &ExponentConfig, traj: &RadialTrajectory) -> Vec<Violation> {
    let mut out = Vec::new();
    if !cfg.has_solutions() {
        return out;
    }
    let (n, k, km) = (cfg.nf(), cfg.kf(), cfg.km());
    let (m, p, q, s) = (cfg.m, cfg.p, cfg.q, cfg.s);
    let c4 = n + k * m / km;
    let c5_lo = k * km / (k * n - (n - k) * m);
    let c5_hi = km / k;

    let mut push = |kind, index, r, lhs, rhs| {
        out.push(Violation {
            kind,
            index,
            r,
            lhs,
            rhs,
        });
    };

    if traj.clamp_events > 0 {
        push(
            EstimateKind::Clamp,
            0,
            traj.samples[0].r,
            traj.clamp_events as f64,
            0.0,
        );
    }

    for (i, st) in traj.samples.iter().enumerate() {
        let r = st.r;
        let lhs = c4 * st.du.powf(km);
        let rhs = r.powf(k) * st.v.powf(p);
        if exceeds(lhs, rhs) {
            push(EstimateKind::K4, i, r, lhs, rhs);
        }
        let lhs = st.dv.powf(k);
        let rhs = r.powf(k) * st.du.powf(q) * st.v.powf(s) / n;
        if exceeds(lhs, rhs) {
            push(EstimateKind::K6, i, r, lhs, rhs);
        }
        if !(st.du > 0.0 && st.dv > 0.0) {
            push(EstimateKind::Monotonicity, i, r, 0.0, st.du.min(st.dv));
        }
    }

    for (i, w) in traj.samples.windows(2).enumerate() {
        let (a, b) = (&w[0], &w[1]);
        let r = b.r;
        if !(b.r > a.r && b.u >= a.u && b.v >= a.v && b.du > a.du) {
            push(EstimateKind::Monotonicity, i + 1, r, a.du, b.du);
        }
        let dk = (b.r.powf(k) - a.r.powf(k)) / k;

        let (psi_a, psi_b) = (a.du.powf(km), b.du.powf(km));
        let d_psi = psi_b - psi_a;
        let lo = c5_lo * a.v.powf(p) * dk;
        let hi = c5_hi * b.v.powf(p) * dk;
        let scale = psi_b.max(hi);
        if lo > d_psi + REL_TOL * scale {
            push(EstimateKind::K5Lower, i + 1, r, lo, d_psi);
        }
        if d_psi > hi + REL_TOL * scale {
            push(EstimateKind::K5Upper, i + 1, r, d_psi, hi);
        }

        let (wa, wb) = (a.dv.powf(k), b.dv.powf(k));
        let d_w = wb - wa;
        let lo = k / n * a.v.powf(s) * a.du.powf(q) * dk;
        let hi = b.v.powf(s) * b.du.powf(q) * dk;
        let scale = wb.max(hi);
        if lo > d_w + REL_TOL * scale {
            push(EstimateKind::K7Lower, i + 1, r, lo, d_w);
        }
        if d_w > hi + REL_TOL * scale {
            push(EstimateKind::K7Upper, i + 1, r, d_w, hi);
        }
    }
    out
}
