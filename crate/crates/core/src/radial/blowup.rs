use serde::Serialize;

use super::integrate::{asymptote_distance, RadialTrajectory, Terminal};
use super::RadialState;
use crate::config::ExponentConfig;
use crate::error::{Error, Result};

const MIN_WINDOW: usize = 6;

/// Fitted blow-up behaviour near the end of a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlowupReport {
    /// Estimated blow-up radius.
    pub r_max: f64,
    pub last_r: f64,
    /// Fitted `rate` in `u' ~ (R - r)^{-rate}`.
    pub rate_u: f64,
    /// `1 / ((k-m)(sigma-1))`
    pub predicted_rate: f64,
    pub u_finite: bool,
    /// `(u(last) - u(window start)) / u(last)` over the fit window.
    pub u_tail_ratio: f64,
    /// Range of `Psi' Psi^{-sigma}` over the fit window.
    pub psi_band: (f64, f64),
    pub window_samples: usize,
}

/// Indices of the last decade before the asymptote: the trailing samples whose
/// asymptote distance is within a factor ten of the final one.
pub(crate) fn tail_window(cfg: &ExponentConfig, samples: &[RadialState]) -> std::ops::Range<usize> {
    let n = samples.len();
    let tau_end = asymptote_distance(cfg, &samples[n - 1]);
    let mut start = n - 1;
    while start > 0 && asymptote_distance(cfg, &samples[start - 1]) <= 10.0 * tau_end {
        start -= 1;
    }
    let start = start.min(n.saturating_sub(MIN_WINDOW));
    start..n
}

/// Least-squares line `y = c0 + c1 x`.
pub(crate) fn fit_line(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    let c1 = sxy / sxx;
    (my - c1 * mx, c1)
}

/// Blow-up radius from the linear decay of `Psi / Psi'` over the tail window.
/// `Psi ~ (R - r)^{-g}` makes `Psi / Psi' = (R - r) / g` exactly linear.
pub(crate) fn blowup_radius(cfg: &ExponentConfig, samples: &[RadialState]) -> f64 {
    let last = samples[samples.len() - 1];
    let tau_last = asymptote_distance(cfg, &last);
    if samples.len() < 3 {
        return last.r + tau_last;
    }
    let w = tail_window(cfg, samples);
    let xs: Vec<f64> = samples[w.clone()].iter().map(|s| s.r - last.r).collect();
    let ys: Vec<f64> = samples[w]
        .iter()
        .map(|s| asymptote_distance(cfg, s))
        .collect();
    let (c0, c1) = fit_line(&xs, &ys);
    let gap = -c0 / c1;
    if c1 < 0.0 && gap.is_finite() && gap > 0.0 {
        last.r + gap
    } else {
        last.r + tau_last
    }
}

/// Fits the blow-up radius and the growth rate of `u'` near it.
pub fn estimate_blowup_rate(cfg: &ExponentConfig, traj: &RadialTrajectory) -> Result<BlowupReport> {
    if !matches!(traj.terminal, Terminal::BlowupDetected { .. }) {
        return Err(Error::NotABlowup);
    }
    let sigma = cfg.sigma().ok_or(Error::SigmaUndefined)?;
    if sigma <= 1.0 {
        return Err(Error::Precondition(format!(
            "sigma = {sigma} <= 1 admits no blow-up"
        )));
    }
    let samples = &traj.samples;
    let last = *samples.last().unwrap();
    let r_max = blowup_radius(cfg, samples);
    let w = tail_window(cfg, samples);
    let tail = &samples[w];

    let xs: Vec<f64> = tail.iter().map(|s| (r_max - s.r).ln()).collect();
    let ys: Vec<f64> = tail.iter().map(|s| s.du.ln()).collect();
    let (_, slope) = fit_line(&xs, &ys);
    let rate_u = -slope;

    let band = tail
        .iter()
        .map(|s| s.dpsi(cfg) * s.psi(cfg).powf(-sigma))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
            (lo.min(x), hi.max(x))
        });

    Ok(BlowupReport {
        r_max,
        last_r: last.r,
        rate_u,
        predicted_rate: 1.0 / (cfg.km() * (sigma - 1.0)),
        // u(R-) is finite exactly when u' ~ (R - r)^{-rate} is integrable.
        u_finite: rate_u < 1.0,
        u_tail_ratio: (last.u - tail[0].u) / last.u,
        psi_band: band,
        window_samples: tail.len(),
    })
}
