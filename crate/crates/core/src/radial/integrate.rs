use serde::Serialize;

use super::{blowup, default_r0, require_solutions, startup, stepped_rhs, RadialState};
use crate::config::ExponentConfig;
use crate::error::{Error, Result};
use crate::ode::{self, Control, Outcome, StepperOptions, Tolerances};

#[derive(Debug, Clone, PartialEq)]
pub struct IntegrateOptions {
    pub rtol: f64,
    /// Absolute tolerance for `u` and `v`. The momenta use a purely relative
    /// test since they start out many orders of magnitude below one.
    pub atol: f64,
    /// `u` or `v` above this value ends the run as a blow-up.
    pub blowup_threshold: f64,
    /// A run also ends as a blow-up once the distance to the asymptote,
    /// estimated as `Psi / Psi'`, drops below `asymptote_gap * r`.
    pub asymptote_gap: f64,
    pub min_step_rel: f64,
    pub max_steps: usize,
    /// Startup radius; `None` uses [`default_r0`].
    pub r0: Option<f64>,
    /// Extra radii at which a sample is forced.
    pub checkpoints: Vec<f64>,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        IntegrateOptions {
            rtol: 1e-9,
            atol: 1e-12,
            blowup_threshold: 1e12,
            asymptote_gap: 1e-10,
            min_step_rel: 1e-14,
            max_steps: 2_000_000,
            r0: None,
            checkpoints: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind")]
pub enum Terminal {
    ReachedRmax,
    BlowupDetected {
        r_blowup: f64,
    },
    StepUnderflow,
    StepLimit,
    /// A component left the double range before `r_max` without the run
    /// looking like a blow-up; global solutions with large `alpha` do this.
    Overflow,
}

impl Terminal {
    pub fn name(&self) -> &'static str {
        match self {
            Terminal::ReachedRmax => "ReachedRmax",
            Terminal::BlowupDetected { .. } => "BlowupDetected",
            Terminal::StepUnderflow => "StepUnderflow",
            Terminal::StepLimit => "StepLimit",
            Terminal::Overflow => "Overflow",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RadialTrajectory {
    pub config: ExponentConfig,
    pub a: f64,
    pub b: f64,
    pub samples: Vec<RadialState>,
    pub terminal: Terminal,
    /// Fractional powers whose base came out negative and was clamped.
    pub clamp_events: usize,
    /// Relative mismatch between the startup state at `r0` and the state
    /// obtained by integrating from a startup at `r0 / 2`.
    pub startup_rel_error: f64,
    pub steps_accepted: usize,
    pub steps_rejected: usize,
}

impl RadialTrajectory {
    pub fn last(&self) -> &RadialState {
        self.samples
            .last()
            .expect("trajectory has at least the startup sample")
    }

    /// Sample landed exactly on radius `r`, if any.
    pub fn at(&self, r: f64) -> Option<&RadialState> {
        self.samples.iter().find(|s| s.r == r)
    }
}

/// Asymptote distance `Psi / Psi'`; infinite when `Psi'` is not positive.
pub(crate) fn asymptote_distance(cfg: &ExponentConfig, st: &RadialState) -> f64 {
    let dpsi = st.dpsi(cfg);
    if dpsi > 0.0 {
        st.psi(cfg) / dpsi
    } else {
        f64::INFINITY
    }
}

fn rel_diff(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Integration stops once `u`, `v` or a momentum exceeds this.
pub const OVERFLOW_LIMIT: f64 = 1e300;

fn overflowed(st: &RadialState) -> bool {
    [st.u, st.v, st.du, st.dv, st.p_mom, st.q_mom]
        .iter()
        .any(|x| x.is_nan() || x.abs() > OVERFLOW_LIMIT)
}

struct Run {
    samples: Vec<RadialState>,
    outcome: Outcome,
    overflow: bool,
    clamps: usize,
    accepted: usize,
    rejected: usize,
}

fn run(
    cfg: &ExponentConfig,
    l: f64,
    start: RadialState,
    checkpoints: &[f64],
    opts: &IntegrateOptions,
    watch_blowup: bool,
) -> Run {
    let stepper = StepperOptions {
        tol: Tolerances {
            rtol: opts.rtol,
            atol: [0.0, 0.0, opts.atol, opts.atol],
        },
        h_init: 0.05 * start.r,
        min_step_rel: opts.min_step_rel,
        max_steps: opts.max_steps,
    };
    let mut stage_clamps = 0usize;
    let mut sample_clamps = 0usize;
    let mut samples = vec![start];
    let mut overflow = false;
    let (outcome, stats) = ode::integrate(
        |r, y| stepped_rhs(cfg, l, r, y, &mut stage_clamps),
        start.r,
        start.stepped(),
        checkpoints,
        &stepper,
        |r, y, _| {
            let st = RadialState::from_stepped(cfg, l, r, y, &mut sample_clamps);
            samples.push(st);
            if watch_blowup
                && (st.u > opts.blowup_threshold
                    || st.v > opts.blowup_threshold
                    || asymptote_distance(cfg, &st) < opts.asymptote_gap * r)
            {
                Control::Stop
            } else if overflowed(&st) {
                overflow = true;
                Control::Stop
            } else {
                Control::Continue
            }
        },
    );
    Run {
        samples,
        outcome,
        overflow,
        clamps: stage_clamps + sample_clamps,
        accepted: stats.accepted,
        rejected: stats.rejected,
    }
}

/// Integrates from the startup radius to `r_max`, stopping early at a blow-up.
pub fn integrate(
    cfg: &ExponentConfig,
    a: f64,
    b: f64,
    r_max: f64,
    opts: &IntegrateOptions,
) -> Result<RadialTrajectory> {
    let l = require_solutions(cfg)?;
    let r0 = opts.r0.unwrap_or_else(|| default_r0(a, b));
    if !(r_max > r0 && r_max.is_finite()) {
        return Err(Error::Precondition(format!(
            "r_max = {r_max} must exceed the startup radius {r0}"
        )));
    }
    let start = startup(cfg, a, b, r0)?;

    // Startup check: integrate from r0/2 up to r0 and compare.
    let half = startup(cfg, a, b, 0.5 * r0)?;
    let check = run(cfg, l, half, &[r0], opts, false);
    let end = check.samples.last().copied().unwrap_or(half);
    let startup_rel_error = [
        rel_diff(end.u, start.u),
        rel_diff(end.v, start.v),
        rel_diff(end.du, start.du),
        rel_diff(end.dv, start.dv),
    ]
    .into_iter()
    .fold(0.0, f64::max);

    let mut cps: Vec<f64> = opts
        .checkpoints
        .iter()
        .copied()
        .filter(|&c| c > r0 && c < r_max)
        .collect();
    cps.sort_by(f64::total_cmp);
    cps.dedup();
    cps.push(r_max);

    let out = run(cfg, l, start, &cps, opts, true);
    let last = *out.samples.last().unwrap();
    let near_asymptote = asymptote_distance(cfg, &last) < 1e-6 * last.r;
    let terminal = match out.outcome {
        Outcome::Reached => Terminal::ReachedRmax,
        Outcome::Stopped if out.overflow && !near_asymptote => Terminal::Overflow,
        Outcome::Stopped => Terminal::BlowupDetected {
            r_blowup: blowup::blowup_radius(cfg, &out.samples),
        },
        Outcome::StepUnderflow if near_asymptote => Terminal::BlowupDetected {
            r_blowup: blowup::blowup_radius(cfg, &out.samples),
        },
        Outcome::StepUnderflow => Terminal::StepUnderflow,
        Outcome::MaxSteps => Terminal::StepLimit,
    };
    Ok(RadialTrajectory {
        config: *cfg,
        a,
        b,
        samples: out.samples,
        terminal,
        clamp_events: out.clamps + check.clamps,
        startup_rel_error,
        steps_accepted: out.accepted,
        steps_rejected: out.rejected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::validate;

    #[test]
    fn bounded_reference_reaches_rmax() {
        let cfg = validate(5.0, 2.0, 0.0, 1.0, 1.0, 0.0).unwrap();
        let t = integrate(&cfg, 1.0, 1.0, 1e3, &IntegrateOptions::default()).unwrap();
        assert_eq!(t.terminal, Terminal::ReachedRmax);
        assert_eq!(t.last().r, 1e3);
        assert!(t.last().u.is_finite() && t.last().v.is_finite());
        assert_eq!(t.clamp_events, 0);
        assert!(t.startup_rel_error < 1e-9, "{}", t.startup_rel_error);
    }

    #[test]
    fn samples_are_monotone_and_consistent() {
        let cfg = validate(4.0, 2.0, 0.5, 1.0, 0.8, 0.2).unwrap();
        let t = integrate(&cfg, 0.7, 1.3, 50.0, &IntegrateOptions::default()).unwrap();
        let l = cfg.l().unwrap();
        for w in t.samples.windows(2) {
            assert!(w[1].r > w[0].r);
            assert!(w[1].u >= w[0].u && w[1].v >= w[0].v);
            assert!(w[1].du > w[0].du);
        }
        for s in &t.samples {
            assert!(s.du > 0.0 && s.dv > 0.0);
            let p = s.r.powf(l) * s.du.powf(cfg.km());
            let q = s.r.powf(cfg.nf() - cfg.kf()) * s.dv.powf(cfg.kf());
            assert!((p - s.p_mom).abs() <= 1e-12 * s.p_mom);
            assert!((q - s.q_mom).abs() <= 1e-12 * s.q_mom);
        }
    }

    #[test]
    fn huge_growth_exponent_overflows() {
        // delta is about 0.011, so u grows like r^1300.
        let cfg = validate(
            7.0,
            3.0,
            2.0671262937371955,
            1.2472637872151244,
            1.8130787355870457,
            0.5644492832334066,
        )
        .unwrap();
        let opts = IntegrateOptions {
            blowup_threshold: f64::INFINITY,
            ..Default::default()
        };
        let t = integrate(&cfg, 1.0, 1.0, 50.0, &opts).unwrap();
        assert_eq!(t.terminal, Terminal::Overflow);
        assert!(t.last().r < 50.0);
        assert!(t.steps_accepted < 100_000, "{}", t.steps_accepted);
    }

    #[test]
    fn checkpoints_are_hit_exactly() {
        let cfg = validate(5.0, 2.0, 0.0, 1.0, 1.0, 0.0).unwrap();
        let opts = IntegrateOptions {
            checkpoints: vec![0.5, 1.0, 2.0],
            ..Default::default()
        };
        let t = integrate(&cfg, 1.0, 1.0, 3.0, &opts).unwrap();
        for r in [0.5, 1.0, 2.0, 3.0] {
            assert!(t.at(r).is_some(), "missing checkpoint {r}");
        }
    }

    #[test]
    fn rejects_no_solution_configs() {
        let cfg = validate(3.0, 1.0, 2.0, 1.0, 1.0, 0.0).unwrap();
        assert!(matches!(
            integrate(&cfg, 1.0, 1.0, 1.0, &IntegrateOptions::default()),
            Err(Error::Precondition(_))
        ));
    }
}
