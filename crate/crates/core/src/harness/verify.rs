//! Property suites run by `khess verify`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::asymptotics::singular_residual;
use crate::config::{validate, ExponentConfig};
use crate::dynamics::{dyn_image, identity_defects, identity_sides, lemma_l2c_check, stability};
use crate::error::Result;
use crate::picard::{picard_solve_auto, PicardOptions};
use crate::radial::{check_estimates, integrate, IntegrateOptions, RadialState, Terminal};

pub const SUITES: [&str; 6] = [
    "identities",
    "singular",
    "picard-oracle",
    "lemma-bounds",
    "stability-sweep",
    "uniqueness",
];

/// Seed shared by every randomized suite.
pub const SEED: u64 = 0x6b_6865_7373;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub checks: usize,
    pub failures: usize,
    /// Largest defect seen, in the suite's own metric.
    pub worst: f64,
    pub notes: Vec<String>,
}

impl SuiteReport {
    fn new(suite: &str) -> Self {
        SuiteReport {
            suite: suite.to_string(),
            checks: 0,
            failures: 0,
            worst: 0.0,
            notes: Vec::new(),
        }
    }

    fn check(&mut self, value: f64, limit: f64, what: impl FnOnce() -> String) {
        self.checks += 1;
        if value.is_finite() {
            self.worst = self.worst.max(value);
        }
        if value.is_nan() || value > limit {
            self.failures += 1;
            if self.notes.len() < 20 {
                self.notes
                    .push(format!("{}: {value:e} > {limit:e}", what()));
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0 && self.checks > 0
    }
}

/// A random valid configuration with `k > m`; with `global` also `delta > 0`.
pub fn random_config<R: Rng>(rng: &mut R, global: bool) -> ExponentConfig {
    loop {
        let n = rng.gen_range(2..=8u32);
        let k = rng.gen_range(1..=n);
        let kf = k as f64;
        let m = rng.gen_range(0.0..0.9 * kf);
        let s = rng.gen_range(0.0..0.9 * kf);
        let p = s + rng.gen_range(0.0..3.0);
        let q = rng.gen_range(0.05..3.0);
        if let Ok(cfg) = validate(n as f64, kf, m, p, q, s) {
            if !global || cfg.delta() > 0.0 {
                return cfg;
            }
        }
    }
}

fn log_uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo.ln()..hi.ln())).exp()
}

/// A positive state with every entry in `[0.1, 10]`; momenta are left at zero.
pub fn random_state<R: Rng>(rng: &mut R) -> RadialState {
    let mut x = || log_uniform(rng, 0.1, 10.0);
    RadialState {
        r: x(),
        u: x(),
        du: x(),
        v: x(),
        dv: x(),
        p_mom: 0.0,
        q_mom: 0.0,
    }
}

pub fn identities() -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("identities");
    let reference = validate(5.0, 2.0, 0.0, 1.0, 1.0, 0.0)?;
    let worked = RadialState {
        r: 2.0,
        u: 3.0,
        du: 5.0,
        v: 7.0,
        dv: 11.0,
        p_mom: 0.0,
        q_mom: 0.0,
    };
    let sides = identity_sides(&reference, &worked)?;
    for (got, want) in [
        (sides.u_lhs, 27.0 / 2048.0),
        (sides.u_rhs, 27.0 / 2048.0),
        (sides.v_lhs, 343.0 / 1024.0),
        (sides.v_rhs, 343.0 / 1024.0),
    ] {
        rep.check((got / want - 1.0).abs(), 1e-12, || "worked state".into());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    for _ in 0..10_000 {
        let cfg = random_config(&mut rng, false);
        let st = random_state(&mut rng);
        let (eu, ev) = identity_defects(&cfg, &st)?;
        rep.check(eu.max(ev), 1e-11, || format!("{cfg:?} at {st:?}"));
    }
    Ok(rep)
}

pub fn singular() -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("singular");
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 1);
    for _ in 0..100 {
        let cfg = random_config(&mut rng, true);
        let res = singular_residual(&cfg, &[0.1, 1.0, 10.0, 100.0])?;
        rep.check(res, 1e-9, || format!("{cfg:?}"));
    }
    Ok(rep)
}

/// Sup-norm gap, relative to `max |u|` and `max |v|`, between the Picard
/// solution and direct integration on the Picard grid.
pub fn picard_gap(cfg: &ExponentConfig, a: f64, b: f64, rho: f64) -> Result<(f64, f64)> {
    let sol = picard_solve_auto(cfg, a, b, rho, &PicardOptions::default())?;
    let pair = &sol.pair;
    let opts = IntegrateOptions {
        checkpoints: pair.grid[1..].to_vec(),
        ..Default::default()
    };
    let traj = integrate(cfg, a, b, pair.rho(), &opts)?;
    let (mut du, mut dv) = (0.0f64, 0.0f64);
    let umax = pair.u_vals.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let vmax = pair.v_vals.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    for (i, &r) in pair.grid.iter().enumerate().skip(1) {
        let Some(st) = traj.at(r) else { continue };
        du = du.max((st.u - pair.u_vals[i]).abs());
        dv = dv.max((st.v - pair.v_vals[i]).abs());
    }
    Ok(((du / umax).max(dv / vmax), pair.rho()))
}

pub fn picard_oracle() -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("picard-oracle");
    let cases = [
        ((5.0, 2.0, 0.0, 1.0, 1.0, 0.0), 1.0, 1.0),
        ((5.0, 2.0, 0.0, 1.0, 1.0, 0.0), 2.0, 0.5),
        ((4.0, 3.0, 0.5, 1.2, 0.7, 0.3), 1.0, 1.0),
        ((3.0, 1.0, 0.0, 0.5, 0.5, 0.0), 1.0, 1.0),
    ];
    for ((n, k, m, p, q, s), a, b) in cases {
        let cfg = validate(n, k, m, p, q, s)?;
        let (gap, rho) = picard_gap(&cfg, a, b, 0.1)?;
        rep.check(gap, 1e-6, || format!("{cfg:?} a={a} b={b} rho={rho}"));
    }
    Ok(rep)
}

/// The three regime references from `(a, b) = (1, 1)` plus the long bounded run.
pub fn reference_runs() -> Result<Vec<(ExponentConfig, crate::radial::RadialTrajectory)>> {
    let mut out = Vec::new();
    for (n, k, m, p, q, s) in [
        (5.0, 2.0, 0.0, 1.0, 1.0, 0.0),
        (3.0, 1.0, 0.0, 2.0, 2.0, 0.0),
        (3.0, 1.0, 0.0, 3.0, 3.0, 0.0),
    ] {
        let cfg = validate(n, k, m, p, q, s)?;
        out.push((
            cfg,
            integrate(&cfg, 1.0, 1.0, 1e3, &IntegrateOptions::default())?,
        ));
    }
    let cfg = out[0].0;
    let long = IntegrateOptions {
        blowup_threshold: f64::INFINITY,
        ..Default::default()
    };
    out.push((cfg, integrate(&cfg, 1.0, 1.0, 1e4, &long)?));
    Ok(out)
}

pub fn lemma_bounds() -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("lemma-bounds");
    for (cfg, traj) in reference_runs()? {
        let v = check_estimates(&cfg, &traj);
        rep.check(v.len() as f64, 0.0, || {
            format!("estimates on {cfg:?}: {:?}", v.first())
        });
        if cfg.delta() > 0.0 && traj.terminal == Terminal::ReachedRmax {
            let d = dyn_image(&cfg, &traj)?;
            let v = lemma_l2c_check(&cfg, &d)?;
            rep.check(v.len() as f64, 0.0, || {
                format!("dyn bounds on {cfg:?}: {:?}", v.first())
            });
        }
    }
    Ok(rep)
}

pub fn stability_sweep() -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("stability-sweep");
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 2);
    for _ in 0..100 {
        let cfg = random_config(&mut rng, true);
        let s = stability(&cfg)?;
        let ok = s.a > 0.0 && s.b > 0.0 && s.c > 0.0 && s.ab_gt_9c && s.stable;
        rep.check(if ok { 0.0 } else { 1.0 }, 0.0, || {
            format!("{cfg:?}: {s:?}")
        });
        rep.check(s.coefficient_mismatch, 1e-10, || {
            format!("coefficients of {cfg:?}")
        });
    }
    Ok(rep)
}

/// Relative gap at `r = 1` between startups at `r0` and `r0 / 10`.
pub fn startup_gap(cfg: &ExponentConfig, a: f64, b: f64) -> Result<f64> {
    let r0 = crate::radial::default_r0(a, b);
    let mut worst = 0.0f64;
    let mut runs = Vec::new();
    for r in [r0, r0 / 10.0] {
        let opts = IntegrateOptions {
            r0: Some(r),
            checkpoints: vec![1.0],
            ..Default::default()
        };
        let t = integrate(cfg, a, b, 1.0, &opts)?;
        runs.push(*t.last());
    }
    for (x, y) in [(runs[0].u, runs[1].u), (runs[0].v, runs[1].v)] {
        worst = worst.max((x - y).abs() / x.abs().max(y.abs()));
    }
    Ok(worst)
}

pub fn uniqueness() -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("uniqueness");
    for ((n, k, m, p, q, s), a, b) in [
        ((5.0, 2.0, 0.0, 1.0, 1.0, 0.0), 1.0, 1.0),
        ((5.0, 2.0, 0.0, 1.0, 1.0, 0.0), 0.3, 2.0),
        ((7.0, 3.0, 1.0, 1.5, 0.8, 0.5), 1.0, 1.0),
    ] {
        let cfg = validate(n, k, m, p, q, s)?;
        let gap = startup_gap(&cfg, a, b)?;
        rep.check(gap, 1e-6, || format!("{cfg:?} a={a} b={b}"));
    }
    Ok(rep)
}

/// Runs a suite by name; `None` for an unknown name.
pub fn run_suite(name: &str) -> Option<Result<SuiteReport>> {
    Some(match name {
        "identities" => identities(),
        "singular" => singular(),
        "picard-oracle" => picard_oracle(),
        "lemma-bounds" => lemma_bounds(),
        "stability-sweep" => stability_sweep(),
        "uniqueness" => uniqueness(),
        _ => return None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_configs_respect_requests() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let c = random_config(&mut rng, true);
            assert!(c.has_solutions() && c.delta() > 0.0);
        }
    }

    #[test]
    fn unknown_suite() {
        assert!(run_suite("nope").is_none());
    }

    #[test]
    fn fast_suites_pass() {
        for name in ["singular", "stability-sweep", "uniqueness"] {
            let r = run_suite(name).unwrap().unwrap();
            assert!(r.passed(), "{r:#?}");
        }
    }
}
