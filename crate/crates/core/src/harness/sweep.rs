//! Parallel exponent-grid sweeps comparing the algebraic classifier with the
//! behaviour observed by direct integration.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{classify, validate, RegimeTag};
use crate::error::{Error, Result};
use crate::harness::io::fmt_f64;
use crate::radial::{estimate_blowup_rate, integrate, IntegrateOptions, Terminal};

/// One sweep axis: a single value, an explicit list, or `count` evenly spaced
/// values from `start` to `stop` inclusive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Axis {
    Value(f64),
    List(Vec<f64>),
    Range { start: f64, stop: f64, count: usize },
}

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Axis::Value(x) => vec![*x],
            Axis::List(v) => v.clone(),
            Axis::Range { start, stop, count } => match count {
                0 => Vec::new(),
                1 => vec![*start],
                n => (0..*n)
                    .map(|i| start + (stop - start) * i as f64 / (*n - 1) as f64)
                    .collect(),
            },
        }
    }
}

fn default_one() -> f64 {
    1.0
}
fn default_r_max() -> f64 {
    100.0
}
fn default_rtol() -> f64 {
    1e-9
}
fn default_atol() -> f64 {
    1e-12
}
fn default_threshold() -> f64 {
    f64::INFINITY
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(rename = "N")]
    pub n: Axis,
    pub k: Axis,
    pub m: Axis,
    pub p: Axis,
    pub q: Axis,
    pub s: Axis,
    #[serde(default = "default_one")]
    pub a: f64,
    #[serde(default = "default_one")]
    pub b: f64,
    #[serde(default = "default_r_max")]
    pub r_max: f64,
    #[serde(default = "default_rtol")]
    pub rtol: f64,
    #[serde(default = "default_atol")]
    pub atol: f64,
    /// `u` or `v` above this ends a run as a blow-up. Unset (or `null`) relies
    /// on the asymptote test alone, since global solutions can grow like
    /// `r^{alpha_u}` with large `alpha_u`.
    #[serde(default = "default_threshold", deserialize_with = "threshold_or_inf")]
    pub blowup_threshold: f64,
    #[serde(default)]
    pub jobs: Option<usize>,
}

fn threshold_or_inf<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
}

impl SweepSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Sweep(e.to_string()))
    }

    /// Cartesian product of the axes, in `(N, k, m, p, q, s)` order.
    pub fn expand(&self) -> Result<Vec<[f64; 6]>> {
        let axes = [&self.n, &self.k, &self.m, &self.p, &self.q, &self.s].map(Axis::values);
        const NAMES: [&str; 6] = ["N", "k", "m", "p", "q", "s"];
        for (name, vals) in NAMES.iter().zip(&axes) {
            if vals.is_empty() {
                return Err(Error::Sweep(format!("axis {name} is empty")));
            }
        }
        if !(self.r_max > 0.0 && self.a > 0.0 && self.b > 0.0 && self.rtol > 0.0) {
            return Err(Error::Sweep("a, b, r_max and rtol must be positive".into()));
        }
        let mut out = vec![[0.0; 6]];
        for (i, vals) in axes.iter().enumerate() {
            out = out
                .into_iter()
                .flat_map(|t| {
                    vals.iter().map(move |&v| {
                        let mut t = t;
                        t[i] = v;
                        t
                    })
                })
                .collect();
        }
        Ok(out)
    }

    fn options(&self) -> IntegrateOptions {
        IntegrateOptions {
            rtol: self.rtol,
            atol: self.atol,
            blowup_threshold: self.blowup_threshold,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub tuple: [f64; 6],
    /// Validation failure, if the tuple was rejected.
    pub rejected: Option<String>,
    pub predicted: Option<RegimeTag>,
    /// `Rejected`, a regime name, or `Inconclusive` when integration failed.
    pub observed: String,
    pub terminal: Option<String>,
    pub r_end: Option<f64>,
    pub r_blowup: Option<f64>,
    pub rate_u: Option<f64>,
    pub predicted_rate: Option<f64>,
    pub agree: bool,
    /// Wall time; kept out of the CSV so outputs stay reproducible.
    pub elapsed_ms: f64,
}

fn record(tuple: [f64; 6], spec: &SweepSpec, opts: &IntegrateOptions) -> RunRecord {
    let start = Instant::now();
    let mut rec = RunRecord {
        tuple,
        rejected: None,
        predicted: None,
        observed: "Rejected".into(),
        terminal: None,
        r_end: None,
        r_blowup: None,
        rate_u: None,
        predicted_rate: None,
        agree: true,
        elapsed_ms: 0.0,
    };
    let [n, k, m, p, q, s] = tuple;
    match validate(n, k, m, p, q, s) {
        Err(e) => rec.rejected = Some(e.to_string()),
        Ok(cfg) => {
            let predicted = classify(&cfg).tag;
            rec.predicted = Some(predicted);
            let observed = match integrate(&cfg, spec.a, spec.b, spec.r_max, opts) {
                Err(Error::Precondition(_)) if !cfg.has_solutions() => {
                    RegimeTag::NoSolution.to_string()
                }
                Err(_) => "Inconclusive".to_string(),
                Ok(traj) => {
                    rec.terminal = Some(traj.terminal.name().to_string());
                    rec.r_end = Some(traj.last().r);
                    match traj.terminal {
                        Terminal::ReachedRmax => RegimeTag::Bounded.to_string(),
                        Terminal::BlowupDetected { r_blowup } => {
                            rec.r_blowup = Some(r_blowup);
                            match estimate_blowup_rate(&cfg, &traj) {
                                Ok(rep) => {
                                    rec.rate_u = Some(rep.rate_u);
                                    rec.predicted_rate = Some(rep.predicted_rate);
                                    if rep.u_finite {
                                        RegimeTag::UFiniteVBlowup.to_string()
                                    } else {
                                        RegimeTag::BothBlowup.to_string()
                                    }
                                }
                                Err(_) => "Inconclusive".to_string(),
                            }
                        }
                        Terminal::StepUnderflow | Terminal::StepLimit | Terminal::Overflow => {
                            "Inconclusive".to_string()
                        }
                    }
                }
            };
            rec.agree = observed == predicted.as_str();
            rec.observed = observed;
        }
    }
    rec.elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
    rec
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepOutcome {
    pub rows: Vec<RunRecord>,
    pub disagreements: usize,
}

/// Worker count: explicit argument, then the sweep file, then all cores.
pub fn resolve_jobs(cli: Option<usize>, spec: &SweepSpec) -> usize {
    cli.or(spec.jobs)
        .filter(|&j| j > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Runs every tuple of the grid on `jobs` workers; rows come back sorted by tuple.
pub fn run_sweep(spec: &SweepSpec, jobs: usize) -> Result<SweepOutcome> {
    let tuples = spec.expand()?;
    let opts = spec.options();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Sweep(e.to_string()))?;
    let mut rows: Vec<RunRecord> =
        pool.install(|| tuples.par_iter().map(|&t| record(t, spec, &opts)).collect());
    rows.sort_by(|a, b| {
        a.tuple
            .iter()
            .zip(&b.tuple)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let disagreements = rows.iter().filter(|r| !r.agree).count();
    Ok(SweepOutcome {
        rows,
        disagreements,
    })
}

const HEADER: [&str; 15] = [
    "N",
    "k",
    "m",
    "p",
    "q",
    "s",
    "predicted",
    "observed",
    "agree",
    "terminal",
    "r_end",
    "r_blowup",
    "rate_u",
    "predicted_rate",
    "rejected",
];

pub fn write_sweep_csv<W: Write>(out: W, rows: &[RunRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    let opt = |x: Option<f64>| x.map(fmt_f64).unwrap_or_default();
    for r in rows {
        let mut rec: Vec<String> = r.tuple.iter().map(|&x| fmt_f64(x)).collect();
        rec.push(r.predicted.map(|t| t.to_string()).unwrap_or_default());
        rec.push(r.observed.clone());
        rec.push(r.agree.to_string());
        rec.push(r.terminal.clone().unwrap_or_default());
        rec.push(opt(r.r_end));
        rec.push(opt(r.r_blowup));
        rec.push(opt(r.rate_u));
        rec.push(opt(r.predicted_rate));
        rec.push(r.rejected.clone().unwrap_or_default());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
