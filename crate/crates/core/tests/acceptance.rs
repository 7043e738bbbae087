//! One PASS/FAIL line per acceptance criterion; exits non-zero if any fails.

use std::time::{Duration, Instant};

use khessian::asymptotics::convergence_report;
use khessian::dynamics::{
    cooperativity_check, dyn_image, equilibrium, flow_on_grid, lemma_l2c_check, stability, DynState,
};
use khessian::harness::sweep::{run_sweep, SweepSpec};
use khessian::harness::verify::{
    self, picard_gap, random_config, reference_runs, startup_gap, SEED,
};
use khessian::radial::{
    check_estimates, estimate_blowup_rate, integrate, scale_solution, scaling_residual,
    IntegrateOptions, Terminal,
};
use khessian::{classify, classify_sigma, validate, ExponentConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    ok: bool,
    detail: String,
}

fn outcome(ok: bool, detail: String) -> Outcome {
    Outcome { ok, detail }
}

struct Ledger {
    failed: Vec<usize>,
}

impl Ledger {
    fn run(&mut self, id: usize, limit: Duration, f: impl FnOnce() -> Outcome) {
        let start = Instant::now();
        let out = f();
        let took = start.elapsed();
        let ok = out.ok && took <= limit;
        println!(
            "{} criterion {id}: {} [{:.3} s, limit {} s]",
            if ok { "PASS" } else { "FAIL" },
            out.detail,
            took.as_secs_f64(),
            limit.as_secs()
        );
        if !ok {
            self.failed.push(id);
        }
    }
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

fn bounded() -> ExponentConfig {
    validate(5.0, 2.0, 0.0, 1.0, 1.0, 0.0).unwrap()
}

fn both() -> ExponentConfig {
    validate(3.0, 1.0, 0.0, 2.0, 2.0, 0.0).unwrap()
}

fn long_options() -> IntegrateOptions {
    IntegrateOptions {
        blowup_threshold: f64::INFINITY,
        ..Default::default()
    }
}

fn rel(x: f64, want: f64) -> f64 {
    (x / want - 1.0).abs()
}

fn c1_classifiers() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let n = 20_000;
    let mut disagree = 0;
    for _ in 0..n {
        let cfg = random_config(&mut rng, false);
        match classify_sigma(&cfg) {
            Ok(r) if r.tag == classify(&cfg).tag => {}
            _ => disagree += 1,
        }
    }
    outcome(
        disagree == 0,
        format!("{disagree} disagreements over {n} configs with k > m"),
    )
}

fn suite(name: &str) -> Outcome {
    let rep = verify::run_suite(name).unwrap().unwrap();
    outcome(
        rep.passed(),
        format!(
            "{name}: {} checks, {} failures, worst {:.2e}",
            rep.checks, rep.failures, rep.worst
        ),
    )
}

fn c4_stability() -> Outcome {
    let sweep = verify::stability_sweep().unwrap();
    let st = stability(&bounded()).unwrap();
    let dev = rel(st.a, 58.0 / 3.0)
        .max(rel(st.b, 1055.0 / 9.0))
        .max(rel(st.c, 5750.0 / 36.0));
    outcome(
        sweep.passed() && dev <= 1e-12,
        format!(
            "{} random configs stable with ab > 9c ({} failures); reference (a, b, c) within {dev:.1e}",
            sweep.checks / 2,
            sweep.failures
        ),
    )
}

fn c5_regimes() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for (p, q, n, k) in [(1, 1, 5, 2), (2, 2, 3, 1), (3, 3, 3, 1)] {
        let spec = SweepSpec::from_json(&format!(
            r#"{{"N":{n},"k":{k},"m":0,"p":{p},"q":{q},"s":0,"r_max":1000,"blowup_threshold":1e12}}"#
        ))
        .unwrap();
        let out = run_sweep(&spec, 1).unwrap();
        let row = &out.rows[0];
        ok &= row.agree;
        lines.push(format!(
            "{} -> {}",
            row.predicted.map(|t| t.to_string()).unwrap_or_default(),
            row.observed
        ));
    }
    outcome(ok, lines.join(", "))
}

fn c6_rate() -> Outcome {
    let cfg = both();
    let t = integrate(&cfg, 1.0, 1.0, 100.0, &IntegrateOptions::default()).unwrap();
    let rep = estimate_blowup_rate(&cfg, &t).unwrap();
    let band = rep.psi_band.1 / rep.psi_band.0;
    outcome(
        rel(rep.rate_u, rep.predicted_rate) < 0.05 && band < 10.0,
        format!(
            "R = {:.10}, rate {:.7} vs {:.7}, Psi' Psi^-sigma band ratio {band:.6}",
            rep.r_max, rep.rate_u, rep.predicted_rate
        ),
    )
}

fn c7_asymptotics() -> Outcome {
    let cfg = bounded();
    let t = integrate(&cfg, 1.0, 1.0, 1e4, &long_options()).unwrap();
    let rep = convergence_report(&cfg, &t).unwrap();
    let ok = t.terminal == Terminal::ReachedRmax
        && rep.slope_u_deviation < 1e-2
        && rep.slope_v_deviation < 1e-2
        && rep.a_deviation < 0.1
        && rep.b_deviation < 0.1
        && rep.equilibrium_distance < 1e-2;
    outcome(
        ok,
        format!(
            "slopes {:.6}/{:.6} (dev {:.1e}/{:.1e}), A/B dev {:.1e}/{:.1e}, distance to rest point {:.1e}",
            rep.slope_u,
            rep.slope_v,
            rep.slope_u_deviation,
            rep.slope_v_deviation,
            rep.a_deviation,
            rep.b_deviation,
            rep.equilibrium_distance
        ),
    )
}

fn c8_picard() -> Outcome {
    let (gap, rho) = picard_gap(&bounded(), 1.0, 1.0, 0.1).unwrap();
    outcome(gap < 1e-6, format!("sup-norm gap {gap:.2e} on [0, {rho}]"))
}

fn c9_bounds() -> Outcome {
    let mut radial = 0;
    let mut dynamic = 0;
    let mut runs = 0;
    for (cfg, traj) in reference_runs().unwrap() {
        runs += 1;
        radial += check_estimates(&cfg, &traj).len();
        if cfg.delta() > 0.0 && traj.terminal == Terminal::ReachedRmax {
            dynamic += lemma_l2c_check(&cfg, &dyn_image(&cfg, &traj).unwrap())
                .unwrap()
                .len();
        }
    }
    outcome(
        radial == 0 && dynamic == 0,
        format!("{radial} radial and {dynamic} reduced-flow violations over {runs} trajectories"),
    )
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.gen_range(lo.ln()..hi.ln()).exp()
}

fn c10_monotone() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 10);
    let mut non_coop = 0;
    for _ in 0..20 {
        let cfg = random_config(&mut rng, true);
        let samples: Vec<[f64; 3]> = (0..1000)
            .map(|_| [(); 3].map(|_| log_uniform(&mut rng, 1e-3, 1e3)))
            .collect();
        let rep = cooperativity_check(&cfg, &samples);
        if !(rep.cooperative && rep.irreducible) {
            non_coop += 1;
        }
    }
    let times: Vec<f64> = (1..=100).map(|i| 0.5 * i as f64).collect();
    let mut inversions = 0;
    for _ in 0..100 {
        let cfg = random_config(&mut rng, true);
        let eq = equilibrium(&cfg).unwrap();
        let lo = DynState {
            t: 0.0,
            x: eq.x_inf,
            y: eq.y_inf * log_uniform(&mut rng, 0.2, 5.0),
            z: eq.z_inf * log_uniform(&mut rng, 0.2, 5.0),
            w: eq.w_inf * log_uniform(&mut rng, 0.2, 5.0),
        };
        let hi = DynState {
            y: lo.y * rng.gen_range(1.0..2.0),
            z: lo.z * rng.gen_range(1.0..2.0),
            w: lo.w * rng.gen_range(1.0..2.0),
            ..lo
        };
        let a = flow_on_grid(&cfg, &lo, &times, 1e-10);
        let b = flow_on_grid(&cfg, &hi, &times, 1e-10);
        if a.len() != b.len() {
            inversions += 1;
            continue;
        }
        for (x, y) in a.iter().zip(&b) {
            for (l, h) in x.yzw().iter().zip(y.yzw()) {
                if *l > h * (1.0 + 1e-9) {
                    inversions += 1;
                }
            }
        }
    }
    outcome(
        non_coop == 0 && inversions == 0,
        format!("{non_coop} of 20 configs not cooperative; {inversions} order inversions over 100 pairs to t = 50"),
    )
}

fn c11_uniqueness() -> Outcome {
    let gap = startup_gap(&bounded(), 1.0, 1.0).unwrap();
    outcome(
        gap <= 1e-6,
        format!("startup at r0 and r0/10 differ by {gap:.2e} at r = 1"),
    )
}

fn c12_scaling() -> Outcome {
    let mut worst = 0.0f64;
    for cfg in [bounded(), both()] {
        let t = integrate(&cfg, 1.0, 1.0, 100.0, &IntegrateOptions::default()).unwrap();
        for lambda in [0.5, 2.0] {
            let s = scale_solution(&cfg, &t, lambda).unwrap();
            worst = worst.max(scaling_residual(&cfg, &t, &s, lambda).unwrap());
        }
    }
    outcome(
        worst <= 1e-8,
        format!("worst residual {worst:.2e} for lambda in {{0.5, 2}}"),
    )
}

fn main() {
    let mut ledger = Ledger { failed: Vec::new() };
    ledger.run(1, secs(1), c1_classifiers);
    ledger.run(2, secs(1), || suite("singular"));
    ledger.run(3, secs(1), || suite("identities"));
    ledger.run(4, secs(1), c4_stability);
    ledger.run(5, secs(30), c5_regimes);
    ledger.run(6, secs(30), c6_rate);
    ledger.run(7, secs(60), c7_asymptotics);
    ledger.run(8, secs(10), c8_picard);
    ledger.run(9, secs(90), c9_bounds);
    ledger.run(10, secs(30), c10_monotone);
    ledger.run(11, secs(10), c11_uniqueness);
    ledger.run(12, secs(10), c12_scaling);
    if !ledger.failed.is_empty() {
        eprintln!("failed criteria: {:?}", ledger.failed);
        std::process::exit(1);
    }
    println!("all 12 criteria passed");
}
