//! Adaptive Dormand-Prince 5(4) integration over fixed-size state arrays.

#[derive(Debug, Clone, Copy)]
pub struct Tolerances<const D: usize> {
    pub rtol: f64,
    /// Per-component absolute tolerance; zero gives a purely relative test.
    pub atol: [f64; D],
}

#[derive(Debug, Clone, Copy)]
pub struct StepperOptions<const D: usize> {
    pub tol: Tolerances<D>,
    /// First trial step; the controller adapts from there.
    pub h_init: f64,
    /// A step below `min_step_rel * |x|` counts as underflow.
    pub min_step_rel: f64,
    pub max_steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    /// Landed on the last checkpoint.
    Reached,
    /// The observer asked to stop.
    Stopped,
    StepUnderflow,
    MaxSteps,
}

#[derive(Debug, Clone, Copy)]
pub struct RunStats {
    pub accepted: usize,
    pub rejected: usize,
    /// Last proposed step size.
    pub h: f64,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// b - b*, the embedded error weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn combine<const D: usize>(y: &[f64; D], h: f64, terms: &[(f64, &[f64; D])]) -> [f64; D] {
    let mut out = *y;
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        *o += h * acc;
    }
    out
}

fn finite<const D: usize>(y: &[f64; D]) -> bool {
    y.iter().all(|v| v.is_finite())
}

/// Integrates `y' = f(x, y)` from `x0` through each checkpoint in turn, landing
/// exactly on every checkpoint. `observer` sees every accepted state (including
/// checkpoints) together with a flag telling whether it is a checkpoint.
///
/// Stage evaluations returning non-finite values are treated as a failed step.
pub fn integrate<const D: usize, F, O>(
    mut f: F,
    x0: f64,
    y0: [f64; D],
    checkpoints: &[f64],
    opts: &StepperOptions<D>,
    mut observer: O,
) -> (Outcome, RunStats)
where
    F: FnMut(f64, &[f64; D]) -> [f64; D],
    O: FnMut(f64, &[f64; D], bool) -> Control,
{
    let mut stats = RunStats {
        accepted: 0,
        rejected: 0,
        h: opts.h_init,
    };
    let Some(&x_end) = checkpoints.last() else {
        return (Outcome::Reached, stats);
    };
    let dir = if x_end >= x0 { 1.0 } else { -1.0 };
    let mut x = x0;
    let mut y = y0;
    let mut h = opts.h_init.abs().max(f64::MIN_POSITIVE) * dir;
    let mut k1 = f(x, &y);
    let mut next_cp = 0;
    while next_cp < checkpoints.len() && (checkpoints[next_cp] - x) * dir <= 0.0 {
        next_cp += 1;
    }

    while next_cp < checkpoints.len() {
        if stats.accepted + stats.rejected >= opts.max_steps {
            stats.h = h;
            return (Outcome::MaxSteps, stats);
        }
        let target = checkpoints[next_cp];
        let mut lands = false;
        if (x + h - target) * dir >= 0.0 {
            h = target - x;
            lands = true;
        }
        if h.abs() < opts.min_step_rel * x.abs().max(f64::MIN_POSITIVE) && !lands {
            stats.h = h;
            return (Outcome::StepUnderflow, stats);
        }

        let k2 = f(x + C2 * h, &combine(&y, h, &[(A21, &k1)]));
        let k3 = f(x + C3 * h, &combine(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(
            x + C4 * h,
            &combine(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]),
        );
        let k5 = f(
            x + C5 * h,
            &combine(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let k6 = f(
            x + h,
            &combine(
                &y,
                h,
                &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
            ),
        );
        let y_new = combine(
            &y,
            h,
            &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)],
        );
        let x_new = if lands { target } else { x + h };
        let k7 = f(x_new, &y_new);

        let ok = finite(&y_new) && finite(&k7);
        let mut err = 0.0f64;
        if ok {
            for i in 0..D {
                let e = h
                    * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                let sc = opts.tol.atol[i] + opts.tol.rtol * y[i].abs().max(y_new[i].abs());
                let ratio = if sc > 0.0 {
                    e.abs() / sc
                } else if e == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                };
                err = err.max(ratio);
            }
        }
        if !ok || !err.is_finite() {
            stats.rejected += 1;
            h *= 0.2;
            continue;
        }

        if err <= 1.0 {
            stats.accepted += 1;
            x = x_new;
            y = y_new;
            k1 = k7;
            let fac = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            let h_next = h * fac;
            if lands {
                next_cp += 1;
            }
            if observer(x, &y, lands) == Control::Stop {
                stats.h = h_next;
                return (Outcome::Stopped, stats);
            }
            // Landing truncates the step; keep the controller's proposal instead.
            h = if lands {
                h_next.abs().max(stats.h.abs()) * dir
            } else {
                h_next
            };
            stats.h = h;
        } else {
            stats.rejected += 1;
            h *= (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
        }
    }
    (Outcome::Reached, stats)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts<const D: usize>(rtol: f64) -> StepperOptions<D> {
        StepperOptions {
            tol: Tolerances {
                rtol,
                atol: [1e-14; D],
            },
            h_init: 1e-3,
            min_step_rel: 1e-14,
            max_steps: 1_000_000,
        }
    }

    #[test]
    fn exponential_decay_is_accurate() {
        let mut last = [0.0];
        let (out, _) = integrate(
            |_, y: &[f64; 1]| [-y[0]],
            0.0,
            [1.0],
            &[5.0],
            &opts(1e-10),
            |_, y, _| {
                last = *y;
                Control::Continue
            },
        );
        assert_eq!(out, Outcome::Reached);
        assert!((last[0] - (-5f64).exp()).abs() < 1e-11);
    }

    #[test]
    fn harmonic_oscillator_lands_on_checkpoints() {
        let cps: Vec<f64> = (1..=10).map(|i| i as f64 * 0.7).collect();
        let mut hits = Vec::new();
        integrate(
            |_, y: &[f64; 2]| [y[1], -y[0]],
            0.0,
            [0.0, 1.0],
            &cps,
            &opts(1e-11),
            |x, y, cp| {
                if cp {
                    hits.push((x, y[0]));
                }
                Control::Continue
            },
        );
        assert_eq!(hits.len(), cps.len());
        for ((x, s), cp) in hits.iter().zip(&cps) {
            assert_eq!(x, cp);
            assert!((s - x.sin()).abs() < 1e-9);
        }
    }

    #[test]
    fn finite_time_blowup_underflows() {
        // y' = y^2, y(0) = 1 blows up at x = 1.
        let mut last_x = 0.0;
        let (out, _) = integrate(
            |_, y: &[f64; 1]| [y[0] * y[0]],
            0.0,
            [1.0],
            &[2.0],
            &opts(1e-9),
            |x, _, _| {
                last_x = x;
                Control::Continue
            },
        );
        assert_eq!(out, Outcome::StepUnderflow);
        assert!(last_x < 1.0 && last_x > 1.0 - 1e-9);
    }

    #[test]
    fn observer_can_stop() {
        let (out, stats) = integrate(
            |_, y: &[f64; 1]| [y[0]],
            0.0,
            [1.0],
            &[10.0],
            &opts(1e-8),
            |_, y, _| {
                if y[0] > 100.0 {
                    Control::Stop
                } else {
                    Control::Continue
                }
            },
        );
        assert_eq!(out, Outcome::Stopped);
        assert!(stats.accepted > 0);
    }
}
