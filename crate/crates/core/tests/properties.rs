use khessian::asymptotics::{profile, singular_residual};
use khessian::dynamics::{equilibrium, identity_defects, stability, yzw_field};
use khessian::picard::{apply_t, GridFunctionPair};
use khessian::radial::RadialState;
use khessian::{classify, classify_sigma, validate, ExponentConfig, RegimeTag};
use proptest::prelude::*;

/// Valid configurations with `k > m`.
fn configs() -> impl Strategy<Value = ExponentConfig> {
    (
        2u32..=8,
        0.0..1.0f64,
        0.0..0.95f64,
        0.0..0.95f64,
        0.0..4.0f64,
        0.01..4.0f64,
    )
        .prop_filter_map("invalid exponents", |(n, kf, mf, sf, p, q)| {
            let k = 1 + (kf * n as f64) as u32;
            let k = k.min(n) as f64;
            let (m, s) = (mf * k, sf * k);
            validate(n as f64, k, m, s + p, q, s).ok()
        })
}

fn global_configs() -> impl Strategy<Value = ExponentConfig> {
    configs().prop_filter("delta <= 0", |c| c.delta() > 0.0)
}

fn states() -> impl Strategy<Value = RadialState> {
    prop::array::uniform5(-2.3..2.3f64).prop_map(|l| RadialState {
        r: l[0].exp(),
        u: l[1].exp(),
        du: l[2].exp(),
        v: l[3].exp(),
        dv: l[4].exp(),
        p_mom: 0.0,
        q_mom: 0.0,
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn classifiers_agree(cfg in configs()) {
        prop_assume!(cfg.p > 0.0);
        prop_assert_eq!(classify(&cfg).tag, classify_sigma(&cfg).unwrap().tag);
    }

    #[test]
    fn bounded_iff_delta_positive(cfg in configs()) {
        prop_assert_eq!(classify(&cfg).tag == RegimeTag::Bounded, cfg.delta() > 0.0);
    }

    #[test]
    fn delta_positive_forces_k_above_s(cfg in global_configs()) {
        prop_assert!(cfg.kf() > cfg.s);
    }

    #[test]
    fn identities_hold(cfg in configs(), st in states()) {
        let (eu, ev) = identity_defects(&cfg, &st).unwrap();
        prop_assert!(eu <= 1e-11 && ev <= 1e-11, "{} {}", eu, ev);
    }

    #[test]
    fn scaling_exponents_balance_both_equations(cfg in global_configs()) {
        let (g, h) = cfg.scaling_exponents();
        let (k, m, p, q, s) = (cfg.kf(), cfg.m, cfg.p, cfg.q, cfg.s);
        let tol = 1e-9 * (1.0 + g.abs() + h.abs()) * (1.0 + k + p + q);
        prop_assert!((k * (g - 2.0) - m * (g - 1.0) - p * h).abs() < tol);
        prop_assert!((k * (h - 2.0) - q * (g - 1.0) - s * h).abs() < tol);
        let (au, av) = cfg.alpha();
        prop_assert!((au - g).abs() <= 1e-12 * g.abs().max(1.0));
        prop_assert!((av - h).abs() <= 1e-12 * h.abs().max(1.0));
    }

    #[test]
    fn equilibrium_is_a_positive_rest_point(cfg in global_configs()) {
        let eq = equilibrium(&cfg).unwrap();
        prop_assert!(eq.y_inf > 0.0 && eq.z_inf > 0.0 && eq.w_inf > 0.0);
        let f = yzw_field(&cfg, eq.y_inf, eq.z_inf, eq.w_inf);
        let scale = eq.y_inf.max(eq.z_inf).max(eq.w_inf).powi(2);
        for c in f {
            prop_assert!(c.abs() <= 1e-10 * scale, "{:?}", f);
        }
    }

    #[test]
    fn interior_rest_point_is_stable(cfg in global_configs()) {
        let st = stability(&cfg).unwrap();
        prop_assert!(st.a > 0.0 && st.b > 0.0 && st.c > 0.0);
        prop_assert!(st.ab_gt_9c && st.stable);
    }

    #[test]
    fn singular_pair_is_exact(cfg in global_configs()) {
        prop_assert!(singular_residual(&cfg, &[0.1, 1.0, 10.0, 100.0]).unwrap() <= 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn picard_iterates_increase(cfg in configs(), la in -1.0..1.0f64, lb in -1.0..1.0f64) {
        let (a, b) = (la.exp(), lb.exp());
        let mut cur = GridFunctionPair::seed(a, b, 0.05, 64);
        for _ in 0..4 {
            let next = apply_t(&cfg, a, b, &cur).unwrap();
            for i in 0..next.len() {
                let slack = 1e-12 * next.u_vals[i].abs().max(next.v_vals[i].abs());
                prop_assert!(next.u_vals[i] + slack >= cur.u_vals[i]);
                prop_assert!(next.v_vals[i] + slack >= cur.v_vals[i]);
            }
            for w in next.u_vals.windows(2).chain(next.v_vals.windows(2)) {
                prop_assert!(w[1] >= w[0]);
            }
            cur = next;
        }
    }

    #[test]
    fn constants_decrease_with_dimension(cfg in global_configs()) {
        let up = validate(cfg.nf() + 1.0, cfg.kf(), cfg.m, cfg.p, cfg.q, cfg.s).unwrap();
        let (lo, hi) = (profile(&cfg).unwrap(), profile(&up).unwrap());
        prop_assert!(hi.ln_a <= lo.ln_a + 1e-12 * lo.ln_a.abs().max(1.0));
        prop_assert!(hi.ln_b <= lo.ln_b + 1e-12 * lo.ln_b.abs().max(1.0));
    }
}
