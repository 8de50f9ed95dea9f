//! Property tests of the structural invariants: positivity and monotonicity
//! of the flow parametrization, the pathwise decomposition identity, solver
//! residuals, and statistic ranges.

use proptest::prelude::*;

use azema::analysis;
use azema::rng::SeedSpec;
use azema::sampler::{flow_elapsed, sample_jump_waiting_time, simulate_path, AzemaParams};
use azema::stats;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn waiting_times_are_positive(
        beta in -3.0..3.0f64,
        n in 1u64..1000,
        z0 in -5.0..5.0f64,
        u in 1e-6..0.999_999f64,
    ) {
        let dt = sample_jump_waiting_time(z0, beta, n, u);
        prop_assert!(dt > 0.0, "dt = {dt}");
    }

    #[test]
    fn flow_elapsed_is_decreasing_in_v(
        beta in -2.5..2.5f64,
        n in 1u64..300,
        z0 in -3.0..3.0f64,
        a in 0.01..0.98f64,
        gap in 0.001..0.5f64,
    ) {
        let v_lo = a;
        let v_hi = (a + gap).min(0.999);
        prop_assume!(v_hi > v_lo);
        let lo = flow_elapsed(z0, beta, n, v_hi);
        let hi = flow_elapsed(z0, beta, n, v_lo);
        prop_assert!(hi >= lo, "elapsed({v_lo}) = {hi} < elapsed({v_hi}) = {lo}");
    }

    #[test]
    fn interior_evaluation_solves_the_flow_equation(
        beta in -2.5..1.5f64,
        n in 1u64..200,
        x0 in 0.05..2.0f64,
        negate in any::<bool>(),
        frac in 0.01..0.99f64,
        seed in 0u64..1_000_000,
    ) {
        prop_assume!(beta.abs() > 1e-3);
        let x0 = if negate { -x0 } else { x0 };
        let params = AzemaParams::new(beta, n, x0, 1.0, SeedSpec::new(seed, 0));
        let path = simulate_path(&params).unwrap();
        let seg = &path.segments[0];
        let t = seg.t_start + frac * seg.duration();
        let z = path.eval(t).unwrap();
        // Recover v from the flow value and plug it back into elapsed(v).
        let v = (z / seg.z_start).powf(1.0 / beta);
        let residual = (flow_elapsed(seg.z_start, beta, n, v) - (t - seg.t_start)).abs();
        prop_assert!(
            residual <= 1e-12 * (1.0 + t.abs()),
            "residual {residual} at beta={beta} n={n} x0={x0}"
        );
    }

    #[test]
    fn decomposition_identity_holds_on_random_paths(
        beta in -2.5..1.2f64,
        n in 1u64..100,
        x0 in -1.5..1.5f64,
        seed in 0u64..1_000_000,
    ) {
        let params = AzemaParams::new(beta, n, x0, 1.0, SeedSpec::new(seed, 1));
        let path = simulate_path(&params).unwrap();
        let rep = analysis::decomposition_report(&path, 1.0).unwrap();
        prop_assert!(
            rep.defect.abs() <= 1e-9 * (1.0 + rep.qv),
            "defect {} at beta={beta} n={n} x0={x0} seed={seed}",
            rep.defect
        );
    }

    #[test]
    fn time_residual_stays_in_unit_window(
        beta in -2.5..1.2f64,
        n in 1u64..100,
        x0 in -1.5..1.5f64,
        t in 0.0..1.0f64,
        seed in 0u64..1_000_000,
    ) {
        let params = AzemaParams::new(beta, n, x0, 1.0, SeedSpec::new(seed, 2));
        let path = simulate_path(&params).unwrap();
        let tr = analysis::time_residual(&path, t).unwrap();
        prop_assert!((0.0..=t + 1e-12).contains(&tr), "tr = {tr} at t = {t}");
    }

    #[test]
    fn occupation_time_is_monotone(
        delta in 0.01..1.0f64,
        bump in 0.01..1.0f64,
        t in 0.1..1.0f64,
        seed in 0u64..100_000,
    ) {
        let params = AzemaParams::new(-1.0, 16, 0.0, 1.0, SeedSpec::new(seed, 3));
        let path = simulate_path(&params).unwrap();
        let base = analysis::occupation_time(&path, delta, t).unwrap();
        let wider = analysis::occupation_time(&path, delta + bump, t).unwrap();
        let longer = analysis::occupation_time(&path, delta, (t + 0.2).min(1.0)).unwrap();
        prop_assert!(wider >= base - 1e-12);
        prop_assert!(longer >= base - 1e-12);
        prop_assert!(base >= 0.0 && base <= t + 1e-12);
    }

    #[test]
    fn kolmogorov_p_is_a_probability(
        d in 0.0..1.0f64,
        n in 10.0..100_000.0f64,
    ) {
        let p = stats::kolmogorov_p(d, n);
        prop_assert!((0.0..=1.0).contains(&p));
        // Monotone in d: a larger distance is never more plausible.
        let p2 = stats::kolmogorov_p((d + 0.05).min(1.0), n);
        prop_assert!(p2 <= p + 1e-12);
    }

    #[test]
    fn uniform_draws_stay_inside_open_interval(
        master in any::<u64>(),
        id in any::<u64>(),
    ) {
        let mut stream = SeedSpec::new(master, id).stream();
        for _ in 0..64 {
            let u = stream.draw_uniform();
            prop_assert!(u > 0.0 && u < 1.0);
        }
    }
}
