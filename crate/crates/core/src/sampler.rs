//! Exact event-driven simulation of the linear-case jump process.
//!
//! The process with structure coefficient f(x) = βx jumps from x to
//! (1+β)x ± 1/√n at rate 1/(1/n + β²x²) and follows a deterministic flow in
//! between. Both the waiting time to the next jump and the inter-jump flow
//! have closed forms in the survival parameter v ∈ (0,1]:
//!
//! ```text
//! elapsed(v) = −(1/n)·ln v − (β·z₀²/2)·(v^(2β) − 1),      z(v) = z₀·v^β
//! ```
//!
//! so one uniform draw per segment yields the exact jump time, and arbitrary
//! interior times are recovered by inverting the strictly decreasing map
//! elapsed(v). β = 0 is handled everywhere by its analytic limit
//! (exponential waiting −(1/n)·ln u, constant flow, jump x → x ± 1/√n).

use crate::error::{Error, Result};
use crate::path::{Jump, PathKind, PathSegment, SamplePath};
use crate::rng::{SeedSpec, Stream};

/// Default cap on segments per path; guards runaway jump cascades (β > 0
/// growth has no a-priori bound).
pub const DEFAULT_SEGMENT_CAP: u64 = 1_000_000_000;

/// Full parameterization of one closed-form simulation.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct AzemaParams {
    /// Structure-equation parameter β.
    pub beta: f64,
    /// Scale: jump-rate ceiling and inverse squared jump size.
    pub n: u64,
    /// Starting value Z₀.
    pub x0: f64,
    /// Simulation horizon.
    pub t_max: f64,
    pub seed: SeedSpec,
    /// Abort threshold for segments per path.
    pub max_segments: u64,
}

impl AzemaParams {
    pub fn new(beta: f64, n: u64, x0: f64, t_max: f64, seed: SeedSpec) -> Self {
        Self {
            beta,
            n,
            x0,
            t_max,
            seed,
            max_segments: DEFAULT_SEGMENT_CAP,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(Error::InvalidParams("n must be >= 1".into()));
        }
        if !(self.t_max > 0.0) || !self.t_max.is_finite() {
            return Err(Error::InvalidParams("t_max must be positive".into()));
        }
        if !self.beta.is_finite() || !self.x0.is_finite() {
            return Err(Error::InvalidParams("beta and x0 must be finite".into()));
        }
        Ok(())
    }
}

/// Elapsed flow time when the survival parameter has decayed from 1 to v,
/// starting at z_start. Equals the jump waiting time at v = u.
pub fn flow_elapsed(z_start: f64, beta: f64, n: u64, v: f64) -> f64 {
    let nf = n as f64;
    let log_term = -v.ln() / nf;
    if beta == 0.0 || z_start == 0.0 {
        return log_term;
    }
    let pow = v.powf(2.0 * beta);
    // Deeply negative β with tiny v overflows v^(2β); the waiting time is
    // then effectively infinite and the horizon censors the segment.
    if !pow.is_finite() {
        return f64::INFINITY;
    }
    // The flow term β·z₀²·(1 − v^(2β))/2 is nonnegative for every β, so the
    // elapsed time is bounded below by the log term; enforcing that guards
    // against last-ulp sign noise in the power.
    (log_term + 0.5 * beta * z_start * z_start * (1.0 - pow)).max(log_term)
}

/// Waiting time to the next jump given the uniform draw u ∈ (0,1).
pub fn sample_jump_waiting_time(x0: f64, beta: f64, n: u64, u: f64) -> f64 {
    flow_elapsed(x0, beta, n, u)
}

fn d_flow_elapsed_dv(z_start: f64, beta: f64, n: u64, v: f64) -> f64 {
    let nf = n as f64;
    -1.0 / (nf * v) - beta * beta * z_start * z_start * v.powf(2.0 * beta - 1.0)
}

fn solve_flow_parameter_impl(
    z_start: f64,
    beta: f64,
    n: u64,
    v_floor: f64,
    tau: f64,
    bisections: u32,
    rel_width: f64,
) -> f64 {
    if tau <= 0.0 {
        return 1.0;
    }
    if beta == 0.0 || z_start == 0.0 {
        return (-(n as f64) * tau).exp().max(v_floor.min(1.0)).min(1.0);
    }
    // elapsed(v) decreases strictly from elapsed(v_floor) >= tau to 0 at v=1.
    let mut lo = v_floor;
    let mut hi = 1.0f64;
    for _ in 0..bisections {
        if hi - lo <= rel_width * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if flow_elapsed(z_start, beta, n, mid) > tau {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // Newton polish on the bracket midpoint.
    let mut v = 0.5 * (lo + hi);
    for _ in 0..3 {
        let f = flow_elapsed(z_start, beta, n, v) - tau;
        let df = d_flow_elapsed_dv(z_start, beta, n, v);
        if !f.is_finite() || !df.is_finite() || df == 0.0 {
            break;
        }
        let next = v - f / df;
        if next > lo && next < hi {
            v = next;
        } else {
            break;
        }
    }
    v
}

/// Inverts elapsed(v) = tau for v ∈ [v_floor, 1] (bisection to relative
/// width 1e−12, Newton polish).
pub(crate) fn solve_flow_parameter(z_start: f64, beta: f64, n: u64, v_floor: f64, tau: f64) -> f64 {
    solve_flow_parameter_impl(z_start, beta, n, v_floor, tau, 60, 1e-12)
}

/// High-precision re-solve used as the independent route in flow identity
/// checks.
pub(crate) fn solve_flow_parameter_hp(
    z_start: f64,
    beta: f64,
    n: u64,
    v_floor: f64,
    tau: f64,
) -> f64 {
    solve_flow_parameter_impl(z_start, beta, n, v_floor, tau, 200, 0.0)
}

/// Draws one segment from state (t, z). Censors at the horizon, retaining
/// the drawn u so evaluation past the last jump stays exact.
pub fn step(state: (f64, f64), params: &AzemaParams, stream: &mut Stream) -> PathSegment {
    let (t, z) = state;
    let u = stream.draw_uniform();
    let dt = sample_jump_waiting_time(z, params.beta, params.n, u);
    let t_jump = t + dt;
    if !(t_jump < params.t_max) {
        return PathSegment {
            t_start: t,
            z_start: z,
            u,
            t_end: params.t_max,
            trace: None,
            jump: None,
        };
    }
    // Pathological rounding can collapse dt to zero near u = 1; keep the
    // segment times strictly increasing.
    let t_end = if t_jump > t { t_jump } else { t.next_up() };
    let eps = stream.draw_sign();
    // z = 0 must stay 0 even when u^β overflows.
    let z_pre = if params.beta == 0.0 || z == 0.0 {
        z
    } else {
        z * u.powf(params.beta)
    };
    let z_post = (1.0 + params.beta) * z_pre + eps / (params.n as f64).sqrt();
    PathSegment {
        t_start: t,
        z_start: z,
        u,
        t_end,
        trace: None,
        jump: Some(Jump { eps, z_pre, z_post }),
    }
}

/// Simulates one full path on [0, t_max].
pub fn simulate_path(params: &AzemaParams) -> Result<SamplePath> {
    params.validate()?;
    let mut stream = params.seed.stream();
    let mut segments = Vec::new();
    let mut t = 0.0;
    let mut z = params.x0;
    loop {
        if segments.len() as u64 >= params.max_segments {
            return Err(Error::SegmentCapExceeded {
                cap: params.max_segments,
                t,
            });
        }
        let seg = step((t, z), params, &mut stream);
        let done = seg.censored();
        t = seg.t_end;
        if let Some(j) = &seg.jump {
            z = j.z_post;
        }
        segments.push(seg);
        if done {
            break;
        }
        if t >= params.t_max {
            break;
        }
    }
    Ok(SamplePath {
        kind: PathKind::Linear { beta: params.beta },
        n: params.n,
        x0: params.x0,
        t_max: params.t_max,
        seed: params.seed,
        segments,
    })
}

/// Terminal value Z_{t_max} without storing the path.
pub fn simulate_marginal(params: &AzemaParams) -> Result<f64> {
    params.validate()?;
    let mut stream = params.seed.stream();
    let mut t = 0.0;
    let mut z = params.x0;
    let mut count: u64 = 0;
    loop {
        if count >= params.max_segments {
            return Err(Error::SegmentCapExceeded {
                cap: params.max_segments,
                t,
            });
        }
        count += 1;
        let seg = step((t, z), params, &mut stream);
        if seg.censored() {
            let path_stub = SamplePath {
                kind: PathKind::Linear { beta: params.beta },
                n: params.n,
                x0: params.x0,
                t_max: params.t_max,
                seed: params.seed,
                segments: vec![seg],
            };
            let seg_ref = &path_stub.segments[0];
            return Ok(path_stub.flow_value(seg_ref, params.t_max));
        }
        t = seg.t_end;
        z = seg.jump.as_ref().map(|j| j.z_post).unwrap_or(z);
        if t >= params.t_max {
            return Ok(z);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SEED: SeedSpec = SeedSpec {
        master_seed: 42,
        stream_id: 0,
    };

    #[test]
    fn waiting_time_x0_zero_kills_flow_term() {
        let u = (-1.0f64).exp();
        let dt = sample_jump_waiting_time(0.0, -1.0, 1, u);
        assert!((dt - 1.0).abs() < 1e-15, "dt = {dt}");
    }

    #[test]
    fn waiting_time_matches_renewal_law_at_unit_scale() {
        // β=−1, n=1, |x0|=1 recovers −ln u + 1/(2u²) − 1/2.
        let dt = sample_jump_waiting_time(1.0, -1.0, 1, 0.5);
        let expected = -(0.5f64).ln() + 1.0 / (2.0 * 0.25) - 0.5;
        assert!((dt - expected).abs() < 1e-12, "dt = {dt}, want {expected}");
        assert!((dt - 2.193_147_180_559_945_4).abs() < 1e-12);
    }

    #[test]
    fn waiting_time_beta_zero_limit() {
        let dt = sample_jump_waiting_time(5.0, 0.0, 100, 0.9);
        let expected = -(0.9f64).ln() / 100.0;
        assert_eq!(dt, expected);
        assert!((dt - 1.053_605_156_578_262_8e-3).abs() < 1e-18);
    }

    #[test]
    fn waiting_time_overflow_censors() {
        let dt = sample_jump_waiting_time(1.0, -400.0, 1, 1e-3);
        assert!(dt.is_infinite());
    }

    #[test]
    fn jump_rule_special_cases() {
        let params = AzemaParams::new(-1.0, 4, 0.7, 10.0, SEED);
        let mut stream = params.seed.stream();
        let seg = step((0.0, 0.7), &params, &mut stream);
        let j = seg.jump.expect("horizon is generous");
        // (1+β) = 0: |z| is exactly 1/√n after every jump.
        assert_eq!(j.z_post.abs(), 0.5);

        let params2 = AzemaParams::new(-2.0, 4, 0.7, 1e6, SEED);
        let mut stream2 = params2.seed.stream();
        let seg2 = step((0.0, 0.7), &params2, &mut stream2);
        let j2 = seg2.jump.expect("jump");
        assert!((j2.z_post - (-j2.z_pre + j2.eps / 2.0)).abs() < 1e-15);

        let params3 = AzemaParams::new(0.0, 4, 0.7, 1e6, SEED);
        let mut stream3 = params3.seed.stream();
        let seg3 = step((0.0, 0.7), &params3, &mut stream3);
        let j3 = seg3.jump.expect("jump");
        assert_eq!(j3.z_pre, 0.7);
        assert!((j3.z_post - (0.7 + j3.eps / 2.0)).abs() < 1e-15);
    }

    #[test]
    fn simulate_rejects_bad_params() {
        assert!(simulate_path(&AzemaParams::new(-1.0, 1, 0.0, 0.0, SEED)).is_err());
        assert!(simulate_path(&AzemaParams::new(-1.0, 0, 0.0, 1.0, SEED)).is_err());
        assert!(simulate_path(&AzemaParams::new(f64::NAN, 1, 0.0, 1.0, SEED)).is_err());
        // Tiny horizon still yields at least one (censored) segment.
        let p = simulate_path(&AzemaParams::new(-1.0, 1, 0.0, 1e-9, SEED)).unwrap();
        assert!(!p.segments.is_empty());
    }

    #[test]
    fn segment_cap_aborts_with_diagnostic() {
        let mut params = AzemaParams::new(0.0, 100, 0.0, 10.0, SEED);
        params.max_segments = 3;
        match simulate_path(&params) {
            Err(crate::error::Error::SegmentCapExceeded { cap: 3, .. }) => {}
            other => panic!("expected segment cap error, got {other:?}"),
        }
    }

    #[test]
    fn eval_rejects_out_of_range_times() {
        let path = simulate_path(&AzemaParams::new(-1.0, 4, 0.0, 1.0, SEED)).unwrap();
        assert!(path.eval(-0.1).is_err());
        assert!(path.eval(1.1).is_err());
        assert!(path.eval(1.0).is_ok());
    }

    #[test]
    fn path_tiles_horizon_exactly() {
        let params = AzemaParams::new(-0.5, 10, 0.3, 2.0, SEED);
        let path = simulate_path(&params).unwrap();
        assert_eq!(path.segments[0].t_start, 0.0);
        for w in path.segments.windows(2) {
            assert_eq!(w[0].t_end, w[1].t_start);
            assert!(w[0].t_end > w[0].t_start);
        }
        assert_eq!(path.segments.last().unwrap().t_end, 2.0);
        assert_eq!(
            path.jump_count(),
            path.segments.iter().filter(|s| !s.censored()).count() as u64
        );
    }

    #[test]
    fn marginal_matches_full_simulation() {
        for (beta, n, x0) in [
            (-1.0, 10, 0.0),
            (-2.0, 4, 0.5),
            (0.0, 25, -1.0),
            (1.0, 8, 0.1),
        ] {
            let params = AzemaParams::new(beta, n, x0, 1.5, SEED);
            let path = simulate_path(&params).unwrap();
            let lean = simulate_marginal(&params).unwrap();
            let full = path.eval(1.5).unwrap();
            assert!(
                (lean - full).abs() <= 1e-12 * (1.0 + full.abs()),
                "beta={beta}: {lean} vs {full}"
            );
        }
    }

    #[test]
    fn expected_jump_count_at_beta_zero_is_poisson_rate() {
        // Rate n Poisson process: mean jumps over [0,1] ≈ n, tolerance
        // 4·sqrt(n/M).
        let n = 50u64;
        let m = 10_000u64;
        let mut total = 0u64;
        for i in 0..m {
            let params = AzemaParams::new(0.0, n, 0.0, 1.0, SeedSpec::new(7, i));
            total += simulate_path(&params).unwrap().jump_count();
        }
        let mean = total as f64 / m as f64;
        let tol = 4.0 * ((n as f64) / m as f64).sqrt();
        assert!(
            (mean - n as f64).abs() < tol,
            "mean {mean} vs {n}, tol {tol}"
        );
    }

    #[test]
    fn eval_at_boundaries_and_interior() {
        let params = AzemaParams::new(-0.5, 10, 0.4, 1.0, SEED);
        let path = simulate_path(&params).unwrap();
        let seg = &path.segments[0];
        // t = t_start → v = 1 → z = z_start.
        assert_eq!(path.eval(seg.t_start).unwrap(), seg.z_start);
        // Interior: plug the solved v back into the elapsed formula.
        let t = seg.t_start + 0.37 * seg.duration();
        let z = path.eval(t).unwrap();
        let v = (z / seg.z_start).powf(1.0 / -0.5);
        let residual = (flow_elapsed(seg.z_start, -0.5, 10, v) - (t - seg.t_start)).abs();
        assert!(residual <= 1e-12 * (1.0 + t.abs()), "residual {residual}");
        // Right continuity at a jump time.
        let j = seg.jump.as_ref().unwrap();
        assert_eq!(path.eval(seg.t_end).unwrap(), j.z_post);
    }

    #[test]
    fn beta_zero_flow_is_constant_on_segments() {
        let params = AzemaParams::new(0.0, 5, 1.3, 1.0, SEED);
        let path = simulate_path(&params).unwrap();
        let seg = &path.segments[0];
        for k in 1..10 {
            let t = seg.t_start + seg.duration() * k as f64 / 10.0;
            assert_eq!(path.eval(t).unwrap(), seg.z_start);
        }
    }

    #[test]
    fn flow_identity_residuals_small() {
        let params = AzemaParams::new(-0.5, 10, 0.8, 4.0, SEED);
        let path = simulate_path(&params).unwrap();
        for idx in 0..path.segments.len().min(20) {
            let defect = path.flow_identity_check(idx, 16).unwrap();
            assert!(defect <= 1e-10, "segment {idx} defect {defect}");
        }
        // β = 0: residual exactly zero.
        let flat = simulate_path(&AzemaParams::new(0.0, 10, 0.8, 1.0, SEED)).unwrap();
        assert_eq!(flat.flow_identity_check(0, 8).unwrap(), 0.0);
    }

    #[test]
    fn after_jump_magnitude_at_beta_minus_one() {
        let params = AzemaParams::new(-1.0, 9, 0.0, 3.0, SEED);
        let path = simulate_path(&params).unwrap();
        assert!(path.jump_count() > 0);
        for seg in &path.segments {
            if let Some(j) = &seg.jump {
                assert!((j.z_post.abs() - 1.0 / 3.0).abs() < 1e-15);
            }
        }
    }
}
