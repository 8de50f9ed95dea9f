//! Adaptive Dormand–Prince 5(4) integration of the coupled flow/hazard
//! system with event detection on the accumulated hazard.
//!
//! The state is (x, Λ) with ẋ = −f(x)/(1/n + f(x)²) and Λ̇ = 1/(1/n + f(x)²).
//! Integration stops at the first time Λ reaches a pre-drawn Exp(1) target
//! (the next jump) or at the horizon. The event time is localized inside the
//! bracketing step by safeguarded Newton/bisection on the step length, each
//! trial being a single embedded step from the step's start state, down to a
//! time tolerance of 1e−12·(1+t).

use crate::error::{Error, Result};
use crate::path::DenseTrace;
use crate::structure::{drift_and_rate, StructureFn};

// Dormand–Prince RK5(4)7M tableau.
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
// b − b̂: error estimator weights (5th minus embedded 4th order).
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const MAX_STEPS_PER_SEGMENT: u64 = 50_000_000;

#[derive(Clone, Copy)]
struct State {
    x: f64,
    lam: f64,
}

#[derive(Clone, Copy)]
struct Deriv {
    dx: f64,
    dlam: f64,
}

fn deriv(s: State, f: &StructureFn, n: u64) -> Deriv {
    let (dx, dlam) = drift_and_rate(s.x, f, n);
    Deriv { dx, dlam }
}

struct StepResult {
    next: State,
    err_x: f64,
    err_lam: f64,
}

fn dp45_step(y: State, k1: Deriv, h: f64, f: &StructureFn, n: u64) -> StepResult {
    let stage = |cx: f64, cl: f64| State {
        x: y.x + h * cx,
        lam: y.lam + h * cl,
    };
    let k2 = deriv(stage(A21 * k1.dx, A21 * k1.dlam), f, n);
    let k3 = deriv(
        stage(A31 * k1.dx + A32 * k2.dx, A31 * k1.dlam + A32 * k2.dlam),
        f,
        n,
    );
    let k4 = deriv(
        stage(
            A41 * k1.dx + A42 * k2.dx + A43 * k3.dx,
            A41 * k1.dlam + A42 * k2.dlam + A43 * k3.dlam,
        ),
        f,
        n,
    );
    let k5 = deriv(
        stage(
            A51 * k1.dx + A52 * k2.dx + A53 * k3.dx + A54 * k4.dx,
            A51 * k1.dlam + A52 * k2.dlam + A53 * k3.dlam + A54 * k4.dlam,
        ),
        f,
        n,
    );
    let k6 = deriv(
        stage(
            A61 * k1.dx + A62 * k2.dx + A63 * k3.dx + A64 * k4.dx + A65 * k5.dx,
            A61 * k1.dlam + A62 * k2.dlam + A63 * k3.dlam + A64 * k4.dlam + A65 * k5.dlam,
        ),
        f,
        n,
    );
    let next = State {
        x: y.x + h * (B1 * k1.dx + B3 * k3.dx + B4 * k4.dx + B5 * k5.dx + B6 * k6.dx),
        lam: y.lam + h * (B1 * k1.dlam + B3 * k3.dlam + B4 * k4.dlam + B5 * k5.dlam + B6 * k6.dlam),
    };
    let k7 = deriv(next, f, n);
    let err_x = h * (E1 * k1.dx + E3 * k3.dx + E4 * k4.dx + E5 * k5.dx + E6 * k6.dx + E7 * k7.dx);
    let err_lam = h
        * (E1 * k1.dlam + E3 * k3.dlam + E4 * k4.dlam + E5 * k5.dlam + E6 * k6.dlam + E7 * k7.dlam);
    StepResult {
        next,
        err_x,
        err_lam,
    }
}

fn error_norm(res: &StepResult, from: State, tol: f64) -> f64 {
    let scale_x = tol + tol * from.x.abs().max(res.next.x.abs());
    let scale_l = tol + tol * from.lam.abs().max(res.next.lam.abs());
    let ex = res.err_x / scale_x;
    let el = res.err_lam / scale_l;
    (0.5 * (ex * ex + el * el)).sqrt()
}

/// Outcome of integrating one segment.
pub struct EventOutcome {
    /// Elapsed time within the segment (equals `t_limit` when censored).
    pub dt: f64,
    /// Flow state at the event (pre-jump) or at the horizon.
    pub x_end: f64,
    /// Hazard accumulated over the segment.
    pub lam_end: f64,
    /// True when the hazard target was reached before the horizon.
    pub event: bool,
    /// Dense polyline trace (absolute times) for later evaluation.
    pub trace: DenseTrace,
}

/// Integrates from `x0` until the accumulated hazard reaches `target` or the
/// elapsed time reaches `t_limit`. `t_offset` is the absolute start time used
/// for the trace nodes.
pub fn integrate_to_event(
    x0: f64,
    f: &StructureFn,
    n: u64,
    target: f64,
    t_limit: f64,
    tol: f64,
    t_offset: f64,
) -> Result<EventOutcome> {
    if !(target > 0.0) {
        return Err(Error::InvalidParams(format!(
            "hazard target must be positive, got {target}"
        )));
    }
    let mut trace = DenseTrace {
        t: Vec::with_capacity(8),
        z: Vec::with_capacity(8),
        dz: Vec::with_capacity(8),
        lam: Vec::with_capacity(8),
        dlam: Vec::with_capacity(8),
    };
    let push_node = |t: f64, s: State, d: Deriv, trace: &mut DenseTrace| {
        trace.t.push(t_offset + t);
        trace.z.push(s.x);
        trace.dz.push(d.dx);
        trace.lam.push(s.lam);
        trace.dlam.push(d.dlam);
    };

    let mut t = 0.0f64;
    let mut y = State { x: x0, lam: 0.0 };
    let mut d = deriv(y, f, n);
    push_node(t, y, d, &mut trace);

    // Initial step sized from the constant-rate guess for the event time.
    let mut h = (target / d.dlam).min(t_limit).max(1e-12);
    let mut steps: u64 = 0;

    loop {
        steps += 1;
        if steps > MAX_STEPS_PER_SEGMENT {
            return Err(Error::StepSizeUnderflow { t: t_offset + t, h });
        }
        let clipped = h.min(t_limit - t);
        if clipped < 1e-15 * (1.0 + t) {
            // Horizon reached to working precision.
            return Ok(EventOutcome {
                dt: t_limit,
                x_end: y.x,
                lam_end: y.lam,
                event: false,
                trace: finish_at_limit(trace, t_offset + t_limit, y, d),
            });
        }
        let res = dp45_step(y, d, clipped, f, n);
        let err = error_norm(&res, y, tol);
        if err > 1.0 {
            let shrink = (0.9 * err.powf(-0.2)).max(0.2);
            h = clipped * shrink;
            if h < 1e-15 * (1.0 + t) {
                return Err(Error::StepSizeUnderflow { t: t_offset + t, h });
            }
            continue;
        }

        if res.next.lam >= target {
            // Event inside this step: localize on step length.
            let (s_event, y_event) = locate_event(y, d, clipped, res.next, target, f, n, t)?;
            t += s_event;
            let d_event = deriv(y_event, f, n);
            push_node(t, y_event, d_event, &mut trace);
            return Ok(EventOutcome {
                dt: t,
                x_end: y_event.x,
                lam_end: y_event.lam,
                event: true,
                trace,
            });
        }

        t += clipped;
        y = res.next;
        d = deriv(y, f, n);
        push_node(t, y, d, &mut trace);

        if t >= t_limit {
            return Ok(EventOutcome {
                dt: t_limit,
                x_end: y.x,
                lam_end: y.lam,
                event: false,
                trace,
            });
        }
        let grow = if err <= f64::EPSILON {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        h = clipped * grow;
    }
}

/// Ensures the censored trace ends exactly on the horizon node.
fn finish_at_limit(mut trace: DenseTrace, t_abs: f64, y: State, d: Deriv) -> DenseTrace {
    if let Some(last) = trace.t.last_mut() {
        if *last < t_abs {
            trace.t.push(t_abs);
            trace.z.push(y.x);
            trace.dz.push(d.dx);
            trace.lam.push(y.lam);
            trace.dlam.push(d.dlam);
        } else {
            *last = t_abs;
        }
    }
    trace
}

/// Safeguarded Newton/bisection on the step length s ∈ (0, h] such that the
/// hazard accumulated from `y` over a single embedded step of length s equals
/// `target`. Each trial re-integrates from the same base state.
#[allow(clippy::too_many_arguments)]
fn locate_event(
    y: State,
    d: Deriv,
    h: f64,
    at_h: State,
    target: f64,
    f: &StructureFn,
    n: u64,
    t_in_segment: f64,
) -> Result<(f64, State)> {
    let mut lo = 0.0f64;
    let mut hi = h;
    let mut y_hi = at_h;
    // First guess: linear interpolation of the hazard across the step.
    let mut s = if at_h.lam > y.lam {
        (h * (target - y.lam) / (at_h.lam - y.lam)).clamp(0.0, h)
    } else {
        0.5 * h
    };
    let time_tol = 1e-12 * (1.0 + t_in_segment);
    for _ in 0..200 {
        if hi - lo <= time_tol {
            break;
        }
        if !(s > lo && s < hi) {
            s = 0.5 * (lo + hi);
        }
        let trial = dp45_step(y, d, s, f, n).next;
        if trial.lam >= target {
            hi = s;
            y_hi = trial;
        } else {
            lo = s;
        }
        // Newton refinement from the trial point.
        let rate = deriv(trial, f, n).dlam;
        s = if rate > 0.0 {
            s - (trial.lam - target) / rate
        } else {
            0.5 * (lo + hi)
        };
    }
    Ok((hi, y_hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler;

    #[test]
    fn linear_coefficient_matches_closed_form_waiting_time() {
        // Oracle: the closed-form waiting time at u = e^{-E}.
        for (beta, n, x0) in [
            (-1.0, 10u64, 1.0),
            (-0.5, 10, 0.4),
            (1.0, 10, 0.7),
            (-2.0, 4, 0.9),
        ] {
            let f = StructureFn::linear(beta);
            for target in [0.3f64, 1.0, 2.7] {
                let u = (-target).exp();
                let expected = sampler::sample_jump_waiting_time(x0, beta, n, u);
                let out =
                    integrate_to_event(x0, &f, n, target, 1e6, 1e-10, 0.0).expect("integrates");
                assert!(out.event);
                // Deeply negative β makes the waiting time huge; compare at
                // relative scale.
                assert!(
                    (out.dt - expected).abs() < 1e-6 * (1.0 + expected.abs()),
                    "beta={beta} target={target}: {} vs {expected}",
                    out.dt
                );
                // Pre-jump state matches the closed-form flow.
                let z_pre = x0 * u.powf(beta);
                assert!(
                    (out.x_end - z_pre).abs() < 1e-6 * (1.0 + z_pre.abs()),
                    "z_pre {} vs {z_pre}",
                    out.x_end
                );
            }
        }
    }

    #[test]
    fn hazard_bookkeeping_reconstructs_the_uniform() {
        let f = StructureFn::Cubic;
        let target = 1.3f64;
        let out = integrate_to_event(0.8, &f, 25, target, 1e6, 1e-9, 0.0).unwrap();
        assert!(out.event);
        assert!(((-out.lam_end).exp() - (-target).exp()).abs() < 1e-9);
    }

    #[test]
    fn censoring_at_horizon() {
        let f = StructureFn::linear(-1.0);
        // Huge target: the horizon cuts first.
        let out = integrate_to_event(2.0, &f, 1, 50.0, 0.25, 1e-8, 3.0).unwrap();
        assert!(!out.event);
        assert!((out.dt - 0.25).abs() < 1e-12);
        assert_eq!(*out.trace.t.last().unwrap(), 3.25);
        assert!(out.lam_end < 50.0);
    }

    #[test]
    fn trace_interpolation_is_consistent() {
        let f = StructureFn::linear(-0.5);
        let out = integrate_to_event(1.0, &f, 10, 2.0, 1e6, 1e-10, 0.0).unwrap();
        let trace = &out.trace;
        // Hermite evaluation at nodes returns node values.
        for (k, &tk) in trace.t.iter().enumerate() {
            assert!((trace.eval_z(tk) - trace.z[k]).abs() < 1e-12);
        }
        // Midpoint agrees with the closed-form flow.
        let tm = 0.5 * (trace.t[0] + *trace.t.last().unwrap());
        let v = sampler::solve_flow_parameter(1.0, -0.5, 10, 1e-6, tm);
        let closed = 1.0 * v.powf(-0.5);
        assert!(
            (trace.eval_z(tm) - closed).abs() < 1e-7,
            "{} vs {closed}",
            trace.eval_z(tm)
        );
    }
}
