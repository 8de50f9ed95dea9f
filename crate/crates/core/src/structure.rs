//! General structure coefficients, jump laws, and the ODE-backed engine.
//!
//! The general process moves with velocity −f(x)/(1/n + f(x)²), jumps at
//! rate 1/(1/n + f(x)²), and at a jump moves x → x + f(x) + mark/√n where
//! the mark has mean 0, variance 1, and compact support. Event times come
//! from accumulating the hazard against a pre-drawn Exp(1) target (inverse
//! CDF), not thinning, so each segment costs exactly one uniform.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode;
use crate::path::{DenseTrace, Jump, PathKind, PathSegment, SamplePath};
use crate::rng::{SeedSpec, Stream};
use crate::sampler::DEFAULT_SEGMENT_CAP;

/// Structure coefficient f of the general jump dynamics, addressable from
/// the CLI registry syntax: `zero`, `linear:beta`, `asymmetric:a,b`,
/// `cubic`, `poly:c0,c1,...`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum StructureFn {
    Zero,
    Linear { beta: f64 },
    Asymmetric { a: f64, b: f64 },
    Cubic,
    Poly { coeffs: Vec<f64> },
}

impl StructureFn {
    pub fn linear(beta: f64) -> Self {
        StructureFn::Linear { beta }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            StructureFn::Zero => 0.0,
            StructureFn::Linear { beta } => beta * x,
            StructureFn::Asymmetric { a, b } => {
                if x >= 0.0 {
                    a * x
                } else {
                    b * x
                }
            }
            StructureFn::Cubic => x * x * x,
            StructureFn::Poly { coeffs } => {
                let mut acc = 0.0;
                for &c in coeffs.iter().rev() {
                    acc = acc * x + c;
                }
                acc
            }
        }
    }

    /// True when f vanishes identically (the simple-random-walk case).
    pub fn is_zero(&self) -> bool {
        match self {
            StructureFn::Zero => true,
            StructureFn::Linear { beta } => *beta == 0.0,
            StructureFn::Asymmetric { a, b } => *a == 0.0 && *b == 0.0,
            StructureFn::Cubic => false,
            StructureFn::Poly { coeffs } => coeffs.iter().all(|&c| c == 0.0),
        }
    }

    /// Rejects coefficients that vanish on a subinterval without being
    /// identically zero (compensator bookkeeping breaks there; only isolated
    /// zeros are supported).
    pub fn validate_zero_set(&self) -> Result<()> {
        match self {
            StructureFn::Asymmetric { a, b } => {
                if (*a == 0.0) != (*b == 0.0) {
                    let side = if *a == 0.0 { 1.0 } else { -1.0 };
                    Err(Error::VanishesOnInterval(side))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    /// Zeros of f used by the hypothesis checker. Canonical forms declare
    /// the origin; polynomial zeros are detected by sign change on [-8, 8].
    pub fn zeros(&self) -> Vec<f64> {
        match self {
            StructureFn::Zero => vec![],
            StructureFn::Linear { beta } => {
                if *beta == 0.0 {
                    vec![]
                } else {
                    vec![0.0]
                }
            }
            StructureFn::Asymmetric { a, b } => {
                if *a == 0.0 && *b == 0.0 {
                    vec![]
                } else {
                    vec![0.0]
                }
            }
            StructureFn::Cubic => vec![0.0],
            StructureFn::Poly { .. } => {
                if self.is_zero() {
                    return vec![];
                }
                let mut zs = Vec::new();
                let grid = 4096;
                let (lo, hi) = (-8.0, 8.0);
                let mut xp = lo;
                let mut fp = self.eval(xp);
                for k in 1..=grid {
                    let x = lo + (hi - lo) * k as f64 / grid as f64;
                    let fx = self.eval(x);
                    if fp == 0.0 {
                        zs.push(xp);
                    } else if fp * fx < 0.0 {
                        // Bisect the bracket down to machine width.
                        let (mut a, mut b) = (xp, x);
                        let mut fa = fp;
                        for _ in 0..80 {
                            let m = 0.5 * (a + b);
                            let fm = self.eval(m);
                            if fm == 0.0 {
                                a = m;
                                b = m;
                                break;
                            }
                            if fa * fm < 0.0 {
                                b = m;
                            } else {
                                a = m;
                                fa = fm;
                            }
                        }
                        zs.push(0.5 * (a + b));
                    }
                    xp = x;
                    fp = fx;
                }
                zs
            }
        }
    }

    /// Registry label round-tripping through [`StructureFn::parse`].
    pub fn label(&self) -> String {
        match self {
            StructureFn::Zero => "zero".into(),
            StructureFn::Linear { beta } => format!("linear:{beta}"),
            StructureFn::Asymmetric { a, b } => format!("asymmetric:{a},{b}"),
            StructureFn::Cubic => "cubic".into(),
            StructureFn::Poly { coeffs } => {
                let cs: Vec<String> = coeffs.iter().map(|c| c.to_string()).collect();
                format!("poly:{}", cs.join(","))
            }
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        let bad = |msg: &str| Error::InvalidParams(format!("structure fn `{s}`: {msg}"));
        if s == "zero" {
            return Ok(StructureFn::Zero);
        }
        if s == "cubic" {
            return Ok(StructureFn::Cubic);
        }
        if let Some(rest) = s.strip_prefix("linear:") {
            let beta: f64 = rest.parse().map_err(|_| bad("bad beta"))?;
            return Ok(StructureFn::Linear { beta });
        }
        if let Some(rest) = s.strip_prefix("asymmetric:") {
            let parts: Vec<&str> = rest.split(',').collect();
            if parts.len() != 2 {
                return Err(bad("expected a,b"));
            }
            let a: f64 = parts[0].trim().parse().map_err(|_| bad("bad a"))?;
            let b: f64 = parts[1].trim().parse().map_err(|_| bad("bad b"))?;
            return Ok(StructureFn::Asymmetric { a, b });
        }
        if let Some(rest) = s.strip_prefix("poly:") {
            let coeffs: std::result::Result<Vec<f64>, _> =
                rest.split(',').map(|c| c.trim().parse()).collect();
            return Ok(StructureFn::Poly {
                coeffs: coeffs.map_err(|_| bad("bad coefficient"))?,
            });
        }
        Err(bad("unknown registry name"))
    }
}

impl std::str::FromStr for StructureFn {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        StructureFn::parse(s)
    }
}

/// Law of the jump mark: mean 0, variance 1, compact support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum JumpLaw {
    /// Symmetric Bernoulli ±1.
    Bernoulli,
    /// Finite discrete law given as (value, probability) atoms.
    Discrete { atoms: Vec<(f64, f64)> },
}

impl JumpLaw {
    pub fn three_point_example() -> Self {
        let r2 = std::f64::consts::SQRT_2;
        JumpLaw::Discrete {
            atoms: vec![(-r2, 0.25), (0.0, 0.5), (r2, 0.25)],
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            JumpLaw::Bernoulli => 0.0,
            JumpLaw::Discrete { atoms } => atoms.iter().map(|(v, p)| v * p).sum(),
        }
    }

    pub fn variance(&self) -> f64 {
        let mu = self.mean();
        match self {
            JumpLaw::Bernoulli => 1.0,
            JumpLaw::Discrete { atoms } => atoms.iter().map(|(v, p)| (v - mu) * (v - mu) * p).sum(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            JumpLaw::Bernoulli => Ok(()),
            JumpLaw::Discrete { atoms } => {
                if atoms.is_empty() {
                    return Err(Error::InvalidJumpLaw("no atoms".into()));
                }
                let mut total = 0.0;
                for &(v, p) in atoms {
                    if !v.is_finite() {
                        return Err(Error::InvalidJumpLaw(format!("atom value {v}")));
                    }
                    if !(0.0..=1.0).contains(&p) {
                        return Err(Error::InvalidJumpLaw(format!("probability {p}")));
                    }
                    total += p;
                }
                if (total - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidJumpLaw(format!(
                        "probabilities sum to {total}"
                    )));
                }
                if self.mean().abs() > 1e-9 {
                    return Err(Error::InvalidJumpLaw(format!("mean {} != 0", self.mean())));
                }
                if (self.variance() - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidJumpLaw(format!(
                        "variance {} != 1",
                        self.variance()
                    )));
                }
                Ok(())
            }
        }
    }

    /// CLI syntax round-trip: `bernoulli` or `atoms:v:p,v:p,...`.
    pub fn label(&self) -> String {
        match self {
            JumpLaw::Bernoulli => "bernoulli".into(),
            JumpLaw::Discrete { atoms } => {
                let parts: Vec<String> = atoms.iter().map(|(v, p)| format!("{v}:{p}")).collect();
                format!("atoms:{}", parts.join(","))
            }
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        if s == "bernoulli" {
            return Ok(JumpLaw::Bernoulli);
        }
        if let Some(rest) = s.strip_prefix("atoms:") {
            let mut atoms = Vec::new();
            for pair in rest.split(',') {
                let mut it = pair.split(':');
                let (v, p) = (it.next(), it.next());
                match (v, p, it.next()) {
                    (Some(v), Some(p), None) => {
                        let v: f64 = v.trim().parse().map_err(|_| {
                            Error::InvalidJumpLaw(format!("bad atom value in `{pair}`"))
                        })?;
                        let p: f64 = p.trim().parse().map_err(|_| {
                            Error::InvalidJumpLaw(format!("bad probability in `{pair}`"))
                        })?;
                        atoms.push((v, p));
                    }
                    _ => {
                        return Err(Error::InvalidJumpLaw(format!(
                            "expected value:prob, got `{pair}`"
                        )))
                    }
                }
            }
            let law = JumpLaw::Discrete { atoms };
            law.validate()?;
            return Ok(law);
        }
        Err(Error::InvalidJumpLaw(format!("unknown jump law `{s}`")))
    }

    /// One mark, consuming exactly one generator step.
    pub fn sample(&self, stream: &mut Stream) -> f64 {
        match self {
            JumpLaw::Bernoulli => stream.draw_sign(),
            JumpLaw::Discrete { atoms } => {
                let u = stream.draw_uniform();
                let mut acc = 0.0;
                for &(v, p) in atoms {
                    acc += p;
                    if u <= acc {
                        return v;
                    }
                }
                atoms.last().map(|&(v, _)| v).unwrap_or(0.0)
            }
        }
    }
}

/// Parameters of one general-engine simulation.
#[derive(Debug, Clone, Serialize)]
pub struct GeneralParams {
    pub f: StructureFn,
    pub n: u64,
    pub x0: f64,
    pub t_max: f64,
    pub jump_law: JumpLaw,
    /// Adaptive step tolerance of the hazard/flow integrator.
    pub ode_tol: f64,
    pub seed: SeedSpec,
    pub max_segments: u64,
}

pub const DEFAULT_ODE_TOL: f64 = 1e-8;

impl GeneralParams {
    pub fn new(
        f: StructureFn,
        n: u64,
        x0: f64,
        t_max: f64,
        jump_law: JumpLaw,
        seed: SeedSpec,
    ) -> Self {
        Self {
            f,
            n,
            x0,
            t_max,
            jump_law,
            ode_tol: DEFAULT_ODE_TOL,
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
        if !self.x0.is_finite() {
            return Err(Error::InvalidParams("x0 must be finite".into()));
        }
        if !(self.ode_tol > 0.0) {
            return Err(Error::InvalidParams("ode_tol must be positive".into()));
        }
        self.jump_law.validate()?;
        self.f.validate_zero_set()
    }
}

/// Flow velocity and jump rate at x: (−f/(1/n+f²), 1/(1/n+f²)).
///
/// The rate is bounded by n everywhere. An overflowing coefficient gets the
/// limiting values (0, 0): the state freezes and the horizon censors.
pub fn drift_and_rate(x: f64, f: &StructureFn, n: u64) -> (f64, f64) {
    let fx = f.eval(x);
    if !fx.is_finite() {
        return (0.0, 0.0);
    }
    let denom = 1.0 / (n as f64) + fx * fx;
    if !denom.is_finite() {
        return (0.0, 0.0);
    }
    (-fx / denom, 1.0 / denom)
}

/// Post-jump state x + f(x) + mark/√n.
pub fn jump_apply(x_pre: f64, f: &StructureFn, n: u64, mark: f64) -> f64 {
    x_pre + f.eval(x_pre) + mark / (n as f64).sqrt()
}

/// Simulates one general-engine path on [0, t_max].
pub fn simulate_general(params: &GeneralParams) -> Result<SamplePath> {
    params.validate()?;
    let mut stream = params.seed.stream();
    let mut segments = Vec::new();
    let mut t = 0.0f64;
    let mut z = params.x0;
    let nf = params.n as f64;
    loop {
        if segments.len() as u64 >= params.max_segments {
            return Err(Error::SegmentCapExceeded {
                cap: params.max_segments,
                t,
            });
        }
        let u = stream.draw_uniform();
        let target = -u.ln();
        let remaining = params.t_max - t;

        let (dt, z_pre, trace, event) = if params.f.is_zero() {
            // Constant rate n, zero drift: the waiting time is exact.
            let dt = target / nf;
            let event = dt < remaining;
            let end = if event { dt } else { remaining };
            let trace = DenseTrace {
                t: vec![t, t + end],
                z: vec![z, z],
                dz: vec![0.0, 0.0],
                lam: vec![0.0, nf * end],
                dlam: vec![nf, nf],
            };
            (end, z, trace, event)
        } else {
            let out = ode::integrate_to_event(
                z,
                &params.f,
                params.n,
                target,
                remaining,
                params.ode_tol,
                t,
            )?;
            (out.dt, out.x_end, out.trace, out.event)
        };

        if !event {
            segments.push(PathSegment {
                t_start: t,
                z_start: z,
                u,
                t_end: params.t_max,
                trace: Some(trace),
                jump: None,
            });
            break;
        }

        let t_jump = t + dt;
        let t_end = if t_jump > t { t_jump } else { t.next_up() };
        let mark = params.jump_law.sample(&mut stream);
        let z_post = jump_apply(z_pre, &params.f, params.n, mark);
        segments.push(PathSegment {
            t_start: t,
            z_start: z,
            u,
            t_end,
            trace: Some(trace),
            jump: Some(Jump {
                eps: mark,
                z_pre,
                z_post,
            }),
        });
        t = t_end;
        z = z_post;
        if t >= params.t_max {
            break;
        }
    }
    Ok(SamplePath {
        kind: PathKind::General {
            f: params.f.clone(),
        },
        n: params.n,
        x0: params.x0,
        t_max: params.t_max,
        seed: params.seed,
        segments,
    })
}

/// Per-side decay diagnostics of r(h) = |f(x_j + h)| / √|h|.
#[derive(Debug, Clone, Serialize)]
pub struct SideRatios {
    /// r at the widest probe h = window/2.
    pub first: f64,
    /// r at the narrowest probe h = window·2⁻⁴⁰.
    pub last: f64,
    /// Whether r(h) decays toward 0 as h → 0.
    pub vanishing: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ZeroCheck {
    pub zero: f64,
    pub isolated: bool,
    pub left: SideRatios,
    pub right: SideRatios,
}

impl ZeroCheck {
    pub fn satisfied(&self) -> bool {
        self.isolated && self.left.vanishing && self.right.vanishing
    }
}

/// Advisory report on the small-h hypothesis f(x_j + h) = o(√h) at each
/// declared zero; simulation proceeds regardless.
#[derive(Debug, Clone, Serialize)]
pub struct HypothesisReport {
    pub zeros: Vec<ZeroCheck>,
    pub satisfied: bool,
}

fn side_ratios(f: &dyn Fn(f64) -> f64, zero: f64, window: f64, sign: f64) -> SideRatios {
    let mut first = 0.0;
    let mut last = 0.0;
    for k in 1..=40u32 {
        let h = window * 0.5f64.powi(k as i32);
        let r = f(zero + sign * h).abs() / h.sqrt();
        if k == 1 {
            first = r;
        }
        last = r;
    }
    // Decaying toward 0: the narrowest probe must sit well below the widest
    // one (or below an absolute floor when f is flat at machine scale).
    let vanishing = last <= (0.1 * first).max(1e-9);
    SideRatios {
        first,
        last,
        vanishing,
    }
}

/// Checks the small-h vanishing hypothesis for an arbitrary coefficient with
/// declared zeros. Errors if a declared zero is not actually a zero.
pub fn check_hypotheses_fn(
    f: &dyn Fn(f64) -> f64,
    zeros: &[f64],
    window: f64,
) -> Result<HypothesisReport> {
    let mut checks = Vec::new();
    for &x_j in zeros {
        let fx = f(x_j);
        if fx.abs() > 1e-12 {
            return Err(Error::NotAZero { x: x_j, fx });
        }
        // Isolation: constant nonzero sign on each side within the window,
        // probed away from the immediate neighborhood of the zero.
        let grid = 512;
        let mut isolated = true;
        for side in [-1.0, 1.0] {
            let mut seen_sign = 0.0;
            for i in 1..=grid {
                let x = x_j + side * window * i as f64 / grid as f64;
                if zeros
                    .iter()
                    .any(|&other| other != x_j && (x - other).abs() < window / grid as f64)
                {
                    continue;
                }
                let v = f(x);
                if v == 0.0 {
                    isolated = false;
                    break;
                }
                let s = v.signum();
                if seen_sign == 0.0 {
                    seen_sign = s;
                } else if s != seen_sign {
                    isolated = false;
                    break;
                }
            }
        }
        let left = side_ratios(f, x_j, window, -1.0);
        let right = side_ratios(f, x_j, window, 1.0);
        checks.push(ZeroCheck {
            zero: x_j,
            isolated,
            left,
            right,
        });
    }
    let satisfied = checks.iter().all(|c| c.satisfied());
    Ok(HypothesisReport {
        zeros: checks,
        satisfied,
    })
}

/// Hypothesis check for a registry coefficient at its own zeros.
pub fn check_zero_hypotheses(f: &StructureFn, window: f64) -> Result<HypothesisReport> {
    let zeros = f.zeros();
    let g = |x: f64| f.eval(x);
    check_hypotheses_fn(&g, &zeros, window)
}
