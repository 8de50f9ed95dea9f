//! Renewal-process martingale constructions and the generators of the
//! unit-scale Markov case.
//!
//! Given iid positive interarrivals with tail F̄ and iid symmetric signs,
//! Z_t = ε_{N_t}/F̄(t − S_{N_t}) is a martingale for ANY interarrival law;
//! it is a normal martingale exactly when the interarrival follows
//! −ln U + 1/(2U²) − 1/2. The variant Z̃_t = 1/F̄(t − S_{N_t}) − N_t (with
//! interarrival 1/(2U²) − 1/2) is a normal martingale too, but neither
//! Markov nor chaotically representable; it serves here as a closed-form
//! control.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::rng::SeedSpec;

/// User-supplied interarrival tail for the any-law martingale: strictly
/// decreasing, continuous, F̄(0) = 1, F̄(∞) = 0.
#[derive(Clone)]
pub struct CustomTail {
    pub label: String,
    pub tail: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl std::fmt::Debug for CustomTail {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CustomTail")
            .field("label", &self.label)
            .finish()
    }
}

#[derive(Debug, Clone)]
pub enum RenewalVariant {
    /// Normal martingale ε_{N_t}/F̄(age); interarrival −ln U + 1/(2U²) − 1/2.
    First,
    /// 1/F̄(age) − N_t; interarrival 1/(2U²) − 1/2.
    Second,
    /// ε_{N_t}/F̄(age) with an arbitrary admissible tail (martingale only).
    Custom(CustomTail),
}

impl RenewalVariant {
    pub fn label(&self) -> String {
        match self {
            RenewalVariant::First => "first".into(),
            RenewalVariant::Second => "second".into(),
            RenewalVariant::Custom(c) => format!("custom:{}", c.label),
        }
    }

    fn uses_signs(&self) -> bool {
        !matches!(self, RenewalVariant::Second)
    }
}

#[derive(Debug, Clone)]
pub struct RenewalParams {
    pub variant: RenewalVariant,
    pub t_max: f64,
    pub seed: SeedSpec,
}

impl RenewalParams {
    pub fn new(variant: RenewalVariant, t_max: f64, seed: SeedSpec) -> Self {
        Self {
            variant,
            t_max,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_max > 0.0) || !self.t_max.is_finite() {
            return Err(Error::InvalidParams("t_max must be positive".into()));
        }
        if let RenewalVariant::Custom(c) = &self.variant {
            validate_custom_tail(c)?;
        }
        Ok(())
    }
}

fn validate_custom_tail(c: &CustomTail) -> Result<()> {
    let f0 = (c.tail)(0.0);
    if (f0 - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParams(format!(
            "custom tail must satisfy F̄(0) = 1, got {f0}"
        )));
    }
    // Probe decrease and positivity on a geometric grid up to x ≈ 65; tails
    // may legitimately underflow to 0 far beyond that.
    let mut prev = f0;
    let mut x = 1e-3;
    for _ in 0..16 {
        let v = (c.tail)(x);
        if !(v > 0.0) || v > prev {
            return Err(Error::InvalidParams(format!(
                "custom tail must be strictly decreasing and positive (at x = {x})"
            )));
        }
        prev = v;
        x *= 2.0;
    }
    Ok(())
}

/// Forward age map of the first variant: g(y) = −ln y + 1/(2y²) − 1/2 sends
/// the tail value y ∈ (0,1] to the age x ≥ 0 with F̄(x) = y.
pub fn first_variant_age(y: f64) -> f64 {
    -y.ln() + 1.0 / (2.0 * y * y) - 0.5
}

/// One interarrival draw from the variant's law via the uniform u ∈ (0,1).
pub fn sample_interarrival(variant: &RenewalVariant, u: f64) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::InvalidParams(format!("u must be in (0,1), got {u}")));
    }
    Ok(match variant {
        RenewalVariant::First => first_variant_age(u),
        RenewalVariant::Second => 1.0 / (2.0 * u * u) - 0.5,
        RenewalVariant::Custom(c) => invert_tail(&*c.tail, u)?,
    })
}

/// Inverts F̄(x) = u for a custom decreasing tail by doubling bracket plus
/// bisection.
fn invert_tail(tail: &(dyn Fn(f64) -> f64 + Send + Sync), u: f64) -> Result<f64> {
    let mut hi = 1.0f64;
    let mut tries = 0;
    while tail(hi) >= u {
        hi *= 2.0;
        tries += 1;
        if tries > 200 {
            return Err(Error::InvalidParams(
                "custom tail does not decay to 0".into(),
            ));
        }
    }
    let mut lo = 0.0f64;
    for _ in 0..128 {
        let mid = 0.5 * (lo + hi);
        if tail(mid) >= u {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * (1.0 + hi) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Tail of the first variant: the unique y ∈ (0,1] with g(y) = x, by
/// bracketing bisection from [2⁻⁶⁴, 1] plus Newton polish (g is strictly
/// decreasing: g′(y) = −1/y − 1/y³).
pub fn tail_first(x: f64) -> Result<f64> {
    if x < 0.0 {
        return Err(Error::InvalidParams(format!("age must be >= 0, got {x}")));
    }
    if x == 0.0 {
        return Ok(1.0);
    }
    let mut lo = 2f64.powi(-64);
    let mut hi = 1.0f64;
    // The root can sit below 2⁻⁶⁴ for astronomically large x; widen first.
    while first_variant_age(lo) < x {
        lo *= lo; // square: exponent doubles
        if lo == 0.0 {
            return Err(Error::InvalidParams(format!("age {x} out of range")));
        }
    }
    for _ in 0..64 {
        let mid = 0.5 * (lo + hi);
        if first_variant_age(mid) > x {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut y = 0.5 * (lo + hi);
    for _ in 0..4 {
        let f = first_variant_age(y) - x;
        let df = -1.0 / y - 1.0 / (y * y * y);
        let next = y - f / df;
        if next > 0.0 && next <= 1.0 {
            y = next;
        } else {
            break;
        }
    }
    Ok(y)
}

/// Tail of the second variant in closed form: F̄(x) = (1 + 2x)^(−1/2).
pub fn tail_second(x: f64) -> Result<f64> {
    if x < 0.0 {
        return Err(Error::InvalidParams(format!("age must be >= 0, got {x}")));
    }
    Ok(1.0 / (1.0 + 2.0 * x).sqrt())
}

/// Arrival times and signs of one renewal path, with lazy evaluation of the
/// martingale value at arbitrary times.
#[derive(Debug, Clone)]
pub struct RenewalPath {
    pub variant: RenewalVariant,
    pub t_max: f64,
    pub seed: SeedSpec,
    /// Arrival times S_1 < S_2 < … ≤ horizon overshoot point.
    pub arrivals: Vec<f64>,
    /// `signs[k]` is in force on `[S_k, S_{k+1})` with S_0 = 0; empty for the
    /// second variant.
    pub signs: Vec<f64>,
}

impl RenewalPath {
    /// N_t: number of arrivals at or before t.
    pub fn count_at(&self, t: f64) -> usize {
        self.arrivals.partition_point(|&s| s <= t)
    }

    /// Z_t (first/custom) or Z̃_t (second).
    pub fn value_at(&self, t: f64) -> Result<f64> {
        if !(0.0..=self.t_max).contains(&t) {
            return Err(Error::TimeOutOfRange {
                t,
                t_max: self.t_max,
            });
        }
        let n_t = self.count_at(t);
        let last = if n_t == 0 {
            0.0
        } else {
            self.arrivals[n_t - 1]
        };
        let age = t - last;
        match &self.variant {
            RenewalVariant::First => Ok(self.signs[n_t] / tail_first(age)?),
            RenewalVariant::Second => Ok(1.0 / tail_second(age)? - n_t as f64),
            RenewalVariant::Custom(c) => {
                let f = (c.tail)(age);
                if !(f > 0.0) {
                    return Err(Error::InvalidParams(format!(
                        "custom tail not positive at age {age}"
                    )));
                }
                Ok(self.signs[n_t] / f)
            }
        }
    }
}

/// Generates arrivals until the horizon. Draw order: one initial sign (the
/// value of Z before the first arrival), then per arrival one uniform and
/// one fresh sign.
pub fn simulate_renewal(params: &RenewalParams) -> Result<RenewalPath> {
    params.validate()?;
    let mut stream = params.seed.stream();
    let mut arrivals = Vec::new();
    let mut signs = Vec::new();
    if params.variant.uses_signs() {
        signs.push(stream.draw_sign());
    }
    let mut t = 0.0f64;
    loop {
        let u = stream.draw_uniform();
        let x = sample_interarrival(&params.variant, u)?;
        t += x;
        if !(t < params.t_max) {
            break;
        }
        arrivals.push(t);
        if params.variant.uses_signs() {
            signs.push(stream.draw_sign());
        }
    }
    Ok(RenewalPath {
        variant: params.variant.clone(),
        t_max: params.t_max,
        seed: params.seed,
        arrivals,
        signs,
    })
}

/// Generator of the unit-scale Markov renewal martingale applied to a test
/// function g with derivative dg:
/// L g(x) = [½(g(−1)+g(1)) − g(x) + x·g′(x)] / (1 + x²).
pub fn generator_l_minus1(g: impl Fn(f64) -> f64, dg: impl Fn(f64) -> f64, x: f64) -> f64 {
    (0.5 * (g(-1.0) + g(1.0)) - g(x) + x * dg(x)) / (1.0 + x * x)
}

/// Rescaled generator:
/// L g(x) = [½(g(−1/√n)+g(1/√n)) − g(x) + x·g′(x)] / (1/n + x²).
pub fn generator_l_minus1_n(
    g: impl Fn(f64) -> f64,
    dg: impl Fn(f64) -> f64,
    x: f64,
    n: u64,
) -> f64 {
    let nf = n as f64;
    let r = 1.0 / nf.sqrt();
    (0.5 * (g(-r) + g(r)) - g(x) + x * dg(x)) / (1.0 / nf + x * x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::sample_jump_waiting_time;

    const SEED: SeedSpec = SeedSpec {
        master_seed: 99,
        stream_id: 1,
    };

    #[test]
    fn interarrival_values() {
        let first = sample_interarrival(&RenewalVariant::First, 0.5).unwrap();
        assert!((first - 2.193_147_180_559_945_4).abs() < 1e-12);
        let second = sample_interarrival(&RenewalVariant::Second, 0.5).unwrap();
        assert!((second - 1.5).abs() < 1e-15);
        // u → 1⁻ gives x → 0⁺ for both laws.
        for v in [RenewalVariant::First, RenewalVariant::Second] {
            let x = sample_interarrival(&v, 1.0 - 1e-12).unwrap();
            assert!(x > 0.0 && x < 1e-8, "{x}");
        }
        assert!(sample_interarrival(&RenewalVariant::First, 0.0).is_err());
    }

    #[test]
    fn interarrival_agrees_with_unit_scale_waiting_time() {
        // Same uniforms → identical jump times at β=−1, n=1, |x0|=1.
        let mut stream = SEED.stream();
        for _ in 0..1000 {
            let u = stream.draw_uniform();
            let renewal = sample_interarrival(&RenewalVariant::First, u).unwrap();
            for x0 in [1.0, -1.0] {
                let azema = sample_jump_waiting_time(x0, -1.0, 1, u);
                assert!(
                    (renewal - azema).abs() <= 1e-12 * (1.0 + renewal.abs()),
                    "u={u}: {renewal} vs {azema}"
                );
            }
        }
    }

    #[test]
    fn tail_first_examples_and_round_trip() {
        assert_eq!(tail_first(0.0).unwrap(), 1.0);
        let y = tail_first(2.193_147_180_559_945_4).unwrap();
        assert!((y - 0.5).abs() < 1e-12, "{y}");
        assert!(tail_first(-1.0).is_err());
        // Round trip |g(tail_first(x)) − x| small across magnitudes.
        for k in 0..2000 {
            let x = 50.0 * k as f64 / 2000.0;
            let y = tail_first(x).unwrap();
            assert!(
                (first_variant_age(y) - x).abs() <= 1e-10,
                "x={x} defect {}",
                (first_variant_age(y) - x).abs()
            );
        }
    }

    #[test]
    fn tail_first_is_strictly_decreasing() {
        let mut stream = SEED.stream();
        for _ in 0..10_000 {
            let a = 50.0 * stream.draw_uniform();
            let b = 50.0 * stream.draw_uniform();
            if a == b {
                continue;
            }
            let (x1, x2) = if a < b { (a, b) } else { (b, a) };
            assert!(tail_first(x1).unwrap() > tail_first(x2).unwrap());
        }
    }

    #[test]
    fn tail_second_examples() {
        assert_eq!(tail_second(0.0).unwrap(), 1.0);
        assert!((tail_second(1.5).unwrap() - 0.5).abs() < 1e-15);
        assert!(tail_second(-0.1).is_err());
    }

    #[test]
    fn first_variant_magnitude_at_least_one() {
        // Interarrivals are heavy-tailed (F̄(x) ~ (2x)^{-1/2}), so scan a few
        // independent paths; |Z| = 1/F̄(age) ≥ 1 must hold on all of them.
        let mut saw_arrivals = false;
        for id in 0..8 {
            let params = RenewalParams::new(RenewalVariant::First, 20.0, SEED.offset(id));
            let path = simulate_renewal(&params).unwrap();
            saw_arrivals |= !path.arrivals.is_empty();
            for k in 0..=200 {
                let t = 20.0 * k as f64 / 200.0;
                assert!(path.value_at(t).unwrap().abs() >= 1.0 - 1e-12);
            }
        }
        assert!(saw_arrivals);
    }

    #[test]
    fn second_variant_starts_at_one() {
        let params = RenewalParams::new(RenewalVariant::Second, 5.0, SEED);
        let path = simulate_renewal(&params).unwrap();
        assert_eq!(path.value_at(0.0).unwrap(), 1.0);
    }

    #[test]
    fn custom_tail_validation() {
        let exp_tail = CustomTail {
            label: "exp".into(),
            tail: Arc::new(|x: f64| (-x).exp()),
        };
        RenewalParams::new(RenewalVariant::Custom(exp_tail), 1.0, SEED)
            .validate()
            .unwrap();
        let bad = CustomTail {
            label: "half".into(),
            tail: Arc::new(|_| 0.5),
        };
        assert!(RenewalParams::new(RenewalVariant::Custom(bad), 1.0, SEED)
            .validate()
            .is_err());
    }

    #[test]
    fn custom_exponential_interarrival_is_exponential() {
        let exp_tail = RenewalVariant::Custom(CustomTail {
            label: "exp".into(),
            tail: Arc::new(|x: f64| (-x).exp()),
        });
        // F̄(x) = e^{-x} inverts to −ln u.
        let x = sample_interarrival(&exp_tail, 0.25).unwrap();
        assert!((x - (0.25f64).ln().abs()).abs() < 1e-9, "{x}");
    }

    #[test]
    fn generator_values() {
        let g = |x: f64| x * x * x;
        let dg = |x: f64| 3.0 * x * x;
        assert!((generator_l_minus1(g, dg, 2.0) - 3.2).abs() < 1e-14);
        // Martingale property: L applied to x vanishes.
        for x in [-2.0, -0.3, 0.0, 1.0, 4.5] {
            assert!(generator_l_minus1(|y| y, |_| 1.0, x).abs() < 1e-14);
            assert!((generator_l_minus1(|y| y * y, |y| 2.0 * y, x) - 1.0).abs() < 1e-14);
        }
        // Rescaled generator keeps the normal-martingale images.
        for n in [1u64, 10, 100] {
            for x in [-1.5, 0.2, 3.0] {
                assert!(generator_l_minus1_n(|y| y, |_| 1.0, x, n).abs() < 1e-14);
                assert!((generator_l_minus1_n(|y| y * y, |y| 2.0 * y, x, n) - 1.0).abs() < 1e-12);
            }
        }
        assert_eq!(generator_l_minus1_n(g, dg, 2.0, 1), 3.2);
    }

    #[test]
    fn renewal_jump_times_match_unit_scale_engine_jump_times() {
        // Coupled check: the first-variant arrivals and the β=−1, n=1 jump
        // times agree when fed the same uniforms (|z| after each jump is 1).
        let mut stream = SEED.stream();
        let us: Vec<f64> = (0..50).map(|_| stream.draw_uniform()).collect();
        let mut s_renewal = 0.0;
        let mut t_engine = 0.0;
        for &u in &us {
            s_renewal += sample_interarrival(&RenewalVariant::First, u).unwrap();
            t_engine += sample_jump_waiting_time(1.0, -1.0, 1, u);
            assert!((s_renewal - t_engine).abs() <= 1e-9 * (1.0 + s_renewal));
        }
    }
}
