//! Sample-path representation shared by the closed-form and ODE-backed
//! engines.
//!
//! A path is an ordered list of inter-jump segments tiling `[0, t_max]`
//! exactly. Between jumps the process follows a deterministic flow; the value
//! at an arbitrary time is recovered either by inverting the closed-form flow
//! parametrization (linear case) or by cubic Hermite interpolation of the
//! stored integration trace (general case). Paths are immutable once built
//! and safe to share read-only.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SeedSpec;
use crate::sampler;
use crate::structure::StructureFn;

/// Which flow family generated the path.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum PathKind {
    /// Closed-form engine: structure coefficient f(x) = βx.
    Linear { beta: f64 },
    /// Hazard/ODE engine with a general structure coefficient.
    General { f: StructureFn },
}

impl PathKind {
    pub fn structure_fn(&self) -> StructureFn {
        match self {
            PathKind::Linear { beta } => StructureFn::linear(*beta),
            PathKind::General { f } => f.clone(),
        }
    }
}

/// The jump terminating a segment.
#[derive(Debug, Clone, Copy)]
pub struct Jump {
    /// Jump mark: ±1 for Bernoulli, otherwise a draw from the jump law.
    pub eps: f64,
    /// Left limit Z_{T⁻}.
    pub z_pre: f64,
    /// Post-jump value Z_T.
    pub z_post: f64,
}

/// Dense integration trace for one ODE-backed segment.
///
/// Nodes are accepted integrator steps; `lam` is the hazard accumulated from
/// the segment start, so `lam.last()` equals the exponential target −ln u for
/// completed segments.
#[derive(Debug, Clone)]
pub struct DenseTrace {
    pub t: Vec<f64>,
    pub z: Vec<f64>,
    pub dz: Vec<f64>,
    pub lam: Vec<f64>,
    pub dlam: Vec<f64>,
}

impl DenseTrace {
    fn locate(&self, t: f64) -> usize {
        debug_assert!(self.t.len() >= 2);
        let k = self.t.partition_point(|&tk| tk <= t);
        k.clamp(1, self.t.len() - 1) - 1
    }

    fn hermite(t0: f64, t1: f64, y0: f64, y1: f64, d0: f64, d1: f64, t: f64) -> f64 {
        let h = t1 - t0;
        if h <= 0.0 {
            return y0;
        }
        let s = ((t - t0) / h).clamp(0.0, 1.0);
        let s2 = s * s;
        let s3 = s2 * s;
        (2.0 * s3 - 3.0 * s2 + 1.0) * y0
            + (s3 - 2.0 * s2 + s) * h * d0
            + (-2.0 * s3 + 3.0 * s2) * y1
            + (s3 - s2) * h * d1
    }

    pub fn eval_z(&self, t: f64) -> f64 {
        let k = self.locate(t);
        Self::hermite(
            self.t[k],
            self.t[k + 1],
            self.z[k],
            self.z[k + 1],
            self.dz[k],
            self.dz[k + 1],
            t,
        )
    }

    /// Velocity dz/dt at time t (derivative of the Hermite interpolant).
    pub fn eval_dz(&self, t: f64) -> f64 {
        let k = self.locate(t);
        let (t0, t1) = (self.t[k], self.t[k + 1]);
        let h = t1 - t0;
        if h <= 0.0 {
            return self.dz[k];
        }
        let s = ((t - t0) / h).clamp(0.0, 1.0);
        let s2 = s * s;
        ((6.0 * s2 - 6.0 * s) * self.z[k]
            + (3.0 * s2 - 4.0 * s + 1.0) * h * self.dz[k]
            + (-6.0 * s2 + 6.0 * s) * self.z[k + 1]
            + (3.0 * s2 - 2.0 * s) * h * self.dz[k + 1])
            / h
    }

    /// Hazard accumulated from segment start up to time t.
    pub fn eval_lam(&self, t: f64) -> f64 {
        let k = self.locate(t);
        Self::hermite(
            self.t[k],
            self.t[k + 1],
            self.lam[k],
            self.lam[k + 1],
            self.dlam[k],
            self.dlam[k + 1],
            t,
        )
    }
}

/// One inter-jump stretch.
///
/// `u` is the survival draw in (0,1) that produced the segment (the hazard
/// target is −ln u); it is retained even for the censored tail so evaluation
/// past the last jump stays exact. `jump` is `None` exactly when the segment
/// was truncated by the horizon.
#[derive(Debug, Clone)]
pub struct PathSegment {
    pub t_start: f64,
    pub z_start: f64,
    pub u: f64,
    pub t_end: f64,
    pub trace: Option<DenseTrace>,
    pub jump: Option<Jump>,
}

impl PathSegment {
    pub fn censored(&self) -> bool {
        self.jump.is_none()
    }

    pub fn duration(&self) -> f64 {
        self.t_end - self.t_start
    }
}

/// An ordered, right-continuous sample path on `[0, t_max]`.
#[derive(Debug, Clone)]
pub struct SamplePath {
    pub kind: PathKind,
    pub n: u64,
    pub x0: f64,
    pub t_max: f64,
    pub seed: SeedSpec,
    pub segments: Vec<PathSegment>,
}

impl SamplePath {
    pub fn jump_count(&self) -> u64 {
        self.segments.iter().filter(|s| s.jump.is_some()).count() as u64
    }

    /// Index of the segment whose half-open interval [t_start, t_end)
    /// contains t; the final segment also owns t == t_max.
    pub fn segment_index_at(&self, t: f64) -> Result<usize> {
        if !(0.0..=self.t_max).contains(&t) || self.segments.is_empty() {
            return Err(Error::TimeOutOfRange {
                t,
                t_max: self.t_max,
            });
        }
        let idx = self.segments.partition_point(|s| s.t_end <= t);
        Ok(idx.min(self.segments.len() - 1))
    }

    /// Right-continuous evaluation Z_t.
    pub fn eval(&self, t: f64) -> Result<f64> {
        let idx = self.segment_index_at(t)?;
        let seg = &self.segments[idx];
        if t >= seg.t_end {
            // Only possible at t == t_max; right-continuity picks the
            // post-jump value when a jump lands exactly on the horizon.
            if let Some(j) = &seg.jump {
                return Ok(j.z_post);
            }
        }
        Ok(self.flow_value(seg, t))
    }

    /// Deterministic flow value within a segment (left limit at t_end).
    pub fn flow_value(&self, seg: &PathSegment, t: f64) -> f64 {
        match (&self.kind, &seg.trace) {
            (PathKind::Linear { beta }, None) => {
                if *beta == 0.0 || seg.z_start == 0.0 {
                    return seg.z_start;
                }
                let v = sampler::solve_flow_parameter(
                    seg.z_start,
                    *beta,
                    self.n,
                    seg.u,
                    t - seg.t_start,
                );
                seg.z_start * v.powf(*beta)
            }
            (_, Some(trace)) => trace.eval_z(t),
            (PathKind::General { .. }, None) => {
                // General segments always carry traces; treat a missing one
                // as a frozen state.
                seg.z_start
            }
        }
    }

    /// Hazard accumulated within `seg` from its start up to absolute time t.
    pub(crate) fn segment_hazard_to(&self, seg: &PathSegment, t: f64) -> f64 {
        let t = t.min(seg.t_end);
        match (&self.kind, &seg.trace) {
            (PathKind::Linear { beta }, None) => {
                // A completed segment spent exactly −ln u of hazard; the
                // censored tail only accumulated up to the horizon, which is
                // strictly less than its drawn target.
                if seg.jump.is_some() && t >= seg.t_end {
                    return -seg.u.ln();
                }
                let v = sampler::solve_flow_parameter(
                    seg.z_start,
                    *beta,
                    self.n,
                    seg.u,
                    t - seg.t_start,
                );
                -v.ln()
            }
            (_, Some(trace)) => {
                if t >= seg.t_end {
                    *trace.lam.last().unwrap_or(&0.0)
                } else {
                    trace.eval_lam(t)
                }
            }
            (PathKind::General { .. }, None) => 0.0,
        }
    }

    /// Verifies the flow identity z(t) = z_start · v(t)^β on a grid of
    /// interior points, re-solving v at high precision as an independent
    /// route; returns the maximum absolute defect (relative to value scale).
    pub fn flow_identity_check(&self, seg_index: usize, grid: usize) -> Result<f64> {
        let seg = self
            .segments
            .get(seg_index)
            .ok_or_else(|| Error::InvalidParams(format!("no segment {seg_index}")))?;
        let beta = match &self.kind {
            PathKind::Linear { beta } => *beta,
            PathKind::General { .. } => {
                return Err(Error::InvalidParams(
                    "flow identity check applies to closed-form segments".into(),
                ))
            }
        };
        let mut worst: f64 = 0.0;
        for g in 1..=grid {
            let frac = g as f64 / (grid as f64 + 1.0);
            let t = seg.t_start + frac * seg.duration();
            let z = self.flow_value(seg, t);
            let v_hp =
                sampler::solve_flow_parameter_hp(seg.z_start, beta, self.n, seg.u, t - seg.t_start);
            let z_hp = if beta == 0.0 {
                seg.z_start
            } else {
                seg.z_start * v_hp.powf(beta)
            };
            let defect = (z - z_hp).abs() / (1.0 + z_hp.abs());
            worst = worst.max(defect);
        }
        Ok(worst)
    }

    /// Times of actual jumps, in order.
    pub fn jump_times(&self) -> impl Iterator<Item = f64> + '_ {
        self.segments
            .iter()
            .filter(|s| s.jump.is_some())
            .map(|s| s.t_end)
    }
}
