use thiserror::Error;

/// Errors surfaced by the simulation engines and analysis routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("evaluation time {t} outside [0, {t_max}]")]
    TimeOutOfRange { t: f64, t_max: f64 },

    #[error("segment cap {cap} exceeded at t = {t} (runaway jump cascade)")]
    SegmentCapExceeded { cap: u64, t: f64 },

    #[error("ODE step size underflow at t = {t} (h = {h})")]
    StepSizeUnderflow { t: f64, h: f64 },

    #[error("jump law invalid: {0}")]
    InvalidJumpLaw(String),

    #[error("structure function vanishes on a subinterval around x = {0}; only isolated zeros are supported")]
    VanishesOnInterval(f64),

    #[error("declared zero at x = {x} but |f(x)| = {fx:e} exceeds 1e-12")]
    NotAZero { x: f64, fx: f64 },

    #[error("degenerate sample set: {0}")]
    DegenerateSamples(String),
}

pub type Result<T> = std::result::Result<T, Error>;
