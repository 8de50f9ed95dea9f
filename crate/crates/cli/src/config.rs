//! Flag/config-file resolution and sidecar round-tripping.
//!
//! A JSON config file can predefine any option; explicitly passed flags win.
//! Every output embeds the effective process parameters and seed, so a run
//! is reproducible from its sidecar alone.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use azema::renewal::RenewalVariant;
use azema::rng::SeedSpec;
use azema::structure::{JumpLaw, StructureFn, DEFAULT_ODE_TOL};

/// Process family selected for a run.
#[derive(Debug, Clone)]
pub enum ProcessSel {
    Linear {
        beta: f64,
    },
    General {
        f: StructureFn,
        jump_law: JumpLaw,
        ode_tol: f64,
    },
    Renewal {
        variant: RenewalVariant,
    },
}

impl ProcessSel {
    pub fn label(&self) -> String {
        match self {
            ProcessSel::Linear { beta } => format!("beta:{beta}"),
            ProcessSel::General { f, .. } => format!("f:{}", f.label()),
            ProcessSel::Renewal { variant } => format!("renewal:{}", variant.label()),
        }
    }
}

/// Raw process flags, also deserializable from a config file.
#[derive(clap::Args, Debug, Clone, Default, Serialize, Deserialize)]
pub struct ProcessOpts {
    /// Linear-family parameter β (closed-form engine).
    #[arg(long, allow_hyphen_values = true, conflicts_with_all = ["f", "renewal"])]
    pub beta: Option<f64>,

    /// Structure coefficient for the general engine:
    /// zero | linear:b | asymmetric:a,b | cubic | poly:c0,c1,...
    #[arg(long, conflicts_with = "renewal")]
    pub f: Option<String>,

    /// Renewal-martingale variant: first | second.
    #[arg(long)]
    pub renewal: Option<String>,

    /// Jump mark law for the general engine: bernoulli | atoms:v:p,v:p,...
    #[arg(long = "jump-law", conflicts_with_all = ["beta", "renewal"])]
    pub jump_law: Option<String>,

    /// Scale (jump-rate ceiling).
    #[arg(long)]
    pub n: Option<u64>,

    /// Starting value.
    #[arg(long, allow_hyphen_values = true)]
    pub x0: Option<f64>,

    /// Simulation horizon.
    #[arg(long)]
    pub tmax: Option<f64>,

    /// Adaptive tolerance of the general engine's integrator.
    #[arg(long = "ode-tol", conflicts_with_all = ["beta", "renewal"])]
    pub ode_tol: Option<f64>,
}

impl ProcessOpts {
    /// Flags win; if the flags select any process, the file's selectors are
    /// dropped wholesale so the two sources cannot mix into an ambiguous
    /// choice.
    pub fn merged(self, file: ProcessOpts) -> ProcessOpts {
        let flags_select = self.beta.is_some() || self.f.is_some() || self.renewal.is_some();
        ProcessOpts {
            beta: self.beta.or(if flags_select { None } else { file.beta }),
            f: self.f.or(if flags_select { None } else { file.f }),
            renewal: self
                .renewal
                .or(if flags_select { None } else { file.renewal }),
            jump_law: self.jump_law.or(file.jump_law),
            n: self.n.or(file.n),
            x0: self.x0.or(file.x0),
            tmax: self.tmax.or(file.tmax),
            ode_tol: self.ode_tol.or(file.ode_tol),
        }
    }

    pub fn resolve(&self) -> Result<ProcessSel> {
        match (&self.beta, &self.f, &self.renewal) {
            (Some(beta), None, None) => Ok(ProcessSel::Linear { beta: *beta }),
            (None, Some(spec), None) => {
                let f = StructureFn::parse(spec)?;
                let jump_law = match &self.jump_law {
                    Some(s) => JumpLaw::parse(s)?,
                    None => JumpLaw::Bernoulli,
                };
                Ok(ProcessSel::General {
                    f,
                    jump_law,
                    ode_tol: self.ode_tol.unwrap_or(DEFAULT_ODE_TOL),
                })
            }
            (None, None, Some(v)) => {
                let variant = match v.as_str() {
                    "first" => RenewalVariant::First,
                    "second" => RenewalVariant::Second,
                    other => bail!("unknown renewal variant `{other}` (first | second)"),
                };
                Ok(ProcessSel::Renewal { variant })
            }
            (None, None, None) => {
                bail!("select a process: --beta <b>, --f <spec>, or --renewal <variant>")
            }
            _ => bail!("select exactly one of --beta, --f, --renewal"),
        }
    }
}

/// Optional config-file section mirroring the command flags.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default)]
pub struct FileConfig {
    #[serde(flatten)]
    pub process: ProcessOpts,
    pub paths: Option<u64>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Option<String>,
    pub t: Option<f64>,
    pub n_list: Option<Vec<u64>>,
    pub only: Option<String>,
    pub negative_controls: Option<bool>,
    pub samples_per_segment: Option<u32>,
    pub width: Option<u32>,
    pub height: Option<u32>,
    pub envelope: Option<bool>,
    pub input: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<FileConfig> {
        match path {
            None => Ok(FileConfig::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("reading config {}", p.display()))?;
                serde_json::from_str(&text)
                    .with_context(|| format!("parsing config {}", p.display()))
            }
        }
    }
}

/// Sidecar for one simulated path; parsing it back reproduces the run.
pub fn run_sidecar(
    process: &ProcessSel,
    n: u64,
    x0: f64,
    t_max: f64,
    seed: SeedSpec,
    jump_count: u64,
) -> Value {
    let (jump_law, ode_tol) = match process {
        ProcessSel::General {
            jump_law, ode_tol, ..
        } => (Some(jump_law.label()), Some(*ode_tol)),
        _ => (None, None),
    };
    json!({
        "schema": "azema-run-sidecar v1",
        "process": process.label(),
        "jump_law": jump_law,
        "ode_tol": ode_tol,
        "n": n,
        "x0": x0,
        "t_max": t_max,
        "seed": seed,
        "jump_count": jump_count,
    })
}

/// Inverse of [`run_sidecar`].
pub fn parse_sidecar(v: &Value) -> Result<(ProcessSel, u64, f64, f64, SeedSpec)> {
    let label = v["process"].as_str().context("sidecar missing `process`")?;
    let process = if let Some(b) = label.strip_prefix("beta:") {
        ProcessSel::Linear { beta: b.parse()? }
    } else if let Some(spec) = label.strip_prefix("f:") {
        let jump_law = match v["jump_law"].as_str() {
            Some(s) => JumpLaw::parse(s)?,
            None => JumpLaw::Bernoulli,
        };
        ProcessSel::General {
            f: StructureFn::parse(spec)?,
            jump_law,
            ode_tol: v["ode_tol"].as_f64().unwrap_or(DEFAULT_ODE_TOL),
        }
    } else if let Some(variant) = label.strip_prefix("renewal:") {
        let variant = match variant {
            "first" => RenewalVariant::First,
            "second" => RenewalVariant::Second,
            other => bail!("sidecar has non-reproducible renewal variant `{other}`"),
        };
        ProcessSel::Renewal { variant }
    } else {
        bail!("unknown process label `{label}`")
    };
    let n = v["n"].as_u64().unwrap_or(1);
    let x0 = v["x0"].as_f64().unwrap_or(0.0);
    let t_max = v["t_max"].as_f64().context("sidecar missing t_max")?;
    let seed: SeedSpec =
        serde_json::from_value(v["seed"].clone()).context("sidecar missing or malformed seed")?;
    Ok((process, n, x0, t_max, seed))
}
