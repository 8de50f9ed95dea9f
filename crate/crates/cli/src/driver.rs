//! Command implementations: path simulation, marginal sampling, the
//! verification battery, convergence tables, and plotting.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use serde_json::{json, Value};

use azema::battery;
use azema::export;
use azema::mc;
use azema::path::SamplePath;
use azema::renewal::{simulate_renewal, RenewalParams, RenewalPath};
use azema::rng::SeedSpec;
use azema::sampler::{simulate_path, AzemaParams};
use azema::structure::{simulate_general, GeneralParams};

use crate::config::{parse_sidecar, run_sidecar, ProcessSel};
use crate::svg::SvgPlot;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => bail!("unknown format `{other}` (csv | json)"),
        }
    }
}

enum AnyPath {
    Engine(Box<SamplePath>),
    Renewal(RenewalPath),
}

fn simulate_one(
    process: &ProcessSel,
    n: u64,
    x0: f64,
    t_max: f64,
    seed: SeedSpec,
) -> Result<AnyPath> {
    Ok(match process {
        ProcessSel::Linear { beta } => AnyPath::Engine(Box::new(simulate_path(
            &AzemaParams::new(*beta, n, x0, t_max, seed),
        )?)),
        ProcessSel::General {
            f,
            jump_law,
            ode_tol,
        } => {
            let mut params = GeneralParams::new(f.clone(), n, x0, t_max, jump_law.clone(), seed);
            params.ode_tol = *ode_tol;
            AnyPath::Engine(Box::new(simulate_general(&params)?))
        }
        ProcessSel::Renewal { variant } => AnyPath::Renewal(simulate_renewal(
            &RenewalParams::new(variant.clone(), t_max, seed),
        )?),
    })
}

fn path_csv(p: &AnyPath) -> String {
    match p {
        AnyPath::Engine(path) => export::path_to_csv(path),
        AnyPath::Renewal(path) => export::renewal_to_csv(path),
    }
}

fn path_events_json(p: &AnyPath) -> Value {
    // Reuse the CSV rows as the canonical event list, skipping the comment
    // and header lines.
    let csv = path_csv(p);
    let events: Vec<Value> = csv
        .lines()
        .skip(3)
        .map(|line| {
            let mut cols = line.split(',');
            json!({
                "t": cols.next().unwrap_or(""),
                "z": cols.next().unwrap_or(""),
                "kind": cols.next().unwrap_or(""),
            })
        })
        .collect();
    Value::Array(events)
}

fn jump_count(p: &AnyPath) -> u64 {
    match p {
        AnyPath::Engine(path) => path.jump_count(),
        AnyPath::Renewal(path) => path.arrivals.len() as u64,
    }
}

pub struct SimulateCmd {
    pub process: ProcessSel,
    pub n: u64,
    pub x0: f64,
    pub t_max: f64,
    pub paths: u64,
    pub master_seed: u64,
    pub workers: usize,
    pub out: PathBuf,
    pub format: OutputFormat,
}

/// Simulates M paths (stream i = path index) and writes one data file plus
/// one sidecar per path. Output bytes are independent of worker count.
pub fn run_simulate(cmd: &SimulateCmd) -> Result<Vec<PathBuf>> {
    let results = mc::par_map(cmd.workers, cmd.paths, |i| {
        let seed = SeedSpec::new(cmd.master_seed, i);
        simulate_one(&cmd.process, cmd.n, cmd.x0, cmd.t_max, seed).map(|p| {
            let sidecar = run_sidecar(&cmd.process, cmd.n, cmd.x0, cmd.t_max, seed, jump_count(&p));
            match cmd.format {
                OutputFormat::Csv => (path_csv(&p), sidecar),
                OutputFormat::Json => (
                    serde_json::to_string_pretty(&json!({
                        "sidecar": sidecar,
                        "events": path_events_json(&p),
                    }))
                    .expect("serializes")
                        + "\n",
                    sidecar,
                ),
            }
        })
    });

    let single_file = cmd.paths == 1 && cmd.out.extension().is_some();
    if !single_file {
        std::fs::create_dir_all(&cmd.out)
            .with_context(|| format!("creating {}", cmd.out.display()))?;
    }
    let mut written = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        let (data, sidecar) = r?;
        let (data_path, sidecar_path) = if single_file {
            (cmd.out.clone(), cmd.out.with_extension("json"))
        } else {
            let ext = match cmd.format {
                OutputFormat::Csv => "csv",
                OutputFormat::Json => "json",
            };
            (
                cmd.out.join(format!("path_{i:05}.{ext}")),
                cmd.out.join(format!("path_{i:05}.sidecar.json")),
            )
        };
        std::fs::write(&data_path, &data)
            .with_context(|| format!("writing {}", data_path.display()))?;
        if !(single_file && cmd.format == OutputFormat::Json) {
            std::fs::write(
                &sidecar_path,
                serde_json::to_string_pretty(&sidecar)? + "\n",
            )?;
            written.push(sidecar_path);
        }
        written.push(data_path);
    }
    Ok(written)
}

pub struct MarginalCmd {
    pub process: ProcessSel,
    pub n: u64,
    pub x0: f64,
    pub t: f64,
    pub paths: u64,
    pub master_seed: u64,
    pub workers: usize,
    pub out: PathBuf,
    pub format: OutputFormat,
}

/// Values Z_t across M paths, one row per path index.
pub fn run_marginal(cmd: &MarginalCmd) -> Result<Vec<PathBuf>> {
    let seed = SeedSpec::new(cmd.master_seed, 0);
    let values = match &cmd.process {
        ProcessSel::Linear { beta } => {
            battery::linear_marginals(*beta, cmd.n, cmd.x0, cmd.t, cmd.paths, seed, cmd.workers)?
        }
        ProcessSel::General {
            f,
            jump_law,
            ode_tol,
        } => battery::general_marginals_tol(
            f,
            jump_law,
            cmd.n,
            cmd.x0,
            cmd.t,
            cmd.paths,
            seed,
            cmd.workers,
            *ode_tol,
        )?,
        ProcessSel::Renewal { variant } => {
            battery::renewal_marginals(variant, cmd.t, cmd.paths, seed, cmd.workers)?
        }
    };
    let sidecar =
        export::marginal_sidecar(&cmd.process.label(), cmd.n, cmd.x0, cmd.t, cmd.paths, seed);
    let mut written = Vec::new();
    match cmd.format {
        OutputFormat::Csv => {
            std::fs::write(&cmd.out, export::marginals_to_csv(&values, seed))?;
            let sc = cmd.out.with_extension("json");
            std::fs::write(&sc, serde_json::to_string_pretty(&sidecar)? + "\n")?;
            written.push(sc);
        }
        OutputFormat::Json => {
            let doc = json!({ "sidecar": sidecar, "values": values });
            std::fs::write(&cmd.out, serde_json::to_string_pretty(&doc)? + "\n")?;
        }
    }
    written.push(cmd.out.clone());
    Ok(written)
}

pub struct VerifyCmd {
    pub only: Option<String>,
    pub negative_controls: bool,
    pub master_seed: u64,
    pub workers: usize,
    pub out: Option<PathBuf>,
}

/// Runs the battery; returns (reports, all_required_passed).
pub fn run_verify(cmd: &VerifyCmd) -> Result<(Vec<azema::verify::TestReport>, bool)> {
    let reports = match &cmd.only {
        Some(name) => battery::run_battery(name, cmd.master_seed, cmd.workers)?,
        None => battery::run_all(cmd.master_seed, cmd.workers, cmd.negative_controls)?,
    };
    if let Some(out) = &cmd.out {
        let mut doc = String::new();
        for r in &reports {
            doc.push_str(&r.json_line());
            doc.push('\n');
        }
        std::fs::write(out, doc).with_context(|| format!("writing {}", out.display()))?;
    }
    let ok = reports.iter().all(|r| r.pass || r.advisory);
    Ok((reports, ok))
}

pub struct ConvergeCmd {
    pub beta: f64,
    pub n_list: Vec<u64>,
    pub t: f64,
    pub paths: u64,
    pub master_seed: u64,
    pub workers: usize,
    pub out: Option<PathBuf>,
}

pub fn run_converge(cmd: &ConvergeCmd) -> Result<battery::ConvergenceTable> {
    let table = battery::convergence_report(
        cmd.beta,
        &cmd.n_list,
        cmd.t,
        cmd.paths,
        cmd.master_seed,
        cmd.workers,
    )?;
    if let Some(out) = &cmd.out {
        std::fs::write(out, table.csv())?;
    }
    Ok(table)
}

pub struct PlotCmd {
    pub input: PathBuf,
    pub out: PathBuf,
    pub samples_per_segment: u32,
    pub width: u32,
    pub height: u32,
    pub envelope: bool,
}

/// Re-simulates the path described by a sidecar and renders it.
pub fn run_plot(cmd: &PlotCmd) -> Result<PathBuf> {
    let text = std::fs::read_to_string(&cmd.input)
        .with_context(|| format!("reading {}", cmd.input.display()))?;
    let doc: Value = serde_json::from_str(&text)?;
    // Accept either a bare sidecar or a JSON-format path file.
    let sidecar = if doc.get("sidecar").is_some() {
        &doc["sidecar"]
    } else {
        &doc
    };
    let (process, n, x0, t_max, seed) = parse_sidecar(sidecar)?;
    let path = simulate_one(&process, n, x0, t_max, seed)?;

    let mut flows = Vec::new();
    let mut jumps = Vec::new();
    match &path {
        AnyPath::Engine(p) => {
            if p.segments.is_empty() {
                bail!("empty path");
            }
            for seg in &p.segments {
                let mut poly = Vec::new();
                let samples = cmd.samples_per_segment.max(2);
                for k in 0..=samples {
                    let t = seg.t_start + (seg.t_end - seg.t_start) * k as f64 / samples as f64;
                    let z = if k == samples {
                        match &seg.jump {
                            Some(j) => j.z_pre,
                            None => p.flow_value(seg, seg.t_end),
                        }
                    } else {
                        p.flow_value(seg, t)
                    };
                    poly.push((t, z));
                }
                if let Some(j) = &seg.jump {
                    jumps.push((seg.t_end, j.z_pre, j.z_post));
                }
                flows.push(poly);
            }
        }
        AnyPath::Renewal(p) => {
            let mut boundaries = vec![0.0];
            boundaries.extend(p.arrivals.iter().copied());
            boundaries.push(t_max);
            for w in boundaries.windows(2) {
                let (a, b) = (w[0], w[1]);
                if b <= a {
                    continue;
                }
                let samples = cmd.samples_per_segment.max(2);
                let mut poly = Vec::new();
                for k in 0..=samples {
                    // Stay left of the next arrival so the polyline tracks
                    // the pre-jump branch.
                    let frac = k as f64 / samples as f64;
                    let t = (a + (b - a) * frac).min(b - (b - a) * 1e-9);
                    poly.push((t, p.value_at(t)?));
                }
                flows.push(poly);
            }
            for (i, &s) in p.arrivals.iter().enumerate() {
                let prev = if i == 0 { 0.0 } else { p.arrivals[i - 1] };
                let pre = p.value_at((s - 1e-12 * (1.0 + s)).max(prev))?;
                let post = p.value_at(s)?;
                jumps.push((s, pre, post));
            }
        }
    }

    let title = format!(
        "{} n={} x0={} seed=({},{})",
        process.label(),
        n,
        x0,
        seed.master_seed,
        seed.stream_id
    );
    let envelope = if cmd.envelope { Some(t_max) } else { None };
    let plot = SvgPlot {
        width: cmd.width,
        height: cmd.height,
        title,
        flows,
        jumps,
        envelope,
        t_max,
    };
    std::fs::write(&cmd.out, plot.render())
        .with_context(|| format!("writing {}", cmd.out.display()))?;
    Ok(cmd.out.clone())
}

/// Renders a quick textual table for the terminal.
pub fn converge_table_text(table: &battery::ConvergenceTable) -> String {
    let mut s = String::new();
    s.push_str(&format!(
        "beta = {}, t = {}, paths per scale = {}\n",
        table.beta, table.t, table.paths_per_scale
    ));
    s.push_str(&format!(
        "{:>8} {:>16} {:>18} {:>20} {:>18}\n",
        "n", "ks_to_ref", "med_time_resid", "med_|jump_resid|", "med_jumps/n"
    ));
    for r in &table.rows {
        s.push_str(&format!(
            "{:>8} {:>16.6e} {:>18.6e} {:>20.6e} {:>18.6e}\n",
            r.n,
            r.ks_to_reference,
            r.median_time_residual,
            r.median_abs_jump_residual,
            r.median_jump_count_over_n
        ));
    }
    s.push_str(&format!(
        "monotone columns: {} (worst inversions = {})\n",
        if table.pass { "PASS" } else { "FAIL" },
        table.worst_column_inversions
    ));
    s
}

/// Parses "100,1000,10000".
pub fn parse_n_list(s: &str) -> Result<Vec<u64>> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<u64>()
                .map_err(|e| anyhow::anyhow!("bad n `{p}`: {e}"))
        })
        .collect()
}

#[allow(dead_code)]
fn _assert_send(_: &dyn Send) {}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ProcessOpts;

    fn tmp_dir(tag: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("azema-cli-test-{tag}-{}", std::process::id()));
        let _ = std::fs::remove_dir_all(&dir);
        std::fs::create_dir_all(&dir).unwrap();
        dir
    }

    fn linear_process(beta: f64) -> ProcessSel {
        ProcessOpts {
            beta: Some(beta),
            ..Default::default()
        }
        .resolve()
        .unwrap()
    }

    #[test]
    fn simulate_writes_per_path_files() {
        let dir = tmp_dir("simulate");
        let cmd = SimulateCmd {
            process: linear_process(-1.0),
            n: 4,
            x0: 0.0,
            t_max: 1.0,
            paths: 3,
            master_seed: 7,
            workers: 2,
            out: dir.clone(),
            format: OutputFormat::Csv,
        };
        let files = run_simulate(&cmd).unwrap();
        assert_eq!(files.len(), 6);
        let csv = std::fs::read_to_string(dir.join("path_00000.csv")).unwrap();
        assert!(csv.starts_with("# azema-path-csv v1"));
        let _ = std::fs::remove_dir_all(&dir);
    }

    #[test]
    fn marginal_csv_has_one_row_per_path() {
        let dir = tmp_dir("marginal");
        let out = dir.join("marg.csv");
        let cmd = MarginalCmd {
            process: linear_process(0.0),
            n: 16,
            x0: 0.0,
            t: 0.5,
            paths: 50,
            master_seed: 3,
            workers: 2,
            out: out.clone(),
            format: OutputFormat::Csv,
        };
        run_marginal(&cmd).unwrap();
        let text = std::fs::read_to_string(&out).unwrap();
        assert_eq!(text.lines().count(), 3 + 50);
        let _ = std::fs::remove_dir_all(&dir);
    }

    #[test]
    fn plot_round_trips_from_sidecar() {
        let dir = tmp_dir("plot");
        let sim = SimulateCmd {
            process: linear_process(-2.0),
            n: 100,
            x0: 0.0,
            t_max: 1.0,
            paths: 1,
            master_seed: 11,
            workers: 1,
            out: dir.join("run.csv"),
            format: OutputFormat::Csv,
        };
        run_simulate(&sim).unwrap();
        let plot = PlotCmd {
            input: dir.join("run.json"),
            out: dir.join("run.svg"),
            samples_per_segment: 20,
            width: 640,
            height: 360,
            envelope: true,
        };
        run_plot(&plot).unwrap();
        let svg = std::fs::read_to_string(dir.join("run.svg")).unwrap();
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("stroke-dasharray"));
        let _ = std::fs::remove_dir_all(&dir);
    }

    #[test]
    fn n_list_parser() {
        assert_eq!(
            parse_n_list("100, 1000,10000").unwrap(),
            vec![100, 1000, 10000]
        );
        assert!(parse_n_list("10,x").is_err());
    }
}
