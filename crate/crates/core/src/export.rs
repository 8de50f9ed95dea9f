//! CSV/JSON emission of paths and marginals.
//!
//! Data rows carry 17 significant decimal digits. The CSV schema is
//! versioned in a leading comment line; the JSON sidecar embeds the full
//! effective parameters and seed, which is enough to reproduce the run
//! exactly.

use serde_json::json;

use crate::path::SamplePath;
use crate::renewal::{RenewalPath, RenewalVariant};
use crate::rng::SeedSpec;

pub const PATH_CSV_SCHEMA: &str = "# azema-path-csv v1";
pub const MARGINAL_CSV_SCHEMA: &str = "# azema-marginal-csv v1";

/// 17 significant digits: enough to reconstruct the f64 exactly on read.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

fn seed_comment(seed: SeedSpec) -> String {
    format!("# seed {}:{}\n", seed.master_seed, seed.stream_id)
}

/// Event rows of one path: start, pre/post jump pairs, censored end.
pub fn path_to_csv(path: &SamplePath) -> String {
    let mut out = String::new();
    out.push_str(PATH_CSV_SCHEMA);
    out.push('\n');
    out.push_str(&seed_comment(path.seed));
    out.push_str("t,z,kind\n");
    out.push_str(&format!("{},{},start\n", fmt17(0.0), fmt17(path.x0)));
    for seg in &path.segments {
        match &seg.jump {
            Some(j) => {
                out.push_str(&format!(
                    "{},{},pre_jump\n",
                    fmt17(seg.t_end),
                    fmt17(j.z_pre)
                ));
                out.push_str(&format!(
                    "{},{},post_jump\n",
                    fmt17(seg.t_end),
                    fmt17(j.z_post)
                ));
            }
            None => {
                let z_end = path.flow_value(seg, seg.t_end);
                out.push_str(&format!(
                    "{},{},censored_end\n",
                    fmt17(seg.t_end),
                    fmt17(z_end)
                ));
            }
        }
    }
    out
}

/// Sidecar with engine kind, parameters, and seed.
pub fn path_sidecar(path: &SamplePath) -> serde_json::Value {
    let kind = match &path.kind {
        crate::path::PathKind::Linear { .. } => "linear",
        crate::path::PathKind::General { .. } => "general",
    };
    json!({
        "schema": "azema-path-sidecar v1",
        "engine": kind,
        "kind": path.kind,
        "n": path.n,
        "x0": path.x0,
        "t_max": path.t_max,
        "seed": path.seed,
        "jump_count": path.jump_count(),
    })
}

/// Event rows of a renewal path in the same schema.
pub fn renewal_to_csv(path: &RenewalPath) -> String {
    let mut out = String::new();
    out.push_str(PATH_CSV_SCHEMA);
    out.push('\n');
    out.push_str(&seed_comment(path.seed));
    out.push_str("t,z,kind\n");
    let z0 = path.value_at(0.0).unwrap_or(f64::NAN);
    out.push_str(&format!("{},{},start\n", fmt17(0.0), fmt17(z0)));
    for (i, &s) in path.arrivals.iter().enumerate() {
        let prev = if i == 0 { 0.0 } else { path.arrivals[i - 1] };
        let age = s - prev;
        let (pre, post) = match &path.variant {
            RenewalVariant::First => {
                let tail = crate::renewal::tail_first(age).unwrap_or(f64::NAN);
                (path.signs[i] / tail, path.signs[i + 1])
            }
            RenewalVariant::Second => {
                let tail = crate::renewal::tail_second(age).unwrap_or(f64::NAN);
                (1.0 / tail - i as f64, -(i as f64))
            }
            RenewalVariant::Custom(c) => {
                let tail = (c.tail)(age);
                (path.signs[i] / tail, path.signs[i + 1])
            }
        };
        out.push_str(&format!("{},{},pre_jump\n", fmt17(s), fmt17(pre)));
        out.push_str(&format!("{},{},post_jump\n", fmt17(s), fmt17(post)));
    }
    let z_end = path.value_at(path.t_max).unwrap_or(f64::NAN);
    out.push_str(&format!(
        "{},{},censored_end\n",
        fmt17(path.t_max),
        fmt17(z_end)
    ));
    out
}

pub fn renewal_sidecar(path: &RenewalPath) -> serde_json::Value {
    json!({
        "schema": "azema-path-sidecar v1",
        "engine": "renewal",
        "variant": path.variant.label(),
        "t_max": path.t_max,
        "seed": path.seed,
        "jump_count": path.arrivals.len(),
    })
}

/// Marginal samples (one value per path index) as CSV; the seed is the base
/// spec of path 0.
pub fn marginals_to_csv(values: &[f64], seed: SeedSpec) -> String {
    let mut out = String::new();
    out.push_str(MARGINAL_CSV_SCHEMA);
    out.push('\n');
    out.push_str(&seed_comment(seed));
    out.push_str("path,z\n");
    for (i, v) in values.iter().enumerate() {
        out.push_str(&format!("{i},{}\n", fmt17(*v)));
    }
    out
}

pub fn marginal_sidecar(
    spec_label: &str,
    n: u64,
    x0: f64,
    t: f64,
    m: u64,
    seed: SeedSpec,
) -> serde_json::Value {
    json!({
        "schema": "azema-marginal-sidecar v1",
        "process": spec_label,
        "n": n,
        "x0": x0,
        "t": t,
        "paths": m,
        "seed": seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::{simulate_path, AzemaParams};

    #[test]
    fn second_variant_post_jump_value() {
        // After the i-th arrival (1-based), Z̃ = 1/F̄(0) − i = 1 − i.
        use crate::renewal::{simulate_renewal, RenewalParams, RenewalVariant};
        let params = RenewalParams::new(RenewalVariant::Second, 12.0, SeedSpec::new(5, 5));
        let path = simulate_renewal(&params).unwrap();
        if !path.arrivals.is_empty() {
            let s1 = path.arrivals[0];
            let just_after = path.value_at(s1).unwrap();
            assert!((just_after - 0.0).abs() < 1e-9, "{just_after}");
        }
        let csv = renewal_to_csv(&path);
        assert!(csv.starts_with(PATH_CSV_SCHEMA));
    }

    #[test]
    fn csv_round_trips_f64_exactly() {
        for x in [std::f64::consts::PI / 3.0, 1.0 / 3.0, 6.02e23, -1e-300] {
            let s = fmt17(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(x, back);
        }
    }

    #[test]
    fn path_csv_shape() {
        let params = AzemaParams::new(-1.0, 4, 0.5, 1.0, SeedSpec::new(1, 1));
        let path = simulate_path(&params).unwrap();
        let csv = path_to_csv(&path);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], PATH_CSV_SCHEMA);
        assert_eq!(lines[1], "# seed 1:1");
        assert_eq!(lines[2], "t,z,kind");
        assert!(lines[3].ends_with(",start"));
        assert!(lines.last().unwrap().ends_with(",censored_end"));
        // 2 rows per jump + start + censored end + 3 header lines.
        assert_eq!(lines.len(), 3 + 1 + 2 * path.jump_count() as usize + 1);
        let sidecar = path_sidecar(&path);
        assert_eq!(sidecar["engine"], "linear");
        assert_eq!(sidecar["seed"]["master_seed"], 1);
    }
}
