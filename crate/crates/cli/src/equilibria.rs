//! `equilibria`: classify the nodes and saddles of one state from flags.

use std::path::PathBuf;

use anyhow::{anyhow, bail};
use clap::Args;
use polar_bohm::topology::{classify_field, find_nodes};
use polar_bohm::Region;

use crate::config::{StateKind, StateSpec};
use crate::output::EquilibriaReport;

#[derive(Debug, Clone, Args)]
pub struct EquilibriaArgs {
    /// glauber, su2, noon, glauber_truncated
    #[arg(long, value_parser = parse_kind)]
    pub state: StateKind,
    /// Mode-1 amplitude as `re,im`.
    #[arg(long, allow_hyphen_values = true, value_parser = parse_pair)]
    pub alpha1: [f64; 2],
    /// Mode-2 amplitude as `re,im`.
    #[arg(long, allow_hyphen_values = true, value_parser = parse_pair)]
    pub alpha2: [f64; 2],
    /// Total photon number (su2, noon).
    #[arg(long)]
    pub n: Option<usize>,
    /// Truncation order (glauber_truncated).
    #[arg(long)]
    pub n_max: Option<usize>,
    /// `x_min,x_max,y_min,y_max`.
    #[arg(long, default_value = "-6,6,-6,6", allow_hyphen_values = true, value_parser = parse_region)]
    pub region: [f64; 4],
    /// Scan cells per axis.
    #[arg(long, default_value_t = 256)]
    pub resolution: usize,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub t: f64,
    /// Write the JSON report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_kind(s: &str) -> Result<StateKind, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string()))
        .map_err(|_| format!("unknown state '{s}' (glauber, su2, noon, glauber_truncated)"))
}

fn parse_list(s: &str, len: usize) -> Result<Vec<f64>, String> {
    let v: Vec<f64> = s.split(',').map(|p| p.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|e| format!("'{s}': {e}"))?;
    if v.len() != len {
        return Err(format!("'{s}': expected {len} comma-separated numbers"));
    }
    Ok(v)
}

pub fn parse_pair(s: &str) -> Result<[f64; 2], String> {
    parse_list(s, 2).map(|v| [v[0], v[1]])
}

fn parse_region(s: &str) -> Result<[f64; 4], String> {
    parse_list(s, 4).map(|v| [v[0], v[1], v[2], v[3]])
}

pub fn cmd_equilibria(args: &EquilibriaArgs) -> anyhow::Result<EquilibriaReport> {
    if args.state == StateKind::Custom {
        bail!("custom states are only available through `run`");
    }
    let spec = StateSpec {
        kind: args.state,
        alpha1: Some(args.alpha1),
        alpha2: Some(args.alpha2),
        n: args.n,
        n_max: args.n_max,
        coefficients: None,
    };
    let state = spec.build()?;
    let [x_min, x_max, y_min, y_max] = args.region;
    let region = Region::new(x_min, x_max, y_min, y_max, args.resolution).map_err(|e| anyhow!("--region: {e}"))?;
    // surfaces the Glauber error before any scanning
    find_nodes(&state, &Region::square(1.0).with_resolution(16), args.t)?;
    let report = classify_field(&state, &region, args.t)?;
    let out = EquilibriaReport::new(&spec, &region, args.t, &report);
    if let Some(path) = &args.out {
        out.write(path)?;
    }
    Ok(out)
}
