//! `run <config.json>`: execute a scenario and write its artifacts.

use std::path::{Path, PathBuf};

use anyhow::Context;
use polar_bohm::analysis::{averaged_density, sample_grid};
use polar_bohm::dynamics::{integrate, IntegrationParams};
use polar_bohm::topology::{classify_field, trace_separatrices};
use polar_bohm::{Path as Trajectory, Report, StateKind};
use rayon::prelude::*;

use crate::config::ScenarioConfig;
use crate::output::{self, EquilibriaReport, Figure};

/// Coarse raster behind the SVG trajectories.
const SVG_RASTER: usize = 96;

#[derive(Debug)]
pub struct RunSummary {
    pub dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub trajectories: Vec<Trajectory>,
    pub report: Option<Report>,
}

pub fn cmd_run(config_path: &Path) -> anyhow::Result<RunSummary> {
    let cfg = ScenarioConfig::load(config_path)?;
    let dir = cfg.output_dir();
    run_scenario(&cfg, &dir)
}

pub fn run_scenario(cfg: &ScenarioConfig, dir: &Path) -> anyhow::Result<RunSummary> {
    cfg.validate()?;
    let state = cfg.state.build()?;
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let out = &cfg.outputs;
    let mut files = Vec::new();
    let region = cfg.region;
    let t0 = cfg.integration.t0;

    let mut trajectories = Vec::new();
    if out.trajectories || out.svg {
        let seeds = cfg.seed_points(&state)?;
        let params = cfg.integration.params();
        trajectories = seeds
            .par_iter()
            .enumerate()
            .map(|(k, &s)| integrate(&state, s, &params).with_context(|| format!("trajectory {k} from ({}, {})", s[0], s[1])))
            .collect::<anyhow::Result<Vec<_>>>()?;
        if out.trajectories {
            for (k, t) in trajectories.iter().enumerate() {
                let path = dir.join(format!("traj_{k}.csv"));
                output::write_trajectory_csv(&path, t)?;
                files.push(path);
            }
        }
    }

    if out.field_grid {
        let g = sample_grid(&state, &region, out.grid_size, out.grid_size, t0)?;
        let path = dir.join("field.csv");
        output::write_field_csv(&path, &g)?;
        files.push(path);
    }

    if out.averaged_density {
        let a = averaged_density(&state, &region, out.grid_size, out.grid_size, out.time_samples)?;
        let path = dir.join("averaged_density.csv");
        output::write_averaged_csv(&path, &a)?;
        files.push(path);
    }

    let mut report = None;
    let mut separatrices = Vec::new();
    if out.equilibria && state.kind() == StateKind::NumberBasis {
        let r = classify_field(&state, &region, t0)?;
        let path = dir.join("equilibria.json");
        EquilibriaReport::new(&cfg.state, &region, t0, &r).write(&path)?;
        files.push(path);
        if out.separatrices {
            let params = IntegrationParams { bounds: Some(region), ..cfg.integration.params() };
            for (s, saddle) in r.saddles.iter().enumerate() {
                let sep = trace_separatrices(&state, saddle, &params)?;
                for (b, branch) in sep.branches.iter().enumerate() {
                    let path = dir.join(format!("separatrix_{s}_{b}.csv"));
                    output::write_trajectory_csv(&path, &branch.trajectory)?;
                    files.push(path);
                    separatrices.push(branch.trajectory.samples.iter().map(|p| p.x).collect());
                }
            }
        }
        report = Some(r);
    }

    if out.svg {
        let background = sample_grid(&state, &region, SVG_RASTER, SVG_RASTER, t0)?;
        let fig = Figure {
            region,
            background: Some(&background),
            paths: trajectories.iter().map(|t| t.samples.iter().map(|p| p.x).collect()).collect(),
            separatrices,
            nodes: report.iter().flat_map(|r| r.nodes.iter().map(|p| p.position)).collect(),
            saddles: report.iter().flat_map(|r| r.saddles.iter().map(|p| p.position)).collect(),
        };
        let path = dir.join("figure.svg");
        std::fs::write(&path, fig.render()).with_context(|| format!("writing {}", path.display()))?;
        files.push(path);
    }

    Ok(RunSummary { dir: dir.to_path_buf(), files, trajectories, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::output::read_trajectory_csv;

    fn scenario(name: &str) -> ScenarioConfig {
        let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name);
        ScenarioConfig::load(&path).unwrap()
    }

    #[test]
    fn ellipses_close_and_are_translates() {
        let cfg = scenario("coherent_ellipses.json");
        let dir = tempfile::tempdir().unwrap();
        let run = run_scenario(&cfg, dir.path()).unwrap();
        let trajs: Vec<_> = (0..3).map(|k| read_trajectory_csv(&dir.path().join(format!("traj_{k}.csv"))).unwrap()).collect();
        for t in &trajs {
            let (a, b) = (t[0], t[t.len() - 1]);
            assert!((a[1] - b[1]).hypot(a[2] - b[2]) < 1e-6);
        }
        // the displaced ellipses are shifted copies, not concentric
        let d = [trajs[1][0][1] - trajs[0][0][1], trajs[1][0][2] - trajs[0][0][2]];
        assert!(d[0].hypot(d[1]) > 0.5);
        for (p, q) in trajs[0].iter().zip(&trajs[1]) {
            assert!((q[1] - p[1] - d[0]).abs() < 1e-8 && (q[2] - p[2] - d[1]).abs() < 1e-8);
        }
        assert!(run.files.iter().any(|f| f.ends_with("figure.svg")));
        assert!(run.report.is_none());
    }

    #[test]
    fn su2_and_noon_equilibria_counts() {
        for (name, nodes, saddles) in [("su2_n3.json", 3, 2), ("noon_n3.json", 9, 4)] {
            let mut cfg = scenario(name);
            cfg.outputs.field_grid = false;
            cfg.outputs.averaged_density = false;
            let dir = tempfile::tempdir().unwrap();
            run_scenario(&cfg, dir.path()).unwrap();
            let text = std::fs::read_to_string(dir.path().join("equilibria.json")).unwrap();
            let report: EquilibriaReport = serde_json::from_str(&text).unwrap();
            assert_eq!((report.nodes.len(), report.saddles.len()), (nodes, saddles), "{name}");
            // JSON floats are lossless
            let again: EquilibriaReport = serde_json::from_str(&report.to_json()).unwrap();
            assert_eq!(again, report);
        }
    }

    #[test]
    fn field_csv_layout() {
        let mut cfg = scenario("su2_n3.json");
        cfg.outputs = crate::config::Outputs { field_grid: true, averaged_density: true, grid_size: 9, ..cfg.outputs.clone() };
        cfg.outputs.trajectories = false;
        cfg.outputs.equilibria = false;
        cfg.outputs.svg = false;
        let dir = tempfile::tempdir().unwrap();
        run_scenario(&cfg, dir.path()).unwrap();
        let field = std::fs::read_to_string(dir.path().join("field.csv")).unwrap();
        let mut lines = field.lines();
        assert_eq!(lines.next().unwrap(), "x1,x2,density,v1,v2,j1,j2,re_psi,im_psi,masked");
        assert_eq!(lines.count(), 81);
        let avg = std::fs::read_to_string(dir.path().join("averaged_density.csv")).unwrap();
        assert!(avg.starts_with("x1,x2,p_bar\n"));
    }

    #[test]
    fn density_sampled_seeds_are_reproducible() {
        let mut cfg = scenario("su2_n3.json");
        cfg.seeds = crate::config::Seeds::Sample(crate::config::SampleSeeds { density_sample: 5 });
        cfg.integration.t1 = 0.2;
        cfg.outputs = crate::config::Outputs { trajectories: true, ..cfg.outputs.clone() };
        cfg.outputs.equilibria = false;
        cfg.outputs.svg = false;
        cfg.outputs.field_grid = false;
        cfg.outputs.averaged_density = false;
        let a = run_scenario(&cfg, tempfile::tempdir().unwrap().path()).unwrap();
        let b = run_scenario(&cfg, tempfile::tempdir().unwrap().path()).unwrap();
        assert_eq!(a.trajectories, b.trajectories);
    }
}
