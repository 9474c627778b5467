//! CSV, JSON and SVG writers.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::Context;
use polar_bohm::topology::EquilibriumKind;
use polar_bohm::{Averaged, Grid, Path as Trajectory, Region, Report};
use serde::{Deserialize, Serialize};

use crate::config::StateSpec;

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else {
        format!("{v:.16e}")
    }
}

fn create(path: &Path) -> anyhow::Result<BufWriter<fs::File>> {
    let f = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn finish(mut w: BufWriter<fs::File>, path: &Path) -> anyhow::Result<()> {
    w.flush().with_context(|| format!("writing {}", path.display()))
}

pub fn write_trajectory_csv(path: &Path, traj: &Trajectory) -> anyhow::Result<()> {
    let mut w = create(path)?;
    writeln!(w, "t,x1,x2")?;
    for p in &traj.samples {
        writeln!(w, "{},{},{}", fmt_f64(p.t), fmt_f64(p.x[0]), fmt_f64(p.x[1]))?;
    }
    finish(w, path)
}

pub fn write_field_csv(path: &Path, g: &Grid) -> anyhow::Result<()> {
    let mut w = create(path)?;
    writeln!(w, "x1,x2,density,v1,v2,j1,j2,re_psi,im_psi,masked")?;
    for i in 0..g.nx {
        for j in 0..g.ny {
            let p = g.point(i, j);
            let idx = [i, j];
            let row = [p[0], p[1], g.density[idx], g.v1[idx], g.v2[idx], g.j1[idx], g.j2[idx], g.re_psi[idx], g.im_psi[idx]];
            let cells: Vec<String> = row.iter().map(|&v| fmt_f64(v)).collect();
            writeln!(w, "{},{}", cells.join(","), u8::from(g.mask[idx]))?;
        }
    }
    finish(w, path)
}

pub fn write_averaged_csv(path: &Path, a: &Averaged) -> anyhow::Result<()> {
    let mut w = create(path)?;
    writeln!(w, "x1,x2,p_bar")?;
    for i in 0..a.nx {
        for j in 0..a.ny {
            let p = a.point(i, j);
            writeln!(w, "{},{},{}", fmt_f64(p[0]), fmt_f64(p[1]), fmt_f64(a.values[[i, j]]))?;
        }
    }
    finish(w, path)
}

/// Reads a `t,x1,x2` file back; used by tests and downstream tools.
pub fn read_trajectory_csv(path: &Path) -> anyhow::Result<Vec<[f64; 3]>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut rows = Vec::new();
    for (k, line) in text.lines().enumerate().skip(1) {
        let v: Vec<f64> = line.split(',').map(str::parse).collect::<Result<_, _>>().with_context(|| format!("line {}", k + 1))?;
        anyhow::ensure!(v.len() == 3, "line {}: expected 3 columns", k + 1);
        rows.push([v[0], v[1], v[2]]);
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub position: [f64; 2],
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub charge: Option<i64>,
    pub density_residual: f64,
    pub speed_residual: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub jacobian_eigenvalues: Option<[f64; 2]>,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriaReport {
    pub state: StateSpec,
    pub region: Region,
    pub time: f64,
    pub nodes: Vec<PointRecord>,
    pub saddles: Vec<PointRecord>,
    pub total_charge: i64,
    pub boundary_circulation: f64,
    pub warnings: Vec<String>,
    /// RFC 3339 timestamp.
    pub generated_at: String,
}

impl EquilibriaReport {
    pub fn new(state: &StateSpec, region: &Region, time: f64, report: &Report) -> Self {
        let record = |p: &polar_bohm::Equilibrium| PointRecord {
            position: p.position,
            kind: match p.kind {
                EquilibriumKind::Node => "node",
                EquilibriumKind::Saddle => "saddle",
                EquilibriumKind::Extremum => "extremum",
            }
            .to_string(),
            charge: p.charge,
            density_residual: p.density_residual,
            speed_residual: p.speed_residual,
            jacobian_eigenvalues: p.jacobian_eigenvalues,
            degenerate: p.degenerate,
        };
        EquilibriaReport {
            state: state.clone(),
            region: *region,
            time,
            nodes: report.nodes.iter().map(record).collect(),
            saddles: report.saddles.iter().map(record).collect(),
            total_charge: report.total_charge,
            boundary_circulation: report.boundary_circulation,
            warnings: report.warnings.clone(),
            generated_at: chrono::Utc::now().to_rfc3339(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn write(&self, path: &Path) -> anyhow::Result<()> {
        fs::write(path, self.to_json() + "\n").with_context(|| format!("writing {}", path.display()))
    }

    /// Plain-text table for the terminal.
    pub fn table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<8} {:>12} {:>12} {:>7} {:>11} {:>11}", "kind", "x1", "x2", "charge", "|psi|^2", "|j|");
        for p in self.nodes.iter().chain(&self.saddles) {
            let charge = p.charge.map_or("-".to_string(), |c| format!("{c:+}"));
            let _ = writeln!(
                s,
                "{:<8} {:>12.8} {:>12.8} {:>7} {:>11.3e} {:>11.3e}",
                p.kind, p.position[0], p.position[1], charge, p.density_residual, p.speed_residual
            );
        }
        let _ = writeln!(
            s,
            "{} nodes, {} saddles, total charge {:+}, boundary circulation / 2pi = {:.6}",
            self.nodes.len(),
            self.saddles.len(),
            self.total_charge,
            self.boundary_circulation / std::f64::consts::TAU
        );
        s
    }
}

const PALETTE: [&str; 6] = ["#d62728", "#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd", "#17becf"];

/// Polylines over a grayscale density raster (darker is denser).
pub struct Figure<'a> {
    pub region: Region,
    pub background: Option<&'a Grid>,
    pub paths: Vec<Vec<[f64; 2]>>,
    /// Drawn dashed, in black.
    pub separatrices: Vec<Vec<[f64; 2]>>,
    pub nodes: Vec<[f64; 2]>,
    pub saddles: Vec<[f64; 2]>,
}

impl Figure<'_> {
    pub fn render(&self) -> String {
        let size = 600.0;
        let r = &self.region;
        let sx = size / (r.x_max - r.x_min);
        let sy = size / (r.y_max - r.y_min);
        let map = |p: [f64; 2]| ((p[0] - r.x_min) * sx, (r.y_max - p[1]) * sy);
        let mut s = String::new();
        let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">"#);
        let _ = writeln!(s, r#"<rect width="{size}" height="{size}" fill="white"/>"#);
        if let Some(g) = self.background {
            let peak = g.density.iter().copied().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
            let (w, h) = ((g.region.x_max - g.region.x_min) / g.nx as f64, (g.region.y_max - g.region.y_min) / g.ny as f64);
            for i in 0..g.nx {
                for j in 0..g.ny {
                    let level = 255 - (255.0 * (g.density[[i, j]] / peak).sqrt()).round() as u8;
                    if level == 255 {
                        continue;
                    }
                    let c = g.point(i, j);
                    let (x, y) = map([c[0] - 0.5 * w, c[1] + 0.5 * h]);
                    let _ = writeln!(
                        s,
                        r#"<rect x="{x:.2}" y="{y:.2}" width="{:.2}" height="{:.2}" fill="rgb({level},{level},{level})"/>"#,
                        w * sx + 0.3,
                        h * sy + 0.3
                    );
                }
            }
        }
        let poly = |s: &mut String, pts: &[[f64; 2]], style: &str| {
            let coords: Vec<String> = pts.iter().map(|&p| map(p)).map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
            let _ = writeln!(s, r#"<polyline fill="none" {style} points="{}"/>"#, coords.join(" "));
        };
        for sep in &self.separatrices {
            poly(&mut s, sep, r#"stroke="black" stroke-width="1" stroke-dasharray="4 3""#);
        }
        for (k, p) in self.paths.iter().enumerate() {
            poly(&mut s, p, &format!(r#"stroke="{}" stroke-width="1.5""#, PALETTE[k % PALETTE.len()]));
        }
        for &n in &self.nodes {
            let (x, y) = map(n);
            let _ = writeln!(s, r#"<circle cx="{x:.2}" cy="{y:.2}" r="4" fill="white" stroke="black"/>"#);
        }
        for &p in &self.saddles {
            let (x, y) = map(p);
            let _ = writeln!(s, r#"<rect x="{:.2}" y="{:.2}" width="7" height="7" fill="black"/>"#, x - 3.5, y - 3.5);
        }
        s.push_str("</svg>\n");
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use polar_bohm::dynamics::{StepStats, TimedPoint, Trajectory as Traj, TrajectoryStatus};

    #[test]
    fn csv_floats_round_trip_bit_exactly() {
        let values = [0.1, -1.0 / 3.0, std::f64::consts::PI, 1e-300, -2.5e300, 5e-324, 0.0, -0.0, 123456789.123456789];
        for v in values {
            let back: f64 = fmt_f64(v).parse().unwrap();
            assert_eq!(back.to_bits(), v.to_bits(), "{v}");
        }
        let traj = Traj {
            seed: [0.1, 0.2],
            samples: values.iter().map(|&v| TimedPoint { t: v, x: [v * 0.7, -v / 9.0] }).collect(),
            status: TrajectoryStatus::Completed,
            stats: StepStats::default(),
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("traj_0.csv");
        write_trajectory_csv(&path, &traj).unwrap();
        assert!(std::fs::read_to_string(&path).unwrap().starts_with("t,x1,x2\n"));
        let rows = read_trajectory_csv(&path).unwrap();
        for (r, p) in rows.iter().zip(&traj.samples) {
            assert_eq!([r[0].to_bits(), r[1].to_bits(), r[2].to_bits()], [p.t.to_bits(), p.x[0].to_bits(), p.x[1].to_bits()]);
        }
    }

    #[test]
    fn nan_is_written_lowercase() {
        assert_eq!(fmt_f64(f64::NAN), "nan");
        assert!("nan".parse::<f64>().unwrap().is_nan());
    }

    #[test]
    fn svg_is_well_formed_enough() {
        let fig = Figure {
            region: Region::square(2.0),
            background: None,
            paths: vec![vec![[0.0, 0.0], [1.0, 1.0]]],
            separatrices: vec![],
            nodes: vec![[0.0, 0.0]],
            saddles: vec![],
        };
        let s = fig.render();
        assert!(s.starts_with("<svg") && s.trim_end().ends_with("</svg>"));
        assert!(s.contains("300.00,300.00 450.00,150.00"));
    }
}
