//! JSON scenario configuration.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use polar_bohm::dynamics::IntegrationParams;
use polar_bohm::{amp, Amplitude, Region, State};
use serde::{Deserialize, Serialize};

/// Environment variable that overrides `outputs.dir`.
pub const OUT_DIR_ENV: &str = "POLAR_BOHM_OUT_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub state: StateSpec,
    #[serde(default)]
    pub integration: IntegrationSpec,
    pub seeds: Seeds,
    pub region: Region,
    pub outputs: Outputs,
    /// Seed for every stochastic step (density sampling).
    #[serde(default)]
    pub rng_seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateKind {
    Glauber,
    Su2,
    Noon,
    GlauberTruncated,
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSpec {
    pub kind: StateKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha1: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha2: Option<[f64; 2]>,
    /// Photon number (su2, noon).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Truncation order (glauber_truncated).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
    /// Rows `m`, columns `k`, entries `[re, im]` (custom).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<Vec<Vec<[f64; 2]>>>,
}

impl StateSpec {
    pub fn build(&self) -> anyhow::Result<State> {
        let alpha = |a: Option<[f64; 2]>, name: &str| {
            a.map(|[re, im]| amp(re, im)).ok_or_else(|| anyhow!("state.{name} is required for kind {:?}", self.kind))
        };
        let n = || self.n.ok_or_else(|| anyhow!("state.n is required for kind {:?}", self.kind));
        let state = match self.kind {
            StateKind::Glauber => State::glauber(alpha(self.alpha1, "alpha1")?, alpha(self.alpha2, "alpha2")?),
            StateKind::Su2 => State::su2(alpha(self.alpha1, "alpha1")?, alpha(self.alpha2, "alpha2")?, n()?)?,
            StateKind::Noon => State::noon(alpha(self.alpha1, "alpha1")?, alpha(self.alpha2, "alpha2")?, n()?)?,
            StateKind::GlauberTruncated => {
                let n_max = self.n_max.ok_or_else(|| anyhow!("state.n_max is required for kind glauber_truncated"))?;
                State::glauber_truncated(alpha(self.alpha1, "alpha1")?, alpha(self.alpha2, "alpha2")?, n_max)
            }
            StateKind::Custom => {
                let rows = self.coefficients.as_ref().ok_or_else(|| anyhow!("state.coefficients is required for kind custom"))?;
                let rows: Vec<Vec<Amplitude<f64>>> =
                    rows.iter().map(|r| r.iter().map(|&[re, im]| amp(re, im)).collect()).collect();
                State::custom(&rows)?
            }
        };
        Ok(state)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegrationSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub min_step: f64,
    pub t0: f64,
    pub t1: f64,
}

impl Default for IntegrationSpec {
    fn default() -> Self {
        let p = IntegrationParams::<f64>::default();
        IntegrationSpec { rel_tol: p.rel_tol, abs_tol: p.abs_tol, max_step: p.max_step, min_step: p.min_step, t0: p.t0, t1: p.t1 }
    }
}

impl IntegrationSpec {
    pub fn params(&self) -> IntegrationParams<f64> {
        IntegrationParams {
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            max_step: self.max_step,
            min_step: self.min_step,
            t0: self.t0,
            t1: self.t1,
            ..IntegrationParams::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Seeds {
    Points(Vec<[f64; 2]>),
    Ring(RingSeeds),
    Sample(SampleSeeds),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RingSeeds {
    pub ring: Ring,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ring {
    pub center: [f64; 2],
    pub radius: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleSeeds {
    /// Number of seeds drawn from `|psi(x, t0)|^2`.
    pub density_sample: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    pub dir: PathBuf,
    #[serde(default)]
    pub trajectories: bool,
    #[serde(default)]
    pub field_grid: bool,
    #[serde(default)]
    pub equilibria: bool,
    #[serde(default)]
    pub averaged_density: bool,
    #[serde(default)]
    pub svg: bool,
    /// Also trace and write saddle separatrices (needs `equilibria`).
    #[serde(default)]
    pub separatrices: bool,
    /// Cells per axis of `field.csv` and `averaged_density.csv`.
    #[serde(default = "default_grid_size")]
    pub grid_size: usize,
    #[serde(default = "default_time_samples")]
    pub time_samples: usize,
}

fn default_grid_size() -> usize {
    128
}

fn default_time_samples() -> usize {
    polar_bohm::analysis::DEFAULT_TIME_SAMPLES
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> anyhow::Result<Self> {
        let cfg: ScenarioConfig = serde_json::from_str(text).map_err(|e| anyhow!("config line {} column {}: {e}", e.line(), e.column()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_json(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Checks every section; messages name the offending field.
    pub fn validate(&self) -> anyhow::Result<()> {
        self.state.build().context("state")?;
        self.integration.params().validate().context("integration")?;
        self.region.validate().context("region")?;
        match &self.seeds {
            Seeds::Points(p) if p.is_empty() => bail!("seeds: empty list"),
            Seeds::Points(p) if p.iter().flatten().any(|v| !v.is_finite()) => bail!("seeds: non-finite coordinate"),
            Seeds::Ring(RingSeeds { ring }) if ring.count == 0 || !(ring.radius > 0.0) => {
                bail!("seeds.ring: need count >= 1 and radius > 0")
            }
            Seeds::Sample(SampleSeeds { density_sample: 0 }) => bail!("seeds.density_sample must be >= 1"),
            _ => {}
        }
        if self.outputs.dir.as_os_str().is_empty() {
            bail!("outputs.dir is empty");
        }
        if self.outputs.grid_size < 2 {
            bail!("outputs.grid_size must be >= 2");
        }
        if self.outputs.time_samples < 2 {
            bail!("outputs.time_samples must be >= 2");
        }
        Ok(())
    }

    /// `outputs.dir`, unless overridden by [`OUT_DIR_ENV`].
    pub fn output_dir(&self) -> PathBuf {
        match std::env::var_os(OUT_DIR_ENV) {
            Some(d) if !d.is_empty() => PathBuf::from(d),
            _ => self.outputs.dir.clone(),
        }
    }

    pub fn seed_points(&self, state: &State) -> anyhow::Result<Vec<[f64; 2]>> {
        Ok(match &self.seeds {
            Seeds::Points(p) => p.clone(),
            Seeds::Ring(RingSeeds { ring }) => (0..ring.count)
                .map(|k| {
                    let th = std::f64::consts::TAU * k as f64 / ring.count as f64;
                    [ring.center[0] + ring.radius * th.cos(), ring.center[1] + ring.radius * th.sin()]
                })
                .collect(),
            Seeds::Sample(SampleSeeds { density_sample }) => {
                polar_bohm::analysis::sample_density(state, *density_sample, self.integration.t0, self.rng_seed)?
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIG: &str = r#"{
        "state": {"kind": "su2", "alpha1": [4, 0], "alpha2": [0, 2], "n": 3},
        "integration": {"t1": 3.0},
        "seeds": {"ring": {"center": [0, 0], "radius": 2.5, "count": 4}},
        "region": {"x_min": -6, "x_max": 6, "y_min": -6, "y_max": 6, "scan_resolution": 256},
        "outputs": {"dir": "out", "equilibria": true}
    }"#;

    #[test]
    fn round_trip_is_identity() {
        let a = ScenarioConfig::from_json(FIG).unwrap();
        let b = ScenarioConfig::from_json(&a.to_json()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.integration.max_step, 0.01);
        assert_eq!(a.rng_seed, 0);
        for variant in [r#"[[1.5, 0.25], [0, -1]]"#, r#"{"density_sample": 10}"#] {
            let text = FIG.replace(r#"{"ring": {"center": [0, 0], "radius": 2.5, "count": 4}}"#, variant);
            let a = ScenarioConfig::from_json(&text).unwrap();
            assert_eq!(a, ScenarioConfig::from_json(&a.to_json()).unwrap());
        }
    }

    #[test]
    fn diagnostics_name_the_problem() {
        let bad = FIG.replace(r#""n": 3"#, r#""n": 3, "colour": 1"#);
        assert!(ScenarioConfig::from_json(&bad).unwrap_err().to_string().contains("line"));
        let bad = FIG.replace(r#""t1": 3.0"#, r#""max_step": -1"#);
        assert!(format!("{:#}", ScenarioConfig::from_json(&bad).unwrap_err()).contains("integration"));
        let bad = FIG.replace(r#""x_max": 6"#, r#""x_max": -7"#);
        assert!(format!("{:#}", ScenarioConfig::from_json(&bad).unwrap_err()).contains("region"));
        let bad = FIG.replace(r#", "n": 3"#, "");
        assert!(format!("{:#}", ScenarioConfig::from_json(&bad).unwrap_err()).contains("state.n"));
        let bad = FIG.replace(r#""radius": 2.5, "count": 4"#, r#""radius": 2.5, "count": 4, "extra": 1"#);
        assert!(ScenarioConfig::from_json(&bad).is_err());
    }

    #[test]
    fn ring_seeds_lie_on_circle() {
        let cfg = ScenarioConfig::from_json(FIG).unwrap();
        let s = cfg.state.build().unwrap();
        let pts = cfg.seed_points(&s).unwrap();
        assert_eq!(pts.len(), 4);
        for p in pts {
            assert!((p[0].hypot(p[1]) - 2.5).abs() < 1e-12);
        }
    }
}
