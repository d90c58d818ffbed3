//! Experiment and benchmark configuration, and the named presets.

use std::path::Path;

use cfpose::simgen::{default_occluder, NoiseConfig, Rect, SceneConfig};
use cfpose::{OcclusionConfig, RansacConfig, SolverConfig};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// How the initial pose is drawn around the truth, with scale `noise.b_i`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitDistribution {
    /// `θ* + b_i · randn`
    #[default]
    Normal,
    /// `θ* + b_i · rand` with draws on `[0, 1)`
    Uniform,
}

/// Occluder placed over the second image, plus the clustering used to undo it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OcclusionSpec {
    pub fraction: f64,
    pub region: Rect,
    pub gray: f64,
    pub kmeans: OcclusionConfig,
}

impl Default for OcclusionSpec {
    fn default() -> Self {
        Self {
            fraction: 0.2,
            region: default_occluder(),
            gray: 0.0,
            kmeans: OcclusionConfig::default(),
        }
    }
}

/// Rasterized copies of both views, written by `simulate`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenderSpec {
    pub width: u32,
    pub height: u32,
    /// Overrides the scene focal length for rendering.
    pub focal_length: Option<f64>,
}

impl Default for RenderSpec {
    fn default() -> Self {
        Self { width: 1280, height: 960, focal_length: None }
    }
}

/// Everything that defines one seeded trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scene: SceneConfig,
    pub noise: NoiseConfig,
    pub init: InitDistribution,
    /// Gray value given to injected outliers.
    pub outlier_gray: f64,
    pub occlusion: Option<OcclusionSpec>,
    pub ransac: Option<RansacConfig>,
    pub solver: SolverConfig,
    pub success_threshold: f64,
    /// Trial index used by `simulate`; benchmark trials set it themselves.
    pub trial: u64,
    pub render: Option<RenderSpec>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scene: SceneConfig::default(),
            noise: NoiseConfig::default(),
            init: InitDistribution::Normal,
            outlier_gray: 0.0,
            occlusion: None,
            ransac: None,
            solver: SolverConfig::default(),
            success_threshold: 0.1,
            trial: 0,
            render: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> CliResult<()> {
        self.scene.validate()?;
        self.noise.validate()?;
        self.solver.validate()?;
        if let Some(r) = &self.ransac {
            r.validate()?;
        }
        if let Some(o) = &self.occlusion {
            if !(0.0..1.0).contains(&o.fraction) || o.kmeans.clusters == 0 {
                return Err(CliError::usage("occlusion fraction must lie in [0, 1) and clusters >= 1"));
            }
        }
        if !(self.success_threshold > 0.0) {
            return Err(CliError::usage("success_threshold must be positive"));
        }
        Ok(())
    }
}

/// What varies across the cells of a benchmark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum Sweep {
    Single,
    NoiseGrid { b_i: Vec<f64>, b_p: Vec<f64> },
    MismatchGrid { b_i: Vec<f64>, b_m: Vec<f64> },
    /// Number of pattern samples; trials run one at a time so timings are clean.
    Samples { n: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkConfig {
    pub experiment: ExperimentConfig,
    pub sweep: Sweep,
    pub trials: usize,
    /// Trial `i` uses seed `seed + i`.
    pub seed: u64,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            experiment: ExperimentConfig::default(),
            sweep: Sweep::Single,
            trials: 100,
            seed: 0,
        }
    }
}

/// One benchmark cell: a label, the swept values and the resolved experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub label: String,
    pub experiment: ExperimentConfig,
}

impl BenchmarkConfig {
    pub fn validate(&self) -> CliResult<()> {
        if self.trials == 0 {
            return Err(CliError::usage("trials must be at least 1"));
        }
        for cell in self.cells() {
            cell.experiment.validate()?;
        }
        Ok(())
    }

    pub fn sequential(&self) -> bool {
        matches!(self.sweep, Sweep::Samples { .. })
    }

    /// Cells in row-major order of the sweep.
    pub fn cells(&self) -> Vec<Cell> {
        let base = &self.experiment;
        let with = |label: String, f: &dyn Fn(&mut ExperimentConfig)| {
            let mut experiment = base.clone();
            f(&mut experiment);
            Cell { label, experiment }
        };
        match &self.sweep {
            Sweep::Single => vec![with("single".into(), &|_| {})],
            Sweep::NoiseGrid { b_i, b_p } => b_i
                .iter()
                .flat_map(|&bi| {
                    b_p.iter().map(move |&bp| {
                        with(format!("b_i={bi},b_p={bp}"), &|e| {
                            e.noise.b_i = bi;
                            e.noise.b_p = bp;
                        })
                    })
                })
                .collect(),
            Sweep::MismatchGrid { b_i, b_m } => b_i
                .iter()
                .flat_map(|&bi| {
                    b_m.iter().map(move |&bm| {
                        with(format!("b_i={bi},b_m={bm}"), &|e| {
                            e.noise.b_i = bi;
                            e.noise.b_m = Some(bm);
                        })
                    })
                })
                .collect(),
            Sweep::Samples { n } => n
                .iter()
                .map(|&n| with(format!("n={n}"), &|e| e.scene.samples = n))
                .collect(),
        }
    }
}

pub const PRESETS: &[&str] = &["table1a", "table1b", "runtime", "outliers150", "occlusion", "epipolar"];

/// Named experiment protocols.
pub fn preset(name: &str) -> CliResult<BenchmarkConfig> {
    let base = ExperimentConfig::default();
    let cfg = match name {
        "table1a" => BenchmarkConfig {
            sweep: Sweep::NoiseGrid { b_i: vec![0.1, 0.2], b_p: vec![0.01, 0.02, 0.03] },
            ..Default::default()
        },
        // Mismatch cells carry no image noise.
        "table1b" => BenchmarkConfig {
            sweep: Sweep::MismatchGrid { b_i: vec![0.1, 0.2], b_m: vec![0.5, 1.0, 1.5] },
            ..Default::default()
        },
        "runtime" => BenchmarkConfig {
            sweep: Sweep::Samples { n: vec![500, 1000, 2000, 4000, 8000, 16000] },
            trials: 10,
            ..Default::default()
        },
        "outliers150" => BenchmarkConfig {
            experiment: ExperimentConfig {
                scene: SceneConfig { samples: 3124, ..Default::default() },
                noise: NoiseConfig { b_p: 0.02, b_i: 0.2, outliers: 150, ..Default::default() },
                init: InitDistribution::Uniform,
                ransac: Some(RansacConfig::default()),
                ..base
            },
            trials: 20,
            ..Default::default()
        },
        "occlusion" => BenchmarkConfig {
            experiment: ExperimentConfig {
                noise: NoiseConfig { b_p: 0.01, b_i: 0.1, ..Default::default() },
                occlusion: Some(OcclusionSpec::default()),
                ..base
            },
            ..Default::default()
        },
        "epipolar" => BenchmarkConfig {
            experiment: ExperimentConfig {
                scene: SceneConfig::epipolar(),
                noise: NoiseConfig { b_i: 0.1, ..Default::default() },
                ..base
            },
            ..Default::default()
        },
        other => {
            return Err(CliError::usage(format!(
                "unknown preset `{other}`; available: {}",
                PRESETS.join(", ")
            )))
        }
    };
    Ok(cfg)
}

/// Parses JSON, reporting the line and column of the first problem.
pub fn parse_json<T: DeserializeOwned>(text: &str, origin: &str) -> CliResult<T> {
    serde_json::from_str(text).map_err(|e| CliError::format(format!("{origin}: {e}")))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
    parse_json(&text, &path.display().to_string())
}
