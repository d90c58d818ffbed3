//! JSON exchange format for point sets and simulated ground truth.
//!
//! ```json
//! {"dim": 2, "points": [[0.1, -0.2], [0.3, 0.05]], "gray": [0.4, 0.6], "source": {"kind": "simulate"}}
//! ```
//!
//! Planar points are written as `[u, v]`; the homogeneous `1` is implied.

use std::fs;
use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ModelKind, PointSet, PoseParams};
use crate::simgen::OraclePermutation;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointSetFile {
    pub dim: usize,
    pub points: Vec<Vec<f64>>,
    #[serde(default)]
    pub gray: Option<Vec<f64>>,
    /// Free-form provenance: generator config, image path, threshold.
    #[serde(default)]
    pub source: serde_json::Value,
}

impl PointSetFile {
    pub fn from_point_set(set: &PointSet<f64>, source: serde_json::Value) -> Self {
        let points = set
            .points()
            .iter()
            .map(|p| if set.dim() == 2 { vec![p.x, p.y] } else { vec![p.x, p.y, p.z] })
            .collect();
        Self {
            dim: set.dim(),
            points,
            gray: set.gray().map(<[f64]>::to_vec),
            source,
        }
    }

    pub fn to_point_set(&self) -> Result<PointSet<f64>> {
        if self.dim != 2 && self.dim != 3 {
            return Err(Error::Format(format!("dim must be 2 or 3, got {}", self.dim)));
        }
        let mut pts = Vec::with_capacity(self.points.len());
        for (i, p) in self.points.iter().enumerate() {
            if p.len() != self.dim {
                return Err(Error::Format(format!(
                    "point {i} has {} coordinates, expected {}",
                    p.len(),
                    self.dim
                )));
            }
            pts.push(if self.dim == 2 {
                Vector3::new(p[0], p[1], 1.0)
            } else {
                Vector3::new(p[0], p[1], p[2])
            });
        }
        PointSet::from_parts(self.dim, pts, self.gray.clone()).map_err(|e| match e {
            Error::InvalidInput(m) => Error::Format(m),
            e => e,
        })
    }
}

/// Ground truth written next to a simulated scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruthFile {
    pub model: ModelKind,
    pub theta_true: PoseParams<f64>,
    /// Correspondence of the clean scene.
    pub oracle: OraclePermutation,
    /// For each delivered `Q` point, its index in the clean `Q`; `None` marks
    /// injected outliers and occluder points. Empty when `Q` is the clean set.
    #[serde(default)]
    pub q_origin: Vec<Option<usize>>,
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn parse<T: for<'de> Deserialize<'de>>(path: &Path, text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

pub fn to_json_pretty<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("serializable value") + "\n"
}

pub fn read_point_set(path: &Path) -> Result<(PointSet<f64>, serde_json::Value)> {
    let file: PointSetFile = parse(path, &read_text(path)?)?;
    Ok((file.to_point_set()?, file.source))
}

pub fn write_point_set(path: &Path, set: &PointSet<f64>, source: serde_json::Value) -> Result<()> {
    write_text(path, &to_json_pretty(&PointSetFile::from_point_set(set, source)))
}

pub fn read_truth(path: &Path) -> Result<TruthFile> {
    parse(path, &read_text(path)?)
}

pub fn write_truth(path: &Path, truth: &TruthFile) -> Result<()> {
    write_text(path, &to_json_pretty(truth))
}
