//! Scene files: one TOML document describing the contour, operand, test
//! functions and the blocks each command needs.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use spectral_contour::contour::{ContourSpec, CurveFamily};
use spectral_contour::linalg::CMatrix;
use spectral_contour::tolerances::Tolerances;

use crate::Command;

#[derive(Debug, thiserror::Error)]
pub enum SceneError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid scene: {}", .0.join("; "))]
    Validation(Vec<String>),
}

fn default_nodes() -> usize {
    256
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scene {
    #[serde(default = "default_nodes")]
    pub nodes: usize,
    pub seed: Option<u64>,
    pub contour: Option<CurveFamily>,
    pub matrix: Option<MatrixBlock>,
    #[serde(default)]
    pub functions: Vec<FunctionBlock>,
    pub ensemble: Option<EnsembleBlock>,
    pub extremal: Option<ExtremalBlock>,
    pub smoothing: Option<SmoothingBlock>,
    #[serde(default)]
    pub tolerances: Tolerances,
}

/// Real and imaginary entry grids, row by row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixBlock {
    pub re: Vec<Vec<f64>>,
    pub im: Option<Vec<Vec<f64>>>,
}

/// Polynomial `Σ coeffs[k]·(z − center)^k`; complex numbers are `[re, im]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionBlock {
    pub coeffs: Vec<Complex64>,
    pub center: Option<Complex64>,
}

fn two() -> usize {
    2
}

fn six() -> usize {
    6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleBlock {
    pub trials: usize,
    #[serde(default = "two")]
    pub min_dim: usize,
    #[serde(default = "six")]
    pub max_dim: usize,
    pub degree: usize,
    #[serde(default)]
    pub vanish_at_center: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtremalBlock {
    pub degree: usize,
    pub restarts: usize,
    /// Random functions for the analytic-configuration estimate; 0 skips it.
    #[serde(default)]
    pub config_samples: usize,
}

fn four() -> usize {
    4
}

fn thirty_two() -> usize {
    32
}

fn fine_nodes() -> usize {
    1024
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmoothingBlock {
    pub points: Vec<Complex64>,
    /// Treat the points as their convex hull.
    #[serde(default)]
    pub hull: bool,
    pub epsilon: f64,
    #[serde(default = "four")]
    pub levels: usize,
    /// Grid spacing, `ε/64` when absent.
    pub h: Option<f64>,
    #[serde(default = "thirty_two")]
    pub modes: usize,
    #[serde(default = "fine_nodes")]
    pub nodes: usize,
}

impl Scene {
    pub fn contour_spec(&self) -> Option<ContourSpec> {
        self.contour.clone().map(|family| ContourSpec { family, nodes: self.nodes })
    }

    pub fn matrix(&self) -> Option<CMatrix> {
        let m = self.matrix.as_ref()?;
        let rows: Vec<Vec<Complex64>> = m
            .re
            .iter()
            .enumerate()
            .map(|(i, row)| {
                row.iter()
                    .enumerate()
                    .map(|(j, &re)| Complex64::new(re, m.im.as_ref().map_or(0.0, |im| im[i][j])))
                    .collect()
            })
            .collect();
        CMatrix::from_rows(&rows).ok()
    }

    /// Checks that do not depend on the command.
    pub fn validate(&self) -> Result<(), SceneError> {
        let mut bad = Vec::new();
        if self.nodes < 32 || !self.nodes.is_power_of_two() {
            bad.push(format!("nodes must be a power of two ≥ 32, got {}", self.nodes));
        }
        if let Some(m) = &self.matrix {
            let n = m.re.len();
            if n == 0 {
                bad.push("matrix is empty".into());
            }
            if m.re.iter().any(|r| r.len() != n) {
                bad.push(format!("matrix is not square: {} rows of lengths {:?}", n, m.re.iter().map(Vec::len).collect::<Vec<_>>()));
            }
            if let Some(im) = &m.im {
                if im.len() != n || im.iter().zip(&m.re).any(|(a, b)| a.len() != b.len()) {
                    bad.push("matrix im grid does not match the re grid".into());
                }
            }
            let finite = m.re.iter().chain(m.im.iter().flatten()).flatten().all(|v| v.is_finite());
            if !finite {
                bad.push("matrix has non-finite entries".into());
            }
        }
        for (k, f) in self.functions.iter().enumerate() {
            if f.coeffs.is_empty() {
                bad.push(format!("function {k} has no coefficients"));
            }
        }
        if let Some(e) = &self.ensemble {
            if e.trials == 0 || e.min_dim == 0 || e.min_dim > e.max_dim {
                bad.push("ensemble needs trials ≥ 1 and 1 ≤ min_dim ≤ max_dim".into());
            }
        }
        if let Some(s) = &self.smoothing {
            if s.points.is_empty() {
                bad.push("smoothing block has no points".into());
            }
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(SceneError::Validation(bad))
        }
    }

    /// Blocks the command reads must be present.
    pub fn require(&self, cmd: Command) -> Result<(), SceneError> {
        let mut bad = Vec::new();
        let mut need = |ok: bool, what: &str| {
            if !ok {
                bad.push(format!("`{}` needs {what}", cmd.name()));
            }
        };
        match cmd {
            Command::Convexity | Command::Transforms => need(self.contour.is_some(), "a [contour] block"),
            Command::Calculus => {
                need(self.contour.is_some(), "a [contour] block");
                need(self.matrix.is_some(), "a [matrix] block");
            }
            Command::Mapping => {
                need(self.contour.is_some(), "a [contour] block");
                need(self.ensemble.is_some(), "an [ensemble] block");
                need(self.seed.is_some(), "a seed");
            }
            Command::Extremal => {
                need(self.contour.is_some(), "a [contour] block");
                need(self.matrix.is_some(), "a [matrix] block");
                need(self.extremal.is_some(), "an [extremal] block");
                need(self.seed.is_some(), "a seed");
            }
            Command::Smooth => need(self.smoothing.is_some(), "a [smoothing] block"),
            Command::Selftest => {}
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(SceneError::Validation(bad))
        }
    }
}

pub fn parse_scene_str(text: &str) -> Result<Scene, SceneError> {
    let scene: Scene = toml::from_str(text).map_err(|e| SceneError::Parse(e.to_string()))?;
    scene.validate()?;
    Ok(scene)
}

pub fn parse_scene(path: &Path) -> Result<Scene, SceneError> {
    let text = std::fs::read_to_string(path).map_err(|source| SceneError::Io { path: path.display().to_string(), source })?;
    parse_scene_str(&text)
}

/// SHA-256 of the scene bytes, hex.
pub fn digest(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}
