//! Experiment specifications and the flat `key=value` config format.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use emi_core::fem::ProblemConfig;
use emi_core::meshgen::{build_mesh, label, Model};
use emi_core::sparse::PreconditionerKind;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },

    #[error("unknown key '{0}'")]
    UnknownKey(String),

    #[error("invalid value '{value}' for '{key}'")]
    InvalidValue { key: String, value: String },

    #[error("{0}")]
    Invalid(String),

    #[error("cannot read config: {0}")]
    Io(String),
}

/// Krylov solver variants exposed by the harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SolverChoice {
    Cg,
    Ilu,
    BlockIlu,
    BlockDiag,
    Amg,
}

impl SolverChoice {
    pub const ALL: [SolverChoice; 5] = [
        SolverChoice::Cg,
        SolverChoice::Ilu,
        SolverChoice::BlockIlu,
        SolverChoice::BlockDiag,
        SolverChoice::Amg,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            SolverChoice::Cg => "cg",
            SolverChoice::Ilu => "ilu",
            SolverChoice::BlockIlu => "bjilu",
            SolverChoice::BlockDiag => "blockdiag",
            SolverChoice::Amg => "amg",
        }
    }

    pub fn kind(&self, eps: f64) -> PreconditionerKind {
        match self {
            SolverChoice::Cg => PreconditionerKind::None,
            SolverChoice::Ilu => PreconditionerKind::Ilu0,
            SolverChoice::BlockIlu => PreconditionerKind::BlockIlu0,
            SolverChoice::BlockDiag => PreconditionerKind::BlockDiag { eps },
            SolverChoice::Amg => PreconditionerKind::Amg1,
        }
    }
}

impl fmt::Display for SolverChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverChoice {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cg" | "none" => Ok(SolverChoice::Cg),
            "ilu" | "ilu0" => Ok(SolverChoice::Ilu),
            "bjilu" | "blockilu" => Ok(SolverChoice::BlockIlu),
            "blockdiag" | "peps" => Ok(SolverChoice::BlockDiag),
            "amg" | "amg1" => Ok(SolverChoice::Amg),
            other => Err(ConfigError::InvalidValue {
                key: "solver".into(),
                value: other.into(),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub model: Model,
    pub nh: Vec<usize>,
    pub cells: Vec<usize>,
    pub tau: Vec<f64>,
    pub solvers: Vec<SolverChoice>,
    pub eps: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// Runs are single-threaded and seed-free; kept so configs can state it.
    pub deterministic: bool,
    pub output_dir: Option<PathBuf>,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            model: Model::A,
            nh: vec![64],
            cells: vec![1],
            tau: vec![0.01],
            solvers: vec![SolverChoice::Cg],
            eps: ProblemConfig::default().epsilon,
            tol: 1e-9,
            max_iter: 20_000,
            deterministic: true,
            output_dir: None,
        }
    }
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>, ConfigError> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse().map_err(|_| ConfigError::InvalidValue {
                key: key.into(),
                value: s.into(),
            })
        })
        .collect()
}

fn parse_one<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value.trim().parse().map_err(|_| ConfigError::InvalidValue {
        key: key.into(),
        value: value.trim().into(),
    })
}

impl ExperimentSpec {
    /// Parses `key=value` lines on top of the defaults. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut spec = Self::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: idx + 1,
                message: format!("expected key=value, got '{line}'"),
            })?;
            spec.set(key.trim(), value.trim())?;
        }
        Ok(spec)
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        match key.to_ascii_lowercase().as_str() {
            "model" => {
                self.model = value.parse().map_err(|_| ConfigError::InvalidValue {
                    key: key.into(),
                    value: value.into(),
                })?
            }
            "nh" => self.nh = parse_list(key, value)?,
            "cells" | "n" => self.cells = parse_list(key, value)?,
            "tau" => self.tau = parse_list(key, value)?,
            "solver" | "solvers" => self.solvers = parse_list(key, value)?,
            "eps" | "epsilon" => self.eps = parse_one(key, value)?,
            "tol" => self.tol = parse_one(key, value)?,
            "max_iter" => self.max_iter = parse_one(key, value)?,
            "deterministic" => self.deterministic = parse_one(key, value)?,
            "output" | "output_dir" => self.output_dir = Some(PathBuf::from(value)),
            _ => return Err(ConfigError::UnknownKey(key.into())),
        }
        Ok(())
    }

    /// Checks parameter ranges and that every `(nh, N)` pair is a valid geometry.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(ConfigError::Invalid(format!("{name} must be positive and finite, got {v}")))
            }
        };
        for &t in &self.tau {
            positive("tau", t)?;
        }
        positive("eps", self.eps)?;
        positive("tol", self.tol)?;
        if self.max_iter == 0 {
            return Err(ConfigError::Invalid("max_iter must be at least 1".into()));
        }
        if self.nh.is_empty() || self.cells.is_empty() || self.tau.is_empty() {
            return Err(ConfigError::Invalid("nh, cells and tau lists must be non-empty".into()));
        }
        for &nh in &self.nh {
            let mesh = build_mesh(nh).map_err(|e| ConfigError::Invalid(e.to_string()))?;
            for &n in &self.cells {
                label(&mesh, self.model, n).map_err(|e| ConfigError::Invalid(e.to_string()))?;
            }
        }
        Ok(())
    }
}
