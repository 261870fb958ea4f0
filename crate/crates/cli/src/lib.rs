//! Batch front end: scene parsing, command dispatch and report emission.

pub mod commands;
pub mod output;
pub mod scene;

use clap::ValueEnum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Double-layer convexity classification.
    Convexity,
    /// Cauchy transforms and jump relations.
    Transforms,
    /// Resolvent calculus: inclusion, total mass, decomposition.
    Calculus,
    /// Random mapping-theorem ensembles.
    Mapping,
    /// Extremal search and spectral-constant bounds.
    Extremal,
    /// Smoothed nested domains around a point set.
    Smooth,
    /// Full acceptance suite.
    Selftest,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Convexity => "convexity",
            Command::Transforms => "transforms",
            Command::Calculus => "calculus",
            Command::Mapping => "mapping",
            Command::Extremal => "extremal",
            Command::Smooth => "smooth",
            Command::Selftest => "selftest",
        }
    }
}
