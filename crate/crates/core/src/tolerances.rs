//! Tolerance table for every asserted check. Scenes may override entries;
//! reports echo the table in use.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Double-layer potential of the constant 1.
    pub partition: f64,
    /// `|‖K‖ − 1|` on convex curves.
    pub np_norm: f64,
    /// Lower limit for `min P(σ_j, σ_i)` on convex curves.
    pub min_kernel: f64,
    /// Required `‖K‖` on the non-convex star.
    pub star_np_min: f64,
    pub disk_collapse: f64,
    pub plemelj: f64,
    pub total_mass: f64,
    pub decomposition: f64,
    pub sym_norm: f64,
    /// Numerical-radius, norm, teardrop and inequality slacks.
    pub mapping: f64,
    pub inverse_norm: f64,
    pub extremal_bound: f64,
    /// Nilpotent disk search, on both `gamma_lb` and `ρ`.
    pub extremal_equality: f64,
    pub convexity: f64,
    pub homomorphism: f64,
    /// Relative distance of the last disk-sample ratio from 2.
    pub disk_constant_rel: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            partition: 1e-8,
            np_norm: 1e-6,
            min_kernel: 1e-8,
            star_np_min: 1.05,
            disk_collapse: 1e-8,
            plemelj: 1e-6,
            total_mass: 1e-8,
            decomposition: 1e-7,
            sym_norm: 1e-6,
            mapping: 1e-6,
            inverse_norm: 0.01,
            extremal_bound: 1e-6,
            extremal_equality: 1e-4,
            convexity: 1e-6,
            homomorphism: 1e-6,
            disk_constant_rel: 0.05,
        }
    }
}
