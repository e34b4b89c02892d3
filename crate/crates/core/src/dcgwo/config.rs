// SPDX-License-Identifier: Apache-2.0
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Which error metric bounds the search.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    #[default]
    Er,
    Nmed,
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Er => "er",
            Metric::Nmed => "nmed",
        })
    }
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "er" => Ok(Metric::Er),
            "nmed" => Ok(Metric::Nmed),
            _ => Err(format!("unknown metric `{s}` (expected er or nmed)")),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("population size must be at least 5, got {0}")]
    Population(usize),
    #[error("iteration cap must be positive")]
    Iterations,
    #[error("w_d must lie in [0, 1], got {0}")]
    DepthWeight(f64),
    #[error("error bound must be non-negative, got {0}")]
    Bound(f64),
    #[error("initial bound {e0} exceeds final bound {e_max}")]
    InitialBound { e0: f64, e_max: f64 },
    #[error("relaxation coefficient must be non-negative, got {0}")]
    Relaxation(f64),
    #[error("init_lacs_max must be positive")]
    InitLacs,
}

/// Optimizer tunables. `None` fields are derived from the reference
/// circuit or from the other fields.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub population: usize,
    pub iterations: usize,
    /// Depth weight of the fitness; the area weight is `1 - w_d`.
    pub w_d: f64,
    /// Arrival-time weight of the per-output level; default `0.9 * cpd_ori`.
    pub w_t: Option<f64>,
    /// Error weight of the per-output level; default 0.1 (ER) or 0.2 (NMED).
    pub w_e: Option<f64>,
    pub s_e: f64,
    pub s_omega: f64,
    pub metric: Metric,
    pub e_max: f64,
    /// Starting bound; default `e_max / 4`.
    pub e_0: Option<f64>,
    /// Quadratic relaxation coefficient; default reaches `e_max` at the cap.
    pub b: Option<f64>,
    pub seed: u64,
    pub init_lacs_max: usize,
    /// Worker threads for candidate evaluation; 0 uses every core, 1 runs
    /// sequentially. Results do not depend on it.
    #[serde(skip)]
    pub jobs: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            population: 30,
            iterations: 20,
            w_d: 0.8,
            w_t: None,
            w_e: None,
            s_e: 0.5,
            s_omega: 0.5,
            metric: Metric::Er,
            e_max: 0.05,
            e_0: None,
            b: None,
            seed: 1,
            init_lacs_max: 3,
            jobs: 0,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.population < 5 {
            return Err(ConfigError::Population(self.population));
        }
        if self.iterations == 0 {
            return Err(ConfigError::Iterations);
        }
        if !(0.0..=1.0).contains(&self.w_d) {
            return Err(ConfigError::DepthWeight(self.w_d));
        }
        if self.e_max.is_nan() || self.e_max < 0.0 {
            return Err(ConfigError::Bound(self.e_max));
        }
        let e0 = self.initial_bound();
        if e0.is_nan() || e0 < 0.0 || e0 > self.e_max {
            return Err(ConfigError::InitialBound { e0, e_max: self.e_max });
        }
        let b = self.relaxation();
        if b.is_nan() || b < 0.0 {
            return Err(ConfigError::Relaxation(b));
        }
        if self.init_lacs_max == 0 {
            return Err(ConfigError::InitLacs);
        }
        Ok(())
    }

    pub fn w_a(&self) -> f64 {
        1.0 - self.w_d
    }

    pub fn initial_bound(&self) -> f64 {
        self.e_0.unwrap_or(self.e_max / 4.0)
    }

    /// Explicit `b`, or the smallest value for which the schedule reaches
    /// `e_max` at the final iteration.
    pub fn relaxation(&self) -> f64 {
        if let Some(b) = self.b {
            return b;
        }
        let e0 = self.initial_bound();
        let span = (self.iterations * self.iterations) as f64;
        let mut b = (self.e_max - e0).max(0.0) / span;
        while b * span + e0 < self.e_max {
            b = f64::from_bits(b.to_bits() + 1);
        }
        b
    }

    pub fn level_weights(&self, cpd_ori: f64) -> (f64, f64) {
        let w_t = self.w_t.unwrap_or(0.9 * cpd_ori);
        let w_e = self.w_e.unwrap_or(match self.metric {
            Metric::Er => 0.1,
            Metric::Nmed => 0.2,
        });
        (w_t, w_e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let cfg = OptimizerConfig::default();
        assert!(cfg.validate().is_ok());
        assert_eq!((cfg.population, cfg.iterations, cfg.w_d), (30, 20, 0.8));
        assert!((cfg.w_a() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn bad_configs() {
        let cfg = OptimizerConfig { population: 4, ..Default::default() };
        assert_eq!(cfg.validate(), Err(ConfigError::Population(4)));
        let cfg = OptimizerConfig { w_d: 1.5, ..Default::default() };
        assert!(cfg.validate().is_err());
        let cfg = OptimizerConfig { e_0: Some(0.2), e_max: 0.1, ..Default::default() };
        assert!(matches!(cfg.validate(), Err(ConfigError::InitialBound { .. })));
        let cfg = OptimizerConfig { b: Some(-1.0), ..Default::default() };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn level_weight_defaults() {
        let mut cfg = OptimizerConfig::default();
        assert_eq!(cfg.level_weights(10.0), (9.0, 0.1));
        cfg.metric = Metric::Nmed;
        assert_eq!(cfg.level_weights(10.0).1, 0.2);
    }
}
