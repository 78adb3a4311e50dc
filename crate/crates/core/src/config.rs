//! JSON run configuration. Command-line flags override file values.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bridge::GridSpec;
use crate::dynamics::DEFAULT_M_MAX;
use crate::error::{LabError, Result};
use crate::partition::{Params, Schedule, SUPPORTED_PRECISION_BITS};
use crate::regularity::default_theta_epsilon;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub j_min: i32,
    pub j_max: i32,
    pub samples_per_scale: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        let g = GridSpec::default();
        GridConfig {
            j_min: g.j_min,
            j_max: g.j_max,
            samples_per_scale: g.samples_per_scale,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub alpha: f64,
    /// Defaults to the largest admissible power of two.
    pub epsilon: Option<f64>,
    /// Defaults to `alpha + epsilon`.
    pub theta: Option<f64>,
    pub schedule: Schedule,
    pub k_max: u32,
    pub n_neg: u32,
    pub precision_bits: u32,
    pub tol: f64,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub grid: GridConfig,
    /// Truncation depths for the seminorm sweep; defaults to `[k_max]`.
    pub depths: Option<Vec<u32>>,
    pub m_max: u64,
    /// `[k_from, k_to]` for a descent cascade.
    pub cascade: Option<[u32; 2]>,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            alpha: 0.5,
            epsilon: None,
            theta: None,
            schedule: Schedule::PowersOfTwo,
            k_max: 10,
            n_neg: 32,
            precision_bits: SUPPORTED_PRECISION_BITS,
            tol: 1e-12,
            seed: 42,
            out: None,
            grid: GridConfig::default(),
            depths: None,
            m_max: DEFAULT_M_MAX,
            cascade: None,
        }
    }
}

impl Config {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| LabError::parameter(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LabError::parameter(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| LabError::parameter(format!("{}: {e}", path.display())))
    }

    /// `(θ, ε)` after applying defaults.
    pub fn theta_epsilon(&self) -> Result<(f64, f64)> {
        match (self.theta, self.epsilon) {
            (Some(t), Some(e)) => Ok((t, e)),
            (None, Some(e)) => Ok((self.alpha + e, e)),
            (None, None) => default_theta_epsilon(self.alpha),
            (Some(_), None) => Err(LabError::parameter("theta given without epsilon")),
        }
    }

    pub fn params(&self) -> Result<Params> {
        let (theta, epsilon) = self.theta_epsilon()?;
        let mut p = Params::new(self.alpha, epsilon, theta, self.k_max, self.n_neg, self.schedule)?;
        p.precision_bits = self.precision_bits;
        p.tol = self.tol;
        p.validate()?;
        Ok(p)
    }

    pub fn grid_spec(&self) -> Result<GridSpec> {
        let g = GridSpec {
            j_min: self.grid.j_min,
            j_max: self.grid.j_max,
            samples_per_scale: self.grid.samples_per_scale,
            seed: self.seed,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn depths(&self) -> Vec<u32> {
        self.depths.clone().unwrap_or_else(|| vec![self.k_max])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = Config::from_json("{}").unwrap();
        assert_eq!(c, Config::default());
        let p = c.params().unwrap();
        assert_eq!((p.alpha, p.epsilon, p.theta, p.k_max, p.n_neg), (0.5, 0.125, 0.625, 10, 32));
        assert_eq!(p.schedule, Schedule::PowersOfTwo);
        assert_eq!(c.grid_spec().unwrap().seed, 42);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(Config::from_json(r#"{"alpah": 0.3}"#).is_err());
        assert!(Config::from_json(r#"{"grid": {"j_mx": 3}}"#).is_err());
        assert!(Config::from_json(r#"{"schedule": "cubic"}"#).is_err());
        assert!(Config::from_json("not json").is_err());
        let c = Config::from_json(r#"{"precision_bits": 113}"#).unwrap();
        assert!(c.params().is_err());
        let c = Config::from_json(r#"{"theta": 0.7}"#).unwrap();
        assert!(c.params().is_err());
    }

    #[test]
    fn explicit_parameters() {
        let c = Config::from_json(r#"{"alpha": 0.3, "epsilon": 0.25, "schedule": "linear", "cascade": [1, 3]}"#).unwrap();
        let p = c.params().unwrap();
        assert_eq!(p.theta, 0.55);
        assert_eq!(p.schedule, Schedule::Linear);
        assert_eq!(c.cascade, Some([1, 3]));
    }
}
