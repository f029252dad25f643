//! Work sizes for the verification suite, read from TOML.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const DEFAULT_TOML: &str = include_str!("../../config/verify.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    pub rates: Rates,
    pub eta: Eta,
    pub depth: Depth,
    pub block_mean: BlockMean,
    pub equivalence: Equivalence,
    pub gumbel: Gumbel,
    pub detailed_balance: DetailedBalance,
    pub a_process: AProcess,
    pub generator: Generator,
    pub stable_cf: StableCf,
    pub ou_law: OuLaw,
    pub ou_residual: OuResidual,
    pub coupling: Coupling,
    pub mrca_trend: MrcaTrend,
    pub extra: Extra,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rates {
    pub b_max: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Eta {
    pub b_max: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Depth {
    pub n: Vec<usize>,
    pub trees: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockMean {
    pub cases: Vec<(usize, f64)>,
    pub replicates: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Equivalence {
    pub first_merger_replicates: usize,
    pub genealogy_replicates: usize,
    pub marginal_n: usize,
    pub marginal_t: f64,
    pub marginal_replicates: usize,
    pub paintbox_replicates: usize,
    pub mrca_n: usize,
    pub mrca_replicates: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Gumbel {
    pub stationary_samples: usize,
    pub stationary_horizon: f64,
    pub transition_samples: usize,
    pub x: f64,
    pub t: f64,
    pub grid_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetailedBalance {
    pub grid: usize,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AProcess {
    pub jumps: usize,
    pub target_samples: usize,
    pub grid_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Generator {
    pub h: Vec<f64>,
    pub x: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StableCf {
    pub eps: f64,
    pub samples: usize,
    pub u: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OuLaw {
    pub z: Vec<f64>,
    pub eps: f64,
    pub samples: usize,
    pub tail: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OuResidual {
    pub paths: usize,
    pub eps: f64,
    pub horizon: f64,
    pub h: f64,
    pub tail: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Coupling {
    pub n: Vec<usize>,
    pub replicates: usize,
    pub grid_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MrcaTrend {
    pub n: Vec<usize>,
    pub replicates: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Extra {
    pub variance_bound_n: Vec<usize>,
    pub stationarity_n: usize,
    pub stationarity_replicates: usize,
    pub evolving_n: usize,
    pub evolving_replicates: usize,
    pub evolving_burn_in: f64,
    pub reversal_samples: usize,
    pub reversal_horizon: f64,
}

impl VerifyConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: VerifyConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    fn validate(&self) -> Result<()> {
        let counts = [
            self.depth.trees,
            self.block_mean.replicates,
            self.equivalence.first_merger_replicates,
            self.equivalence.genealogy_replicates,
            self.equivalence.marginal_replicates,
            self.equivalence.paintbox_replicates,
            self.equivalence.mrca_replicates,
            self.gumbel.stationary_samples,
            self.gumbel.transition_samples,
            self.a_process.jumps,
            self.a_process.target_samples,
            self.stable_cf.samples,
            self.ou_law.samples,
            self.ou_residual.paths,
            self.coupling.replicates,
            self.mrca_trend.replicates,
            self.extra.stationarity_replicates,
            self.extra.evolving_replicates,
            self.extra.reversal_samples,
        ];
        if counts.iter().any(|&c| c < 2) {
            return Err(Error::Config("replicate counts must be at least 2".into()));
        }
        if self.coupling.n.is_empty()
            || self.coupling.n.iter().any(|&n| n < 100)
            || self.coupling.n.windows(2).any(|w| w[0] > w[1])
        {
            return Err(Error::Config(
                "coupling n-grid must be non-decreasing with n >= 100".into(),
            ));
        }
        if self.mrca_trend.n.iter().any(|&n| n < 3) {
            return Err(Error::Config("mrca trend needs n >= 3".into()));
        }
        if self.generator.h.len() < 2 || self.generator.h.iter().any(|&h| !(h > 0.0)) {
            return Err(Error::Config(
                "generator check needs at least two positive step sizes".into(),
            ));
        }
        if !(self.ou_residual.tail >= 20.0) || !(self.ou_law.tail >= 20.0) {
            return Err(Error::Config("tail horizon must be at least 20".into()));
        }
        Ok(())
    }
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self::from_toml(DEFAULT_TOML).expect("bundled verification config is valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_config_parses() {
        let c = VerifyConfig::default();
        assert_eq!(c.coupling.n, vec![1000, 10000, 100000]);
    }

    #[test]
    fn rejects_bad_grid() {
        let text = DEFAULT_TOML
            .replace("n = [1000, 10000, 100000]", "n = []")
            .replace("replicates = 100\n", "replicates = 1\n");
        assert!(VerifyConfig::from_toml(&text).is_err());
        assert!(VerifyConfig::from_toml("[rates]\nb_max = 3").is_err());
    }
}
