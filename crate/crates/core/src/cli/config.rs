use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::interval_maps::MonotoneMap;
use crate::market::MarketConfig;
use crate::orbit_engine::IFSystem;

/// One map as written in a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MapConfig {
    Power {
        beta: f64,
    },
    Piecewise {
        breaks: Vec<f64>,
        coeffs: Vec<Vec<f64>>,
    },
    Market {
        #[serde(rename = "R")]
        payoff: Vec<f64>,
        lambda1: Vec<f64>,
        lambda2: Vec<f64>,
    },
    Identity,
}

impl MapConfig {
    pub fn build(&self) -> Result<MonotoneMap> {
        match self {
            MapConfig::Power { beta } => MonotoneMap::power(*beta),
            MapConfig::Piecewise { breaks, coeffs } => {
                MonotoneMap::piecewise(breaks, coeffs.clone())
            }
            MapConfig::Market {
                payoff,
                lambda1,
                lambda2,
            } => MonotoneMap::market(payoff, lambda1, lambda2),
            MapConfig::Identity => Ok(MonotoneMap::identity()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IfsConfig {
    pub maps: Vec<MapConfig>,
    pub p: Vec<f64>,
}

impl IfsConfig {
    pub fn build(&self) -> Result<IFSystem> {
        let maps = self
            .maps
            .iter()
            .map(MapConfig::build)
            .collect::<Result<Vec<_>>>()?;
        IFSystem::new(maps, self.p.clone())
    }
}

/// Everything a run depends on. Flags are merged in before hashing, so the
/// hash identifies the effective configuration.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub example: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ifs: Option<IfsConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub market: Option<MarketConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paths: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seeds_per_point: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail_fraction: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    /// Normalization level of the arcsine statistic.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Fraction threshold for the positive-fraction bound.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p1: Option<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tagged_maps_parse() {
        let json = r#"{"ifs":{"maps":[{"kind":"power","beta":2.0},
            {"kind":"piecewise","breaks":[0.5],"coeffs":[[0,2],[0,2]]},
            {"kind":"market","R":[1,0],"lambda1":[0.5,0.5],"lambda2":[0.3,0.7]},
            {"kind":"identity"}],"p":[0.25,0.25,0.25,0.25]},"seed":7}"#;
        let cfg: RunConfig = serde_json::from_str(json).unwrap();
        assert_eq!(cfg.seed, Some(7));
        let ifs = cfg.ifs.unwrap();
        assert!(matches!(ifs.maps[2], MapConfig::Market { .. }));
        assert!(matches!(ifs.maps[3], MapConfig::Identity));
        assert!(serde_json::from_str::<RunConfig>(r#"{"sede":1}"#).is_err());
    }
}
