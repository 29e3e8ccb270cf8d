//! TOML input documents.

use std::path::Path;

use epn_core::sim::{SimConfig, SimModel};
use epn_core::{Allocation, BatchDistribution, NetworkConfig, StationPair};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StationDoc {
    pub lambda: f64,
    pub w: f64,
    pub delta: f64,
    /// Geometric batch parameter; exclusive with `pmf`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u: Option<f64>,
    /// Finite batch-size pmf as `[size, probability]` pairs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pmf: Option<Vec<(u32, f64)>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warmup: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replications: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDocument {
    pub gamma: f64,
    pub stations: Vec<StationDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alloc: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sim: Option<SimDoc>,
}

impl ConfigDocument {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Parse(msg) => CliError::Parse(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn network(&self) -> Result<NetworkConfig, CliError> {
        let stations = self
            .stations
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let field = |msg: String| CliError::Validation(format!("stations[{i}]: {msg}"));
                let batch = match (s.u, &s.pmf) {
                    (Some(u), None) => BatchDistribution::geometric(u),
                    (None, Some(pmf)) => BatchDistribution::general(pmf.clone()),
                    _ => return Err(field("exactly one of `u` and `pmf` is required".into())),
                }
                .map_err(|e| field(e.to_string()))?;
                StationPair::new(s.lambda, s.w, s.delta, batch).map_err(|e| field(e.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        NetworkConfig::new(self.gamma, stations).map_err(|e| CliError::Validation(e.to_string()))
    }

    /// The document's `alloc`, if present.
    pub fn allocation(&self) -> Result<Option<Allocation>, CliError> {
        self.alloc
            .as_ref()
            .map(|p| {
                if p.len() != self.stations.len() {
                    return Err(CliError::Validation(format!(
                        "alloc: {} entries for {} stations",
                        p.len(),
                        self.stations.len()
                    )));
                }
                Allocation::new(p.clone()).map_err(|e| CliError::Validation(format!("alloc: {e}")))
            })
            .transpose()
    }

    /// Simulation settings: `overrides`, then the `[sim]` table, then library defaults.
    pub fn sim_config(
        &self,
        network: &NetworkConfig,
        alloc: &Allocation,
        overrides: &SimDoc,
    ) -> SimConfig {
        let doc = self.sim.clone().unwrap_or_default();
        let horizon = overrides.horizon.or(doc.horizon).unwrap_or(DEFAULT_HORIZON);
        let mut sim =
            SimConfig::from_model(SimModel::from(network), alloc.as_slice().to_vec(), horizon);
        if let Some(w) = overrides.warmup.or(doc.warmup) {
            sim.warmup = w;
        }
        if let Some(s) = overrides.seed.or(doc.seed) {
            sim.seed = s;
        }
        if let Some(r) = overrides.replications.or(doc.replications) {
            sim.replications = r;
        }
        sim
    }
}

pub const DEFAULT_HORIZON: f64 = 1e5;
