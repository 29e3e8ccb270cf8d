//! Event-driven simulation of the network's continuous-time Markov chain.
//!
//! Every replication runs its own event loop on a ChaCha8 stream
//! ([`RNG_NAME`]): the key is expanded from the configured seed with
//! `SeedableRng::seed_from_u64` and the stream number is the replication
//! index, so replication `r` draws the same numbers on every platform and
//! whatever the number of threads.
//!
//! Estimators are time-weighted over `[warmup, horizon]`; standard errors are
//! taken across replications.

mod engine;
mod joint;

pub use joint::{compare_joint_states, joint_state_check, JointStateReport, StateComparison};

use serde::{Deserialize, Serialize};

use crate::error::{EpnError, Result};
use crate::model::{Allocation, BatchDistribution, NetworkConfig};
use crate::par::{map_indexed, Execution};

pub const RNG_NAME: &str = "chacha8(seed_from_u64(seed), stream = replication index)";

/// Deliveries to a workstation holding at least this many jobs are logged as
/// full-batch removals.
pub const DEFAULT_DEEP_QUEUE: u32 = 8;
/// Longest removal size kept separately in the removal histogram; larger ones share the last bucket.
pub const REMOVAL_BUCKETS: usize = 32;
/// Largest dense table of joint states the simulator will track.
pub const MAX_TRACKED_STATES: usize = 1 << 16;

/// Station parameters as the simulator sees them. Unlike [`crate::model::StationPair`],
/// zero arrival rates are allowed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimStation {
    pub lambda: f64,
    pub w: f64,
    pub delta: f64,
    pub batch: BatchDistribution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimModel {
    pub gamma: f64,
    pub stations: Vec<SimStation>,
}

impl From<&NetworkConfig> for SimModel {
    fn from(config: &NetworkConfig) -> Self {
        SimModel {
            gamma: config.gamma,
            stations: config
                .stations
                .iter()
                .map(|s| SimStation {
                    lambda: s.lambda,
                    w: s.w,
                    delta: s.delta,
                    batch: s.batch.clone(),
                })
                .collect(),
        }
    }
}

impl SimModel {
    pub fn lambda_plus(&self) -> f64 {
        self.stations.iter().map(|s| s.lambda).sum()
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(EpnError::InvalidSimConfig(msg));
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return bad(format!("gamma must be >= 0, got {}", self.gamma));
        }
        if self.stations.is_empty() {
            return bad("no stations".into());
        }
        for (i, s) in self.stations.iter().enumerate() {
            let ok = |x: f64| x.is_finite() && x >= 0.0;
            if !(ok(s.lambda) && ok(s.w) && ok(s.delta)) {
                return bad(format!("pair {}: rates must be finite and >= 0", i + 1));
            }
            if s.w + s.delta <= 0.0 {
                return bad(format!(
                    "pair {}: store never empties (w + delta = 0)",
                    i + 1
                ));
            }
            s.batch
                .validate()
                .map_err(|e| EpnError::InvalidSimConfig(format!("pair {}: {e}", i + 1)))?;
        }
        Ok(())
    }

    /// The analytic model, when its stricter invariants hold.
    pub fn to_network(&self) -> Result<NetworkConfig> {
        let stations = self
            .stations
            .iter()
            .map(|s| crate::model::StationPair::new(s.lambda, s.w, s.delta, s.batch.clone()))
            .collect::<Result<Vec<_>>>()?;
        NetworkConfig::new(self.gamma, stations)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub model: SimModel,
    pub alloc: Vec<f64>,
    /// Simulated seconds per replication.
    pub horizon: f64,
    /// Initial seconds discarded from every estimator.
    pub warmup: f64,
    pub seed: u64,
    pub replications: usize,
    /// Joint states with every count `<= state_cap` are tracked individually.
    pub state_cap: u32,
    pub deep_queue: u32,
}

impl SimConfig {
    /// Defaults: warmup 10% of the horizon, 10 replications, joint states up to 3.
    pub fn new(network: &NetworkConfig, alloc: &Allocation, horizon: f64) -> Self {
        Self::from_model(SimModel::from(network), alloc.as_slice().to_vec(), horizon)
    }

    pub fn from_model(model: SimModel, alloc: Vec<f64>, horizon: f64) -> Self {
        SimConfig {
            model,
            alloc,
            horizon,
            warmup: 0.1 * horizon,
            seed: 0x005e_ed0f_e9a1,
            replications: 10,
            state_cap: 3,
            deep_queue: DEFAULT_DEEP_QUEUE,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_replications(mut self, replications: usize) -> Self {
        self.replications = replications;
        self
    }

    pub fn with_warmup(mut self, warmup: f64) -> Self {
        self.warmup = warmup;
        self
    }

    pub fn with_state_cap(mut self, cap: u32) -> Self {
        self.state_cap = cap;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        let bad = |msg: String| Err(EpnError::InvalidSimConfig(msg));
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return bad(format!("horizon must be > 0, got {}", self.horizon));
        }
        if !(self.warmup.is_finite() && self.warmup >= 0.0 && self.warmup < self.horizon) {
            return bad(format!(
                "warmup must lie in [0, horizon), got {} with horizon {}",
                self.warmup, self.horizon
            ));
        }
        if self.replications == 0 {
            return bad("replications must be >= 1".into());
        }
        if self.alloc.len() != self.model.stations.len() {
            return bad(format!(
                "allocation has {} entries for {} pairs",
                self.alloc.len(),
                self.model.stations.len()
            ));
        }
        if let Err(e) = Allocation::new(self.alloc.clone()) {
            return bad(e.to_string());
        }
        Ok(())
    }

    fn tracked_states(&self) -> Option<usize> {
        let base = self.state_cap as usize + 1;
        let dims = 2 * self.model.stations.len();
        let mut size = 1usize;
        for _ in 0..dims {
            size = size.checked_mul(base)?;
            if size > MAX_TRACKED_STATES {
                return None;
            }
        }
        Some(size)
    }
}

/// Mean across replications with its standard error (zero for a single replication).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub stderr: f64,
}

impl Stat {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        if xs.len() < 2 {
            return Stat { mean, stderr: 0.0 };
        }
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        Stat {
            mean,
            stderr: (var / n).sqrt(),
        }
    }

    /// `(mean - reference) / stderr`; infinite when a nonzero gap has zero spread.
    pub fn z_score(&self, reference: f64) -> f64 {
        let gap = self.mean - reference;
        if gap == 0.0 {
            0.0
        } else {
            gap / self.stderr
        }
    }
}

/// Time fraction spent in one joint state `(k, b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateFrequency {
    pub k: Vec<u32>,
    pub b: Vec<u32>,
    pub fraction: Stat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimEstimate {
    /// Time fraction with a non-empty workstation.
    pub q1: Vec<Stat>,
    /// Time fraction with a non-empty store.
    pub q2: Vec<Stat>,
    /// Little's-law response time: time-average total jobs over `λ⁺` (seconds).
    #[serde(rename = "W")]
    pub response_time: Stat,
    /// Leaked plus idle-delivered packets per second.
    #[serde(rename = "E")]
    pub energy_loss: Stat,
    pub leak_rate: Vec<Stat>,
    pub idle_delivery_rate: Vec<Stat>,
    /// Deliveries that served at least one job, per second.
    pub useful_delivery_rate: Vec<Stat>,
    /// Jobs removed per second across all workstations.
    pub job_throughput: Stat,
    /// Packets harvested per second across all stores.
    pub harvest_rate: Stat,
    /// Visited joint states with every count `<= state_cap` (empty when not tracked).
    pub state_freq: Vec<StateFrequency>,
    pub state_cap: Option<u32>,
    /// Per pair: counts of removal sizes `1..=REMOVAL_BUCKETS` for deliveries that
    /// found at least `deep_queue` jobs (index 0 = one job). Summed over replications.
    pub deep_removals: Vec<Vec<u64>>,
    pub deep_queue: u32,
    /// Replications whose population drifted upward.
    pub non_stationary_replications: usize,
    pub non_stationary: bool,
    pub replications: usize,
    pub horizon: f64,
    pub warmup: f64,
    pub seed: u64,
    pub rng: String,
}

pub fn run(sim: &SimConfig) -> Result<SimEstimate> {
    run_with(sim, Execution::default())
}

/// Runs every replication (in parallel when asked) and aggregates in replication order.
pub fn run_with(sim: &SimConfig, exec: Execution) -> Result<SimEstimate> {
    sim.validate()?;
    let tracked = sim.tracked_states();
    let reps = map_indexed(sim.replications, exec, |r| {
        engine::replicate(sim, r as u64, tracked)
    });
    Ok(aggregate(sim, tracked, &reps))
}

fn aggregate(sim: &SimConfig, tracked: Option<usize>, reps: &[engine::Replication]) -> SimEstimate {
    let n = sim.model.stations.len();
    let per = |f: &dyn Fn(&engine::Replication) -> f64| -> Stat {
        Stat::from_samples(&reps.iter().map(f).collect::<Vec<_>>())
    };
    let per_station = |f: &dyn Fn(&engine::Replication, usize) -> f64| -> Vec<Stat> {
        (0..n).map(|i| per(&|r| f(r, i))).collect()
    };

    let leak_rate = per_station(&|r, i| r.leak_rate[i]);
    let idle_delivery_rate = per_station(&|r, i| r.idle_rate[i]);
    let mut energy_loss =
        per(&|r| r.leak_rate.iter().sum::<f64>() + r.idle_rate.iter().sum::<f64>());
    energy_loss.mean = leak_rate
        .iter()
        .zip(&idle_delivery_rate)
        .map(|(l, d)| l.mean + d.mean)
        .sum();

    let state_freq = match tracked {
        Some(size) => {
            let base = sim.state_cap + 1;
            (0..size)
                .filter(|&idx| reps.iter().any(|r| r.state_time[idx] > 0.0))
                .map(|idx| {
                    let digits = engine::decode_state(idx, base, 2 * n);
                    StateFrequency {
                        k: digits[..n].to_vec(),
                        b: digits[n..].to_vec(),
                        fraction: per(&|r| r.state_time[idx]),
                    }
                })
                .collect()
        }
        None => Vec::new(),
    };

    let mut deep_removals = vec![vec![0u64; REMOVAL_BUCKETS]; n];
    for r in reps {
        for (acc, hist) in deep_removals.iter_mut().zip(&r.deep_removals) {
            for (a, h) in acc.iter_mut().zip(hist) {
                *a += h;
            }
        }
    }

    let flagged = reps.iter().filter(|r| r.drifting).count();
    SimEstimate {
        q1: per_station(&|r, i| r.q1[i]),
        q2: per_station(&|r, i| r.q2[i]),
        response_time: per(&|r| r.response_time),
        energy_loss,
        leak_rate,
        idle_delivery_rate,
        useful_delivery_rate: per_station(&|r, i| r.useful_rate[i]),
        job_throughput: per(&|r| r.job_throughput),
        harvest_rate: per(&|r| r.harvest_rate),
        state_freq,
        state_cap: tracked.map(|_| sim.state_cap),
        deep_removals,
        deep_queue: sim.deep_queue,
        non_stationary_replications: flagged,
        non_stationary: flagged > 0,
        replications: sim.replications,
        horizon: sim.horizon,
        warmup: sim.warmup,
        seed: sim.seed,
        rng: RNG_NAME.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::table1;

    fn short(horizon: f64) -> SimConfig {
        SimConfig::new(&table1(), &Allocation::pair(0.46).unwrap(), horizon)
    }

    #[test]
    fn validation_errors() {
        let bad = |c: SimConfig| matches!(c.validate(), Err(EpnError::InvalidSimConfig(_)));
        assert!(bad(short(100.0).with_warmup(100.0)));
        assert!(bad(short(-1.0)));
        assert!(bad(short(100.0).with_replications(0)));
        let mut c = short(100.0);
        c.alloc = vec![0.5, 0.4];
        assert!(bad(c));
        let mut c = short(100.0);
        c.alloc = vec![1.0];
        assert!(bad(c));
        let mut c = short(100.0);
        c.model.gamma = -1.0;
        assert!(bad(c));
        assert!(short(100.0).validate().is_ok());
    }

    #[test]
    fn stat_from_samples() {
        let s = Stat::from_samples(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, 2.5);
        assert!((s.stderr - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
        assert_eq!(Stat::from_samples(&[7.0]).stderr, 0.0);
        assert_eq!(s.z_score(2.5), 0.0);
    }

    #[test]
    fn tracked_state_table_size() {
        assert_eq!(short(1.0).tracked_states(), Some(256));
        assert_eq!(short(1.0).with_state_cap(0).tracked_states(), Some(1));
        assert_eq!(short(1.0).with_state_cap(1000).tracked_states(), None);
    }
}
