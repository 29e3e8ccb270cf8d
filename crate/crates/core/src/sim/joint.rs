use serde::{Deserialize, Serialize};

use crate::error::{EpnError, Result};
use crate::model::{Allocation, StationaryState};
use crate::stationary::{pfs_probability, stationary_state};

use super::{engine, run, SimConfig, SimEstimate, Stat};

/// Empirical time fraction of one joint state against its product-form probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateComparison {
    pub k: Vec<u32>,
    pub b: Vec<u32>,
    pub empirical: Stat,
    pub pfs: f64,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointStateReport {
    pub states: Vec<StateComparison>,
    pub max_abs_deviation: f64,
    /// Share of states with `|z| < 3`.
    pub fraction_within_3: f64,
}

/// Compares every joint state up to the estimate's cap, visited or not.
pub fn compare_joint_states(
    estimate: &SimEstimate,
    state: &StationaryState,
) -> Result<JointStateReport> {
    let cap = estimate.state_cap.ok_or_else(|| {
        EpnError::InvalidSimConfig("joint states were not tracked in this run".into())
    })?;
    let n = state.len();
    if estimate.q1.len() != n {
        return Err(EpnError::InvalidSimConfig(format!(
            "estimate has {} pairs, stationary state has {n}",
            estimate.q1.len()
        )));
    }
    let dims = 2 * n;
    let size = (cap as usize + 1).pow(dims as u32);
    let unvisited = Stat {
        mean: 0.0,
        stderr: 0.0,
    };

    let states: Vec<StateComparison> = (0..size)
        .map(|idx| {
            let digits = engine::decode_state(idx, cap + 1, dims);
            let (k, b) = digits.split_at(n);
            let empirical = estimate
                .state_freq
                .iter()
                .find(|f| f.k == k && f.b == b)
                .map_or(unvisited, |f| f.fraction);
            let pfs = pfs_probability(state, k, b);
            StateComparison {
                k: k.to_vec(),
                b: b.to_vec(),
                empirical,
                pfs,
                z: empirical.z_score(pfs),
            }
        })
        .collect();

    let max_abs_deviation = states
        .iter()
        .map(|s| (s.empirical.mean - s.pfs).abs())
        .fold(0.0, f64::max);
    let within = states.iter().filter(|s| s.z.abs() < 3.0).count();
    Ok(JointStateReport {
        fraction_within_3: within as f64 / states.len() as f64,
        max_abs_deviation,
        states,
    })
}

/// Simulates with joint states tracked up to `cap` and compares against the product form.
pub fn joint_state_check(sim: &SimConfig, cap: u32) -> Result<JointStateReport> {
    let to_sim = |e: EpnError| EpnError::InvalidSimConfig(format!("no analytic reference: {e}"));
    let network = sim.model.to_network().map_err(to_sim)?;
    let alloc = Allocation::new(sim.alloc.clone()).map_err(to_sim)?;
    let state = stationary_state(&network, &alloc).map_err(to_sim)?;
    let estimate = run(&sim.clone().with_state_cap(cap))?;
    compare_joint_states(&estimate, &state)
}
