//! Composite cost `C = W + E`: mean response time plus energy loss rate.

use crate::error::{EpnError, Result};
use crate::model::{Allocation, CostBreakdown, FeasibleBox, NetworkConfig, StationaryState};
use crate::stationary::stationary_state;

/// Mean response time by Little's law: `(1/λ⁺) Σ q1/(1 - q1)` seconds.
pub fn cost_w(config: &NetworkConfig, state: &StationaryState) -> f64 {
    state.q1.iter().map(|q| q / (1.0 - q)).sum::<f64>() / config.lambda_plus()
}

/// Energy packets lost per second: leakage `q2 δ` plus deliveries to an
/// idle workstation `q2 w (1 - q1)`.
pub fn cost_e(config: &NetworkConfig, state: &StationaryState) -> f64 {
    config
        .stations
        .iter()
        .zip(state.q1.iter().zip(&state.q2))
        .map(|(s, (&q1, &q2))| q2 * s.delta + q2 * s.w * (1.0 - q1))
        .sum()
}

/// Geometric-batch form of the loss rate, `γ - λ⁺ + Σ λ² u / (λ u + σ γ p)`.
pub fn cost_e_geometric(config: &NetworkConfig, alloc: &Allocation) -> Result<f64> {
    alloc.check_len(config)?;
    let pairs = config.geometric_pairs()?;
    let gamma = config.gamma;
    let tail: f64 = pairs
        .iter()
        .zip(alloc.as_slice())
        .map(|(g, &p)| g.lambda * g.lambda * g.u / g.drain(gamma, p))
        .sum();
    Ok(gamma - config.lambda_plus() + tail)
}

/// Geometric-batch form of the response time, `(1/λ⁺) Σ λ / (σ γ p - λ (1 - u))`.
pub fn cost_w_geometric(config: &NetworkConfig, alloc: &Allocation) -> Result<f64> {
    alloc.check_len(config)?;
    let pairs = config.geometric_pairs()?;
    let gamma = config.gamma;
    let sum: f64 = pairs
        .iter()
        .zip(alloc.as_slice())
        .map(|(g, &p)| g.lambda / g.slack(gamma, p))
        .sum();
    Ok(sum / config.lambda_plus())
}

pub fn cost_total(config: &NetworkConfig, alloc: &Allocation) -> Result<CostBreakdown> {
    let state = stationary_state(config, alloc)?;
    Ok(CostBreakdown::new(
        cost_w(config, &state),
        cost_e(config, &state),
    ))
}

/// Open per-pair intervals `(λ(1-u)/(γσ), (w+δ)/γ)` on `p_i`.
pub fn feasible_box(config: &NetworkConfig) -> Result<FeasibleBox> {
    let pairs = config.geometric_pairs()?;
    let gamma = config.gamma;
    let lower: Vec<f64> = pairs
        .iter()
        .map(|g| g.lambda * (1.0 - g.u) / (gamma * g.sigma))
        .collect();
    let upper: Vec<f64> = pairs.iter().map(|g| g.store_rate / gamma).collect();

    if let Some(i) = (0..lower.len()).find(|&i| lower[i] >= upper[i]) {
        return Err(EpnError::InfeasibleNetwork(format!(
            "pair {} needs p > {} but saturates its store at p = {}",
            i + 1,
            lower[i],
            upper[i]
        )));
    }
    let lo_sum: f64 = lower.iter().sum();
    let hi_sum: f64 = upper.iter().sum();
    if lo_sum >= 1.0 {
        return Err(EpnError::InfeasibleNetwork(format!(
            "lower bounds sum to {lo_sum} >= 1: harvesting cannot keep every workstation stable"
        )));
    }
    if hi_sum <= 1.0 {
        return Err(EpnError::InfeasibleNetwork(format!(
            "upper bounds sum to {hi_sum} <= 1: stores cannot absorb the harvested rate"
        )));
    }
    Ok(FeasibleBox { lower, upper })
}
