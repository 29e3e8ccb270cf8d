use crate::cost::{cost_total, feasible_box};
use crate::error::{EpnError, Result};
use crate::model::{Allocation, NetworkConfig};
use crate::stationary::stationary_state;

use super::{Method, OptimizeResult};

/// Closed-form allocation for plentiful harvesting.
///
/// When every workstation is rarely busy the cost is dominated by
/// `Σ λ_i / (λ_i u_i + σ_i γ p_i)`; minimizing that on `Σ p = 1` gives
///
/// ```text
/// p_i = sqrt(λ_i/σ_i) / Σ_j sqrt(λ_j/σ_j) · (1 + Σ_j λ_j u_j / (σ_j γ)) - λ_i u_i / (σ_i γ)
/// ```
///
/// The returned cost is the exact `C` at that point. `residual` is the spread
/// of the simplified objective's partial derivatives, not of the exact cost.
pub fn large_gamma_closed_form(config: &NetworkConfig) -> Result<OptimizeResult> {
    let pairs = config.geometric_pairs()?;
    let fbox = feasible_box(config)?;
    let gamma = config.gamma;

    let weights: Vec<f64> = pairs.iter().map(|g| (g.lambda / g.sigma).sqrt()).collect();
    let weight_sum: f64 = weights.iter().sum();
    let offsets: Vec<f64> = pairs
        .iter()
        .map(|g| g.lambda * g.u / (g.sigma * gamma))
        .collect();
    let scale = 1.0 + offsets.iter().sum::<f64>();
    let p: Vec<f64> = weights
        .iter()
        .zip(&offsets)
        .map(|(w, off)| w / weight_sum * scale - off)
        .collect();

    if !fbox.contains(&p) {
        return Err(EpnError::ApproximationOutOfBox(format!(
            "closed-form allocation {p:?} leaves the feasible box; gamma = {gamma} is too small for this regime"
        )));
    }
    let p_star = Allocation::normalized(p, 1e-12)?;

    let marginals: Vec<f64> = pairs
        .iter()
        .zip(p_star.as_slice())
        .map(|(g, &pi)| g.lambda * g.sigma * gamma / g.drain(gamma, pi).powi(2))
        .collect();
    let residual = marginals.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        - marginals.iter().copied().fold(f64::INFINITY, f64::min);

    let q1_star = stationary_state(config, &p_star)?.q1;
    let cost = cost_total(config, &p_star)?;
    Ok(OptimizeResult {
        p_star,
        q1_star,
        cost,
        method: Method::LargeGammaClosedForm,
        residual,
    })
}
