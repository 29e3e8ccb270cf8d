use crate::cost::feasible_box;
use crate::error::{EpnError, Result};
use crate::model::{Allocation, NetworkConfig};

/// Diagonal of `∇²_pp C`; the cost is separable in `p`, so off-diagonal terms vanish.
///
/// `∂²C/∂p_i² = 2 λ_i γ² σ_i² / (λ⁺ (σ_i γ p_i - λ_i (1 - u_i))³)
///            + 2 λ_i² u_i σ_i² γ² / (λ_i u_i + σ_i γ p_i)³`
pub fn hessian_diag(config: &NetworkConfig, alloc: &Allocation) -> Result<Vec<f64>> {
    alloc.check_len(config)?;
    let pairs = config.geometric_pairs()?;
    let fbox = feasible_box(config)?;
    if !fbox.contains(alloc.as_slice()) {
        return Err(EpnError::OutOfBox(format!("{:?}", alloc.as_slice())));
    }
    let gamma = config.gamma;
    let lambda_plus = config.lambda_plus();
    Ok(pairs
        .iter()
        .zip(alloc.as_slice())
        .map(|(g, &p)| {
            let sg2 = (g.sigma * gamma).powi(2);
            2.0 * g.lambda * sg2 / (lambda_plus * g.slack(gamma, p).powi(3))
                + 2.0 * g.lambda * g.lambda * g.u * sg2 / g.drain(gamma, p).powi(3)
        })
        .collect())
}
