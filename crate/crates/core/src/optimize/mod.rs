//! Optimal split of the harvested energy rate across energy stores.
//!
//! Under geometric batches the cost is separable and strictly convex in `p`
//! inside the feasible box, so the constrained minimum is characterized by
//! equal partial derivatives `∂C/∂p_i` across all pairs. Three analytic
//! routes are provided:
//!
//! * [`optimize_n2`]: root of `dC/dp1` on the segment `p2 = 1 - p1`;
//! * [`optimize_ngeq3`]: the first-order conditions written in the workstation
//!   utilizations, one quartic per pair, closed by the constraint `Σ p = 1`;
//! * [`large_gamma_closed_form`]: closed-form approximation valid when
//!   harvesting is plentiful and workstations are rarely busy.
//!
//! [`grid_oracle`] is an exhaustive sweep over the simplex used to check them.

mod grid;
mod hessian;
mod large_gamma;
mod n2;
mod system;

pub use grid::{grid_minimum, grid_oracle, grid_oracle_with, GridCell, SweepGrid};
pub use hessian::hessian_diag;
pub use large_gamma::large_gamma_closed_form;
pub use n2::{dc_dp1_n2, optimize_n2};
pub use system::{optimize_ngeq3, quartic_coeff_f, solve_quartic_q1i};

use serde::{Deserialize, Serialize};

use crate::cost::cost_total;
use crate::error::{EpnError, Result};
use crate::model::{Allocation, CostBreakdown, NetworkConfig};
use crate::stationary::stationary_state;

/// Search intervals are pulled this far inside the feasible boundaries, where the cost diverges.
pub const BOUNDARY_SHRINK: f64 = 1e-9;
/// Analytic optima must satisfy the first-order conditions to this tolerance.
pub const RESIDUAL_TOL: f64 = 1e-8;
/// Tolerance on `Σ p = 1` before the recovered allocation is renormalized.
pub const CONSTRAINT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    TwoPairRoot,
    QuarticSystem,
    LargeGammaClosedForm,
    GridOracle,
}

/// Which optimizer [`optimize`] should run.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Strategy {
    /// Two pairs: derivative root. Otherwise: quartic system.
    #[default]
    Auto,
    TwoPair,
    Quartic,
    /// Approximation; only used when asked for explicitly.
    LargeGamma,
    Grid {
        step: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeResult {
    pub p_star: Allocation,
    pub q1_star: Vec<f64>,
    pub cost: CostBreakdown,
    pub method: Method,
    /// Spread of the first-order conditions of the objective the method solves.
    pub residual: f64,
}

pub fn optimize(config: &NetworkConfig, strategy: Strategy) -> Result<OptimizeResult> {
    match strategy {
        Strategy::Auto if config.len() == 2 => optimize_n2(config),
        Strategy::Auto => optimize_ngeq3(config),
        Strategy::TwoPair => optimize_n2(config),
        Strategy::Quartic => optimize_ngeq3(config),
        Strategy::LargeGamma => large_gamma_closed_form(config),
        Strategy::Grid { step } => {
            let (p, cost) = grid_minimum(config, step, Default::default())?;
            let residual = first_order_residual(config, p.as_slice())?;
            let q1_star = stationary_state(config, &p)?.q1;
            Ok(OptimizeResult {
                p_star: p,
                q1_star,
                cost,
                method: Method::GridOracle,
                residual,
            })
        }
    }
}

/// Unconstrained partial derivatives `∂C/∂p_i` under geometric batches.
pub fn cost_gradient(config: &NetworkConfig, p: &[f64]) -> Result<Vec<f64>> {
    let pairs = config.geometric_pairs()?;
    if p.len() != pairs.len() {
        return Err(EpnError::InvalidAllocation(format!(
            "expected {} entries, got {}",
            pairs.len(),
            p.len()
        )));
    }
    let gamma = config.gamma;
    let lambda_plus = config.lambda_plus();
    Ok(pairs
        .iter()
        .zip(p)
        .map(|(g, &pi)| {
            let slack = g.slack(gamma, pi);
            let drain = g.drain(gamma, pi);
            -g.lambda * g.sigma * gamma / (lambda_plus * slack * slack)
                - g.lambda * g.lambda * g.u * g.sigma * gamma / (drain * drain)
        })
        .collect())
}

/// `max_i ∂C/∂p_i - min_i ∂C/∂p_i`: zero exactly at the constrained optimum.
pub fn first_order_residual(config: &NetworkConfig, p: &[f64]) -> Result<f64> {
    let grad = cost_gradient(config, p)?;
    let max = grad.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = grad.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(max - min)
}

/// Packages an analytic optimum, checking its first-order residual.
fn finish(config: &NetworkConfig, p: Vec<f64>, method: Method) -> Result<OptimizeResult> {
    let p_star = Allocation::normalized(p, CONSTRAINT_TOL)?;
    let grad = cost_gradient(config, p_star.as_slice())?;
    let scale = grad.iter().fold(1.0f64, |m, g| m.max(g.abs()));
    let residual = first_order_residual(config, p_star.as_slice())?;
    if residual.is_nan() || residual > RESIDUAL_TOL * scale {
        return Err(EpnError::NoInteriorRoot(format!(
            "first-order residual {residual} exceeds tolerance"
        )));
    }
    let state = stationary_state(config, &p_star)?;
    let cost = cost_total(config, &p_star)?;
    Ok(OptimizeResult {
        p_star,
        q1_star: state.q1,
        cost,
        method,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::{table1, table2, table3};

    #[test]
    fn auto_dispatches_by_size() {
        assert_eq!(
            optimize(&table1(), Strategy::Auto).unwrap().method,
            Method::TwoPairRoot
        );
        assert_eq!(
            optimize(&table2(), Strategy::Auto).unwrap().method,
            Method::QuarticSystem
        );
    }

    #[test]
    fn large_gamma_never_chosen_implicitly() {
        assert_ne!(
            optimize(&table3(), Strategy::Auto).unwrap().method,
            Method::LargeGammaClosedForm
        );
        assert_eq!(
            optimize(&table3(), Strategy::LargeGamma).unwrap().method,
            Method::LargeGammaClosedForm
        );
    }

    #[test]
    fn grid_strategy_lands_near_analytic() {
        let grid = optimize(&table2(), Strategy::Grid { step: 1e-3 }).unwrap();
        let exact = optimize(&table2(), Strategy::Auto).unwrap();
        assert_eq!(grid.method, Method::GridOracle);
        for (a, b) in grid.p_star.as_slice().iter().zip(exact.p_star.as_slice()) {
            assert!((a - b).abs() <= 2e-3);
        }
        assert!(exact.cost.total <= grid.cost.total + 1e-12);
    }

    #[test]
    fn single_pair_takes_everything() {
        let config = crate::presets::symmetric(1, 20.0, 5.0, 30.0, 2.0, 0.3);
        let r = optimize(&config, Strategy::Auto).unwrap();
        assert!((r.p_star[0] - 1.0).abs() < 1e-12);
        assert_eq!(r.residual, 0.0);
    }

    #[test]
    fn gradient_matches_finite_difference() {
        let config = table2();
        let p = [0.5, 0.3, 0.2];
        let grad = cost_gradient(&config, &p).unwrap();
        // the cost is separable, so each partial only needs that pair's terms
        let h = 1e-6;
        for i in 0..3 {
            let f = |x: f64| {
                let pairs = config.geometric_pairs().unwrap();
                let g = pairs[i];
                g.lambda / (config.lambda_plus() * g.slack(config.gamma, x))
                    + g.lambda * g.lambda * g.u / g.drain(config.gamma, x)
            };
            let fd = (f(p[i] + h) - f(p[i] - h)) / (2.0 * h);
            assert!(
                (fd - grad[i]).abs() <= 1e-6 * grad[i].abs().max(1.0),
                "{fd} vs {}",
                grad[i]
            );
        }
    }
}
