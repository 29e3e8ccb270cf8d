//! First-order conditions in workstation-utilization coordinates.
//!
//! With `q_i = λ_i / (λ_i u_i + σ_i γ p_i)` the cost becomes
//! `γ - λ⁺ + Σ [q_i / (λ⁺ (1 - q_i)) + λ_i u_i q_i]`. Eliminating `p_1` through
//! the constraint, stationarity reads
//!
//! ```text
//! (1/(λ⁺ (1 - q_i)²) + λ_i u_i) q_i² = f_i(q_1),   i = 2..N
//! ```
//!
//! The left side is strictly increasing on (0, 1), so every `q_i` is a strictly
//! increasing function of `q_1`, and `Σ p_i(q_1) - 1` is strictly decreasing.
//! The outer problem is therefore a single bracketed root in `q_1`.

use crate::cost::feasible_box;
use crate::error::{EpnError, Result};
use crate::model::{GeometricPair, NetworkConfig};
use crate::quartic::quartic_real_roots;
use crate::roots::{brent, RootError};

use super::{finish, Method, OptimizeResult, BOUNDARY_SHRINK};

/// Admissible roots must satisfy the unrearranged condition to this relative residual.
const CONDITION_TOL: f64 = 1e-9;

/// `1/(λ⁺ (1 - q)²) + λ u`: marginal cost of raising one workstation's utilization.
fn marginal(g: &GeometricPair, lambda_plus: f64, q: f64) -> f64 {
    1.0 / (lambda_plus * (1.0 - q) * (1.0 - q)) + g.lambda * g.u
}

/// Left side of the stationarity condition times `q²`, minus `f`.
fn condition(g: &GeometricPair, lambda_plus: f64, f: f64, q: f64) -> f64 {
    marginal(g, lambda_plus, q) * q * q - f
}

fn condition_slope(g: &GeometricPair, lambda_plus: f64, q: f64) -> f64 {
    let one_minus = 1.0 - q;
    2.0 * q * marginal(g, lambda_plus, q) + 2.0 * q * q / (lambda_plus * one_minus.powi(3))
}

fn pair_index(config: &NetworkConfig, i: usize) -> Result<()> {
    if i == 0 || i >= config.len() {
        return Err(EpnError::InvalidParameter(format!(
            "quartic index must be in 1..{} (zero-based, excluding the reference pair), got {i}",
            config.len()
        )));
    }
    Ok(())
}

/// `f_i = (1/(λ⁺(1 - q11)²) + λ_1 u_1) · σ_1 λ_i / (σ_i λ_1) · q11²` for a zero-based pair index `i >= 1`.
pub fn quartic_coeff_f(config: &NetworkConfig, q11: f64, i: usize) -> Result<f64> {
    pair_index(config, i)?;
    let pairs = config.geometric_pairs()?;
    Ok(coeff_f(&pairs, config.lambda_plus(), q11, i))
}

fn coeff_f(pairs: &[GeometricPair], lambda_plus: f64, q11: f64, i: usize) -> f64 {
    let (g1, gi) = (&pairs[0], &pairs[i]);
    marginal(g1, lambda_plus, q11) * (g1.sigma * gi.lambda) / (gi.sigma * g1.lambda) * q11 * q11
}

/// The workstation utilization of pair `i` that satisfies its stationarity condition for a given `f`.
pub fn solve_quartic_q1i(config: &NetworkConfig, f: f64, i: usize) -> Result<f64> {
    pair_index(config, i)?;
    let pairs = config.geometric_pairs()?;
    quartic_root(&pairs[i], config.lambda_plus(), f)
}

fn quartic_root(g: &GeometricPair, lambda_plus: f64, f: f64) -> Result<f64> {
    if !(f.is_finite() && f > 0.0) {
        return Err(EpnError::NoAdmissibleRoot(format!(
            "f = {f} must be positive"
        )));
    }
    // multiply the condition by (1 - q)² / (λ u) and expand
    let lu = g.lambda * g.u;
    let a = -2.0;
    let b = 1.0 + 1.0 / (lu * lambda_plus) - f / lu;
    let c = 2.0 * f / lu;
    let d = -f / lu;

    let admissible =
        |q: f64| q > 0.0 && q < 1.0 && condition(g, lambda_plus, f, q).abs() <= CONDITION_TOL * f;
    let candidate = quartic_real_roots(a, b, c, d)
        .into_iter()
        .filter(|&q| q > 0.0 && q < 1.0)
        .map(|q| polish(g, lambda_plus, f, q))
        .find(|&q| admissible(q));
    if let Some(q) = candidate {
        return Ok(q);
    }

    // the condition is monotone on (0, 1), so bracketing always succeeds when f > 0;
    // near q = 1 the converged bracket is the only meaningful certificate
    brent(
        |q| condition(g, lambda_plus, f, q),
        0.0,
        1.0 - 1e-15,
        0.0,
        200,
    )
    .map(|root| root.x)
    .map_err(|e| {
        EpnError::NoAdmissibleRoot(format!(
            "no root in (0, 1) satisfies the stationarity condition for f = {f}: {e:?}"
        ))
    })
}

/// Newton on the unrearranged condition, accepted only while the residual shrinks.
fn polish(g: &GeometricPair, lambda_plus: f64, f: f64, q0: f64) -> f64 {
    let mut q = q0;
    let mut r = condition(g, lambda_plus, f, q).abs();
    for _ in 0..20 {
        if r <= 1e-12 * f {
            break;
        }
        let next = q - condition(g, lambda_plus, f, q) / condition_slope(g, lambda_plus, q);
        if !(next > 0.0 && next < 1.0) {
            break;
        }
        let rn = condition(g, lambda_plus, f, next).abs();
        if rn.is_nan() || rn >= r {
            break;
        }
        q = next;
        r = rn;
    }
    q
}

/// Workstation utilizations of every pair given the reference utilization `q11`.
fn utilizations(pairs: &[GeometricPair], lambda_plus: f64, q11: f64) -> Result<Vec<f64>> {
    let mut q = Vec::with_capacity(pairs.len());
    q.push(q11);
    for i in 1..pairs.len() {
        let f = coeff_f(pairs, lambda_plus, q11, i);
        q.push(quartic_root(&pairs[i], lambda_plus, f)?);
    }
    Ok(q)
}

/// `p_i = λ_i (1/q_i - u_i) / (σ_i γ)`.
fn allocation_from(pairs: &[GeometricPair], gamma: f64, q: &[f64]) -> Vec<f64> {
    pairs
        .iter()
        .zip(q)
        .map(|(g, &qi)| g.lambda / (g.sigma * gamma) * (1.0 / qi - g.u))
        .collect()
}

/// Minimizes `C` for any number of geometric-batch pairs by solving the
/// per-pair quartics together with `Σ p = 1`.
pub fn optimize_ngeq3(config: &NetworkConfig) -> Result<OptimizeResult> {
    let pairs = config.geometric_pairs()?;
    let fbox = feasible_box(config)?;
    let gamma = config.gamma;
    let lambda_plus = config.lambda_plus();

    let mut failure = None;
    let constraint = |q11: f64| match utilizations(&pairs, lambda_plus, q11) {
        Ok(q) => allocation_from(&pairs, gamma, &q).iter().sum::<f64>() - 1.0,
        Err(e) => {
            failure.get_or_insert(e);
            f64::NAN
        }
    };
    let root = brent(constraint, BOUNDARY_SHRINK, 1.0 - BOUNDARY_SHRINK, 0.0, 300);
    if let Some(e) = failure {
        return Err(e);
    }
    let root = root.map_err(|e| match e {
        RootError::NotBracketed { fa, fb } => EpnError::ConstraintRootNotBracketed(format!(
            "Σp - 1 = {fa} near q11 = 0 and {fb} near q11 = 1"
        )),
        other => EpnError::ConstraintRootNotBracketed(format!("{other:?}")),
    })?;

    let q = utilizations(&pairs, lambda_plus, root.x)?;
    let p = allocation_from(&pairs, gamma, &q);
    if let Some(i) = (0..p.len()).find(|&i| !(p[i] > fbox.lower[i] && p[i] < fbox.upper[i])) {
        return Err(EpnError::NoInteriorRoot(format!(
            "stationary point needs p{} = {} outside ({}, {})",
            i + 1,
            p[i],
            fbox.lower[i],
            fbox.upper[i]
        )));
    }
    finish(config, p, Method::QuarticSystem)
}
