//! Domain types for an energy packet network: workstation/energy-store pairs
//! sharing one harvested energy stream.

use serde::{Deserialize, Serialize};

use crate::error::{EpnError, Result};

/// Tolerance on `Σ prob = 1` for general batch pmfs and on `Σ p = 1` for allocations.
pub const SUM_TOLERANCE: f64 = 1e-12;

/// Distribution of the number of jobs one delivered energy packet can serve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BatchDistribution {
    /// `P[b = s] = (1 - u) u^(s-1)` for `s = 1, 2, ...`.
    Geometric { u: f64 },
    /// Finite support: `(s, prob)` pairs with distinct `s >= 1`.
    General { pmf: Vec<(u32, f64)> },
}

impl BatchDistribution {
    pub fn geometric(u: f64) -> Result<Self> {
        let d = BatchDistribution::Geometric { u };
        d.validate()?;
        Ok(d)
    }

    pub fn general(mut pmf: Vec<(u32, f64)>) -> Result<Self> {
        pmf.sort_by_key(|&(s, _)| s);
        let d = BatchDistribution::General { pmf };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            BatchDistribution::Geometric { u } => {
                if !(u.is_finite() && *u > 0.0 && *u < 1.0) {
                    return Err(EpnError::InvalidParameter(format!(
                        "geometric batch parameter u must lie in (0, 1), got {u}"
                    )));
                }
            }
            BatchDistribution::General { pmf } => {
                if pmf.is_empty() {
                    return Err(EpnError::InvalidParameter("empty batch pmf".into()));
                }
                let mut seen = std::collections::BTreeSet::new();
                let mut total = 0.0;
                for &(s, prob) in pmf {
                    if s == 0 {
                        return Err(EpnError::InvalidParameter(
                            "batch sizes must be >= 1".into(),
                        ));
                    }
                    if !seen.insert(s) {
                        return Err(EpnError::InvalidParameter(format!(
                            "duplicate batch size {s} in pmf"
                        )));
                    }
                    if !(prob.is_finite() && prob > 0.0) {
                        return Err(EpnError::InvalidParameter(format!(
                            "batch probability for size {s} must be > 0, got {prob}"
                        )));
                    }
                    total += prob;
                }
                if (total - 1.0).abs() > SUM_TOLERANCE {
                    return Err(EpnError::InvalidParameter(format!(
                        "batch pmf sums to {total}, expected 1"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn is_geometric(&self) -> bool {
        matches!(self, BatchDistribution::Geometric { .. })
    }

    /// `P[b = s]`.
    pub fn probability(&self, s: u32) -> f64 {
        match self {
            BatchDistribution::Geometric { u } => {
                if s == 0 {
                    0.0
                } else {
                    (1.0 - u) * u.powi(s as i32 - 1)
                }
            }
            BatchDistribution::General { pmf } => pmf
                .iter()
                .find(|&&(size, _)| size == s)
                .map_or(0.0, |&(_, prob)| prob),
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            BatchDistribution::Geometric { u } => 1.0 / (1.0 - u),
            BatchDistribution::General { pmf } => {
                pmf.iter().map(|&(s, prob)| s as f64 * prob).sum()
            }
        }
    }

    /// Probability generating function `Σ x^s π_s`.
    pub fn generating(&self, x: f64) -> f64 {
        match self {
            BatchDistribution::Geometric { u } => (1.0 - u) * x / (1.0 - u * x),
            BatchDistribution::General { pmf } => {
                pmf.iter().map(|&(s, prob)| prob * x.powi(s as i32)).sum()
            }
        }
    }

    /// `(1 - Σ x^s π_s) / (1 - x)` for `x` in `[0, 1)`, evaluated without the
    /// cancellation of the quotient form: `Σ_s π_s (1 + x + ... + x^(s-1))`.
    /// Tends to the mean batch size as `x -> 1`.
    pub fn removal_factor(&self, x: f64) -> f64 {
        match self {
            BatchDistribution::Geometric { u } => 1.0 / (1.0 - u * x),
            BatchDistribution::General { pmf } => pmf
                .iter()
                .map(|&(s, prob)| {
                    let mut acc = 0.0;
                    let mut pow = 1.0;
                    for _ in 0..s {
                        acc += pow;
                        pow *= x;
                    }
                    prob * acc
                })
                .sum(),
        }
    }
}

/// One workstation with its dedicated energy store.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationPair {
    /// External job arrival rate (jobs/sec).
    pub lambda: f64,
    /// Delivery rate from the store to the workstation (EPs/sec).
    pub w: f64,
    /// Leakage rate of the store (EPs/sec).
    pub delta: f64,
    pub batch: BatchDistribution,
}

impl StationPair {
    pub fn new(lambda: f64, w: f64, delta: f64, batch: BatchDistribution) -> Result<Self> {
        let pair = StationPair {
            lambda,
            w,
            delta,
            batch,
        };
        pair.validate()?;
        Ok(pair)
    }

    pub fn geometric(lambda: f64, w: f64, delta: f64, u: f64) -> Result<Self> {
        Self::new(lambda, w, delta, BatchDistribution::geometric(u)?)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(EpnError::InvalidParameter(format!(
                "lambda must be > 0, got {}",
                self.lambda
            )));
        }
        if !(self.w.is_finite() && self.w > 0.0) {
            return Err(EpnError::InvalidParameter(format!(
                "w must be > 0, got {}",
                self.w
            )));
        }
        if !(self.delta.is_finite() && self.delta >= 0.0) {
            return Err(EpnError::InvalidParameter(format!(
                "delta must be >= 0, got {}",
                self.delta
            )));
        }
        self.batch.validate()
    }

    /// Energy efficiency `w / (w + delta)`: fraction of store departures that reach the workstation.
    pub fn sigma(&self) -> f64 {
        self.w / (self.w + self.delta)
    }

    /// Store service rate `w + delta`.
    pub fn store_rate(&self) -> f64 {
        self.w + self.delta
    }

    pub fn geometric_u(&self) -> Option<f64> {
        match self.batch {
            BatchDistribution::Geometric { u } => Some(u),
            BatchDistribution::General { .. } => None,
        }
    }
}

/// A complete model instance: total harvesting rate plus the station pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    /// Total harvested energy rate (EPs/sec).
    pub gamma: f64,
    pub stations: Vec<StationPair>,
}

impl NetworkConfig {
    pub fn new(gamma: f64, stations: Vec<StationPair>) -> Result<Self> {
        let config = NetworkConfig { gamma, stations };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            return Err(EpnError::InvalidParameter(format!(
                "gamma must be > 0, got {}",
                self.gamma
            )));
        }
        if self.stations.is_empty() {
            return Err(EpnError::InvalidParameter(
                "network needs at least one station pair".into(),
            ));
        }
        self.stations.iter().try_for_each(StationPair::validate)
    }

    pub fn len(&self) -> usize {
        self.stations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stations.is_empty()
    }

    /// Total job arrival rate `Σ λ_i`.
    pub fn lambda_plus(&self) -> f64 {
        self.stations.iter().map(|s| s.lambda).sum()
    }

    pub fn is_geometric(&self) -> bool {
        self.stations.iter().all(|s| s.batch.is_geometric())
    }

    pub(crate) fn geometric_pairs(&self) -> Result<Vec<GeometricPair>> {
        self.stations
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let u = s.geometric_u().ok_or(EpnError::NotGeometric(i))?;
                Ok(GeometricPair {
                    lambda: s.lambda,
                    u,
                    sigma: s.sigma(),
                    store_rate: s.store_rate(),
                })
            })
            .collect()
    }
}

/// Flattened parameters of a geometric-batch pair, as used by the closed forms.
#[derive(Debug, Clone, Copy)]
pub(crate) struct GeometricPair {
    pub lambda: f64,
    pub u: f64,
    pub sigma: f64,
    pub store_rate: f64,
}

impl GeometricPair {
    /// `λ u + σ γ p`: the denominator of the closed-form workstation utilization.
    #[inline]
    pub fn drain(&self, gamma: f64, p: f64) -> f64 {
        self.lambda * self.u + self.sigma * gamma * p
    }

    /// `σ γ p - λ (1 - u)`: positive exactly when `q1 < 1`.
    #[inline]
    pub fn slack(&self, gamma: f64, p: f64) -> f64 {
        self.sigma * gamma * p - self.lambda * (1.0 - self.u)
    }
}

/// Split of the harvested rate across energy stores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Allocation {
    p: Vec<f64>,
}

impl Allocation {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(EpnError::InvalidAllocation("empty allocation".into()));
        }
        for (i, &pi) in p.iter().enumerate() {
            if !(pi.is_finite() && (0.0..=1.0).contains(&pi)) {
                return Err(EpnError::InvalidAllocation(format!(
                    "p[{}] = {pi} is outside [0, 1]",
                    i + 1
                )));
            }
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(EpnError::InvalidAllocation(format!(
                "allocation sums to {total}, expected 1"
            )));
        }
        Ok(Allocation { p })
    }

    /// Equal split across `n` stores.
    pub fn uniform(n: usize) -> Self {
        Allocation {
            p: vec![1.0 / n as f64; n],
        }
    }

    /// Two-pair allocation `(p1, 1 - p1)`.
    pub fn pair(p1: f64) -> Result<Self> {
        Self::new(vec![p1, 1.0 - p1])
    }

    /// Accepts a vector whose sum is within `sum_tolerance` of one and rescales it.
    pub fn normalized(p: Vec<f64>, sum_tolerance: f64) -> Result<Self> {
        let total: f64 = p.iter().sum();
        if !(total.is_finite() && (total - 1.0).abs() <= sum_tolerance) {
            return Err(EpnError::InvalidAllocation(format!(
                "allocation sums to {total}, expected 1 within {sum_tolerance}"
            )));
        }
        Self::new(p.into_iter().map(|x| x / total).collect())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.p
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub(crate) fn check_len(&self, config: &NetworkConfig) -> Result<()> {
        if self.p.len() != config.len() {
            return Err(EpnError::InvalidAllocation(format!(
                "allocation has {} entries but the network has {} pairs",
                self.p.len(),
                config.len()
            )));
        }
        Ok(())
    }
}

impl TryFrom<Vec<f64>> for Allocation {
    type Error = EpnError;

    fn try_from(p: Vec<f64>) -> Result<Self> {
        Allocation::new(p)
    }
}

impl From<Allocation> for Vec<f64> {
    fn from(a: Allocation) -> Self {
        a.p
    }
}

impl std::ops::Index<usize> for Allocation {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.p[i]
    }
}

/// Per-pair utilizations solving the traffic equations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryState {
    /// `P[workstation i non-empty]`.
    pub q1: Vec<f64>,
    /// `P[energy store i non-empty]`.
    pub q2: Vec<f64>,
}

impl StationaryState {
    pub fn len(&self) -> usize {
        self.q1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q1.is_empty()
    }

    /// Stationary mean number of jobs at each workstation, `q1 / (1 - q1)`.
    pub fn mean_jobs(&self) -> Vec<f64> {
        self.q1.iter().map(|q| q / (1.0 - q)).collect()
    }
}

/// Composite cost `C = W + E` at one allocation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    /// Overall average job response time `W` (seconds).
    #[serde(rename = "W")]
    pub response_time: f64,
    /// Rate of energy packets lost to leakage and idle workstations `E` (EPs/sec).
    #[serde(rename = "E")]
    pub energy_loss: f64,
    #[serde(rename = "C")]
    pub total: f64,
}

impl CostBreakdown {
    pub fn new(response_time: f64, energy_loss: f64) -> Self {
        CostBreakdown {
            response_time,
            energy_loss,
            total: response_time + energy_loss,
        }
    }
}

/// Per-pair open intervals on `p_i` keeping every utilization below one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibleBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl FeasibleBox {
    /// Strict containment of every coordinate.
    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.lower.len()
            && p.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(&x, (&lo, &hi))| lo < x && x < hi)
    }

    /// Range of `p1` on the line `p1 + p2 = 1` that stays inside a two-pair box.
    pub fn pair_interval(&self) -> Option<(f64, f64)> {
        if self.lower.len() != 2 {
            return None;
        }
        let lo = self.lower[0].max(1.0 - self.upper[1]);
        let hi = self.upper[0].min(1.0 - self.lower[1]);
        (lo < hi).then_some((lo, hi))
    }
}
