//! Traffic equations and the product-form stationary distribution.

use crate::error::{EpnError, Result, Utilization};
use crate::model::{Allocation, BatchDistribution, NetworkConfig, StationPair, StationaryState};
use crate::roots::{brent, RootError};

/// Utilizations must lie in `(EPS, 1 - EPS)` to count as stationary.
pub const INTERIOR_EPS: f64 = 1e-12;

const Q1_MAX_ITER: usize = 200;

/// Energy store utilization `γ p / (w + δ)`. Not clamped.
pub fn q2_of(p: f64, station: &StationPair, gamma: f64) -> f64 {
    gamma * p / station.store_rate()
}

/// Workstation utilization for any finite-support (or geometric) batch pmf.
///
/// Solves `x q2 w (1 - Σ x^s π_s) / (1 - x) = λ` on `(0, 1)`. The left side is
/// strictly increasing from 0 to `q2 w E[b]`, so a root exists iff
/// `q2 w E[b] > λ`.
pub fn solve_q1_general(station: &StationPair, q2: f64) -> Result<f64> {
    let drain = q2 * station.w;
    let lambda = station.lambda;
    let batch = &station.batch;
    let excess = |x: f64| x * drain * batch.removal_factor(x) - lambda;

    let capacity = drain * batch.mean();
    if capacity.is_nan() || capacity <= lambda {
        return Err(EpnError::NoStationarySolution(format!(
            "delivered removal capacity {capacity} does not exceed job rate {lambda}"
        )));
    }
    match brent(excess, 0.0, 1.0, 0.0, Q1_MAX_ITER) {
        Ok(root) => Ok(root.x),
        Err(RootError::MaxIterations { x, .. }) => Err(EpnError::NoStationarySolution(format!(
            "workstation fixed point did not converge (last iterate {x})"
        ))),
        Err(e) => Err(EpnError::NoStationarySolution(format!("{e:?}"))),
    }
}

/// Closed form `λ / (u λ + q2 w)` for geometric batches.
pub fn solve_q1_geometric(station: &StationPair, q2: f64) -> Result<f64> {
    match station.batch {
        BatchDistribution::Geometric { u } => {
            Ok(station.lambda / (u * station.lambda + q2 * station.w))
        }
        BatchDistribution::General { .. } => Err(EpnError::NotGeometric(0)),
    }
}

fn interior(x: f64) -> bool {
    x > INTERIOR_EPS && x < 1.0 - INTERIOR_EPS
}

/// Solves the traffic equations at `alloc`, failing on the first pair whose
/// utilization leaves the open unit interval.
pub fn stationary_state(config: &NetworkConfig, alloc: &Allocation) -> Result<StationaryState> {
    alloc.check_len(config)?;
    let n = config.len();
    let mut q1 = Vec::with_capacity(n);
    let mut q2 = Vec::with_capacity(n);
    for (index, (station, &p)) in config.stations.iter().zip(alloc.as_slice()).enumerate() {
        let store = q2_of(p, station, config.gamma);
        if !interior(store) {
            return Err(EpnError::UnstableNetwork {
                index,
                which: Utilization::Q2,
                value: store,
            });
        }
        let work = if station.batch.is_geometric() {
            solve_q1_geometric(station, store)?
        } else {
            match solve_q1_general(station, store) {
                Ok(x) => x,
                Err(EpnError::NoStationarySolution(_)) => 1.0,
                Err(e) => return Err(e),
            }
        };
        if !interior(work) {
            return Err(EpnError::UnstableNetwork {
                index,
                which: Utilization::Q1,
                value: work,
            });
        }
        q1.push(work);
        q2.push(store);
    }
    Ok(StationaryState { q1, q2 })
}

/// Product-form probability of `k_i` jobs and `b_i` packets at every pair.
///
/// Panics if `k` or `b` does not match the number of pairs.
pub fn pfs_probability(state: &StationaryState, k: &[u32], b: &[u32]) -> f64 {
    assert_eq!(k.len(), state.len(), "job-count vector length");
    assert_eq!(b.len(), state.len(), "packet-count vector length");
    state
        .q1
        .iter()
        .zip(&state.q2)
        .zip(k.iter().zip(b))
        .map(|((&q1, &q2), (&ki, &bi))| {
            q1.powi(ki as i32) * (1.0 - q1) * q2.powi(bi as i32) * (1.0 - q2)
        })
        .product()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::BatchDistribution;
    use crate::presets::table1;
    use approx::assert_relative_eq;

    fn pair(lambda: f64, w: f64, delta: f64, u: f64) -> StationPair {
        StationPair::geometric(lambda, w, delta, u).unwrap()
    }

    #[test]
    fn q2_examples() {
        let s1 = pair(50.0, 100.0, 10.0, 0.2);
        // 0.4594 * 150 / 110
        assert_relative_eq!(
            q2_of(0.4594, &s1, 150.0),
            0.626_454_545_454_545_5,
            epsilon = 1e-15
        );
        assert_eq!(q2_of(0.0, &s1, 150.0), 0.0);
        let s2 = pair(60.0, 80.0, 6.0, 0.2);
        assert_relative_eq!(q2_of(0.5, &s2, 150.0), 75.0 / 86.0, epsilon = 1e-15);
    }

    #[test]
    fn general_solver_matches_geometric_closed_form() {
        let s = pair(50.0, 100.0, 10.0, 0.2);
        let q2 = 0.626_476;
        let general = solve_q1_general(&s, q2).unwrap();
        assert_relative_eq!(general, 50.0 / (10.0 + 62.6476), epsilon = 1e-12);
        assert_relative_eq!(
            general,
            solve_q1_geometric(&s, q2).unwrap(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn unit_batch_gives_ratio() {
        let s = StationPair::new(
            50.0,
            200.0,
            0.0,
            BatchDistribution::general(vec![(1, 1.0)]).unwrap(),
        )
        .unwrap();
        assert_relative_eq!(solve_q1_general(&s, 0.5).unwrap(), 0.5, epsilon = 1e-14);
    }

    #[test]
    fn general_solver_residual_is_tiny() {
        let batch = BatchDistribution::general(vec![(1, 0.5), (2, 0.3), (5, 0.2)]).unwrap();
        let s = StationPair::new(40.0, 60.0, 4.0, batch).unwrap();
        let q2 = 0.7;
        let x = solve_q1_general(&s, q2).unwrap();
        let lhs = x * q2 * s.w * (1.0 - s.batch.generating(x)) / (1.0 - x);
        assert!(
            (lhs - s.lambda).abs() <= 1e-12 * s.lambda,
            "residual {}",
            lhs - s.lambda
        );
    }

    #[test]
    fn vanishing_arrivals_give_idle_workstation() {
        let s = pair(1e-12, 100.0, 10.0, 0.2);
        assert!(solve_q1_general(&s, 0.5).unwrap() < 1e-12);
        assert!(solve_q1_geometric(&s, 0.5).unwrap() < 1e-12);
    }

    #[test]
    fn huge_drain_empties_workstation() {
        let s = pair(50.0, 1e12, 0.0, 0.2);
        assert!(solve_q1_geometric(&s, 0.5).unwrap() < 1e-9);
    }

    #[test]
    fn general_solver_reports_overload() {
        let s = pair(50.0, 40.0, 0.0, 0.2);
        // capacity 0.5 * 40 * 1.25 = 25 < 50
        assert!(matches!(
            solve_q1_general(&s, 0.5),
            Err(EpnError::NoStationarySolution(_))
        ));
    }

    #[test]
    fn reference_optimum_utilizations() {
        let s1 = pair(50.0, 100.0, 10.0, 0.2);
        let q2 = q2_of(0.5538, &s1, 150.0);
        assert!((solve_q1_geometric(&s1, q2).unwrap() - 0.5847).abs() < 5e-5);

        let s3 = pair(5.0, 100.0, 10.0, 0.2);
        let q2 = q2_of(0.31, &s3, 230.0);
        assert!((solve_q1_geometric(&s3, q2).unwrap() - 0.0760).abs() < 5e-5);
    }

    #[test]
    fn table1_state_at_reference_point() {
        let config = table1();
        let state = stationary_state(&config, &Allocation::pair(0.4594).unwrap()).unwrap();
        // q1 = λ/(λu + σγp), evaluated by hand
        let q11 = 50.0 / (10.0 + (100.0 / 110.0) * 150.0 * 0.4594);
        let q12 = 60.0 / (12.0 + (80.0 / 86.0) * 150.0 * 0.5406);
        assert_relative_eq!(state.q1[0], q11, epsilon = 1e-14);
        assert_relative_eq!(state.q1[1], q12, epsilon = 1e-14);
        assert!((state.q2[0] - 0.6265).abs() < 5e-5);
        assert!((state.q2[1] - 0.9429).abs() < 5e-5);
    }

    #[test]
    fn table1_below_lower_bound_is_unstable_at_first_workstation() {
        let err = stationary_state(&table1(), &Allocation::pair(0.29).unwrap()).unwrap_err();
        match err {
            EpnError::UnstableNetwork {
                index,
                which,
                value,
            } => {
                assert_eq!(index, 0);
                assert_eq!(which, Utilization::Q1);
                assert!(value > 1.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn saturated_store_is_unstable() {
        let config = NetworkConfig::new(10.0, vec![pair(1.0, 10.0, 0.0, 0.5)]).unwrap();
        let err = stationary_state(&config, &Allocation::new(vec![1.0]).unwrap()).unwrap_err();
        assert!(matches!(
            err,
            EpnError::UnstableNetwork {
                index: 0,
                which: Utilization::Q2,
                ..
            }
        ));
    }

    #[test]
    fn general_batch_overload_maps_to_unstable_q1() {
        let batch = BatchDistribution::general(vec![(1, 1.0)]).unwrap();
        let s = StationPair::new(50.0, 60.0, 0.0, batch).unwrap();
        let config = NetworkConfig::new(30.0, vec![s]).unwrap();
        let err = stationary_state(&config, &Allocation::new(vec![1.0]).unwrap()).unwrap_err();
        assert!(matches!(
            err,
            EpnError::UnstableNetwork {
                which: Utilization::Q1,
                ..
            }
        ));
    }

    #[test]
    fn allocation_length_mismatch() {
        let err = stationary_state(&table1(), &Allocation::new(vec![1.0]).unwrap()).unwrap_err();
        assert!(matches!(err, EpnError::InvalidAllocation(_)));
    }

    #[test]
    fn pfs_values() {
        let state = StationaryState {
            q1: vec![0.5],
            q2: vec![0.5],
        };
        assert_eq!(pfs_probability(&state, &[1], &[1]), 0.0625);
        let state = StationaryState {
            q1: vec![0.3, 0.6],
            q2: vec![0.2, 0.9],
        };
        assert_relative_eq!(
            pfs_probability(&state, &[0, 0], &[0, 0]),
            0.7 * 0.8 * 0.4 * 0.1,
            epsilon = 1e-16
        );
    }
}
