//! Reference parameter sets.
//!
//! `table1` is a two-pair network, `table2` a three-pair network with a
//! moderate harvesting rate and `table3` a three-pair network in the
//! large-harvesting regime where workstations are rarely busy.

use crate::model::{NetworkConfig, StationPair};

fn build(gamma: f64, rows: &[(f64, f64, f64, f64)]) -> NetworkConfig {
    let stations = rows
        .iter()
        .map(|&(lambda, w, delta, u)| {
            StationPair::geometric(lambda, w, delta, u).expect("valid preset")
        })
        .collect();
    NetworkConfig::new(gamma, stations).expect("valid preset")
}

pub fn table1() -> NetworkConfig {
    build(150.0, &[(50.0, 100.0, 10.0, 0.2), (60.0, 80.0, 6.0, 0.2)])
}

pub fn table2() -> NetworkConfig {
    build(
        150.0,
        &[
            (50.0, 100.0, 10.0, 0.2),
            (30.0, 80.0, 8.0, 0.2),
            (10.0, 50.0, 6.0, 0.2),
        ],
    )
}

pub fn table3() -> NetworkConfig {
    build(
        230.0,
        &[
            (5.0, 100.0, 10.0, 0.2),
            (6.0, 80.0, 10.0, 0.2),
            (5.0, 65.0, 25.0, 0.2),
        ],
    )
}

/// `n` identical pairs; symmetric networks have the uniform split as optimum.
pub fn symmetric(n: usize, gamma: f64, lambda: f64, w: f64, delta: f64, u: f64) -> NetworkConfig {
    build(gamma, &vec![(lambda, w, delta, u); n])
}
