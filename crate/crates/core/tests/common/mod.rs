#![allow(dead_code)]

use epn_core::{feasible_box, FeasibleBox, NetworkConfig, StationPair};
use proptest::prelude::*;

/// Random geometric-batch networks with a non-empty feasible region.
pub fn network(pairs: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = NetworkConfig> {
    let station = (0.5f64..60.0, 20.0f64..150.0, 0.0f64..20.0, 0.05f64..0.6);
    (prop::collection::vec(station, pairs), 0.0f64..1.0).prop_filter_map(
        "empty feasible region",
        |(rows, headroom)| {
            let stations: Vec<StationPair> = rows
                .iter()
                .map(|&(l, w, d, u)| StationPair::geometric(l, w, d, u).unwrap())
                .collect();
            // γ between the smallest workable rate and the store capacity
            let need: f64 = stations
                .iter()
                .map(|s| s.lambda * (1.0 - s.geometric_u().unwrap()) / s.sigma())
                .sum();
            let cap: f64 = stations.iter().map(|s| s.store_rate()).sum();
            if need >= cap {
                return None;
            }
            let gamma = need + (0.05 + 0.9 * headroom) * (cap - need);
            let config = NetworkConfig::new(gamma, stations).ok()?;
            feasible_box(&config).ok()?;
            Some(config)
        },
    )
}

/// Point on the simplex inside the box: lower bounds plus a weighted share of the slack.
pub fn interior_point(fbox: &FeasibleBox, weights: &[f64]) -> Option<Vec<f64>> {
    let lo: f64 = fbox.lower.iter().sum();
    let spread: f64 = fbox
        .lower
        .iter()
        .zip(&fbox.upper)
        .zip(weights)
        .map(|((l, h), w)| (h - l) * w)
        .sum();
    let scale = (1.0 - lo) / spread;
    let p: Vec<f64> = fbox
        .lower
        .iter()
        .zip(&fbox.upper)
        .zip(weights)
        .map(|((l, h), w)| l + scale * w * (h - l))
        .collect();
    let sum: f64 = p.iter().sum();
    let p: Vec<f64> = p.iter().map(|x| x / sum).collect();
    fbox.contains(&p).then_some(p)
}

pub fn weights(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.05f64..1.0, n)
}

pub fn network_with_point(
    pairs: std::ops::RangeInclusive<usize>,
) -> impl Strategy<Value = (NetworkConfig, Vec<f64>)> {
    network(pairs)
        .prop_flat_map(|c| {
            let n = c.len();
            (Just(c), weights(n))
        })
        .prop_filter_map("point outside the box", |(c, w)| {
            let p = interior_point(&feasible_box(&c).unwrap(), &w)?;
            Some((c, p))
        })
}
