use crate::cost::feasible_box;
use crate::error::{EpnError, Result};
use crate::model::NetworkConfig;
use crate::roots::{brent, RootError};

use super::{finish, Method, OptimizeResult, BOUNDARY_SHRINK};

fn require_two(config: &NetworkConfig) -> Result<()> {
    if config.len() != 2 {
        return Err(EpnError::UnsupportedSize {
            n: config.len(),
            reason: "the two-pair derivative needs exactly two pairs",
        });
    }
    Ok(())
}

/// `dC/dp1` along `p2 = 1 - p1`, for two geometric-batch pairs.
pub fn dc_dp1_n2(config: &NetworkConfig, p1: f64) -> Result<f64> {
    require_two(config)?;
    config.geometric_pairs()?;
    let fbox = feasible_box(config)?;
    let p = [p1, 1.0 - p1];
    if !fbox.contains(&p) {
        return Err(EpnError::OutOfBox(format!("p1 = {p1}")));
    }
    Ok(derivative(config, p1))
}

fn derivative(config: &NetworkConfig, p1: f64) -> f64 {
    let pairs = config.geometric_pairs().expect("checked by caller");
    let gamma = config.gamma;
    let lp = config.lambda_plus();
    let term = |i: usize, p: f64| {
        let g = pairs[i];
        let slack = g.slack(gamma, p);
        let drain = g.drain(gamma, p);
        g.lambda * g.sigma * gamma / (lp * slack * slack)
            + g.lambda * g.lambda * g.sigma * g.u * gamma / (drain * drain)
    };
    term(1, 1.0 - p1) - term(0, p1)
}

/// Minimizes `C` over `p1` for two pairs by bracketing the root of `dC/dp1`.
pub fn optimize_n2(config: &NetworkConfig) -> Result<OptimizeResult> {
    require_two(config)?;
    config.geometric_pairs()?;
    let fbox = feasible_box(config)?;
    let (lo, hi) = fbox.pair_interval().ok_or_else(|| {
        EpnError::InfeasibleNetwork("the line p1 + p2 = 1 misses the feasible box".into())
    })?;
    let (lo, hi) = (lo + BOUNDARY_SHRINK, hi - BOUNDARY_SHRINK);
    if lo >= hi {
        return Err(EpnError::InfeasibleNetwork(
            "feasible segment is degenerate".into(),
        ));
    }

    let root = brent(|x| derivative(config, x), lo, hi, 0.0, 200).map_err(|e| match e {
        RootError::NotBracketed { fa, fb } => EpnError::NoInteriorRoot(format!(
            "dC/dp1 = {fa} at p1 = {lo} and {fb} at p1 = {hi}; the minimum sits on a store-saturation boundary"
        )),
        other => EpnError::NoInteriorRoot(format!("{other:?}")),
    })?;
    finish(config, vec![root.x, 1.0 - root.x], Method::TwoPairRoot)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::cost_total;
    use crate::model::Allocation;
    use crate::presets::{symmetric, table1, table2};

    fn cost_at(config: &NetworkConfig, p1: f64) -> f64 {
        cost_total(config, &Allocation::pair(p1).unwrap())
            .unwrap()
            .total
    }

    #[test]
    fn table1_optimum() {
        let r = optimize_n2(&table1()).unwrap();
        // minimizer of the cost, confirmed by the grid oracle tests
        assert!((r.p_star[0] - 0.457_219_9).abs() < 1e-6, "{:?}", r.p_star);
        assert!((r.cost.total - 55.1577).abs() < 1e-3);
        assert!(r.residual < 1e-8);
        assert_eq!(r.method, Method::TwoPairRoot);
    }

    #[test]
    fn reference_point_is_right_of_minimum() {
        // p1 = 0.4594 sits about 2e-3 past the minimum, on the rising side
        let d = dc_dp1_n2(&table1(), 0.4594).unwrap();
        assert!(d > 0.1 && d < 0.3, "{d}");
    }

    #[test]
    fn derivative_diverges_near_lower_bound() {
        // in table1 the left end of the segment is pair 2's store limit; widen that
        // store so pair 1's workstation bound becomes binding
        let mut wide = table1();
        wide.stations[1].w = 400.0;
        let wb = feasible_box(&wide).unwrap();
        let edge = wb.pair_interval().unwrap().0;
        assert_eq!(edge, wb.lower[0]);
        assert!(dc_dp1_n2(&wide, edge + 1e-6).unwrap() < -1e3);
    }

    #[test]
    fn derivative_matches_central_difference() {
        let config = table1();
        let h = 1e-6;
        for p1 in [0.45, 0.5, 0.55, 0.6] {
            let fd = (cost_at(&config, p1 + h) - cost_at(&config, p1 - h)) / (2.0 * h);
            let d = dc_dp1_n2(&config, p1).unwrap();
            assert!(
                (d - fd).abs() <= 1e-4 * fd.abs().max(1e-3),
                "{p1}: {d} vs {fd}"
            );
        }
        assert!(dc_dp1_n2(&config, 0.55).unwrap() > 0.0);
    }

    #[test]
    fn out_of_box_rejected() {
        assert!(matches!(
            dc_dp1_n2(&table1(), 0.2),
            Err(EpnError::OutOfBox(_))
        ));
        assert!(matches!(
            dc_dp1_n2(&table1(), 0.7),
            Err(EpnError::OutOfBox(_))
        ));
    }

    #[test]
    fn symmetric_pairs_split_evenly() {
        let r = optimize_n2(&symmetric(2, 100.0, 30.0, 70.0, 5.0, 0.3)).unwrap();
        assert!((r.p_star[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn wrong_size_rejected() {
        assert!(matches!(
            optimize_n2(&table2()),
            Err(EpnError::UnsupportedSize { .. })
        ));
    }

    #[test]
    fn boundary_minimum_reported() {
        // pair 1 is so cheap to serve that the optimum wants to saturate pair 2's store
        let config = NetworkConfig::new(
            100.0,
            vec![
                crate::model::StationPair::geometric(1.0, 300.0, 0.0, 0.5).unwrap(),
                crate::model::StationPair::geometric(60.0, 70.0, 0.0, 0.1).unwrap(),
            ],
        )
        .unwrap();
        assert!(matches!(
            optimize_n2(&config),
            Err(EpnError::NoInteriorRoot(_))
        ));
    }
}
