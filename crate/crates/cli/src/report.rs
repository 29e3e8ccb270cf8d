//! JSON reports written to standard output.

use epn_core::optimize::Method;
use epn_core::sim::SimEstimate;
use epn_core::FeasibleBox;
use serde::{Deserialize, Serialize};

use crate::config::ConfigDocument;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub inputs: ConfigDocument,
    /// Absent for `solve` and `simulate`, which evaluate a given allocation.
    pub method: Option<Method>,
    pub p: Vec<f64>,
    pub analytic: Option<Analytic>,
    #[serde(rename = "box")]
    pub feasible_box: Option<FeasibleBox>,
    /// Spread of `∂C/∂p_i` at `p`.
    pub residual: Option<f64>,
    pub sweep: Option<SweepSummary>,
    pub sim: Option<SimSection>,
}

/// Product-form values at `p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Analytic {
    pub q1: Vec<f64>,
    pub q2: Vec<f64>,
    #[serde(rename = "W")]
    pub response_time: f64,
    #[serde(rename = "E")]
    pub energy_loss: f64,
    #[serde(rename = "C")]
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub out: String,
    pub step: f64,
    pub rows: usize,
    pub feasible_rows: usize,
    pub grid_min_p: Vec<f64>,
    pub grid_min_cost: f64,
    /// Row index (0-based, excluding the header) marked as the analytic optimum.
    pub optimum_row: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSection {
    pub estimate: SimEstimate,
    /// `(simulated - analytic) / stderr`; `None` when there is no analytic value or no spread.
    pub z: Option<ZScores>,
    pub joint: Option<JointSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZScores {
    pub q1: Vec<Option<f64>>,
    pub q2: Vec<Option<f64>>,
    #[serde(rename = "W")]
    pub response_time: Option<f64>,
    #[serde(rename = "E")]
    pub energy_loss: Option<f64>,
}

/// Empirical joint-state frequencies against the product form, over all states up to `cap`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointSummary {
    pub cap: u32,
    pub states: usize,
    pub max_abs_deviation: f64,
    pub fraction_within_3: f64,
}

/// `x` rounded to six significant digits, for human-readable output.
pub fn sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i32;
    if (-5..=9).contains(&magnitude) {
        let decimals = (5 - magnitude).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.5e}")
    }
}

fn list(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|&x| sig6(x)).collect();
    format!("({})", parts.join(", "))
}

impl Report {
    /// Short human-readable summary for standard error.
    pub fn summary(&self) -> String {
        let mut lines = vec![format!("{}: p = {}", self.command, list(&self.p))];
        if let Some(m) = self.method {
            lines.push(format!("  method    {m:?}"));
        }
        if let Some(a) = &self.analytic {
            lines.push(format!("  q1        {}", list(&a.q1)));
            lines.push(format!("  q2        {}", list(&a.q2)));
            lines.push(format!(
                "  W {}  E {}  C {}",
                sig6(a.response_time),
                sig6(a.energy_loss),
                sig6(a.total)
            ));
        }
        if let Some(r) = self.residual {
            lines.push(format!("  residual  {}", sig6(r)));
        }
        if let Some(s) = &self.sweep {
            lines.push(format!(
                "  {} rows ({} feasible) -> {}; grid min C {} at {}",
                s.rows,
                s.feasible_rows,
                s.out,
                sig6(s.grid_min_cost),
                list(&s.grid_min_p)
            ));
        }
        if let Some(s) = &self.sim {
            let e = &s.estimate;
            lines.push(format!(
                "  simulated W {} ± {}  E {} ± {}",
                sig6(e.response_time.mean),
                sig6(e.response_time.stderr),
                sig6(e.energy_loss.mean),
                sig6(e.energy_loss.stderr)
            ));
            if e.non_stationary {
                lines.push(format!(
                    "  warning: {} of {} replications look non-stationary",
                    e.non_stationary_replications, e.replications
                ));
            }
        }
        lines.join("\n")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(sig6(55.157_396_1), "55.1574");
        assert_eq!(sig6(0.040_004_8), "0.0400048");
        assert_eq!(sig6(214.278_891), "214.279");
        assert_eq!(sig6(1.0), "1.00000");
        assert_eq!(sig6(-0.5), "-0.500000");
        assert_eq!(sig6(1.234_567e-9), "1.23457e-9");
        assert_eq!(sig6(0.0), "0");
    }
}
