//! Command implementations behind the `epn` binary.
//!
//! Every command returns a [`Report`]; `sweep` also writes a CSV file.

pub mod config;
pub mod report;

use std::path::Path;

use epn_core::optimize::{
    first_order_residual, grid_oracle_with, large_gamma_closed_form, optimize_n2, optimize_ngeq3,
    GridCell, OptimizeResult, Strategy,
};
use epn_core::sim::{self, compare_joint_states, Stat};
use epn_core::{
    cost_total, feasible_box, optimize, stationary_state, Allocation, EpnError, Execution,
    NetworkConfig,
};

pub use config::{ConfigDocument, SimDoc, StationDoc};
pub use report::{Analytic, JointSummary, Report, SimSection, SweepSummary, ZScores};

pub const TOOL: &str = "epn";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const EXIT_IO: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Parse(String),
    Validation(String),
    Model(EpnError),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) | CliError::Validation(_) => EXIT_PARSE,
            CliError::Model(e) if e.is_validation() => EXIT_PARSE,
            CliError::Model(e) if e.is_infeasibility() => EXIT_INFEASIBLE,
            CliError::Model(_) => EXIT_NUMERICAL,
            CliError::Io(_) => EXIT_IO,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Parse(m) => write!(f, "parse error: {m}"),
            CliError::Validation(m) => write!(f, "invalid input: {m}"),
            CliError::Model(e) => write!(f, "{e}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<EpnError> for CliError {
    fn from(e: EpnError) -> Self {
        CliError::Model(e)
    }
}

/// Optimizer selection on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum MethodArg {
    Auto,
    N2,
    Quartic,
    LargeGamma,
    Grid,
}

pub const DEFAULT_GRID_STEP: f64 = 1e-3;

fn report(command: &str, doc: &ConfigDocument, p: Vec<f64>) -> Report {
    Report {
        tool: TOOL.into(),
        version: VERSION.into(),
        command: command.into(),
        inputs: doc.clone(),
        method: None,
        p,
        analytic: None,
        feasible_box: None,
        residual: None,
        sweep: None,
        sim: None,
    }
}

fn analytic(network: &NetworkConfig, alloc: &Allocation) -> Result<Analytic, EpnError> {
    let state = stationary_state(network, alloc)?;
    let cost = cost_total(network, alloc)?;
    Ok(Analytic {
        q1: state.q1,
        q2: state.q2,
        response_time: cost.response_time,
        energy_loss: cost.energy_loss,
        total: cost.total,
    })
}

/// Box and first-order residual, which exist only for geometric batches.
fn geometric_extras(network: &NetworkConfig, p: &[f64], out: &mut Report) {
    if network.is_geometric() {
        out.feasible_box = feasible_box(network).ok();
        out.residual = first_order_residual(network, p)
            .ok()
            .filter(|r| r.is_finite());
    }
}

/// Evaluates `W`, `E`, `C` and the utilizations at `alloc` (or the document's `alloc`).
pub fn solve(doc: &ConfigDocument, alloc: Option<Vec<f64>>) -> Result<Report, CliError> {
    let network = doc.network()?;
    let alloc = resolve_alloc(doc, alloc)?.ok_or_else(|| {
        CliError::Validation("solve needs an allocation (`alloc` or --alloc)".into())
    })?;
    let mut out = report("solve", doc, alloc.as_slice().to_vec());
    out.analytic = Some(analytic(&network, &alloc)?);
    geometric_extras(&network, alloc.as_slice(), &mut out);
    Ok(out)
}

fn resolve_alloc(
    doc: &ConfigDocument,
    flag: Option<Vec<f64>>,
) -> Result<Option<Allocation>, CliError> {
    match flag {
        Some(p) => {
            if p.len() != doc.stations.len() {
                return Err(CliError::Validation(format!(
                    "--alloc: {} entries for {} stations",
                    p.len(),
                    doc.stations.len()
                )));
            }
            Allocation::new(p)
                .map(Some)
                .map_err(|e| CliError::Validation(format!("--alloc: {e}")))
        }
        None => doc.allocation(),
    }
}

pub fn run_optimizer(
    network: &NetworkConfig,
    method: MethodArg,
    grid_step: Option<f64>,
) -> Result<OptimizeResult, CliError> {
    if grid_step.is_some() && method != MethodArg::Grid {
        return Err(CliError::Validation(
            "--grid-step only applies to --method grid".into(),
        ));
    }
    Ok(match method {
        MethodArg::Auto => optimize(network, Strategy::Auto)?,
        MethodArg::N2 => optimize_n2(network)?,
        MethodArg::Quartic => optimize_ngeq3(network)?,
        MethodArg::LargeGamma => large_gamma_closed_form(network)?,
        MethodArg::Grid => optimize(
            network,
            Strategy::Grid {
                step: grid_step.unwrap_or(DEFAULT_GRID_STEP),
            },
        )?,
    })
}

pub fn optimize_cmd(
    doc: &ConfigDocument,
    method: MethodArg,
    grid_step: Option<f64>,
) -> Result<Report, CliError> {
    let network = doc.network()?;
    let result = run_optimizer(&network, method, grid_step)?;
    let mut out = report("optimize", doc, result.p_star.as_slice().to_vec());
    out.method = Some(result.method);
    out.analytic = Some(analytic(&network, &result.p_star)?);
    out.feasible_box = feasible_box(&network).ok();
    out.residual = Some(result.residual);
    Ok(out)
}

/// Writes the cost landscape on a grid of `step` to `out` as CSV.
///
/// Columns are `p1[,p2],W,E,C,mark`. Infeasible rows leave `W` and `E` empty
/// and read `INFEASIBLE` under `C`; the row nearest the analytic optimum is
/// marked `optimum` and the grid argmin `grid_min`.
pub fn sweep(doc: &ConfigDocument, step: f64, out_path: &Path) -> Result<Report, CliError> {
    let network = doc.network()?;
    let (best, best_cost, grid) = grid_oracle_with(&network, step, Execution::default())?;
    let optimum = optimize(&network, Strategy::Auto).ok();

    let n = network.len();
    let rows: Vec<usize> = (0..grid.cells.len())
        .filter(|&i| n == 2 || grid.point(i).iter().sum::<f64>() < 1.0)
        .collect();
    let distance = |i: usize, p: &Allocation| -> f64 {
        grid.point(i)
            .iter()
            .zip(p.as_slice())
            .map(|(a, b)| (a - b).powi(2))
            .sum()
    };
    let nearest = |p: &Allocation| {
        rows.iter()
            .copied()
            .filter(|&i| grid.cells[i].total().is_some())
            .min_by(|&a, &b| distance(a, p).total_cmp(&distance(b, p)))
    };
    let optimum_cell = optimum.as_ref().and_then(|r| nearest(&r.p_star));
    let grid_min_cell = nearest(&best);

    let mut writer = csv::Writer::from_path(out_path)
        .map_err(|e| CliError::Io(format!("{}: {e}", out_path.display())))?;
    let io = |e: csv::Error| CliError::Io(format!("{}: {e}", out_path.display()));
    let mut header = vec!["p1"];
    if n == 3 {
        header.push("p2");
    }
    header.extend(["W", "E", "C", "mark"]);
    writer.write_record(&header).map_err(io)?;

    let mut optimum_row = None;
    let mut feasible_rows = 0;
    for (row, &i) in rows.iter().enumerate() {
        let mut record: Vec<String> = grid.point(i).iter().map(|x| x.to_string()).collect();
        match grid.cells[i] {
            GridCell::Feasible(c) => {
                feasible_rows += 1;
                record.extend([c.response_time, c.energy_loss, c.total].map(|x| x.to_string()));
            }
            GridCell::Infeasible => record.extend(["".into(), "".into(), "INFEASIBLE".into()]),
        }
        let mut marks = Vec::new();
        if Some(i) == optimum_cell {
            marks.push("optimum");
            optimum_row = Some(row);
        }
        if Some(i) == grid_min_cell {
            marks.push("grid_min");
        }
        record.push(marks.join("+"));
        writer.write_record(&record).map_err(io)?;
    }
    writer
        .flush()
        .map_err(|e| CliError::Io(format!("{}: {e}", out_path.display())))?;

    let p = optimum.as_ref().map_or_else(
        || best.as_slice().to_vec(),
        |r| r.p_star.as_slice().to_vec(),
    );
    let mut out = report("sweep", doc, p);
    if let Some(r) = &optimum {
        out.method = Some(r.method);
        out.analytic = Some(analytic(&network, &r.p_star)?);
        out.residual = Some(r.residual);
    }
    out.feasible_box = feasible_box(&network).ok();
    out.sweep = Some(SweepSummary {
        out: out_path.display().to_string(),
        step,
        rows: rows.len(),
        feasible_rows,
        grid_min_p: best.as_slice().to_vec(),
        grid_min_cost: best_cost.total,
        optimum_row,
    });
    Ok(out)
}

fn z(stat: &Stat, reference: f64) -> Option<f64> {
    Some(stat.z_score(reference)).filter(|z| z.is_finite())
}

/// Simulates at `alloc` (flag, then document, then the analytic optimum) and
/// compares against the product form where it exists.
pub fn simulate(
    doc: &ConfigDocument,
    alloc: Option<Vec<f64>>,
    overrides: &SimDoc,
    exec: Execution,
) -> Result<Report, CliError> {
    let network = doc.network()?;
    let (alloc, method) = match resolve_alloc(doc, alloc)? {
        Some(a) => (a, None),
        None => {
            let r = optimize(&network, Strategy::Auto)?;
            (r.p_star, Some(r.method))
        }
    };
    let config = doc.sim_config(&network, &alloc, overrides);
    let estimate = sim::run_with(&config, exec)?;

    let mut out = report("simulate", doc, alloc.as_slice().to_vec());
    out.method = method;
    out.analytic = analytic(&network, &alloc).ok();
    geometric_extras(&network, alloc.as_slice(), &mut out);

    let (zs, joint) = match &out.analytic {
        Some(a) => {
            let zs = ZScores {
                q1: estimate
                    .q1
                    .iter()
                    .zip(&a.q1)
                    .map(|(s, &r)| z(s, r))
                    .collect(),
                q2: estimate
                    .q2
                    .iter()
                    .zip(&a.q2)
                    .map(|(s, &r)| z(s, r))
                    .collect(),
                response_time: z(&estimate.response_time, a.response_time),
                energy_loss: z(&estimate.energy_loss, a.energy_loss),
            };
            let state = stationary_state(&network, &alloc)?;
            let joint = compare_joint_states(&estimate, &state)
                .ok()
                .map(|j| JointSummary {
                    cap: estimate.state_cap.unwrap_or(0),
                    states: j.states.len(),
                    max_abs_deviation: j.max_abs_deviation,
                    fraction_within_3: j.fraction_within_3,
                });
            (Some(zs), joint)
        }
        None => (None, None),
    };
    out.sim = Some(SimSection {
        estimate,
        z: zs,
        joint,
    });
    Ok(out)
}
