use serde::{Deserialize, Serialize};

use crate::cost::{cost_total, feasible_box};
use crate::error::{EpnError, Result};
use crate::model::{Allocation, CostBreakdown, FeasibleBox, NetworkConfig};
use crate::par::{map_indexed, Execution};

/// Grids with more cells than this are only available through [`grid_minimum`].
pub const MAX_STORED_CELLS: usize = 20_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GridCell {
    Feasible(CostBreakdown),
    Infeasible,
}

impl GridCell {
    pub fn total(&self) -> Option<f64> {
        match self {
            GridCell::Feasible(c) => Some(c.total),
            GridCell::Infeasible => None,
        }
    }
}

/// Cost landscape over the free coordinates of the simplex.
///
/// For two pairs `axes = [p1 values]`; for three pairs `axes = [p1 values, p2 values]`
/// and the last share is `1 - p1 - p2`. `cells` is row-major over `axes`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub axes: Vec<Vec<f64>>,
    pub cells: Vec<GridCell>,
}

impl SweepGrid {
    /// Free coordinates of cell `index`.
    pub fn point(&self, index: usize) -> Vec<f64> {
        match self.axes.len() {
            1 => vec![self.axes[0][index]],
            _ => {
                let cols = self.axes[1].len();
                vec![self.axes[0][index / cols], self.axes[1][index % cols]]
            }
        }
    }

    /// Indices of feasible cells strictly below every neighbour (8-neighbourhood
    /// in two dimensions); infeasible neighbours count as `+∞`.
    pub fn strict_local_minima(&self) -> Vec<usize> {
        let value = |i: usize| self.cells[i].total().unwrap_or(f64::INFINITY);
        match self.axes.len() {
            1 => {
                let n = self.cells.len();
                (0..n)
                    .filter(|&i| self.cells[i].total().is_some())
                    .filter(|&i| {
                        let v = value(i);
                        (i == 0 || v < value(i - 1)) && (i + 1 == n || v < value(i + 1))
                    })
                    .collect()
            }
            _ => {
                let rows = self.axes[0].len() as isize;
                let cols = self.axes[1].len() as isize;
                (0..self.cells.len())
                    .filter(|&i| self.cells[i].total().is_some())
                    .filter(|&i| {
                        let (r, c) = (i as isize / cols, i as isize % cols);
                        let v = value(i);
                        (-1..=1).all(|dr| {
                            (-1..=1).all(|dc| {
                                let (nr, nc) = (r + dr, c + dc);
                                (dr == 0 && dc == 0)
                                    || nr < 0
                                    || nc < 0
                                    || nr >= rows
                                    || nc >= cols
                                    || v < value((nr * cols + nc) as usize)
                            })
                        })
                    })
                    .collect()
            }
        }
    }
}

fn axis(step: f64) -> Result<Vec<f64>> {
    if !(step.is_finite() && step > 0.0 && step < 1.0) {
        return Err(EpnError::InvalidParameter(format!(
            "grid step must lie in (0, 1), got {step}"
        )));
    }
    let count = ((1.0 - 1e-12) / step).floor() as usize;
    Ok((1..=count).map(|k| k as f64 * step).collect())
}

fn check_size(config: &NetworkConfig) -> Result<()> {
    match config.len() {
        2 | 3 => Ok(()),
        n => Err(EpnError::UnsupportedSize {
            n,
            reason: "exhaustive grids cover two or three pairs",
        }),
    }
}

fn evaluate(config: &NetworkConfig, fbox: &FeasibleBox, p: Vec<f64>) -> GridCell {
    if !fbox.contains(&p) {
        return GridCell::Infeasible;
    }
    match Allocation::new(p).and_then(|a| cost_total(config, &a)) {
        Ok(c) => GridCell::Feasible(c),
        Err(_) => GridCell::Infeasible,
    }
}

fn row_point(n: usize, x: f64, y: f64) -> Vec<f64> {
    if n == 2 {
        vec![x, 1.0 - x]
    } else {
        vec![x, y, 1.0 - x - y]
    }
}

/// Exhaustive sweep with the default execution mode.
pub fn grid_oracle(
    config: &NetworkConfig,
    step: f64,
) -> Result<(Allocation, CostBreakdown, SweepGrid)> {
    grid_oracle_with(config, step, Execution::default())
}

/// Exhaustive sweep returning the argmin and the full landscape.
///
/// Ties are resolved toward the lowest cell index, so the result does not
/// depend on the execution mode.
pub fn grid_oracle_with(
    config: &NetworkConfig,
    step: f64,
    exec: Execution,
) -> Result<(Allocation, CostBreakdown, SweepGrid)> {
    check_size(config)?;
    let fbox = feasible_box(config)?;
    let ax = axis(step)?;
    let n = config.len();
    let cols = if n == 2 { 1 } else { ax.len() };
    if ax.len().saturating_mul(cols) > MAX_STORED_CELLS {
        return Err(EpnError::InvalidParameter(format!(
            "grid of {} cells is too large to store; use a coarser step",
            ax.len() * cols
        )));
    }

    let rows: Vec<Vec<GridCell>> = map_indexed(ax.len(), exec, |r| {
        let x = ax[r];
        if n == 2 {
            vec![evaluate(config, &fbox, row_point(2, x, 0.0))]
        } else {
            ax.iter()
                .map(|&y| {
                    if x + y >= 1.0 {
                        GridCell::Infeasible
                    } else {
                        evaluate(config, &fbox, row_point(3, x, y))
                    }
                })
                .collect()
        }
    });
    let cells: Vec<GridCell> = rows.into_iter().flatten().collect();

    let best = cells
        .iter()
        .enumerate()
        .filter_map(|(i, c)| match c {
            GridCell::Feasible(cost) => Some((i, *cost)),
            GridCell::Infeasible => None,
        })
        .fold(None::<(usize, CostBreakdown)>, |acc, (i, c)| match acc {
            Some((_, b)) if b.total <= c.total => acc,
            _ => Some((i, c)),
        })
        .ok_or_else(|| {
            EpnError::InfeasibleNetwork(format!("no grid point at step {step} is feasible"))
        })?;

    let axes = if n == 2 {
        vec![ax]
    } else {
        vec![ax.clone(), ax]
    };
    let grid = SweepGrid { axes, cells };
    let free = grid.point(best.0);
    let p = row_point(n, free[0], free.get(1).copied().unwrap_or(0.0));
    Ok((Allocation::new(p)?, best.1, grid))
}

/// Argmin over the same grid without storing the landscape.
pub fn grid_minimum(
    config: &NetworkConfig,
    step: f64,
    exec: Execution,
) -> Result<(Allocation, CostBreakdown)> {
    check_size(config)?;
    let fbox = feasible_box(config)?;
    let ax = axis(step)?;
    let n = config.len();

    let row_best: Vec<Option<(f64, CostBreakdown)>> = map_indexed(ax.len(), exec, |r| {
        let x = ax[r];
        let ys: &[f64] = if n == 2 { &[0.0] } else { &ax };
        let mut best: Option<(f64, CostBreakdown)> = None;
        for &y in ys {
            if n == 3 && x + y >= 1.0 {
                break;
            }
            if let GridCell::Feasible(c) = evaluate(config, &fbox, row_point(n, x, y)) {
                if best.is_none_or(|(_, b)| c.total < b.total) {
                    best = Some((y, c));
                }
            }
        }
        best
    });

    let (r, (y, cost)) = row_best
        .iter()
        .enumerate()
        .filter_map(|(r, b)| b.map(|b| (r, b)))
        .fold(
            None::<(usize, (f64, CostBreakdown))>,
            |acc, (r, b)| match acc {
                Some((_, (_, a))) if a.total <= b.1.total => acc,
                _ => Some((r, b)),
            },
        )
        .ok_or_else(|| {
            EpnError::InfeasibleNetwork(format!("no grid point at step {step} is feasible"))
        })?;
    Ok((Allocation::new(row_point(n, ax[r], y))?, cost))
}
