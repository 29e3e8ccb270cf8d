//! Energy packet networks: workstations drained by energy packets from
//! dedicated stores, all fed from one harvested energy stream.
//!
//! * [`model`], [`stationary`] and [`cost`] evaluate the product-form
//!   stationary regime and the composite cost `C = W + E` at an allocation.
//! * [`optimize`] finds the allocation minimizing `C`.
//! * [`sim`] is a discrete-event simulator used as an independent check.

pub mod cost;
pub mod error;
pub mod model;
pub mod optimize;
pub mod par;
pub mod presets;
pub mod quartic;
pub mod roots;
pub mod sim;
pub mod stationary;

pub use cost::{cost_e, cost_e_geometric, cost_total, cost_w, cost_w_geometric, feasible_box};
pub use error::{EpnError, Result, Utilization};
pub use model::{
    Allocation, BatchDistribution, CostBreakdown, FeasibleBox, NetworkConfig, StationPair,
    StationaryState,
};
pub use optimize::{optimize, Method, OptimizeResult, Strategy};
pub use par::Execution;
pub use stationary::{
    pfs_probability, q2_of, solve_q1_general, solve_q1_geometric, stationary_state,
};
