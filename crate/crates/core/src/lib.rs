//! Close Enough Traveling Salesman Problem toolkit.
//!
//! Each sensor's circular communication disk is replaced by an inscribed
//! convex region (square or regular hexagon) so that membership becomes a
//! set of linear constraints. Tours are then optimized under a Manhattan
//! surrogate of the Euclidean length, optionally calibrated by a
//! least-squares regression and shaped by eight projection axes.
//!
//! Two routes to a solution are provided:
//!
//! * [`milp`] builds the complete mixed-integer model and writes it as a
//!   CPLEX LP file for an external solver.
//! * [`mf`] runs the fragmented relocation heuristic in-process, using the
//!   dense simplex in [`lp`] and the tour engines in [`tsp`].
//!
//! [`oracle`] brute-forces tiny instances exactly and is what the solver is
//! measured against.

pub mod error;
pub mod geometry;
pub mod instance;
pub mod lp;
pub mod metrics;
pub mod mf;
pub mod milp;
pub mod oracle;
pub mod report;
pub mod rng;
pub mod tsp;

pub use error::{Error, Result};
pub use geometry::{ConvexRegion, Point, RegionKind};
pub use instance::{Instance, Sensor};
pub use metrics::{ObjectiveConfig, ObjectiveMode, RegressionModel};
pub use mf::{solve_mf, MfOutcome, SolverConfig};
pub use milp::Linearization;
pub use tsp::RouteState;
