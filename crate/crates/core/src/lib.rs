//! Detour-constrained, origin-destination aware route recommendation for
//! ridesharing vehicles on grid road networks.
//!
//! The crate is `no_std` (it needs `alloc`) and holds everything that is a
//! pure function of its inputs:
//!
//! - [`grid`]: the road graph, haversine lengths, shortest paths and k-hop windows
//! - [`demand`]: the origin-destination request model and the path objective
//! - [`detour`]: detour ratios, order-set feasibility and order admission
//! - [`recommend`]: the window planners (simple, backward, forward, brute force)
//!   and the two baselines
//! - [`sim`]: order replay against a recommended route and the utilization metrics
//! - [`synthetic`]: seeded order generators and the small reference scenarios
//!
//! File formats, timestamp parsing, wall-clock timing and the command line live
//! in the `windroute` crate.
#![no_std]

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod demand;
pub mod detour;
mod error;
pub mod grid;
pub mod recommend;
pub mod sim;
pub mod synthetic;

pub use demand::{Forecast, OdDemandModel, RideOrder, Timestamp, TripRecord};
pub use detour::{DetourConfig, OnboardOrder, VehicleState};
pub use error::{Error, Result};
pub use grid::{BBox, CellId, GridCell, Path, RoadGraph, Window};
pub use recommend::{Algorithm, PlannerInput, RoutePlan, TripGoal};
pub use sim::{SimConfig, SimMetrics};
