//! Route planners.
//!
//! Every planner except [`Algorithm::Simple`] and [`Algorithm::Shortest`]
//! works in k-hop windows: around the current cell it picks the window member
//! that receives the most expected requests from the current cell as the
//! window endpoint, connects the two with a path inside the window, commits
//! that path and repeats from the endpoint until the goal is reached.
//!
//! The algorithms differ only in how the in-window path is built:
//!
//! - [`Algorithm::Backward`] grows the path from the endpoint towards the
//!   source, each time taking the neighbor that sends the most requests to the
//!   current frontier.
//! - [`Algorithm::Forward`] grows it from the source, each time taking the
//!   neighbor that sends the most requests to the endpoint.
//! - [`Algorithm::Oracle`] enumerates every simple path inside the window.
//! - [`Algorithm::DemandOnly`] is the forward walk scored by origin-only demand.
//!
//! All of them only commit paths that keep every rider (the vehicle's own trip
//! to the destination, passengers already onboard and the window's
//! source-to-endpoint rider) within the detour threshold. When no positive
//! demand is left, or no feasible endpoint exists, the planner advances one
//! window along the shortest path to the destination instead.

mod context;
mod greedy;
mod oracle;

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::demand::{path_expected_requests, Forecast};
use crate::detour::{DetourConfig, OnboardOrder};
use crate::grid::{CellId, Path, RoadGraph, Window};
use crate::{Error, Result};

use context::Ctx;

pub use oracle::DEFAULT_BRUTE_FORCE_CAP;

/// Window hop count used when none is configured.
pub const DEFAULT_K: u32 = 5;

/// Detour threshold used when none is configured.
pub const DEFAULT_DETOUR: f64 = 1.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    Simple,
    Backward,
    Forward,
    Oracle,
    Shortest,
    DemandOnly,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::Simple,
        Algorithm::Backward,
        Algorithm::Forward,
        Algorithm::Oracle,
        Algorithm::Shortest,
        Algorithm::DemandOnly,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Simple => "simple",
            Algorithm::Backward => "backward",
            Algorithm::Forward => "forward",
            Algorithm::Oracle => "oracle",
            Algorithm::Shortest => "shortest",
            Algorithm::DemandOnly => "demand_only",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let a = match s.trim().to_ascii_lowercase().as_str() {
            "simple" | "sg" => Algorithm::Simple,
            "backward" | "bg" => Algorithm::Backward,
            "forward" | "fg" => Algorithm::Forward,
            "oracle" | "brute" | "brute_force" => Algorithm::Oracle,
            "shortest" | "sp" => Algorithm::Shortest,
            "demand_only" | "demand-only" | "share" => Algorithm::DemandOnly,
            other => return Err(Error::InvalidParameter(alloc::format!("unknown algorithm '{other}'"))),
        };
        Ok(a)
    }
}

/// Where a recommended trip ends.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TripGoal {
    /// Drive to this cell. The vehicle's own trip is held to the detour threshold.
    Destination(CellId),
    /// Open-ended: plan this many windows (hops for the simple planner), or
    /// stop earlier once no demand is left.
    Windows(u32),
}

#[derive(Clone, Copy)]
pub struct PlannerInput<'a> {
    pub road: &'a RoadGraph,
    pub demand: &'a dyn Forecast,
    pub start: CellId,
    pub goal: TripGoal,
    pub slot: u32,
    pub k: u32,
    pub detour: DetourConfig,
    /// Passengers already in the vehicle. Only picked-up orders constrain the plan.
    pub onboard: &'a [OnboardOrder],
    /// Record candidate scores for every decision.
    pub trace: bool,
}

impl<'a> PlannerInput<'a> {
    pub fn new(road: &'a RoadGraph, demand: &'a dyn Forecast, start: CellId, goal: TripGoal) -> Self {
        PlannerInput {
            road,
            demand,
            start,
            goal,
            slot: 0,
            k: DEFAULT_K,
            detour: DetourConfig { max_ratio: DEFAULT_DETOUR },
            onboard: &[],
            trace: false,
        }
    }

    pub fn with_k(mut self, k: u32) -> Self {
        self.k = k;
        self
    }

    pub fn with_detour(mut self, detour: DetourConfig) -> Self {
        self.detour = detour;
        self
    }

    pub fn with_slot(mut self, slot: u32) -> Self {
        self.slot = slot;
        self
    }

    pub fn with_onboard(mut self, onboard: &'a [OnboardOrder]) -> Self {
        self.onboard = onboard;
        self
    }

    pub fn with_trace(mut self, trace: bool) -> Self {
        self.trace = trace;
        self
    }

    fn validate(&self) -> Result<()> {
        self.road.check(self.start)?;
        if let TripGoal::Destination(d) = self.goal {
            self.road.check(d)?;
        }
        if self.k < 1 {
            return Err(Error::InvalidParameter(alloc::format!("window hop count must be >= 1, got {}", self.k)));
        }
        DetourConfig::new(self.detour.max_ratio)?;
        Ok(())
    }
}

impl fmt::Debug for PlannerInput<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PlannerInput")
            .field("start", &self.start)
            .field("goal", &self.goal)
            .field("slot", &self.slot)
            .field("k", &self.k)
            .field("detour", &self.detour)
            .field("onboard", &self.onboard.len())
            .finish()
    }
}

/// What a trace step decided.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepKind {
    Endpoint,
    Backward,
    Forward,
    Simple,
    Fallback,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceStep {
    pub window: usize,
    pub kind: StepKind,
    /// Cell the decision was made from (the frontier when walking backwards).
    pub at: CellId,
    /// Candidate cells with their scores, best first.
    pub candidates: Vec<(CellId, f64)>,
    pub chosen: Option<CellId>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RoutePlan {
    pub path: Path,
    /// Expected requests served along `path`.
    pub objective: f64,
    /// `(source, endpoint)` of every window, in order.
    pub windows: Vec<(CellId, CellId)>,
    /// Indices into `windows` that fell back to a shortest-path segment.
    pub fallbacks: Vec<usize>,
    pub trace: Vec<TraceStep>,
}

impl RoutePlan {
    fn from_ctx(ctx: Ctx<'_>, windows: Vec<(CellId, CellId)>, fallbacks: Vec<usize>) -> Self {
        let objective = path_expected_requests(ctx.demand, &ctx.route, ctx.slot);
        RoutePlan { path: Path::new(ctx.route), objective, windows, fallbacks, trace: ctx.trace.unwrap_or_default() }
    }
}

/// Result of window endpoint selection.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EndpointChoice {
    Endpoint(CellId),
    /// No window member with positive demand can be reached feasibly.
    Fallback,
}

/// Picks the endpoint of a window built around `input.start`.
pub fn select_window_endpoint(input: &PlannerInput<'_>, window: &Window) -> Result<EndpointChoice> {
    input.validate()?;
    let mut ctx = Ctx::new(input)?;
    Ok(greedy::select_endpoint(&mut ctx, window, greedy::Score::OdFromSource, 0))
}

pub fn simple_greedy(input: &PlannerInput<'_>) -> Result<RoutePlan> {
    input.validate()?;
    greedy::simple(Ctx::new(input)?)
}

pub fn backward_greedy(input: &PlannerInput<'_>) -> Result<RoutePlan> {
    input.validate()?;
    greedy::sliding(Ctx::new(input)?, Algorithm::Backward)
}

pub fn forward_greedy(input: &PlannerInput<'_>) -> Result<RoutePlan> {
    input.validate()?;
    greedy::sliding(Ctx::new(input)?, Algorithm::Forward)
}

pub fn demand_only_baseline(input: &PlannerInput<'_>) -> Result<RoutePlan> {
    input.validate()?;
    greedy::sliding(Ctx::new(input)?, Algorithm::DemandOnly)
}

/// Sliding windows with an exhaustive in-window search.
pub fn oracle_route(input: &PlannerInput<'_>) -> Result<RoutePlan> {
    input.validate()?;
    greedy::sliding(Ctx::new(input)?, Algorithm::Oracle)
}

/// Best detour-feasible simple path from `input.start` to `endpoint` inside
/// `window`, by exhaustive enumeration. Ties go to the lexicographically
/// smallest cell sequence.
pub fn brute_force_window_path(input: &PlannerInput<'_>, window: &Window, endpoint: CellId) -> Result<RoutePlan> {
    input.validate()?;
    let mut ctx = Ctx::new(input)?;
    let path = oracle::best_window_path(&mut ctx, window, endpoint, DEFAULT_BRUTE_FORCE_CAP)?
        .ok_or(Error::NoPath { from: input.start, to: endpoint })?;
    ctx.commit(&path);
    Ok(RoutePlan::from_ctx(ctx, alloc::vec![(input.start, endpoint)], Vec::new()))
}

/// Shortest path to the destination, ignoring demand.
pub fn shortest_path_baseline(input: &PlannerInput<'_>) -> Result<RoutePlan> {
    input.validate()?;
    let TripGoal::Destination(dest) = input.goal else {
        return Err(Error::InvalidParameter("the shortest-path baseline needs a destination".into()));
    };
    let (path, _) = input.road.shortest_path(input.start, dest)?;
    let mut ctx = Ctx::new(input)?;
    ctx.commit(&path);
    Ok(RoutePlan::from_ctx(ctx, alloc::vec![(input.start, dest)], Vec::new()))
}

pub fn recommend_route(algo: Algorithm, input: &PlannerInput<'_>) -> Result<RoutePlan> {
    match algo {
        Algorithm::Simple => simple_greedy(input),
        Algorithm::Backward => backward_greedy(input),
        Algorithm::Forward => forward_greedy(input),
        Algorithm::Oracle => oracle_route(input),
        Algorithm::Shortest => shortest_path_baseline(input),
        Algorithm::DemandOnly => demand_only_baseline(input),
    }
}

/// Parses a comma-separated algorithm list such as `shortest,backward,forward`.
pub fn parse_algorithms(list: &str) -> Result<Vec<Algorithm>> {
    list.split(',').filter(|s| !s.trim().is_empty()).map(str::parse).collect()
}

impl From<Algorithm> for String {
    fn from(a: Algorithm) -> String {
        String::from(a.name())
    }
}

#[cfg(test)]
mod tests;
