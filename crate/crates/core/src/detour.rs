//! Passenger detour limits and order admission.
//!
//! A rider's detour ratio is the distance they actually travel between pickup
//! and dropoff divided by the shortest-path distance between the two cells.
//! Every admitted rider must stay at or below the configured threshold.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::demand::RideOrder;
use crate::grid::{CellId, Path, RoadGraph};
use crate::{Error, Result};

/// Relative tolerance on detour ratio comparisons.
pub const RATIO_SLACK: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DetourConfig {
    /// Largest allowed detour ratio, at least 1.
    pub max_ratio: f64,
}

impl DetourConfig {
    pub fn new(max_ratio: f64) -> Result<Self> {
        if !(max_ratio.is_finite() && max_ratio >= 1.0) {
            return Err(Error::InvalidParameter(format!("detour threshold must be >= 1, got {max_ratio}")));
        }
        Ok(DetourConfig { max_ratio })
    }

    /// Ratios equal to the threshold are allowed. A relative slack of
    /// [`RATIO_SLACK`] absorbs rounding between differently summed lengths of
    /// the same path.
    #[inline]
    pub fn allows(&self, ratio: f64) -> bool {
        ratio <= self.max_ratio * (1.0 + RATIO_SLACK)
    }
}

/// Travelled length of `traveled` over the shortest distance between its
/// endpoints. Same-cell trips have ratio 1.
pub fn detour_ratio(road: &RoadGraph, traveled: &[CellId], origin: CellId, dest: CellId) -> Result<f64> {
    road.check(origin)?;
    road.check(dest)?;
    if origin == dest {
        return Ok(1.0);
    }
    if traveled.first() != Some(&origin) || traveled.last() != Some(&dest) {
        return Err(Error::InvalidPlan(format!("travelled path does not run from {origin} to {dest}")));
    }
    let length = road.path_length(traveled)?;
    let (_, shortest) = road.shortest_path(origin, dest)?;
    Ok(length / shortest)
}

/// Incremental detour test for a rider bound from `s` to `d` who has covered
/// `d_i` km so far and is now at `i`: taking `x` more km of detour is fine iff
/// `(x + d_i + sp_id) / sp_sd <= threshold`.
#[inline]
pub fn extra_distance_ok(x: f64, d_i: f64, sp_id: f64, sp_sd: f64, cfg: &DetourConfig) -> bool {
    cfg.allows((x + d_i + sp_id) / sp_sd)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrderRatio {
    pub order: RideOrder,
    pub ratio: f64,
}

/// Per-order detour ratios over a plan.
#[derive(Clone, Debug, PartialEq)]
pub struct Feasibility {
    pub ratios: Vec<OrderRatio>,
    pub threshold: f64,
}

impl Feasibility {
    pub fn is_feasible(&self) -> bool {
        self.violations().next().is_none()
    }

    pub fn violations(&self) -> impl Iterator<Item = &OrderRatio> {
        let cfg = DetourConfig { max_ratio: self.threshold };
        self.ratios.iter().filter(move |r| !cfg.allows(r.ratio))
    }

    /// The violating order with the largest ratio; ties go to the earlier order.
    pub fn worst_offender(&self) -> Option<OrderRatio> {
        self.violations().copied().fold(None, |best: Option<OrderRatio>, r| match best {
            Some(b) if b.ratio >= r.ratio => Some(b),
            _ => Some(r),
        })
    }
}

/// Positions of an order's origin and destination on `plan`.
pub fn locate(plan: &[CellId], order: &RideOrder) -> Option<(usize, usize)> {
    let a = plan.iter().position(|&c| c == order.origin)?;
    let b = plan[a..].iter().position(|&c| c == order.dest)? + a;
    Some((a, b))
}

/// Detour ratio of every order over its sub-path of `plan`.
pub fn order_set_feasible(
    road: &RoadGraph,
    plan: &[CellId],
    orders: &[RideOrder],
    cfg: &DetourConfig,
) -> Result<Feasibility> {
    let mut ratios = Vec::with_capacity(orders.len());
    for order in orders {
        let (a, b) = locate(plan, order).ok_or_else(|| {
            Error::InvalidPlan(format!("order {} -> {} is not served by the plan", order.origin, order.dest))
        })?;
        let ratio = detour_ratio(road, &plan[a..=b], order.origin, order.dest)?;
        ratios.push(OrderRatio { order: *order, ratio });
    }
    Ok(Feasibility { ratios, threshold: cfg.max_ratio })
}

/// An admitted order that has not been dropped off yet.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OnboardOrder {
    pub order: RideOrder,
    /// Distance covered since pickup, along the route actually driven.
    pub traveled_km: f64,
    pub picked_up: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VehicleState {
    pub position: CellId,
    pub capacity: u32,
    pub onboard: Vec<OnboardOrder>,
    pub route_so_far: Path,
    /// The committed plan, starting at the first cell of `route_so_far`.
    pub plan: Path,
}

impl VehicleState {
    pub fn new(position: CellId, capacity: u32) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::InvalidParameter("vehicle capacity must be >= 1".into()));
        }
        Ok(VehicleState {
            position,
            capacity,
            onboard: Vec::new(),
            route_so_far: Path::new(vec![position]),
            plan: Path::new(vec![position]),
        })
    }

    /// Passengers currently in the vehicle.
    pub fn load(&self) -> u32 {
        self.onboard.iter().filter(|o| o.picked_up).map(|o| o.order.passengers).sum()
    }

    /// Drives to the adjacent cell `next`: picks up admitted orders starting
    /// there and drops off (and returns) the orders ending there.
    pub fn advance(&mut self, road: &RoadGraph, next: CellId) -> Result<Vec<OnboardOrder>> {
        let km = road
            .edge_length(self.position, next)
            .ok_or(Error::InvalidPath { index: self.route_so_far.len() - 1 })?;
        for o in self.onboard.iter_mut().filter(|o| o.picked_up) {
            o.traveled_km += km;
        }
        self.position = next;
        let mut cells = core::mem::take(&mut self.route_so_far).into_vec();
        cells.push(next);
        self.route_so_far = Path::new(cells);
        let mut dropped = Vec::new();
        self.onboard.retain(|o| {
            if o.picked_up && o.order.dest == next {
                dropped.push(*o);
                false
            } else {
                true
            }
        });
        for o in self.onboard.iter_mut().filter(|o| !o.picked_up && o.order.origin == next) {
            o.picked_up = true;
        }
        Ok(dropped)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RejectReason {
    /// The plan does not visit the order's origin and then its destination.
    NotOnPlan,
    /// Taking the order would push `offender` (possibly the new order itself)
    /// to `ratio`, above the threshold.
    Detour { offender: RideOrder, ratio: f64 },
    /// Peak simultaneous load along the plan would exceed capacity.
    Capacity { peak: u32 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Admission {
    Accepted,
    Rejected(RejectReason),
}

impl Admission {
    pub fn is_accepted(&self) -> bool {
        matches!(self, Admission::Accepted)
    }
}

/// First-come-first-served admission of `new_order` onto `extended_plan`.
///
/// Accepts iff every onboard order and the new one keep their detour ratio
/// within the threshold along `extended_plan`, and the peak passenger load
/// from the current position onward fits the vehicle. On acceptance the order
/// joins `state.onboard` and `extended_plan` becomes the committed plan.
pub fn try_admit(
    road: &RoadGraph,
    state: &mut VehicleState,
    new_order: RideOrder,
    extended_plan: &Path,
    cfg: &DetourConfig,
) -> Result<Admission> {
    let plan = extended_plan.cells();
    let Some(here) = plan.iter().position(|&c| c == state.position) else {
        return Err(Error::InvalidPlan(format!("plan does not pass the vehicle position {}", state.position)));
    };
    let ahead = &plan[here..];
    let Some((new_from, new_to)) = locate(ahead, &new_order) else {
        return Ok(Admission::Rejected(RejectReason::NotOnPlan));
    };

    // (pickup index, dropoff index) relative to `ahead`, and the distance
    // already covered before `ahead[pickup]`.
    let mut spans: Vec<(RideOrder, usize, usize, f64)> = Vec::with_capacity(state.onboard.len() + 1);
    for o in &state.onboard {
        let span = if o.picked_up {
            ahead.iter().position(|&c| c == o.order.dest).map(|b| (o.order, 0, b, o.traveled_km))
        } else {
            locate(ahead, &o.order).map(|(a, b)| (o.order, a, b, 0.0))
        };
        match span {
            Some(s) => spans.push(s),
            None => return Ok(Admission::Rejected(RejectReason::NotOnPlan)),
        }
    }
    spans.push((new_order, new_from, new_to, 0.0));

    let mut worst: Option<(RideOrder, f64)> = None;
    for &(order, a, b, before) in &spans {
        if order.origin == order.dest {
            continue;
        }
        let (_, shortest) = road.shortest_path(order.origin, order.dest)?;
        let ratio = (before + road.path_length(&ahead[a..=b])?) / shortest;
        if !cfg.allows(ratio) && worst.is_none_or(|(_, r)| ratio > r) {
            worst = Some((order, ratio));
        }
    }
    if let Some((offender, ratio)) = worst {
        return Ok(Admission::Rejected(RejectReason::Detour { offender, ratio }));
    }

    let peak = peak_load(ahead.len(), spans.iter().map(|&(o, a, b, _)| (a, b, o.passengers)));
    if peak > state.capacity {
        return Ok(Admission::Rejected(RejectReason::Capacity { peak }));
    }

    state.onboard.push(OnboardOrder { order: new_order, traveled_km: 0.0, picked_up: new_from == 0 });
    let mut committed = state.route_so_far.cells().to_vec();
    committed.extend_from_slice(&ahead[1..]);
    state.plan = Path::new(committed);
    Ok(Admission::Accepted)
}

/// Largest load over the edges of a plan with `cells` cells, where each rider
/// occupies the edges from its pickup index up to (not including) its dropoff index.
pub fn peak_load(cells: usize, riders: impl Iterator<Item = (usize, usize, u32)>) -> u32 {
    let mut delta = vec![0i64; cells + 1];
    for (a, b, p) in riders {
        delta[a] += p as i64;
        delta[b] -= p as i64;
    }
    let mut load = 0i64;
    let mut peak = 0i64;
    for d in delta {
        load += d;
        peak = peak.max(load);
    }
    peak as u32
}
