use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use super::{PlannerInput, TraceStep, TripGoal};
use crate::demand::Forecast;
use crate::detour::{extra_distance_ok, DetourConfig};
use crate::grid::{CellId, RoadGraph, Window};
use crate::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum RiderKind {
    /// The vehicle's own trip to the goal cell. Its remaining distance is
    /// measured around cells already on the route, so a passing check
    /// guarantees the trip can still be completed.
    Driver,
    /// A passenger already in the vehicle; best-case remaining distance.
    Onboard,
}

#[derive(Clone, Copy, Debug)]
struct Rider {
    kind: RiderKind,
    dest: CellId,
    shortest: f64,
    /// Rider distance when the route length is zero.
    offset: f64,
    done: bool,
}

/// Rider travelling from a window's source to its endpoint.
#[derive(Clone, Copy, Debug)]
pub(crate) struct WindowRider {
    pub dest: CellId,
    pub shortest: f64,
}

/// Mutable planning state shared by every planner: the route committed so
/// far and the detour constraints it has to respect.
pub(crate) struct Ctx<'a> {
    pub road: &'a RoadGraph,
    pub demand: &'a dyn Forecast,
    pub slot: u32,
    pub cfg: DetourConfig,
    pub k: u32,
    pub goal: TripGoal,
    pub route: Vec<CellId>,
    pub on_route: Vec<bool>,
    pub route_km: f64,
    riders: Vec<Rider>,
    sp_cache: BTreeMap<CellId, Vec<f64>>,
    pub trace: Option<Vec<TraceStep>>,
    scratch: Vec<bool>,
}

impl<'a> Ctx<'a> {
    pub fn new(input: &PlannerInput<'a>) -> Result<Self> {
        let road = input.road;
        road.check(input.start)?;
        let mut ctx = Ctx {
            road,
            demand: input.demand,
            slot: input.slot,
            cfg: input.detour,
            k: input.k,
            goal: input.goal,
            route: vec![input.start],
            on_route: vec![false; road.len()],
            route_km: 0.0,
            riders: Vec::new(),
            sp_cache: BTreeMap::new(),
            trace: input.trace.then(Vec::new),
            scratch: vec![false; road.len()],
        };
        ctx.on_route[input.start.index()] = true;
        if let TripGoal::Destination(dest) = input.goal {
            road.check(dest)?;
            let shortest = ctx.sp(input.start, dest);
            if !shortest.is_finite() {
                return Err(crate::Error::NoPath { from: input.start, to: dest });
            }
            ctx.riders.push(Rider { kind: RiderKind::Driver, dest, shortest, offset: 0.0, done: dest == input.start });
        }
        for o in input.onboard.iter().filter(|o| o.picked_up) {
            road.check(o.order.dest)?;
            let shortest = ctx.sp(o.order.origin, o.order.dest);
            let done = o.order.dest == input.start || o.order.origin == o.order.dest;
            ctx.riders.push(Rider { kind: RiderKind::Onboard, dest: o.order.dest, shortest, offset: o.traveled_km, done });
        }
        Ok(ctx)
    }

    pub fn current(&self) -> CellId {
        *self.route.last().unwrap()
    }

    pub fn goal_cell(&self) -> Option<CellId> {
        match self.goal {
            TripGoal::Destination(d) => Some(d),
            TripGoal::Windows(_) => None,
        }
    }

    /// Plain shortest distance, cached per target.
    pub fn sp(&mut self, from: CellId, to: CellId) -> f64 {
        let road = self.road;
        self.sp_cache.entry(to).or_insert_with(|| road.distances_to(to, |_| true))[from.index()]
    }

    pub fn window_rider(&mut self, endpoint: CellId) -> WindowRider {
        let from = self.current();
        WindowRider { dest: endpoint, shortest: self.sp(from, endpoint) }
    }

    /// May `c` appear strictly inside a window path?
    pub fn usable_inner(&self, window: Option<&Window>, c: CellId) -> bool {
        !self.on_route[c.index()] && window.is_none_or(|w| w.contains(c)) && self.goal_cell() != Some(c)
    }

    /// Lexicographically smallest shortest path from `from` to `to` through
    /// usable cells of `window` that are not in `avoid`.
    pub fn window_path(&mut self, window: &Window, from: CellId, to: CellId, avoid: &[CellId]) -> Option<Vec<CellId>> {
        for c in avoid {
            self.scratch[c.index()] = true;
        }
        let road = self.road;
        let ok = |c: CellId| c == from || (!self.scratch[c.index()] && self.usable_inner(Some(window), c));
        let dist = road.distances_to(to, ok);
        let path = road.trace_path(from, to, &dist, ok);
        for c in avoid {
            self.scratch[c.index()] = false;
        }
        path
    }

    /// Shortest path from the current cell to the goal that avoids the route.
    pub fn path_to_goal(&self) -> Option<Vec<CellId>> {
        let goal = self.goal_cell()?;
        let from = self.current();
        let ok = |c: CellId| c == from || !self.on_route[c.index()];
        let dist = self.road.distances_to(goal, ok);
        self.road.trace_path(from, goal, &dist, ok)
    }

    /// Would committing `path` (which starts at the current cell) keep every
    /// rider within the detour threshold, assuming each finishes along a
    /// shortest continuation?
    pub fn feasible(&mut self, path: &[CellId], window_rider: Option<WindowRider>) -> bool {
        debug_assert_eq!(path.first(), Some(&self.current()));
        let mut cum = Vec::with_capacity(path.len());
        let mut km = 0.0;
        cum.push(0.0);
        for pair in path.windows(2) {
            match self.road.edge_length(pair[0], pair[1]) {
                Some(e) => km += e,
                None => return false,
            }
            cum.push(km);
        }
        let end = *path.last().unwrap();
        let cfg = self.cfg;

        if let Some(wr) = window_rider {
            if wr.dest != end || !extra_distance_ok(0.0, km, 0.0, wr.shortest, &cfg) {
                return false;
            }
        }
        for i in 0..self.riders.len() {
            let r = self.riders[i];
            if r.done || r.shortest == 0.0 {
                continue;
            }
            let travelled = r.offset + self.route_km;
            let ok = match path.iter().skip(1).position(|&c| c == r.dest) {
                Some(t) => extra_distance_ok(0.0, travelled + cum[t + 1], 0.0, r.shortest, &cfg),
                None => {
                    let remaining = match r.kind {
                        RiderKind::Driver => self.blocked_distance(path, r.dest),
                        RiderKind::Onboard => self.sp(end, r.dest),
                    };
                    remaining.is_finite() && extra_distance_ok(0.0, travelled + km, remaining, r.shortest, &cfg)
                }
            };
            if !ok {
                return false;
            }
        }
        true
    }

    /// Distance from the end of `path` to `dest` avoiding the route and `path`.
    fn blocked_distance(&mut self, path: &[CellId], dest: CellId) -> f64 {
        let end = *path.last().unwrap();
        for c in path {
            self.scratch[c.index()] = true;
        }
        let ok = |c: CellId| c == end || (!self.scratch[c.index()] && !self.on_route[c.index()]);
        let d = self.road.distances_to(dest, ok)[end.index()];
        for c in path {
            self.scratch[c.index()] = false;
        }
        d
    }

    /// Lower bound used to prune a partial path that starts at the current
    /// cell, covers `partial_km` and heads on to the window endpoint.
    pub fn prefix_may_work(&mut self, partial: &[CellId], partial_km: f64, window_rider: WindowRider) -> bool {
        let cfg = self.cfg;
        let at = *partial.last().unwrap();
        let to_end = self.sp(at, window_rider.dest);
        if !extra_distance_ok(0.0, partial_km, to_end, window_rider.shortest, &cfg) {
            return false;
        }
        for i in 0..self.riders.len() {
            let r = self.riders[i];
            // Riders dropped inside the partial path are settled by `feasible`.
            if r.done || r.shortest == 0.0 || partial[1..].contains(&r.dest) {
                continue;
            }
            let rest = self.sp(at, r.dest);
            if !extra_distance_ok(0.0, r.offset + self.route_km + partial_km, rest, r.shortest, &cfg) {
                return false;
            }
        }
        true
    }

    /// Appends `path[1..]` to the route.
    pub fn commit(&mut self, path: &[CellId]) {
        debug_assert_eq!(path.first(), Some(&self.current()));
        for pair in path.windows(2) {
            self.route_km += self.road.edge_length(pair[0], pair[1]).unwrap_or(f64::INFINITY);
            self.route.push(pair[1]);
            self.on_route[pair[1].index()] = true;
            for r in self.riders.iter_mut() {
                if r.dest == pair[1] {
                    r.done = true;
                }
            }
        }
    }

    pub fn goal_reached(&self, steps: usize) -> bool {
        match self.goal {
            TripGoal::Destination(d) => self.current() == d,
            TripGoal::Windows(n) => steps >= n as usize,
        }
    }

    pub fn record(&mut self, step: impl FnOnce() -> TraceStep) {
        if let Some(t) = self.trace.as_mut() {
            t.push(step());
        }
    }
}
