//! Replays held-out orders against recommended routes.
//!
//! Each trip asks a planner for a route, then drives it cell by cell. At
//! every cell the vehicle is offered the unserved test orders that start
//! there in the trip's day and slot, first come first served, and admits
//! those that keep everyone within the detour threshold and the capacity.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::demand::{slot_of, Forecast, RideOrder, Timestamp, SECONDS_PER_DAY};
use crate::detour::{try_admit, Admission, DetourConfig, RejectReason, VehicleState};
use crate::grid::{CellId, RoadGraph};
use crate::recommend::{recommend_route, Algorithm, PlannerInput, RoutePlan, TripGoal, DEFAULT_DETOUR, DEFAULT_K};
use crate::{Error, Result};

/// Default vehicle capacity in passengers.
pub const DEFAULT_CAPACITY: u32 = 4;

/// Source of wall-clock readings for query timing, in seconds.
pub trait Clock {
    fn now(&mut self) -> f64;
}

/// A clock that never advances, for `no_std` callers and reproducible output.
#[derive(Clone, Copy, Debug, Default)]
pub struct FrozenClock;

impl Clock for FrozenClock {
    fn now(&mut self) -> f64 {
        0.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TripRequest {
    pub start: CellId,
    pub dest: CellId,
    pub time: Timestamp,
}

#[derive(Clone, Debug, PartialEq)]
pub enum TripSpec {
    Fixed(Vec<TripRequest>),
    /// `count` trips with uniform start cells, destinations at least
    /// `min_hops` away and departure times drawn from the test orders.
    Random { count: usize, min_hops: u32 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub algo: Algorithm,
    pub k: u32,
    pub detour: DetourConfig,
    pub capacity: u32,
    pub slot_minutes: u32,
    pub seed: u64,
    pub trips: TripSpec,
}

impl SimConfig {
    pub fn new(algo: Algorithm, trips: TripSpec) -> Self {
        SimConfig {
            algo,
            k: DEFAULT_K,
            detour: DetourConfig { max_ratio: DEFAULT_DETOUR },
            capacity: DEFAULT_CAPACITY,
            slot_minutes: 15,
            seed: 0,
            trips,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SimMetrics {
    /// Mean occupied fraction of the seats over every traversed edge.
    pub vehicle_utilization: f64,
    /// Percentage of served orders that overlapped another served order in
    /// the same vehicle. Zero when nothing was served.
    pub pct_orders_shared: f64,
    /// False when no order was served and the share percentage is undefined.
    pub pct_shared_defined: bool,
    /// Mean passengers per traversed edge.
    pub passengers_per_grid: f64,
    pub orders_served: usize,
    pub orders_rejected: usize,
    pub orders_offered: usize,
    pub mean_query_seconds: f64,
    pub trips: usize,
    pub edges_traversed: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ServedOrder {
    pub order: RideOrder,
    /// Index of the pickup cell on the trip's route.
    pub pickup: usize,
    pub dropoff: usize,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TripLog {
    pub request: TripRequest,
    pub plan: RoutePlan,
    /// Passengers on each edge of the route.
    pub occupancy: Vec<u32>,
    pub served: Vec<ServedOrder>,
    pub rejected: Vec<(RideOrder, RejectReason)>,
    pub query_seconds: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimReport {
    pub metrics: SimMetrics,
    pub trips: Vec<TripLog>,
}

/// Share of intervals `[pickup, dropoff)` overlapping at least one other, in
/// percent. `None` for an empty set.
pub fn pct_orders_shared(spans: &[(usize, usize)]) -> Option<f64> {
    if spans.is_empty() {
        return None;
    }
    Some(100.0 * shared_count(spans) as f64 / spans.len() as f64)
}

fn shared_count(spans: &[(usize, usize)]) -> usize {
    spans
        .iter()
        .enumerate()
        .filter(|&(i, &(a, b))| spans.iter().enumerate().any(|(j, &(c, d))| i != j && a.max(c) < b.min(d)))
        .count()
}

/// Trips drawn from `seed`. Departure times are copied from random test orders
/// so every trip runs in a slot that has orders to offer.
pub fn random_trips(road: &RoadGraph, test_orders: &[RideOrder], count: usize, min_hops: u32, seed: u64) -> Result<Vec<TripRequest>> {
    if road.len() < 2 {
        return Err(Error::InvalidInput("trips need at least two cells".into()));
    }
    if test_orders.is_empty() {
        return Err(Error::EmptyTestSet);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let mut trips = Vec::with_capacity(count);
    for _ in 0..count {
        let time = test_orders[rng.gen_range(0..test_orders.len())].time;
        let start = CellId::from_index(rng.gen_range(0..road.len()));
        let hops = road.hop_distances(start);
        let far: Vec<CellId> = road
            .cell_ids()
            .filter(|c| *c != start && hops[c.index()] != u32::MAX && hops[c.index()] >= min_hops)
            .collect();
        let pool = if far.is_empty() {
            road.cell_ids().filter(|c| *c != start && hops[c.index()] != u32::MAX).collect()
        } else {
            far
        };
        if pool.is_empty() {
            return Err(Error::InvalidInput(alloc::format!("cell {start} reaches no other cell")));
        }
        let dest = pool[rng.gen_range(0..pool.len())];
        trips.push(TripRequest { start, dest, time });
    }
    Ok(trips)
}

pub fn run_simulation<C: Clock + ?Sized>(
    cfg: &SimConfig,
    road: &RoadGraph,
    demand: &dyn Forecast,
    test_orders: &[RideOrder],
    clock: &mut C,
) -> Result<SimReport> {
    if test_orders.is_empty() {
        return Err(Error::EmptyTestSet);
    }
    if cfg.capacity == 0 {
        return Err(Error::InvalidParameter("vehicle capacity must be >= 1".into()));
    }
    DetourConfig::new(cfg.detour.max_ratio)?;
    crate::demand::check_slot_minutes(cfg.slot_minutes)?;
    let trips = match &cfg.trips {
        TripSpec::Fixed(t) => t.clone(),
        TripSpec::Random { count, min_hops } => random_trips(road, test_orders, *count, *min_hops, cfg.seed)?,
    };

    let slot_key = |t: Timestamp| (t.div_euclid(SECONDS_PER_DAY), slot_of(t, cfg.slot_minutes));
    // Unserved order indices by (day, slot, origin), in arrival order.
    let mut pool: BTreeMap<(i64, u32, CellId), Vec<usize>> = BTreeMap::new();
    let mut by_time: Vec<usize> = (0..test_orders.len()).collect();
    by_time.sort_by_key(|&i| (test_orders[i].time, i));
    for i in by_time {
        let o = &test_orders[i];
        road.check(o.origin)?;
        road.check(o.dest)?;
        if o.origin == o.dest {
            continue;
        }
        let (day, slot) = slot_key(o.time);
        pool.entry((day, slot, o.origin)).or_default().push(i);
    }

    let mut logs = Vec::with_capacity(trips.len());
    let mut seat_sum = 0u64;
    let mut edges = 0usize;
    let mut spans_served = 0usize;
    let mut spans_shared = 0usize;
    let mut offered = 0usize;
    let mut query_total = 0.0;
    for trip in trips {
        let (day, slot) = slot_key(trip.time);
        let input = PlannerInput::new(road, demand, trip.start, TripGoal::Destination(trip.dest))
            .with_k(cfg.k)
            .with_detour(cfg.detour)
            .with_slot(slot);
        let t0 = clock.now();
        let plan = recommend_route(cfg.algo, &input)?;
        let query_seconds = clock.now() - t0;
        query_total += query_seconds;

        let route = plan.path.clone();
        let mut state = VehicleState::new(trip.start, cfg.capacity)?;
        let mut occupancy = Vec::with_capacity(route.len().saturating_sub(1));
        let mut served: Vec<ServedOrder> = Vec::new();
        let mut rejected = Vec::new();
        for (idx, &cell) in route.iter().enumerate() {
            if idx > 0 {
                for done in state.advance(road, cell)? {
                    let s = served
                        .iter_mut()
                        .find(|s| s.order == done.order && s.dropoff == usize::MAX)
                        .expect("dropped order was admitted");
                    s.dropoff = idx;
                    let (_, shortest) = road.shortest_path(s.order.origin, s.order.dest)?;
                    s.ratio = done.traveled_km / shortest;
                }
            }
            if idx + 1 < route.len() {
                if let Some(waiting) = pool.get_mut(&(day, slot, cell)) {
                    let mut keep = Vec::with_capacity(waiting.len());
                    for &i in waiting.iter() {
                        let order = test_orders[i];
                        offered += 1;
                        match try_admit(road, &mut state, order, &route, &cfg.detour)? {
                            Admission::Accepted => {
                                served.push(ServedOrder { order, pickup: idx, dropoff: usize::MAX, ratio: f64::NAN })
                            }
                            Admission::Rejected(reason) => {
                                rejected.push((order, reason));
                                keep.push(i);
                            }
                        }
                    }
                    *waiting = keep;
                }
                occupancy.push(state.load());
            }
        }
        debug_assert!(state.onboard.is_empty());
        seat_sum += occupancy.iter().map(|&o| o as u64).sum::<u64>();
        edges += occupancy.len();
        let spans: Vec<(usize, usize)> = served.iter().map(|s| (s.pickup, s.dropoff)).collect();
        spans_served += spans.len();
        spans_shared += shared_count(&spans);
        logs.push(TripLog { request: trip, plan, occupancy, served, rejected, query_seconds });
    }

    let trips = logs.len();
    let served: usize = logs.iter().map(|l| l.served.len()).sum();
    let rejected: usize = logs.iter().map(|l| l.rejected.len()).sum();
    let vu = if edges == 0 { 0.0 } else { seat_sum as f64 / (edges as f64 * cfg.capacity as f64) };
    let metrics = SimMetrics {
        vehicle_utilization: vu,
        pct_orders_shared: if spans_served == 0 { 0.0 } else { 100.0 * spans_shared as f64 / spans_served as f64 },
        pct_shared_defined: spans_served > 0,
        passengers_per_grid: if edges == 0 { 0.0 } else { seat_sum as f64 / edges as f64 },
        orders_served: served,
        orders_rejected: rejected,
        orders_offered: offered,
        mean_query_seconds: if trips == 0 { 0.0 } else { query_total / trips as f64 },
        trips,
        edges_traversed: edges,
    };
    Ok(SimReport { metrics, trips: logs })
}

/// One simulation per configuration, in order.
pub fn sweep<C: Clock + ?Sized>(
    configs: &[SimConfig],
    road: &RoadGraph,
    demand: &dyn Forecast,
    test_orders: &[RideOrder],
    clock: &mut C,
) -> Result<Vec<SimMetrics>> {
    configs.iter().map(|c| run_simulation(c, road, demand, test_orders, clock).map(|r| r.metrics)).collect()
}

/// Every (algorithm, k, detour) combination of `base`.
pub fn grid_configs(base: &SimConfig, algos: &[Algorithm], ks: &[u32], detours: &[f64]) -> Result<Vec<SimConfig>> {
    let mut out = Vec::with_capacity(algos.len() * ks.len() * detours.len());
    for &algo in algos {
        for &k in ks {
            for &d in detours {
                out.push(SimConfig { algo, k, detour: DetourConfig::new(d)?, ..base.clone() });
            }
        }
    }
    Ok(out)
}
