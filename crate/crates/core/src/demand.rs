//! Origin-destination request demand: trip records, ride orders, the per-slot
//! expected request model and the path objective built on it.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use crate::grid::{CellId, LatLon, RoadGraph};
use crate::{Error, Result};

/// Seconds since the Unix epoch, UTC.
pub type Timestamp = i64;

pub const SECONDS_PER_DAY: i64 = 86_400;

/// One historical trip as found in the input data.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TripRecord {
    pub pickup_time: Timestamp,
    pub pickup: LatLon,
    pub dropoff: LatLon,
    pub passenger_count: u32,
}

impl TripRecord {
    pub fn is_valid(&self) -> bool {
        self.pickup.is_valid() && self.dropoff.is_valid() && self.passenger_count >= 1
    }
}

/// A trip request between two cells.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RideOrder {
    pub origin: CellId,
    pub dest: CellId,
    pub time: Timestamp,
    pub passengers: u32,
}

impl RideOrder {
    pub fn new(origin: CellId, dest: CellId, time: Timestamp) -> Self {
        RideOrder { origin, dest, time, passengers: 1 }
    }
}

/// Expected request counts between ordered cell pairs for a time slot.
///
/// Any predictor can back the planners by implementing this trait; the crate
/// ships the historical mean in [`OdDemandModel`].
pub trait Forecast {
    /// Expected requests from `origin` to `dest` during `slot`. Never negative.
    fn expected_requests(&self, slot: u32, origin: CellId, dest: CellId) -> f64;

    /// Total expected requests originating at `origin` during `slot`.
    fn node_demand(&self, slot: u32, origin: CellId) -> f64;
}

/// Mean number of requests per day for each (slot-of-day, origin, destination).
/// Absent entries are zero.
#[derive(Clone, Debug, PartialEq)]
pub struct OdDemandModel {
    cells: usize,
    slot_minutes: u32,
    weights: BTreeMap<(u32, CellId, CellId), f64>,
    origin_totals: BTreeMap<(u32, CellId), f64>,
}

impl OdDemandModel {
    pub fn new(cells: usize, slot_minutes: u32) -> Result<Self> {
        check_slot_minutes(slot_minutes)?;
        Ok(OdDemandModel { cells, slot_minutes, weights: BTreeMap::new(), origin_totals: BTreeMap::new() })
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn slot_minutes(&self) -> u32 {
        self.slot_minutes
    }

    pub fn slots_per_day(&self) -> u32 {
        1440 / self.slot_minutes
    }

    /// Slot-of-day index of a timestamp.
    pub fn slot_of(&self, t: Timestamp) -> u32 {
        slot_of(t, self.slot_minutes)
    }

    /// Sets one weight; a zero weight removes the entry.
    pub fn set(&mut self, slot: u32, origin: CellId, dest: CellId, weight: f64) -> Result<()> {
        if slot >= self.slots_per_day() {
            return Err(Error::InvalidParameter(format!(
                "slot {slot} outside 0..{}",
                self.slots_per_day()
            )));
        }
        for c in [origin, dest] {
            if c.0 == 0 || c.index() >= self.cells {
                return Err(Error::UnknownCell(c));
            }
        }
        if !(weight.is_finite() && weight >= 0.0) {
            return Err(Error::InvalidInput(format!("weight must be finite and >= 0, got {weight}")));
        }
        if weight == 0.0 {
            self.weights.remove(&(slot, origin, dest));
        } else {
            self.weights.insert((slot, origin, dest), weight);
        }
        let total: f64 = self
            .weights
            .range((slot, origin, CellId(0))..=(slot, origin, CellId(u32::MAX)))
            .map(|(_, w)| w)
            .sum();
        if total > 0.0 {
            self.origin_totals.insert((slot, origin), total);
        } else {
            self.origin_totals.remove(&(slot, origin));
        }
        Ok(())
    }

    /// Non-zero entries sorted by (slot, origin, dest).
    pub fn entries(&self) -> impl Iterator<Item = (u32, CellId, CellId, f64)> + '_ {
        self.weights.iter().map(|(&(s, o, d), &w)| (s, o, d, w))
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Builds the model from historical records.
    ///
    /// Records are sorted by pickup time and the first `train_fraction` of them
    /// train the model; the rest come back as test orders. Each weight is the
    /// number of training orders for that pair and slot-of-day divided by the
    /// number of calendar days the training period spans. Records outside the
    /// grid and records whose pickup and dropoff share a cell are dropped from
    /// both sides.
    pub fn build(
        records: &[TripRecord],
        road: &RoadGraph,
        slot_minutes: u32,
        train_fraction: f64,
    ) -> Result<DemandBuild> {
        check_slot_minutes(slot_minutes)?;
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(Error::InvalidParameter(format!("train fraction must be in (0, 1), got {train_fraction}")));
        }
        if records.is_empty() {
            return Err(Error::EmptyModel);
        }
        let mut sorted: Vec<&TripRecord> = records.iter().collect();
        sorted.sort_by_key(|r| r.pickup_time);
        let n_train = libm::floor(sorted.len() as f64 * train_fraction) as usize;
        let (train, test) = sorted.split_at(n_train);

        let mut out = DemandBuild {
            model: OdDemandModel::new(road.len(), slot_minutes)?,
            test_orders: Vec::new(),
            train_orders: 0,
            train_days: 0,
            train_end: train.last().map(|r| r.pickup_time),
            out_of_bounds: 0,
            same_cell: 0,
        };
        let to_order = |r: &TripRecord, out: &mut DemandBuild| -> Option<RideOrder> {
            let (Some(origin), Some(dest)) = (road.assign_cell(r.pickup), road.assign_cell(r.dropoff)) else {
                out.out_of_bounds += 1;
                return None;
            };
            if origin == dest {
                out.same_cell += 1;
                return None;
            }
            Some(RideOrder { origin, dest, time: r.pickup_time, passengers: r.passenger_count })
        };

        if let (Some(first), Some(last)) = (train.first(), train.last()) {
            let days = last.pickup_time.div_euclid(SECONDS_PER_DAY) - first.pickup_time.div_euclid(SECONDS_PER_DAY) + 1;
            out.train_days = days as u32;
        }
        let mut counts: BTreeMap<(u32, CellId, CellId), u64> = BTreeMap::new();
        for r in train {
            if let Some(o) = to_order(r, &mut out) {
                *counts.entry((slot_of(o.time, slot_minutes), o.origin, o.dest)).or_insert(0) += 1;
                out.train_orders += 1;
            }
        }
        for ((slot, origin, dest), count) in counts {
            out.model.set(slot, origin, dest, count as f64 / out.train_days as f64)?;
        }
        for r in test {
            if let Some(o) = to_order(r, &mut out) {
                out.test_orders.push(o);
            }
        }
        Ok(out)
    }
}

impl Forecast for OdDemandModel {
    fn expected_requests(&self, slot: u32, origin: CellId, dest: CellId) -> f64 {
        self.weights.get(&(slot, origin, dest)).copied().unwrap_or(0.0)
    }

    fn node_demand(&self, slot: u32, origin: CellId) -> f64 {
        self.origin_totals.get(&(slot, origin)).copied().unwrap_or(0.0)
    }
}

/// Output of [`OdDemandModel::build`].
#[derive(Clone, Debug)]
pub struct DemandBuild {
    pub model: OdDemandModel,
    /// Held-out orders in chronological order.
    pub test_orders: Vec<RideOrder>,
    pub train_orders: usize,
    pub train_days: u32,
    /// Pickup time of the last training record.
    pub train_end: Option<Timestamp>,
    pub out_of_bounds: usize,
    pub same_cell: usize,
}

pub fn slot_of(t: Timestamp, slot_minutes: u32) -> u32 {
    (t.rem_euclid(SECONDS_PER_DAY) / 60 / slot_minutes as i64) as u32
}

pub(crate) fn check_slot_minutes(slot_minutes: u32) -> Result<()> {
    if slot_minutes == 0 || 1440 % slot_minutes != 0 {
        return Err(Error::InvalidParameter(format!("slot length must divide 1440 minutes, got {slot_minutes}")));
    }
    Ok(())
}

/// Expected requests served by a route: for every cell, the requests it sends
/// to each cell that comes after it on the path.
pub fn path_expected_requests<F: Forecast + ?Sized>(model: &F, path: &[CellId], slot: u32) -> f64 {
    let mut total = 0.0;
    for (a, &from) in path.iter().enumerate() {
        for &to in &path[a + 1..] {
            total += model.expected_requests(slot, from, to);
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::BBox;
    use alloc::vec;

    fn model_with(entries: &[(u32, u32, u32, f64)], cells: usize) -> OdDemandModel {
        let mut m = OdDemandModel::new(cells, 15).unwrap();
        for &(s, o, d, w) in entries {
            m.set(s, CellId(o), CellId(d), w).unwrap();
        }
        m
    }

    #[test]
    fn figure3_path_objective_is_four() {
        let m = crate::synthetic::figure3_model();
        assert_eq!(m.expected_requests(0, CellId(1), CellId(2)), 3.0);
        let p = [CellId(1), CellId(2), CellId(21)];
        assert_eq!(path_expected_requests(&m, &p, 0), 4.0);
    }

    #[test]
    fn degenerate_paths_and_models() {
        let m = model_with(&[(0, 1, 2, 3.0)], 4);
        assert_eq!(path_expected_requests(&m, &[CellId(1)], 0), 0.0);
        let zero = OdDemandModel::new(4, 15).unwrap();
        assert_eq!(path_expected_requests(&zero, &[CellId(1), CellId(2), CellId(3)], 0), 0.0);
        assert_eq!(zero.node_demand(0, CellId(1)), 0.0);
    }

    #[test]
    fn weights_are_directional() {
        let m = model_with(&[(2, 3, 4, 5.0)], 5);
        assert_eq!(m.expected_requests(2, CellId(3), CellId(4)), 5.0);
        assert_eq!(m.expected_requests(2, CellId(4), CellId(3)), 0.0);
        assert_eq!(m.expected_requests(1, CellId(3), CellId(4)), 0.0);
    }

    #[test]
    fn node_demand_tracks_updates() {
        let mut m = model_with(&[(0, 5, 2, 1.0), (0, 5, 3, 1.0), (0, 6, 3, 1.0)], 7);
        assert_eq!(m.node_demand(0, CellId(5)), 2.0);
        m.set(0, CellId(5), CellId(2), 0.0).unwrap();
        assert_eq!(m.node_demand(0, CellId(5)), 1.0);
        m.set(0, CellId(5), CellId(3), 4.5).unwrap();
        assert_eq!(m.node_demand(0, CellId(5)), 4.5);
        m.set(0, CellId(5), CellId(3), 0.0).unwrap();
        assert_eq!(m.node_demand(0, CellId(5)), 0.0);
    }

    #[test]
    fn set_rejects_bad_weights_and_cells() {
        let mut m = OdDemandModel::new(3, 15).unwrap();
        assert!(m.set(0, CellId(1), CellId(2), -1.0).is_err());
        assert!(m.set(0, CellId(1), CellId(4), 1.0).is_err());
        assert!(m.set(96, CellId(1), CellId(2), 1.0).is_err());
        assert!(OdDemandModel::new(3, 7).is_err());
    }

    fn grid() -> RoadGraph {
        RoadGraph::synthetic(3, 3, 1.0).unwrap()
    }

    fn record(road: &RoadGraph, t: Timestamp, from: u32, to: u32) -> TripRecord {
        TripRecord {
            pickup_time: t,
            pickup: road.cell(CellId(from)).unwrap().center,
            dropoff: road.cell(CellId(to)).unwrap().center,
            passenger_count: 1,
        }
    }

    #[test]
    fn single_day_mean_equals_count() {
        let road = grid();
        let slot3 = 3 * 15 * 60;
        let records = vec![
            record(&road, slot3 + 10, 1, 2),
            record(&road, slot3 + 20, 1, 2),
            record(&road, slot3 + 30, 4, 5),
            record(&road, slot3 + 40, 4, 5),
        ];
        let build = OdDemandModel::build(&records, &road, 15, 0.5).unwrap();
        assert_eq!(build.train_days, 1);
        assert_eq!(build.model.expected_requests(3, CellId(1), CellId(2)), 2.0);
        assert_eq!(build.model.expected_requests(3, CellId(4), CellId(5)), 0.0);
        assert_eq!(build.test_orders.len(), 2);
        assert!(build.test_orders.iter().all(|o| o.origin == CellId(4)));
    }

    #[test]
    fn two_day_mean() {
        let road = grid();
        let slot5 = 5 * 15 * 60;
        let mut records = vec![];
        for i in 0..4 {
            records.push(record(&road, slot5 + i, 1, 9));
        }
        // Day two: no 1 -> 9 trips, one unrelated trip.
        records.push(record(&road, SECONDS_PER_DAY + slot5, 2, 3));
        // Test tail.
        records.push(record(&road, 3 * SECONDS_PER_DAY, 2, 3));
        let build = OdDemandModel::build(&records, &road, 15, 0.9).unwrap();
        assert_eq!(build.train_days, 2);
        assert_eq!(build.model.expected_requests(5, CellId(1), CellId(9)), 2.0);
        assert_eq!(build.model.expected_requests(5, CellId(7), CellId(8)), 0.0);
    }

    #[test]
    fn build_drops_same_cell_and_out_of_bounds() {
        let road = RoadGraph::build_grid(BBox::new(0.0, 0.0, 0.1, 0.1).unwrap(), 2.5).unwrap();
        let c = road.cell(CellId(1)).unwrap().center;
        let outside = LatLon::new(5.0, 5.0);
        let records = vec![
            TripRecord { pickup_time: 0, pickup: c, dropoff: c, passenger_count: 1 },
            TripRecord { pickup_time: 1, pickup: c, dropoff: outside, passenger_count: 1 },
            TripRecord { pickup_time: 2, pickup: c, dropoff: road.cell(CellId(2)).unwrap().center, passenger_count: 1 },
            TripRecord { pickup_time: 3, pickup: c, dropoff: c, passenger_count: 1 },
        ];
        let build = OdDemandModel::build(&records, &road, 15, 0.75).unwrap();
        assert_eq!(build.same_cell, 2);
        assert_eq!(build.out_of_bounds, 1);
        assert_eq!(build.train_orders, 1);
        assert!(build.test_orders.is_empty());
    }

    #[test]
    fn build_errors() {
        let road = grid();
        assert_eq!(OdDemandModel::build(&[], &road, 15, 0.75).unwrap_err(), Error::EmptyModel);
        let r = [record(&road, 0, 1, 2)];
        assert!(matches!(OdDemandModel::build(&r, &road, 15, 1.0), Err(Error::InvalidParameter(_))));
        assert!(matches!(OdDemandModel::build(&r, &road, 13, 0.5), Err(Error::InvalidParameter(_))));
    }
}
