//! Small reference networks and seeded order generators for desk-scale runs.

use alloc::format;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::demand::{slot_of, OdDemandModel, RideOrder, Timestamp, SECONDS_PER_DAY};
use crate::grid::{CellId, RoadGraph};
use crate::{Error, Result};

/// 2019-02-01T00:00:00Z, the first day of generated order streams.
pub const SYNTHETIC_EPOCH: Timestamp = 1_548_979_200;

/// Eight cells: the direct route g1-g2-g3-g4 is 6 long, the detour
/// g1-g5-g6-g4 is 8 and the loop g6-g7-g8-g4 is 6 against a direct g6-g4 of 3.
pub fn example1_road() -> RoadGraph {
    RoadGraph::from_edges(
        8,
        &[
            (1, 2, 2.0),
            (2, 3, 2.0),
            (3, 4, 2.0),
            (1, 5, 2.0),
            (5, 6, 3.0),
            (6, 4, 3.0),
            (6, 7, 2.0),
            (7, 8, 2.0),
            (8, 4, 2.0),
        ],
    )
    .expect("static fixture")
}

/// Request weights on a 19x19 grid: w(g1, g2) = 3, w(g2, g21) = 1, slot 0.
pub fn figure3_model() -> OdDemandModel {
    let mut m = OdDemandModel::new(361, 15).expect("static fixture");
    m.set(0, CellId(1), CellId(2), 3.0).expect("static fixture");
    m.set(0, CellId(2), CellId(21), 1.0).expect("static fixture");
    m
}

/// Seven cells with two equally long routes from g1 to g4: g1-g2-g3-g4 and
/// g1-g5-g6-g4, plus g7 hanging off g6. All edges are 1 km.
pub fn figure5_road() -> RoadGraph {
    RoadGraph::from_edges(
        7,
        &[(1, 2, 1.0), (2, 3, 1.0), (3, 4, 1.0), (1, 5, 1.0), (5, 6, 1.0), (6, 4, 1.0), (6, 7, 1.0)],
    )
    .expect("static fixture")
}

/// Requests of the figure-5 scenario. Cells g5 and g6 originate the most
/// requests but none of them heads to g4; g1, g2 and g3 originate fewer but
/// all of theirs stay on the g1-g2-g3-g4 route.
pub const FIGURE5_REQUESTS: [(u32, u32); 7] = [(1, 2), (2, 4), (3, 4), (5, 2), (5, 3), (6, 3), (6, 7)];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pattern {
    Uniform,
    Clustered,
    Figure5,
}

impl FromStr for Pattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "uniform" => Ok(Pattern::Uniform),
            "clustered" => Ok(Pattern::Clustered),
            "figure5" | "fig5" => Ok(Pattern::Figure5),
            other => Err(Error::InvalidParameter(format!("unknown pattern '{other}'"))),
        }
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pattern::Uniform => "uniform",
            Pattern::Clustered => "clustered",
            Pattern::Figure5 => "figure5",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SyntheticSpec {
    pub pattern: Pattern,
    pub seed: u64,
    pub orders_per_day: usize,
    pub train_days: u32,
    pub slot_minutes: u32,
    /// Slot-of-day every generated order falls in.
    pub slot: u32,
}

impl SyntheticSpec {
    pub fn new(pattern: Pattern, seed: u64) -> Self {
        SyntheticSpec { pattern, seed, orders_per_day: 200, train_days: 3, slot_minutes: 15, slot: 32 }
    }
}

/// Training history, the model built from it and one held-out day of orders.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub model: OdDemandModel,
    pub train_orders: Vec<RideOrder>,
    pub test_orders: Vec<RideOrder>,
    pub slot: u32,
    /// Start of the held-out day's slot; every test order is at or after it.
    pub test_start: Timestamp,
}

/// Deterministic in `spec.seed`. The figure-5 pattern needs [`figure5_road`].
pub fn generate_synthetic_orders(road: &RoadGraph, spec: &SyntheticSpec) -> Result<Scenario> {
    if road.len() < 2 {
        return Err(Error::InvalidInput("synthetic orders need at least two cells".into()));
    }
    if spec.train_days == 0 {
        return Err(Error::InvalidParameter("synthetic scenario needs at least one training day".into()));
    }
    let mut model = OdDemandModel::new(road.len(), spec.slot_minutes)?;
    if spec.slot >= model.slots_per_day() {
        return Err(Error::InvalidParameter(format!("slot {} outside the day", spec.slot)));
    }
    let slot_start = spec.slot as i64 * spec.slot_minutes as i64 * 60;
    let slot_len = spec.slot_minutes as i64 * 60;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let hotspots = match spec.pattern {
        Pattern::Clustered => {
            let mut ids: Vec<CellId> = road.cell_ids().collect();
            ids.shuffle(&mut rng);
            ids.truncate(4.min(ids.len()));
            ids
        }
        _ => Vec::new(),
    };

    let day_orders = |day: u32, rng: &mut ChaCha8Rng| -> Result<Vec<RideOrder>> {
        let base = SYNTHETIC_EPOCH + day as i64 * SECONDS_PER_DAY + slot_start;
        let pairs: Vec<(CellId, CellId)> = match spec.pattern {
            Pattern::Figure5 => {
                if road.len() != 7 {
                    return Err(Error::InvalidInput("the figure5 pattern runs on the 7-cell figure-5 network".into()));
                }
                FIGURE5_REQUESTS.iter().map(|&(o, d)| (CellId(o), CellId(d))).collect()
            }
            Pattern::Uniform => (0..spec.orders_per_day).map(|_| uniform_pair(road, rng)).collect(),
            Pattern::Clustered => (0..spec.orders_per_day).map(|_| clustered_pair(road, &hotspots, rng)).collect(),
        };
        let mut orders: Vec<RideOrder> = pairs
            .into_iter()
            .enumerate()
            .map(|(i, (o, d))| {
                let offset = match spec.pattern {
                    Pattern::Figure5 => i as i64,
                    _ => rng.gen_range(0..slot_len),
                };
                RideOrder::new(o, d, base + offset)
            })
            .collect();
        orders.sort_by_key(|o| o.time);
        Ok(orders)
    };

    let mut train_orders = Vec::new();
    for day in 0..spec.train_days {
        train_orders.extend(day_orders(day, &mut rng)?);
    }
    let test_orders = day_orders(spec.train_days, &mut rng)?;

    let mut counts = alloc::collections::BTreeMap::<(CellId, CellId), u32>::new();
    for o in &train_orders {
        *counts.entry((o.origin, o.dest)).or_insert(0) += 1;
    }
    for ((o, d), c) in counts {
        model.set(spec.slot, o, d, c as f64 / spec.train_days as f64)?;
    }
    debug_assert!(test_orders.iter().all(|o| slot_of(o.time, spec.slot_minutes) == spec.slot));
    Ok(Scenario {
        model,
        train_orders,
        test_orders,
        slot: spec.slot,
        test_start: SYNTHETIC_EPOCH + spec.train_days as i64 * SECONDS_PER_DAY + slot_start,
    })
}

fn uniform_pair(road: &RoadGraph, rng: &mut ChaCha8Rng) -> (CellId, CellId) {
    let n = road.len();
    let o = rng.gen_range(0..n);
    let mut d = rng.gen_range(0..n - 1);
    if d >= o {
        d += 1;
    }
    (CellId::from_index(o), CellId::from_index(d))
}

/// Four in five orders run from the neighborhood of one hotspot to the
/// neighborhood of the next; the rest are uniform noise.
fn clustered_pair(road: &RoadGraph, hotspots: &[CellId], rng: &mut ChaCha8Rng) -> (CellId, CellId) {
    if hotspots.len() < 2 || rng.gen_bool(0.2) {
        return uniform_pair(road, rng);
    }
    let i = rng.gen_range(0..hotspots.len());
    let j = (i + 1) % hotspots.len();
    let near = |h: CellId, rng: &mut ChaCha8Rng| -> CellId {
        let mut cells = road.neighbors(h).unwrap_or_default();
        cells.push(h);
        cells.sort_unstable();
        *cells.choose(rng).unwrap()
    };
    loop {
        let (o, d) = (near(hotspots[i], rng), near(hotspots[j], rng));
        if o != d {
            return (o, d);
        }
    }
}

/// Random sparse OD weights in slot 0: each ordered pair gets a weight in
/// `1..=max_weight` with probability `density`.
pub fn random_model(road: &RoadGraph, density: f64, max_weight: u32, seed: u64) -> Result<OdDemandModel> {
    if !(0.0..=1.0).contains(&density) || max_weight == 0 {
        return Err(Error::InvalidParameter(format!("bad density {density} or max weight {max_weight}")));
    }
    let mut model = OdDemandModel::new(road.len(), 15)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for o in road.cell_ids() {
        for d in road.cell_ids() {
            if o != d && rng.gen_bool(density) {
                model.set(0, o, d, rng.gen_range(1..=max_weight) as f64)?;
            }
        }
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demand::Forecast;

    #[test]
    fn figure5_requests_and_node_demand() {
        let road = figure5_road();
        let s = generate_synthetic_orders(&road, &SyntheticSpec::new(Pattern::Figure5, 1)).unwrap();
        assert_eq!(s.test_orders.len(), 7);
        // Nothing from g5 or g6 heads to g4; g2 and g3 do.
        for o in &s.test_orders {
            if o.origin == CellId(5) || o.origin == CellId(6) {
                assert_ne!(o.dest, CellId(4));
            }
        }
        assert!(s.test_orders.iter().any(|o| o.origin == CellId(2) && o.dest == CellId(4)));
        assert!(s.test_orders.iter().any(|o| o.origin == CellId(3) && o.dest == CellId(4)));
        // Hand-summed origin totals.
        let demand: Vec<f64> = (1..=7).map(|i| s.model.node_demand(s.slot, CellId(i))).collect();
        assert_eq!(demand, [1.0, 1.0, 1.0, 0.0, 2.0, 2.0, 0.0]);
        for i in 1..=7 {
            for j in 1..=7 {
                assert!(s.model.node_demand(s.slot, CellId(i)) >= s.model.expected_requests(s.slot, CellId(i), CellId(j)));
            }
        }
    }

    #[test]
    fn figure5_needs_its_network() {
        let road = RoadGraph::synthetic(3, 3, 1.0).unwrap();
        assert!(generate_synthetic_orders(&road, &SyntheticSpec::new(Pattern::Figure5, 1)).is_err());
    }

    #[test]
    fn same_seed_same_stream() {
        let road = RoadGraph::synthetic(6, 6, 1.0).unwrap();
        for pattern in [Pattern::Uniform, Pattern::Clustered] {
            let a = generate_synthetic_orders(&road, &SyntheticSpec::new(pattern, 7)).unwrap();
            let b = generate_synthetic_orders(&road, &SyntheticSpec::new(pattern, 7)).unwrap();
            let c = generate_synthetic_orders(&road, &SyntheticSpec::new(pattern, 8)).unwrap();
            assert_eq!(a.test_orders, b.test_orders);
            assert_eq!(a.model, b.model);
            assert_ne!(a.test_orders, c.test_orders);
        }
    }

    #[test]
    fn uniform_counts_match_expectation() {
        let road = RoadGraph::synthetic(4, 4, 1.0).unwrap();
        let mut spec = SyntheticSpec::new(Pattern::Uniform, 3);
        spec.orders_per_day = 24_000;
        spec.train_days = 1;
        let s = generate_synthetic_orders(&road, &spec).unwrap();
        let n = road.len();
        let total = s.train_orders.len() as f64;
        let mut counts = alloc::vec![0f64; n * n];
        for o in &s.train_orders {
            assert_ne!(o.origin, o.dest);
            counts[o.origin.index() * n + o.dest.index()] += 1.0;
        }
        let p = 1.0 / (n * (n - 1)) as f64;
        let expected = total * p;
        let sigma = libm::sqrt(total * p * (1.0 - p));
        let mut chi2 = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let c = counts[i * n + j];
                // 4.5 sigma keeps the per-pair check free of chance failures over 240 pairs.
                assert!((c - expected).abs() < 4.5 * sigma, "pair {i}->{j}: {c} vs {expected}");
                chi2 += (c - expected) * (c - expected) / expected;
            }
        }
        // 239 degrees of freedom: mean 239, sd ~21.9.
        let dof = (n * (n - 1) - 1) as f64;
        assert!((chi2 - dof).abs() < 5.0 * libm::sqrt(2.0 * dof), "chi2 {chi2}");
    }

    #[test]
    fn clustered_orders_concentrate() {
        let road = RoadGraph::synthetic(10, 10, 1.0).unwrap();
        let s = generate_synthetic_orders(&road, &SyntheticSpec::new(Pattern::Clustered, 11)).unwrap();
        let top = s.model.entries().map(|(_, _, _, w)| w).fold(0.0, f64::max);
        let mean = s.train_orders.len() as f64 / 3.0 / (100.0 * 99.0);
        assert!(top > 10.0 * mean);
        assert!(s.test_orders.iter().all(|o| o.time >= s.test_start));
        assert!(s.train_orders.iter().all(|o| o.time < s.test_start));
    }
}
