use proptest::prelude::*;
use windroute_core::demand::path_expected_requests;
use windroute_core::recommend::{brute_force_window_path, recommend_route, simple_greedy, EndpointChoice};
use windroute_core::sim::{run_simulation, FrozenClock, TripSpec};
use windroute_core::synthetic::{generate_synthetic_orders, random_model, Pattern, SyntheticSpec};
use windroute_core::{Algorithm, CellId, DetourConfig, OdDemandModel, PlannerInput, RoadGraph, SimConfig, TripGoal};

#[derive(Debug, Clone)]
struct Case {
    rows: u32,
    cols: u32,
    seed: u64,
    density: f64,
    start: usize,
    dest: usize,
    k: u32,
    alpha: f64,
}

fn case(max_side: u32, max_k: u32) -> impl Strategy<Value = Case> {
    (1..=max_side, 2..=max_side, any::<u64>(), 0.0f64..0.5, any::<usize>(), any::<usize>(), 1..=max_k, 1.0f64..2.0)
        .prop_map(|(rows, cols, seed, density, start, dest, k, alpha)| Case { rows, cols, seed, density, start, dest, k, alpha })
}

impl Case {
    fn road(&self) -> RoadGraph {
        RoadGraph::synthetic(self.rows, self.cols, 1.0).unwrap()
    }

    fn model(&self, road: &RoadGraph) -> OdDemandModel {
        random_model(road, self.density, 5, self.seed).unwrap()
    }

    fn cells(&self, road: &RoadGraph) -> (CellId, CellId) {
        (CellId::from_index(self.start % road.len()), CellId::from_index(self.dest % road.len()))
    }
}

/// Hop count at which a window around `c` covers the whole grid.
fn covering_k(road: &RoadGraph, c: CellId) -> u32 {
    road.hop_distances(c).into_iter().max().unwrap().max(1)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn plans_are_valid_feasible_and_repeatable(c in case(6, 3)) {
        let road = c.road();
        let model = c.model(&road);
        let (s, d) = c.cells(&road);
        let input = PlannerInput::new(&road, &model, s, TripGoal::Destination(d))
            .with_k(c.k.min(2))
            .with_detour(DetourConfig::new(c.alpha).unwrap());
        let sp = road.shortest_path(s, d).unwrap().1;
        for algo in Algorithm::ALL {
            let plan = recommend_route(algo, &input).unwrap();
            road.validate_path(&plan.path).unwrap();
            prop_assert_eq!(plan.path.first(), Some(&s));
            prop_assert_eq!(plan.path.last(), Some(&d));
            prop_assert_eq!(plan.objective, path_expected_requests(&model, &plan.path, 0));
            if s != d {
                prop_assert!(input.detour.allows(road.path_length(&plan.path).unwrap() / sp), "{}", algo);
            }
            prop_assert_eq!(recommend_route(algo, &input).unwrap(), plan);
        }
    }

    #[test]
    fn single_window_oracle_dominates(c in case(5, 1)) {
        let road = c.road();
        let model = c.model(&road);
        let (s, d) = c.cells(&road);
        prop_assume!(s != d);
        let k = covering_k(&road, s);
        let window = road.khop_window(s, k).unwrap();
        prop_assert_eq!(window.len(), road.len());
        let input = PlannerInput::new(&road, &model, s, TripGoal::Destination(d))
            .with_k(k)
            .with_detour(DetourConfig::new(c.alpha).unwrap());
        let best = brute_force_window_path(&input, &window, d).unwrap();
        for algo in Algorithm::ALL {
            let plan = recommend_route(algo, &input).unwrap();
            prop_assert!(plan.objective <= best.objective, "{}: {} > {}", algo, plan.objective, best.objective);
        }
    }

    #[test]
    fn wider_window_never_lowers_the_oracle(c in case(7, 1)) {
        let road = c.road();
        let model = c.model(&road);
        let (s, _) = c.cells(&road);
        let input = PlannerInput::new(&road, &model, s, TripGoal::Windows(1))
            .with_detour(DetourConfig::new(c.alpha).unwrap());
        let w1 = road.khop_window(s, 1).unwrap();
        let w2 = road.khop_window(s, 2).unwrap();
        for &e in w1.members().iter().filter(|&&m| m != s) {
            let narrow = brute_force_window_path(&input, &w1, e).unwrap();
            let wide = brute_force_window_path(&input, &w2, e).unwrap();
            prop_assert!(wide.objective >= narrow.objective);
        }
    }

    #[test]
    fn simple_greedy_path_ignores_k(c in case(8, 1)) {
        let road = c.road();
        let model = c.model(&road);
        let (s, d) = c.cells(&road);
        let base = PlannerInput::new(&road, &model, s, TripGoal::Destination(d))
            .with_detour(DetourConfig::new(c.alpha).unwrap());
        let p1 = simple_greedy(&base.with_k(1)).unwrap().path;
        for k in [3, 5] {
            prop_assert_eq!(&simple_greedy(&base.with_k(k)).unwrap().path, &p1);
        }
    }

    #[test]
    fn zero_demand_gives_zero_objective(c in case(6, 4)) {
        let road = c.road();
        let model = OdDemandModel::new(road.len(), 15).unwrap();
        let (s, d) = c.cells(&road);
        let input = PlannerInput::new(&road, &model, s, TripGoal::Destination(d))
            .with_k(c.k)
            .with_detour(DetourConfig::new(c.alpha).unwrap());
        let (sp, _) = road.shortest_path(s, d).unwrap();
        for algo in [Algorithm::Simple, Algorithm::Backward, Algorithm::Forward, Algorithm::DemandOnly] {
            let plan = recommend_route(algo, &input).unwrap();
            prop_assert_eq!(plan.objective, 0.0);
            prop_assert_eq!(&plan.path, &sp);
        }
    }

    #[test]
    fn endpoint_choice_is_positive_demand(c in case(6, 2)) {
        let road = c.road();
        let model = c.model(&road);
        let (s, _) = c.cells(&road);
        let input = PlannerInput::new(&road, &model, s, TripGoal::Windows(1)).with_k(c.k);
        let window = road.khop_window(s, c.k).unwrap();
        let top = window
            .members()
            .iter()
            .filter(|&&m| m != s)
            .map(|&m| windroute_core::Forecast::expected_requests(&model, 0, s, m))
            .fold(0.0, f64::max);
        match windroute_core::recommend::select_window_endpoint(&input, &window).unwrap() {
            EndpointChoice::Endpoint(e) => {
                prop_assert!(window.contains(e));
                prop_assert!(windroute_core::Forecast::expected_requests(&model, 0, s, e) > 0.0);
            }
            EndpointChoice::Fallback => prop_assert_eq!(top, 0.0),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn served_orders_respect_the_threshold(c in case(7, 3), pattern in prop_oneof![Just(Pattern::Uniform), Just(Pattern::Clustered)]) {
        let road = c.road();
        prop_assume!(road.len() >= 4);
        let mut spec = SyntheticSpec::new(pattern, c.seed);
        spec.orders_per_day = 150;
        let s = generate_synthetic_orders(&road, &spec).unwrap();
        for algo in Algorithm::ALL {
            let mut cfg = SimConfig::new(algo, TripSpec::Random { count: 6, min_hops: 2 });
            cfg.k = if algo == Algorithm::Oracle { c.k.min(2) } else { c.k };
            cfg.detour = DetourConfig::new(c.alpha).unwrap();
            cfg.capacity = 1 + (c.seed % 4) as u32;
            cfg.seed = c.seed;
            let r = run_simulation(&cfg, &road, &s.model, &s.test_orders, &mut FrozenClock).unwrap();
            let m = r.metrics;
            prop_assert_eq!(m.orders_served + m.orders_rejected, m.orders_offered);
            prop_assert!((0.0..=1.0).contains(&m.vehicle_utilization));
            prop_assert!((0.0..=100.0).contains(&m.pct_orders_shared));
            prop_assert!((m.passengers_per_grid - m.vehicle_utilization * cfg.capacity as f64).abs() < 1e-12);
            for log in &r.trips {
                for sv in &log.served {
                    prop_assert!(cfg.detour.allows(sv.ratio), "{}: {:?}", algo, sv);
                    prop_assert!(sv.order.time >= s.test_start);
                }
                prop_assert!(log.occupancy.iter().all(|&o| o <= cfg.capacity));
            }
        }
    }
}
