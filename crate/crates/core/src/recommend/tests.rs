use alloc::vec;
use alloc::vec::Vec;

use super::*;
use crate::demand::OdDemandModel;
use crate::grid::Path;
use crate::synthetic::{figure3_model, figure5_road, FIGURE5_REQUESTS};

fn ids(p: &Path) -> Vec<u32> {
    p.iter().map(|c| c.0).collect()
}

fn figure5_model() -> OdDemandModel {
    let mut m = OdDemandModel::new(7, 15).unwrap();
    for (o, d) in FIGURE5_REQUESTS {
        m.set(0, CellId(o), CellId(d), 1.0).unwrap();
    }
    m
}

/// Objective by the double loop over ordered pairs.
fn objective(m: &OdDemandModel, path: &[CellId], slot: u32) -> f64 {
    let mut total = 0.0;
    for a in 0..path.len() {
        for b in a + 1..path.len() {
            total += m.expected_requests(slot, path[a], path[b]);
        }
    }
    total
}

/// Every simple path from `from` to `to`, in no particular order.
fn all_simple_paths(road: &RoadGraph, from: CellId, to: CellId) -> Vec<Vec<CellId>> {
    fn go(road: &RoadGraph, to: CellId, path: &mut Vec<CellId>, out: &mut Vec<Vec<CellId>>) {
        let at = *path.last().unwrap();
        if at == to {
            out.push(path.clone());
            return;
        }
        for n in road.neighbors(at).unwrap() {
            if !path.contains(&n) {
                path.push(n);
                go(road, to, path, out);
                path.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(road, to, &mut vec![from], &mut out);
    out
}

#[test]
fn endpoint_is_the_heaviest_destination_from_the_source() {
    let road = RoadGraph::synthetic(19, 19, 1.0).unwrap();
    let model = figure3_model();
    let input = PlannerInput::new(&road, &model, CellId(1), TripGoal::Windows(1));
    let window = road.khop_window(CellId(1), 1).unwrap();
    assert_eq!(select_window_endpoint(&input, &window).unwrap(), EndpointChoice::Endpoint(CellId(2)));
}

#[test]
fn endpoint_ties_go_to_the_smaller_id() {
    let road = RoadGraph::synthetic(19, 19, 1.0).unwrap();
    let mut model = figure3_model();
    model.set(0, CellId(1), CellId(20), 3.0).unwrap();
    let input = PlannerInput::new(&road, &model, CellId(1), TripGoal::Windows(1));
    let window = road.khop_window(CellId(1), 1).unwrap();
    assert_eq!(select_window_endpoint(&input, &window).unwrap(), EndpointChoice::Endpoint(CellId(2)));
}

#[test]
fn no_demand_in_window_falls_back() {
    let road = RoadGraph::synthetic(19, 19, 1.0).unwrap();
    let model = figure3_model();
    // g2 sends only to g21, and the window around g40 sees nothing.
    let input = PlannerInput::new(&road, &model, CellId(40), TripGoal::Windows(1));
    let window = road.khop_window(CellId(40), 1).unwrap();
    assert_eq!(select_window_endpoint(&input, &window).unwrap(), EndpointChoice::Fallback);
}

#[test]
fn adjacent_endpoint_is_joined_directly() {
    let road = RoadGraph::synthetic(19, 19, 1.0).unwrap();
    let model = figure3_model();
    let input = PlannerInput::new(&road, &model, CellId(1), TripGoal::Windows(1)).with_k(1);
    let bg = backward_greedy(&input).unwrap();
    let fg = forward_greedy(&input).unwrap();
    assert_eq!(ids(&bg.path), [1, 2]);
    assert_eq!(bg.path, fg.path);
    assert_eq!(bg.objective, 3.0);
}

#[test]
fn zero_demand_follows_the_shortest_path() {
    let road = RoadGraph::synthetic(6, 6, 1.0).unwrap();
    let model = OdDemandModel::new(road.len(), 15).unwrap();
    for (s, d) in [(1, 36), (6, 31), (8, 29), (36, 2)] {
        let (sp, _) = road.shortest_path(CellId(s), CellId(d)).unwrap();
        for k in [1, 2, 5] {
            let input = PlannerInput::new(&road, &model, CellId(s), TripGoal::Destination(CellId(d))).with_k(k);
            for algo in Algorithm::ALL {
                let plan = recommend_route(algo, &input).unwrap();
                assert_eq!(plan.path, sp, "{algo} k={k} {s}->{d}");
                assert_eq!(plan.objective, 0.0);
            }
        }
    }
}

#[test]
fn start_equal_to_destination_is_a_single_cell() {
    let road = figure5_road();
    let model = figure5_model();
    for algo in Algorithm::ALL {
        let input = PlannerInput::new(&road, &model, CellId(3), TripGoal::Destination(CellId(3)));
        let plan = recommend_route(algo, &input).unwrap();
        assert_eq!(ids(&plan.path), [3], "{algo}");
        assert_eq!(plan.objective, 0.0);
    }
}

#[test]
fn figure5_od_planners_take_the_serving_route() {
    let road = figure5_road();
    let model = figure5_model();
    let input = PlannerInput::new(&road, &model, CellId(1), TripGoal::Destination(CellId(4)));
    for algo in [Algorithm::Backward, Algorithm::Forward, Algorithm::Oracle] {
        let plan = recommend_route(algo, &input).unwrap();
        assert_eq!(ids(&plan.path), [1, 2, 3, 4], "{algo}");
        assert_eq!(plan.objective, 3.0);
        assert_eq!(plan.objective, objective(&model, &plan.path, 0));
    }
    let share = demand_only_baseline(&input).unwrap();
    assert_eq!(ids(&share.path), [1, 5, 6, 4]);
    assert_eq!(share.objective, 0.0);
}

#[test]
fn windows_chain_without_repeats() {
    let road = RoadGraph::synthetic(3, 8, 1.0).unwrap();
    let mut model = OdDemandModel::new(road.len(), 15).unwrap();
    // A trail of demand across the grid so several windows get real endpoints.
    for (o, d, w) in [(1, 3, 2.0), (3, 5, 2.0), (5, 7, 1.0), (7, 24, 3.0), (3, 12, 1.0), (13, 14, 1.0)] {
        model.set(0, CellId(o), CellId(d), w).unwrap();
    }
    for algo in Algorithm::ALL {
        let input = PlannerInput::new(&road, &model, CellId(1), TripGoal::Destination(CellId(24))).with_k(2);
        let plan = recommend_route(algo, &input).unwrap();
        road.validate_path(&plan.path).unwrap();
        assert_eq!(plan.path.first(), Some(&CellId(1)));
        assert_eq!(plan.path.last(), Some(&CellId(24)));
        for w in plan.windows.windows(2) {
            assert_eq!(w[0].1, w[1].0, "{algo}");
        }
        let (_, sp) = road.shortest_path(CellId(1), CellId(24)).unwrap();
        assert!(road.path_length(&plan.path).unwrap() / sp <= 1.5 + 1e-12, "{algo}");
    }
}

#[test]
fn brute_force_matches_independent_enumeration() {
    let road = RoadGraph::synthetic(3, 3, 1.0).unwrap();
    let mut model = OdDemandModel::new(9, 15).unwrap();
    let weights = [(1, 4, 1.0), (4, 7, 2.0), (7, 8, 1.0), (2, 9, 0.5), (5, 9, 3.0), (1, 5, 0.25), (8, 9, 1.5), (3, 6, 2.0)];
    for (o, d, w) in weights {
        model.set(0, CellId(o), CellId(d), w).unwrap();
    }
    let window = road.khop_window(CellId(1), 2).unwrap();
    assert_eq!(window.len(), 9);
    let input = PlannerInput::new(&road, &model, CellId(1), TripGoal::Windows(1))
        .with_detour(DetourConfig::new(10.0).unwrap());
    for end in 2..=9 {
        let plan = brute_force_window_path(&input, &window, CellId(end)).unwrap();
        let mut paths = all_simple_paths(&road, CellId(1), CellId(end));
        paths.sort();
        let best = paths.iter().map(|p| objective(&model, p, 0)).fold(f64::NEG_INFINITY, f64::max);
        let first_best = paths.iter().find(|p| objective(&model, p, 0) == best).unwrap();
        assert_eq!(plan.objective, best, "endpoint {end}");
        assert_eq!(plan.path.cells(), &first_best[..], "endpoint {end}");
    }
}

#[test]
fn brute_force_respects_the_detour_threshold() {
    let road = RoadGraph::synthetic(3, 3, 1.0).unwrap();
    let mut model = OdDemandModel::new(9, 15).unwrap();
    model.set(0, CellId(1), CellId(7), 5.0).unwrap();
    let window = road.khop_window(CellId(1), 2).unwrap();
    let input = PlannerInput::new(&road, &model, CellId(1), TripGoal::Windows(1));
    let plan = brute_force_window_path(&input, &window, CellId(3)).unwrap();
    // A visit to g7 would triple the g1 -> g3 ride.
    assert!(!plan.path.contains(&CellId(7)));
    let (_, sp) = road.shortest_path(CellId(1), CellId(3)).unwrap();
    assert!(road.path_length(&plan.path).unwrap() / sp <= 1.5);
}

#[test]
fn oracle_rejects_large_windows() {
    let road = RoadGraph::synthetic(7, 7, 1.0).unwrap();
    let model = OdDemandModel::new(road.len(), 15).unwrap();
    let window = road.khop_window(CellId(25), 3).unwrap();
    let input = PlannerInput::new(&road, &model, CellId(25), TripGoal::Windows(1));
    assert_eq!(
        brute_force_window_path(&input, &window, CellId(1)),
        Err(Error::WindowTooLarge { members: 49, cap: DEFAULT_BRUTE_FORCE_CAP })
    );
}

#[test]
fn simple_greedy_ignores_k() {
    let road = RoadGraph::synthetic(5, 5, 1.0).unwrap();
    let mut model = OdDemandModel::new(25, 15).unwrap();
    for (o, d, w) in [(1, 2, 1.0), (2, 8, 2.0), (8, 14, 1.0), (14, 20, 4.0), (1, 7, 0.5)] {
        model.set(0, CellId(o), CellId(d), w).unwrap();
    }
    let base = PlannerInput::new(&road, &model, CellId(1), TripGoal::Destination(CellId(25)));
    let reference = simple_greedy(&base.with_k(1)).unwrap();
    for k in 2..=5 {
        assert_eq!(simple_greedy(&base.with_k(k)).unwrap().path, reference.path);
    }
    assert_eq!(&ids(&reference.path)[..5], [1, 2, 8, 14, 20]);
}

#[test]
fn oracle_never_loses_to_the_greedy_planners() {
    let road = RoadGraph::synthetic(5, 5, 1.0).unwrap();
    let mut model = OdDemandModel::new(25, 15).unwrap();
    let mut x = 7u64;
    for o in 1..=25 {
        for d in 1..=25 {
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            if o != d && (x >> 60) < 3 {
                model.set(0, CellId(o), CellId(d), ((x >> 40) % 5) as f64).unwrap();
            }
        }
    }
    for k in [1, 2] {
        let input = PlannerInput::new(&road, &model, CellId(1), TripGoal::Windows(1)).with_k(k);
        let window = road.khop_window(CellId(1), k).unwrap();
        let oracle = oracle_route(&input).unwrap();
        for algo in [Algorithm::Backward, Algorithm::Forward, Algorithm::DemandOnly] {
            let plan = recommend_route(algo, &input).unwrap();
            if plan.path.last() == oracle.path.last() {
                assert!(oracle.objective >= plan.objective - 1e-12, "{algo} k={k}");
            }
        }
        assert!(oracle.path.iter().all(|&c| window.contains(c)));
    }
}

#[test]
fn trace_records_decisions() {
    let road = figure5_road();
    let model = figure5_model();
    let input = PlannerInput::new(&road, &model, CellId(1), TripGoal::Destination(CellId(4))).with_trace(true);
    let plan = backward_greedy(&input).unwrap();
    assert_eq!(plan.trace[0].kind, StepKind::Endpoint);
    assert_eq!(plan.trace[0].chosen, Some(CellId(2)));
    assert_eq!(plan.trace[0].candidates, vec![(CellId(2), 1.0)]);
    assert!(backward_greedy(&input.with_trace(false)).unwrap().trace.is_empty());
}

#[test]
fn bad_inputs_are_errors() {
    let road = figure5_road();
    let model = figure5_model();
    let input = PlannerInput::new(&road, &model, CellId(1), TripGoal::Destination(CellId(4)));
    assert_eq!(backward_greedy(&input.with_k(0)).unwrap_err(), Error::InvalidParameter("window hop count must be >= 1, got 0".into()));
    let far = PlannerInput::new(&road, &model, CellId(1), TripGoal::Destination(CellId(99)));
    assert_eq!(forward_greedy(&far).unwrap_err(), Error::UnknownCell(CellId(99)));
    assert!(oracle_route(&input.with_detour(DetourConfig { max_ratio: 0.5 })).is_err());
    let open = PlannerInput::new(&road, &model, CellId(1), TripGoal::Windows(2));
    assert!(shortest_path_baseline(&open).is_err());
    let split = RoadGraph::from_edges(3, &[(1, 2, 1.0)]).unwrap();
    let none = OdDemandModel::new(3, 15).unwrap();
    let cut = PlannerInput::new(&split, &none, CellId(1), TripGoal::Destination(CellId(3)));
    assert_eq!(backward_greedy(&cut).unwrap_err(), Error::NoPath { from: CellId(1), to: CellId(3) });
}

#[test]
fn algorithm_names_round_trip() {
    for a in Algorithm::ALL {
        assert_eq!(a.name().parse::<Algorithm>().unwrap(), a);
    }
    assert_eq!(parse_algorithms("sp, bg,fg").unwrap(), [Algorithm::Shortest, Algorithm::Backward, Algorithm::Forward]);
    assert!(parse_algorithms("bg,nope").is_err());
}
