use alloc::vec;
use alloc::vec::Vec;

use super::context::{Ctx, WindowRider};
use super::oracle;
use super::{Algorithm, EndpointChoice, RoutePlan, StepKind, TraceStep, DEFAULT_BRUTE_FORCE_CAP};
use crate::grid::{CellId, Window};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Score {
    /// Requests from the window source to the candidate.
    OdFromSource,
    /// Requests originating at the candidate, wherever they go.
    NodeDemand,
}

/// Positive-scored candidates, best first, ties to the smaller id.
fn rank(mut scored: Vec<(CellId, f64)>) -> Vec<(CellId, f64)> {
    scored.retain(|&(_, s)| s > 0.0);
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    scored
}

pub(crate) fn select_endpoint(ctx: &mut Ctx<'_>, window: &Window, score: Score, window_no: usize) -> EndpointChoice {
    let source = ctx.current();
    let scored = window
        .members()
        .iter()
        .filter(|&&m| m != source && !ctx.on_route[m.index()])
        .map(|&m| {
            let s = match score {
                Score::OdFromSource => ctx.demand.expected_requests(ctx.slot, source, m),
                Score::NodeDemand => ctx.demand.node_demand(ctx.slot, m),
            };
            (m, s)
        })
        .collect();
    let ranked = rank(scored);
    let mut chosen = None;
    for &(m, _) in &ranked {
        if let Some(path) = ctx.window_path(window, source, m, &[]) {
            let rider = ctx.window_rider(m);
            if ctx.feasible(&path, Some(rider)) {
                chosen = Some(m);
                break;
            }
        }
    }
    ctx.record(|| TraceStep { window: window_no, kind: StepKind::Endpoint, at: source, candidates: ranked, chosen });
    match chosen {
        Some(m) => EndpointChoice::Endpoint(m),
        None => EndpointChoice::Fallback,
    }
}

/// Walks back from `endpoint` to the window source. Returns `None` only if the
/// endpoint cannot be reached feasibly at all.
pub(crate) fn backward_path(ctx: &mut Ctx<'_>, window: &Window, endpoint: CellId, window_no: usize) -> Option<Vec<CellId>> {
    let source = ctx.current();
    let rider = ctx.window_rider(endpoint);
    let mut best = ctx.window_path(window, source, endpoint, &[])?;
    if !ctx.feasible(&best, Some(rider)) {
        return None;
    }
    // Reversed: suffix[0] is the endpoint, the last entry is the frontier.
    let mut suffix = vec![endpoint];
    loop {
        let frontier = *suffix.last().unwrap();
        if ctx.road.adjacent(source, frontier) {
            let mut direct = vec![source];
            direct.extend(suffix.iter().rev());
            return Some(if ctx.feasible(&direct, Some(rider)) { direct } else { best });
        }
        let scored = ctx
            .road
            .edges_unchecked(frontier)
            .iter()
            .map(|e| e.to)
            .filter(|&c| c != source && ctx.usable_inner(Some(window), c) && !suffix.contains(&c))
            .map(|c| (c, ctx.demand.expected_requests(ctx.slot, c, frontier)))
            .collect();
        let ranked = rank(scored);
        let mut chosen = None;
        for &(c, _) in &ranked {
            let Some(mut full) = ctx.window_path(window, source, c, &suffix) else { continue };
            full.extend(suffix.iter().rev());
            if ctx.feasible(&full, Some(rider)) {
                chosen = Some(c);
                best = full;
                break;
            }
        }
        let c = match chosen {
            Some(c) => c,
            // Keep following the last feasible path.
            None => {
                let at = best.iter().position(|&x| x == frontier).unwrap();
                best[at - 1]
            }
        };
        ctx.record(|| TraceStep {
            window: window_no,
            kind: StepKind::Backward,
            at: frontier,
            candidates: ranked,
            chosen: Some(c),
        });
        suffix.push(c);
    }
}

/// Walks forward from the window source to `endpoint`.
pub(crate) fn forward_path(
    ctx: &mut Ctx<'_>,
    window: &Window,
    endpoint: CellId,
    score: Score,
    window_no: usize,
) -> Option<Vec<CellId>> {
    let source = ctx.current();
    let rider = ctx.window_rider(endpoint);
    let mut best = ctx.window_path(window, source, endpoint, &[])?;
    if !ctx.feasible(&best, Some(rider)) {
        return None;
    }
    let mut prefix = vec![source];
    loop {
        let at = *prefix.last().unwrap();
        if ctx.road.adjacent(at, endpoint) {
            let mut direct = prefix.clone();
            direct.push(endpoint);
            return Some(if ctx.feasible(&direct, Some(rider)) { direct } else { best });
        }
        let scored = ctx
            .road
            .edges_unchecked(at)
            .iter()
            .map(|e| e.to)
            .filter(|&c| c != endpoint && ctx.usable_inner(Some(window), c) && !prefix.contains(&c))
            .map(|c| {
                let s = match score {
                    Score::OdFromSource => ctx.demand.expected_requests(ctx.slot, c, endpoint),
                    Score::NodeDemand => ctx.demand.node_demand(ctx.slot, c),
                };
                (c, s)
            })
            .collect();
        let ranked = rank(scored);
        let mut chosen = None;
        for &(c, _) in &ranked {
            let Some(rest) = ctx.window_path(window, c, endpoint, &prefix) else { continue };
            let mut full = prefix.clone();
            full.extend(rest);
            if ctx.feasible(&full, Some(rider)) {
                chosen = Some(c);
                best = full;
                break;
            }
        }
        let c = match chosen {
            Some(c) => c,
            None => {
                let i = best.iter().position(|&x| x == at).unwrap();
                best[i + 1]
            }
        };
        ctx.record(|| TraceStep { window: window_no, kind: StepKind::Forward, at, candidates: ranked, chosen: Some(c) });
        prefix.push(c);
    }
}

/// Up to `k` hops along the shortest path to the goal, around the route.
fn fallback_segment(ctx: &mut Ctx<'_>, window_no: usize) -> Option<Vec<CellId>> {
    let mut path = ctx.path_to_goal()?;
    path.truncate(ctx.k as usize + 1);
    let at = ctx.current();
    let next = path.get(1).copied();
    ctx.record(|| TraceStep { window: window_no, kind: StepKind::Fallback, at, candidates: Vec::new(), chosen: next });
    Some(path)
}

pub(crate) fn sliding(mut ctx: Ctx<'_>, algo: Algorithm) -> Result<RoutePlan> {
    let mut windows = Vec::new();
    let mut fallbacks = Vec::new();
    while !ctx.goal_reached(windows.len()) {
        let source = ctx.current();
        let window = ctx.road.khop_window(source, ctx.k)?;
        let n = windows.len();
        let score = if algo == Algorithm::DemandOnly { Score::NodeDemand } else { Score::OdFromSource };
        let planned = match select_endpoint(&mut ctx, &window, score, n) {
            EndpointChoice::Endpoint(e) => match algo {
                Algorithm::Backward => backward_path(&mut ctx, &window, e, n),
                Algorithm::Forward => forward_path(&mut ctx, &window, e, Score::OdFromSource, n),
                Algorithm::DemandOnly => forward_path(&mut ctx, &window, e, Score::NodeDemand, n),
                Algorithm::Oracle => oracle::best_window_path(&mut ctx, &window, e, DEFAULT_BRUTE_FORCE_CAP)?,
                Algorithm::Simple | Algorithm::Shortest => unreachable!("not a window planner"),
            },
            EndpointChoice::Fallback => None,
        };
        let path = match planned {
            Some(p) => p,
            None => {
                if ctx.goal_cell().is_none() {
                    break;
                }
                fallbacks.push(n);
                fallback_segment(&mut ctx, n).ok_or(Error::NoPath { from: source, to: ctx.goal_cell().unwrap() })?
            }
        };
        windows.push((source, *path.last().unwrap()));
        ctx.commit(&path);
    }
    Ok(RoutePlan::from_ctx(ctx, windows, fallbacks))
}

/// One hop at a time to the adjacent cell with the most requests from the
/// current cell.
pub(crate) fn simple(mut ctx: Ctx<'_>) -> Result<RoutePlan> {
    let mut steps = Vec::new();
    let mut fallbacks = Vec::new();
    while !ctx.goal_reached(steps.len()) {
        let at = ctx.current();
        let goal = ctx.goal_cell();
        let scored = ctx
            .road
            .edges_unchecked(at)
            .iter()
            .map(|e| e.to)
            .filter(|&c| Some(c) == goal || ctx.usable_inner(None, c))
            .map(|c| (c, ctx.demand.expected_requests(ctx.slot, at, c)))
            .collect();
        let ranked = rank(scored);
        let mut chosen = None;
        for &(c, _) in &ranked {
            if ctx.feasible(&[at, c], None::<WindowRider>) {
                chosen = Some(c);
                break;
            }
        }
        let n = steps.len();
        ctx.record(|| TraceStep { window: n, kind: StepKind::Simple, at, candidates: ranked, chosen });
        let next = match chosen {
            Some(c) => c,
            None => {
                let Some(goal) = goal else { break };
                fallbacks.push(n);
                let path = ctx.path_to_goal().ok_or(Error::NoPath { from: at, to: goal })?;
                path[1]
            }
        };
        steps.push((at, next));
        ctx.commit(&[at, next]);
    }
    Ok(RoutePlan::from_ctx(ctx, steps, fallbacks))
}
