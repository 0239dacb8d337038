use alloc::vec;
use alloc::vec::Vec;

use super::context::{Ctx, WindowRider};
use crate::grid::{CellId, Window};
use crate::{Error, Result};

/// Largest window the exhaustive search accepts.
pub const DEFAULT_BRUTE_FORCE_CAP: usize = 30;

struct Search {
    path: Vec<CellId>,
    in_path: Vec<bool>,
    best: Option<Vec<CellId>>,
    best_value: f64,
}

/// Exhaustive search over simple paths from the current cell to `endpoint`
/// through usable window cells. `None` when no path passes the detour checks.
pub(crate) fn best_window_path(
    ctx: &mut Ctx<'_>,
    window: &Window,
    endpoint: CellId,
    cap: usize,
) -> Result<Option<Vec<CellId>>> {
    if window.len() > cap {
        return Err(Error::WindowTooLarge { members: window.len(), cap });
    }
    ctx.road.check(endpoint)?;
    let source = ctx.current();
    if !window.contains(endpoint) || endpoint == source || ctx.on_route[endpoint.index()] {
        return Err(Error::InvalidParameter(alloc::format!(
            "endpoint {endpoint} must be an unvisited window member other than {source}"
        )));
    }
    let rider = ctx.window_rider(endpoint);
    if !rider.shortest.is_finite() {
        return Ok(None);
    }
    let mut search = Search {
        path: vec![source],
        in_path: vec![false; ctx.road.len()],
        best: None,
        best_value: f64::NEG_INFINITY,
    };
    search.in_path[source.index()] = true;
    descend(ctx, window, rider, &mut search, 0.0, 0.0);
    Ok(search.best)
}

fn descend(ctx: &mut Ctx<'_>, window: &Window, rider: WindowRider, s: &mut Search, km: f64, value: f64) {
    let at = *s.path.last().unwrap();
    if at == rider.dest {
        // Paths arrive in lexicographic order, so only a strictly better value
        // replaces the incumbent.
        let better = value > s.best_value + 1e-9 * s.best_value.abs().max(1.0);
        if (s.best.is_none() || better) && ctx.feasible(&s.path, Some(rider)) {
            s.best = Some(s.path.clone());
            s.best_value = value;
        }
        return;
    }
    let road = ctx.road;
    for e in road.edges_unchecked(at) {
        let c = e.to;
        if s.in_path[c.index()] || (c != rider.dest && !ctx.usable_inner(Some(window), c)) {
            continue;
        }
        let next_km = km + e.km;
        s.path.push(c);
        if !ctx.prefix_may_work(&s.path, next_km, rider) {
            s.path.pop();
            continue;
        }
        let gain: f64 = s.path[..s.path.len() - 1].iter().map(|&u| ctx.demand.expected_requests(ctx.slot, u, c)).sum();
        s.in_path[c.index()] = true;
        descend(ctx, window, rider, s, next_km, value + gain);
        s.in_path[c.index()] = false;
        s.path.pop();
    }
}
