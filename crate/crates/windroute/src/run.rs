//! Scenario loading, wall-clock timing and the parallel sweep.

use std::path::Path;
use std::time::Instant;

use log::info;
use rayon::prelude::*;
use windroute_core::sim::{run_simulation, Clock, SimReport};
use windroute_core::synthetic::{figure5_road, generate_synthetic_orders, Pattern, SyntheticSpec};
use windroute_core::{OdDemandModel, RideOrder, RoadGraph, SimConfig, SimMetrics, Timestamp};

use crate::files::{read_orders, ModelFile};
use crate::grid_spec::GridSpec;
use crate::{Error, Result};

/// Seconds since construction.
#[derive(Clone, Copy, Debug)]
pub struct StdClock(Instant);

impl StdClock {
    pub fn new() -> Self {
        StdClock(Instant::now())
    }
}

impl Default for StdClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for StdClock {
    fn now(&mut self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}

/// Road, demand and held-out orders for a run.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub road: RoadGraph,
    pub model: OdDemandModel,
    pub test_orders: Vec<RideOrder>,
    /// Slot the scenario's orders fall in, when known.
    pub slot: Option<u32>,
    pub test_start: Option<Timestamp>,
    pub pattern: Option<Pattern>,
    pub label: String,
}

/// Where a scenario comes from.
#[derive(Clone, Debug)]
pub enum SourceSpec<'a> {
    Files { model: &'a Path, orders: Option<&'a Path> },
    Synthetic { pattern: Pattern, grid: GridSpec, cell_km: f64, spec: SyntheticSpec },
}

pub fn load_scenario(source: &SourceSpec<'_>) -> Result<Scenario> {
    match source {
        SourceSpec::Files { model, orders } => {
            let file = ModelFile::read(model)?;
            let road = file.road()?;
            let test_orders = match orders {
                Some(p) => {
                    let (orders, _) = read_orders(p)?;
                    for o in &orders {
                        if !road.contains(o.origin) || !road.contains(o.dest) {
                            return Err(Error::format(*p, format!("order {} -> {} is off the grid", o.origin, o.dest)));
                        }
                    }
                    orders
                }
                None => Vec::new(),
            };
            info!("loaded {} cells, {} demand entries, {} test orders", road.len(), file.model.entries().count(), test_orders.len());
            Ok(Scenario {
                road,
                model: file.model,
                test_orders,
                slot: None,
                test_start: None,
                pattern: None,
                label: model.display().to_string(),
            })
        }
        SourceSpec::Synthetic { pattern, grid, cell_km, spec } => {
            let road = match pattern {
                Pattern::Figure5 => figure5_road(),
                _ => grid.build(*cell_km)?,
            };
            let s = generate_synthetic_orders(&road, spec)?;
            info!(
                "generated {pattern} scenario: {} cells, {} train and {} test orders, seed {}",
                road.len(),
                s.train_orders.len(),
                s.test_orders.len(),
                spec.seed
            );
            Ok(Scenario {
                road,
                model: s.model,
                test_orders: s.test_orders,
                slot: Some(s.slot),
                test_start: Some(s.test_start),
                pattern: Some(*pattern),
                label: format!("{pattern}"),
            })
        }
    }
}

pub fn simulate(cfg: &SimConfig, scenario: &Scenario) -> Result<SimReport> {
    Ok(run_simulation(cfg, &scenario.road, &scenario.model, &scenario.test_orders, &mut StdClock::new())?)
}

/// Runs every configuration on the same scenario, in parallel. Rows come back
/// in the order of `configs`.
pub fn parallel_sweep(configs: &[SimConfig], scenario: &Scenario) -> Result<Vec<SimMetrics>> {
    configs.par_iter().map(|c| simulate(c, scenario).map(|r| r.metrics)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use windroute_core::sim::{grid_configs, sweep, FrozenClock, TripSpec};
    use windroute_core::Algorithm;

    #[test]
    fn parallel_rows_match_sequential() {
        let spec = SyntheticSpec::new(Pattern::Clustered, 3);
        let scenario = load_scenario(&SourceSpec::Synthetic {
            pattern: Pattern::Clustered,
            grid: GridSpec::Synthetic { rows: 6, cols: 6 },
            cell_km: 1.0,
            spec,
        })
        .unwrap();
        let mut base = SimConfig::new(Algorithm::Forward, TripSpec::Random { count: 8, min_hops: 2 });
        base.seed = 3;
        let configs = grid_configs(&base, &[Algorithm::Backward, Algorithm::Forward], &[1, 2, 3], &[1.2, 1.5]).unwrap();
        let par = parallel_sweep(&configs, &scenario).unwrap();
        let seq = sweep(&configs, &scenario.road, &scenario.model, &scenario.test_orders, &mut FrozenClock).unwrap();
        assert_eq!(par.len(), seq.len());
        for (a, b) in par.iter().zip(&seq) {
            assert_eq!(SimMetrics { mean_query_seconds: 0.0, ..*a }, *b);
        }
    }

    #[test]
    fn std_clock_advances() {
        let mut c = StdClock::new();
        let a = c.now();
        std::thread::sleep(std::time::Duration::from_millis(2));
        assert!(c.now() > a);
    }
}
