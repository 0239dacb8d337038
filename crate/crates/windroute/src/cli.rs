//! Command-line interface.
//!
//! Every option can also come from a `--config` file of `key = value` lines
//! using the long flag names; flags given on the command line win.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::info;
use windroute_core::recommend::{
    parse_algorithms, recommend_route, select_window_endpoint, EndpointChoice, DEFAULT_BRUTE_FORCE_CAP, DEFAULT_DETOUR,
    DEFAULT_K,
};
use windroute_core::sim::{grid_configs, TripRequest, TripSpec, DEFAULT_CAPACITY};
use windroute_core::synthetic::{Pattern, SyntheticSpec};
use windroute_core::{Algorithm, CellId, DetourConfig, OdDemandModel, PlannerInput, RoadGraph, SimConfig, TripGoal};

use crate::config::ConfigFile;
use crate::files::{emit, render_events, write_orders, Format, Meta, MetricsTable, ModelFile, PlanJson};
use crate::grid_spec::{GridSpec, DEFAULT_CELL_KM};
use crate::ingest::read_trips_file;
use crate::run::{load_scenario, parallel_sweep, simulate, Scenario, SourceSpec};
use crate::{Error, Result};

pub const DEFAULT_SLOT_MINUTES: u32 = 15;
pub const DEFAULT_SPLIT: f64 = 0.75;
pub const DEFAULT_SEED: u64 = 1;
const DEFAULT_SYNTHETIC_GRID: GridSpec = GridSpec::Synthetic { rows: 10, cols: 10 };

#[derive(Debug, Parser)]
#[command(name = "windroute", version, about = "Demand-aware ridesharing route recommendation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a demand model and a held-out order list from a trip CSV.
    Ingest(IngestArgs),
    /// Recommend one route and print it as JSON.
    Recommend(RecommendArgs),
    /// Replay held-out orders against recommended routes.
    Simulate(SimulateArgs),
    /// Simulate every combination of algorithms, window sizes and detour thresholds.
    Sweep(SweepArgs),
    /// Compare the greedy window paths against exhaustive search.
    OracleCheck(OracleArgs),
}

/// Fills each `None` field from the config file.
macro_rules! fill {
    ($cfg:expr, $s:ident: $($field:ident),* $(,)?) => {
        $(
            if $s.$field.is_none() {
                $s.$field = $cfg.get(&stringify!($field).replace('_', "-"))?;
            }
        )*
    };
}

#[derive(Debug, Clone, Args)]
pub struct IngestArgs {
    /// Trip CSV with pickup_datetime, pickup/dropoff coordinates and passenger_count.
    pub input: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Bounding box `min_lat,min_lon,max_lat,max_lon`.
    #[arg(long)]
    pub grid: Option<String>,
    /// Cell edge in km [default: 2.5].
    #[arg(long)]
    pub cell_km: Option<f64>,
    /// Slot length in minutes [default: 15].
    #[arg(long)]
    pub slot_min: Option<u32>,
    /// Chronological share of records used for training [default: 0.75].
    #[arg(long)]
    pub split: Option<f64>,
    /// Output directory for model.csv and test_orders.csv [default: .].
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Where the road, demand and orders come from.
#[derive(Debug, Clone, Default, Args)]
pub struct SourceArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Demand model written by `ingest`.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Held-out orders written by `ingest`.
    #[arg(long)]
    pub orders: Option<PathBuf>,
    /// Synthetic demand instead of files: uniform, clustered or figure5.
    #[arg(long)]
    pub pattern: Option<String>,
    /// Synthetic grid `ROWSxCOLS` or a bounding box [default: 10x10].
    #[arg(long)]
    pub grid: Option<String>,
    /// Cell edge in km for synthetic grids [default: 2.5].
    #[arg(long)]
    pub cell_km: Option<f64>,
    /// Slot length in minutes for synthetic demand [default: 15].
    #[arg(long)]
    pub slot_min: Option<u32>,
    /// Seed for synthetic demand and random trips [default: 1].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Synthetic orders per day [default: 200].
    #[arg(long)]
    pub orders_per_day: Option<usize>,
    /// Synthetic training days [default: 3].
    #[arg(long)]
    pub train_days: Option<u32>,
}

impl SourceArgs {
    fn resolve(&mut self, cfg: &ConfigFile) -> Result<()> {
        fill!(cfg, self: model, orders, pattern, grid, cell_km, slot_min, seed, orders_per_day, train_days);
        Ok(())
    }

    fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    fn load(&self, need_orders: bool) -> Result<Scenario> {
        match (&self.model, &self.pattern) {
            (Some(_), Some(_)) => Err(Error::Usage("--model and --pattern are mutually exclusive".into())),
            (None, None) => Err(Error::Usage("give either --model (with --orders) or --pattern".into())),
            (Some(model), None) => {
                if need_orders && self.orders.is_none() {
                    return Err(Error::Usage("--model needs --orders for simulation".into()));
                }
                if self.grid.is_some() {
                    return Err(Error::Usage("--grid comes from the model file and cannot be combined with --model".into()));
                }
                load_scenario(&SourceSpec::Files { model, orders: self.orders.as_deref() })
            }
            (None, Some(p)) => {
                let pattern: Pattern = p.parse()?;
                if self.orders.is_some() {
                    return Err(Error::Usage("--orders cannot be combined with --pattern".into()));
                }
                if pattern == Pattern::Figure5 && self.grid.is_some() {
                    return Err(Error::Usage("the figure5 pattern has its own 7-cell network; drop --grid".into()));
                }
                let grid = match &self.grid {
                    Some(g) => g.parse()?,
                    None => DEFAULT_SYNTHETIC_GRID,
                };
                let mut spec = SyntheticSpec::new(pattern, self.seed());
                spec.slot_minutes = self.slot_min.unwrap_or(DEFAULT_SLOT_MINUTES);
                spec.slot = spec.slot.min(24 * 60 / spec.slot_minutes.max(1) - 1);
                if let Some(n) = self.orders_per_day {
                    spec.orders_per_day = n;
                }
                if let Some(d) = self.train_days {
                    spec.train_days = d;
                }
                load_scenario(&SourceSpec::Synthetic {
                    pattern,
                    grid,
                    cell_km: self.cell_km.unwrap_or(DEFAULT_CELL_KM),
                    spec,
                })
            }
        }
    }
}

/// Planner knobs.
#[derive(Debug, Clone, Default, Args)]
pub struct PlanArgs {
    /// Window size in hops [default: 5].
    #[arg(long)]
    pub k: Option<u32>,
    /// Largest allowed detour ratio [default: 1.5].
    #[arg(long)]
    pub detour: Option<f64>,
    /// simple, backward, forward, oracle, shortest or demand_only [default: forward].
    #[arg(long)]
    pub algo: Option<String>,
}

impl PlanArgs {
    fn resolve(&mut self, cfg: &ConfigFile) -> Result<()> {
        fill!(cfg, self: k, detour, algo);
        Ok(())
    }

    fn k(&self) -> u32 {
        self.k.unwrap_or(DEFAULT_K)
    }

    fn detour(&self) -> Result<DetourConfig> {
        Ok(DetourConfig::new(self.detour.unwrap_or(DEFAULT_DETOUR))?)
    }

    fn algo(&self) -> Result<Algorithm> {
        self.algo.as_deref().map_or(Ok(Algorithm::Forward), |a| Ok(a.parse()?))
    }
}

#[derive(Debug, Clone, Args)]
pub struct RecommendArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub plan: PlanArgs,
    /// Start cell id.
    #[arg(long)]
    pub from: Option<u32>,
    /// Destination cell id; omit with --windows for an open-ended route.
    #[arg(long)]
    pub to: Option<u32>,
    /// Open-ended route of this many windows.
    #[arg(long)]
    pub windows: Option<u32>,
    /// Slot of day whose demand is used [default: the synthetic slot, else 0].
    #[arg(long)]
    pub slot: Option<u32>,
    /// Include candidate scores for every decision.
    #[arg(long)]
    pub trace: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Vehicle and trip settings shared by `simulate` and `sweep`.
#[derive(Debug, Clone, Default, Args)]
pub struct TripArgs {
    /// Seats per vehicle [default: 4].
    #[arg(long)]
    pub capacity: Option<u32>,
    /// Number of random trips [default: 50].
    #[arg(long)]
    pub trips: Option<usize>,
    /// Smallest hop distance between a random trip's start and destination [default: 3].
    #[arg(long)]
    pub min_hops: Option<u32>,
    /// Single trip start cell (with --to).
    #[arg(long)]
    pub from: Option<u32>,
    #[arg(long)]
    pub to: Option<u32>,
    /// Departure time of the --from/--to trip, Unix seconds [default: first test order].
    #[arg(long)]
    pub time: Option<i64>,
}

impl TripArgs {
    fn resolve(&mut self, cfg: &ConfigFile) -> Result<()> {
        fill!(cfg, self: capacity, trips, min_hops, from, to, time);
        Ok(())
    }

    fn spec(&self, scenario: &Scenario) -> Result<TripSpec> {
        let fixed = |from: u32, to: u32| -> Result<TripSpec> {
            let time = match (self.time, scenario.test_start, scenario.test_orders.first()) {
                (Some(t), _, _) => t,
                (None, Some(t), _) => t,
                (None, None, Some(o)) => o.time,
                (None, None, None) => 0,
            };
            Ok(TripSpec::Fixed(vec![TripRequest { start: CellId(from), dest: CellId(to), time }]))
        };
        match (self.from, self.to) {
            (Some(f), Some(t)) => fixed(f, t),
            (None, None) if scenario.pattern == Some(Pattern::Figure5) && self.trips.is_none() => fixed(1, 4),
            (None, None) => Ok(TripSpec::Random { count: self.trips.unwrap_or(50), min_hops: self.min_hops.unwrap_or(3) }),
            _ => Err(Error::Usage("--from and --to go together".into())),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub plan: PlanArgs,
    #[command(flatten)]
    pub trip: TripArgs,
    /// Comma-separated algorithms to run on identical inputs, one row each.
    #[arg(long)]
    pub compare: Option<String>,
    /// Write cell-by-cell occupancy of the first algorithm's trips here.
    #[arg(long)]
    pub events: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub plan: PlanArgs,
    #[command(flatten)]
    pub trip: TripArgs,
    /// Comma-separated algorithms [default: backward,forward].
    #[arg(long)]
    pub compare: Option<String>,
    /// Comma-separated window sizes [default: 1,2,3,4,5].
    #[arg(long)]
    pub k_values: Option<String>,
    /// Comma-separated detour thresholds [default: 1.0,1.2,1.5].
    #[arg(long)]
    pub detours: Option<String>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Window size in hops [default: 2].
    #[arg(long)]
    pub k: Option<u32>,
    /// Largest allowed detour ratio [default: 1.5].
    #[arg(long)]
    pub detour: Option<f64>,
    /// Window center; every cell whose window fits the search cap when omitted.
    #[arg(long)]
    pub from: Option<u32>,
    #[arg(long)]
    pub slot: Option<u32>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn load_config(path: Option<&Path>) -> Result<ConfigFile> {
    match path {
        Some(p) => ConfigFile::read(p),
        None => Ok(ConfigFile::default()),
    }
}

fn cell(road: &RoadGraph, id: u32, flag: &str) -> Result<CellId> {
    let c = CellId(id);
    if !road.contains(c) {
        return Err(Error::Usage(format!("--{flag} {id} is not a cell of this {}-cell grid", road.len())));
    }
    Ok(c)
}

fn list<T: std::str::FromStr>(s: &str, flag: &str) -> Result<Vec<T>> {
    s.split(',')
        .filter(|v| !v.trim().is_empty())
        .map(|v| v.trim().parse().map_err(|_| Error::Usage(format!("bad value '{v}' in --{flag}"))))
        .collect()
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest(a) => ingest(a),
        Command::Recommend(a) => recommend(a),
        Command::Simulate(a) => simulate_cmd(a),
        Command::Sweep(a) => sweep_cmd(a),
        Command::OracleCheck(a) => oracle_check(a),
    }
}

fn ingest(mut a: IngestArgs) -> Result<()> {
    let cfg = load_config(a.config.as_deref())?;
    fill!(cfg, a: grid, cell_km, slot_min, split, out);
    let grid: GridSpec = a
        .grid
        .as_deref()
        .ok_or_else(|| Error::Usage("ingest needs --grid min_lat,min_lon,max_lat,max_lon".into()))?
        .parse()?;
    let cell_km = a.cell_km.unwrap_or(DEFAULT_CELL_KM);
    let slot_minutes = a.slot_min.unwrap_or(DEFAULT_SLOT_MINUTES);
    let split = a.split.unwrap_or(DEFAULT_SPLIT);
    let out = a.out.unwrap_or_else(|| PathBuf::from("."));

    let road = grid.build(cell_km)?;
    let trips = read_trips_file(&a.input)?;
    let built = OdDemandModel::build(&trips.records, &road, slot_minutes, split)?;
    let file = ModelFile { grid, cell_km, train_days: built.train_days, model: built.model };
    file.write(&out.join("model.csv"))?;
    let mut meta = Meta::default();
    meta.set("grid", grid);
    meta.set("cell_km", cell_km);
    meta.set("slot_minutes", slot_minutes);
    write_orders(&out.join("test_orders.csv"), &built.test_orders, &meta)?;
    println!(
        "rows={} malformed={} cells={} train_orders={} train_days={} test_orders={} out_of_bounds={} same_cell={} entries={}",
        trips.rows,
        trips.malformed,
        road.len(),
        built.train_orders,
        built.train_days,
        built.test_orders.len(),
        built.out_of_bounds,
        built.same_cell,
        file.model.entries().count()
    );
    Ok(())
}

fn recommend(mut a: RecommendArgs) -> Result<()> {
    let cfg = load_config(a.source.config.as_deref())?;
    a.source.resolve(&cfg)?;
    a.plan.resolve(&cfg)?;
    fill!(cfg, a: from, to, windows, slot, out);
    let scenario = a.source.load(false)?;
    let road = &scenario.road;
    let start = cell(road, a.from.ok_or_else(|| Error::Usage("recommend needs --from".into()))?, "from")?;
    let goal = match (a.to, a.windows) {
        (Some(t), None) => TripGoal::Destination(cell(road, t, "to")?),
        (None, Some(n)) => TripGoal::Windows(n),
        (None, None) => return Err(Error::Usage("recommend needs --to or --windows".into())),
        (Some(_), Some(_)) => return Err(Error::Usage("--to and --windows are mutually exclusive".into())),
    };
    let algo = a.plan.algo()?;
    let slot = a.slot.or(scenario.slot).unwrap_or(0);
    let input = PlannerInput::new(road, &scenario.model, start, goal)
        .with_k(a.plan.k())
        .with_detour(a.plan.detour()?)
        .with_slot(slot)
        .with_trace(a.trace);
    let plan = recommend_route(algo, &input)?;
    info!("{algo}: {} cells, objective {}", plan.path.len(), plan.objective);
    let json = PlanJson::new(road, algo, input.k, slot, &plan, a.trace)?;
    let mut text = serde_json::to_string_pretty(&json).expect("plan serializes");
    text.push('\n');
    emit(a.out.as_deref(), &text)
}

fn base_config(plan: &PlanArgs, trip: &TripArgs, source: &SourceArgs, scenario: &Scenario) -> Result<SimConfig> {
    let mut c = SimConfig::new(plan.algo()?, trip.spec(scenario)?);
    c.k = plan.k();
    c.detour = plan.detour()?;
    c.capacity = trip.capacity.unwrap_or(DEFAULT_CAPACITY);
    c.slot_minutes = match &source.model {
        Some(_) => scenario.model.slot_minutes(),
        None => source.slot_min.unwrap_or(DEFAULT_SLOT_MINUTES),
    };
    c.seed = source.seed();
    if let TripSpec::Fixed(trips) = &c.trips {
        for t in trips {
            cell(&scenario.road, t.start.0, "from")?;
            cell(&scenario.road, t.dest.0, "to")?;
        }
    }
    Ok(c)
}

fn simulate_cmd(mut a: SimulateArgs) -> Result<()> {
    let cfg = load_config(a.source.config.as_deref())?;
    a.source.resolve(&cfg)?;
    a.plan.resolve(&cfg)?;
    a.trip.resolve(&cfg)?;
    fill!(cfg, a: compare, events, format, out);
    let scenario = a.source.load(true)?;
    let base = base_config(&a.plan, &a.trip, &a.source, &scenario)?;
    let algos = match &a.compare {
        Some(list) => parse_algorithms(list)?,
        None => vec![base.algo],
    };
    let configs: Vec<SimConfig> = algos.iter().map(|&algo| SimConfig { algo, ..base.clone() }).collect();
    let mut rows = Vec::with_capacity(configs.len());
    for (i, c) in configs.iter().enumerate() {
        let report = simulate(c, &scenario)?;
        if i == 0 {
            if let Some(p) = &a.events {
                crate::files::write_text(p, &render_events(&report))?;
            }
        }
        rows.push((c.clone(), report.metrics));
    }
    let table = MetricsTable { seed: base.seed, source: scenario.label.clone(), rows };
    emit(a.out.as_deref(), &table.render(a.format.unwrap_or(Format::Csv))?)
}

fn sweep_cmd(mut a: SweepArgs) -> Result<()> {
    let cfg = load_config(a.source.config.as_deref())?;
    a.source.resolve(&cfg)?;
    a.plan.resolve(&cfg)?;
    a.trip.resolve(&cfg)?;
    fill!(cfg, a: compare, k_values, detours, format, out);
    let scenario = a.source.load(true)?;
    let base = base_config(&a.plan, &a.trip, &a.source, &scenario)?;
    let algos = match (&a.compare, &a.plan.algo) {
        (Some(list), _) => parse_algorithms(list)?,
        (None, Some(_)) => vec![base.algo],
        (None, None) => vec![Algorithm::Backward, Algorithm::Forward],
    };
    let ks: Vec<u32> = match &a.k_values {
        Some(s) => list(s, "k-values")?,
        None => (1..=5).collect(),
    };
    let detours: Vec<f64> = match &a.detours {
        Some(s) => list(s, "detours")?,
        None => vec![1.0, 1.2, 1.5],
    };
    let configs = grid_configs(&base, &algos, &ks, &detours)?;
    info!("sweeping {} configurations", configs.len());
    let metrics = parallel_sweep(&configs, &scenario)?;
    let table = MetricsTable { seed: base.seed, source: scenario.label.clone(), rows: configs.into_iter().zip(metrics).collect() };
    emit(a.out.as_deref(), &table.render(a.format.unwrap_or(Format::Csv))?)
}

fn oracle_check(mut a: OracleArgs) -> Result<()> {
    let cfg = load_config(a.source.config.as_deref())?;
    a.source.resolve(&cfg)?;
    fill!(cfg, a: k, detour, from, slot, out);
    let scenario = a.source.load(false)?;
    let road = &scenario.road;
    let k = a.k.unwrap_or(2);
    let detour = DetourConfig::new(a.detour.unwrap_or(DEFAULT_DETOUR))?;
    let slot = a.slot.or(scenario.slot).unwrap_or(0);
    let starts: Vec<CellId> = match a.from {
        Some(f) => vec![cell(road, f, "from")?],
        None => road.cell_ids().collect(),
    };
    let mut text = String::from("start,endpoint,algo,objective,oracle\n");
    let mut failures = Vec::new();
    let mut checked = 0;
    for s in starts {
        let window = road.khop_window(s, k)?;
        if window.len() > DEFAULT_BRUTE_FORCE_CAP {
            if a.from.is_some() {
                return Err(Error::Core(windroute_core::Error::WindowTooLarge {
                    members: window.len(),
                    cap: DEFAULT_BRUTE_FORCE_CAP,
                }));
            }
            continue;
        }
        let input = PlannerInput::new(road, &scenario.model, s, TripGoal::Windows(1))
            .with_k(k)
            .with_detour(detour)
            .with_slot(slot);
        let EndpointChoice::Endpoint(e) = select_window_endpoint(&input, &window)? else { continue };
        let oracle = recommend_route(Algorithm::Oracle, &input)?;
        let to_endpoint = PlannerInput { goal: TripGoal::Destination(e), ..input };
        let candidates = [
            (Algorithm::Backward, recommend_route(Algorithm::Backward, &input)?),
            (Algorithm::Forward, recommend_route(Algorithm::Forward, &input)?),
            (Algorithm::Shortest, recommend_route(Algorithm::Shortest, &to_endpoint)?),
        ];
        checked += 1;
        for (algo, plan) in candidates {
            text.push_str(&format!("{},{},{},{},{}\n", s.0, e.0, algo, plan.objective, oracle.objective));
            if plan.objective > oracle.objective {
                failures.push(format!("{algo} from {s} to {e}: {} > {}", plan.objective, oracle.objective));
            }
        }
    }
    emit(a.out.as_deref(), &text)?;
    info!("checked {checked} windows");
    if failures.is_empty() {
        Ok(())
    } else {
        Err(Error::Check(failures.join("; ")))
    }
}
