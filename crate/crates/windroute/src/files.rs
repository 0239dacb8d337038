//! On-disk formats: demand model tables, held-out order lists, route plans
//! and metric tables.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use windroute_core::recommend::{StepKind, TraceStep};
use windroute_core::sim::{SimReport, TripLog};
use windroute_core::{Algorithm, CellId, OdDemandModel, RideOrder, RoadGraph, RoutePlan, SimConfig, SimMetrics};

use crate::grid_spec::GridSpec;
use crate::{Error, Result};

/// Metadata kept in `# key=value` comment lines at the top of a table file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Meta(pub BTreeMap<String, String>);

impl Meta {
    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.0.insert(key.to_owned(), value.to_string());
    }

    pub fn get<T: std::str::FromStr>(&self, key: &str, path: &Path) -> Result<Option<T>> {
        match self.0.get(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| Error::format(path, format!("bad value '{v}' for '{key}'"))),
        }
    }

    pub fn require<T: std::str::FromStr>(&self, key: &str, path: &Path) -> Result<T> {
        self.get(key, path)?.ok_or_else(|| Error::format(path, format!("missing '{key}' in header comment")))
    }

    fn render(&self, title: &str) -> String {
        let mut s = format!("# {title}\n#");
        for (k, v) in &self.0 {
            let _ = write!(s, " {k}={v}");
        }
        s.push('\n');
        s
    }
}

/// Splits leading `#` lines into metadata and returns the rest of the text.
fn split_meta(text: &str) -> (Meta, &str) {
    let mut meta = Meta::default();
    let mut rest = text;
    while let Some(line) = rest.strip_prefix('#') {
        let (line, tail) = line.split_once('\n').unwrap_or((line, ""));
        for tok in line.split_whitespace() {
            if let Some((k, v)) = tok.split_once('=') {
                meta.0.insert(k.to_owned(), v.to_owned());
            }
        }
        rest = tail;
    }
    (meta, rest)
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// A demand model together with the grid it was built on.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelFile {
    pub grid: GridSpec,
    pub cell_km: f64,
    pub train_days: u32,
    pub model: OdDemandModel,
}

impl ModelFile {
    pub fn road(&self) -> Result<RoadGraph> {
        let road = self.grid.build(self.cell_km)?;
        if road.len() != self.model.cells() {
            return Err(Error::Usage(format!(
                "grid {} at {} km has {} cells but the model has {}",
                self.grid,
                self.cell_km,
                road.len(),
                self.model.cells()
            )));
        }
        Ok(road)
    }

    /// Rows sorted by (slot, origin, dest); identical models give identical bytes.
    pub fn render(&self) -> String {
        let mut meta = Meta::default();
        meta.set("grid", self.grid);
        meta.set("cell_km", self.cell_km);
        meta.set("cells", self.model.cells());
        meta.set("slot_minutes", self.model.slot_minutes());
        meta.set("train_days", self.train_days);
        let mut s = meta.render("windroute demand model");
        s.push_str("slot,origin,dest,weight\n");
        for (slot, o, d, w) in self.model.entries() {
            let _ = writeln!(s, "{slot},{},{},{w}", o.0, d.0);
        }
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_text(path, &self.render())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&read_text(path)?, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let (meta, body) = split_meta(text);
        let grid: GridSpec = meta.require::<String>("grid", path)?.parse()?;
        let cells: usize = meta.require("cells", path)?;
        let mut model = OdDemandModel::new(cells, meta.require("slot_minutes", path)?)?;
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(body.as_bytes());
        let headers = rdr.headers().map_err(|e| Error::format(path, e.to_string()))?;
        if headers.iter().collect::<Vec<_>>() != ["slot", "origin", "dest", "weight"] {
            return Err(Error::format(path, "expected header slot,origin,dest,weight"));
        }
        for (i, row) in rdr.deserialize::<(u32, u32, u32, f64)>().enumerate() {
            let (slot, o, d, w) = row.map_err(|e| Error::format(path, format!("row {}: {e}", i + 1)))?;
            if o == 0 || d == 0 || o as usize > cells || d as usize > cells {
                return Err(Error::format(path, format!("row {}: cell outside 1..={cells}", i + 1)));
            }
            model.set(slot, CellId(o), CellId(d), w).map_err(|e| Error::format(path, format!("row {}: {e}", i + 1)))?;
        }
        Ok(ModelFile {
            grid,
            cell_km: meta.require("cell_km", path)?,
            train_days: meta.get("train_days", path)?.unwrap_or(0),
            model,
        })
    }
}

pub fn render_orders(orders: &[RideOrder], meta: &Meta) -> String {
    let mut s = meta.render("windroute ride orders");
    s.push_str("time,origin,dest,passengers\n");
    for o in orders {
        let _ = writeln!(s, "{},{},{},{}", o.time, o.origin.0, o.dest.0, o.passengers);
    }
    s
}

pub fn write_orders(path: &Path, orders: &[RideOrder], meta: &Meta) -> Result<()> {
    write_text(path, &render_orders(orders, meta))
}

pub fn read_orders(path: &Path) -> Result<(Vec<RideOrder>, Meta)> {
    let text = read_text(path)?;
    let (meta, body) = split_meta(&text);
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(body.as_bytes());
    let headers = rdr.headers().map_err(|e| Error::format(path, e.to_string()))?;
    if headers.iter().collect::<Vec<_>>() != ["time", "origin", "dest", "passengers"] {
        return Err(Error::format(path, "expected header time,origin,dest,passengers"));
    }
    let mut orders = Vec::new();
    for (i, row) in rdr.deserialize::<(i64, u32, u32, u32)>().enumerate() {
        let (time, o, d, p) = row.map_err(|e| Error::format(path, format!("row {}: {e}", i + 1)))?;
        if o == 0 || d == 0 || p == 0 {
            return Err(Error::format(path, format!("row {}: cells are 1-based and passengers at least 1", i + 1)));
        }
        orders.push(RideOrder { origin: CellId(o), dest: CellId(d), time, passengers: p });
    }
    Ok((orders, meta))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceJson {
    pub window: usize,
    pub kind: String,
    pub at: u32,
    pub candidates: Vec<(u32, f64)>,
    pub chosen: Option<u32>,
}

impl From<&TraceStep> for TraceJson {
    fn from(t: &TraceStep) -> Self {
        let kind = match t.kind {
            StepKind::Endpoint => "endpoint",
            StepKind::Backward => "backward",
            StepKind::Forward => "forward",
            StepKind::Simple => "simple",
            StepKind::Fallback => "fallback",
        };
        TraceJson {
            window: t.window,
            kind: kind.into(),
            at: t.at.0,
            candidates: t.candidates.iter().map(|&(c, s)| (c.0, s)).collect(),
            chosen: t.chosen.map(|c| c.0),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanJson {
    pub algo: String,
    pub k: u32,
    pub slot: u32,
    pub path: Vec<u32>,
    pub objective: f64,
    pub length_km: f64,
    /// Route length over the shortest distance between its ends.
    pub detour_ratio: f64,
    pub windows: Vec<[u32; 2]>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub fallbacks: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<TraceJson>>,
}

impl PlanJson {
    pub fn new(road: &RoadGraph, algo: Algorithm, k: u32, slot: u32, plan: &RoutePlan, trace: bool) -> Result<Self> {
        let length_km = road.path_length(&plan.path)?;
        let (first, last) = (plan.path[0], *plan.path.last().unwrap());
        let detour_ratio = windroute_core::detour::detour_ratio(road, &plan.path, first, last)?;
        Ok(PlanJson {
            algo: algo.name().into(),
            k,
            slot,
            path: plan.path.iter().map(|c| c.0).collect(),
            objective: plan.objective,
            length_km,
            detour_ratio,
            windows: plan.windows.iter().map(|&(a, b)| [a.0, b.0]).collect(),
            fallbacks: plan.fallbacks.clone(),
            trace: trace.then(|| plan.trace.iter().map(TraceJson::from).collect()),
        })
    }
}

/// One metrics table row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub algo: String,
    pub k: u32,
    pub d: f64,
    #[serde(rename = "C")]
    pub capacity: u32,
    #[serde(rename = "VU")]
    pub vu: f64,
    pub pct_shared: f64,
    pub ppg: f64,
    pub served: usize,
    pub rejected: usize,
    pub mean_query_s: f64,
}

impl MetricsRow {
    pub fn new(cfg: &SimConfig, m: &SimMetrics) -> Self {
        MetricsRow {
            algo: cfg.algo.name().into(),
            k: cfg.k,
            d: cfg.detour.max_ratio,
            capacity: cfg.capacity,
            vu: m.vehicle_utilization,
            pct_shared: m.pct_orders_shared,
            ppg: m.passengers_per_grid,
            served: m.orders_served,
            rejected: m.orders_rejected,
            mean_query_s: m.mean_query_seconds,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(Error::Usage(format!("unknown format '{s}' (csv or json)"))),
        }
    }
}

#[derive(Serialize)]
struct MetricsJson<'a> {
    seed: u64,
    source: &'a str,
    trips: usize,
    rows: Vec<MetricsJsonRow<'a>>,
}

#[derive(Serialize)]
struct MetricsJsonRow<'a> {
    #[serde(flatten)]
    row: &'a MetricsRow,
    pct_shared_defined: bool,
    offered: usize,
    edges: usize,
}

/// A finished metrics table and the inputs it came from.
pub struct MetricsTable {
    pub seed: u64,
    pub source: String,
    pub rows: Vec<(SimConfig, SimMetrics)>,
}

impl MetricsTable {
    pub fn render(&self, format: Format) -> Result<String> {
        let rows: Vec<MetricsRow> = self.rows.iter().map(|(c, m)| MetricsRow::new(c, m)).collect();
        match format {
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                for r in &rows {
                    w.serialize(r).map_err(|e| Error::Usage(e.to_string()))?;
                }
                if rows.is_empty() {
                    w.write_record(["algo", "k", "d", "C", "VU", "pct_shared", "ppg", "served", "rejected", "mean_query_s"])
                        .map_err(|e| Error::Usage(e.to_string()))?;
                }
                let bytes = w.into_inner().map_err(|e| Error::Usage(e.to_string()))?;
                Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
            }
            Format::Json => {
                let doc = MetricsJson {
                    seed: self.seed,
                    source: &self.source,
                    trips: self.rows.first().map_or(0, |(_, m)| m.trips),
                    rows: rows
                        .iter()
                        .zip(&self.rows)
                        .map(|(row, (_, m))| MetricsJsonRow {
                            row,
                            pct_shared_defined: m.pct_shared_defined,
                            offered: m.orders_offered,
                            edges: m.edges_traversed,
                        })
                        .collect(),
                };
                let mut s = serde_json::to_string_pretty(&doc).expect("metrics serialize");
                s.push('\n');
                Ok(s)
            }
        }
    }
}

/// Cell-by-cell occupancy of every trip: `trip,step,cell,onboard`, where
/// `onboard` counts passengers leaving that cell.
pub fn render_events(report: &SimReport) -> String {
    let mut s = String::from("trip,step,cell,onboard\n");
    for (t, log) in report.trips.iter().enumerate() {
        write_trip_events(&mut s, t, log);
    }
    s
}

fn write_trip_events(s: &mut String, trip: usize, log: &TripLog) {
    for (step, cell) in log.plan.path.iter().enumerate() {
        let onboard = log.occupancy.get(step).copied().unwrap_or(0);
        let _ = writeln!(s, "{trip},{step},{},{onboard}", cell.0);
    }
}

/// Writes `text` to `path`, or to stdout when no path is given.
pub fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => write_text(p, text),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).map_err(|e| Error::io("<stdout>", e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_file_round_trip() {
        let mut model = OdDemandModel::new(25, 15).unwrap();
        model.set(3, CellId(1), CellId(7), 0.1 + 0.2).unwrap();
        model.set(0, CellId(25), CellId(2), 1.0 / 3.0).unwrap();
        let file = ModelFile { grid: GridSpec::Synthetic { rows: 5, cols: 5 }, cell_km: 2.5, train_days: 3, model };
        let text = file.render();
        assert!(text.starts_with("# windroute demand model\n# cell_km=2.5 cells=25 grid=5x5 slot_minutes=15 train_days=3\n"));
        let back = ModelFile::parse(&text, Path::new("m.csv")).unwrap();
        assert_eq!(back, file);
        assert_eq!(back.render(), text);
        assert_eq!(back.road().unwrap().len(), 25);
    }

    #[test]
    fn model_file_errors() {
        let p = Path::new("m.csv");
        assert!(ModelFile::parse("slot,origin,dest,weight\n", p).is_err());
        let head = "# x\n# grid=2x2 cell_km=1 cells=4 slot_minutes=15\n";
        assert!(ModelFile::parse(&format!("{head}slot,origin,dest,weight\n0,1,5,1\n"), p).is_err());
        assert!(ModelFile::parse(&format!("{head}slot,origin,dest,weight\n0,1,2,-1\n"), p).is_err());
        assert!(ModelFile::parse(&format!("{head}a,b,c,d\n"), p).is_err());
        assert_eq!(ModelFile::parse(&format!("{head}slot,origin,dest,weight\n0,1,2,1.5\n"), p).unwrap().model.entries().count(), 1);
    }

    #[test]
    fn metrics_csv_header() {
        let table = MetricsTable { seed: 1, source: "x".into(), rows: Vec::new() };
        assert_eq!(table.render(Format::Csv).unwrap(), "algo,k,d,C,VU,pct_shared,ppg,served,rejected,mean_query_s\n");
    }
}
