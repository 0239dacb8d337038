//! The road graph: grid cells, 8-connected adjacency weighted by haversine
//! distance, shortest paths and k-hop windows.

use alloc::collections::{BinaryHeap, VecDeque};
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use core::ops::Deref;

use crate::{Error, Result};

/// Mean Earth radius used for every distance in the crate.
pub const EARTH_RADIUS_KM: f64 = 6371.0;

const KM_PER_DEGREE: f64 = EARTH_RADIUS_KM * core::f64::consts::PI / 180.0;

/// Relative slack used when deciding whether two path lengths tie.
const TIE_EPS: f64 = 1e-9;

/// 1-based cell index, `(row - 1) * ncols + col` on grid-built graphs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CellId(pub u32);

impl CellId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize - 1
    }

    #[inline]
    pub fn from_index(index: usize) -> Self {
        CellId(index as u32 + 1)
    }
}

impl fmt::Display for CellId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "g{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LatLon {
    pub lat: f64,
    pub lon: f64,
}

impl LatLon {
    pub const fn new(lat: f64, lon: f64) -> Self {
        LatLon { lat, lon }
    }

    pub fn is_valid(&self) -> bool {
        self.lat.is_finite()
            && self.lon.is_finite()
            && (-90.0..=90.0).contains(&self.lat)
            && (-180.0..=180.0).contains(&self.lon)
    }
}

/// Great-circle distance in km between two points.
pub fn haversine(a: LatLon, b: LatLon) -> f64 {
    let (phi1, phi2) = (a.lat.to_radians(), b.lat.to_radians());
    let dphi = phi2 - phi1;
    let dlambda = (b.lon - a.lon).to_radians();
    let s1 = libm::sin(dphi / 2.0);
    let s2 = libm::sin(dlambda / 2.0);
    let h = s1 * s1 + libm::cos(phi1) * libm::cos(phi2) * s2 * s2;
    let h = h.clamp(0.0, 1.0);
    2.0 * EARTH_RADIUS_KM * libm::atan2(libm::sqrt(h), libm::sqrt(1.0 - h))
}

/// Latitude/longitude bounding box in decimal degrees.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BBox {
    pub min_lat: f64,
    pub min_lon: f64,
    pub max_lat: f64,
    pub max_lon: f64,
}

impl BBox {
    pub fn new(min_lat: f64, min_lon: f64, max_lat: f64, max_lon: f64) -> Result<Self> {
        let bbox = BBox { min_lat, min_lon, max_lat, max_lon };
        if !LatLon::new(min_lat, min_lon).is_valid() || !LatLon::new(max_lat, max_lon).is_valid() {
            return Err(Error::InvalidInput(format!("bounding box {bbox:?} has invalid coordinates")));
        }
        if !(max_lat > min_lat && max_lon > min_lon) {
            return Err(Error::InvalidInput(format!("bounding box {bbox:?} has zero area")));
        }
        Ok(bbox)
    }

    /// North-south extent along the central meridian.
    pub fn height_km(&self) -> f64 {
        let mid_lon = (self.min_lon + self.max_lon) / 2.0;
        haversine(LatLon::new(self.min_lat, mid_lon), LatLon::new(self.max_lat, mid_lon))
    }

    /// East-west extent along the central parallel.
    pub fn width_km(&self) -> f64 {
        let mid_lat = (self.min_lat + self.max_lat) / 2.0;
        haversine(LatLon::new(mid_lat, self.min_lon), LatLon::new(mid_lat, self.max_lon))
    }

    pub fn contains(&self, p: LatLon) -> bool {
        (self.min_lat..=self.max_lat).contains(&p.lat) && (self.min_lon..=self.max_lon).contains(&p.lon)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridCell {
    pub id: CellId,
    /// 1-based, row 1 is the southernmost row.
    pub row: u32,
    /// 1-based, column 1 is the westernmost column.
    pub col: u32,
    pub center: LatLon,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge {
    pub to: CellId,
    pub km: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Layout {
    bbox: BBox,
    nrows: u32,
    ncols: u32,
    lat_step: f64,
    lon_step: f64,
}

/// Immutable road graph. Grid-built graphs carry their tiling so points can be
/// bucketed into cells; graphs built from an explicit edge list cannot.
#[derive(Clone, Debug)]
pub struct RoadGraph {
    cells: Vec<GridCell>,
    /// Sorted by neighbor id.
    adjacency: Vec<Vec<Edge>>,
    layout: Option<Layout>,
}

impl RoadGraph {
    /// Tiles `bbox` into `ceil(height / cell_km) x ceil(width / cell_km)` cells.
    pub fn build_grid(bbox: BBox, cell_km: f64) -> Result<Self> {
        let bbox = BBox::new(bbox.min_lat, bbox.min_lon, bbox.max_lat, bbox.max_lon)?;
        if !(cell_km.is_finite() && cell_km > 0.0) {
            return Err(Error::InvalidInput(format!("cell size must be positive, got {cell_km}")));
        }
        let nrows = libm::ceil(bbox.height_km() / cell_km).max(1.0) as u32;
        let ncols = libm::ceil(bbox.width_km() / cell_km).max(1.0) as u32;
        Ok(Self::from_layout(bbox, nrows, ncols))
    }

    /// An `nrows x ncols` grid of roughly `cell_km` square cells whose south-west
    /// corner sits at (0, 0).
    pub fn synthetic(nrows: u32, ncols: u32, cell_km: f64) -> Result<Self> {
        if nrows == 0 || ncols == 0 {
            return Err(Error::InvalidInput(format!("grid dimensions must be positive, got {nrows}x{ncols}")));
        }
        if !(cell_km.is_finite() && cell_km > 0.0) {
            return Err(Error::InvalidInput(format!("cell size must be positive, got {cell_km}")));
        }
        let step = cell_km / KM_PER_DEGREE;
        let bbox = BBox::new(0.0, 0.0, step * nrows as f64, step * ncols as f64)?;
        Ok(Self::from_layout(bbox, nrows, ncols))
    }

    fn from_layout(bbox: BBox, nrows: u32, ncols: u32) -> Self {
        let lat_step = (bbox.max_lat - bbox.min_lat) / nrows as f64;
        let lon_step = (bbox.max_lon - bbox.min_lon) / ncols as f64;
        let mut cells = Vec::with_capacity((nrows * ncols) as usize);
        for row in 1..=nrows {
            for col in 1..=ncols {
                cells.push(GridCell {
                    id: CellId((row - 1) * ncols + col),
                    row,
                    col,
                    center: LatLon::new(
                        bbox.min_lat + (row as f64 - 0.5) * lat_step,
                        bbox.min_lon + (col as f64 - 0.5) * lon_step,
                    ),
                });
            }
        }
        let mut adjacency = vec![Vec::new(); cells.len()];
        for cell in &cells {
            let list = &mut adjacency[cell.id.index()];
            for dr in -1i64..=1 {
                for dc in -1i64..=1 {
                    if dr == 0 && dc == 0 {
                        continue;
                    }
                    let (r, c) = (cell.row as i64 + dr, cell.col as i64 + dc);
                    if r < 1 || c < 1 || r > nrows as i64 || c > ncols as i64 {
                        continue;
                    }
                    let other = &cells[((r - 1) * ncols as i64 + c - 1) as usize];
                    list.push(Edge { to: other.id, km: haversine(cell.center, other.center) });
                }
            }
            list.sort_by_key(|e| e.to);
        }
        // Use one value per undirected edge so lengths are exactly symmetric.
        for i in 0..adjacency.len() {
            for e in 0..adjacency[i].len() {
                let j = adjacency[i][e].to.index();
                if j < i {
                    let km = adjacency[j].iter().find(|x| x.to.index() == i).map(|x| x.km).unwrap();
                    adjacency[i][e].km = km;
                }
            }
        }
        RoadGraph {
            cells,
            adjacency,
            layout: Some(Layout { bbox, nrows, ncols, lat_step, lon_step }),
        }
    }

    /// A graph over cells `1..=n` with the given undirected weighted edges.
    /// Cells get placeholder coordinates and no tiling.
    pub fn from_edges(n: usize, edges: &[(u32, u32, f64)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("graph needs at least one cell".into()));
        }
        let mut adjacency = vec![Vec::new(); n];
        for &(a, b, km) in edges {
            if a == 0 || b == 0 || a as usize > n || b as usize > n {
                return Err(Error::InvalidInput(format!("edge ({a}, {b}) references a cell outside 1..={n}")));
            }
            if a == b {
                return Err(Error::InvalidInput(format!("self loop on cell {a}")));
            }
            if !(km.is_finite() && km > 0.0) {
                return Err(Error::InvalidInput(format!("edge ({a}, {b}) has non-positive length {km}")));
            }
            let (ea, eb) = (CellId(a), CellId(b));
            if adjacency[ea.index()].iter().any(|e: &Edge| e.to == eb) {
                return Err(Error::InvalidInput(format!("duplicate edge ({a}, {b})")));
            }
            adjacency[ea.index()].push(Edge { to: eb, km });
            adjacency[eb.index()].push(Edge { to: ea, km });
        }
        for list in &mut adjacency {
            list.sort_by_key(|e| e.to);
        }
        let cells = (0..n)
            .map(|i| GridCell { id: CellId::from_index(i), row: 1, col: i as u32 + 1, center: LatLon::new(0.0, 0.0) })
            .collect();
        Ok(RoadGraph { cells, adjacency, layout: None })
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// `(nrows, ncols)` for grid-built graphs.
    pub fn dims(&self) -> Option<(u32, u32)> {
        self.layout.map(|l| (l.nrows, l.ncols))
    }

    pub fn bbox(&self) -> Option<BBox> {
        self.layout.map(|l| l.bbox)
    }

    pub fn cells(&self) -> &[GridCell] {
        &self.cells
    }

    pub fn cell_ids(&self) -> impl Iterator<Item = CellId> + '_ {
        self.cells.iter().map(|c| c.id)
    }

    pub fn contains(&self, id: CellId) -> bool {
        id.0 >= 1 && id.index() < self.cells.len()
    }

    pub fn cell(&self, id: CellId) -> Result<&GridCell> {
        self.check(id)?;
        Ok(&self.cells[id.index()])
    }

    pub(crate) fn check(&self, id: CellId) -> Result<()> {
        if self.contains(id) {
            Ok(())
        } else {
            Err(Error::UnknownCell(id))
        }
    }

    /// Adjacent cells with edge lengths, sorted by id.
    pub fn edges(&self, id: CellId) -> Result<&[Edge]> {
        self.check(id)?;
        Ok(&self.adjacency[id.index()])
    }

    pub(crate) fn edges_unchecked(&self, id: CellId) -> &[Edge] {
        &self.adjacency[id.index()]
    }

    pub fn neighbors(&self, id: CellId) -> Result<Vec<CellId>> {
        Ok(self.edges(id)?.iter().map(|e| e.to).collect())
    }

    pub fn edge_length(&self, a: CellId, b: CellId) -> Option<f64> {
        if !self.contains(a) || !self.contains(b) {
            return None;
        }
        self.adjacency[a.index()]
            .binary_search_by_key(&b, |e| e.to)
            .ok()
            .map(|i| self.adjacency[a.index()][i].km)
    }

    pub fn adjacent(&self, a: CellId, b: CellId) -> bool {
        self.edge_length(a, b).is_some()
    }

    /// Sum of edge lengths along `cells`.
    pub fn path_length(&self, cells: &[CellId]) -> Result<f64> {
        if let Some(&first) = cells.first() {
            self.check(first)?;
        }
        let mut total = 0.0;
        for (i, pair) in cells.windows(2).enumerate() {
            total += self.edge_length(pair[0], pair[1]).ok_or(Error::InvalidPath { index: i })?;
        }
        Ok(total)
    }

    /// Checks adjacency of consecutive cells and that no cell repeats.
    pub fn validate_path(&self, cells: &[CellId]) -> Result<()> {
        self.path_length(cells)?;
        let mut seen = vec![false; self.len()];
        for (i, c) in cells.iter().enumerate() {
            if core::mem::replace(&mut seen[c.index()], true) {
                return Err(Error::InvalidPath { index: i.saturating_sub(1) });
            }
        }
        Ok(())
    }

    /// Minimum-length path from `from` to `to`; among equal-length paths the
    /// lexicographically smallest id sequence wins.
    pub fn shortest_path(&self, from: CellId, to: CellId) -> Result<(Path, f64)> {
        self.check(from)?;
        self.check(to)?;
        let dist = self.distances_to(to, |_| true);
        let cells = self.trace_path(from, to, &dist, |_| true).ok_or(Error::NoPath { from, to })?;
        Ok((Path::new(cells), dist[from.index()]))
    }

    /// Shortest distance from every cell to `target`, travelling only through
    /// cells for which `allowed` returns true (`target` itself is always allowed).
    /// Unreachable cells get `f64::INFINITY`.
    pub fn distances_to(&self, target: CellId, allowed: impl Fn(CellId) -> bool) -> Vec<f64> {
        let mut dist = vec![f64::INFINITY; self.len()];
        let mut heap = BinaryHeap::new();
        dist[target.index()] = 0.0;
        heap.push(Frontier { km: 0.0, cell: target });
        while let Some(Frontier { km, cell }) = heap.pop() {
            if km > dist[cell.index()] {
                continue;
            }
            for e in &self.adjacency[cell.index()] {
                if !allowed(e.to) {
                    continue;
                }
                let next = km + e.km;
                if next < dist[e.to.index()] {
                    dist[e.to.index()] = next;
                    heap.push(Frontier { km: next, cell: e.to });
                }
            }
        }
        dist
    }

    /// Rebuilds the lexicographically smallest shortest path from `from` using
    /// distances produced by [`RoadGraph::distances_to`] for `to`.
    pub fn trace_path(
        &self,
        from: CellId,
        to: CellId,
        dist: &[f64],
        allowed: impl Fn(CellId) -> bool,
    ) -> Option<Vec<CellId>> {
        if !dist[from.index()].is_finite() {
            return None;
        }
        let mut cells = vec![from];
        let mut at = from;
        while at != to {
            let here = dist[at.index()];
            let next = self.adjacency[at.index()].iter().find(|e| {
                let there = dist[e.to.index()];
                there < here
                    && (e.to == to || allowed(e.to))
                    && libm::fabs(e.km + there - here) <= TIE_EPS * here.max(1.0)
            })?;
            at = next.to;
            cells.push(at);
        }
        Some(cells)
    }

    /// Unweighted BFS depth from `from`; unreachable cells get `u32::MAX`.
    pub fn hop_distances(&self, from: CellId) -> Vec<u32> {
        let mut hops = vec![u32::MAX; self.len()];
        let mut queue = VecDeque::new();
        hops[from.index()] = 0;
        queue.push_back(from);
        while let Some(at) = queue.pop_front() {
            let h = hops[at.index()];
            for e in &self.adjacency[at.index()] {
                if hops[e.to.index()] == u32::MAX {
                    hops[e.to.index()] = h + 1;
                    queue.push_back(e.to);
                }
            }
        }
        hops
    }

    /// All cells within `k` adjacency hops of `center`.
    pub fn khop_window(&self, center: CellId, k: u32) -> Result<Window> {
        self.check(center)?;
        if k < 1 {
            return Err(Error::InvalidParameter(format!("window hop count must be >= 1, got {k}")));
        }
        let mut mask = vec![false; self.len()];
        let mut members = Vec::new();
        let mut queue = VecDeque::new();
        mask[center.index()] = true;
        queue.push_back((center, 0u32));
        while let Some((at, depth)) = queue.pop_front() {
            members.push(at);
            if depth == k {
                continue;
            }
            for e in &self.adjacency[at.index()] {
                if !mask[e.to.index()] {
                    mask[e.to.index()] = true;
                    queue.push_back((e.to, depth + 1));
                }
            }
        }
        members.sort_unstable();
        Ok(Window { center, k, members, mask })
    }

    /// Cell whose tile contains the point. Points on a border shared by two
    /// tiles go to the lower-indexed one; points outside the box give `None`.
    /// Always `None` for graphs without a tiling.
    pub fn assign_cell(&self, p: LatLon) -> Option<CellId> {
        let layout = self.layout?;
        if !p.is_valid() || !layout.bbox.contains(p) {
            return None;
        }
        let tile = |offset: f64, step: f64, count: u32| -> u32 {
            let t = offset / step;
            let i = libm::ceil(t) as i64 - 1;
            i.clamp(0, count as i64 - 1) as u32
        };
        let row = tile(p.lat - layout.bbox.min_lat, layout.lat_step, layout.nrows);
        let col = tile(p.lon - layout.bbox.min_lon, layout.lon_step, layout.ncols);
        Some(CellId(row * layout.ncols + col + 1))
    }
}

#[derive(Clone, Copy, Debug)]
struct Frontier {
    km: f64,
    cell: CellId,
}

impl PartialEq for Frontier {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Frontier {}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Frontier {
    // Min-heap on distance.
    fn cmp(&self, other: &Self) -> Ordering {
        other.km.total_cmp(&self.km).then_with(|| other.cell.cmp(&self.cell))
    }
}

/// An ordered sequence of cells.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Path {
    cells: Vec<CellId>,
}

impl Path {
    pub fn new(cells: Vec<CellId>) -> Self {
        Path { cells }
    }

    pub fn from_ids(ids: &[u32]) -> Self {
        Path { cells: ids.iter().map(|&i| CellId(i)).collect() }
    }

    pub fn cells(&self) -> &[CellId] {
        &self.cells
    }

    pub fn position(&self, id: CellId) -> Option<usize> {
        self.cells.iter().position(|&c| c == id)
    }

    pub fn into_vec(self) -> Vec<CellId> {
        self.cells
    }
}

impl Deref for Path {
    type Target = [CellId];

    fn deref(&self) -> &[CellId] {
        &self.cells
    }
}

impl From<Vec<CellId>> for Path {
    fn from(cells: Vec<CellId>) -> Self {
        Path { cells }
    }
}

/// Cells within `k` hops of `center`.
#[derive(Clone, Debug, PartialEq)]
pub struct Window {
    pub center: CellId,
    pub k: u32,
    members: Vec<CellId>,
    mask: Vec<bool>,
}

impl Window {
    /// Sorted by id.
    pub fn members(&self) -> &[CellId] {
        &self.members
    }

    pub fn contains(&self, id: CellId) -> bool {
        self.mask.get(id.index()).copied().unwrap_or(false)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}
