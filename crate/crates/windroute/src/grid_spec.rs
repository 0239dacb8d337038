use std::fmt;
use std::str::FromStr;

use windroute_core::{BBox, RoadGraph};

use crate::{Error, Result};

/// Grid cell edge used when none is configured.
pub const DEFAULT_CELL_KM: f64 = 2.5;

/// How to build the road graph: tile a bounding box, or lay out a synthetic
/// `rows x cols` grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GridSpec {
    BBox(BBox),
    Synthetic { rows: u32, cols: u32 },
}

impl GridSpec {
    pub fn build(&self, cell_km: f64) -> Result<RoadGraph> {
        Ok(match *self {
            GridSpec::BBox(b) => RoadGraph::build_grid(b, cell_km)?,
            GridSpec::Synthetic { rows, cols } => RoadGraph::synthetic(rows, cols, cell_km)?,
        })
    }
}

impl FromStr for GridSpec {
    type Err = Error;

    /// `ROWSxCOLS` or `min_lat,min_lon,max_lat,max_lon`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some((r, c)) = s.split_once(['x', 'X']) {
            let parse = |v: &str| v.trim().parse::<u32>().map_err(|_| Error::Usage(format!("bad grid size '{s}'")));
            return Ok(GridSpec::Synthetic { rows: parse(r)?, cols: parse(c)? });
        }
        let parts: Vec<f64> = s
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Usage(format!("bad grid '{s}': expected ROWSxCOLS or min_lat,min_lon,max_lat,max_lon")))?;
        match parts[..] {
            [a, b, c, d] => Ok(GridSpec::BBox(BBox::new(a, b, c, d)?)),
            _ => Err(Error::Usage(format!("bad grid '{s}': expected four coordinates"))),
        }
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GridSpec::BBox(b) => write!(f, "{},{},{},{}", b.min_lat, b.min_lon, b.max_lat, b.max_lon),
            GridSpec::Synthetic { rows, cols } => write!(f, "{rows}x{cols}"),
        }
    }
}
