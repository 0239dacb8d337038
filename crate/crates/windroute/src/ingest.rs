//! Trip CSV ingestion.
//!
//! Expected columns (any order, extra columns ignored):
//! `pickup_datetime,pickup_lat,pickup_lon,dropoff_lat,dropoff_lon,passenger_count`.
//! The column names of the public New York yellow-cab exports
//! (`tpep_pickup_datetime`, `pickup_latitude`, ...) are accepted too.

use std::io::Read;
use std::path::Path;

use chrono::{DateTime, NaiveDateTime};
use log::{debug, warn};
use windroute_core::grid::LatLon;
use windroute_core::{Timestamp, TripRecord};

use crate::{Error, Result};

const COLUMNS: [(&str, &[&str]); 6] = [
    ("pickup_datetime", &["tpep_pickup_datetime", "lpep_pickup_datetime", "pickup_time"]),
    ("pickup_lat", &["pickup_latitude"]),
    ("pickup_lon", &["pickup_longitude"]),
    ("dropoff_lat", &["dropoff_latitude"]),
    ("dropoff_lon", &["dropoff_longitude"]),
    ("passenger_count", &["passengers"]),
];

/// Share of malformed rows above which a file is rejected outright.
pub const MAX_MALFORMED_SHARE: f64 = 0.5;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Ingested {
    pub records: Vec<TripRecord>,
    pub rows: usize,
    pub malformed: usize,
}

pub fn read_trips_file(path: &Path) -> Result<Ingested> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_trips(file, path)
}

/// `origin` only labels errors.
pub fn read_trips<R: Read>(reader: R, origin: &Path) -> Result<Ingested> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| csv_error(origin, e))?.clone();
    let mut idx = [0usize; 6];
    for (slot, (name, aliases)) in idx.iter_mut().zip(COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| {
                let h = h.trim_start_matches('\u{feff}').to_ascii_lowercase();
                h == name || aliases.contains(&h.as_str())
            })
            .ok_or_else(|| Error::format(origin, format!("missing column '{name}' in header")))?;
    }

    let mut out = Ingested::default();
    for (line, row) in rdr.records().enumerate() {
        out.rows += 1;
        let parsed = row.ok().and_then(|r| {
            let field = |i: usize| r.get(idx[i]);
            let num = |i: usize| field(i)?.parse::<f64>().ok();
            let rec = TripRecord {
                pickup_time: parse_time(field(0)?)?,
                pickup: LatLon::new(num(1)?, num(2)?),
                dropoff: LatLon::new(num(3)?, num(4)?),
                passenger_count: field(5)?.parse().ok()?,
            };
            rec.is_valid().then_some(rec)
        });
        match parsed {
            Some(rec) => out.records.push(rec),
            None => {
                out.malformed += 1;
                debug!("{}: skipping malformed row {}", origin.display(), line + 2);
            }
        }
    }
    if out.rows > 0 && out.malformed as f64 > MAX_MALFORMED_SHARE * out.rows as f64 {
        return Err(Error::format(origin, format!("{} of {} rows are malformed", out.malformed, out.rows)));
    }
    if out.malformed > 0 {
        warn!("{}: skipped {} malformed rows of {}", origin.display(), out.malformed, out.rows);
    }
    Ok(out)
}

/// ISO-8601 date and time, `T` or space separated, optional fraction and
/// offset. Timestamps keep their wall-clock reading (an offset is dropped), so
/// slots of the day follow local time.
pub fn parse_time(s: &str) -> Option<Timestamp> {
    let s = s.trim();
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Some(t.naive_local().and_utc().timestamp());
    }
    for fmt in ["%Y-%m-%d %H:%M:%S%.f", "%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M", "%Y-%m-%dT%H:%M"] {
        if let Ok(t) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(t.and_utc().timestamp());
        }
    }
    None
}

fn csv_error(origin: &Path, e: csv::Error) -> Error {
    match e.kind() {
        csv::ErrorKind::Io(_) => match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(origin, io),
            _ => unreachable!(),
        },
        _ => Error::format(origin, e.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read(s: &str) -> Result<Ingested> {
        read_trips(s.as_bytes(), Path::new("mem.csv"))
    }

    #[test]
    fn times() {
        assert_eq!(parse_time("1970-01-02 00:00:01"), Some(86_401));
        assert_eq!(parse_time("1970-01-02T00:00:01"), Some(86_401));
        assert_eq!(parse_time("1970-01-02T00:00:01.500"), Some(86_401));
        assert_eq!(parse_time("1970-01-02T00:00:01Z"), Some(86_401));
        // The wall clock is kept.
        assert_eq!(parse_time("1970-01-02T00:00:01-05:00"), Some(86_401));
        assert_eq!(parse_time("2016-01-01 00:00"), Some(1_451_606_400));
        assert_eq!(parse_time("01/02/2016 10:00"), None);
    }

    #[test]
    fn reads_rows_in_any_column_order() {
        let csv = "passenger_count,pickup_datetime,pickup_lat,pickup_lon,dropoff_lat,dropoff_lon,fare\n\
                   2,2016-01-01 00:00:00,40.7,-74.0,40.8,-73.9,7.5\n";
        let got = read(csv).unwrap();
        assert_eq!(got.rows, 1);
        assert_eq!(got.records[0].passenger_count, 2);
        assert_eq!(got.records[0].pickup, LatLon::new(40.7, -74.0));
    }

    #[test]
    fn taxi_export_headers() {
        let csv = "VendorID,tpep_pickup_datetime,passenger_count,pickup_longitude,pickup_latitude,dropoff_longitude,dropoff_latitude\n\
                   1,2016-01-01 00:00:00,1,-73.99,40.73,-73.98,40.75\n";
        let got = read(csv).unwrap();
        assert_eq!(got.records[0].pickup, LatLon::new(40.73, -73.99));
    }

    #[test]
    fn missing_header_is_a_format_error() {
        let csv = "2016-01-01 00:00:00,40.7,-74.0,40.8,-73.9,1\n";
        assert!(matches!(read(csv), Err(Error::Format { .. })));
    }

    #[test]
    fn malformed_share() {
        let head = "pickup_datetime,pickup_lat,pickup_lon,dropoff_lat,dropoff_lon,passenger_count\n";
        let good = "2016-01-01 00:00:00,40.7,-74.0,40.8,-73.9,1\n";
        let bad = "yesterday,40.7,-74.0,40.8,-73.9,1\n";
        let zero = "2016-01-01 00:00:00,40.7,-74.0,40.8,-73.9,0\n";
        let half = format!("{head}{good}{bad}");
        let got = read(&half).unwrap();
        assert_eq!((got.rows, got.malformed, got.records.len()), (2, 1, 1));
        let most = format!("{head}{good}{bad}{zero}");
        assert!(matches!(read(&most), Err(Error::Format { .. })));
        assert_eq!(read(head).unwrap().rows, 0);
    }
}
