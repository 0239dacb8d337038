use alloc::string::String;
use core::fmt;

use crate::grid::CellId;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Malformed input data (degenerate bounding box, bad coordinates, ...).
    InvalidInput(String),
    /// A parameter outside its allowed range (k < 1, detour < 1, ...).
    InvalidParameter(String),
    UnknownCell(CellId),
    NoPath { from: CellId, to: CellId },
    /// Consecutive cells at `index` and `index + 1` are not adjacent, or a cell repeats.
    InvalidPath { index: usize },
    /// An order's endpoints are missing from a plan, or appear in the wrong order.
    InvalidPlan(String),
    WindowTooLarge { members: usize, cap: usize },
    EmptyModel,
    EmptyTestSet,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidInput(msg) => write!(f, "invalid input: {msg}"),
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::UnknownCell(id) => write!(f, "unknown cell {id}"),
            Error::NoPath { from, to } => write!(f, "no path from {from} to {to}"),
            Error::InvalidPath { index } => {
                write!(f, "invalid path: cells at positions {index} and {} are not a valid step", index + 1)
            }
            Error::InvalidPlan(msg) => write!(f, "invalid plan: {msg}"),
            Error::WindowTooLarge { members, cap } => {
                write!(f, "window has {members} cells, brute force is capped at {cap}")
            }
            Error::EmptyModel => f.write_str("no usable trip records to build a demand model"),
            Error::EmptyTestSet => f.write_str("test order set is empty"),
        }
    }
}

impl core::error::Error for Error {}
