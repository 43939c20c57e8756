//! Piecewise-linear dependency tables and the links that use them to drive
//! one variable's setpoint from another variable.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TableError {
    #[error("interpolation table needs at least 2 points, got {0}")]
    TooShort(usize),
    #[error("interpolation table x values must be strictly increasing (at point {0})")]
    NotMonotone(usize),
    #[error("interpolation table has a non-finite value at point {0}")]
    NonFinite(usize),
}

/// Points strictly increasing in x. Lookups outside the table clamp to the
/// endpoint y values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(f64, f64)>", into = "Vec<(f64, f64)>")]
pub struct InterpolationTable {
    points: Vec<(f64, f64)>,
}

impl InterpolationTable {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self, TableError> {
        if points.len() < 2 {
            return Err(TableError::TooShort(points.len()));
        }
        for (i, &(x, y)) in points.iter().enumerate() {
            if !x.is_finite() || !y.is_finite() {
                return Err(TableError::NonFinite(i));
            }
            if i > 0 && !(points[i - 1].0 < x) {
                return Err(TableError::NotMonotone(i));
            }
        }
        Ok(InterpolationTable { points })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn interpolate(&self, x: f64) -> f64 {
        let pts = &self.points;
        let (x0, y0) = pts[0];
        let (xn, yn) = pts[pts.len() - 1];
        if x <= x0 {
            return y0;
        }
        if x >= xn {
            return yn;
        }
        // first knot with knot.x > x; 1 <= hi <= len-1 here
        let hi = pts.partition_point(|&(kx, _)| kx <= x);
        let (xa, ya) = pts[hi - 1];
        let (xb, yb) = pts[hi];
        let y = ya + (yb - ya) * ((x - xa) / (xb - xa));
        // keeps rounding from stepping past a knot, so monotone tables stay monotone
        y.clamp(ya.min(yb), ya.max(yb))
    }

    /// (min y, max y) over the knots, which bounds every interpolated value.
    pub fn y_range(&self) -> (f64, f64) {
        self.points
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(_, y)| {
                (lo.min(y), hi.max(y))
            })
    }
}

impl TryFrom<Vec<(f64, f64)>> for InterpolationTable {
    type Error = TableError;

    fn try_from(points: Vec<(f64, f64)>) -> Result<Self, Self::Error> {
        InterpolationTable::new(points)
    }
}

impl From<InterpolationTable> for Vec<(f64, f64)> {
    fn from(t: InterpolationTable) -> Self {
        t.points
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Field {
    #[serde(rename = "PV")]
    Pv,
    #[serde(rename = "SP")]
    Sp,
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Field::Pv => "PV",
            Field::Sp => "SP",
        })
    }
}

/// `(process, symbol)` naming a variable anywhere in the network.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VarId {
    pub process: String,
    pub symbol: String,
}

impl VarId {
    pub fn new(process: impl Into<String>, symbol: impl Into<String>) -> Self {
        VarId {
            process: process.into(),
            symbol: symbol.into(),
        }
    }
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.process, self.symbol)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkSource {
    pub process: String,
    pub symbol: String,
    pub field: Field,
}

/// `target.SP = table(source.field)`. The target field is always the
/// setpoint; agents never write process values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DependencyLink {
    pub source: LinkSource,
    pub target: VarId,
    pub table: InterpolationTable,
}

impl DependencyLink {
    pub fn source_id(&self) -> VarId {
        VarId::new(&self.source.process, &self.source.symbol)
    }

    pub fn is_local(&self) -> bool {
        self.source.process == self.target.process
    }

    /// Target setpoint for a source value, clamped into the target limits.
    pub fn target_setpoint(&self, source_value: f64, low: f64, high: f64) -> f64 {
        self.table.interpolate(source_value).clamp(low, high)
    }
}
