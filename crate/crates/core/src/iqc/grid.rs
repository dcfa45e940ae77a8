use std::ops::Deref;

use serde::{Deserialize, Serialize};

use super::IqcError;
use crate::model::Frequency;

/// Strictly increasing, nonempty list of analysis frequencies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Frequency>", into = "Vec<Frequency>")]
pub struct FrequencyGrid {
    points: Vec<Frequency>,
}

impl FrequencyGrid {
    pub fn new(points: Vec<Frequency>) -> Result<Self, IqcError> {
        if points.is_empty() {
            return Err(IqcError::Grid("frequency grid is empty".into()));
        }
        for p in &points {
            if let Frequency::Finite(w) = p {
                if !(w.is_finite() && *w >= 0.0) {
                    return Err(IqcError::Grid(format!("invalid grid frequency {w}")));
                }
            }
        }
        for pair in points.windows(2) {
            if !(pair[0] < pair[1]) {
                return Err(IqcError::Grid(format!(
                    "grid is not strictly increasing at {} -> {}",
                    pair[0], pair[1]
                )));
            }
        }
        Ok(Self { points })
    }

    /// `points` logarithmically spaced frequencies in `[min, max]`, optionally
    /// preceded by `0` and followed by `∞`.
    pub fn logspace(min: f64, max: f64, points: usize, include_zero: bool, include_inf: bool) -> Result<Self, IqcError> {
        if points > 0 && !(min > 0.0 && max >= min && max.is_finite()) {
            return Err(IqcError::Grid(format!("logspace needs 0 < min <= max, got [{min}, {max}]")));
        }
        let mut v = Vec::with_capacity(points + 2);
        if include_zero {
            v.push(Frequency::Finite(0.0));
        }
        let (lo, hi) = (min.log10(), max.log10());
        for k in 0..points {
            let t = if points == 1 { 0.0 } else { k as f64 / (points - 1) as f64 };
            v.push(Frequency::Finite(10f64.powf(lo + t * (hi - lo))));
        }
        if include_inf {
            v.push(Frequency::Infinite);
        }
        if points == 1 && min != max {
            return Err(IqcError::Grid("a single logspace point needs min == max".into()));
        }
        Self::new(v)
    }

    pub fn points(&self) -> &[Frequency] {
        &self.points
    }
}

impl Deref for FrequencyGrid {
    type Target = [Frequency];
    fn deref(&self) -> &[Frequency] {
        &self.points
    }
}

impl TryFrom<Vec<Frequency>> for FrequencyGrid {
    type Error = IqcError;
    fn try_from(v: Vec<Frequency>) -> Result<Self, IqcError> {
        Self::new(v)
    }
}

impl From<FrequencyGrid> for Vec<Frequency> {
    fn from(g: FrequencyGrid) -> Self {
        g.points
    }
}
