use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The two conditional flight families, distinguished by the symmetric
/// Dirichlet law of the displacement durations.
///
/// * `X`: parameters `(d-1, ..., d-1)`, defined for `d >= 2`.
/// * `Y`: parameters `(d/2-1, ..., d/2-1)`, defined for `d >= 3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    X,
    Y,
}

impl Family {
    pub fn min_dimension(self) -> usize {
        match self {
            Family::X => 2,
            Family::Y => 3,
        }
    }

    pub fn check_dimension(self, d: usize) -> Result<()> {
        if d < 2 {
            return Err(Error::InvalidDimension(d));
        }
        if d < self.min_dimension() {
            return Err(Error::param(
                "d",
                format!(
                    "family {self} requires d >= {}, got {d}",
                    self.min_dimension()
                ),
            ));
        }
        Ok(())
    }

    /// Common Dirichlet parameter of the duration law.
    pub fn dirichlet_shape(self, d: usize) -> f64 {
        let d = d as f64;
        match self {
            Family::X => d - 1.0,
            Family::Y => d / 2.0 - 1.0,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::X => "X",
            Family::Y => "Y",
        })
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "X" | "x" => Ok(Family::X),
            "Y" | "y" => Ok(Family::Y),
            other => Err(Error::UnsupportedModel(format!(
                "unknown conditional family `{other}` (expected X or Y)"
            ))),
        }
    }
}
