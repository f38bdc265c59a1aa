//! Variable splits `z = (x, y)` for the two fibration maps.

use serde::{Deserialize, Serialize};

use super::poly::IntPolynomial;
use crate::error::{Error, Result};

/// Which fibration the split describes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FibrationMode {
    /// Quadric fibres over the y-block.
    Pi,
    /// Linear fibres over the y-block.
    PiPrime,
}

impl std::str::FromStr for FibrationMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pi" => Ok(FibrationMode::Pi),
            "pi_prime" => Ok(FibrationMode::PiPrime),
            _ => Err(Error::InvalidSplit(format!("unknown mode {s}"))),
        }
    }
}

/// Partition of the variable indices `0..n` into an x-block and a y-block.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableSplit {
    pub x_indices: Vec<usize>,
    pub y_indices: Vec<usize>,
    pub mode: FibrationMode,
}

impl VariableSplit {
    pub fn new(x_indices: Vec<usize>, y_indices: Vec<usize>, mode: FibrationMode) -> Self {
        VariableSplit { x_indices, y_indices, mode }
    }

    /// First `nx` variables form the x-block, the rest the y-block.
    pub fn leading(nx: usize, n: usize, mode: FibrationMode) -> Self {
        VariableSplit::new((0..nx).collect(), (nx..n).collect(), mode)
    }

    pub fn n(&self) -> usize {
        self.x_indices.len() + self.y_indices.len()
    }

    /// Check that the blocks partition `0..n` and, for the linear-fibre
    /// mode, that `c` has total x-degree at most one.
    pub fn validate(&self, c: &IntPolynomial) -> Result<()> {
        let n = c.num_vars();
        let mut seen = vec![false; n];
        for &i in self.x_indices.iter().chain(&self.y_indices) {
            if i >= n {
                return Err(Error::InvalidSplit(format!("index {i} out of range for n = {n}")));
            }
            if seen[i] {
                return Err(Error::InvalidSplit(format!("index {i} listed twice")));
            }
            seen[i] = true;
        }
        if let Some(i) = seen.iter().position(|&s| !s) {
            return Err(Error::InvalidSplit(format!("index {i} not assigned")));
        }
        if self.mode == FibrationMode::PiPrime && c.degree_in(&self.x_indices) > 1 {
            return Err(Error::InvalidSplit(
                "linear-fibre split requires total x-degree at most one".into(),
            ));
        }
        Ok(())
    }
}
