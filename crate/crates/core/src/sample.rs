use serde::Serialize;

use crate::error::{Error, Result};

/// Paired observations (x_i, y_i).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sample2D {
    pairs: Vec<(f64, f64)>,
}

impl Sample2D {
    pub fn new(pairs: Vec<(f64, f64)>) -> Result<Self> {
        if let Some(i) = pairs
            .iter()
            .position(|(x, y)| !x.is_finite() || !y.is_finite())
        {
            return Err(Error::Input(format!("observation {i} is not finite")));
        }
        Ok(Self { pairs })
    }

    pub fn from_columns(xs: &[f64], ys: &[f64]) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::Input(format!(
                "column lengths differ ({} vs {})",
                xs.len(),
                ys.len()
            )));
        }
        Self::new(xs.iter().copied().zip(ys.iter().copied()).collect())
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[(f64, f64)] {
        &self.pairs
    }

    pub fn xs(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.0).collect()
    }

    pub fn ys(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.1).collect()
    }

    /// The sample with the roles of x and y exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            pairs: self.pairs.iter().map(|&(x, y)| (y, x)).collect(),
        }
    }

    pub fn require_len(&self, min: usize) -> Result<()> {
        if self.pairs.len() < min {
            Err(Error::DegenerateSample(format!(
                "need at least {min} observations, got {}",
                self.pairs.len()
            )))
        } else {
            Ok(())
        }
    }
}
