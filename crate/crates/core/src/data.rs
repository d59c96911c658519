//! Eulerian initial data: piecewise-constant density and velocity on `[a0, b0]`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::riemann::LagState;
use crate::tracker::LagCell;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DataCell {
    pub len: f64,
    pub rho: f64,
    pub v: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitialData {
    pub a0: f64,
    pub b0: f64,
    pub cells: Vec<DataCell>,
    /// Mean velocity removed by `normalize`.
    #[serde(default)]
    pub v_bar: f64,
}

impl InitialData {
    pub fn new(a0: f64, cells: Vec<DataCell>) -> Result<Self> {
        let b0 = a0 + cells.iter().map(|c| c.len).sum::<f64>();
        let data = Self { a0, b0, cells, v_bar: 0.0 };
        data.validate()?;
        Ok(data)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let data: InitialData = serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        data.validate()?;
        Ok(data)
    }

    pub fn validate(&self) -> Result<()> {
        if self.cells.is_empty() {
            return Err(Error::EmptySupport);
        }
        if !(self.a0.is_finite() && self.b0.is_finite() && self.a0 < self.b0) {
            return Err(Error::Schema(format!("need a0 < b0, got [{}, {}]", self.a0, self.b0)));
        }
        for c in &self.cells {
            if !(c.len > 0.0 && c.len.is_finite()) {
                return Err(Error::Schema(format!("cell length must be positive, got {}", c.len)));
            }
            if !(c.rho > 0.0 && c.rho.is_finite()) {
                return Err(Error::NonPositiveDensity(c.rho));
            }
            if !c.v.is_finite() {
                return Err(Error::Schema(format!("non-finite velocity {}", c.v)));
            }
        }
        let total: f64 = self.cells.iter().map(|c| c.len).sum();
        let width = self.b0 - self.a0;
        if (total - width).abs() > 1e-9 * width.max(1.0) {
            return Err(Error::Schema(format!("cell lengths sum to {total}, support has length {width}")));
        }
        Ok(())
    }

    pub fn mass(&self) -> f64 {
        self.cells.iter().map(|c| c.rho * c.len).sum()
    }

    pub fn momentum(&self) -> f64 {
        self.cells.iter().map(|c| c.rho * c.v * c.len).sum()
    }

    pub fn mean_velocity(&self) -> f64 {
        self.momentum() / self.mass()
    }

    pub fn u_tilde_0(&self) -> f64 {
        1.0 / self.cells[0].rho
    }

    pub fn u_tilde_m(&self) -> f64 {
        1.0 / self.cells[self.cells.len() - 1].rho
    }

    /// Subtracts the mean velocity; the removed value accumulates in `v_bar`.
    pub fn normalize(&self) -> Self {
        let v_bar = self.mean_velocity();
        let mut out = self.clone();
        if v_bar == 0.0 {
            return out;
        }
        for c in &mut out.cells {
            c.v -= v_bar;
        }
        out.v_bar += v_bar;
        out
    }

    /// The same data in mass coordinates: cell masses and `(1/rho, v)`.
    pub fn to_lagrangian(&self) -> Vec<LagCell> {
        self.cells.iter().map(|c| LagCell { mass: c.rho * c.len, state: LagState::new(1.0 / c.rho, c.v) }).collect()
    }
}

pub fn load_initial_data(path: impl AsRef<Path>) -> Result<InitialData> {
    let text = std::fs::read_to_string(path)?;
    InitialData::from_json(&text)
}
