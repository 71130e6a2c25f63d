//! Tensor-product grids of uniform per-axis partitions.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Axis {
    pub fn new(min: f64, max: f64, points: usize) -> Self {
        Self { min, max, points }
    }

    pub fn step(&self) -> f64 {
        if self.points < 2 {
            0.0
        } else {
            (self.max - self.min) / (self.points - 1) as f64
        }
    }

    pub fn coord(&self, k: usize) -> f64 {
        if k + 1 == self.points {
            self.max
        } else {
            self.min + k as f64 * self.step()
        }
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.points).map(|k| self.coord(k)).collect()
    }
}

/// Flat storage is row-major with axis 0 slowest.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Grid {
    pub axes: Vec<Axis>,
}

impl Grid {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::InvalidGrid("grid needs at least one axis".into()));
        }
        for (i, a) in axes.iter().enumerate() {
            if !(a.min.is_finite() && a.max.is_finite()) {
                return Err(Error::InvalidGrid(format!("axis {i} has non-finite bounds")));
            }
            match a.points {
                0 => return Err(Error::InvalidGrid(format!("axis {i} has no points"))),
                1 if a.min != a.max => {
                    return Err(Error::InvalidGrid(format!("axis {i} has one point but min != max")))
                }
                1 => {}
                _ if a.max <= a.min => return Err(Error::InvalidGrid(format!("axis {i} needs max > min"))),
                _ => {}
            }
        }
        Ok(Self { axes })
    }

    /// The same `[min, max]` with `points` samples on every one of `n` axes.
    pub fn cube(n: usize, min: f64, max: f64, points: usize) -> Result<Self> {
        Self::new(vec![Axis::new(min, max, points); n])
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.points).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.points).collect()
    }

    pub fn step(&self, axis: usize) -> f64 {
        self.axes[axis].step()
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        for d in (0..self.dim()).rev() {
            let m = self.axes[d].points;
            idx[d] = flat % m;
            flat /= m;
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.axes).fold(0, |acc, (&i, a)| acc * a.points + i)
    }

    /// Flat offset between neighbours along `axis`.
    pub fn stride(&self, axis: usize) -> usize {
        self.axes[axis + 1..].iter().map(|a| a.points).product()
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat).iter().zip(&self.axes).map(|(&k, a)| a.coord(k)).collect()
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    /// Halve every step: `points -> 2 points - 1`.
    pub fn refined(&self) -> Self {
        Self {
            axes: self
                .axes
                .iter()
                .map(|a| Axis::new(a.min, a.max, if a.points > 1 { 2 * a.points - 1 } else { 1 }))
                .collect(),
        }
    }
}
