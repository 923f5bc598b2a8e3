use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A trajectory sampled at strictly increasing times. Values are stored
/// row-major, `dim` entries per time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathGrid {
    times: Vec<f64>,
    values: Vec<f64>,
    dim: usize,
}

impl PathGrid {
    pub fn new(times: Vec<f64>, values: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Grid("path dimension must be positive".into()));
        }
        if times.is_empty() {
            return Err(Error::Grid("path needs at least one time".into()));
        }
        if values.len() != times.len() * dim {
            return Err(Error::Grid(format!(
                "{} values for {} times of dimension {dim}",
                values.len(),
                times.len()
            )));
        }
        check_increasing(&times)?;
        Ok(Self { times, values, dim })
    }

    pub fn scalar(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Self::new(times, values, 1)
    }

    pub(crate) fn from_raw(times: Vec<f64>, values: Vec<f64>, dim: usize) -> Self {
        debug_assert_eq!(values.len(), times.len() * dim);
        Self { times, values, dim }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn start_time(&self) -> f64 {
        self.times[0]
    }

    pub fn end_time(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    /// Scalar value of a one-dimensional path, or the Euclidean norm of a
    /// vector-valued one. Barrier events and weights read paths through this.
    pub fn track(&self, i: usize) -> f64 {
        if self.dim == 1 {
            self.values[i]
        } else {
            norm(self.point(i))
        }
    }

    pub fn last_track(&self) -> f64 {
        self.track(self.len() - 1)
    }

    /// The path of norms.
    pub fn radial(&self) -> PathGrid {
        let values = (0..self.len()).map(|i| norm(self.point(i))).collect();
        PathGrid::from_raw(self.times.clone(), values, 1)
    }

    pub fn tracks(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        (0..self.len()).map(move |i| (self.times[i], self.track(i)))
    }

    pub fn min_track(&self) -> f64 {
        (0..self.len())
            .map(|i| self.track(i))
            .fold(f64::INFINITY, f64::min)
    }
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    if x.len() == 1 {
        x[0].abs()
    } else {
        x.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

pub(crate) fn check_increasing(times: &[f64]) -> Result<()> {
    if times.iter().any(|t| !t.is_finite()) {
        return Err(Error::Grid("non-finite time".into()));
    }
    if let Some(w) = times.windows(2).find(|w| w[1] <= w[0]) {
        return Err(Error::Grid(format!(
            "times must be strictly increasing ({} then {})",
            w[0], w[1]
        )));
    }
    Ok(())
}

/// `0, h, 2h, …` up to and including `horizon`; the last step may be short.
/// Grid times are computed as `k as f64 * h` everywhere in the crate so that
/// trees and single paths share bit-identical time points.
pub fn uniform_grid(horizon: f64, step: f64) -> Result<Vec<f64>> {
    if !(horizon >= 0.0) || !horizon.is_finite() {
        return Err(Error::Grid(format!(
            "horizon {horizon} must be finite and >= 0"
        )));
    }
    if !(step > 0.0) {
        return Err(Error::Grid(format!("step {step} must be positive")));
    }
    let mut out = vec![0.0];
    if horizon == 0.0 {
        return Ok(out);
    }
    let mut k = 1u64;
    loop {
        let t = k as f64 * step;
        if horizon - t <= 1e-9 * step {
            break;
        }
        out.push(t);
        k += 1;
    }
    out.push(horizon);
    Ok(out)
}
