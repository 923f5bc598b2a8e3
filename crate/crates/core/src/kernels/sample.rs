use rand::Rng;
use rand_distr::StandardNormal;

use super::path::{check_increasing, norm, PathGrid};
use crate::error::{domain, Error, Result};

#[inline]
pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Grid("empty time grid".into()));
    }
    if grid[0] != 0.0 {
        return Err(Error::Grid(format!(
            "grid must start at 0, starts at {}",
            grid[0]
        )));
    }
    check_increasing(grid)
}

/// Brownian motion from `x0` (any dimension) observed on `grid`.
pub fn sample_bm_path<R: Rng + ?Sized>(x0: &[f64], grid: &[f64], rng: &mut R) -> Result<PathGrid> {
    check_grid(grid)?;
    if x0.is_empty() {
        return Err(domain("starting point", "needs at least one coordinate"));
    }
    let dim = x0.len();
    let mut values = Vec::with_capacity(grid.len() * dim);
    values.extend_from_slice(x0);
    for w in grid.windows(2) {
        let sd = (w[1] - w[0]).sqrt();
        let base = values.len() - dim;
        for k in 0..dim {
            let next = values[base + k] + sd * standard_normal(rng);
            values.push(next);
        }
    }
    Ok(PathGrid::from_raw(grid.to_vec(), values, dim))
}

/// Brownian bridge from `x` at time 0 to `y` at time `horizon`, sampled
/// exactly at the grid points by sequential Gaussian conditioning.
pub fn sample_bridge<R: Rng + ?Sized>(
    x: f64,
    y: f64,
    horizon: f64,
    grid: &[f64],
    rng: &mut R,
) -> Result<PathGrid> {
    if !(horizon > 0.0) {
        return Err(domain(
            "bridge horizon",
            format!("T = {horizon} must be positive"),
        ));
    }
    check_grid(grid)?;
    let last = grid[grid.len() - 1];
    if (last - horizon).abs() > 1e-12 * horizon.max(1.0) {
        return Err(Error::Grid(format!(
            "grid ends at {last}, bridge needs {horizon}"
        )));
    }
    let mut values = vec![0.0; grid.len()];
    fill_bridge(x, y, grid, &mut values, rng);
    Ok(PathGrid::from_raw(grid.to_vec(), values, 1))
}

/// Writes a bridge on `grid` (ending at its last point) into `out`.
pub(crate) fn fill_bridge<R: Rng + ?Sized>(
    x: f64,
    y: f64,
    grid: &[f64],
    out: &mut [f64],
    rng: &mut R,
) {
    let n = grid.len();
    let horizon = grid[n - 1];
    out[0] = x;
    for i in 0..n - 1 {
        if i + 1 == n - 1 {
            out[n - 1] = y;
            break;
        }
        let remaining = horizon - grid[i];
        let dt = grid[i + 1] - grid[i];
        let mean = out[i] + (y - out[i]) * dt / remaining;
        let var = dt * (horizon - grid[i + 1]) / remaining;
        out[i + 1] = mean + var.sqrt() * standard_normal(rng);
    }
}

/// Radial part of a `d`-dimensional Brownian motion started at
/// `(x0, 0, …, 0)`. Marginals at the grid points are exact.
pub fn sample_bessel_path<R: Rng + ?Sized>(
    d: u32,
    x0: f64,
    grid: &[f64],
    rng: &mut R,
) -> Result<PathGrid> {
    if d == 0 {
        return Err(domain("dimension", "d must be at least 1"));
    }
    if !(x0 >= 0.0) {
        return Err(domain("Bessel start", format!("x0 = {x0} must be >= 0")));
    }
    check_grid(grid)?;
    let mut pos = vec![0.0; d as usize];
    pos[0] = x0;
    let mut values = Vec::with_capacity(grid.len());
    values.push(x0);
    for w in grid.windows(2) {
        let sd = (w[1] - w[0]).sqrt();
        for p in pos.iter_mut() {
            *p += sd * standard_normal(rng);
        }
        values.push(norm(&pos));
    }
    Ok(PathGrid::from_raw(grid.to_vec(), values, 1))
}

/// Exponential clock by inversion, `−log(1 − U) / rate`.
pub fn sample_branch_time<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> Result<f64> {
    if !(rate > 0.0) || !rate.is_finite() {
        return Err(domain(
            "branching rate",
            format!("rate = {rate} must be positive"),
        ));
    }
    Ok(exp_clock(rate, rng))
}

#[inline]
pub(crate) fn exp_clock<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.random();
    -(-u).ln_1p() / rate
}
