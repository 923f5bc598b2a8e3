//! Many-to-one and many-to-two identities checked by Monte Carlo.

use super::engine::{population_at, SimConfig, DEFAULT_POPULATION_CAP};
use super::tree::simulate_tree;
use crate::error::{Error, Result};
use crate::girsanov::PathFunctional;
use crate::kernels::{sample_bm_path, uniform_grid};
use crate::mc::McPlan;
use crate::model::ModelParams;
use crate::stats::TailEstimate;

fn growth(horizon: f64) -> Result<f64> {
    let g = horizon.exp();
    if !g.is_finite() {
        return Err(Error::Overflow(format!("e^T for T = {horizon}")));
    }
    Ok(g)
}

/// `E Σ_{v ∈ N_T} f(X^v)` by whole trees (`lhs`) and `e^T E f(B)` by single
/// Brownian paths (`rhs`). Both sides see `f` on the same uniform grid.
pub fn many_to_one_check(
    f: &PathFunctional<'_>,
    model: ModelParams,
    x0: &[f64],
    horizon: f64,
    grid_step: f64,
    trees: &McPlan,
    singles: &McPlan,
) -> Result<(TailEstimate, TailEstimate)> {
    let scale = growth(horizon)?;
    let grid = uniform_grid(horizon, grid_step)?;
    let cfg = SimConfig::new(model, horizon)
        .with_origin(x0.to_vec())
        .with_grid_step(grid_step);
    cfg.validate()?;
    let sums = trees
        .map(|_, s| -> Result<f64> {
            let tree = simulate_tree(&cfg, s)?;
            let mut acc = 0.0;
            for p in tree.alive(horizon) {
                acc += f(&tree.ancestral_path(p.id, horizon, true)?);
            }
            Ok(acc)
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let single = singles
        .map(|_, s| -> Result<f64> { Ok(f(&sample_bm_path(x0, &grid, &mut s.rng())?)) })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok((
        TailEstimate::from_samples(&sums),
        TailEstimate::from_samples(&single).scaled(scale),
    ))
}

/// Monte Carlo estimate of `E[N_T^2]`, to be compared with `2e^{2T} − e^T`.
pub fn many_to_two_moment_check(horizon: f64, plan: &McPlan) -> Result<TailEstimate> {
    growth(2.0 * horizon)?;
    let squares = plan
        .map(|_, s| population_at(s, horizon, DEFAULT_POPULATION_CAP).map(|n| (n as f64).powi(2)))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(TailEstimate::from_samples(&squares))
}

/// `2e^{2T} − e^T`.
pub fn second_moment(horizon: f64) -> f64 {
    2.0 * (2.0 * horizon).exp() - horizon.exp()
}
