//! Shared-noise coupling of the radial process with a one-dimensional BBM.
//!
//! Along every particle the one-dimensional position is driven by the radial
//! projection of the `d`-dimensional increments, `dW = ⟨X, dX⟩ / |X|`, so
//! `R − W` is the accumulated Bessel drift `∫ α/R`.

use serde::{Deserialize, Serialize};

use super::engine::SimConfig;
use super::tree::simulate_tree;
use crate::error::{domain, Result};
use crate::kernels::{path::norm, RngStream};
use crate::model::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingOutcome {
    /// `max |R − W|` over all particles and recorded times.
    pub max_discrepancy: f64,
    pub min_modulus: f64,
    /// Every modulus stayed at or above `x0 / 4`.
    pub stayed_high: bool,
    /// `4 α ℓ / x0`, the drift bound on the event `stayed_high`.
    pub bound: f64,
}

/// Simulates one coupled pair started from `(x0, 0, …, 0)` and `x0` over
/// `[0, ell]`.
pub fn coupled_discrepancy(
    model: ModelParams,
    x0: f64,
    ell: f64,
    grid_step: f64,
    stream: RngStream,
) -> Result<CouplingOutcome> {
    if !(x0 > 0.0) {
        return Err(domain("x0", format!("x0 = {x0} must be positive")));
    }
    let d = model.dim() as usize;
    let mut origin = vec![0.0; d];
    origin[0] = x0;
    let cfg = SimConfig::new(model, ell)
        .with_origin(origin)
        .with_grid_step(grid_step);
    let tree = simulate_tree(&cfg, stream)?;
    let mut w_end = vec![0.0; tree.len()];
    let mut worst: f64 = 0.0;
    let mut min_r = x0;
    for p in &tree.particles {
        let mut w = p.parent.map_or(x0, |q| w_end[q]);
        let tr = &p.trajectory;
        for i in 1..tr.len() {
            let (a, b) = (tr.point(i - 1), tr.point(i));
            let ra = norm(a);
            let dot: f64 = a.iter().zip(b).map(|(u, v)| u * (v - u)).sum();
            w += dot / ra;
            let rb = norm(b);
            worst = worst.max((rb - w).abs());
            min_r = min_r.min(rb);
        }
        w_end[p.id] = w;
    }
    Ok(CouplingOutcome {
        max_discrepancy: worst,
        min_modulus: min_r,
        stayed_high: min_r >= x0 / 4.0,
        bound: 4.0 * model.alpha() * ell / x0,
    })
}
