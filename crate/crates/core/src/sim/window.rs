use super::engine::{PruneRule, SimConfig, Stop, Storage};
use super::tree::{simulate_tree, ParticleTree};
use crate::error::{domain, Result};
use crate::kernels::RngStream;
use crate::model::{ModelParams, SQRT2};

/// Configuration of a BBM of horizon `t − L` started at `(√2L − z, 0, …, 0)`,
/// the radial start of a particle at depth `z` in the window. A prune rule
/// is moved to start at the initial modulus.
pub fn window_config(
    model: ModelParams,
    l: f64,
    z: f64,
    t: f64,
    pruning: Option<PruneRule>,
    grid_step: f64,
) -> Result<SimConfig> {
    let x = SQRT2 * l - z;
    if !(x > 0.0) {
        return Err(domain("z", format!("√2L − z = {x} must be positive")));
    }
    if !(t >= l) {
        return Err(domain("t", format!("t = {t} must be at least L = {l}")));
    }
    let mut origin = vec![0.0; model.dim() as usize];
    origin[0] = x;
    Ok(SimConfig::new(model, t - l)
        .with_stop(Stop::Horizon(t - l))
        .with_origin(origin)
        .with_pruning(pruning.map(|r| r.starting_at(x)))
        .with_grid_step(grid_step)
        .with_storage(Storage::Endpoints))
}

pub fn simulate_from_window(
    model: ModelParams,
    l: f64,
    z: f64,
    t: f64,
    pruning: Option<PruneRule>,
    grid_step: f64,
    stream: RngStream,
) -> Result<ParticleTree> {
    simulate_tree(&window_config(model, l, z, t, pruning, grid_step)?, stream)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::coord_x;
    use crate::sim::max_modulus;

    #[test]
    fn zero_horizon_starts_at_window_point() {
        let m = ModelParams::new(2).unwrap();
        let l: f64 = 64.0;
        let z = 2.0;
        let tree = simulate_from_window(m, l, z, l, None, 0.1, RngStream::new(1, 1)).unwrap();
        assert_eq!(max_modulus(&tree, 0.0).unwrap().value, coord_x(l, z));
        assert!(simulate_from_window(m, 1.0, 2.0, 3.0, None, 0.1, RngStream::new(1, 1)).is_err());
    }
}
