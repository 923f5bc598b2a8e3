//! Monte Carlo experiments that feed the tail statistics.

use serde::{Deserialize, Serialize};

use super::estimate::TailEstimate;
use crate::error::{domain, Error, Result};
use crate::kernels::RngStream;
use crate::mc::McPlan;
use crate::model::{ModelParams, SQRT2};
use crate::sim::{horizon_max, window_config, PruneRule, SimConfig, Storage};

/// Horizon maximum of one replicate; a pruned-out tree counts as `−∞`.
fn max_or_neg_inf(cfg: &SimConfig, s: RngStream, axis: Option<usize>) -> Result<f64> {
    match horizon_max(cfg, s, axis) {
        Ok(e) => Ok(e.value),
        Err(Error::Extinct { .. }) => Ok(f64::NEG_INFINITY),
        Err(e) => Err(e),
    }
}

fn collect(v: Vec<Result<f64>>) -> Result<Vec<f64>> {
    v.into_iter().collect()
}

/// Lean configuration for horizon maxima: endpoint storage, grid used only
/// for prune checks.
pub fn max_config(
    model: ModelParams,
    t: f64,
    pruning: Option<PruneRule>,
    grid_step: f64,
) -> SimConfig {
    SimConfig::new(model, t)
        .with_grid_step(grid_step)
        .with_storage(Storage::Endpoints)
        .with_pruning(pruning)
}

/// Samples of `R_t* − m_t` from BBM started at the origin.
pub fn centered_max_samples(
    model: ModelParams,
    t: f64,
    pruning: Option<PruneRule>,
    grid_step: f64,
    plan: &McPlan,
) -> Result<Vec<f64>> {
    let m = model.centering(t)?.value;
    let cfg = max_config(model, t, pruning, grid_step);
    cfg.validate()?;
    collect(plan.map(|_, s| max_or_neg_inf(&cfg, s, None).map(|r| r - m)))
}

/// Fraction of replicates whose horizon maximum changes when pruning is
/// switched off, on identical streams.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PruneBias {
    pub changed: usize,
    pub n: usize,
}

impl PruneBias {
    pub fn fraction(&self) -> f64 {
        self.changed as f64 / self.n as f64
    }
}

pub fn prune_bias(pruned: &SimConfig, axis: Option<usize>, plan: &McPlan) -> Result<PruneBias> {
    if pruned.pruning.is_none() {
        return Err(domain("prune bias", "configuration has no prune rule"));
    }
    let full = pruned.clone().with_pruning(None);
    let flags = plan.map(|_, s| -> Result<bool> {
        Ok(max_or_neg_inf(pruned, s, axis)? != max_or_neg_inf(&full, s, axis)?)
    });
    let changed = flags
        .into_iter()
        .collect::<Result<Vec<_>>>()?
        .iter()
        .filter(|&&c| c)
        .count();
    Ok(PruneBias { changed, n: plan.n })
}

/// Same comparison restricted to the event `{max > level}`: counts
/// replicates where pruning flips the indicator.
pub fn prune_event_bias(
    pruned: &SimConfig,
    axis: Option<usize>,
    level: f64,
    plan: &McPlan,
) -> Result<PruneBias> {
    if pruned.pruning.is_none() {
        return Err(domain("prune bias", "configuration has no prune rule"));
    }
    let full = pruned.clone().with_pruning(None);
    let flags = plan.map(|_, s| -> Result<bool> {
        Ok((max_or_neg_inf(pruned, s, axis)? > level) != (max_or_neg_inf(&full, s, axis)? > level))
    });
    let changed = flags
        .into_iter()
        .collect::<Result<Vec<_>>>()?
        .iter()
        .filter(|&&c| c)
        .count();
    Ok(PruneBias { changed, n: plan.n })
}

/// Samples of `R*_{t−L}` for the process started at `√2L − z`.
pub fn window_max_samples(
    model: ModelParams,
    l: f64,
    z: f64,
    t: f64,
    pruning: Option<PruneRule>,
    grid_step: f64,
    plan: &McPlan,
) -> Result<Vec<f64>> {
    let cfg = window_config(model, l, z, t, pruning, grid_step)?;
    cfg.validate()?;
    collect(plan.map(|_, s| max_or_neg_inf(&cfg, s, None)))
}

/// `P_{x0}(max modulus at ℓ > m_target)` for the `d`-dimensional process
/// started at `(x0, 0, …)` and `P(W*_ℓ > m_target − x0)` for one-dimensional
/// BBM from 0, on independent lanes of `plan`.
pub fn coupling_tail_compare(
    model: ModelParams,
    x0: f64,
    ell: f64,
    m_target: f64,
    plan: &McPlan,
) -> Result<(TailEstimate, TailEstimate)> {
    if !(x0 >= 50.0) {
        return Err(domain(
            "x0",
            format!("x0 = {x0}; the comparison needs x0 >= 50"),
        ));
    }
    if !(ell > 0.0) {
        return Err(domain("ell", format!("ℓ = {ell} must be positive")));
    }
    let mut origin = vec![0.0; model.dim() as usize];
    origin[0] = x0;
    let radial = max_config(model, ell, None, f64::INFINITY).with_origin(origin);
    let line = max_config(ModelParams::new(1)?, ell, None, f64::INFINITY);
    let hits = |cfg: &SimConfig, axis, level: f64, lane: u64| -> Result<TailEstimate> {
        let v = collect(plan.lane(lane).map(|_, s| max_or_neg_inf(cfg, s, axis)))?;
        Ok(TailEstimate::binomial(
            v.iter().filter(|&&r| r > level).count(),
            v.len(),
        ))
    };
    Ok((
        hits(&radial, None, m_target, 1)?,
        hits(&line, Some(0), m_target - x0, 2)?,
    ))
}

/// `ℓ^{−3/2} (w + (3/(2√2)) log ℓ) e^{−√2 w} e^{−w²/(2ℓ)}`.
pub fn bramson_shape(ell: f64, w: f64) -> f64 {
    ell.powf(-1.5)
        * (w + 3.0 / (2.0 * SQRT2) * ell.ln())
        * (-SQRT2 * w).exp()
        * (-w * w / (2.0 * ell)).exp()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BramsonCell {
    pub ell: f64,
    pub w: f64,
    pub empirical: TailEstimate,
    pub shape: f64,
    /// No exceedance observed; the cell does not enter the fit.
    pub censored: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BramsonTable {
    pub cells: Vec<BramsonCell>,
    /// Largest empirical / shape ratio over uncensored cells.
    pub c_fit: f64,
}

impl BramsonTable {
    /// Bound `C · shape` of a cell under the fitted constant.
    pub fn bound(&self, cell: &BramsonCell) -> f64 {
        self.c_fit * cell.shape
    }
}

/// Empirical `P(W*_ℓ > √2ℓ + w)` for one-dimensional BBM from 0 against the
/// bound shape, one set of trees per `ℓ` shared by every `w`. `k` is the
/// constant in the admissibility condition `w ≥ k + 1 − (3/(2√2)) log ℓ`.
/// `pruning` is applied to the coordinate with the kill curve spanning
/// `[0, ℓ]`.
pub fn bramson_tail_bound_check(
    ell_grid: &[f64],
    w_grid: &[f64],
    k: f64,
    pruning: Option<PruneRule>,
    plan: &McPlan,
) -> Result<BramsonTable> {
    let line = ModelParams::new(1)?;
    let mut cells = Vec::new();
    for (i, &ell) in ell_grid.iter().enumerate() {
        if !(ell >= 8.0) {
            return Err(domain("ell", format!("ℓ = {ell}; the bound needs ℓ >= 8")));
        }
        for &w in w_grid {
            let min_w = k + 1.0 - 3.0 / (2.0 * SQRT2) * ell.ln();
            if !(w >= min_w) {
                return Err(domain(
                    "w",
                    format!("w = {w} below k + 1 − (3/(2√2)) log ℓ = {min_w}"),
                ));
            }
        }
        let rule = pruning.map(|r| {
            let span = if r.sag != 0.0 { ell } else { r.span };
            PruneRule { span, ..r }.on_axis(0)
        });
        let cfg = max_config(line, ell, rule, f64::INFINITY);
        let maxima = collect(
            plan.lane(i as u64)
                .map(|_, s| max_or_neg_inf(&cfg, s, Some(0))),
        )?;
        for &w in w_grid {
            let level = SQRT2 * ell + w;
            let hits = maxima.iter().filter(|&&m| m > level).count();
            cells.push(BramsonCell {
                ell,
                w,
                empirical: TailEstimate::binomial(hits, maxima.len()),
                shape: bramson_shape(ell, w),
                censored: hits == 0,
            });
        }
    }
    let c_fit = cells
        .iter()
        .filter(|c| !c.censored)
        .map(|c| c.empirical.value / c.shape)
        .fold(0.0, f64::max);
    Ok(BramsonTable { cells, c_fit })
}
