//! Empirical CDFs and tails of the centered maximum, and the normalized
//! quantities built from them.

use serde::{Deserialize, Serialize};

use super::estimate::TailEstimate;
use crate::error::{domain, Result};
use crate::model::{tail_normalizer, ModelParams, ZVariant, SQRT2};

/// `P(X ≤ y)` per `y`, binomial errors.
pub fn estimate_centered_max_cdf(samples: &[f64], y_grid: &[f64]) -> Result<Vec<TailEstimate>> {
    if samples.is_empty() {
        return Err(domain("samples", "empty sample"));
    }
    Ok(y_grid
        .iter()
        .map(|&y| {
            TailEstimate::binomial(samples.iter().filter(|&&x| x <= y).count(), samples.len())
        })
        .collect())
}

/// `P(X ≥ y)` per `y`, all read off the same samples.
pub fn tail_estimates(samples: &[f64], y_grid: &[f64]) -> Result<Vec<TailEstimate>> {
    if samples.is_empty() {
        return Err(domain("samples", "empty sample"));
    }
    Ok(y_grid
        .iter()
        .map(|&y| {
            TailEstimate::binomial(samples.iter().filter(|&&x| x >= y).count(), samples.len())
        })
        .collect())
}

/// A ratio with its error, or a bound when the estimate was zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Ratio {
    Point { value: f64, stderr: f64 },
    Interval { lo: f64, hi: f64 },
}

impl Ratio {
    pub fn point(&self) -> Option<f64> {
        match *self {
            Ratio::Point { value, .. } => Some(value),
            Ratio::Interval { .. } => None,
        }
    }
}

/// One-sided 95% upper bound for a proportion observed as `0 / n`.
pub fn zero_count_upper(n: usize) -> f64 {
    1.0 - 0.05f64.powf(1.0 / n.max(1) as f64)
}

fn ratio(est: &TailEstimate, denom: f64) -> Ratio {
    if est.value > 0.0 {
        Ratio::Point {
            value: est.value / denom,
            stderr: est.stderr / denom,
        }
    } else {
        Ratio::Interval {
            lo: 0.0,
            hi: zero_count_upper(est.n) / denom,
        }
    }
}

/// `P̂(R_t* ≥ m_t + y) / (y e^{−√2 y})` for `y ∈ [1, √t]`.
pub fn mallein_ratio(t: f64, y_grid: &[f64], tails: &[TailEstimate]) -> Result<Vec<Ratio>> {
    if y_grid.len() != tails.len() {
        return Err(domain("tails", "one estimate per y is required"));
    }
    let hi = t.sqrt();
    y_grid
        .iter()
        .zip(tails)
        .map(|(&y, est)| {
            if !(1.0..=hi).contains(&y) {
                return Err(domain("y", format!("y = {y} outside [1, √t] = [1, {hi}]")));
            }
            Ok(ratio(est, y * (-SQRT2 * y).exp()))
        })
        .collect()
}

/// `max / min` of the point ratios; `None` if any ratio is only a bound.
pub fn band_width(ratios: &[Ratio]) -> Option<f64> {
    let pts: Option<Vec<f64>> = ratios.iter().map(Ratio::point).collect();
    let pts = pts?;
    let max = pts.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = pts.iter().copied().fold(f64::INFINITY, f64::min);
    Some(max / min)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub residual_rms: f64,
    pub y_grid: Vec<f64>,
    /// Whether `log(P/y)` rather than `log P` was regressed.
    pub divided_by_y: bool,
}

/// Least squares of `log P̂` (or `log(P̂/y)`) on `y`, over grid points with a
/// positive estimate.
pub fn fit_tail_rate(y_grid: &[f64], tails: &[TailEstimate], divide_by_y: bool) -> Result<RateFit> {
    if y_grid.len() != tails.len() {
        return Err(domain("tails", "one estimate per y is required"));
    }
    let pts: Vec<(f64, f64)> = y_grid
        .iter()
        .zip(tails)
        .filter(|(&y, e)| e.value > 0.0 && (!divide_by_y || y > 0.0))
        .map(|(&y, e)| {
            (
                y,
                if divide_by_y {
                    (e.value / y).ln()
                } else {
                    e.value.ln()
                },
            )
        })
        .collect();
    if pts.len() < 4 {
        return Err(domain(
            "y grid",
            format!("{} positive points, need at least 4", pts.len()),
        ));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(domain("y grid", "all grid points coincide"));
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    Ok(RateFit {
        slope,
        intercept,
        residual_rms: (rss / n).sqrt(),
        y_grid: pts.iter().map(|p| p.0).collect(),
        divided_by_y: divide_by_y,
    })
}

/// `P̂ / 𝔐_{L,z}` per `z`. With [`ZVariant::Sqrt2LPower`] the power factor of
/// the normalizer uses `√2L` in place of `√2L − z`.
pub fn right_tail_normalized(
    model: &ModelParams,
    l: f64,
    z_grid: &[f64],
    y: f64,
    estimates: &[TailEstimate],
    variant: ZVariant,
) -> Result<Vec<Ratio>> {
    if z_grid.len() != estimates.len() {
        return Err(domain("estimates", "one estimate per z is required"));
    }
    let window = crate::model::WindowSpec::new(l)?;
    let (zlo, zhi) = window.z_range();
    z_grid
        .iter()
        .zip(estimates)
        .map(|(&z, est)| {
            if !(zlo..=zhi).contains(&z) {
                return Err(domain(
                    "z",
                    format!("z = {z} outside [L^(1/6), L^(2/3)] = [{zlo}, {zhi}]"),
                ));
            }
            let tn = tail_normalizer(l, z, y, model)?;
            let mut log = tn.log_value();
            if variant == ZVariant::Sqrt2LPower {
                log += model.alpha() * ((SQRT2 * l - z) / (SQRT2 * l)).ln();
            }
            Ok(ratio(est, log.exp()))
        })
        .collect()
}

/// Method-of-moments Gumbel location and scale. Descriptive only: the
/// limit law of the centered maximum is a Gumbel mixture.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GumbelFit {
    pub location: f64,
    pub scale: f64,
}

pub fn gumbel_fit(samples: &[f64]) -> Result<GumbelFit> {
    let finite: Vec<f64> = samples.iter().copied().filter(|x| x.is_finite()).collect();
    if finite.len() < 2 {
        return Err(domain("samples", "need at least two finite samples"));
    }
    let est = TailEstimate::from_samples(&finite);
    let sd = est.stderr * (finite.len() as f64).sqrt();
    let scale = sd * 6f64.sqrt() / std::f64::consts::PI;
    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
    Ok(GumbelFit {
        location: est.value - EULER_GAMMA * scale,
        scale,
    })
}

/// Survival function `y e^{−√2 y}` past its mode `1/√2`.
pub fn synthetic_tail(y: f64) -> f64 {
    let y = y.max(std::f64::consts::FRAC_1_SQRT_2);
    y * (-SQRT2 * y).exp()
}

/// Draw from the law whose survival function is [`synthetic_tail`] on
/// `[1/√2, ∞)`; the remaining mass sits at `0`.
pub fn sample_synthetic<R: rand::Rng + ?Sized>(rng: &mut R) -> f64 {
    let u: f64 = rng.random();
    let mode = std::f64::consts::FRAC_1_SQRT_2;
    if u >= synthetic_tail(mode) {
        return 0.0;
    }
    let (mut lo, mut hi) = (mode, 1.0);
    while synthetic_tail(hi) > u {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if synthetic_tail(mid) > u {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
