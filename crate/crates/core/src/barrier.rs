//! Barrier functions, the Brownian ballot formula and grid-checked
//! barrier events.
//!
//! `log(x)_+` is read as `log(max(x, 1))` throughout, so the logarithmic
//! terms of `B` and `B₀` vanish within unit distance of either end of
//! their interval.

use std::sync::Arc;

use rand::Rng;

use crate::error::{domain, Error, Result};
use crate::kernels::{sample::fill_bridge, uniform_grid, PathGrid};
use crate::mc::McPlan;
use crate::model::{coord_x, coord_y, pow_sixth, pow_two_thirds, ModelParams, SQRT2};
use crate::stats::TailEstimate;

/// A barrier curve as a function of time. Constant `±inf` curves stand for
/// an absent constraint.
pub type Curve = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

pub fn constant(level: f64) -> Curve {
    Arc::new(move |_| level)
}

/// The segment from `(0, a)` to `(horizon, b)` as a curve, without the
/// range check of [`linear_barrier`].
pub fn line(a: f64, b: f64, horizon: f64) -> Curve {
    Arc::new(move |s| a + (b - a) * s / horizon)
}

/// Event `{lower(u) ≤ X_u ≤ upper(u) for all u in [start, end]}`.
#[derive(Clone)]
pub struct BarrierSpec {
    pub start: f64,
    pub end: f64,
    pub upper: Option<Curve>,
    pub lower: Option<Curve>,
}

impl std::fmt::Debug for BarrierSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BarrierSpec")
            .field("start", &self.start)
            .field("end", &self.end)
            .field("upper", &self.upper.is_some())
            .field("lower", &self.lower.is_some())
            .finish()
    }
}

impl BarrierSpec {
    pub fn new(start: f64, end: f64, upper: Option<Curve>, lower: Option<Curve>) -> Result<Self> {
        if !(start <= end) {
            return Err(domain(
                "barrier interval",
                format!("[{start}, {end}] is empty"),
            ));
        }
        if upper.is_none() && lower.is_none() {
            return Err(domain("barrier", "needs an upper or a lower curve"));
        }
        Ok(Self {
            start,
            end,
            upper,
            lower,
        })
    }

    pub fn upper(start: f64, end: f64, f: Curve) -> Result<Self> {
        Self::new(start, end, Some(f), None)
    }

    pub fn lower(start: f64, end: f64, f: Curve) -> Result<Self> {
        Self::new(start, end, None, Some(f))
    }

    #[inline]
    fn admits(&self, s: f64, x: f64) -> bool {
        self.upper.as_ref().is_none_or(|f| x <= f(s))
            && self.lower.as_ref().is_none_or(|f| x >= f(s))
    }
}

const TIME_TOL: f64 = 1e-12;

/// Evaluates the barrier event on the grid points of `path` that fall in
/// the interval. Ties count as inside. Vector-valued paths are read through
/// their norm.
pub fn check_barrier_event(path: &PathGrid, spec: &BarrierSpec) -> Result<bool> {
    let tol = TIME_TOL * spec.end.abs().max(1.0);
    if path.start_time() > spec.start + tol || path.end_time() < spec.end - tol {
        return Err(Error::Grid(format!(
            "path covers [{}, {}], barrier needs [{}, {}]",
            path.start_time(),
            path.end_time(),
            spec.start,
            spec.end
        )));
    }
    Ok(path
        .tracks()
        .filter(|&(s, _)| s >= spec.start - tol && s <= spec.end + tol)
        .all(|(s, x)| spec.admits(s, x)))
}

/// `a + (b − a) s / T` on `[0, T]`.
pub fn linear_barrier(a: f64, b: f64, horizon: f64, s: f64) -> Result<f64> {
    if !(horizon > 0.0) {
        return Err(domain(
            "linear barrier",
            format!("T = {horizon} must be positive"),
        ));
    }
    if !(0.0..=horizon).contains(&s) {
        return Err(domain(
            "linear barrier",
            format!("s = {s} outside [0, {horizon}]"),
        ));
    }
    Ok(a + (b - a) * s / horizon)
}

/// Probability that a Brownian bridge from `x` to `y` over `[0, T]` stays
/// below the segment from `a` to `b`: `1 − exp(−2(a−x)(b−y)/T)`.
pub fn ballot_probability(x: f64, y: f64, a: f64, b: f64, horizon: f64) -> Result<f64> {
    if !(horizon > 0.0) {
        return Err(domain(
            "ballot horizon",
            format!("T = {horizon} must be positive"),
        ));
    }
    if a < x || b < y {
        return Err(domain(
            "ballot endpoints",
            format!(
                "need a >= x and b >= y, got a - x = {}, b - y = {}",
                a - x,
                b - y
            ),
        ));
    }
    Ok(-(-2.0 * (a - x) * (b - y) / horizon).exp_m1())
}

fn log_plus(x: f64) -> f64 {
    x.max(1.0).ln()
}

/// Default `C_d = max(4d, α_d + 2, 8)`.
pub fn default_c_d(d: u32) -> f64 {
    let d_f = f64::from(d);
    (4.0 * d_f).max((d_f - 1.0) / 2.0 + 2.0).max(8.0)
}

/// Default `K_d = ⌈max((24α_d + 21)/(2√2), 8(1 + α_d)/√2)⌉`.
pub fn default_k_d(d: u32) -> f64 {
    let a = (f64::from(d) - 1.0) / 2.0;
    ((24.0 * a + 21.0) / (2.0 * SQRT2))
        .max(8.0 * (1.0 + a) / SQRT2)
        .ceil()
}

/// The upper barrier `B(s) = (m_t/t)s + C_d log(s ∧ (t−s))_+ + log L` on `[L, t]`.
pub fn barrier_b(model: &ModelParams, s: f64, t: f64, l: f64, c_d: f64) -> Result<f64> {
    if !(l >= 1.0 && t > l) {
        return Err(domain(
            "barrier B",
            format!("need t > L >= 1, got t = {t}, L = {l}"),
        ));
    }
    if !(l..=t).contains(&s) {
        return Err(domain("barrier B", format!("s = {s} outside [{l}, {t}]")));
    }
    Ok(model.speed(t) * s + c_d * log_plus(s.min(t - s)) + l.ln())
}

/// Parameters of the barrier curves attached to a particle started in the
/// window at `x(z) = √2L − z` and run for `t − L`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierParams {
    pub model: ModelParams,
    pub t: f64,
    pub l: f64,
    pub ell: f64,
    pub z: f64,
    pub y: f64,
    pub c_d: f64,
    pub k_d: f64,
}

impl BarrierParams {
    /// Checks `ℓ ∈ [1, L^{1/6}]`, `z ∈ [L^{1/6}, L^{2/3}]` and `t > L + ℓ`.
    pub fn new(model: ModelParams, t: f64, l: f64, ell: f64, z: f64, y: f64) -> Result<Self> {
        if !(l >= 1.0) {
            return Err(domain("L", format!("L = {l} must be at least 1")));
        }
        let (lo, hi) = (pow_sixth(l), pow_two_thirds(l));
        if !(1.0..=lo).contains(&ell) {
            return Err(domain(
                "ell",
                format!("ℓ = {ell} must lie in [1, L^(1/6)] = [1, {lo}]"),
            ));
        }
        if !(lo..=hi).contains(&z) {
            return Err(domain(
                "z",
                format!("z = {z} must lie in [L^(1/6), L^(2/3)] = [{lo}, {hi}]"),
            ));
        }
        if !(t > l + ell) {
            return Err(domain(
                "t",
                format!("t = {t} must exceed L + ℓ = {}", l + ell),
            ));
        }
        Ok(Self {
            model,
            t,
            l,
            ell,
            z,
            y,
            c_d: default_c_d(model.dim()),
            k_d: default_k_d(model.dim()),
        })
    }

    pub fn with_constants(mut self, c_d: f64, k_d: f64) -> Self {
        self.c_d = c_d;
        self.k_d = k_d;
        self
    }

    /// `t̃ = t − L`, the horizon of the process started in the window.
    pub fn shifted_horizon(&self) -> f64 {
        self.t - self.l
    }

    /// `t̃ − ℓ`, the time at which good particles are counted.
    pub fn count_time(&self) -> f64 {
        self.t - self.l - self.ell
    }

    /// `ℓ₁ = ℓ^{1/4}`.
    pub fn ell1(&self) -> f64 {
        self.ell.powf(0.25)
    }

    /// `m_t + y`, the level the descendants have to beat.
    pub fn target(&self) -> f64 {
        self.model.m(self.t) + self.y
    }

    pub fn x(&self, a: f64) -> f64 {
        coord_x(self.l, a)
    }

    pub fn y_coord(&self, b: f64) -> f64 {
        coord_y(&self.model, self.t, self.ell, self.y, b)
    }

    /// `(m_t/t)(s + L) + y`.
    pub fn upper_line(&self, s: f64) -> f64 {
        self.model.speed(self.t) * (s + self.l) + self.y
    }

    pub fn b(&self, s: f64) -> Result<f64> {
        barrier_b(&self.model, s, self.t, self.l, self.c_d)
    }

    /// `B₀(s) = (m_t/t)(s+L) + y + log ℓ + K_d log(s ∧ (t̃−ℓ−s))_+` on `[0, t̃−ℓ]`.
    pub fn b0(&self, s: f64) -> Result<f64> {
        let end = self.count_time();
        if !(0.0..=end).contains(&s) {
            return Err(domain("barrier B0", format!("s = {s} outside [0, {end}]")));
        }
        Ok(self.b0_unchecked(s))
    }

    pub(crate) fn b0_unchecked(&self, s: f64) -> f64 {
        let end = self.count_time();
        self.upper_line(s) + self.ell.ln() + self.k_d * log_plus(s.min(end - s))
    }

    /// Three-piece lower barrier `Q_z`: flat at `√2L − 2L^{2/3}` on `[0, ℓ₁]`,
    /// a sagging line on the middle piece, flat at `y(2ℓ^{2/3})` on the last
    /// `ℓ₁` of `[0, t̃−ℓ]`.
    pub fn q(&self, s: f64) -> Result<f64> {
        let end = self.count_time();
        if !(0.0..=end).contains(&s) {
            return Err(domain("barrier Q", format!("s = {s} outside [0, {end}]")));
        }
        Ok(self.q_unchecked(s))
    }

    pub(crate) fn q_unchecked(&self, s: f64) -> f64 {
        let end = self.count_time();
        let ell1 = self.ell1();
        if s <= ell1 {
            self.x(2.0 * pow_two_thirds(self.l))
        } else if s >= end - ell1 {
            self.y_coord(2.0 * pow_two_thirds(self.ell))
        } else {
            self.q_middle(s)
        }
    }

    /// Formula of the middle piece of `Q_z`, evaluated anywhere on
    /// `[0, t̃−ℓ]`; gives the one-sided limits at the break points.
    pub fn q_middle(&self, s: f64) -> f64 {
        let end = self.count_time();
        let a = self.x(2.0 * pow_two_thirds(self.l));
        let b = self.y_coord(2.0 * pow_two_thirds(self.ell));
        a + (b - a) * s / end - s.min(end - s).max(0.0).powf(2.0 / 3.0)
    }

    pub fn b0_curve(&self) -> Curve {
        let p = *self;
        Arc::new(move |s| p.b0_unchecked(s))
    }

    pub fn q_curve(&self) -> Curve {
        let p = *self;
        Arc::new(move |s| p.q_unchecked(s))
    }

    pub fn upper_line_curve(&self) -> Curve {
        let p = *self;
        Arc::new(move |s| p.upper_line(s))
    }
}

/// Estimates `P(lower-event | upper-event)` for Brownian bridges from `x`
/// to `y` over `[0, T]`, both events checked on a uniform grid.
pub fn mc_conditional_barrier(
    x: f64,
    y: f64,
    horizon: f64,
    lower: &Curve,
    upper: &Curve,
    grid_step: f64,
    plan: &McPlan,
) -> Result<TailEstimate> {
    if !(horizon > 0.0) {
        return Err(domain(
            "bridge horizon",
            format!("T = {horizon} must be positive"),
        ));
    }
    let grid = uniform_grid(horizon, grid_step)?;
    let upper_levels: Vec<f64> = grid.iter().map(|&s| upper(s)).collect();
    let lower_levels: Vec<f64> = grid.iter().map(|&s| lower(s)).collect();
    let outcomes = plan.map(|_, stream| {
        let mut rng = stream.rng();
        let mut path = vec![0.0; grid.len()];
        fill_bridge(x, y, &grid, &mut path, &mut rng);
        let accepted = path.iter().zip(&upper_levels).all(|(v, u)| v <= u);
        let hit = accepted && path.iter().zip(&lower_levels).all(|(v, l)| v >= l);
        (accepted, hit)
    });
    let accepted = outcomes.iter().filter(|o| o.0).count();
    if accepted == 0 {
        return Err(Error::InsufficientConditioningMass { n: plan.n });
    }
    let hits = outcomes.iter().filter(|o| o.1).count();
    Ok(TailEstimate::binomial(hits, accepted))
}

/// Grid Monte Carlo of the ballot event at three nested resolutions.
#[derive(Debug, Clone, PartialEq)]
pub struct BallotRefinement {
    /// `(steps, estimate)` from coarse to fine.
    pub levels: Vec<(usize, TailEstimate)>,
    /// Richardson extrapolation to zero step in powers of `√h`, with a
    /// per-path standard error.
    pub extrapolated: TailEstimate,
}

/// Weights of the polynomial through `(s_i, ·)` evaluated at `s = 0`.
fn extrapolation_weights(nodes: &[f64]) -> Vec<f64> {
    (0..nodes.len())
        .map(|i| {
            nodes
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &sj)| sj / (sj - nodes[i]))
                .product()
        })
        .collect()
}

/// Simulates bridges on `4 · coarse_steps` steps and checks the ballot
/// event on every fourth, every second and every grid point. The same
/// paths serve all three levels, so discrete checking can only lose
/// crossings as the grid coarsens and the level estimates are ordered.
pub fn ballot_refinement_mc(
    x: f64,
    y: f64,
    a: f64,
    b: f64,
    horizon: f64,
    coarse_steps: usize,
    plan: &McPlan,
) -> Result<BallotRefinement> {
    ballot_probability(x, y, a, b, horizon)?;
    if coarse_steps == 0 {
        return Err(domain("grid", "coarse_steps must be positive"));
    }
    let fine = 4 * coarse_steps;
    let h = horizon / fine as f64;
    let flags =
        plan.map(|_, stream| ballot_path_flags(x, y, a, b, horizon, fine, h, &mut stream.rng()));
    let n = flags.len();
    let count = |bit: u8| flags.iter().filter(|&&f| f & bit != 0).count();
    let levels = vec![
        (coarse_steps, TailEstimate::binomial(count(1), n)),
        (2 * coarse_steps, TailEstimate::binomial(count(2), n)),
        (fine, TailEstimate::binomial(count(4), n)),
    ];
    let nodes: Vec<f64> = [4.0, 2.0, 1.0]
        .iter()
        .map(|m: &f64| (m * h).sqrt())
        .collect();
    let w = extrapolation_weights(&nodes);
    let values: Vec<f64> = flags
        .iter()
        .map(|&f| (0..3).map(|k| w[k] * f64::from((f >> k) & 1)).sum())
        .collect();
    Ok(BallotRefinement {
        levels,
        extrapolated: TailEstimate::from_samples(&values),
    })
}

/// Bit 0: below the line on the coarse grid, bit 1: middle, bit 2: fine.
#[allow(clippy::too_many_arguments)]
fn ballot_path_flags<R: Rng + ?Sized>(
    x: f64,
    y: f64,
    a: f64,
    b: f64,
    horizon: f64,
    steps: usize,
    h: f64,
    rng: &mut R,
) -> u8 {
    let mut flags = 0b111u8;
    let mut v = x;
    for i in 0..steps - 1 {
        let s = i as f64 * h;
        let remaining = horizon - s;
        let mean = v + (y - v) * h / remaining;
        let var = h * (remaining - h) / remaining;
        v = mean + var.sqrt() * crate::kernels::standard_normal(rng);
        let k = i + 1;
        let level = a + (b - a) * (k as f64 * h) / horizon;
        if v > level {
            flags &= !4;
            if k % 2 == 0 {
                flags &= !2;
            }
            if k % 4 == 0 {
                flags &= !1;
            }
            if flags == 0 {
                break;
            }
        }
    }
    flags
}
