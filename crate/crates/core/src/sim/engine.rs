//! Depth-first simulation of branching Brownian motion.
//!
//! Each particle owns a stream derived from its parent's stream and its
//! child index, so a particle's path does not depend on the order in which
//! the tree is explored. Within a stream the draws are: lifetime, position
//! at death, positions at query times (bridge between birth and death), then
//! grid positions (bridges between consecutive anchors). Refining the grid
//! or switching pruning on therefore leaves the anchor positions unchanged.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::kernels::sample::{exp_clock, standard_normal};
use crate::kernels::{path::norm, RngStream};
use crate::model::{ModelParams, SQRT2};

pub const DEFAULT_POPULATION_CAP: usize = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stop {
    Horizon(f64),
    /// Run until exactly this many particles are alive.
    Population(usize),
}

/// Kill curve `start + slope·s − β log(s+2) − depth − sag·√(s ∧ (span−s))₊`.
/// A particle whose modulus (or coordinate `axis`, if set) drops below the
/// curve at a checked time is removed together with its future descendants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PruneRule {
    pub start: f64,
    pub slope: f64,
    pub beta: f64,
    pub depth: f64,
    pub sag: f64,
    pub span: f64,
    #[serde(default)]
    pub axis: Option<usize>,
}

impl Default for PruneRule {
    fn default() -> Self {
        Self {
            start: 0.0,
            slope: SQRT2,
            beta: 0.0,
            depth: 40.0,
            sag: 0.0,
            span: f64::INFINITY,
            axis: None,
        }
    }
}

impl PruneRule {
    pub fn with_depth(depth: f64) -> Self {
        Self {
            depth,
            ..Self::default()
        }
    }

    pub fn starting_at(mut self, start: f64) -> Self {
        self.start = start;
        self
    }

    /// Lowers the curve by `sag·√(s ∧ (span − s))` away from both ends of
    /// `[0, span]`.
    pub fn sagging(mut self, sag: f64, span: f64) -> Self {
        self.sag = sag;
        self.span = span;
        self
    }

    /// Applies the curve to coordinate `axis` instead of the modulus.
    pub fn on_axis(mut self, axis: usize) -> Self {
        self.axis = Some(axis);
        self
    }

    pub fn with_slope(mut self, slope: f64) -> Self {
        self.slope = slope;
        self
    }

    #[inline]
    pub fn kills(&self, x: &[f64], s: f64) -> bool {
        let level = self.kill_level(s);
        match self.axis {
            Some(a) => x[a] < level,
            None => norm(x) < level,
        }
    }

    #[inline]
    pub fn kill_level(&self, s: f64) -> f64 {
        let mut level = self.start + self.slope * s - self.depth;
        if self.beta != 0.0 {
            level -= self.beta * (s + 2.0).ln();
        }
        if self.sag != 0.0 {
            level -= self.sag * s.min(self.span - s).max(0.0).sqrt();
        }
        level
    }

    fn validate(&self) -> Result<()> {
        let fields = [self.start, self.slope, self.beta, self.depth, self.sag];
        if fields.iter().any(|v| !v.is_finite()) || self.span.is_nan() {
            return Err(domain(
                "prune rule",
                format!("{self:?} has non-finite coefficients"),
            ));
        }
        if self.sag < 0.0 {
            return Err(domain("prune rule", "sag must be nonnegative"));
        }
        Ok(())
    }
}

/// Which positions a particle keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Storage {
    /// Birth, every grid time, query times and death.
    Full,
    /// Birth, query times and death.
    Endpoints,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fate {
    Branched,
    /// Alive at the horizon.
    Survived,
    Killed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    Horizon,
    PopulationCap,
    PrunedExtinction,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub model: ModelParams,
    pub origin: Vec<f64>,
    pub stop: Stop,
    pub pruning: Option<PruneRule>,
    /// Spacing of the grid at which positions are stored (`Storage::Full`)
    /// and the prune rule is checked. `f64::INFINITY` disables the grid.
    pub grid_step: f64,
    /// Extra times at which every alive particle records its position.
    pub query_times: Vec<f64>,
    pub storage: Storage,
    pub max_particles: usize,
}

impl SimConfig {
    /// Unpruned run from the origin to `horizon`, full storage on a `1e-3` grid.
    pub fn new(model: ModelParams, horizon: f64) -> Self {
        Self {
            model,
            origin: vec![0.0; model.dim() as usize],
            stop: Stop::Horizon(horizon),
            pruning: None,
            grid_step: 1e-3,
            query_times: Vec::new(),
            storage: Storage::Full,
            max_particles: DEFAULT_POPULATION_CAP,
        }
    }

    pub fn with_origin(mut self, origin: Vec<f64>) -> Self {
        self.origin = origin;
        self
    }

    pub fn with_stop(mut self, stop: Stop) -> Self {
        self.stop = stop;
        self
    }

    pub fn with_pruning(mut self, rule: Option<PruneRule>) -> Self {
        self.pruning = rule;
        self
    }

    pub fn with_grid_step(mut self, step: f64) -> Self {
        self.grid_step = step;
        self
    }

    pub fn with_query_times(mut self, times: Vec<f64>) -> Self {
        self.query_times = times;
        self
    }

    pub fn with_storage(mut self, storage: Storage) -> Self {
        self.storage = storage;
        self
    }

    pub fn with_max_particles(mut self, cap: usize) -> Self {
        self.max_particles = cap;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.model.dim() as usize;
        if self.origin.len() != d {
            return Err(domain(
                "origin",
                format!("{} coordinates for dimension {d}", self.origin.len()),
            ));
        }
        if self.origin.iter().any(|v| !v.is_finite()) {
            return Err(domain("origin", "coordinates must be finite"));
        }
        match self.stop {
            Stop::Horizon(t) if !(t >= 0.0) || !t.is_finite() => {
                return Err(domain(
                    "horizon",
                    format!("T = {t} must be finite and >= 0"),
                ));
            }
            Stop::Population(0) => return Err(domain("population", "N must be at least 1")),
            Stop::Population(n) if n > self.max_particles => {
                return Err(domain(
                    "population",
                    format!("N = {n} exceeds the particle cap {}", self.max_particles),
                ));
            }
            Stop::Population(_) if self.pruning.is_some() => {
                return Err(domain(
                    "population",
                    "a population stop cannot be combined with pruning",
                ));
            }
            _ => {}
        }
        if !(self.grid_step > 0.0) {
            return Err(Error::Grid(format!(
                "grid step {} must be positive",
                self.grid_step
            )));
        }
        if self
            .query_times
            .iter()
            .any(|q| !(*q >= 0.0) || !q.is_finite())
        {
            return Err(Error::Grid("query times must be finite and >= 0".into()));
        }
        if self.max_particles == 0 {
            return Err(domain("particle cap", "must be positive"));
        }
        if let Some(rule) = &self.pruning {
            rule.validate()?;
            if rule.axis.is_some_and(|a| a >= d) {
                return Err(domain(
                    "prune rule",
                    format!("axis {:?} in dimension {d}", rule.axis),
                ));
            }
        }
        Ok(())
    }
}

/// One finished particle as handed to a [`Visitor`]. `positions` is
/// row-major with `dim` entries per entry of `times`.
#[derive(Debug, Clone, Copy)]
pub struct ParticleView<'a> {
    pub id: usize,
    pub parent: Option<usize>,
    pub children: Option<[usize; 2]>,
    pub birth: f64,
    pub death: f64,
    pub fate: Fate,
    pub times: &'a [f64],
    pub positions: &'a [f64],
}

impl ParticleView<'_> {
    pub fn last_position(&self) -> &[f64] {
        let d = self.positions.len() / self.times.len();
        &self.positions[self.positions.len() - d..]
    }
}

pub trait Visitor {
    fn visit(&mut self, particle: &ParticleView<'_>);
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub horizon: f64,
    pub stop_reason: StopReason,
    pub particles: usize,
    pub survivors: usize,
    pub killed: usize,
}

struct Pending {
    id: usize,
    parent: Option<usize>,
    birth: f64,
    stream: RngStream,
}

/// First draw of a stream: the particle's lifetime.
#[inline]
fn lifetime(stream: &RngStream) -> f64 {
    exp_clock(1.0, &mut stream.rng())
}

/// Runs one tree rooted at `stream`, handing each particle to `visitor` as
/// soon as it dies or reaches the horizon.
pub fn run<V: Visitor + ?Sized>(
    config: &SimConfig,
    stream: RngStream,
    visitor: &mut V,
) -> Result<RunSummary> {
    config.validate()?;
    let horizon = match config.stop {
        Stop::Horizon(t) => t,
        Stop::Population(n) => population_horizon(stream, n, config.max_particles)?,
    };
    let d = config.origin.len();
    let h = config.grid_step;
    let prune = config.pruning.as_ref();
    let store_grid = config.storage == Storage::Full && h.is_finite();
    let walk_grid = h.is_finite() && (store_grid || prune.is_some());
    let mut queries: Vec<f64> = config.query_times.clone();
    queries.sort_by(f64::total_cmp);
    queries.dedup();

    let mut stack = vec![Pending {
        id: 0,
        parent: None,
        birth: 0.0,
        stream,
    }];
    let mut starts: Vec<f64> = config.origin.clone();
    let mut next_id = 1usize;
    let mut times: Vec<f64> = Vec::new();
    let mut positions: Vec<f64> = Vec::new();
    let mut cur = vec![0.0; d];
    let mut end_x = vec![0.0; d];
    let mut prev = vec![0.0; d];
    let mut anchor_t: Vec<f64> = Vec::new();
    let mut anchor_x: Vec<f64> = Vec::new();
    let (mut survivors, mut killed) = (0usize, 0usize);

    while let Some(p) = stack.pop() {
        let base = starts.len() - d;
        cur.copy_from_slice(&starts[base..]);
        starts.truncate(base);

        let mut rng = p.stream.rng();
        let end = p.birth + exp_clock(1.0, &mut rng);
        let branches = end < horizon;
        let t_end = if branches { end } else { horizon };

        // anchors: birth, query times, death; the death position is drawn
        // first so grid refinement never moves the anchors
        anchor_t.clear();
        anchor_x.clear();
        anchor_t.push(p.birth);
        anchor_x.extend_from_slice(&cur);
        let span = (t_end - p.birth).sqrt();
        for (e, c) in end_x.iter_mut().zip(&cur) {
            *e = c + span * standard_normal(&mut rng);
        }
        let mut qi = queries.partition_point(|&q| q <= p.birth);
        while let Some(&q) = queries.get(qi).filter(|&&q| q < t_end) {
            let tl = *anchor_t.last().unwrap();
            let left = anchor_x.len() - d;
            bridge_point(&mut cur, &anchor_x[left..], &end_x, tl, t_end, q, &mut rng);
            anchor_t.push(q);
            anchor_x.extend_from_slice(&cur);
            qi += 1;
        }
        if t_end > p.birth {
            anchor_t.push(t_end);
            anchor_x.extend_from_slice(&end_x);
        }

        times.clear();
        positions.clear();
        times.push(p.birth);
        positions.extend_from_slice(&anchor_x[..d]);
        let mut fate = if branches {
            Fate::Branched
        } else {
            Fate::Survived
        };
        let mut death = t_end;
        'segments: for i in 1..anchor_t.len() {
            let (ta, tb) = (anchor_t[i - 1], anchor_t[i]);
            let xb = &anchor_x[i * d..(i + 1) * d];
            if walk_grid {
                cur.copy_from_slice(&anchor_x[(i - 1) * d..i * d]);
                let mut tc = ta;
                let mut k = (ta / h).floor() as u64;
                while (k as f64) * h <= ta {
                    k += 1;
                }
                loop {
                    let g = k as f64 * h;
                    if tb - g <= 1e-9 * h {
                        break;
                    }
                    prev.copy_from_slice(&cur);
                    bridge_point(&mut cur, &prev, xb, tc, tb, g, &mut rng);
                    tc = g;
                    k += 1;
                    let dead = prune.is_some_and(|r| r.kills(&cur, g));
                    if store_grid || dead {
                        times.push(g);
                        positions.extend_from_slice(&cur);
                    }
                    if dead {
                        fate = Fate::Killed;
                        death = g;
                        break 'segments;
                    }
                }
            }
            times.push(tb);
            positions.extend_from_slice(xb);
            if prune.is_some_and(|r| r.kills(xb, tb)) {
                fate = Fate::Killed;
                death = tb;
                break;
            }
        }
        cur.copy_from_slice(&positions[positions.len() - d..]);

        let children = if fate == Fate::Branched {
            if next_id + 2 > config.max_particles {
                return Err(Error::PopulationCap {
                    cap: config.max_particles,
                });
            }
            let ids = [next_id, next_id + 1];
            next_id += 2;
            for (i, &cid) in ids.iter().enumerate().rev() {
                stack.push(Pending {
                    id: cid,
                    parent: Some(p.id),
                    birth: death,
                    stream: p.stream.child(i as u64),
                });
                starts.extend_from_slice(&cur);
            }
            Some(ids)
        } else {
            None
        };
        match fate {
            Fate::Survived => survivors += 1,
            Fate::Killed => killed += 1,
            Fate::Branched => {}
        }
        visitor.visit(&ParticleView {
            id: p.id,
            parent: p.parent,
            children,
            birth: p.birth,
            death,
            fate,
            times: &times,
            positions: &positions,
        });
    }

    let stop_reason = if survivors == 0 && killed > 0 {
        StopReason::PrunedExtinction
    } else if matches!(config.stop, Stop::Population(_)) {
        StopReason::PopulationCap
    } else {
        StopReason::Horizon
    };
    Ok(RunSummary {
        horizon,
        stop_reason,
        particles: next_id,
        survivors,
        killed,
    })
}

/// Brownian bridge from `(tl, xl)` to `(tr, xr)` observed at `s`.
#[inline]
fn bridge_point<R: rand::Rng + ?Sized>(
    out: &mut [f64],
    xl: &[f64],
    xr: &[f64],
    tl: f64,
    tr: f64,
    s: f64,
    rng: &mut R,
) {
    let w = (s - tl) / (tr - tl);
    let sd = ((s - tl) * (tr - s) / (tr - tl)).sqrt();
    for ((o, a), b) in out.iter_mut().zip(xl).zip(xr) {
        *o = a + w * (b - a) + sd * standard_normal(rng);
    }
}

#[derive(PartialEq)]
struct Clock(f64, RngStream);

impl Eq for Clock {}

impl PartialOrd for Clock {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Clock {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Horizon at which exactly `n` particles are alive: midway between the
/// branch event that brings the population to `n` and the next one. Only
/// the lifetimes are drawn, from the same streams the full run uses.
pub fn population_horizon(root: RngStream, n: usize, cap: usize) -> Result<f64> {
    if n == 0 {
        return Err(domain("population", "N must be at least 1"));
    }
    if n > cap {
        return Err(Error::PopulationCap { cap });
    }
    let first = lifetime(&root);
    if n == 1 {
        return Ok(first / 2.0);
    }
    let mut heap = BinaryHeap::new();
    heap.push(Reverse(Clock(first, root)));
    let mut alive = 1usize;
    loop {
        let Reverse(Clock(t, s)) = heap.pop().expect("nonempty");
        for i in 0..2 {
            let c = s.child(i);
            heap.push(Reverse(Clock(t + lifetime(&c), c)));
        }
        alive += 1;
        if alive == n {
            let Reverse(Clock(next, _)) = heap.peek().expect("nonempty");
            return Ok((t + next) / 2.0);
        }
    }
}

/// `N_T` of an unpruned tree from its lifetimes alone.
pub fn population_at(root: RngStream, horizon: f64, cap: usize) -> Result<usize> {
    let mut stack = vec![(0.0, root)];
    let mut alive = 0usize;
    let mut created = 1usize;
    while let Some((birth, s)) = stack.pop() {
        let end = birth + lifetime(&s);
        if end < horizon {
            created += 2;
            if created > cap {
                return Err(Error::PopulationCap { cap });
            }
            stack.push((end, s.child(1)));
            stack.push((end, s.child(0)));
        } else {
            alive += 1;
        }
    }
    Ok(alive)
}
