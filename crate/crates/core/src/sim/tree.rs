use serde::{Deserialize, Serialize};

use super::engine::{self, Fate, ParticleView, RunSummary, SimConfig, StopReason, Visitor};
use crate::error::{Error, Result};
use crate::kernels::{PathGrid, RngStream};
use crate::model::ModelParams;

/// Relative tolerance used to match a requested time against recorded ones.
const TIME_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Particle {
    pub id: usize,
    pub parent: Option<usize>,
    pub children: Option<[usize; 2]>,
    pub birth: f64,
    pub death: f64,
    pub fate: Fate,
    pub trajectory: PathGrid,
}

impl Particle {
    /// Alive at `t` means born at or before `t` and not yet branched or
    /// killed; survivors are alive at the horizon itself.
    pub fn is_alive(&self, t: f64) -> bool {
        self.birth <= t && (t < self.death || (self.fate == Fate::Survived && t == self.death))
    }

    /// Index of the recorded time matching `t`, if any.
    pub fn time_index(&self, t: f64) -> Option<usize> {
        let times = self.trajectory.times();
        let tol = TIME_TOL * t.abs().max(1.0);
        let i = times.partition_point(|&s| s < t - tol);
        (i < times.len() && (times[i] - t).abs() <= tol).then_some(i)
    }

    pub fn position_at(&self, t: f64) -> Result<&[f64]> {
        self.time_index(t)
            .map(|i| self.trajectory.point(i))
            .ok_or(Error::TimeNotRecorded { t })
    }

    pub fn end_position(&self) -> &[f64] {
        self.trajectory.point(self.trajectory.len() - 1)
    }
}

/// A finished simulation. Particles are indexed by id; a parent's id is
/// always smaller than its children's.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticleTree {
    pub model: ModelParams,
    pub horizon: f64,
    pub stop_reason: StopReason,
    pub grid_step: f64,
    pub pruned: bool,
    pub particles: Vec<Particle>,
}

struct Collect {
    slots: Vec<Option<Particle>>,
    dim: usize,
}

impl Visitor for Collect {
    fn visit(&mut self, p: &ParticleView<'_>) {
        if self.slots.len() <= p.id {
            self.slots.resize_with(p.id + 1, || None);
        }
        self.slots[p.id] = Some(Particle {
            id: p.id,
            parent: p.parent,
            children: p.children,
            birth: p.birth,
            death: p.death,
            fate: p.fate,
            trajectory: PathGrid::from_raw(p.times.to_vec(), p.positions.to_vec(), self.dim),
        });
    }
}

/// Simulates one tree rooted at `stream` and keeps every particle.
pub fn simulate_tree(config: &SimConfig, stream: RngStream) -> Result<ParticleTree> {
    let mut sink = Collect {
        slots: Vec::new(),
        dim: config.origin.len(),
    };
    let summary: RunSummary = engine::run(config, stream, &mut sink)?;
    let particles = sink
        .slots
        .into_iter()
        .map(|p| p.expect("every id is visited"))
        .collect();
    Ok(ParticleTree {
        model: config.model,
        horizon: summary.horizon,
        stop_reason: summary.stop_reason,
        grid_step: config.grid_step,
        pruned: config.pruning.is_some(),
        particles,
    })
}

impl ParticleTree {
    pub fn dim(&self) -> usize {
        self.model.dim() as usize
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn particle(&self, id: usize) -> &Particle {
        &self.particles[id]
    }

    pub fn alive(&self, t: f64) -> impl Iterator<Item = &Particle> + '_ {
        self.particles.iter().filter(move |p| p.is_alive(t))
    }

    pub fn population(&self, t: f64) -> usize {
        self.alive(t).count()
    }

    pub fn branch_events_before(&self, t: f64) -> usize {
        self.particles
            .iter()
            .filter(|p| p.fate == Fate::Branched && p.death < t)
            .count()
    }

    /// Root-first chain of ids ending at `id`.
    pub fn lineage(&self, id: usize) -> Vec<usize> {
        let mut out = vec![id];
        let mut cur = id;
        while let Some(p) = self.particles[cur].parent {
            out.push(p);
            cur = p;
        }
        out.reverse();
        out
    }

    /// Path of `id` and its ancestors from time 0 up to `until`. With
    /// `grid_only`, keeps only grid times `k·h` and `until` itself, which
    /// matches [`crate::kernels::uniform_grid`] point for point.
    pub fn ancestral_path(&self, id: usize, until: f64, grid_only: bool) -> Result<PathGrid> {
        let d = self.dim();
        let h = self.grid_step;
        let mut times = Vec::new();
        let mut values = Vec::new();
        for pid in self.lineage(id) {
            let tr = &self.particles[pid].trajectory;
            for (i, &s) in tr.times().iter().enumerate() {
                if s > until {
                    break;
                }
                if times.last().is_some_and(|&last| s <= last) {
                    continue;
                }
                let keep = !grid_only || s == until || ((s / h).round() * h == s && s < until);
                if keep {
                    times.push(s);
                    values.extend_from_slice(tr.point(i));
                }
            }
        }
        if times.last() != Some(&until) {
            return Err(Error::TimeNotRecorded { t: until });
        }
        PathGrid::new(times, values, d)
    }

    /// Checks binary branching, genealogy continuity and, when unpruned,
    /// `|N_T| − 1 = #branch events before T`.
    pub fn check_invariants(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Invalid(msg));
        for p in &self.particles {
            if p.trajectory.start_time() != p.birth || p.trajectory.end_time() != p.death {
                return fail(format!(
                    "particle {} trajectory does not span its life",
                    p.id
                ));
            }
            if !(p.birth < p.death || (p.birth == p.death && p.death == self.horizon)) {
                return fail(format!(
                    "particle {} has birth {} >= death {}",
                    p.id, p.birth, p.death
                ));
            }
            match (p.fate, p.children) {
                (Fate::Branched, Some([a, b])) => {
                    for c in [a, b] {
                        let child = &self.particles[c];
                        if child.parent != Some(p.id) || child.birth != p.death {
                            return fail(format!("child {c} of {} misattached", p.id));
                        }
                        if child.trajectory.point(0) != p.end_position() {
                            return fail(format!("child {c} does not start at its parent's end"));
                        }
                    }
                }
                (Fate::Branched, None) => {
                    return fail(format!("branched particle {} has no children", p.id))
                }
                (_, Some(_)) => return fail(format!("leaf {} has children", p.id)),
                _ => {}
            }
        }
        if !self.pruned {
            let n = self.population(self.horizon);
            if n != 1 + self.branch_events_before(self.horizon) {
                return fail(format!("population {n} does not match branch count"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::engine::{population_at, population_horizon, PruneRule, Stop, Storage};

    fn model(d: u32) -> ModelParams {
        ModelParams::new(d).unwrap()
    }

    #[test]
    fn zero_horizon_is_root_only() {
        let tree = simulate_tree(&SimConfig::new(model(2), 0.0), RngStream::new(1, 0)).unwrap();
        assert_eq!(tree.len(), 1);
        assert_eq!(tree.population(0.0), 1);
        tree.check_invariants().unwrap();
    }

    #[test]
    fn invariants_and_identity_hold() {
        for seed in 0..20 {
            let cfg = SimConfig::new(model(3), 3.0).with_grid_step(0.05);
            let tree = simulate_tree(&cfg, RngStream::new(seed, 4)).unwrap();
            tree.check_invariants().unwrap();
            for t in [0.5, 1.7, 3.0] {
                let n = tree.population(t);
                assert_eq!(n, 1 + tree.branch_events_before(t));
            }
            let lifetimes_only = population_at(RngStream::new(seed, 4), 3.0, 1 << 20).unwrap();
            assert_eq!(lifetimes_only, tree.population(3.0));
        }
    }

    #[test]
    fn storage_mode_does_not_change_genealogy() {
        let base = SimConfig::new(model(2), 4.0).with_grid_step(0.1);
        let full = simulate_tree(&base, RngStream::new(9, 9)).unwrap();
        let ends = simulate_tree(
            &base.clone().with_storage(Storage::Endpoints),
            RngStream::new(9, 9),
        )
        .unwrap();
        assert_eq!(full.len(), ends.len());
        for (a, b) in full.particles.iter().zip(&ends.particles) {
            assert_eq!((a.birth, a.death, a.parent), (b.birth, b.death, b.parent));
            assert!(b.trajectory.len() <= 2);
        }
    }

    #[test]
    fn population_stop_hits_target_exactly() {
        for n in [1, 2, 7, 100, 1000] {
            let cfg = SimConfig::new(model(2), 0.0)
                .with_stop(Stop::Population(n))
                .with_grid_step(f64::INFINITY)
                .with_storage(Storage::Endpoints);
            let stream = RngStream::new(3, n as u64);
            let tree = simulate_tree(&cfg, stream).unwrap();
            assert_eq!(tree.population(tree.horizon), n);
            assert_eq!(tree.stop_reason, StopReason::PopulationCap);
            assert_eq!(
                tree.horizon,
                population_horizon(stream, n, 1 << 20).unwrap()
            );
        }
    }

    #[test]
    fn cap_is_enforced() {
        let cfg = SimConfig::new(model(1), 12.0)
            .with_grid_step(f64::INFINITY)
            .with_max_particles(500);
        let err = simulate_tree(&cfg, RngStream::new(1, 1)).unwrap_err();
        assert_eq!(err, Error::PopulationCap { cap: 500 });
    }

    #[test]
    fn pruning_kills_and_records() {
        let rule = PruneRule::with_depth(1.0);
        let cfg = SimConfig::new(model(2), 6.0)
            .with_grid_step(0.1)
            .with_pruning(Some(rule));
        let tree = simulate_tree(&cfg, RngStream::new(5, 5)).unwrap();
        tree.check_invariants().unwrap();
        let killed: Vec<_> = tree
            .particles
            .iter()
            .filter(|p| p.fate == Fate::Killed)
            .collect();
        assert!(!killed.is_empty());
        for p in killed {
            assert!(rule.kills(p.end_position(), p.death));
        }
    }

    #[test]
    fn query_times_are_recorded() {
        let cfg = SimConfig::new(model(2), 3.0)
            .with_grid_step(f64::INFINITY)
            .with_storage(Storage::Endpoints)
            .with_query_times(vec![1.25, 2.5]);
        let tree = simulate_tree(&cfg, RngStream::new(2, 2)).unwrap();
        for t in [1.25, 2.5, 3.0] {
            for p in tree.alive(t) {
                p.position_at(t).unwrap();
            }
        }
    }

    #[test]
    fn ancestral_path_on_grid_matches_uniform_grid() {
        let cfg = SimConfig::new(model(2), 2.0).with_grid_step(0.01);
        let tree = simulate_tree(&cfg, RngStream::new(8, 1)).unwrap();
        let grid = crate::kernels::uniform_grid(2.0, 0.01).unwrap();
        for p in tree.alive(2.0) {
            let path = tree.ancestral_path(p.id, 2.0, true).unwrap();
            assert_eq!(path.times(), &grid[..]);
            assert_eq!(path.point(path.len() - 1), p.end_position());
        }
    }
}
