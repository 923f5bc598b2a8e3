use serde::{Deserialize, Serialize};

use super::engine::{self, Fate, ParticleView, SimConfig, Visitor};
use super::tree::{Particle, ParticleTree};
use crate::barrier::{BarrierParams, Curve};
use crate::error::{domain, Error, Result};
use crate::kernels::{path::norm, RngStream};
use crate::model::{z_term_log, ZVariant};
use crate::stats::CompensatedSum;

/// A maximum together with the id of the particle attaining it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extreme {
    pub value: f64,
    pub id: usize,
}

impl Extreme {
    /// Larger value wins; equal values go to the lower id.
    fn offer(slot: &mut Option<Extreme>, value: f64, id: usize) {
        match slot {
            Some(e) if e.value > value || (e.value == value && e.id < id) => {}
            _ => *slot = Some(Extreme { value, id }),
        }
    }
}

fn extreme_by(tree: &ParticleTree, t: f64, f: impl Fn(&[f64]) -> f64) -> Result<Extreme> {
    if t > tree.horizon {
        return Err(domain(
            "query time",
            format!("t = {t} beyond horizon {}", tree.horizon),
        ));
    }
    let mut best = None;
    for p in tree.alive(t) {
        Extreme::offer(&mut best, f(p.position_at(t)?), p.id);
    }
    best.ok_or(Error::Extinct { t })
}

/// `R_t* = max_{v ∈ N_t} |X_t^v|`.
pub fn max_modulus(tree: &ParticleTree, t: f64) -> Result<Extreme> {
    extreme_by(tree, t, norm)
}

/// Largest signed value of coordinate `axis` over `N_t`.
pub fn max_coordinate(tree: &ParticleTree, t: f64, axis: usize) -> Result<Extreme> {
    if axis >= tree.dim() {
        return Err(domain(
            "axis",
            format!("axis {axis} in dimension {}", tree.dim()),
        ));
    }
    extreme_by(tree, t, |x| x[axis])
}

struct HorizonMax {
    axis: Option<usize>,
    best: Option<Extreme>,
}

impl Visitor for HorizonMax {
    fn visit(&mut self, p: &ParticleView<'_>) {
        if p.fate == Fate::Survived {
            let x = p.last_position();
            let v = match self.axis {
                Some(a) => x[a],
                None => norm(x),
            };
            Extreme::offer(&mut self.best, v, p.id);
        }
    }
}

/// Maximum modulus (or coordinate `axis`) at the horizon without keeping
/// the tree in memory.
pub fn horizon_max(config: &SimConfig, stream: RngStream, axis: Option<usize>) -> Result<Extreme> {
    let mut v = HorizonMax { axis, best: None };
    let summary = engine::run(config, stream, &mut v)?;
    v.best.ok_or(Error::Extinct { t: summary.horizon })
}

/// `Z_L`: the window sum of `pow^{−α} (√2L − R) e^{−(√2L − R)√2}` over
/// particles alive at `L`.
pub fn compute_z(tree: &ParticleTree, l: f64, variant: ZVariant) -> Result<f64> {
    if l > tree.horizon {
        return Err(domain(
            "L",
            format!("L = {l} beyond horizon {}", tree.horizon),
        ));
    }
    let window = crate::model::WindowSpec::new(l)?;
    let mut sum = CompensatedSum::default();
    for p in tree.alive(l) {
        let r = norm(p.position_at(l)?);
        if window.contains(r) {
            sum.add(z_term_log(r, l, &tree.model, variant).exp());
        }
    }
    Ok(sum.value())
}

/// Constraints defining the two good-particle events on a tree started in
/// the window.
#[derive(Clone)]
pub struct GoodParticleSpec {
    /// Time at which candidates are counted (`t̃ − ℓ`).
    pub count_time: f64,
    /// Time at which descendants are examined (`t̃`).
    pub final_time: f64,
    /// Level a descendant has to exceed (`m_t + y`).
    pub target: f64,
    pub f_upper: Option<Curve>,
    /// Strict lower bound on the modulus at `count_time` for the F-event.
    pub f_endpoint_min: f64,
    pub g_upper: Option<Curve>,
    pub g_lower: Option<Curve>,
    /// Closed range of the modulus at `count_time` for the G-event.
    pub g_endpoint: (f64, f64),
}

impl GoodParticleSpec {
    pub fn from_params(p: &BarrierParams) -> Self {
        let d = f64::from(p.model.dim());
        let ell = p.ell;
        // y(b) is decreasing in b
        let g_endpoint = (p.y_coord(ell.powf(2.0 / 3.0)), p.y_coord(ell.cbrt()));
        Self {
            count_time: p.count_time(),
            final_time: p.shifted_horizon(),
            target: p.target(),
            f_upper: Some(p.b0_curve()),
            f_endpoint_min: p.t / d.sqrt(),
            g_upper: Some(p.upper_line_curve()),
            g_lower: Some(p.q_curve()),
            g_endpoint,
        }
    }

    /// No barriers and no endpoint restriction: only the descendant event.
    pub fn unconstrained(count_time: f64, final_time: f64, target: f64) -> Self {
        Self {
            count_time,
            final_time,
            target,
            f_upper: None,
            f_endpoint_min: f64::NEG_INFINITY,
            g_upper: None,
            g_lower: None,
            g_endpoint: (f64::NEG_INFINITY, f64::INFINITY),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GoodParticleCount {
    pub gamma: usize,
    pub lambda_bar: usize,
}

fn segment_ok(p: &Particle, until: f64, upper: &Option<Curve>, lower: &Option<Curve>) -> bool {
    p.trajectory
        .tracks()
        .take_while(|&(s, _)| s <= until)
        .all(|(s, r)| {
            upper.as_ref().is_none_or(|f| r <= f(s) + 1e-12)
                && lower.as_ref().is_none_or(|g| r >= g(s) - 1e-12)
        })
}

/// Counts `Γ` (F-events) and `Λ̄` (G-events) among particles alive at
/// `count_time`. Barriers are checked at every recorded time up to
/// `count_time`; the descendant event looks at moduli at `final_time` only.
pub fn count_good_particles(
    tree: &ParticleTree,
    spec: &GoodParticleSpec,
) -> Result<GoodParticleCount> {
    if !(spec.count_time <= spec.final_time) || spec.final_time > tree.horizon {
        return Err(domain(
            "good particle times",
            format!(
                "need count {} <= final {} <= horizon {}",
                spec.count_time, spec.final_time, tree.horizon
            ),
        ));
    }
    let n = tree.len();
    let mut f_ok = vec![false; n];
    let mut g_ok = vec![false; n];
    for p in &tree.particles {
        if p.birth > spec.count_time {
            continue;
        }
        let (pf, pg) = p.parent.map_or((true, true), |q| (f_ok[q], g_ok[q]));
        f_ok[p.id] = pf && segment_ok(p, spec.count_time, &spec.f_upper, &None);
        g_ok[p.id] = pg && segment_ok(p, spec.count_time, &spec.g_upper, &spec.g_lower);
    }
    let mut desc_max = vec![f64::NEG_INFINITY; n];
    for p in tree.particles.iter().rev() {
        desc_max[p.id] = if p.is_alive(spec.final_time) {
            norm(p.position_at(spec.final_time)?)
        } else if let Some([a, b]) = p.children {
            desc_max[a].max(desc_max[b])
        } else {
            f64::NEG_INFINITY
        };
    }
    let mut out = GoodParticleCount::default();
    for p in tree.alive(spec.count_time) {
        if !(desc_max[p.id] > spec.target) {
            continue;
        }
        let r = norm(p.position_at(spec.count_time)?);
        if f_ok[p.id] && r > spec.f_endpoint_min {
            out.gamma += 1;
        }
        if g_ok[p.id] && (spec.g_endpoint.0..=spec.g_endpoint.1).contains(&r) {
            out.lambda_bar += 1;
        }
    }
    Ok(out)
}
