//! SVG of a tree: trajectories in the plane of the first two coordinates
//! (time against position in one dimension) on the left, modulus against
//! time on the right with the centering `m_t` dashed.

use std::fmt::Write as _;

use bbm_core::model::ModelParams;
use bbm_core::sim::TreeExport;

const PANEL: f64 = 560.0;
const PAD: f64 = 40.0;

struct Scale {
    lo: f64,
    hi: f64,
    px_lo: f64,
    px_hi: f64,
}

impl Scale {
    fn new(lo: f64, hi: f64, px_lo: f64, px_hi: f64) -> Self {
        let (lo, hi) = if hi > lo {
            (lo, hi)
        } else {
            (lo - 1.0, lo + 1.0)
        };
        Self {
            lo,
            hi,
            px_lo,
            px_hi,
        }
    }

    fn map(&self, v: f64) -> f64 {
        self.px_lo + (v - self.lo) / (self.hi - self.lo) * (self.px_hi - self.px_lo)
    }
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    })
}

fn modulus(p: &[f64]) -> f64 {
    p.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// One `<polyline>` per particle in the left panel and a single `<path>`
/// holding every modulus trace in the right one.
pub fn render_svg(tree: &TreeExport) -> String {
    let d = tree.dim.max(1);
    let planar = d >= 2;
    let point = |rec: &bbm_core::sim::ParticleRecord, i: usize| -> (f64, f64) {
        let x = &rec.positions[i * d..(i + 1) * d];
        if planar {
            (x[0], x[1])
        } else {
            (rec.times[i], x[0])
        }
    };
    let all_points = || {
        tree.particles
            .iter()
            .flat_map(move |p| (0..p.times.len()).map(move |i| point(p, i)))
    };
    let (x_lo, x_hi) = bounds(all_points().map(|p| p.0));
    let (y_lo, y_hi) = bounds(all_points().map(|p| p.1));
    // square aspect in the plane so the isotropy is visible
    let (x_lo, x_hi, y_lo, y_hi) = if planar {
        let half = 0.5 * (x_hi - x_lo).max(y_hi - y_lo);
        let (cx, cy) = (0.5 * (x_lo + x_hi), 0.5 * (y_lo + y_hi));
        (cx - half, cx + half, cy - half, cy + half)
    } else {
        (x_lo, x_hi, y_lo, y_hi)
    };
    let sx = Scale::new(x_lo, x_hi, PAD, PAD + PANEL);
    let sy = Scale::new(y_lo, y_hi, PAD + PANEL, PAD);

    let horizon = tree.horizon;
    let model = ModelParams::new(d as u32).ok();
    let r_hi = bounds(
        tree.particles
            .iter()
            .flat_map(|p| p.positions.chunks(d).map(modulus)),
    )
    .1;
    let m_hi = model.map_or(0.0, |m| if horizon >= 1.0 { m.m(horizon) } else { 0.0 });
    let left2 = 2.0 * PAD + PANEL;
    let st = Scale::new(0.0, horizon, left2 + PAD, left2 + PAD + PANEL);
    let sr = Scale::new(0.0, r_hi.max(m_hi), PAD + PANEL, PAD);

    let width = 2.0 * (PANEL + 2.0 * PAD);
    let height = PANEL + 2.0 * PAD;
    let mut s = String::with_capacity(64 * tree.particles.len() + 1024);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    let _ = writeln!(
        s,
        r#"<style>polyline{{fill:none;stroke-width:0.6}} .trace{{fill:none;stroke:#335;stroke-width:0.4;stroke-opacity:0.5}} .mt{{fill:none;stroke:#c22;stroke-width:1.5;stroke-dasharray:6 4}} text{{font:13px sans-serif}}</style>"#
    );
    let _ = writeln!(
        s,
        r#"<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{PAD}" y="24">d = {d}, T = {horizon:.3}, {} particles</text>"#,
        tree.particles.len()
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24">|X(t)| against t</text>"#,
        left2 + PAD
    );
    let _ = writeln!(s, r#"<g id="trajectories">"#);
    for p in &tree.particles {
        let hue = if horizon > 0.0 {
            240.0 * (1.0 - p.birth / horizon)
        } else {
            240.0
        };
        let _ = write!(s, r#"<polyline stroke="hsl({hue:.0},70%,42%)" points=""#);
        for i in 0..p.times.len() {
            let (a, b) = point(p, i);
            if i > 0 {
                s.push(' ');
            }
            let _ = write!(s, "{:.2},{:.2}", sx.map(a), sy.map(b));
        }
        s.push_str("\"/>\n");
    }
    let _ = writeln!(s, "</g>");

    let _ = write!(s, r#"<path class="trace" d=""#);
    for p in &tree.particles {
        for (i, (t, x)) in p.times.iter().zip(p.positions.chunks(d)).enumerate() {
            let cmd = if i == 0 { 'M' } else { 'L' };
            let _ = write!(s, "{cmd}{:.2} {:.2}", st.map(*t), sr.map(modulus(x)));
        }
    }
    s.push_str("\"/>\n");
    if let Some(m) = model.filter(|_| horizon > 1.0) {
        let _ = write!(s, r#"<path class="mt" d=""#);
        let steps = 100;
        for k in 0..=steps {
            let t = 1.0 + (horizon - 1.0) * k as f64 / steps as f64;
            let cmd = if k == 0 { 'M' } else { 'L' };
            let _ = write!(s, "{cmd}{:.2} {:.2}", st.map(t), sr.map(m.m(t).max(0.0)));
        }
        s.push_str("\"/>\n");
    }
    for (x0, label) in [(PAD, "x1 vs x2"), (left2 + PAD, "")] {
        let _ = writeln!(
            s,
            r##"<rect x="{x0}" y="{PAD}" width="{PANEL}" height="{PANEL}" fill="none" stroke="#999"/>"##
        );
        if planar && !label.is_empty() {
            let _ = writeln!(
                s,
                r#"<text x="{x0}" y="{}">{label}</text>"#,
                PAD + PANEL + 24.0
            );
        }
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}">t from 0 to {horizon:.3}; dashed: m_t</text>"#,
        left2 + PAD,
        PAD + PANEL + 24.0
    );
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use bbm_core::kernels::RngStream;
    use bbm_core::sim::{simulate_tree, SimConfig};

    #[test]
    fn one_polyline_per_particle() {
        for d in [1, 2, 3] {
            let cfg = SimConfig::new(ModelParams::new(d).unwrap(), 3.0).with_grid_step(0.1);
            let tree = simulate_tree(&cfg, RngStream::new(4, d as u64)).unwrap();
            let svg = render_svg(&TreeExport::from(&tree));
            assert_eq!(svg.matches("<polyline").count(), tree.len());
            assert!(!svg.contains("NaN"));
        }
    }
}
