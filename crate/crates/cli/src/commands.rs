use std::path::Path;

use bbm_core::mc::McPlan;
use bbm_core::model::{tail_normalizer, ModelParams, WindowSpec, ZVariant, SQRT2};
use bbm_core::sim::{
    compute_z, coupled_discrepancy, simulate_tree, tree_from_json, tree_to_json, Fate,
    ParticleView, PruneRule, SimConfig, Stop, Storage, TreeExport, Visitor,
};
use bbm_core::stats::{
    band_width, bramson_tail_bound_check, centered_max_samples, coupling_tail_compare,
    estimate_centered_max_cdf, fit_tail_rate, gumbel_fit, mallein_ratio, right_tail_normalized,
    tail_estimates, window_max_samples, Ratio,
};
use bbm_core::TailEstimate;

use crate::config::{read, Common, Resolved};
use crate::render::render_svg;
use crate::table::{Cell, Table};
use crate::verify::run_suite;
use crate::CliError;

/// What a command produces.
pub enum Output {
    Table(Table),
    Svg(String),
    /// A table whose checks did not all pass.
    Failed(Table),
}

struct Run {
    r: Resolved,
    seed: u64,
    workers: usize,
}

impl Run {
    fn new(command: &str, c: &Common) -> Result<Self, CliError> {
        let mut r = Resolved::new(command);
        let seed = r.scalar("seed", c.seed, 1u64);
        Ok(Self {
            r,
            seed,
            workers: c.workers()?,
        })
    }

    fn plan(&mut self, c: &Common, default_n: usize) -> Result<McPlan, CliError> {
        let n = self.r.scalar("n", c.n, default_n);
        if n == 0 {
            return Err(CliError::Usage("--n must be positive".into()));
        }
        Ok(McPlan::new(n, self.seed).with_workers(self.workers))
    }

    fn model(&mut self, c: &Common, default: u32) -> Result<ModelParams, CliError> {
        Ok(ModelParams::new(self.r.scalar("d", c.d, default))?)
    }

    /// Kill depth from `--prune`: `off`/`none`, `auto` (the command's
    /// default) or a positive number.
    fn prune_depth(&mut self, c: &Common, auto: Option<f64>) -> Result<Option<f64>, CliError> {
        let depth = match c.prune.as_deref().map(str::trim) {
            None | Some("auto") => auto,
            Some("off" | "none") => None,
            Some(s) => match s.parse::<f64>() {
                Ok(k) if k > 0.0 && k.is_finite() => Some(k),
                _ => {
                    return Err(CliError::Usage(format!(
                        "--prune {s}: expected off, auto or a positive depth"
                    )))
                }
            },
        };
        self.r.record("prune_depth", depth);
        Ok(depth)
    }

    fn table(self, command: &str, grid_step: Option<f64>, columns: &[&'static str]) -> Table {
        Table::new(command, self.seed, grid_step, self.r, columns)
    }
}

fn positive(name: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Usage(format!(
            "--{name} = {v} must be positive and finite"
        )))
    }
}

fn ratio_cells(r: &Ratio) -> [Cell; 3] {
    match *r {
        Ratio::Point { value, stderr } => ["point".into(), value.into(), stderr.into()],
        Ratio::Interval { hi, .. } => ["interval".into(), hi.into(), f64::NAN.into()],
    }
}

/// Largest modulus among particles alive at the horizon, lowest id on ties.
#[derive(Default)]
struct TopSurvivor {
    best: Option<(f64, usize)>,
}

impl Visitor for TopSurvivor {
    fn visit(&mut self, p: &ParticleView<'_>) {
        if p.fate != Fate::Survived {
            return;
        }
        let r = p.last_position().iter().map(|v| v * v).sum::<f64>().sqrt();
        let better = match self.best {
            None => true,
            Some((v, id)) => r > v || (r == v && p.id < id),
        };
        if better {
            self.best = Some((r, p.id));
        }
    }
}

pub fn simulate(c: &Common) -> Result<Output, CliError> {
    let mut run = Run::new("simulate", c)?;
    let model = run.model(c, 2)?;
    let stop = match c.population {
        Some(n) => Stop::Population(run.r.scalar("population", Some(n), n)),
        None => Stop::Horizon(positive("t", run.r.scalar("t", c.t, 5.0))?),
    };
    let h = run.r.grid_step(c.grid_step, 0.05)?;
    let depth = run.prune_depth(c, None)?;
    let plan = run.plan(c, 1)?;
    let svg = c
        .out
        .as_deref()
        .is_some_and(|p| p.extension().is_some_and(|e| e == "svg"));
    let keep_paths = svg || c.tree.is_some();
    let cfg = SimConfig::new(model, 0.0)
        .with_stop(stop)
        .with_grid_step(h)
        .with_pruning(depth.map(PruneRule::with_depth))
        .with_storage(if keep_paths {
            Storage::Full
        } else {
            Storage::Endpoints
        });
    cfg.validate()?;

    if keep_paths {
        let tree = simulate_tree(&cfg, plan.stream.child(0))?;
        if let Some(path) = &c.tree {
            write_file(path, &tree_to_json(&tree)?)?;
        }
        if svg {
            return Ok(Output::Svg(render_svg(&TreeExport::from(&tree))));
        }
    }
    let rows = plan
        .map(|i, s| -> Result<Vec<Cell>, CliError> {
            let mut top = TopSurvivor::default();
            let summary = bbm_core::sim::run(&cfg, s, &mut top)?;
            let t = summary.horizon;
            let (max, id) = top.best.unwrap_or((f64::NEG_INFINITY, usize::MAX));
            let centered = model.centering(t).map_or(f64::NAN, |m| max - m.value);
            Ok(vec![
                i.into(),
                t.into(),
                serde_json::to_value(summary.stop_reason)
                    .ok()
                    .and_then(|v| v.as_str().map(String::from))
                    .unwrap_or_default()
                    .into(),
                summary.particles.into(),
                summary.survivors.into(),
                summary.killed.into(),
                max.into(),
                if id == usize::MAX {
                    f64::NAN.into()
                } else {
                    id.into()
                },
                centered.into(),
            ])
        })
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    let mut table = run.table(
        "simulate",
        Some(h),
        &[
            "tree",
            "horizon",
            "stop_reason",
            "particles",
            "alive",
            "killed",
            "max_modulus",
            "max_id",
            "centered_max",
        ],
    );
    rows.into_iter().for_each(|r| table.push(r));
    Ok(Output::Table(table))
}

/// Kill curve for centered-max runs: slope `m_t / t`, sagging by `√s` over
/// `[0, 2t]` so the level at `t` stays well below `m_t`.
fn max_rule(model: &ModelParams, t: f64, depth: f64) -> PruneRule {
    PruneRule::with_depth(depth)
        .with_slope(model.speed(t))
        .sagging(1.0, 2.0 * t)
}

fn max_samples(
    run: &mut Run,
    c: &Common,
    t_default: f64,
    n_default: usize,
) -> Result<(ModelParams, f64, f64, Vec<f64>), CliError> {
    let model = run.model(c, 2)?;
    let t = positive("t", run.r.scalar("t", c.t, t_default))?;
    let h = run.r.grid_step(c.grid_step, f64::INFINITY)?;
    let rule = run
        .prune_depth(c, Some(6.0))?
        .map(|k| max_rule(&model, t, k));
    let plan = run.plan(c, n_default)?;
    let samples = centered_max_samples(model, t, rule, h, &plan)?;
    Ok((model, t, h, samples))
}

pub fn tail(c: &Common) -> Result<Output, CliError> {
    let mut run = Run::new("tail", c)?;
    let ys = run.r.list(
        "y",
        c.y.as_ref(),
        &[-2.0, -1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0],
    )?;
    let (model, t, h, samples) = max_samples(&mut run, c, 10.0, 10_000)?;
    let cdf = estimate_centered_max_cdf(&samples, &ys)?;
    let tails = tail_estimates(&samples, &ys)?;
    let extinct = samples.iter().filter(|x| x.is_infinite()).count();
    let mut table = run.table(
        "tail",
        h.is_finite().then_some(h),
        &["y", "cdf", "cdf_stderr", "tail", "tail_stderr"],
    );
    for ((y, f), p) in ys.iter().zip(&cdf).zip(&tails) {
        table.push(vec![
            (*y).into(),
            f.value.into(),
            f.stderr.into(),
            p.value.into(),
            p.stderr.into(),
        ]);
    }
    table.note("m_t", model.m(t));
    table.note("extinct", extinct);
    if let Ok(g) = gumbel_fit(&samples) {
        table.note("gumbel_location", g.location);
        table.note("gumbel_scale", g.scale);
    }
    Ok(Output::Table(table))
}

pub fn mallein(c: &Common) -> Result<Output, CliError> {
    let mut run = Run::new("mallein", c)?;
    let ys = run.r.list("y", c.y.as_ref(), &[1.0, 1.5, 2.0, 2.5, 3.0])?;
    let t = c.t.unwrap_or(12.0);
    if let Some(y) = ys.iter().find(|&&y| !(1.0..=t.sqrt()).contains(&y)) {
        return Err(CliError::Usage(format!(
            "y = {y} outside [1, √t] = [1, {:.4}]",
            t.sqrt()
        )));
    }
    let (_, t, h, samples) = max_samples(&mut run, c, 12.0, 20_000)?;
    let tails = tail_estimates(&samples, &ys)?;
    let ratios = mallein_ratio(t, &ys, &tails)?;
    let mut table = run.table(
        "mallein",
        h.is_finite().then_some(h),
        &["y", "tail", "tail_stderr", "kind", "ratio", "ratio_stderr"],
    );
    for ((y, p), r) in ys.iter().zip(&tails).zip(&ratios) {
        let [kind, v, se] = ratio_cells(r);
        table.push(vec![
            (*y).into(),
            p.value.into(),
            p.stderr.into(),
            kind,
            v,
            se,
        ]);
    }
    table.note("band_width", band_width(&ratios).unwrap_or(f64::NAN));
    if let Ok(fit) = fit_tail_rate(&ys, &tails, true) {
        table.note("rate_slope", fit.slope);
        table.note("rate_intercept", fit.intercept);
        table.note("rate_residual_rms", fit.residual_rms);
    }
    Ok(Output::Table(table))
}

pub fn right_tail(c: &Common) -> Result<Output, CliError> {
    let mut run = Run::new("right-tail", c)?;
    let model = run.model(c, 2)?;
    let l = run.r.scalar("L", c.l, 9.0);
    let window = WindowSpec::new(l)?;
    let (z_lo, z_hi) = window.z_range();
    let zs = run
        .r
        .list("z", c.z.as_ref(), &[2.0 * l.powf(1.0 / 6.0), l.sqrt()])?;
    if let Some(z) = zs.iter().find(|&&z| !(z_lo..=z_hi).contains(&z)) {
        return Err(CliError::Usage(format!(
            "z = {z} outside the window depth range [L^(1/6), L^(2/3)] = [{z_lo:.4}, {z_hi:.4}] for L = {l}"
        )));
    }
    let t = run.r.scalar("t", c.t, 20.0);
    if !(t > l) {
        return Err(CliError::Usage(format!("--t = {t} must exceed L = {l}")));
    }
    let y = run.r.single("y", c.y.as_ref(), 0.0)?;
    let h = run.r.grid_step(c.grid_step, f64::INFINITY)?;
    let depth = run.prune_depth(c, Some(6.0))?;
    let plan = run.plan(c, 20_000)?;
    let target = model.m(t) + y;
    let mut tails = Vec::new();
    for (i, &z) in zs.iter().enumerate() {
        let x = SQRT2 * l - z;
        let rule = depth.map(|k| {
            PruneRule::with_depth(k)
                .with_slope((target - x) / (t - l))
                .sagging(1.0, t - l)
        });
        let maxima = window_max_samples(model, l, z, t, rule, h, &plan.lane(i as u64))?;
        let hits = maxima.iter().filter(|&&r| r > target).count();
        tails.push(TailEstimate::binomial(hits, maxima.len()));
    }
    let norm = right_tail_normalized(&model, l, &zs, y, &tails, ZVariant::RadialPower)?;
    let mut table = run.table(
        "right-tail",
        h.is_finite().then_some(h),
        &[
            "z",
            "start",
            "p_hat",
            "stderr",
            "m_lz",
            "kind",
            "normalized",
            "normalized_stderr",
        ],
    );
    for ((&z, p), r) in zs.iter().zip(&tails).zip(&norm) {
        let m = tail_normalizer(l, z, y, &model)?;
        let [kind, v, se] = ratio_cells(r);
        table.push(vec![
            z.into(),
            (SQRT2 * l - z).into(),
            p.value.into(),
            p.stderr.into(),
            m.value().into(),
            kind,
            v,
            se,
        ]);
    }
    let pts: Vec<f64> = norm.iter().filter_map(Ratio::point).collect();
    let spread = if pts.len() == norm.len() {
        pts.iter().copied().fold(f64::NEG_INFINITY, f64::max)
            / pts.iter().copied().fold(f64::INFINITY, f64::min)
    } else {
        f64::NAN
    };
    table.note("target", target);
    table.note("collapse_spread", spread);
    Ok(Output::Table(table))
}

pub fn verify(c: &Common) -> Result<Output, CliError> {
    let mut run = Run::new("verify", c)?;
    let plan = run.plan(c, 100_000)?;
    let checks = run_suite(&plan)?;
    let mut table = run.table(
        "verify",
        None,
        &["check", "pass", "statistic", "gate", "detail"],
    );
    let failed = checks.iter().filter(|k| !k.pass).count();
    for k in checks {
        table.push(vec![
            k.name.into(),
            k.pass.into(),
            k.statistic.into(),
            k.gate.into(),
            k.detail.replace(',', ";").into(),
        ]);
    }
    table.note("failed", failed);
    Ok(if failed == 0 {
        Output::Table(table)
    } else {
        Output::Failed(table)
    })
}

pub fn zstat(c: &Common) -> Result<Output, CliError> {
    let mut run = Run::new("zstat", c)?;
    let model = run.model(c, 2)?;
    let l = run.r.scalar("L", c.l, 6.0);
    WindowSpec::new(l)?;
    let h = run.r.grid_step(c.grid_step, f64::INFINITY)?;
    let plan = run.plan(c, 200)?;
    let cfg = SimConfig::new(model, l)
        .with_grid_step(h)
        .with_storage(Storage::Endpoints);
    let rows = plan
        .map(|i, s| -> Result<Vec<Cell>, CliError> {
            let tree = simulate_tree(&cfg, s)?;
            Ok(vec![
                i.into(),
                tree.population(l).into(),
                compute_z(&tree, l, ZVariant::RadialPower)?.into(),
                compute_z(&tree, l, ZVariant::Sqrt2LPower)?.into(),
            ])
        })
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    let mut table = run.table(
        "zstat",
        h.is_finite().then_some(h),
        &["replicate", "population", "z_radial", "z_sqrt2l"],
    );
    let zs: Vec<f64> = rows
        .iter()
        .map(|r| match r[2] {
            Cell::Float(x) => x,
            _ => f64::NAN,
        })
        .collect();
    rows.into_iter().for_each(|r| table.push(r));
    let est = TailEstimate::from_samples(&zs);
    table.note("z_radial_mean", est.value);
    table.note("z_radial_stderr", est.stderr);
    table.note(
        "z_radial_zero_fraction",
        zs.iter().filter(|&&z| z == 0.0).count() as f64 / zs.len() as f64,
    );
    Ok(Output::Table(table))
}

pub fn couple(c: &Common) -> Result<Output, CliError> {
    let mut run = Run::new("couple", c)?;
    let model = run.model(c, 2)?;
    let x0 = run.r.scalar("x0", c.x0, 200.0);
    let ell = positive("ell", run.r.single("ell", c.ell.as_ref(), 2.0)?)?;
    let y = run.r.single("y", c.y.as_ref(), 2.0)?;
    let h = run.r.grid_step(c.grid_step, 1e-3)?;
    let plan = run.plan(c, 10_000)?;
    let target = x0 + y;
    let (bessel, oned) = coupling_tail_compare(model, x0, ell, target, &plan)?;
    let pairs = plan.lane(7).with_n(plan.n.min(1_000));
    let outcomes = pairs
        .map(|_, s| coupled_discrepancy(model, x0, ell, h, s))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    let worst = outcomes
        .iter()
        .map(|o| o.max_discrepancy)
        .fold(0.0, f64::max);
    let bound = outcomes.first().map_or(f64::NAN, |o| o.bound);
    let high = outcomes.iter().filter(|o| o.stayed_high).count();
    let mut table = run.table("couple", Some(h), &["side", "estimate", "stderr", "n"]);
    for (side, e) in [("bessel", &bessel), ("oned", &oned)] {
        table.push(vec![
            side.into(),
            e.value.into(),
            e.stderr.into(),
            e.n.into(),
        ]);
    }
    let z = (bessel.value - oned.value) / bessel.combined_stderr(&oned);
    table.note("m_target", target);
    table.note("z", z);
    table.note("agree", z.abs() <= 3.0 || bessel.value == oned.value);
    table.note("coupled_pairs", outcomes.len());
    table.note("stayed_high", high);
    table.note("max_discrepancy", worst);
    table.note("discrepancy_bound", bound);
    Ok(Output::Table(table))
}

pub fn bramson(c: &Common) -> Result<Output, CliError> {
    let mut run = Run::new("bramson", c)?;
    let ells = run.r.list("ell", c.ell.as_ref(), &[8.0, 16.0])?;
    let ws = run.r.list("w", c.w.as_ref(), &[1.0, 2.0, 3.0])?;
    let kappa = run.r.scalar("kappa", c.kappa, 0.0);
    let rule = run
        .prune_depth(c, Some(4.0))?
        .map(|k| PruneRule::with_depth(k).sagging(1.0, f64::INFINITY));
    let plan = run.plan(c, 10_000)?;
    let tab = bramson_tail_bound_check(&ells, &ws, kappa, rule, &plan)?;
    let mut table = run.table(
        "bramson",
        None,
        &[
            "ell",
            "w",
            "empirical",
            "stderr",
            "shape",
            "ratio",
            "bound",
            "censored",
        ],
    );
    for cell in &tab.cells {
        table.push(vec![
            cell.ell.into(),
            cell.w.into(),
            cell.empirical.value.into(),
            cell.empirical.stderr.into(),
            cell.shape.into(),
            (cell.empirical.value / cell.shape).into(),
            tab.bound(cell).into(),
            cell.censored.into(),
        ]);
    }
    table.note("c_fit", tab.c_fit);
    table.note("censored", tab.cells.iter().filter(|c| c.censored).count());
    Ok(Output::Table(table))
}

pub fn render(c: &Common) -> Result<Output, CliError> {
    let export = match &c.tree {
        Some(path) => tree_from_json(&read(path)?)?,
        None => {
            let mut run = Run::new("render", c)?;
            let model = run.model(c, 2)?;
            let stop = match (c.population, c.t) {
                (_, Some(t)) if c.population.is_none() => Stop::Horizon(positive("t", t)?),
                (n, _) => Stop::Population(n.unwrap_or(10_000)),
            };
            let h = run.r.grid_step(c.grid_step, 0.05)?;
            let cfg = SimConfig::new(model, 0.0).with_stop(stop).with_grid_step(h);
            TreeExport::from(&simulate_tree(
                &cfg,
                bbm_core::kernels::RngStream::new(run.seed, 0).child(0),
            )?)
        }
    };
    Ok(Output::Svg(render_svg(&export)))
}

pub fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}
