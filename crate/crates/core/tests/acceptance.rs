//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Runs without the libtest harness so the lines are always
//! printed.

use std::time::Instant;

use rand::Rng;

use bbm_core::barrier::{
    ballot_probability, ballot_refinement_mc, constant, line, mc_conditional_barrier, BarrierParams,
};
use bbm_core::girsanov::{girsanov_log_weight, is_bessel_expectation};
use bbm_core::kernels::{chi_cdf, sample_bm_path, uniform_grid, PathGrid, RngStream};
use bbm_core::mc::McPlan;
use bbm_core::model::{ModelParams, ZVariant, SQRT2};
use bbm_core::sim::{
    compute_z, count_good_particles, coupled_discrepancy, many_to_one_check,
    many_to_two_moment_check, second_moment, simulate_tree, tree_to_json, Fate, GoodParticleSpec,
    PruneRule, SimConfig, Storage,
};
use bbm_core::stats::{
    band_width, centered_max_samples, coupling_tail_compare, fit_tail_rate, ks_test, mallein_ratio,
    max_config, prune_bias, prune_event_bias, right_tail_normalized, sample_synthetic,
    tail_estimates, window_max_samples, Ratio,
};

type Functional = dyn Fn(&PathGrid) -> f64 + Sync;

const K: f64 = 3.0;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn model(d: u32) -> ModelParams {
    ModelParams::new(d).unwrap()
}

fn ballot() -> Outcome {
    let mut rng = RngStream::new(2024, 1).rng();
    let mut worst: f64 = 0.0;
    let mut fails = 0;
    for i in 0..20u64 {
        let x = rng.random_range(-1.0..1.0);
        let y = rng.random_range(-1.0..1.0);
        let t: f64 = rng.random_range(0.5..4.0);
        let a = x + rng.random_range(0.3..1.5) * t.sqrt();
        let b = y + rng.random_range(0.3..1.5) * t.sqrt();
        let exact = ballot_probability(x, y, a, b, t).unwrap();
        let plan = McPlan::new(1_000_000, 1000 + i);
        let r = ballot_refinement_mc(x, y, a, b, t, 64, &plan).unwrap();
        let z = r.extrapolated.z_score(exact);
        worst = worst.max(z.abs());
        fails += usize::from(z.abs() > K);
    }
    outcome(
        fails == 0,
        format!("20 configs, n=1e6, 64/128/256 steps; max |z| after extrapolation = {worst:.2}"),
    )
}

fn many_to_few() -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    for (i, t) in [1.0f64, 3.0, 5.0].into_iter().enumerate() {
        let cfg = SimConfig::new(model(2), t)
            .with_grid_step(f64::INFINITY)
            .with_storage(Storage::Endpoints);
        let counts: Vec<f64> = McPlan::new(10_000, 10 + i as u64)
            .map(|_, s| simulate_tree(&cfg, s).unwrap().population(t) as f64);
        let est = bbm_core::TailEstimate::from_samples(&counts);
        let z = est.z_score(t.exp());
        pass &= z.abs() <= K;
        parts.push(format!("E N_{t} z={z:.2}"));
    }
    for (i, t) in [1.0f64, 3.0].into_iter().enumerate() {
        let est = many_to_two_moment_check(t, &McPlan::new(100_000, 20 + i as u64)).unwrap();
        let z = est.z_score(second_moment(t));
        pass &= z.abs() <= K;
        parts.push(format!("E N_{t}^2 z={z:.2}"));
    }
    outcome(pass, parts.join(", "))
}

fn girsanov() -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    let one = |_: &PathGrid| 1.0;
    for (i, d) in [2u32, 3, 5].into_iter().enumerate() {
        for (j, (x0, t)) in [(5.0, 0.5), (5.0, 2.0)].into_iter().enumerate() {
            let plan = McPlan::new(100_000, 300 + 10 * i as u64 + j as u64);
            let e = is_bessel_expectation(&one, x0, t, &model(d), 1e-3, &plan).unwrap();
            let z = e.estimate.z_score(1.0);
            pass &= z.abs() <= K && !e.degenerate;
            parts.push(format!("d={d} (x0={x0},T={t}) z={z:.2}"));
        }
    }
    // sign of the drift term on every sampled path, including starts near 0
    let mut sign_ok = true;
    let mut checked = 0;
    for (i, (x0, t)) in [(1.0, 0.5), (1.0, 2.0), (5.0, 0.5), (5.0, 2.0)]
        .into_iter()
        .enumerate()
    {
        let grid = uniform_grid(t, 1e-2).unwrap();
        let mut rng = RngStream::new(400, i as u64).rng();
        for _ in 0..5_000 {
            let p = sample_bm_path(&[x0], &grid, &mut rng).unwrap();
            sign_ok &= girsanov_log_weight(&p, &model(2)).unwrap().drift_term >= 0.0;
            for d in [3, 5] {
                sign_ok &= girsanov_log_weight(&p, &model(d)).unwrap().drift_term <= 0.0;
            }
            checked += 1;
        }
    }
    pass &= sign_ok;
    parts.push(format!(
        "sign invariants on {checked} paths: {}",
        if sign_ok { "ok" } else { "VIOLATED" }
    ));
    outcome(pass, parts.join(", "))
}

/// Follows the first child at every branching: a single Brownian path
/// through the tree.
fn first_child_modulus(cfg: &SimConfig, s: RngStream, t: f64) -> f64 {
    let tree = simulate_tree(cfg, s).unwrap();
    let mut id = 0;
    while let Some([a, _]) = tree.particle(id).children {
        id = a;
    }
    let p = tree.particle(id);
    assert_eq!(p.fate, Fate::Survived);
    let x = p.position_at(t).unwrap();
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn bessel_marginal() -> Outcome {
    let l = 2.0;
    let mut parts = Vec::new();
    let mut pass = true;
    for (i, d) in [1u32, 2, 3, 5].into_iter().enumerate() {
        let cfg = SimConfig::new(model(d), l)
            .with_grid_step(f64::INFINITY)
            .with_storage(Storage::Endpoints);
        let r: Vec<f64> =
            McPlan::new(100_000, 500 + i as u64).map(|_, s| first_child_modulus(&cfg, s, l));
        let ks = ks_test(&r, |x| chi_cdf(d, l, x)).unwrap();
        pass &= ks.passes(0.01);
        parts.push(format!("d={d} D={:.4} p={:.3}", ks.statistic, ks.p_value));
    }
    outcome(
        pass,
        format!("R_L, L={l}, n=1e5 per d: {}", parts.join(", ")),
    )
}

fn many_to_one_functionals() -> Outcome {
    let t: f64 = 4.0;
    let h: f64 = 0.01;
    let m = model(2);
    let x0 = [0.0, 0.0];
    let modulus = |p: &PathGrid, i: usize| p.track(i);
    let barrier = move |p: &PathGrid| {
        f64::from(u8::from(
            (0..p.len()).all(|i| modulus(p, i) <= 1.0 + 1.2 * p.times()[i]),
        ))
    };
    let terminal = move |p: &PathGrid| f64::from(u8::from(p.last_track() > 4.0));
    let mid = (t / 2.0 / h).round() as usize;
    let window = move |p: &PathGrid| f64::from(u8::from((1.0..=2.0).contains(&modulus(p, mid))));
    let fs: [(&str, &Functional); 3] = [
        ("barrier", &barrier),
        ("terminal", &terminal),
        ("window", &window),
    ];
    let mut parts = Vec::new();
    let mut pass = true;
    for (i, (name, f)) in fs.into_iter().enumerate() {
        let trees = McPlan::new(20_000, 600 + i as u64);
        let singles = McPlan::new(100_000, 610 + i as u64);
        let (lhs, rhs) = many_to_one_check(f, m, &x0, t, h, &trees, &singles).unwrap();
        let z = (lhs.value - rhs.value) / lhs.combined_stderr(&rhs);
        pass &= z.abs() <= K && rhs.value > 0.0;
        parts.push(format!(
            "{name}: tree {:.3} vs e^T path {:.3} (z={z:.2})",
            lhs.value, rhs.value
        ));
    }
    outcome(pass, parts.join(", "))
}

const MALLEIN_T: f64 = 12.0;
const Y_GRID: [f64; 5] = [1.0, 1.5, 2.0, 2.5, 3.0];

// Sag spans 2t so the kill level at the horizon sits near m_t − 9.5,
// below the left tail of the centered max.
fn mallein_rule(m: &ModelParams) -> PruneRule {
    PruneRule::with_depth(6.0)
        .with_slope(m.speed(MALLEIN_T))
        .sagging(1.0, 2.0 * MALLEIN_T)
}

fn mallein_and_rate() -> (Outcome, Outcome) {
    let m = model(2);
    let rule = mallein_rule(&m);
    let bias = prune_bias(
        &max_config(m, MALLEIN_T, Some(rule), f64::INFINITY),
        None,
        &McPlan::new(1000, 701),
    )
    .unwrap();
    let samples = centered_max_samples(
        m,
        MALLEIN_T,
        Some(rule),
        f64::INFINITY,
        &McPlan::new(50_000, 700),
    )
    .unwrap();
    let tails = tail_estimates(&samples, &Y_GRID).unwrap();
    let ratios = mallein_ratio(MALLEIN_T, &Y_GRID, &tails).unwrap();
    let width = band_width(&ratios);
    let shown: Vec<String> = ratios
        .iter()
        .map(|r| match r {
            Ratio::Point { value, .. } => format!("{value:.3}"),
            Ratio::Interval { hi, .. } => format!("<{hi:.3}"),
        })
        .collect();
    let band_ok = width.is_some_and(|w| w <= 10.0) && bias.fraction() < 0.01;
    let band = outcome(
        band_ok,
        format!(
            "d=2 t=12 n=5e4 ratios [{}], width {:.3}; prune bias {}/{} = {:.2}%",
            shown.join(", "),
            width.unwrap_or(f64::NAN),
            bias.changed,
            bias.n,
            100.0 * bias.fraction()
        ),
    );

    let fit = fit_tail_rate(&Y_GRID, &tails, true).unwrap();
    let mut rng = RngStream::new(702, 0).rng();
    let synth: Vec<f64> = (0..1_000_000).map(|_| sample_synthetic(&mut rng)).collect();
    let sfit = fit_tail_rate(&Y_GRID, &tail_estimates(&synth, &Y_GRID).unwrap(), true).unwrap();
    let rate_ok = (-1.7..=-1.2).contains(&fit.slope) && (sfit.slope + SQRT2).abs() <= 0.02;
    let rate = outcome(
        rate_ok,
        format!("simulated slope {:.4} (band [-1.7,-1.2]); synthetic slope {:.4} (target -1.4142 ± 0.02)", fit.slope, sfit.slope),
    );
    (band, rate)
}

fn right_tail_collapse() -> Outcome {
    let m = model(2);
    let (l, t, y) = (9.0f64, 20.0, 0.0);
    let zs = [2.0 * l.powf(1.0 / 6.0), l.sqrt()];
    let target = m.m(t) + y;
    let mut tails = Vec::new();
    let mut biases = Vec::new();
    for (i, &z) in zs.iter().enumerate() {
        let x = SQRT2 * l - z;
        let rule = PruneRule::with_depth(6.0)
            .with_slope((target - x) / (t - l))
            .sagging(1.0, t - l);
        let plan = McPlan::new(20_000, 800 + i as u64);
        let maxima = window_max_samples(m, l, z, t, Some(rule), f64::INFINITY, &plan).unwrap();
        let hits = maxima.iter().filter(|&&r| r > target).count();
        tails.push(bbm_core::TailEstimate::binomial(hits, maxima.len()));
        let cfg = bbm_core::sim::window_config(m, l, z, t, Some(rule), f64::INFINITY).unwrap();
        biases.push(
            prune_event_bias(&cfg, None, target, &McPlan::new(2000, 810 + i as u64)).unwrap(),
        );
    }
    let norm = right_tail_normalized(&m, l, &zs, y, &tails, ZVariant::RadialPower).unwrap();
    let (a, b) = (norm[0].point(), norm[1].point());
    let ratio = match (a, b) {
        (Some(a), Some(b)) => a / b,
        _ => f64::NAN,
    };
    outcome(
        (1.0 / 3.0..=3.0).contains(&ratio),
        format!(
            "L=9 t=20 z={:.3},{:.3}: P̂ = {:.4}, {:.4}; P̂/M = {:.4}, {:.4}; ratio {ratio:.3}; tail-event prune bias {}/{} and {}/{}",
            zs[0],
            zs[1],
            tails[0].value,
            tails[1].value,
            a.unwrap_or(f64::NAN),
            b.unwrap_or(f64::NAN),
            biases[0].changed,
            biases[0].n,
            biases[1].changed,
            biases[1].n
        ),
    )
}

fn coupling() -> Outcome {
    let m = model(2);
    let (x0, ell) = (200.0, 2.0);
    let (bessel, oned) =
        coupling_tail_compare(m, x0, ell, x0 + 2.0, &McPlan::new(100_000, 900)).unwrap();
    let z = (bessel.value - oned.value) / bessel.combined_stderr(&oned);
    let tol = 1e-3;
    let claims: Vec<_> =
        McPlan::new(1_000, 901).map(|_, s| coupled_discrepancy(m, 100.0, 1.0, 1e-3, s).unwrap());
    let on_event: Vec<_> = claims.iter().filter(|c| c.stayed_high).collect();
    let violations = on_event
        .iter()
        .filter(|c| c.max_discrepancy > c.bound + tol)
        .count();
    let worst = on_event
        .iter()
        .map(|c| c.max_discrepancy)
        .fold(0.0, f64::max);
    outcome(
        z.abs() <= K && violations == 0 && !on_event.is_empty(),
        format!(
            "tails {:.4} vs {:.4} (z={z:.2}); claim: {} of {} realizations on the event, max |R-W| = {worst:.5} vs bound {:.4}+{tol}, violations {violations}",
            bessel.value,
            oned.value,
            on_event.len(),
            claims.len(),
            claims[0].bound
        ),
    )
}

fn bramson_monotonicity() -> Outcome {
    // (x, y, T, lower line start/end, upper levels low/high)
    let configs = [
        (0.0, 0.0, 1.0, (-1.0, -1.0), (0.5, 1.5)),
        (0.0, 0.5, 2.0, (-1.0, -0.5), (1.0, 2.0)),
        (-0.5, 0.0, 4.0, (-2.0, -1.5), (0.5, 1.0)),
        (1.0, 1.0, 3.0, (-0.5, 0.0), (1.5, 3.0)),
        (0.0, -1.0, 2.0, (-1.0, -2.0), (0.3, 0.8)),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (i, (x, y, t, (l0, l1), (u_lo, u_hi))) in configs.into_iter().enumerate() {
        let lower = line(l0, l1, t);
        let plan = McPlan::new(200_000, 1000 + i as u64);
        let lo = mc_conditional_barrier(x, y, t, &lower, &constant(u_lo), 1e-2, &plan).unwrap();
        let hi =
            mc_conditional_barrier(x, y, t, &lower, &constant(u_hi), 1e-2, &plan.lane(1)).unwrap();
        let ok = hi.value >= lo.value - K * hi.combined_stderr(&lo);
        pass &= ok;
        parts.push(format!("{:.4}>={:.4}", hi.value, lo.value));
    }
    outcome(
        pass,
        format!(
            "P(above lower | below upper), higher vs lower upper barrier: {}",
            parts.join(", ")
        ),
    )
}

fn structural() -> Outcome {
    let mut trees = 0;
    let mut problems = Vec::new();
    // branching identity and continuity on full-storage trees
    for (i, t) in [0.0, 1.0, 3.0, 5.0].into_iter().enumerate() {
        for k in 0..50u64 {
            let cfg = SimConfig::new(model(2), t).with_grid_step(0.05);
            let tree = simulate_tree(&cfg, RngStream::new(1100 + i as u64, k)).unwrap();
            trees += 1;
            if let Err(e) = tree.check_invariants() {
                problems.push(e.to_string());
            }
            if t >= 1.0 && compute_z(&tree, t, ZVariant::RadialPower).unwrap() < 0.0 {
                problems.push("negative Z_L".into());
            }
        }
    }
    // good-particle counts on window trees
    let m = model(2);
    let (l, t, ell, z, y) = (64.0, 70.0, 2.0, 4.0, 0.0);
    let params = BarrierParams::new(m, t, l, ell, z, y).unwrap();
    let spec = GoodParticleSpec::from_params(&params);
    let mut lambda_le_gamma = true;
    for k in 0..50u64 {
        let cfg = bbm_core::sim::window_config(m, l, z, t, None, 0.1)
            .unwrap()
            .with_storage(Storage::Full)
            .with_query_times(vec![params.count_time()]);
        let tree = simulate_tree(&cfg, RngStream::new(1200, k)).unwrap();
        trees += 1;
        if let Err(e) = tree.check_invariants() {
            problems.push(e.to_string());
        }
        let c = count_good_particles(&tree, &spec).unwrap();
        lambda_le_gamma &= c.lambda_bar <= c.gamma;
    }
    if !lambda_le_gamma {
        problems.push("lambda_bar > gamma".into());
    }
    // determinism under worker count
    let plan = McPlan::new(64, 1300);
    let cfg = SimConfig::new(m, 3.0).with_grid_step(0.1);
    let run = |w: usize| {
        plan.with_workers(w)
            .map(|_, s| tree_to_json(&simulate_tree(&cfg, s).unwrap()).unwrap())
    };
    let a = run(1);
    let deterministic = a == run(2) && a == run(0);
    let rule = mallein_rule(&m);
    let maxima = |w: usize| {
        centered_max_samples(
            m,
            8.0,
            Some(rule),
            f64::INFINITY,
            &McPlan::new(200, 1301).with_workers(w),
        )
        .unwrap()
        .iter()
        .map(|v| v.to_bits())
        .collect::<Vec<_>>()
    };
    let deterministic = deterministic && maxima(1) == maxima(3);
    if !deterministic {
        problems.push("worker count changed output".into());
    }
    outcome(
        problems.is_empty(),
        format!(
            "{trees} trees: identity/continuity/Z>=0/lambda<=gamma {}; worker-count determinism {}",
            if problems.is_empty() { "ok" } else { "FAILED" },
            if deterministic {
                "bitwise equal"
            } else {
                "DIFFERS"
            }
        ) + &problems
            .first()
            .map(|p| format!(" ({p})"))
            .unwrap_or_default(),
    )
}

fn main() {
    let started = Instant::now();
    let mut failed = 0;
    let mut report = |n: usize, name: &str, o: Outcome, t: Instant| {
        failed += usize::from(!o.pass);
        println!(
            "criterion {n:>2} {:<4} {name}: {} [{:.1}s]",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            t.elapsed().as_secs_f64()
        );
    };
    let t = Instant::now();
    report(1, "ballot exactness", ballot(), t);
    let t = Instant::now();
    report(2, "many-to-one / many-to-two", many_to_few(), t);
    let t = Instant::now();
    report(3, "girsanov normalization", girsanov(), t);
    let t = Instant::now();
    report(4, "bessel marginal", bessel_marginal(), t);
    let t = Instant::now();
    report(5, "many-to-one functionals", many_to_one_functionals(), t);
    let t = Instant::now();
    let (band, rate) = mallein_and_rate();
    report(6, "mallein band", band, t);
    report(7, "tail rate", rate, t);
    let t = Instant::now();
    report(8, "right-tail collapse", right_tail_collapse(), t);
    let t = Instant::now();
    report(9, "coupling", coupling(), t);
    let t = Instant::now();
    report(10, "bramson monotonicity", bramson_monotonicity(), t);
    let t = Instant::now();
    report(11, "structural invariants", structural(), t);
    println!(
        "acceptance: {} of 11 criteria failed ({:.0}s)",
        failed,
        started.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
