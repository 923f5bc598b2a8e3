//! Analytic-versus-Monte-Carlo oracle suite behind `bbm verify`.

use rand::Rng;

use bbm_core::barrier::{ballot_probability, ballot_refinement_mc};
use bbm_core::girsanov::{girsanov_log_weight, is_bessel_expectation};
use bbm_core::kernels::{chi_cdf, sample_bm_path, uniform_grid, PathGrid, RngStream};
use bbm_core::mc::McPlan;
use bbm_core::model::ModelParams;
use bbm_core::sim::{many_to_two_moment_check, second_moment, simulate_tree, SimConfig, Storage};
use bbm_core::stats::ks_test;
use bbm_core::{Result, TailEstimate};

pub const Z_GATE: f64 = 3.0;
pub const KS_LEVEL: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    /// `z` score, or the p-value for distribution tests.
    pub statistic: f64,
    pub gate: &'static str,
    pub detail: String,
}

fn z_check(name: String, est: &TailEstimate, exact: f64, extra_ok: bool) -> Check {
    let z = est.z_score(exact);
    Check {
        name,
        pass: z.abs() <= Z_GATE && extra_ok,
        statistic: z,
        gate: "|z| <= 3",
        detail: format!(
            "estimate {:.6} ± {:.6}, exact {exact:.6}",
            est.value, est.stderr
        ),
    }
}

fn model(d: u32) -> Result<ModelParams> {
    ModelParams::new(d)
}

/// Runs every check with `n` replicates each. Each check draws from its
/// own lane of `plan`.
pub fn run_suite(plan: &McPlan) -> Result<Vec<Check>> {
    let n = plan.n;
    let mut lane = 0u64;
    let mut next = || {
        lane += 1;
        plan.lane(lane)
    };
    let mut out = Vec::new();

    let mut rng = plan.stream.child(u64::MAX).rng();
    for i in 0..5 {
        let x = rng.random_range(-1.0..1.0);
        let y = rng.random_range(-1.0..1.0);
        let t: f64 = rng.random_range(0.5..4.0);
        let a = x + rng.random_range(0.3..1.5) * t.sqrt();
        let b = y + rng.random_range(0.3..1.5) * t.sqrt();
        let exact = ballot_probability(x, y, a, b, t)?;
        let r = ballot_refinement_mc(x, y, a, b, t, 64, &next())?;
        out.push(z_check(
            format!("ballot[{i}]"),
            &r.extrapolated,
            exact,
            true,
        ));
    }

    let one = |_: &PathGrid| 1.0;
    for d in [2, 3, 5] {
        let e = is_bessel_expectation(&one, 5.0, 1.0, &model(d)?, 1e-2, &next())?;
        let mut c = z_check(
            format!("girsanov_mean[d={d}]"),
            &e.estimate,
            1.0,
            !e.degenerate,
        );
        c.detail = format!("{}; ESS {:.0}", c.detail, e.effective_sample_size);
        out.push(c);
    }
    let grid = uniform_grid(1.0, 1e-2)?;
    let mut rng = next().stream.rng();
    let mut violations = 0;
    let paths = n.min(2_000);
    for _ in 0..paths {
        let p = sample_bm_path(&[1.0], &grid, &mut rng)?;
        violations += usize::from(girsanov_log_weight(&p, &model(2)?)?.drift_term < 0.0);
        for d in [3, 5] {
            violations += usize::from(girsanov_log_weight(&p, &model(d)?)?.drift_term > 0.0);
        }
    }
    out.push(Check {
        name: "girsanov_sign".into(),
        pass: violations == 0,
        statistic: violations as f64,
        gate: "no violations",
        detail: format!("{paths} paths from x0 = 1, d in {{2, 3, 5}}"),
    });

    for t in [1.0f64, 3.0] {
        let cfg = SimConfig::new(model(2)?, t)
            .with_grid_step(f64::INFINITY)
            .with_storage(Storage::Endpoints);
        let counts = next()
            .map(|_, s| simulate_tree(&cfg, s).map(|tree| tree.population(t) as f64))
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        out.push(z_check(
            format!("many_to_one[T={t}]"),
            &TailEstimate::from_samples(&counts),
            t.exp(),
            true,
        ));
    }
    let est = many_to_two_moment_check(1.0, &next())?;
    out.push(z_check(
        "many_to_two[T=1]".into(),
        &est,
        second_moment(1.0),
        true,
    ));

    let l = 2.0;
    for d in [1, 2, 3, 5] {
        let cfg = SimConfig::new(model(d)?, l)
            .with_grid_step(f64::INFINITY)
            .with_storage(Storage::Endpoints);
        let r = next()
            .map(|_, s| first_child_modulus(&cfg, s, l))
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        let ks = ks_test(&r, |x| chi_cdf(d, l, x))?;
        out.push(Check {
            name: format!("chi_marginal[d={d}]"),
            pass: ks.passes(KS_LEVEL),
            statistic: ks.p_value,
            gate: "p >= 0.01",
            detail: format!("KS D = {:.5}, n = {}", ks.statistic, ks.n),
        });
    }
    Ok(out)
}

/// Modulus at `t` of the particle reached by always following the first
/// child: one Brownian path through the tree.
fn first_child_modulus(cfg: &SimConfig, s: RngStream, t: f64) -> Result<f64> {
    let tree = simulate_tree(cfg, s)?;
    let mut id = 0;
    while let Some([a, _]) = tree.particle(id).children {
        id = a;
    }
    let x = tree.particle(id).position_at(t)?;
    Ok(x.iter().map(|v| v * v).sum::<f64>().sqrt())
}
