use bbm_core::barrier::ballot_probability;
use bbm_core::kernels::{chi_cdf, RngStream};
use bbm_core::model::{ModelParams, ZVariant};
use bbm_core::sim::{compute_z, simulate_tree, SimConfig};
use bbm_core::stats::{estimate_centered_max_cdf, tail_estimates};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(256) })]

    #[test]
    fn ballot_is_a_probability_increasing_in_the_gap(
        x in -3.0..3.0f64, y in -3.0..3.0f64,
        ga in 0.0..4.0f64, gb in 0.0..4.0f64, extra in 0.0..2.0f64,
        t in 0.05..20.0f64,
    ) {
        let p = ballot_probability(x, y, x + ga, y + gb, t).unwrap();
        prop_assert!((0.0..=1.0).contains(&p));
        let wider = ballot_probability(x, y, x + ga + extra, y + gb, t).unwrap();
        prop_assert!(wider >= p);
        let longer = ballot_probability(x, y, x + ga, y + gb, t + extra).unwrap();
        prop_assert!(longer <= p);
    }

    #[test]
    fn ballot_rejects_endpoints_above_the_line(x in -3.0..3.0f64, gap in 1e-6..2.0f64) {
        prop_assert!(ballot_probability(x, 0.0, x - gap, 1.0, 1.0).is_err());
    }

    #[test]
    fn chi_cdf_is_monotone(d in 1u32..8, l in 0.1..30.0f64, r in 0.0..40.0f64, dr in 0.0..5.0f64) {
        let a = chi_cdf(d, l, r);
        let b = chi_cdf(d, l, r + dr);
        prop_assert!((0.0..=1.0).contains(&a));
        prop_assert!(b >= a);
    }

    #[test]
    fn empirical_cdf_and_tail_are_monotone(
        samples in prop::collection::vec(-5.0..5.0f64, 1..200),
        mut grid in prop::collection::vec(-6.0..6.0f64, 1..20),
    ) {
        grid.sort_by(f64::total_cmp);
        let cdf = estimate_centered_max_cdf(&samples, &grid).unwrap();
        let tail = tail_estimates(&samples, &grid).unwrap();
        for w in cdf.windows(2) {
            prop_assert!(w[1].value >= w[0].value);
        }
        for w in tail.windows(2) {
            prop_assert!(w[1].value <= w[0].value);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(24) })]

    #[test]
    fn trees_are_consistent_and_reproducible(
        d in 1u32..5, seed in any::<u64>(), horizon in 1.0..3.5f64,
    ) {
        let cfg = SimConfig::new(ModelParams::new(d).unwrap(), horizon).with_grid_step(0.1);
        let a = simulate_tree(&cfg, RngStream::new(seed, 0)).unwrap();
        a.check_invariants().unwrap();
        let b = simulate_tree(&cfg, RngStream::new(seed, 0)).unwrap();
        prop_assert_eq!(a.len(), b.len());
        for (p, q) in a.particles.iter().zip(&b.particles) {
            prop_assert_eq!(p.trajectory.values(), q.trajectory.values());
        }
        for variant in [ZVariant::RadialPower, ZVariant::Sqrt2LPower] {
            let z = compute_z(&a, horizon, variant).unwrap();
            prop_assert!(z >= 0.0 && z.is_finite());
        }
    }
}
