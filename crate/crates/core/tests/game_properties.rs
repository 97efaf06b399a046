use noisy_minmax::cdf::BoundarySpec;
use noisy_minmax::game::{
    full_evaluation, monte_carlo, solve_sample, BoundaryLevel, GameConfig, HashedCookies,
};

#[test]
fn positive_defects_have_the_local_structure() {
    for (d, n) in [(2, 3), (3, 2), (4, 2)] {
        let cfg = GameConfig::new(d, n).with_seed(21);
        for i in 0..300 {
            let full = full_evaluation(&cfg, &HashedCookies::new(cfg.seed, i)).unwrap();
            assert!(full.structure_checked);
            assert_eq!(full.structure_violations, 0, "d={d} n={n} sample {i}");
            assert_eq!(full.root_value, solve_sample(&cfg, i).unwrap().root_value);
        }
    }
}

#[test]
fn structure_check_is_skipped_for_other_boundaries() {
    let cfg = GameConfig::new(2, 2).with_boundary(BoundarySpec::Bernoulli { p: 0.5 });
    assert!(!full_evaluation(&cfg, &HashedCookies::new(0, 0)).unwrap().structure_checked);
}

#[test]
fn values_have_the_parity_of_the_boundary_level() {
    for level in [BoundaryLevel::Even, BoundaryLevel::Odd] {
        let cfg = GameConfig::new(3, 2).with_seed(4).with_boundary_level(level);
        let want = if level == BoundaryLevel::Even { 0 } else { 1 };
        for i in 0..200 {
            assert_eq!(solve_sample(&cfg, i).unwrap().root_value.rem_euclid(2), want);
        }
    }
}

#[test]
fn empirical_dominance_over_reflection() {
    let samples = 100_000u64;
    let r = monte_carlo(&GameConfig::new(2, 3).with_seed(9), samples, 4).unwrap();
    for k in (-12..=12).step_by(2) {
        let f = r.cdf_at(k);
        let g = 1.0 - r.cdf_at(-k - 4);
        let sigma = (f * (1.0 - f) / samples as f64).sqrt() + (g * (1.0 - g) / samples as f64).sqrt();
        assert!(f <= g + 3.0 * sigma, "k={k}: {f} > {g}");
    }
}

#[test]
fn budget_errors_instead_of_hanging() {
    let cfg = GameConfig::new(10, 5);
    assert!(solve_sample(&cfg, 0).is_err());
}
