use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rbsde_core::drivers::{generate, generate_report, DriverKind, DriverSpec, FbmGenerator};
use rbsde_core::pathcore::p_var_full;

#[test]
fn fbm_terminal_variance() {
    let (n, seeds) = (1024, 200u64);
    let gen = FbmGenerator::new(0.75, 1.0, n).unwrap();
    let spec = DriverSpec::new(DriverKind::Fbm { hurst: 0.75 }, 1.0, n, 0, 1.5);
    let direct = generate(&spec).unwrap();
    assert_eq!(direct, gen.sample(&mut ChaCha8Rng::seed_from_u64(0)).unwrap());
    let second_moment = (0..seeds)
        .map(|s| {
            let path = gen.sample(&mut ChaCha8Rng::seed_from_u64(s)).unwrap();
            path.value(n)[0].powi(2)
        })
        .sum::<f64>()
        / seeds as f64;
    let tol = 3.0 * (2.0 / seeds as f64).sqrt();
    assert!((second_moment - 1.0).abs() <= tol, "E[B_1^2] = {second_moment}");
}

fn declared_q_variations(kind: &DriverKind, n: usize, q: f64) -> Vec<f64> {
    (0..20).map(|seed| p_var_full(&generate(&DriverSpec::new(kind.clone(), 1.0, n, seed, q)).unwrap(), q).unwrap()).collect()
}

fn declared_q_is_stable(kind: DriverKind, n: usize, q: f64) {
    let values = declared_q_variations(&kind, n, q);
    let mut sorted = values.clone();
    sorted.sort_by(f64::total_cmp);
    let median = 0.5 * (sorted[9] + sorted[10]);
    assert!(values.iter().all(|v| v.is_finite() && *v < 2.0 * median), "{}: {values:?}", kind.name());
}

#[test]
fn declared_q_variation_is_stable_across_seeds() {
    declared_q_is_stable(DriverKind::Fbm { hurst: 0.75 }, 256, 1.5);
    declared_q_is_stable(DriverKind::CompoundPoisson { rate: 20.0, jump_mean: 0.0, jump_std: 1.0 }, 256, 1.2);
}

/// Stable jump sizes have a Pareto tail, so the largest jump dominates and
/// only finiteness is checked.
#[test]
fn declared_q_variation_of_stable_jumps_is_finite() {
    let kind = DriverKind::LevyTruncated { beta: 0.8, truncation: 0.05, scale: 1.0 };
    assert!(declared_q_variations(&kind, 256, 1.5).iter().all(|v| v.is_finite()));
}

#[test]
fn compound_poisson_counts() {
    let rate = 5.0;
    let seeds = 500u64;
    let kind = DriverKind::CompoundPoisson { rate, jump_mean: 0.0, jump_std: 1.0 };
    let mean = (0..seeds)
        .map(|s| generate_report(&DriverSpec::new(kind.clone(), 1.0, 64, s, 1.0)).unwrap().1.n_jumps as f64)
        .sum::<f64>()
        / seeds as f64;
    let sigma = (rate / seeds as f64).sqrt();
    assert!((mean - rate).abs() <= 3.0 * sigma, "mean count {mean}");
}

#[test]
fn identical_specs_give_identical_bytes() {
    let kinds = [
        DriverKind::Fbm { hurst: 0.6 },
        DriverKind::CompoundPoisson { rate: 3.0, jump_mean: 0.1, jump_std: 0.5 },
        DriverKind::LevyTruncated { beta: 1.2, truncation: 0.1, scale: 0.5 },
        DriverKind::Sum(vec![DriverKind::Fbm { hurst: 0.8 }, DriverKind::CompoundPoisson { rate: 2.0, jump_mean: 0.0, jump_std: 1.0 }]),
    ];
    for kind in kinds {
        for seed in [0, 7, 12345] {
            let spec = DriverSpec::new(kind.clone(), 2.0, 64, seed, 1.9);
            let (a, b) = (generate(&spec).unwrap(), generate(&spec).unwrap());
            let bytes = |p: &rbsde_core::pathcore::GridPath| {
                let mut out = Vec::new();
                p.write_csv(&mut out).unwrap();
                out
            };
            assert_eq!(bytes(&a), bytes(&b), "{} seed {seed}", kind.name());
        }
    }
}
