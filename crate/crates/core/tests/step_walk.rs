use walktail_core::rng::{run_batches, stream, DEFAULT_BATCHES};
use walktail_core::stats::batch_means;
use walktail_core::step::{sample_path, Step, StepDistribution, StepSpec};

#[test]
fn pareto_shift_sample_mean() {
    let ps = StepDistribution::pareto_shift(3.0, 1.0, 3.0).unwrap();
    assert!((ps.mean() + 1.5).abs() < 1e-15);
    let batches = run_batches(11, 0, 1_000_000, DEFAULT_BATCHES, |rng, n| {
        ((0..n).map(|_| ps.sample(rng)).sum::<f64>(), n)
    });
    let est = batch_means(&batches);
    assert!(est.within(-1.5, 5.0), "{est:?}");
}

#[test]
fn sampler_tail_matches_model() {
    let ps = StepDistribution::pareto_shift(3.0, 1.0, 3.0).unwrap();
    // F̄(x) = (x + 3)^{-3} = 1e-3 at x = 7
    let x = 7.0;
    assert!((ps.upper_tail().unwrap().tail(x).unwrap() - 1e-3).abs() < 1e-15);
    let reps = 10_000_000;
    let batches = run_batches(12, 0, reps, DEFAULT_BATCHES, |rng, n| {
        ((0..n).filter(|_| ps.sample(rng) > x).count() as f64, n)
    });
    let ratio = batch_means(&batches).value / 1e-3;
    assert!((0.9..=1.1).contains(&ratio), "{ratio}");
}

#[test]
fn two_point_law_of_large_numbers() {
    let tp = StepDistribution::two_point(0.25, 1.0, 1.0).unwrap();
    assert_eq!(tp.mean(), -0.5);
    assert_eq!(tp.kappa(), f64::INFINITY);
    assert_eq!(tp.atoms().unwrap(), vec![(-1.0, 0.75), (1.0, 0.25)]);
    let n = 100_000;
    let mut rng = stream(5, 0, 0);
    let s = sample_path(&tp, n, &mut rng);
    // var X = 1 - 0.25 = 0.75
    let se = (0.75f64 / n as f64).sqrt();
    assert!((s[n - 1] / n as f64 + 0.5).abs() < 5.0 * se);
}

#[test]
fn paths_are_deterministic_per_seed() {
    let ps: StepSpec = "paretoshift:alpha=3,scale=1,shift=3".parse().unwrap();
    let ps = ps.build().unwrap();
    let a = sample_path(&ps, 1000, &mut stream(9, 1, 2));
    let b = sample_path(&ps, 1000, &mut stream(9, 1, 2));
    let c = sample_path(&ps, 1000, &mut stream(9, 1, 3));
    assert_eq!(a, b);
    assert_ne!(a, c);
    let one = sample_path(&ps, 1, &mut stream(9, 1, 2));
    assert_eq!(one[0], a[0]);
}

#[test]
fn batch_results_ignore_pool_size() {
    let ps = StepDistribution::pareto_shift(2.5, 1.0, 3.0).unwrap();
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| {
                run_batches(3, 7, 10_000, DEFAULT_BATCHES, |rng, n| {
                    (0..n).map(|_| ps.sample(rng)).sum::<f64>()
                })
            })
    };
    let a = run(1);
    let b = run(4);
    assert_eq!(a.len(), DEFAULT_BATCHES);
    assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
}
